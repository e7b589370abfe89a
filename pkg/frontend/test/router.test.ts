import { describe, expect, it } from "vitest";

import { brokenAnchors, extractWrlAnchorUrls, resolveRoute, routeToPath, sceneAnchorUrls } from "../src/router.js";
import type { SceneDoc } from "../src/types.js";

const scene: SceneDoc = {
  layout: {
    floors: 1, slots_per_floor: 2, corridor_width_m: 3,
    shop_width_m: 6, shop_depth_m: 5, floor_height_m: 3,
  },
  entrance: "entrance",
  nodes: [
    { id: "entrance", kind: "viewpoint", position: [0, 1.6, 0], yaw: 0 },
    { id: "floor-0", kind: "floor_slab", position: [6, 0, 2.5], yaw: 0 },
    { id: "door-shop-a", kind: "door", position: [3, 1, 1.5], yaw: -1.57, shop_id: "shop-a" },
    { id: "door-shop-b", kind: "door", position: [9, 1, 1.5], yaw: -1.57, shop_id: "shop-b" },
  ],
};

describe("routes", () => {
  it("resolves shop pages, basket, checkout, receipt", () => {
    expect(resolveRoute("/")).toEqual({ kind: "walkthrough" });
    expect(resolveRoute("/shops/shop-a")).toEqual({ kind: "shop_page", shopId: "shop-a" });
    expect(resolveRoute("/basket")).toEqual({ kind: "basket" });
    expect(resolveRoute("/checkout/ord-1")).toEqual({ kind: "checkout", orderId: "ord-1" });
    expect(resolveRoute("/receipt/ord-1")).toEqual({ kind: "receipt", orderId: "ord-1" });
    expect(resolveRoute("/nope/x")).toBeNull();
  });

  it("round-trips route -> path -> route", () => {
    for (const path of ["/", "/shops/shop-a", "/basket", "/checkout/o1", "/receipt/o1"]) {
      const route = resolveRoute(path);
      expect(route).not.toBeNull();
      expect(resolveRoute(routeToPath(route!))).toEqual(route);
    }
  });

  it("every door anchor in a scene resolves to a shop page", () => {
    expect(sceneAnchorUrls(scene)).toEqual(["/shops/shop-a", "/shops/shop-b"]);
    expect(brokenAnchors(scene)).toEqual([]);
  });

  it("extracts anchor urls from a VRML export", () => {
    const wrl = [
      "#VRML V2.0 utf8",
      'Transform { translation 3.0 1.0 1.5 rotation 0 1 0 -1.5 children [ ' +
        'Anchor { url "/shops/shop-a" children [ Shape { geometry Box { size 1.0 2.0 0.1 } } ] } ] }',
    ].join("\n");
    expect(extractWrlAnchorUrls(wrl)).toEqual(["/shops/shop-a"]);
  });
});
