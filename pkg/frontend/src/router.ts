/** Browser route map. Door anchors in the exported scene use shop-page
 * paths, so every anchor must resolve here (route/anchor closure). */

import type { SceneDoc } from "./types.js";

export type Route =
  | { kind: "walkthrough" }
  | { kind: "shop_page"; shopId: string }
  | { kind: "basket" }
  | { kind: "checkout"; orderId: string }
  | { kind: "receipt"; orderId: string };

const SHOP_PATH = /^\/shops\/([^/]+)$/;
const CHECKOUT_PATH = /^\/checkout\/([^/]+)$/;
const RECEIPT_PATH = /^\/receipt\/([^/]+)$/;

export function resolveRoute(path: string): Route | null {
  if (path === "/" || path === "") return { kind: "walkthrough" };
  if (path === "/basket") return { kind: "basket" };
  const shop = SHOP_PATH.exec(path);
  if (shop) return { kind: "shop_page", shopId: shop[1]! };
  const checkout = CHECKOUT_PATH.exec(path);
  if (checkout) return { kind: "checkout", orderId: checkout[1]! };
  const receipt = RECEIPT_PATH.exec(path);
  if (receipt) return { kind: "receipt", orderId: receipt[1]! };
  return null;
}

export function routeToPath(route: Route): string {
  switch (route.kind) {
    case "walkthrough":
      return "/";
    case "shop_page":
      return `/shops/${route.shopId}`;
    case "basket":
      return "/basket";
    case "checkout":
      return `/checkout/${route.orderId}`;
    case "receipt":
      return `/receipt/${route.orderId}`;
  }
}

/** Anchor URLs the scene's doors carry (same paths the VRML export uses). */
export function sceneAnchorUrls(scene: SceneDoc): string[] {
  return scene.nodes
    .filter((n) => n.kind === "door" && n.shop_id)
    .map((n) => `/shops/${n.shop_id}`);
}

/** Anchor URLs that do NOT resolve to a shop page route (expected: none). */
export function brokenAnchors(scene: SceneDoc): string[] {
  return sceneAnchorUrls(scene).filter((url) => {
    const route = resolveRoute(url);
    return route === null || route.kind !== "shop_page";
  });
}

export function extractWrlAnchorUrls(wrl: string): string[] {
  const urls: string[] = [];
  const pattern = /Anchor \{ url "([^"]+)"/g;
  let match;
  while ((match = pattern.exec(wrl)) !== null) urls.push(match[1]!);
  return urls;
}
