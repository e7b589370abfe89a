import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { AppCore, formatMinor } from "../src/store.js";
import type { Order, SceneDoc } from "../src/types.js";

const scene: SceneDoc = {
  layout: {
    floors: 1, slots_per_floor: 1, corridor_width_m: 3,
    shop_width_m: 6, shop_depth_m: 5, floor_height_m: 3,
  },
  entrance: "entrance",
  nodes: [
    { id: "entrance", kind: "viewpoint", position: [0, 1.6, 0], yaw: 0 },
    { id: "door-shop-a", kind: "door", position: [3, 1, 1.5], yaw: -1.57, shop_id: "shop-a" },
  ],
};

function order(overrides: Partial<Order> = {}): Order {
  return {
    id: "ord-1",
    customer_id: "cust-1",
    state: "draft",
    // Deliberately inconsistent line arithmetic: the UI must echo the
    // server's grand_total_minor, never recompute it from lines.
    lines: [{
      product_id: "prod-1", shop_id: "shop-a", kind: "physical", quantity: 3,
      unit_price_minor: 1, discount_minor: 0, line_total_minor: 1,
    }],
    goods_total_minor: 77777,
    shipping_fee_minor: 0,
    other_fees_minor: 0,
    grand_total_minor: 99999,
    decline_reason: null,
    txn_id: null,
    ...overrides,
  };
}

interface FakeCalls {
  pays: unknown[];
}

function fakeApi(behavior: { declineFirst?: boolean; expireOnPay?: boolean } = {}) {
  const calls: FakeCalls = { pays: [] };
  let payCount = 0;
  const api = {
    token: null as string | null,
    getScene: async () => scene,
    getWalkthrough: async () => ({
      keyframes: [
        { position: [0, 1.6, 0] as [number, number, number], yaw: 0, dwell_s: 0 },
        { position: [3, 1.6, 0] as [number, number, number], yaw: 1.57, dwell_s: 2 },
      ],
    }),
    getCameraToShop: async (_: string) => ({
      keyframes: [
        { position: [0, 1.6, 0] as [number, number, number], yaw: 0, dwell_s: 0 },
        { position: [3, 1.6, 0] as [number, number, number], yaw: 1.57, dwell_s: 2 },
      ],
    }),
    getShopPage: async (shopId: string) => {
      if (shopId !== "shop-a") throw new ApiError(404, "UnknownShop", shopId);
      return {
        shop: { id: "shop-a", name: "A", category_id: "c", floor: 0, slot: 0 },
        items: [], products: [], offers: [], recommendations: [],
      };
    },
    login: async () => {
      api.token = "t";
      return { token: "t", customer_id: "cust-1", issued_at: 0, ttl_seconds: 3600 };
    },
    addToBasket: async () => ({}),
    getBasket: async () => ({
      basket: { customer_id: "cust-1", lines: [] },
      priced: { lines: [], goods_total_minor: 123456 },
    }),
    beginCheckout: async () => order(),
    confirmOrder: async () => order({ state: "confirmed" }),
    payOrder: async (_: string, card: unknown) => {
      calls.pays.push(card);
      payCount += 1;
      if (behavior.expireOnPay) throw new ApiError(401, "ExpiredToken", "expired");
      if (behavior.declineFirst && payCount === 1) {
        return order({ state: "declined", decline_reason: "InsufficientFunds" });
      }
      return order({ state: "paid", txn_id: "txn-1" });
    },
    getOrder: async () => order({ state: "paid" }),
  };
  return { api: api as unknown as ApiClient, calls };
}

describe("AppCore", () => {
  it("loads the scene and starts in walkthrough mode", async () => {
    const app = new AppCore(fakeApi().api);
    await app.loadScene();
    expect(app.state.mode.kind).toBe("walkthrough");
    expect(app.state.camera.position).toEqual([0, 1.6, 0]);
  });

  it("user input pauses the walkthrough", async () => {
    const app = new AppCore(fakeApi().api);
    await app.loadScene();
    app.tick(0.5);
    const before = app.state.camera.position;
    app.userInput();
    app.tick(5);
    expect(app.state.camera.position).toEqual(before);
  });

  it("selectShop animates toward the door; unknown shop only toasts", async () => {
    const app = new AppCore(fakeApi().api);
    await app.loadScene();
    await app.selectShop("shop-a");
    expect(app.state.mode.kind).toBe("focus_shop");
    app.tick(100);
    expect(app.state.camera.position).toEqual([3, 1.6, 0]);
    await app.selectShop("shop-ghost");
    expect(app.state.mode.kind).toBe("focus_shop"); // unchanged
    expect(app.state.toast).toContain("Unknown shop");
  });

  it("door click opens the shop page", async () => {
    const app = new AppCore(fakeApi().api);
    await app.loadScene();
    await app.openShopDoor("shop-a");
    expect(app.state.mode.kind).toBe("shop_page");
  });

  it("checkout happy path walks confirm -> card -> receipt", async () => {
    const { api } = fakeApi();
    const app = new AppCore(api);
    await app.login("amal", "pw1");
    await app.startCheckout();
    expect(app.state.mode).toMatchObject({ kind: "checkout", stage: "confirm" });
    await app.confirmBuyer({ name: "A", email: "a@x.com", postal_address: "1 St" });
    expect(app.state.mode).toMatchObject({ kind: "checkout", stage: "card" });
    await app.submitCard({ name: "A", pan: "4111111111111111", expiry_month: 12, expiry_year: 2030 });
    expect(app.state.mode.kind).toBe("receipt");
  });

  it("displays only the server's totals, never recomputed ones", async () => {
    const app = new AppCore(fakeApi().api);
    await app.login("amal", "pw1");
    await app.openBasket();
    expect(app.displayedTotalMinor()).toBe(123456);
    await app.startCheckout();
    // lines sum to 3 minor units; the server's figure is 99999 and wins
    expect(app.displayedTotalMinor()).toBe(99999);
  });

  it("decline returns to confirmation with the reason and allows retry", async () => {
    const { api } = fakeApi({ declineFirst: true });
    const app = new AppCore(api);
    await app.login("amal", "pw1");
    await app.startCheckout();
    await app.confirmBuyer({ name: "A", email: "a@x.com", postal_address: "1 St" });
    await app.submitCard({ name: "A", pan: "x", expiry_month: 1, expiry_year: 2030 });
    expect(app.state.mode).toMatchObject({ kind: "checkout", stage: "confirm" });
    expect(app.state.toast).toContain("InsufficientFunds");
    await app.confirmBuyer({ name: "A", email: "a@x.com", postal_address: "1 St" });
    await app.submitCard({ name: "A", pan: "y", expiry_month: 1, expiry_year: 2030 });
    expect(app.state.mode.kind).toBe("receipt");
  });

  it("never retries payment on its own", async () => {
    const { api, calls } = fakeApi({ declineFirst: true });
    const app = new AppCore(api);
    await app.login("amal", "pw1");
    await app.startCheckout();
    await app.confirmBuyer({ name: "A", email: "a@x.com", postal_address: "1 St" });
    await app.submitCard({ name: "A", pan: "x", expiry_month: 1, expiry_year: 2030 });
    expect(calls.pays).toHaveLength(1);
  });

  it("expired session mid-flow flags login and keeps state", async () => {
    const { api } = fakeApi({ expireOnPay: true });
    const app = new AppCore(api);
    await app.login("amal", "pw1");
    await app.startCheckout();
    await app.confirmBuyer({ name: "A", email: "a@x.com", postal_address: "1 St" });
    await app.submitCard({ name: "A", pan: "x", expiry_month: 1, expiry_year: 2030 });
    expect(app.state.needsLogin).toBe(true);
    expect(app.state.mode.kind).toBe("checkout"); // flow position preserved
  });
});

describe("formatMinor", () => {
  it("renders minor units for display only", () => {
    expect(formatMinor(2500)).toBe("25.00");
    expect(formatMinor(7)).toBe("0.07");
    expect(formatMinor(-103)).toBe("-1.03");
  });
});
