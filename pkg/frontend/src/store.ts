/** Headless application core: view-state machine, camera playback, and the
 * checkout flow. The DOM/3D layers render whatever lives here, and the
 * end-to-end tests drive it directly.
 *
 * Totals shown anywhere come verbatim from the server; this module performs
 * no price arithmetic. Card fields pass through one call and are never
 * stored. */

import { ApiClient, ApiError } from "./api.js";
import { CameraPlayer, type CameraPose } from "./camera.js";
import type {
  BasketView,
  Buyer,
  CardForm,
  Order,
  SceneDoc,
  ShopPage,
} from "./types.js";

export type ViewMode =
  | { kind: "walkthrough" }
  | { kind: "focus_shop"; shopId: string }
  | { kind: "shop_page"; shopId: string; page: ShopPage }
  | { kind: "basket"; view: BasketView }
  | { kind: "checkout"; orderId: string; stage: "confirm" | "card"; order: Order }
  | { kind: "receipt"; orderId: string; order: Order };

export interface AppState {
  mode: ViewMode;
  camera: CameraPose;
  loggedIn: boolean;
  needsLogin: boolean;
  toast: string | null;
}

export class AppCore {
  scene: SceneDoc | null = null;
  walkthrough: CameraPlayer | null = null;
  focusPlayer: CameraPlayer | null = null;
  state: AppState = {
    mode: { kind: "walkthrough" },
    camera: { position: [0, 1.6, 0], yaw: 0 },
    loggedIn: false,
    needsLogin: false,
    toast: null,
  };
  private listeners: (() => void)[] = [];

  constructor(readonly api: ApiClient) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  private setMode(mode: ViewMode): void {
    this.state.mode = mode;
    this.emit();
  }

  private toast(message: string): void {
    this.state.toast = message;
    this.emit();
  }

  // -- scene & camera ------------------------------------------------------

  async loadScene(): Promise<void> {
    this.scene = await this.api.getScene();
    const path = await this.api.getWalkthrough();
    this.walkthrough = new CameraPlayer(path);
    this.walkthrough.looping = true;
    const first = path.keyframes[0];
    if (first) this.state.camera = { position: first.position, yaw: first.yaw };
    this.setMode({ kind: "walkthrough" });
  }

  /** Advance whichever camera animation is active. */
  tick(dt: number): CameraPose {
    if (this.state.mode.kind === "walkthrough" && this.walkthrough) {
      this.state.camera = this.walkthrough.advance(dt);
    } else if (this.state.mode.kind === "focus_shop" && this.focusPlayer) {
      this.state.camera = this.focusPlayer.advance(dt);
    }
    return this.state.camera;
  }

  /** Any user interaction pauses the automatic stroll. */
  userInput(): void {
    this.walkthrough?.pause();
  }

  shopInScene(shopId: string): boolean {
    return !!this.scene?.nodes.some((n) => n.kind === "door" && n.shop_id === shopId);
  }

  /** Menu click: fly the camera to the shop's door. */
  async selectShop(shopId: string): Promise<void> {
    this.userInput();
    if (!this.shopInScene(shopId)) {
      this.toast(`Unknown shop ${shopId}`);
      return;
    }
    try {
      const path = await this.api.getCameraToShop(shopId);
      this.focusPlayer = new CameraPlayer(path);
      this.setMode({ kind: "focus_shop", shopId });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Door click: open the shop page. */
  async openShopDoor(shopId: string): Promise<void> {
    this.userInput();
    try {
      const page = await this.api.getShopPage(shopId);
      this.setMode({ kind: "shop_page", shopId, page });
    } catch (err) {
      this.fail(err);
    }
  }

  backToWalkthrough(): void {
    this.walkthrough?.resume();
    this.setMode({ kind: "walkthrough" });
  }

  // -- session ----------------------------------------------------------------

  async login(username: string, password: string): Promise<void> {
    await this.api.login(username, password);
    this.state.loggedIn = true;
    this.state.needsLogin = false;
    this.emit();
  }

  // -- basket & checkout ---------------------------------------------------------

  async addToBasket(productId: string, quantity: number): Promise<void> {
    try {
      await this.api.addToBasket(productId, quantity);
      this.toast("Added to basket");
    } catch (err) {
      this.fail(err);
    }
  }

  async openBasket(): Promise<void> {
    try {
      const view = await this.api.getBasket();
      this.setMode({ kind: "basket", view });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Step 1: freeze the basket into a draft order; shows the server's totals. */
  async startCheckout(): Promise<void> {
    try {
      const order = await this.api.beginCheckout();
      this.setMode({ kind: "checkout", orderId: order.id, stage: "confirm", order });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Step 2: buyer details; moves to the card screen. */
  async confirmBuyer(buyer: Buyer): Promise<void> {
    const mode = this.state.mode;
    if (mode.kind !== "checkout") return;
    try {
      const order = await this.api.confirmOrder(mode.orderId, buyer);
      this.setMode({ kind: "checkout", orderId: order.id, stage: "card", order });
    } catch (err) {
      this.fail(err);
    }
  }

  /** Step 3: card details go straight to the API and are not retained.
   * A decline returns to the confirmation screen with the reason shown;
   * success lands on the receipt view (steps 4 and 5). */
  async submitCard(card: CardForm): Promise<void> {
    const mode = this.state.mode;
    if (mode.kind !== "checkout") return;
    try {
      const order = await this.api.payOrder(mode.orderId, card);
      if (order.state === "declined") {
        this.state.toast = `Payment declined: ${order.decline_reason}`;
        this.setMode({ kind: "checkout", orderId: order.id, stage: "confirm", order });
        return;
      }
      this.setMode({ kind: "receipt", orderId: order.id, order });
    } catch (err) {
      this.fail(err);
    }
  }

  /** The total a screen may display: always the server's figure. */
  displayedTotalMinor(): number | null {
    const mode = this.state.mode;
    if (mode.kind === "checkout" || mode.kind === "receipt") {
      return mode.order.grand_total_minor;
    }
    if (mode.kind === "basket") return mode.view.priced.goods_total_minor;
    return null;
  }

  private fail(err: unknown): void {
    if (err instanceof ApiError) {
      if (err.code === "ExpiredToken" || err.code === "UnknownToken") {
        // Session gone mid-flow: ask for login again; the basket lives
        // server-side and survives.
        this.state.loggedIn = false;
        this.state.needsLogin = true;
        this.toast("Session expired, please log in again");
        return;
      }
      this.toast(`${err.code}: ${err.message}`);
      return;
    }
    throw err;
  }
}

export function formatMinor(minor: number): string {
  const sign = minor < 0 ? "-" : "";
  const abs = Math.abs(minor);
  return `${sign}${Math.floor(abs / 100)}.${String(abs % 100).padStart(2, "0")}`;
}
