/** Thin fetch client for the mall API. The session token travels in the
 * X-Mall-Token header; card fields pass straight through and are never kept. */

import type {
  AvailabilityEntry,
  BasketView,
  Buyer,
  CameraPath,
  CardForm,
  Category,
  Order,
  SceneDoc,
  Session,
  Shop,
  ShopPage,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    detail: string,
  ) {
    super(detail || code);
  }
}

export class ApiClient {
  token: string | null = null;

  constructor(readonly baseUrl: string) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "Content-Type": "application/json" };
    if (this.token) headers["X-Mall-Token"] = this.token;
    const response = await fetch(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await response.text();
    const payload = text ? JSON.parse(text) : null;
    if (!response.ok) {
      throw new ApiError(response.status, payload?.error ?? "HttpError",
        payload?.detail ?? response.statusText);
    }
    return payload as T;
  }

  getScene(): Promise<SceneDoc> {
    return this.request("GET", "/scene");
  }

  getWalkthrough(): Promise<CameraPath> {
    return this.request("GET", "/scene/walkthrough");
  }

  getCameraToShop(shopId: string): Promise<CameraPath> {
    return this.request("GET", `/scene/camera-to-shop/${shopId}`);
  }

  listCategories(): Promise<Category[]> {
    return this.request("GET", "/categories");
  }

  listShops(categoryId: string): Promise<Shop[]> {
    return this.request("GET", `/categories/${categoryId}/shops`);
  }

  getShopPage(shopId: string): Promise<ShopPage> {
    return this.request("GET", `/shops/${shopId}`);
  }

  getAvailability(product: string): Promise<{ entries: AvailabilityEntry[] }> {
    return this.request("GET", `/availability?product=${encodeURIComponent(product)}`);
  }

  async register(username: string, password: string, email: string, postal: string) {
    await this.request("POST", "/customers", {
      username, password, email, postal_address: postal,
    });
  }

  async login(username: string, password: string): Promise<Session> {
    const session = await this.request<Session>("POST", "/login", { username, password });
    this.token = session.token;
    return session;
  }

  addToBasket(productId: string, quantity: number): Promise<unknown> {
    return this.request("POST", "/basket/lines", { product_id: productId, quantity });
  }

  getBasket(): Promise<BasketView> {
    return this.request("GET", "/basket");
  }

  beginCheckout(): Promise<Order> {
    return this.request("POST", "/checkout");
  }

  confirmOrder(orderId: string, buyer: Buyer): Promise<Order> {
    return this.request("POST", `/orders/${orderId}/confirm`, buyer);
  }

  payOrder(orderId: string, card: CardForm): Promise<Order> {
    return this.request("POST", `/orders/${orderId}/pay`, card);
  }

  getOrder(orderId: string): Promise<Order> {
    return this.request("GET", `/orders/${orderId}`);
  }

  postRecommendation(productId: string, text: string): Promise<unknown> {
    return this.request("POST", `/products/${productId}/recommendations`, { text });
  }
}
