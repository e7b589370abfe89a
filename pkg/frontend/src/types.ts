/** Wire types mirrored from the mall API. All money is integer minor units. */

export type Vec3 = [number, number, number];

export interface Layout {
  floors: number;
  slots_per_floor: number;
  corridor_width_m: number;
  shop_width_m: number;
  shop_depth_m: number;
  floor_height_m: number;
}

export interface SceneNode {
  id: string;
  kind: "floor_slab" | "shop_box" | "door" | "sign" | "viewpoint";
  position: Vec3;
  yaw: number;
  shop_id?: string;
  label?: string;
}

export interface SceneDoc {
  layout: Layout;
  entrance: string;
  nodes: SceneNode[];
}

export interface Keyframe {
  position: Vec3;
  yaw: number;
  dwell_s: number;
}

export interface CameraPath {
  keyframes: Keyframe[];
}

export interface Category {
  id: string;
  name: string;
}

export interface Shop {
  id: string;
  name: string;
  category_id: string;
  floor: number;
  slot: number;
}

export interface Product {
  id: string;
  item_id: string;
  name: string;
  unit_price_minor: number;
  kind: "physical" | "digital";
  stock: number;
}

export interface ShopPage {
  shop: Shop;
  items: { id: string; shop_id: string; name: string }[];
  products: Product[];
  offers: { id: string; product_id: string; rule: { kind: string } }[];
  recommendations: Recommendation[];
}

export interface Recommendation {
  id: string;
  customer_id: string;
  product_id: string;
  text: string;
  created_at: number;
}

export interface Session {
  token: string;
  customer_id: string;
  issued_at: number;
  ttl_seconds: number;
}

export interface BasketView {
  basket: { customer_id: string; lines: { product_id: string; quantity: number }[] };
  priced: {
    lines: {
      product_id: string;
      quantity: number;
      unit_price_minor: number;
      discount_minor: number;
      line_total_minor: number;
    }[];
    goods_total_minor: number;
  };
}

export interface Order {
  id: string;
  customer_id: string;
  state: "draft" | "confirmed" | "payment_pending" | "paid" | "declined" | "fulfilled" | "cancelled";
  lines: {
    product_id: string;
    shop_id: string;
    kind: string;
    quantity: number;
    unit_price_minor: number;
    discount_minor: number;
    line_total_minor: number;
  }[];
  goods_total_minor: number;
  shipping_fee_minor: number;
  other_fees_minor: number;
  grand_total_minor: number;
  decline_reason: string | null;
  txn_id: string | null;
  receipt?: Receipt;
  delivery?: { order_id: string; address: string; status: string };
}

export interface Receipt {
  order_id: string;
  to: string;
  subject: string;
  body: string;
  installation_codes: string[];
  sent_at: number;
}

export interface AvailabilityEntry {
  shop_id: string;
  product_id: string | null;
  status: "in_stock" | "out_of_stock" | "unknown";
  count: number | null;
}

export interface Buyer {
  name: string;
  email: string;
  postal_address: string;
}

export interface CardForm {
  name: string;
  pan: string;
  expiry_month: number;
  expiry_year: number;
}
