/** DOM wiring: side menu over the 3D canvas, overlay views for shop page,
 * basket, checkout screens, and receipt. Routes mirror the view state so the
 * scene's door anchors (/shops/{id}) stay clickable browser URLs. */

import { ApiClient } from "./api.js";
import { formatMinor, AppCore } from "./store.js";
import { MallRenderer } from "./render3d.js";
import { resolveRoute, routeToPath } from "./router.js";
import type { Buyer, ShopPage } from "./types.js";

const API_BASE = (window as any).VMALL_API ?? "http://127.0.0.1:8765";

const api = new ApiClient(API_BASE);
const app = new AppCore(api);

const canvas = document.getElementById("mall-canvas") as HTMLCanvasElement;
const overlay = document.getElementById("overlay")!;
const menu = document.getElementById("menu")!;
const toastBox = document.getElementById("toast")!;

const renderer = new MallRenderer(canvas, (shopId) => {
  void app.openShopDoor(shopId);
  history.pushState(null, "", `#/shops/${shopId}`);
});

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

async function buildMenu(): Promise<void> {
  menu.replaceChildren(el("h1", "brand", "3D Mall"));
  const walkBtn = el("button", "menu-item", "Resume walkthrough");
  walkBtn.onclick = () => {
    app.backToWalkthrough();
    history.pushState(null, "", "#/");
  };
  menu.appendChild(walkBtn);
  const basketBtn = el("button", "menu-item", "Basket");
  basketBtn.onclick = () => void app.openBasket();
  menu.appendChild(basketBtn);
  for (const category of await api.listCategories()) {
    menu.appendChild(el("h2", "category", category.name));
    for (const shop of await api.listShops(category.id)) {
      const btn = el("button", "menu-item shop", shop.name);
      btn.onclick = () => void app.selectShop(shop.id);
      menu.appendChild(btn);
    }
  }
}

function loginForm(): HTMLElement {
  const box = el("div", "panel login");
  box.appendChild(el("h2", "", "Log in"));
  const user = document.createElement("input");
  user.placeholder = "username";
  const pass = document.createElement("input");
  pass.placeholder = "password";
  pass.type = "password";
  const go = el("button", "primary", "Log in") as HTMLButtonElement;
  go.onclick = async () => {
    try {
      await app.login(user.value, pass.value);
      render();
    } catch {
      toast("Login failed");
    }
  };
  box.append(user, pass, go);
  return box;
}

function shopPageView(page: ShopPage): HTMLElement {
  const box = el("div", "panel shop-page");
  box.appendChild(el("h2", "", page.shop.name));
  for (const product of page.products) {
    const row = el("div", "product-row");
    row.appendChild(el("span", "name", product.name));
    row.appendChild(el("span", "price", formatMinor(product.unit_price_minor)));
    row.appendChild(el("span", "stock",
      product.stock > 0 ? `${product.stock} in stock` : "out of stock"));
    const add = el("button", "", "Add to basket") as HTMLButtonElement;
    add.disabled = product.stock === 0;
    add.onclick = () => void app.addToBasket(product.id, 1);
    row.appendChild(add);
    box.appendChild(row);
  }
  if (page.recommendations.length) {
    box.appendChild(el("h3", "", "Recommendations"));
    for (const rec of page.recommendations) {
      box.appendChild(el("p", "recommendation", rec.text));
    }
  }
  return box;
}

function buyerFormView(declineReason: string | null): HTMLElement {
  const box = el("div", "panel checkout");
  box.appendChild(el("h2", "", "Confirm your order"));
  if (declineReason) box.appendChild(el("p", "decline", declineReason));
  const total = app.displayedTotalMinor();
  if (total !== null) box.appendChild(el("p", "total", `Total: ${formatMinor(total)}`));
  const name = document.createElement("input");
  name.placeholder = "name";
  const email = document.createElement("input");
  email.placeholder = "email";
  const address = document.createElement("input");
  address.placeholder = "postal address";
  const go = el("button", "primary", "Continue to payment");
  go.onclick = () => {
    const buyer: Buyer = { name: name.value, email: email.value, postal_address: address.value };
    void app.confirmBuyer(buyer);
  };
  box.append(name, email, address, go);
  return box;
}

function cardFormView(): HTMLElement {
  const box = el("div", "panel checkout");
  box.appendChild(el("h2", "", "Card details"));
  const total = app.displayedTotalMinor();
  if (total !== null) box.appendChild(el("p", "total", `Total: ${formatMinor(total)}`));
  const name = document.createElement("input");
  name.placeholder = "name on card";
  const pan = document.createElement("input");
  pan.placeholder = "card number";
  const month = document.createElement("input");
  month.placeholder = "MM";
  const year = document.createElement("input");
  year.placeholder = "YYYY";
  const go = el("button", "primary", "Pay");
  go.onclick = () => {
    void app.submitCard({
      name: name.value,
      pan: pan.value,
      expiry_month: Number(month.value),
      expiry_year: Number(year.value),
    });
    pan.value = "";  // never retained
  };
  box.append(name, pan, month, year, go);
  return box;
}

function receiptView(): HTMLElement {
  const mode = app.state.mode;
  const box = el("div", "panel receipt");
  if (mode.kind !== "receipt") return box;
  const order = mode.order;
  box.appendChild(el("h2", "", "Thank you!"));
  box.appendChild(el("p", "", `Order ${order.id} is ${order.state}.`));
  box.appendChild(el("p", "total", `Charged: ${formatMinor(order.grand_total_minor)}`));
  if (order.receipt) {
    box.appendChild(el("p", "", `Receipt sent to ${order.receipt.to}`));
    for (const code of order.receipt.installation_codes) {
      box.appendChild(el("code", "install-code", code));
    }
  }
  if (order.delivery) {
    box.appendChild(el("p", "", `Delivery to: ${order.delivery.address}`));
  } else if (order.lines.some((line) => line.kind === "physical")) {
    box.appendChild(el("p", "", "Physical items will be delivered to your registered address."));
  }
  return box;
}

function basketView(): HTMLElement {
  const mode = app.state.mode;
  const box = el("div", "panel basket");
  if (mode.kind !== "basket") return box;
  box.appendChild(el("h2", "", "Basket"));
  for (const line of mode.view.priced.lines) {
    const row = el("div", "product-row");
    row.appendChild(el("span", "name", `${line.quantity} x ${line.product_id}`));
    if (line.discount_minor > 0) {
      row.appendChild(el("span", "discount", `-${formatMinor(line.discount_minor)}`));
    }
    row.appendChild(el("span", "price", formatMinor(line.line_total_minor)));
    box.appendChild(row);
  }
  box.appendChild(el("p", "total",
    `Goods total: ${formatMinor(mode.view.priced.goods_total_minor)}`));
  const go = el("button", "primary", "Checkout");
  go.onclick = () => void app.startCheckout();
  box.appendChild(go);
  return box;
}

function toast(message: string): void {
  toastBox.textContent = message;
  toastBox.classList.add("visible");
  setTimeout(() => toastBox.classList.remove("visible"), 2500);
}

function render(): void {
  const mode = app.state.mode;
  overlay.replaceChildren();
  if (app.state.needsLogin || (!app.state.loggedIn &&
      (mode.kind === "basket" || mode.kind === "checkout"))) {
    overlay.appendChild(loginForm());
    return;
  }
  if (mode.kind === "shop_page") overlay.appendChild(shopPageView(mode.page));
  else if (mode.kind === "basket") overlay.appendChild(basketView());
  else if (mode.kind === "checkout" && mode.stage === "confirm") {
    overlay.appendChild(buyerFormView(app.state.toast));
  } else if (mode.kind === "checkout" && mode.stage === "card") {
    overlay.appendChild(cardFormView());
  } else if (mode.kind === "receipt") overlay.appendChild(receiptView());
}

app.onChange(() => {
  render();
  if (app.state.toast) {
    toast(app.state.toast);
    app.state.toast = null;
  }
});

function animate(last: number): void {
  requestAnimationFrame((now) => {
    app.tick((now - last) / 1000);
    renderer.applyPose(app.state.camera);
    renderer.render();
    animate(now);
  });
}

async function boot(): Promise<void> {
  await app.loadScene();
  renderer.build(app.scene!);
  await buildMenu();
  const route = resolveRoute(location.hash.replace(/^#/, "") || "/");
  if (route?.kind === "shop_page") await app.openShopDoor(route.shopId);
  const resize = () => renderer.resize(canvas.clientWidth, canvas.clientHeight);
  window.addEventListener("resize", resize);
  resize();
  render();
  animate(performance.now());
}

window.addEventListener("popstate", () => {
  const route = resolveRoute(location.hash.replace(/^#/, "") || "/");
  if (route?.kind === "shop_page") void app.openShopDoor(route.shopId);
  if (route?.kind === "walkthrough") app.backToWalkthrough();
});

void boot();

export { app, routeToPath };
