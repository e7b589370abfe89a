"""HTTP service shell: routing, role checks, idempotent retries, trace.

Roles: customers authenticate with the `X-Mall-Token` session header; staff
(administrator, shop managers) use static `X-Staff-Key` keys from the config.
State-changing endpoints accept an optional `X-Request-Id`; a retried request
with the same id replays the stored response instead of re-executing.
"""

from __future__ import annotations

import dataclasses
import json
from enum import Enum
from typing import Callable

from fastapi import Depends, FastAPI, Header, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import errors
from .domain import Actor, OfferRule, ProductKind, Role
from .payments import CardDetails
from .scene import export_scene_doc, export_vrml, path_to_doc, camera_to_shop, compute_walkthrough
from .service import Mall


def jsonable(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {k: jsonable(v) for k, v in dataclasses.asdict(obj).items()}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


class RegisterBody(BaseModel):
    username: str
    password: str
    email: str
    postal_address: str
    card: dict | None = None


class LoginBody(BaseModel):
    username: str
    password: str


class BasketLineBody(BaseModel):
    product_id: str
    quantity: int


class BuyerBody(BaseModel):
    name: str = ""
    email: str = ""
    postal_address: str = ""


class CardBody(BaseModel):
    name: str
    pan: str
    expiry_month: int
    expiry_year: int


class RecommendationBody(BaseModel):
    text: str


class CategoryBody(BaseModel):
    name: str


class ShopBody(BaseModel):
    name: str
    category_id: str
    floor: int
    slot: int


class ItemBody(BaseModel):
    name: str


class ProductBody(BaseModel):
    name: str
    unit_price_minor: int
    kind: str
    stock: int


class OfferBody(BaseModel):
    product_id: str
    rule: dict
    active: bool = True


def create_app(mall: Mall) -> FastAPI:
    app = FastAPI(title="vmall", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
        allow_headers=["X-Mall-Token", "X-Staff-Key", "X-Request-Id", "Content-Type"],
    )
    app.state.mall = mall
    app.state.trace = []

    @app.middleware("http")
    async def record_trace(request: Request, call_next):
        app.state.trace.append((request.method, request.url.path))
        return await call_next(request)

    @app.exception_handler(errors.MallError)
    async def mall_error_handler(_request: Request, exc: errors.MallError):
        return JSONResponse(status_code=exc.http_status,
                            content={"error": exc.code, "detail": exc.message})

    # -- auth dependencies ---------------------------------------------------

    def require_token(x_mall_token: str | None = Header(default=None)) -> str:
        if not x_mall_token:
            raise errors.UnknownToken("missing X-Mall-Token header")
        mall.auth.session_for(x_mall_token)
        return x_mall_token

    def require_admin(x_staff_key: str | None = Header(default=None)) -> Actor:
        actor = mall.actor_for_key(x_staff_key) if x_staff_key else None
        if actor is None or actor.role is not Role.ADMINISTRATOR:
            raise errors.Unauthorized("administrator key required")
        return actor

    def require_staff(x_staff_key: str | None = Header(default=None)) -> Actor:
        actor = mall.actor_for_key(x_staff_key) if x_staff_key else None
        if actor is None:
            raise errors.Unauthorized("staff key required")
        return actor

    def require_manager_of(shop_id: str, actor: Actor) -> Actor:
        if actor.role is Role.SHOP_MANAGER and actor.shop_id == shop_id:
            return actor
        raise errors.NotShopManager(f"key does not manage shop {shop_id}")

    # -- idempotent retries ------------------------------------------------------

    def idempotent(request_id: str | None, fn: Callable[[], tuple[dict, int]]) -> JSONResponse:
        if request_id:
            row = mall.db.query_one(
                "SELECT status, body FROM request_log WHERE request_id = ?", (request_id,))
            if row is not None:
                return JSONResponse(status_code=row["status"], content=json.loads(row["body"]))
        payload, status = fn()
        if request_id:
            with mall.db.transaction() as conn:
                conn.execute(
                    "INSERT OR IGNORE INTO request_log (request_id, status, body) VALUES (?, ?, ?)",
                    (request_id, status, json.dumps(payload)))
        return JSONResponse(status_code=status, content=payload)

    # -- public endpoints -----------------------------------------------------------

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.get("/categories")
    def list_categories():
        return [jsonable(c) for c in mall.storefront.list_categories()]

    @app.get("/categories/{category_id}/shops")
    def list_shops(category_id: str):
        return [jsonable(s) for s in mall.storefront.list_shops(category_id)]

    @app.get("/shops/{shop_id}")
    def shop_page(shop_id: str, x_mall_token: str | None = Header(default=None)):
        page = jsonable(mall.storefront.get_shop_page(shop_id))
        # A visit with a live session is a cross-store access: record the SSO
        # grant without ever re-prompting credentials. Failures (expired
        # token, shop not enrolled) leave the page public.
        if x_mall_token:
            try:
                grant = mall.auth.authorize_store_access(x_mall_token, shop_id)
                page["grant"] = jsonable(grant)
            except errors.MallError:
                pass
        return page

    @app.get("/scene")
    def scene_doc():
        return Response(content=export_scene_doc(mall.scene()), media_type="application/json")

    @app.get("/scene.wrl")
    def scene_wrl():
        return Response(content=export_vrml(mall.scene()), media_type="model/vrml")

    @app.get("/scene/walkthrough")
    def scene_walkthrough():
        return path_to_doc(compute_walkthrough(mall.scene()))

    @app.get("/scene/camera-to-shop/{shop_id}")
    def scene_camera(shop_id: str):
        return path_to_doc(camera_to_shop(mall.scene(), shop_id))

    @app.get("/products/{product_id}/recommendations")
    def list_recommendations(product_id: str):
        return [jsonable(r) for r in mall.storefront.list_recommendations(product_id)]

    @app.get("/availability")
    def availability(product: str = Query(...), shops: str | None = Query(default=None)):
        shop_ids = shops.split(",") if shops else None
        return jsonable(mall.storefront.check_availability(product, shop_ids))

    @app.post("/customers", status_code=201)
    def register_customer(body: RegisterBody,
                          x_request_id: str | None = Header(default=None)):
        def run():
            customer = mall.auth.register_customer(
                body.username, body.password, body.email, body.postal_address, body.card)
            payload = jsonable(customer)
            payload.pop("password_hash", None)
            payload.pop("card_on_file", None)
            return payload, 201
        return idempotent(x_request_id, run)

    @app.post("/login")
    def login(body: LoginBody):
        session = mall.auth.login(body.username, body.password)
        return jsonable(session)

    # -- customer endpoints ------------------------------------------------------------

    @app.post("/basket/lines")
    def add_basket_line(body: BasketLineBody, token: str = Depends(require_token),
                        x_request_id: str | None = Header(default=None)):
        def run():
            basket = mall.storefront.add_to_basket(token, body.product_id, body.quantity)
            return jsonable(basket), 200
        return idempotent(x_request_id, run)

    @app.get("/basket")
    def get_basket(token: str = Depends(require_token)):
        basket = mall.storefront.get_basket(token)
        priced = mall.storefront.price_current_basket(basket)
        return {"basket": jsonable(basket), "priced": jsonable(priced)}

    @app.post("/checkout", status_code=201)
    def begin_checkout(token: str = Depends(require_token),
                       x_request_id: str | None = Header(default=None)):
        def run():
            return jsonable(mall.checkout.begin_checkout(token)), 201
        return idempotent(x_request_id, run)

    @app.post("/orders/{order_id}/confirm")
    def confirm_order(order_id: str, body: BuyerBody, token: str = Depends(require_token),
                      x_request_id: str | None = Header(default=None)):
        _own_order(order_id, token)

        def run():
            order = mall.checkout.confirm_order(order_id, body.model_dump())
            return jsonable(order), 200
        return idempotent(x_request_id, run)

    @app.post("/orders/{order_id}/pay")
    def pay_order(order_id: str, body: CardBody, token: str = Depends(require_token),
                  x_request_id: str | None = Header(default=None)):
        _own_order(order_id, token)

        def run():
            card = CardDetails(holder_name=body.name, pan=body.pan,
                               expiry_month=body.expiry_month, expiry_year=body.expiry_year)
            order = mall.checkout.submit_payment(order_id, card)
            payload = jsonable(order)
            receipt = mall.checkout.get_receipt(order_id)
            if receipt is not None:
                payload["receipt"] = jsonable(receipt)
            delivery = mall.checkout.get_delivery(order_id)
            if delivery is not None:
                payload["delivery"] = jsonable(delivery)
            return payload, 200
        return idempotent(x_request_id, run)

    @app.post("/orders/{order_id}/delivery")
    def schedule_delivery(order_id: str, token: str = Depends(require_token),
                          x_request_id: str | None = Header(default=None)):
        _own_order(order_id, token)

        def run():
            return jsonable(mall.checkout.schedule_delivery(order_id)), 201
        return idempotent(x_request_id, run)

    @app.get("/orders/{order_id}")
    def get_order(order_id: str, token: str = Depends(require_token)):
        order = _own_order(order_id, token)
        payload = jsonable(order)
        receipt = mall.checkout.get_receipt(order_id)
        if receipt is not None:
            payload["receipt"] = jsonable(receipt)
        delivery = mall.checkout.get_delivery(order_id)
        if delivery is not None:
            payload["delivery"] = jsonable(delivery)
        return payload

    def _own_order(order_id: str, token: str):
        session = mall.auth.session_for(token)
        order = mall.checkout.get_order(order_id)
        if order.customer_id != session.customer_id:
            raise errors.Unauthorized("not your order")
        return order

    @app.post("/products/{product_id}/recommendations", status_code=201)
    def post_recommendation(product_id: str, body: RecommendationBody,
                            token: str = Depends(require_token),
                            x_request_id: str | None = Header(default=None)):
        def run():
            rec = mall.storefront.post_recommendation(token, product_id, body.text)
            return jsonable(rec), 201
        return idempotent(x_request_id, run)

    @app.get("/me/report")
    def customer_report(token: str = Depends(require_token)):
        return jsonable(mall.storefront.customer_report(token))

    # -- administrator endpoints ----------------------------------------------------

    @app.post("/categories", status_code=201)
    def upsert_category(body: CategoryBody, actor: Actor = Depends(require_admin),
                        x_request_id: str | None = Header(default=None)):
        def run():
            return jsonable(mall.catalog.upsert_category(body.name, actor)), 201
        return idempotent(x_request_id, run)

    @app.post("/shops", status_code=201)
    def register_shop(body: ShopBody, actor: Actor = Depends(require_admin),
                      x_request_id: str | None = Header(default=None)):
        def run():
            shop = mall.catalog.register_shop(body.name, body.category_id,
                                              body.floor, body.slot, actor)
            return jsonable(shop), 201
        return idempotent(x_request_id, run)

    @app.post("/shops/{shop_id}/enroll")
    def enroll_shop(shop_id: str, _actor: Actor = Depends(require_admin),
                    x_request_id: str | None = Header(default=None)):
        def run():
            return {"participating": mall.auth.enroll_store(shop_id)}, 200
        return idempotent(x_request_id, run)

    @app.delete("/shops/{shop_id}/enroll")
    def withdraw_shop(shop_id: str, _actor: Actor = Depends(require_admin),
                      x_request_id: str | None = Header(default=None)):
        def run():
            return {"participating": mall.auth.withdraw_store(shop_id)}, 200
        return idempotent(x_request_id, run)

    # -- shop management endpoints -----------------------------------------------------

    @app.post("/shops/{shop_id}/items", status_code=201)
    def add_item(shop_id: str, body: ItemBody, staff: Actor = Depends(require_staff),
                 x_request_id: str | None = Header(default=None)):
        actor = require_manager_of(shop_id, staff)

        def run():
            return jsonable(mall.catalog.add_item(shop_id, body.name, actor)), 201
        return idempotent(x_request_id, run)

    @app.post("/items/{item_id}/products", status_code=201)
    def add_product(item_id: str, body: ProductBody, staff: Actor = Depends(require_staff),
                    x_request_id: str | None = Header(default=None)):
        item = mall.catalog.get_item(item_id)
        actor = require_manager_of(item.shop_id, staff)

        def run():
            product = mall.catalog.add_product(item_id, body.name, body.unit_price_minor,
                                               ProductKind(body.kind), body.stock, actor)
            return jsonable(product), 201
        return idempotent(x_request_id, run)

    @app.post("/shops/{shop_id}/offers", status_code=201)
    def add_offer(shop_id: str, body: OfferBody, staff: Actor = Depends(require_staff),
                  x_request_id: str | None = Header(default=None)):
        actor = require_manager_of(shop_id, staff)

        def run():
            rule = OfferRule(kind=body.rule.get("kind", ""),
                             percent=body.rule.get("percent", 0),
                             n=body.rule.get("n", 0), m=body.rule.get("m", 0))
            offer = mall.catalog.add_offer(shop_id, body.product_id, rule, actor,
                                           active=body.active)
            return jsonable(offer), 201
        return idempotent(x_request_id, run)

    @app.get("/shops/{shop_id}/report")
    def shop_report(shop_id: str, staff: Actor = Depends(require_staff),
                    period_from: float = Query(default=0.0, alias="from"),
                    period_to: float = Query(default=float("1e18"), alias="to")):
        actor = require_manager_of(shop_id, staff)
        return jsonable(mall.storefront.shop_report(shop_id, period_from, period_to, actor))

    return app
