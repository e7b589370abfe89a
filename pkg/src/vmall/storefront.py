"""Catalog browsing, baskets, offer pricing, availability fan-out, reports.

``price_basket`` is a pure function: per line the single best applicable
active offer wins (largest discount; ties prefer percent-off, then the lowest
offer id). Availability queries fan out to every participating store with a
per-store deadline; a store that misses the deadline is reported Unknown and
never blocks the others.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping

from . import errors
from .auth import AuthService
from .clock import Clock
from .domain import (
    Actor,
    CatalogService,
    Offer,
    Product,
    Recommendation,
    Role,
    category_from_row,
    item_from_row,
    offer_from_row,
    product_from_row,
    shop_from_row,
)
from .money import percent_discount
from .storage import Database

DEFAULT_AVAILABILITY_DEADLINE_MS = 200.0


@dataclass(frozen=True)
class BasketLine:
    product_id: str
    quantity: int


@dataclass(frozen=True)
class Basket:
    customer_id: str
    lines: tuple[BasketLine, ...]


@dataclass(frozen=True)
class PricedLine:
    product_id: str
    quantity: int
    unit_price_minor: int
    discount_minor: int
    line_total_minor: int


@dataclass(frozen=True)
class PricedBasket:
    lines: tuple[PricedLine, ...]
    goods_total_minor: int


@dataclass(frozen=True)
class AvailabilityEntry:
    shop_id: str
    product_id: str | None
    status: str  # "in_stock" | "out_of_stock" | "unknown"
    count: int | None = None


@dataclass(frozen=True)
class AvailabilityReport:
    entries: tuple[AvailabilityEntry, ...]


@dataclass(frozen=True)
class Movement:
    txn_id: str
    amount_minor: int
    timestamp: float


@dataclass(frozen=True)
class ShopReport:
    shop_id: str
    period_start: float
    period_end: float
    items_count: int
    products_count: int
    customers_served: int
    movements: tuple[Movement, ...]


def offer_discount(offer: Offer, unit_price_minor: int, quantity: int) -> int:
    """Discount an offer grants on one basket line, in minor units."""
    rule = offer.rule
    if rule.kind == "percent_off":
        return percent_discount(unit_price_minor * quantity, rule.percent)
    if rule.kind == "buy_n_get_m_free":
        free_units = (quantity // (rule.n + rule.m)) * rule.m
        return free_units * unit_price_minor
    raise errors.BadRule(f"unknown rule kind {rule.kind!r}")


def best_offer(offers: Iterable[Offer], unit_price_minor: int, quantity: int
               ) -> tuple[int, Offer | None]:
    """Pick the single winning offer for a line.

    Largest discount first; on ties percent-off beats buy-N-get-M, then the
    lowest offer id wins.
    """
    best: tuple[int, int, str] | None = None
    chosen = None
    for offer in offers:
        if not offer.active:
            continue
        discount = offer_discount(offer, unit_price_minor, quantity)
        key = (-discount, 0 if offer.rule.kind == "percent_off" else 1, offer.id)
        if best is None or key < best:
            best = key
            chosen = offer
    if chosen is None:
        return 0, None
    return -best[0], chosen


def price_basket(lines: Iterable[BasketLine], products: Mapping[str, Product],
                 offers: Iterable[Offer]) -> PricedBasket:
    """Price a basket against a catalog snapshot. Pure and deterministic."""
    by_product: dict[str, list[Offer]] = {}
    for offer in offers:
        by_product.setdefault(offer.product_id, []).append(offer)
    priced = []
    goods_total = 0
    for line in lines:
        product = products.get(line.product_id)
        if product is None:
            raise errors.UnknownProduct(line.product_id)
        if line.quantity < 1:
            raise errors.ZeroQuantity(f"quantity {line.quantity} for {line.product_id}")
        discount, _ = best_offer(by_product.get(product.id, ()), product.unit_price_minor,
                                 line.quantity)
        subtotal = product.unit_price_minor * line.quantity
        discount = min(discount, subtotal)
        line_total = subtotal - discount
        priced.append(PricedLine(
            product_id=product.id, quantity=line.quantity,
            unit_price_minor=product.unit_price_minor,
            discount_minor=discount, line_total_minor=line_total,
        ))
        goods_total += line_total
    return PricedBasket(lines=tuple(priced), goods_total_minor=goods_total)


class StorefrontService:
    """Customer-facing catalog, basket, and reporting operations."""

    def __init__(self, db: Database, clock: Clock, auth: AuthService,
                 catalog: CatalogService,
                 availability_deadline_ms: float = DEFAULT_AVAILABILITY_DEADLINE_MS):
        self.db = db
        self.clock = clock
        self.auth = auth
        self.catalog = catalog
        self.availability_deadline_ms = availability_deadline_ms
        # Simulated per-store response latency, settable by tests/operators.
        self.store_latency_ms: dict[str, float] = {}

    # -- browsing ------------------------------------------------------------

    def list_categories(self):
        rows = self.db.query("SELECT * FROM categories ORDER BY name, id")
        return [category_from_row(r) for r in rows]

    def list_shops(self, category_id: str):
        self.catalog.get_category(category_id)
        rows = self.db.query(
            "SELECT * FROM shops WHERE category_id = ? ORDER BY name, id", (category_id,)
        )
        return [shop_from_row(r) for r in rows]

    def get_shop_page(self, shop_id: str) -> dict:
        shop = self.catalog.get_shop(shop_id)
        items = [item_from_row(r) for r in self.db.query(
            "SELECT * FROM items WHERE shop_id = ? ORDER BY name, id", (shop_id,))]
        products = [product_from_row(r) for r in self.db.query(
            "SELECT p.* FROM products p JOIN items i ON p.item_id = i.id "
            "WHERE i.shop_id = ? ORDER BY p.name, p.id", (shop_id,))]
        offers = [offer_from_row(r) for r in self.db.query(
            "SELECT * FROM offers WHERE shop_id = ? AND active = 1 ORDER BY id", (shop_id,))]
        recommendations = [self._rec_from_row(r) for r in self.db.query(
            "SELECT r.* FROM recommendations r JOIN products p ON r.product_id = p.id "
            "JOIN items i ON p.item_id = i.id WHERE i.shop_id = ? "
            "ORDER BY r.created_at DESC, r.id DESC", (shop_id,))]
        return {"shop": shop, "items": items, "products": products,
                "offers": offers, "recommendations": recommendations}

    # -- basket ----------------------------------------------------------------

    def add_to_basket(self, token: str, product_id: str, quantity: int) -> Basket:
        session = self.auth.session_for(token)
        if quantity < 1:
            raise errors.ZeroQuantity(f"quantity must be >= 1, got {quantity}")
        self.catalog.get_product(product_id)
        with self.db.transaction() as conn:
            row = conn.execute(
                "SELECT quantity FROM basket_lines WHERE customer_id = ? AND product_id = ?",
                (session.customer_id, product_id),
            ).fetchone()
            if row is not None:
                conn.execute(
                    "UPDATE basket_lines SET quantity = quantity + ? "
                    "WHERE customer_id = ? AND product_id = ?",
                    (quantity, session.customer_id, product_id),
                )
            else:
                pos = conn.execute(
                    "SELECT COALESCE(MAX(pos), -1) + 1 FROM basket_lines WHERE customer_id = ?",
                    (session.customer_id,),
                ).fetchone()[0]
                conn.execute(
                    "INSERT INTO basket_lines (customer_id, product_id, quantity, pos) "
                    "VALUES (?, ?, ?, ?)",
                    (session.customer_id, product_id, quantity, pos),
                )
        return self.basket_for(session.customer_id)

    def basket_for(self, customer_id: str) -> Basket:
        rows = self.db.query(
            "SELECT product_id, quantity FROM basket_lines WHERE customer_id = ? ORDER BY pos",
            (customer_id,),
        )
        return Basket(customer_id=customer_id,
                      lines=tuple(BasketLine(r["product_id"], r["quantity"]) for r in rows))

    def get_basket(self, token: str) -> Basket:
        return self.basket_for(self.auth.session_for(token).customer_id)

    def clear_basket(self, customer_id: str) -> None:
        with self.db.transaction() as conn:
            conn.execute("DELETE FROM basket_lines WHERE customer_id = ?", (customer_id,))

    def price_current_basket(self, basket: Basket) -> PricedBasket:
        products = {}
        for line in basket.lines:
            products[line.product_id] = self.catalog.get_product(line.product_id)
        offers = [offer_from_row(r) for r in self.db.query("SELECT * FROM offers ORDER BY id")]
        return price_basket(basket.lines, products, offers)

    # -- availability federation --------------------------------------------------

    def check_availability(self, product_name_or_id: str,
                           shop_ids: list[str] | None = None) -> AvailabilityReport:
        participating = self.auth.participating_shops()
        if not participating:
            raise errors.NoParticipatingShops()
        if shop_ids is None:
            queried = participating
        else:
            queried = [s for s in shop_ids if s in set(participating)]
        entries = []
        for shop_id in queried:
            latency = self.store_latency_ms.get(shop_id, 0.0)
            if latency > self.availability_deadline_ms:
                entries.append(AvailabilityEntry(shop_id=shop_id, product_id=None,
                                                 status="unknown"))
                continue
            rows = self.db.query(
                "SELECT p.id, p.stock FROM products p JOIN items i ON p.item_id = i.id "
                "WHERE i.shop_id = ? AND (p.id = ? OR lower(p.name) = lower(?)) ORDER BY p.id",
                (shop_id, product_name_or_id, product_name_or_id),
            )
            count = sum(r["stock"] for r in rows)
            product_id = rows[0]["id"] if rows else None
            if count > 0:
                entries.append(AvailabilityEntry(shop_id=shop_id, product_id=product_id,
                                                 status="in_stock", count=count))
            else:
                entries.append(AvailabilityEntry(shop_id=shop_id, product_id=product_id,
                                                 status="out_of_stock"))
        return AvailabilityReport(entries=tuple(entries))

    # -- recommendations ------------------------------------------------------------

    def post_recommendation(self, token: str, product_id: str, text: str) -> Recommendation:
        session = self.auth.session_for(token)
        self.catalog.get_product(product_id)
        if not 1 <= len(text) <= 2000:
            raise errors.TextOutOfBounds(f"text length {len(text)} outside 1-2000")
        created_at = self.clock.now()
        with self.db.transaction() as conn:
            rec_id = self.db.next_id("rec")
            conn.execute(
                "INSERT INTO recommendations (id, customer_id, product_id, text, created_at) "
                "VALUES (?, ?, ?, ?, ?)",
                (rec_id, session.customer_id, product_id, text, created_at),
            )
        return Recommendation(id=rec_id, customer_id=session.customer_id,
                              product_id=product_id, text=text, created_at=created_at)

    def list_recommendations(self, product_id: str) -> list[Recommendation]:
        self.catalog.get_product(product_id)
        rows = self.db.query(
            "SELECT * FROM recommendations WHERE product_id = ? "
            "ORDER BY created_at DESC, id DESC", (product_id,),
        )
        return [self._rec_from_row(r) for r in rows]

    @staticmethod
    def _rec_from_row(row) -> Recommendation:
        return Recommendation(id=row["id"], customer_id=row["customer_id"],
                              product_id=row["product_id"], text=row["text"],
                              created_at=row["created_at"])

    # -- reports -----------------------------------------------------------------

    def shop_report(self, shop_id: str, period_start: float, period_end: float,
                    actor: Actor) -> ShopReport:
        if actor.role is Role.CUSTOMER or (
                actor.role is Role.SHOP_MANAGER and actor.shop_id != shop_id):
            raise errors.Unauthorized(f"not authorized for shop {shop_id}")
        self.catalog.get_shop(shop_id)
        items_count = self.db.scalar(
            "SELECT COUNT(*) FROM items WHERE shop_id = ?", (shop_id,))
        products_count = self.db.scalar(
            "SELECT COUNT(*) FROM products p JOIN items i ON p.item_id = i.id "
            "WHERE i.shop_id = ?", (shop_id,))
        movements = tuple(
            Movement(txn_id=r["txn_id"], amount_minor=r["amount_minor"], timestamp=r["posted_at"])
            for r in self.db.query(
                "SELECT le.txn_id, le.amount_minor, le.posted_at FROM ledger_entries le "
                "JOIN accounts a ON le.account_id = a.id "
                "WHERE a.owner_kind = 'merchant' AND a.owner_ref = ? AND le.direction = 'credit' "
                "AND le.posted_at >= ? AND le.posted_at < ? ORDER BY le.entry_id",
                (shop_id, period_start, period_end),
            )
        )
        txn_ids = [m.txn_id for m in movements]
        customers_served = 0
        if txn_ids:
            placeholders = ",".join("?" for _ in txn_ids)
            customers_served = self.db.scalar(
                f"SELECT COUNT(DISTINCT customer_id) FROM orders WHERE txn_id IN ({placeholders})",
                tuple(txn_ids),
            )
        return ShopReport(shop_id=shop_id, period_start=period_start, period_end=period_end,
                          items_count=items_count, products_count=products_count,
                          customers_served=customers_served, movements=movements)

    def customer_report(self, token: str) -> dict:
        """The customer's own orders and payment movements, never anyone else's."""
        session = self.auth.session_for(token)
        orders = [dict(r) for r in self.db.query(
            "SELECT id, state, goods_total_minor, shipping_fee_minor, other_fees_minor, "
            "grand_total_minor, txn_id, created_at FROM orders WHERE customer_id = ? ORDER BY id",
            (session.customer_id,),
        )]
        txn_ids = [o["txn_id"] for o in orders if o["txn_id"]]
        payments = []
        if txn_ids:
            placeholders = ",".join("?" for _ in txn_ids)
            payments = [dict(r) for r in self.db.query(
                f"SELECT id, state, amount_minor, gateway_fee_minor, merchant_bank_fee_minor, "
                f"clearinghouse_fee_minor FROM txns WHERE id IN ({placeholders}) ORDER BY id",
                tuple(txn_ids),
            )]
        return {"customer_id": session.customer_id, "orders": orders, "payments": payments}

    # -- administrator overview -----------------------------------------------------

    def admin_report(self, actor: Actor) -> dict:
        """Entity counts plus per-shop movement sums (the context diagram's
        'reports about shops and categories')."""
        if actor.role is not Role.ADMINISTRATOR:
            raise errors.Unauthorized("administrator role required")
        counts = {
            table: self.db.scalar(f"SELECT COUNT(*) FROM {table}")
            for table in ("categories", "shops", "items", "products", "offers", "customers")
        }
        sums = {
            r["owner_ref"]: r["total"]
            for r in self.db.query(
                "SELECT a.owner_ref, SUM(le.amount_minor) AS total FROM ledger_entries le "
                "JOIN accounts a ON le.account_id = a.id "
                "WHERE a.owner_kind = 'merchant' AND le.direction = 'credit' "
                "GROUP BY a.owner_ref"
            )
        }
        return {"counts": counts, "shop_movement_sums": sums}
