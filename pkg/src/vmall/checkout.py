"""The five-step checkout procedure as an order state machine.

Selection freezes the priced basket into a Draft order; confirmation captures
the buyer; payment runs the card pipeline synchronously and lands in Paid or
Declined; the receipt (with installation codes for digital units) goes out
automatically on Paid; physical goods get a delivery to the address from
customer registration. Only the declared transitions are ever taken; an
illegal call raises without mutating anything.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import dataclass

from . import errors
from .auth import AuthService, validate_email
from .clock import Clock
from .domain import CatalogService, ProductKind
from .outbox import Outbox
from .payments import CardDetails, PaymentNetwork, validate_card_details
from .storage import Database
from .storefront import StorefrontService

DEFAULT_SHIPPING_FEE_PER_PHYSICAL_LINE = 500

# Transcription-safe: uppercase base32 without 0/1/O/I.
CODE_ALPHABET = "ABCDEFGHJKLMNPQRSTUVWXYZ234567"

DRAFT = "draft"
CONFIRMED = "confirmed"
PAYMENT_PENDING = "payment_pending"
PAID = "paid"
DECLINED = "declined"
FULFILLED = "fulfilled"
CANCELLED = "cancelled"

LEGAL_TRANSITIONS: frozenset[tuple[str, str]] = frozenset({
    (DRAFT, CONFIRMED),
    (CONFIRMED, PAYMENT_PENDING),
    (PAYMENT_PENDING, PAID),
    (PAYMENT_PENDING, DECLINED),
    (PAID, FULFILLED),
    (DRAFT, CANCELLED),
    (CONFIRMED, CANCELLED),
    (DECLINED, CONFIRMED),
})


@dataclass(frozen=True)
class OrderLine:
    product_id: str
    shop_id: str
    kind: ProductKind
    quantity: int
    unit_price_minor: int
    discount_minor: int
    line_total_minor: int


@dataclass(frozen=True)
class Order:
    id: str
    customer_id: str
    state: str
    lines: tuple[OrderLine, ...]
    goods_total_minor: int
    shipping_fee_minor: int
    other_fees_minor: int
    grand_total_minor: int
    registration_address: str
    buyer: dict | None = None
    txn_id: str | None = None
    decline_reason: str | None = None
    created_at: float = 0.0

    def physical_lines(self) -> list[OrderLine]:
        return [l for l in self.lines if l.kind is ProductKind.PHYSICAL]

    def digital_units(self) -> int:
        return sum(l.quantity for l in self.lines if l.kind is ProductKind.DIGITAL)


@dataclass(frozen=True)
class EmailReceipt:
    order_id: str
    to: str
    subject: str
    body: str
    installation_codes: tuple[str, ...]
    sent_at: float


@dataclass(frozen=True)
class Delivery:
    order_id: str
    address: str
    status: str  # scheduled | dispatched


def generate_installation_code() -> str:
    groups = ["".join(secrets.choice(CODE_ALPHABET) for _ in range(4)) for _ in range(3)]
    return "MALL-" + "-".join(groups)


class CheckoutService:
    """Drives orders through the checkout state machine."""

    def __init__(self, db: Database, clock: Clock, auth: AuthService,
                 catalog: CatalogService, storefront: StorefrontService,
                 payments: PaymentNetwork, outbox: Outbox,
                 shipping_fee_per_physical_line: int = DEFAULT_SHIPPING_FEE_PER_PHYSICAL_LINE,
                 other_fees_minor: int = 0):
        self.db = db
        self.clock = clock
        self.auth = auth
        self.catalog = catalog
        self.storefront = storefront
        self.payments = payments
        self.outbox = outbox
        self.shipping_fee_per_physical_line = shipping_fee_per_physical_line
        self.other_fees_minor = other_fees_minor
        # Every committed state change, for auditing the legal-edge property.
        self.observed_transitions: list[tuple[str, str, str]] = []

    # -- lookup ---------------------------------------------------------------

    def get_order(self, order_id: str) -> Order:
        row = self.db.query_one("SELECT * FROM orders WHERE id = ?", (order_id,))
        if row is None:
            raise errors.UnknownOrder(order_id)
        lines = tuple(
            OrderLine(product_id=r["product_id"], shop_id=r["shop_id"],
                      kind=ProductKind(r["kind"]), quantity=r["quantity"],
                      unit_price_minor=r["unit_price_minor"],
                      discount_minor=r["discount_minor"],
                      line_total_minor=r["line_total_minor"])
            for r in self.db.query(
                "SELECT * FROM order_lines WHERE order_id = ? ORDER BY pos", (order_id,))
        )
        return Order(
            id=row["id"], customer_id=row["customer_id"], state=row["state"], lines=lines,
            goods_total_minor=row["goods_total_minor"],
            shipping_fee_minor=row["shipping_fee_minor"],
            other_fees_minor=row["other_fees_minor"],
            grand_total_minor=row["grand_total_minor"],
            registration_address=row["registration_address"],
            buyer=json.loads(row["buyer_json"]) if row["buyer_json"] else None,
            txn_id=row["txn_id"], decline_reason=row["decline_reason"],
            created_at=row["created_at"],
        )

    def _transition(self, conn, order_id: str, current: str, new: str,
                    **updates) -> None:
        if (current, new) not in LEGAL_TRANSITIONS:
            raise errors.WrongState(f"order {order_id}: no transition {current} -> {new}")
        sets = ", ".join(["state = ?"] + [f"{col} = ?" for col in updates])
        conn.execute(f"UPDATE orders SET {sets} WHERE id = ?",
                     (new, *updates.values(), order_id))
        self.observed_transitions.append((order_id, current, new))

    # -- step 1: selection -------------------------------------------------------

    def begin_checkout(self, token: str) -> Order:
        session = self.auth.session_for(token)
        customer = self.auth.get_customer(session.customer_id)
        basket = self.storefront.basket_for(customer.id)
        if not basket.lines:
            raise errors.EmptyBasket()
        priced = self.storefront.price_current_basket(basket)
        products = {line.product_id: self.catalog.get_product(line.product_id)
                    for line in basket.lines}
        shop_ids = {pid: self.catalog.shop_of_product(pid).id for pid in products}
        for line in basket.lines:
            if line.quantity > products[line.product_id].stock:
                raise errors.InsufficientStock(line.product_id)
        physical_line_count = sum(
            1 for line in priced.lines
            if products[line.product_id].kind is ProductKind.PHYSICAL)
        shipping = self.shipping_fee_per_physical_line * physical_line_count
        other = self.other_fees_minor
        grand = priced.goods_total_minor + shipping + other
        created_at = self.clock.now()
        with self.db.transaction() as conn:
            order_id = self.db.next_id("ord")
            conn.execute(
                "INSERT INTO orders (id, customer_id, state, goods_total_minor, "
                "shipping_fee_minor, other_fees_minor, grand_total_minor, "
                "registration_address, created_at) VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                (order_id, customer.id, DRAFT, priced.goods_total_minor, shipping, other,
                 grand, customer.postal_address, created_at),
            )
            for pos, line in enumerate(priced.lines):
                product = products[line.product_id]
                shop_id = shop_ids[line.product_id]
                conn.execute(
                    "INSERT INTO order_lines (order_id, pos, product_id, shop_id, kind, "
                    "quantity, unit_price_minor, discount_minor, line_total_minor) "
                    "VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?)",
                    (order_id, pos, line.product_id, shop_id, product.kind.value,
                     line.quantity, line.unit_price_minor, line.discount_minor,
                     line.line_total_minor),
                )
            conn.execute("DELETE FROM basket_lines WHERE customer_id = ?", (customer.id,))
        return self.get_order(order_id)

    # -- step 2: confirmation ------------------------------------------------------

    def confirm_order(self, order_id: str, buyer: dict) -> Order:
        order = self.get_order(order_id)
        if order.state not in (DRAFT, DECLINED):
            raise errors.WrongState(f"order {order_id} is {order.state}, expected draft")
        for field_name in ("name", "email", "postal_address"):
            if not buyer.get(field_name, "").strip():
                raise errors.MissingBuyerField(field_name)
        validate_email(buyer["email"])
        captured = {k: buyer[k].strip() for k in ("name", "email", "postal_address")}
        with self.db.transaction() as conn:
            self._transition(conn, order_id, order.state, CONFIRMED,
                             buyer_json=json.dumps(captured))
        return self.get_order(order_id)

    # -- step 3: payment -------------------------------------------------------------

    def submit_payment(self, order_id: str, card: CardDetails) -> Order:
        """Runs the payment pipeline synchronously through authorization.

        Declines land the order in Declined with a reason; they are never
        raised. Stock is decremented exactly when the order becomes Paid.
        """
        with self.db.lock():
            order = self.get_order(order_id)
            if order.state != CONFIRMED:
                raise errors.WrongState(f"order {order_id} is {order.state}, expected confirmed")
            with self.db.transaction() as conn:
                self._transition(conn, order_id, CONFIRMED, PAYMENT_PENDING)

            def decline(reason: str) -> Order:
                with self.db.transaction() as conn:
                    self._transition(conn, order_id, PAYMENT_PENDING, DECLINED,
                                     decline_reason=reason)
                return self.get_order(order_id)

            for line in order.lines:
                if self.catalog.get_product(line.product_id).stock < line.quantity:
                    return decline("InsufficientStock")
            check = validate_card_details(card, self.clock.now())
            if not check.valid:
                return decline(check.reason)
            # The merchant of record is the shop of the first line.
            merchant_id = order.lines[0].shop_id
            try:
                routing = self.payments.routing_for_card(card, merchant_id)
                request = self.payments.format_gateway_request(
                    order.grand_total_minor, card, merchant_id, routing)
                result = self.payments.gateway_authorize(request)
            except errors.MallError as exc:
                return decline(exc.code)
            if not result.approved:
                return decline(result.reason or "Declined")

            with self.db.transaction() as conn:
                for line in order.lines:
                    cur = conn.execute(
                        "UPDATE products SET stock = stock - ? WHERE id = ? AND stock >= ?",
                        (line.quantity, line.product_id, line.quantity),
                    )
                    if cur.rowcount != 1:
                        raise errors.InsufficientStock(line.product_id)
                self._transition(conn, order_id, PAYMENT_PENDING, PAID, txn_id=result.txn_id)
            self.issue_receipt(order_id)
            if not self.get_order(order_id).physical_lines():
                with self.db.transaction() as conn:
                    self._transition(conn, order_id, PAID, FULFILLED)
            return self.get_order(order_id)

    # -- step 4: receipt and installation codes -----------------------------------------

    def get_receipt(self, order_id: str) -> EmailReceipt | None:
        row = self.db.query_one("SELECT * FROM receipts WHERE order_id = ?", (order_id,))
        if row is None:
            return None
        return EmailReceipt(order_id=row["order_id"], to=row["to_email"],
                            subject=row["subject"], body=row["body"],
                            installation_codes=tuple(json.loads(row["codes_json"])),
                            sent_at=row["sent_at"])

    def issue_receipt(self, order_id: str) -> EmailReceipt:
        """Triggered automatically on Paid; safe to call again (one receipt
        per order, ever)."""
        existing = self.get_receipt(order_id)
        if existing is not None:
            return existing
        order = self.get_order(order_id)
        if order.state != PAID:
            raise errors.WrongState(f"order {order_id} is {order.state}, expected paid")
        codes: list[str] = []
        seen: set[str] = set()
        for line in order.lines:
            if line.kind is not ProductKind.DIGITAL:
                continue
            for _ in range(line.quantity):
                code = generate_installation_code()
                while code in seen:
                    code = generate_installation_code()
                seen.add(code)
                codes.append(code)
        to = order.buyer["email"] if order.buyer else ""
        subject = f"Receipt for order {order.id}"
        body_lines = [f"Order {order.id}"]
        for line in order.lines:
            body_lines.append(
                f"  {line.quantity} x {line.product_id} @ {line.unit_price_minor}"
                + (f" (-{line.discount_minor})" if line.discount_minor else ""))
        body_lines.append(f"Goods total: {order.goods_total_minor}")
        body_lines.append(f"Shipping: {order.shipping_fee_minor}")
        if order.other_fees_minor:
            body_lines.append(f"Other fees: {order.other_fees_minor}")
        body_lines.append(f"Grand total: {order.grand_total_minor}")
        body = "\n".join(body_lines)
        sent_at = self.clock.now()
        self.outbox.append({
            "to": to, "subject": subject, "body": body, "order_id": order.id,
            "installation_codes": codes, "sent_at": sent_at,
        })
        with self.db.transaction() as conn:
            conn.execute(
                "INSERT INTO receipts (order_id, to_email, subject, body, codes_json, sent_at) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (order.id, to, subject, body, json.dumps(codes), sent_at),
            )
            # Internal audit copy of the codes.
            conn.execute("INSERT INTO code_audit (order_id, codes_json) VALUES (?, ?)",
                         (order.id, json.dumps(codes)))
        return EmailReceipt(order_id=order.id, to=to, subject=subject, body=body,
                            installation_codes=tuple(codes), sent_at=sent_at)

    # -- step 5: delivery -----------------------------------------------------------------

    def get_delivery(self, order_id: str) -> Delivery | None:
        row = self.db.query_one("SELECT * FROM deliveries WHERE order_id = ?", (order_id,))
        if row is None:
            return None
        return Delivery(order_id=row["order_id"], address=row["address"], status=row["status"])

    def schedule_delivery(self, order_id: str) -> Delivery:
        order = self.get_order(order_id)
        if not order.physical_lines():
            raise errors.NoPhysicalLines(f"order {order_id} has no physical lines")
        if order.state != PAID:
            raise errors.WrongState(f"order {order_id} is {order.state}, expected paid")
        with self.db.transaction() as conn:
            conn.execute(
                "INSERT INTO deliveries (order_id, address, status) VALUES (?, ?, 'scheduled')",
                (order_id, order.registration_address),
            )
            self._transition(conn, order_id, PAID, FULFILLED)
        return self.get_delivery(order_id)

    # -- cancellation --------------------------------------------------------------------

    def cancel_order(self, order_id: str) -> Order:
        order = self.get_order(order_id)
        if order.state not in (DRAFT, CONFIRMED):
            raise errors.WrongState(f"order {order_id} is {order.state}")
        with self.db.transaction() as conn:
            self._transition(conn, order_id, order.state, CANCELLED)
        return self.get_order(order_id)
