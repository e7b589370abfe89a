"""Catalog entities and the administrator / shop-management mutation flows.

Categories hold shops, shops hold items, items hold products; offers belong
to the shop that owns the discounted product. All mutations go through
``CatalogService`` which enforces referential integrity, role checks, and the
one-shop-per-(floor, slot) rule.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

from . import errors
from .storage import Database


class ProductKind(str, Enum):
    PHYSICAL = "physical"
    DIGITAL = "digital"


class Role(str, Enum):
    ADMINISTRATOR = "administrator"
    SHOP_MANAGER = "shop_manager"
    CUSTOMER = "customer"


@dataclass(frozen=True)
class Actor:
    """The caller of a mutating operation."""

    role: Role
    shop_id: str | None = None
    customer_id: str | None = None


ADMIN = Actor(Role.ADMINISTRATOR)


def shop_manager(shop_id: str) -> Actor:
    return Actor(Role.SHOP_MANAGER, shop_id=shop_id)


@dataclass(frozen=True)
class Category:
    id: str
    name: str


@dataclass(frozen=True)
class Shop:
    id: str
    name: str
    category_id: str
    floor: int
    slot: int


@dataclass(frozen=True)
class Item:
    id: str
    shop_id: str
    name: str


@dataclass(frozen=True)
class Product:
    id: str
    item_id: str
    name: str
    unit_price_minor: int
    kind: ProductKind
    stock: int


@dataclass(frozen=True)
class OfferRule:
    """Either a percentage sale or buy-N-get-M-free."""

    kind: str  # "percent_off" | "buy_n_get_m_free"
    percent: int = 0
    n: int = 0
    m: int = 0

    @staticmethod
    def percent_off(percent: int) -> "OfferRule":
        return OfferRule(kind="percent_off", percent=percent)

    @staticmethod
    def buy_n_get_m_free(n: int, m: int) -> "OfferRule":
        return OfferRule(kind="buy_n_get_m_free", n=n, m=m)

    def validate(self) -> None:
        if self.kind == "percent_off":
            if not 0 <= self.percent <= 100:
                raise errors.BadRule(f"percent {self.percent} out of range 0-100")
        elif self.kind == "buy_n_get_m_free":
            if self.n < 1 or self.m < 1:
                raise errors.BadRule("n and m must both be >= 1")
        else:
            raise errors.BadRule(f"unknown rule kind {self.kind!r}")

    def to_json(self) -> str:
        if self.kind == "percent_off":
            return json.dumps({"kind": self.kind, "percent": self.percent})
        return json.dumps({"kind": self.kind, "n": self.n, "m": self.m})

    @staticmethod
    def from_json(text: str) -> "OfferRule":
        data = json.loads(text)
        return OfferRule(
            kind=data["kind"],
            percent=data.get("percent", 0),
            n=data.get("n", 0),
            m=data.get("m", 0),
        )


@dataclass(frozen=True)
class Offer:
    id: str
    shop_id: str
    product_id: str
    rule: OfferRule
    active: bool


@dataclass(frozen=True)
class Recommendation:
    id: str
    customer_id: str
    product_id: str
    text: str
    created_at: float


@dataclass(frozen=True)
class Customer:
    id: str
    username: str
    password_hash: str
    email: str
    postal_address: str
    card_on_file: dict | None = None


def _require_admin(actor: Actor) -> None:
    if actor.role is not Role.ADMINISTRATOR:
        raise errors.Unauthorized("administrator role required")


def _require_manager(actor: Actor, shop_id: str) -> None:
    if actor.role is not Role.SHOP_MANAGER or actor.shop_id != shop_id:
        raise errors.NotShopManager(f"caller does not manage shop {shop_id}")


def category_from_row(row) -> Category:
    return Category(id=row["id"], name=row["name"])


def shop_from_row(row) -> Shop:
    return Shop(
        id=row["id"], name=row["name"], category_id=row["category_id"],
        floor=row["floor"], slot=row["slot"],
    )


def item_from_row(row) -> Item:
    return Item(id=row["id"], shop_id=row["shop_id"], name=row["name"])


def product_from_row(row) -> Product:
    return Product(
        id=row["id"], item_id=row["item_id"], name=row["name"],
        unit_price_minor=row["unit_price_minor"], kind=ProductKind(row["kind"]),
        stock=row["stock"],
    )


def offer_from_row(row) -> Offer:
    return Offer(
        id=row["id"], shop_id=row["shop_id"], product_id=row["product_id"],
        rule=OfferRule.from_json(row["rule"]), active=bool(row["active"]),
    )


class CatalogService:
    """Administrator and shop-management mutations over the catalog."""

    def __init__(self, db: Database):
        self.db = db

    # -- queries ---------------------------------------------------------

    def get_category(self, category_id: str) -> Category:
        row = self.db.query_one("SELECT * FROM categories WHERE id = ?", (category_id,))
        if row is None:
            raise errors.UnknownCategory(category_id)
        return category_from_row(row)

    def get_shop(self, shop_id: str) -> Shop:
        row = self.db.query_one("SELECT * FROM shops WHERE id = ?", (shop_id,))
        if row is None:
            raise errors.UnknownShop(shop_id)
        return shop_from_row(row)

    def get_item(self, item_id: str) -> Item:
        row = self.db.query_one("SELECT * FROM items WHERE id = ?", (item_id,))
        if row is None:
            raise errors.UnknownParent(f"no item {item_id}")
        return item_from_row(row)

    def get_product(self, product_id: str) -> Product:
        row = self.db.query_one("SELECT * FROM products WHERE id = ?", (product_id,))
        if row is None:
            raise errors.UnknownProduct(product_id)
        return product_from_row(row)

    def shop_of_product(self, product_id: str) -> Shop:
        item = self.get_item(self.get_product(product_id).item_id)
        return self.get_shop(item.shop_id)

    def all_shops(self) -> list[Shop]:
        return [shop_from_row(r) for r in self.db.query("SELECT * FROM shops ORDER BY id")]

    # -- administrator flows ----------------------------------------------

    def upsert_category(self, name: str, actor: Actor = ADMIN) -> Category:
        _require_admin(actor)
        if not name or not name.strip():
            raise errors.EmptyName("category name must be non-empty")
        name = name.strip()
        existing = self.db.query_one(
            "SELECT * FROM categories WHERE name_ci = ?", (name.lower(),)
        )
        if existing is not None:
            if existing["name"] != name:
                # A case-variant of an existing category is a different spelling
                # of the same name, not a new category.
                raise errors.DuplicateName(f"category {existing['name']!r} already exists")
            return category_from_row(existing)
        with self.db.transaction() as conn:
            cat_id = self.db.next_id("cat")
            conn.execute(
                "INSERT INTO categories (id, name, name_ci) VALUES (?, ?, ?)",
                (cat_id, name, name.lower()),
            )
        return Category(id=cat_id, name=name)

    def register_shop(self, name: str, category_id: str, floor: int, slot: int,
                      actor: Actor = ADMIN) -> Shop:
        _require_admin(actor)
        if not name or not name.strip():
            raise errors.EmptyName("shop name must be non-empty")
        if floor < 0 or slot < 0:
            raise errors.MallError(f"floor/slot must be non-negative, got ({floor}, {slot})")
        self.get_category(category_id)
        occupied = self.db.query_one(
            "SELECT id FROM shops WHERE floor = ? AND slot = ?", (floor, slot)
        )
        if occupied is not None:
            raise errors.SlotOccupied(f"({floor}, {slot}) taken by {occupied['id']}")
        with self.db.transaction() as conn:
            shop_id = self.db.next_id("shop")
            conn.execute(
                "INSERT INTO shops (id, name, category_id, floor, slot) VALUES (?, ?, ?, ?, ?)",
                (shop_id, name.strip(), category_id, floor, slot),
            )
        return Shop(id=shop_id, name=name.strip(), category_id=category_id, floor=floor, slot=slot)

    # -- shop-management flows ---------------------------------------------

    def add_item(self, shop_id: str, name: str, actor: Actor) -> Item:
        _require_manager(actor, shop_id)
        row = self.db.query_one("SELECT id FROM shops WHERE id = ?", (shop_id,))
        if row is None:
            raise errors.UnknownParent(f"no shop {shop_id}")
        if not name or not name.strip():
            raise errors.EmptyName("item name must be non-empty")
        with self.db.transaction() as conn:
            item_id = self.db.next_id("item")
            conn.execute(
                "INSERT INTO items (id, shop_id, name) VALUES (?, ?, ?)",
                (item_id, shop_id, name.strip()),
            )
        return Item(id=item_id, shop_id=shop_id, name=name.strip())

    def add_product(self, item_id: str, name: str, unit_price_minor: int,
                    kind: ProductKind, stock: int, actor: Actor) -> Product:
        row = self.db.query_one("SELECT * FROM items WHERE id = ?", (item_id,))
        if row is None:
            raise errors.UnknownParent(f"no item {item_id}")
        _require_manager(actor, row["shop_id"])
        if not name or not name.strip():
            raise errors.EmptyName("product name must be non-empty")
        if unit_price_minor < 0:
            raise errors.NegativePrice(f"unit price {unit_price_minor} < 0")
        if stock < 0:
            raise errors.NegativeStock(f"stock {stock} < 0")
        kind = ProductKind(kind)
        with self.db.transaction() as conn:
            product_id = self.db.next_id("prod")
            conn.execute(
                "INSERT INTO products (id, item_id, name, unit_price_minor, kind, stock) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (product_id, item_id, name.strip(), unit_price_minor, kind.value, stock),
            )
        return Product(id=product_id, item_id=item_id, name=name.strip(),
                       unit_price_minor=unit_price_minor, kind=kind, stock=stock)

    def add_offer(self, shop_id: str, product_id: str, rule: OfferRule,
                  actor: Actor, active: bool = True) -> Offer:
        _require_manager(actor, shop_id)
        self.get_shop(shop_id)
        owning = self.shop_of_product(product_id)
        if owning.id != shop_id:
            raise errors.ForeignProduct(f"{product_id} belongs to {owning.id}, not {shop_id}")
        rule.validate()
        with self.db.transaction() as conn:
            offer_id = self.db.next_id("off")
            conn.execute(
                "INSERT INTO offers (id, shop_id, product_id, rule, active) VALUES (?, ?, ?, ?, ?)",
                (offer_id, shop_id, product_id, rule.to_json(), 1 if active else 0),
            )
        return Offer(id=offer_id, shop_id=shop_id, product_id=product_id, rule=rule, active=active)

    # -- integrity ----------------------------------------------------------

    def integrity_violations(self) -> list[str]:
        """Dangling references anywhere in the entity graph (expected: none)."""
        checks = [
            ("shop {} -> category {}",
             "SELECT s.id, s.category_id FROM shops s LEFT JOIN categories c ON s.category_id = c.id WHERE c.id IS NULL"),
            ("item {} -> shop {}",
             "SELECT i.id, i.shop_id FROM items i LEFT JOIN shops s ON i.shop_id = s.id WHERE s.id IS NULL"),
            ("product {} -> item {}",
             "SELECT p.id, p.item_id FROM products p LEFT JOIN items i ON p.item_id = i.id WHERE i.id IS NULL"),
            ("offer {} -> product {}",
             "SELECT o.id, o.product_id FROM offers o LEFT JOIN products p ON o.product_id = p.id WHERE p.id IS NULL"),
            ("recommendation {} -> product {}",
             "SELECT r.id, r.product_id FROM recommendations r LEFT JOIN products p ON r.product_id = p.id WHERE p.id IS NULL"),
            ("recommendation {} -> customer {}",
             "SELECT r.id, r.customer_id FROM recommendations r LEFT JOIN customers c ON r.customer_id = c.id WHERE c.id IS NULL"),
        ]
        out = []
        for template, sql in checks:
            for row in self.db.query(sql):
                out.append(template.format(row[0], row[1]))
        # Ownership closure: an offer's shop must own the offered product.
        for row in self.db.query(
            "SELECT o.id FROM offers o JOIN products p ON o.product_id = p.id "
            "JOIN items i ON p.item_id = i.id WHERE i.shop_id != o.shop_id"
        ):
            out.append(f"offer {row[0]} not owned by its shop")
        return out
