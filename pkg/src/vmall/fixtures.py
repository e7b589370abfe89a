"""Fixture ingestion: seed the full entity graph in one atomic load.

A fixture is a JSON document with the complete seed graph (categories, shops,
items, products, offers, customers, banks, accounts, plus optional
fee_schedule and layout). The load validates every reference up front and
inserts everything in a single transaction; the first violated reference
aborts the whole load.
"""

from __future__ import annotations

import json
from pathlib import Path

from . import errors
from .auth import hash_password
from .domain import OfferRule
from .payments import CardDetails, FeeSchedule
from .scene import MallLayout
from .storage import Database

_ENTITY_KEYS = ("categories", "shops", "items", "products", "offers",
                "customers", "banks", "accounts")


def parse_fixture(text: str) -> dict:
    if not text.strip():
        raise errors.ParseError("fixture file is empty")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise errors.ParseError(f"malformed JSON at line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise errors.ParseError("fixture root must be an object")
    return data


def _check(condition: bool, reference: str) -> None:
    if not condition:
        raise errors.IntegrityError(reference)


def validate_fixture(data: dict) -> None:
    """All referential and field checks, before anything is written."""
    categories = {c["id"] for c in data.get("categories", [])}
    shops = {s["id"] for s in data.get("shops", [])}
    items = {i["id"] for i in data.get("items", [])}
    products = {p["id"] for p in data.get("products", [])}
    customers = {c["id"] for c in data.get("customers", [])}
    banks = {b["id"] for b in data.get("banks", [])}

    seen_slots = set()
    for shop in data.get("shops", []):
        _check(shop["category_id"] in categories, f"shop {shop['id']} -> category {shop['category_id']}")
        slot = (shop["floor"], shop["slot"])
        _check(slot not in seen_slots, f"shop {shop['id']} -> slot {slot} already taken")
        seen_slots.add(slot)
    item_shop = {}
    for item in data.get("items", []):
        _check(item["shop_id"] in shops, f"item {item['id']} -> shop {item['shop_id']}")
        item_shop[item["id"]] = item["shop_id"]
    product_shop = {}
    for product in data.get("products", []):
        _check(product["item_id"] in items, f"product {product['id']} -> item {product['item_id']}")
        _check(product["unit_price_minor"] >= 0, f"product {product['id']} -> negative price")
        _check(product["stock"] >= 0, f"product {product['id']} -> negative stock")
        _check(product["kind"] in ("physical", "digital"),
               f"product {product['id']} -> kind {product['kind']}")
        product_shop[product["id"]] = item_shop[product["item_id"]]
    for offer in data.get("offers", []):
        _check(offer["shop_id"] in shops, f"offer {offer['id']} -> shop {offer['shop_id']}")
        _check(offer["product_id"] in products,
               f"offer {offer['id']} -> product {offer['product_id']}")
        _check(product_shop[offer["product_id"]] == offer["shop_id"],
               f"offer {offer['id']} -> product {offer['product_id']} owned by another shop")
        try:
            OfferRule(kind=offer["rule"]["kind"],
                      percent=offer["rule"].get("percent", 0),
                      n=offer["rule"].get("n", 0), m=offer["rule"].get("m", 0)).validate()
        except errors.BadRule as exc:
            raise errors.IntegrityError(f"offer {offer['id']} -> bad rule: {exc}") from exc
    usernames = set()
    for customer in data.get("customers", []):
        _check(customer["username"] not in usernames,
               f"customer {customer['id']} -> duplicate username {customer['username']}")
        usernames.add(customer["username"])
        _check("@" in customer["email"], f"customer {customer['id']} -> email {customer['email']}")
    for account in data.get("accounts", []):
        _check(account["bank_id"] in banks,
               f"account {account['id']} -> bank {account['bank_id']}")
        owner = account["owner"]
        if owner["kind"] == "customer":
            _check(owner["ref"] in customers,
                   f"account {account['id']} -> customer {owner['ref']}")
        elif owner["kind"] == "merchant":
            _check(owner["ref"] in shops, f"account {account['id']} -> shop {owner['ref']}")


def load_fixture(db: Database, data: dict) -> dict:
    """Atomic all-or-nothing load; returns per-entity counts."""
    validate_fixture(data)
    card_by_customer = {
        c["id"]: c.get("card") for c in data.get("customers", []) if c.get("card")
    }
    with db.transaction() as conn:
        for c in data.get("categories", []):
            conn.execute("INSERT INTO categories (id, name, name_ci) VALUES (?, ?, ?)",
                         (c["id"], c["name"], c["name"].lower()))
        for s in data.get("shops", []):
            conn.execute(
                "INSERT INTO shops (id, name, category_id, floor, slot) VALUES (?, ?, ?, ?, ?)",
                (s["id"], s["name"], s["category_id"], s["floor"], s["slot"]))
        for i in data.get("items", []):
            conn.execute("INSERT INTO items (id, shop_id, name) VALUES (?, ?, ?)",
                         (i["id"], i["shop_id"], i["name"]))
        for p in data.get("products", []):
            conn.execute(
                "INSERT INTO products (id, item_id, name, unit_price_minor, kind, stock) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (p["id"], p["item_id"], p["name"], p["unit_price_minor"], p["kind"], p["stock"]))
        for o in data.get("offers", []):
            rule = OfferRule(kind=o["rule"]["kind"], percent=o["rule"].get("percent", 0),
                             n=o["rule"].get("n", 0), m=o["rule"].get("m", 0))
            conn.execute(
                "INSERT INTO offers (id, shop_id, product_id, rule, active) VALUES (?, ?, ?, ?, ?)",
                (o["id"], o["shop_id"], o["product_id"], rule.to_json(),
                 1 if o.get("active", True) else 0))
        for c in data.get("customers", []):
            conn.execute(
                "INSERT INTO customers (id, username, password_hash, email, postal_address, card_json) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (c["id"], c["username"], hash_password(c["password"]), c["email"],
                 c["postal_address"], json.dumps(c["card"]) if c.get("card") else None))
        for b in data.get("banks", []):
            conn.execute("INSERT OR IGNORE INTO banks (id, name) VALUES (?, ?)",
                         (b["id"], b.get("name", b["id"])))
            for suffix in ("settlement", "income"):
                conn.execute(
                    "INSERT OR IGNORE INTO accounts (id, owner_kind, owner_ref, bank_id, balance_minor) "
                    "VALUES (?, 'bank', ?, ?, 0)",
                    (f"{b['id']}.{suffix}", b["id"], b["id"]))
        for a in data.get("accounts", []):
            owner = a["owner"]
            fingerprint = None
            pan = a.get("pan")
            if pan is None and owner["kind"] == "customer":
                card = card_by_customer.get(owner["ref"])
                pan = card["pan"] if card else None
            if pan is not None:
                fingerprint = CardDetails("x", pan, 1, 2000).fingerprint()
            conn.execute(
                "INSERT INTO accounts (id, owner_kind, owner_ref, bank_id, balance_minor, "
                "held_minor, card_fingerprint) VALUES (?, ?, ?, ?, ?, 0, ?)",
                (a["id"], owner["kind"], owner.get("ref"), a["bank_id"],
                 a.get("balance_minor", 0), fingerprint))
        if "fee_schedule" in data:
            schedule = FeeSchedule.from_dict(data["fee_schedule"])
            conn.execute(
                "INSERT INTO settings (key, value) VALUES ('fee_schedule', ?) "
                "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (json.dumps(schedule.to_dict()),))
        if "layout" in data:
            layout = MallLayout.from_dict(data["layout"])
            conn.execute(
                "INSERT INTO settings (key, value) VALUES ('layout', ?) "
                "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (json.dumps(layout.to_dict()),))
    counts = {key: len(data.get(key, [])) for key in _ENTITY_KEYS}
    return counts


def load_fixture_file(db: Database, path: str | Path) -> dict:
    return load_fixture(db, parse_fixture(Path(path).read_text(encoding="utf-8")))


def demo_fixture() -> dict:
    """The demo mall: 3 categories, 5 shops, 20 products, offers, two
    customers with bank accounts, and the default fee schedule."""
    return {
        "categories": [
            {"id": "cat-womens", "name": "Women's wear"},
            {"id": "cat-mens", "name": "Men's wear"},
            {"id": "cat-kids", "name": "Kids"},
        ],
        "shops": [
            {"id": "shop-elegance", "name": "Elegance", "category_id": "cat-womens",
             "floor": 0, "slot": 0},
            {"id": "shop-dapper", "name": "Dapper", "category_id": "cat-mens",
             "floor": 0, "slot": 1},
            {"id": "shop-littlestars", "name": "Little Stars", "category_id": "cat-kids",
             "floor": 0, "slot": 2},
            {"id": "shop-silkstone", "name": "Silk & Stone", "category_id": "cat-womens",
             "floor": 1, "slot": 0},
            {"id": "shop-playroom", "name": "Playroom", "category_id": "cat-kids",
             "floor": 1, "slot": 1},
        ],
        "items": [
            {"id": "item-eleg-clothes", "shop_id": "shop-elegance", "name": "women clothes"},
            {"id": "item-eleg-perfumes", "shop_id": "shop-elegance", "name": "perfumes"},
            {"id": "item-dapper-wear", "shop_id": "shop-dapper", "name": "men wear"},
            {"id": "item-stars-clothes", "shop_id": "shop-littlestars", "name": "kids clothes"},
            {"id": "item-stars-games", "shop_id": "shop-littlestars", "name": "kids games"},
            {"id": "item-silk-clothes", "shop_id": "shop-silkstone", "name": "women clothes"},
            {"id": "item-play-games", "shop_id": "shop-playroom", "name": "kids games"},
        ],
        "products": [
            {"id": "prod-dress", "item_id": "item-eleg-clothes", "name": "dress",
             "unit_price_minor": 2000, "kind": "physical", "stock": 10},
            {"id": "prod-gown", "item_id": "item-eleg-clothes", "name": "evening gown",
             "unit_price_minor": 12000, "kind": "physical", "stock": 5},
            {"id": "prod-scarf", "item_id": "item-eleg-clothes", "name": "silk scarf",
             "unit_price_minor": 1500, "kind": "physical", "stock": 20},
            {"id": "prod-blouse", "item_id": "item-eleg-clothes", "name": "blouse",
             "unit_price_minor": 2500, "kind": "physical", "stock": 8},
            {"id": "prod-rose", "item_id": "item-eleg-perfumes", "name": "rose perfume",
             "unit_price_minor": 3000, "kind": "physical", "stock": 12},
            {"id": "prod-jasmine", "item_id": "item-eleg-perfumes", "name": "jasmine perfume",
             "unit_price_minor": 3500, "kind": "physical", "stock": 0},
            {"id": "prod-suit", "item_id": "item-dapper-wear", "name": "suit",
             "unit_price_minor": 25000, "kind": "physical", "stock": 4},
            {"id": "prod-shirt", "item_id": "item-dapper-wear", "name": "shirt",
             "unit_price_minor": 1800, "kind": "physical", "stock": 30},
            {"id": "prod-tie", "item_id": "item-dapper-wear", "name": "tie",
             "unit_price_minor": 900, "kind": "physical", "stock": 50},
            {"id": "prod-belt", "item_id": "item-dapper-wear", "name": "leather belt",
             "unit_price_minor": 1200, "kind": "physical", "stock": 15},
            {"id": "prod-kidstee", "item_id": "item-stars-clothes", "name": "kids t-shirt",
             "unit_price_minor": 800, "kind": "physical", "stock": 40},
            {"id": "prod-boots", "item_id": "item-stars-clothes", "name": "rain boots",
             "unit_price_minor": 1400, "kind": "physical", "stock": 10},
            {"id": "prod-advgame", "item_id": "item-stars-games", "name": "adventure game download",
             "unit_price_minor": 1999, "kind": "digital", "stock": 999},
            {"id": "prod-mathapp", "item_id": "item-stars-games", "name": "math tutor app",
             "unit_price_minor": 999, "kind": "digital", "stock": 999},
            {"id": "prod-summerdress", "item_id": "item-silk-clothes", "name": "summer dress",
             "unit_price_minor": 2200, "kind": "physical", "stock": 7},
            {"id": "prod-cardigan", "item_id": "item-silk-clothes", "name": "cardigan",
             "unit_price_minor": 2800, "kind": "physical", "stock": 9},
            {"id": "prod-dress2", "item_id": "item-silk-clothes", "name": "dress",
             "unit_price_minor": 2100, "kind": "physical", "stock": 5},
            {"id": "prod-puzzle", "item_id": "item-play-games", "name": "puzzle box",
             "unit_price_minor": 1100, "kind": "physical", "stock": 25},
            {"id": "prod-boardgame", "item_id": "item-play-games", "name": "board game",
             "unit_price_minor": 1700, "kind": "physical", "stock": 14},
            {"id": "prod-codingapp", "item_id": "item-play-games", "name": "coding for kids app",
             "unit_price_minor": 1499, "kind": "digital", "stock": 999},
        ],
        "offers": [
            {"id": "off-b1g1-dress", "shop_id": "shop-elegance", "product_id": "prod-dress",
             "rule": {"kind": "buy_n_get_m_free", "n": 1, "m": 1}, "active": True},
            {"id": "off-suit-10", "shop_id": "shop-dapper", "product_id": "prod-suit",
             "rule": {"kind": "percent_off", "percent": 10}, "active": True},
            {"id": "off-scarf-inactive", "shop_id": "shop-elegance", "product_id": "prod-scarf",
             "rule": {"kind": "percent_off", "percent": 50}, "active": False},
        ],
        "customers": [
            {"id": "cust-amal", "username": "amal", "password": "pw1",
             "email": "amal@example.com", "postal_address": "12 High St",
             "card": {"holder_name": "Amal K", "pan": "4111111111111111",
                      "expiry_month": 12, "expiry_year": 2030}},
            {"id": "cust-besim", "username": "besim", "password": "pw2",
             "email": "besim@example.com", "postal_address": "9 Lake Rd",
             "card": {"holder_name": "Besim T", "pan": "5555555555554444",
                      "expiry_month": 6, "expiry_year": 2031}},
        ],
        "banks": [
            {"id": "firstbank", "name": "First National Bank"},
            {"id": "shopbank", "name": "Merchant Commerce Bank"},
        ],
        "accounts": [
            {"id": "acct-amal", "owner": {"kind": "customer", "ref": "cust-amal"},
             "bank_id": "firstbank", "balance_minor": 100000},
            {"id": "acct-besim", "owner": {"kind": "customer", "ref": "cust-besim"},
             "bank_id": "firstbank", "balance_minor": 500},
            {"id": "acct-elegance", "owner": {"kind": "merchant", "ref": "shop-elegance"},
             "bank_id": "shopbank", "balance_minor": 0},
            {"id": "acct-dapper", "owner": {"kind": "merchant", "ref": "shop-dapper"},
             "bank_id": "shopbank", "balance_minor": 0},
            {"id": "acct-littlestars", "owner": {"kind": "merchant", "ref": "shop-littlestars"},
             "bank_id": "shopbank", "balance_minor": 0},
            {"id": "acct-silkstone", "owner": {"kind": "merchant", "ref": "shop-silkstone"},
             "bank_id": "shopbank", "balance_minor": 0},
            {"id": "acct-playroom", "owner": {"kind": "merchant", "ref": "shop-playroom"},
             "bank_id": "shopbank", "balance_minor": 0},
        ],
        "fee_schedule": {
            "gateway": {"percent_bp": 290, "fixed_minor": 30},
            "merchant_bank": {"per_txn_fixed_minor": 25},
            "clearinghouse": {"per_txn_fixed_minor": 0},
        },
        "layout": {
            "floors": 2, "slots_per_floor": 3, "corridor_width_m": 3.0,
            "shop_width_m": 6.0, "shop_depth_m": 5.0, "floor_height_m": 3.0,
        },
    }
