"""Catalog entities, mutation flows, and referential integrity."""

import random

import pytest

from vmall import errors
from vmall.domain import ADMIN, Actor, OfferRule, ProductKind, Role, shop_manager
from vmall.fixtures import demo_fixture


def test_upsert_category(mall):
    cat = mall.catalog.upsert_category("Women's wear")
    assert cat.name == "Women's wear"
    again = mall.catalog.upsert_category("Women's wear")
    assert again.id == cat.id


def test_upsert_category_idempotent_on_identical_name(mall):
    first = mall.catalog.upsert_category("Kids")
    second = mall.catalog.upsert_category("Kids")
    assert first.id == second.id
    assert len(mall.storefront.list_categories()) == 1


def test_upsert_category_empty_name(mall):
    with pytest.raises(errors.EmptyName):
        mall.catalog.upsert_category("")


def test_upsert_category_case_variant_rejected(mall):
    mall.catalog.upsert_category("Kids")
    with pytest.raises(errors.DuplicateName):
        mall.catalog.upsert_category("KIDS")


def test_upsert_category_requires_admin(mall):
    with pytest.raises(errors.Unauthorized):
        mall.catalog.upsert_category("Kids", actor=Actor(Role.CUSTOMER, customer_id="c1"))


def test_register_shop(mall):
    cat = mall.catalog.upsert_category("Women's wear")
    shop = mall.catalog.register_shop("Elegance", cat.id, 0, 0)
    assert (shop.floor, shop.slot) == (0, 0)
    assert shop.category_id == cat.id


def test_register_shop_slot_occupied(mall):
    cat = mall.catalog.upsert_category("Women's wear")
    mall.catalog.register_shop("Elegance", cat.id, 0, 0)
    with pytest.raises(errors.SlotOccupied):
        mall.catalog.register_shop("Other", cat.id, 0, 0)


def test_register_shop_unknown_category(mall):
    with pytest.raises(errors.UnknownCategory):
        mall.catalog.register_shop("Elegance", "cat-nope", 0, 0)


def _one_shop(mall):
    cat = mall.catalog.upsert_category("Women's wear")
    return mall.catalog.register_shop("Elegance", cat.id, 0, 0)


def test_add_item_and_product(mall):
    shop = _one_shop(mall)
    manager = shop_manager(shop.id)
    item = mall.catalog.add_item(shop.id, "women clothes", manager)
    assert item.shop_id == shop.id
    product = mall.catalog.add_product(item.id, "dress", 2000, ProductKind.PHYSICAL, 10, manager)
    assert product.unit_price_minor == 2000
    page = mall.storefront.get_shop_page(shop.id)
    assert [p.id for p in page["products"]] == [product.id]


def test_add_product_negative_price(mall):
    shop = _one_shop(mall)
    manager = shop_manager(shop.id)
    item = mall.catalog.add_item(shop.id, "women clothes", manager)
    with pytest.raises(errors.NegativePrice):
        mall.catalog.add_product(item.id, "dress", -1, ProductKind.PHYSICAL, 1, manager)
    with pytest.raises(errors.NegativeStock):
        mall.catalog.add_product(item.id, "dress", 1, ProductKind.PHYSICAL, -1, manager)


def test_add_item_wrong_manager(mall):
    shop = _one_shop(mall)
    with pytest.raises(errors.NotShopManager):
        mall.catalog.add_item(shop.id, "women clothes", shop_manager("shop-other"))
    with pytest.raises(errors.UnknownParent):
        mall.catalog.add_item("shop-nope", "x", shop_manager("shop-nope"))


def test_add_offer_rules(mall):
    shop = _one_shop(mall)
    manager = shop_manager(shop.id)
    item = mall.catalog.add_item(shop.id, "women clothes", manager)
    product = mall.catalog.add_product(item.id, "dress", 2000, ProductKind.PHYSICAL, 10, manager)
    offer = mall.catalog.add_offer(shop.id, product.id, OfferRule.buy_n_get_m_free(1, 1), manager)
    assert offer.active
    with pytest.raises(errors.BadRule):
        mall.catalog.add_offer(shop.id, product.id, OfferRule.percent_off(101), manager)
    with pytest.raises(errors.BadRule):
        mall.catalog.add_offer(shop.id, product.id, OfferRule.buy_n_get_m_free(0, 1), manager)


def test_add_offer_foreign_product(mall):
    cat = mall.catalog.upsert_category("Women's wear")
    shop_a = mall.catalog.register_shop("A", cat.id, 0, 0)
    shop_b = mall.catalog.register_shop("B", cat.id, 0, 1)
    manager_a = shop_manager(shop_a.id)
    item = mall.catalog.add_item(shop_a.id, "women clothes", manager_a)
    product = mall.catalog.add_product(item.id, "dress", 2000, ProductKind.PHYSICAL, 10, manager_a)
    with pytest.raises(errors.ForeignProduct):
        mall.catalog.add_offer(shop_b.id, product.id, OfferRule.percent_off(10),
                               shop_manager(shop_b.id))


def test_referential_integrity_after_random_mutations(mall):
    rng = random.Random(7)
    cats, shops, items, products = [], [], [], []
    slot = 0
    for step in range(200):
        move = rng.randrange(5)
        try:
            if move == 0 or not cats:
                cats.append(mall.catalog.upsert_category(f"cat {rng.randrange(30)}"))
            elif move == 1:
                cat = rng.choice(cats)
                shops.append(mall.catalog.register_shop(f"shop {slot}", cat.id, 0, slot))
                slot += 1
            elif move == 2 and shops:
                shop = rng.choice(shops)
                items.append(mall.catalog.add_item(shop.id, "stuff", shop_manager(shop.id)))
            elif move == 3 and items:
                item = rng.choice(items)
                shop_id = mall.catalog.get_item(item.id).shop_id
                products.append(mall.catalog.add_product(
                    item.id, "thing", rng.randrange(10000), ProductKind.PHYSICAL,
                    rng.randrange(50), shop_manager(shop_id)))
            elif move == 4 and products:
                product = rng.choice(products)
                shop = mall.catalog.shop_of_product(product.id)
                mall.catalog.add_offer(shop.id, product.id,
                                       OfferRule.percent_off(rng.randrange(101)),
                                       shop_manager(shop.id))
        except errors.DuplicateName:
            pass
    assert mall.catalog.integrity_violations() == []


def test_floor_slot_injectivity(seeded):
    shops = seeded.catalog.all_shops()
    positions = [(s.floor, s.slot) for s in shops]
    assert len(positions) == len(set(positions))


def test_round_trip_reload(tmp_path, seeded):
    """Reopening the database yields an identical entity graph."""
    from vmall import Mall
    from tests.conftest import make_config

    def graph(m):
        return {
            "categories": sorted(m.storefront.list_categories(), key=lambda c: c.id),
            "shops": sorted(m.catalog.all_shops(), key=lambda s: s.id),
            "pages": {s.id: m.storefront.get_shop_page(s.id) for s in m.catalog.all_shops()},
        }

    before = graph(seeded)
    reopened = Mall(make_config(tmp_path), clock=seeded.clock)
    try:
        assert graph(reopened) == before
        assert reopened.catalog.integrity_violations() == []
    finally:
        reopened.close()


def test_fixture_matches_demo_counts(seeded):
    report = seeded.storefront.admin_report(ADMIN)
    assert report["counts"]["categories"] == 3
    assert report["counts"]["shops"] == 5
    assert report["counts"]["products"] == 20
