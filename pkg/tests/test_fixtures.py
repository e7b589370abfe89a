"""Fixture parsing, atomic load, and the shipped demo file."""

import json
from pathlib import Path

import pytest

from vmall import errors
from vmall.fixtures import demo_fixture, parse_fixture
from vmall.payments import CardDetails

DEMO_PATH = Path(__file__).resolve().parent.parent / "fixtures" / "demo.json"


def test_load_counts(mall):
    counts = mall.load_fixture(demo_fixture())
    assert counts["categories"] == 3
    assert counts["shops"] == 5
    assert counts["products"] == 20


def test_load_is_atomic_on_broken_reference(mall):
    fixture = demo_fixture()
    fixture["offers"].append({
        "id": "off-broken", "shop_id": "shop-elegance", "product_id": "prod-missing",
        "rule": {"kind": "percent_off", "percent": 5}})
    with pytest.raises(errors.IntegrityError) as err:
        mall.load_fixture(fixture)
    assert "prod-missing" in str(err.value)
    assert mall.storefront.list_categories() == []  # nothing loaded


def test_empty_file_parse_error():
    with pytest.raises(errors.ParseError):
        parse_fixture("")
    with pytest.raises(errors.ParseError):
        parse_fixture("{not json")


def test_duplicate_slot_rejected(mall):
    fixture = demo_fixture()
    fixture["shops"][1]["floor"] = fixture["shops"][0]["floor"]
    fixture["shops"][1]["slot"] = fixture["shops"][0]["slot"]
    with pytest.raises(errors.IntegrityError):
        mall.load_fixture(fixture)


def test_offer_ownership_enforced(mall):
    fixture = demo_fixture()
    fixture["offers"][0]["shop_id"] = "shop-dapper"  # dress belongs to elegance
    with pytest.raises(errors.IntegrityError):
        mall.load_fixture(fixture)


def test_account_requires_known_bank(mall):
    fixture = demo_fixture()
    fixture["accounts"][0]["bank_id"] = "ghostbank"
    with pytest.raises(errors.IntegrityError):
        mall.load_fixture(fixture)


def test_shipped_demo_file_matches_generator():
    on_disk = json.loads(DEMO_PATH.read_text(encoding="utf-8"))
    assert on_disk == demo_fixture()


def test_customer_card_binds_account_fingerprint(seeded):
    card = CardDetails("Amal K", "4111111111111111", 12, 2030)
    account = seeded.payments.find_account_by_card(card)
    assert account is not None
    assert account.account_id == "acct-amal"


def test_fee_schedule_and_layout_loaded(seeded):
    assert seeded.payments.fee_schedule.gateway_percent_bp == 290
    assert seeded.layout().floors == 2
