"""Payment pipeline: checksum oracle, fees, holds, settlement, conservation."""

import math
import random
from fractions import Fraction

import pytest

from vmall import Mall, SimClock, errors
from vmall.payments import (
    CardDetails,
    FeeSchedule,
    GatewayRequest,
    Routing,
    canonical_request,
    validate_card_details,
)
from tests.conftest import make_config


def checksum_oracle(pan: str) -> bool:
    """Independent digit-doubling oracle: sums the decimal digits of each
    doubled product instead of subtracting nine."""
    total = 0
    for i, ch in enumerate(reversed(pan)):
        d = int(ch)
        if i % 2 == 1:
            d = sum(int(c) for c in str(2 * d))
        total += d
    return total % 10 == 0


def make_valid_pan(rng: random.Random, length: int) -> str:
    """Random PAN with a correct check digit (built from the oracle)."""
    body = [rng.randrange(10) for _ in range(length - 1)]
    for check in range(10):
        pan = "".join(map(str, body)) + str(check)
        if checksum_oracle(pan):
            return pan
    raise AssertionError("unreachable")


VALID_CARD = CardDetails("Amal K", "4111111111111111", 12, 2030)


class TestValidateCardDetails:
    def test_known_good_pan(self):
        assert checksum_oracle("4111111111111111")  # oracle agrees first
        assert validate_card_details(VALID_CARD, 0.0).valid

    def test_known_bad_pan(self):
        assert not checksum_oracle("4111111111111112")
        got = validate_card_details(
            CardDetails("Amal K", "4111111111111112", 12, 2030), 0.0)
        assert (got.valid, got.reason) == (False, "BadChecksum")

    def test_empty_name(self):
        got = validate_card_details(CardDetails("", "4111111111111111", 12, 2030), 0.0)
        assert got.reason == "EmptyName"

    @pytest.mark.parametrize("pan", ["4111", "x" * 12, "1" * 20, "411111111111111a"])
    def test_bad_format(self, pan):
        got = validate_card_details(CardDetails("A", pan, 12, 2030), 0.0)
        assert got.reason == "BadPanFormat"

    def test_expired(self):
        # simulation clock 0.0 is January 1970
        got = validate_card_details(CardDetails("A", "4111111111111111", 12, 1969), 0.0)
        assert got.reason == "Expired"
        got = validate_card_details(CardDetails("A", "4111111111111111", 13, 2030), 0.0)
        assert got.reason == "Expired"

    def test_agreement_with_oracle_on_random_pans(self):
        rng = random.Random(42)
        for _ in range(2000):
            length = rng.randint(12, 19)
            pan = "".join(str(rng.randrange(10)) for _ in range(length))
            card = CardDetails("A", pan, 12, 2030)
            assert validate_card_details(card, 0.0).valid == checksum_oracle(pan)


@pytest.fixture
def net(tmp_path):
    mall = Mall(make_config(tmp_path), clock=SimClock())
    network = mall.payments
    network.register_bank("custbank", "Customer Bank")
    network.register_bank("merchbank", "Merchant Bank")
    network.open_account("acct-c1", "customer", "cust-1", "custbank", 100_000, VALID_CARD)
    network.open_account("acct-m1", "merchant", "shop-1", "merchbank", 0)
    yield network
    mall.close()


def authorize(net, amount=10_000, card=VALID_CARD, merchant="shop-1"):
    routing = net.routing_for_card(card, merchant)
    req = net.format_gateway_request(amount, card, merchant, routing)
    return req, net.gateway_authorize(req)


class TestGateway:
    def test_format_request_copies_amount(self, net):
        routing = net.routing_for_card(VALID_CARD, "shop-1")
        req = net.format_gateway_request(2500, VALID_CARD, "shop-1", routing)
        assert req.amount_minor == 2500
        assert req.customer_bank_id == "custbank"
        assert req.merchant_bank_id == "merchbank"

    def test_format_request_zero_amount(self, net):
        routing = net.routing_for_card(VALID_CARD, "shop-1")
        with pytest.raises(errors.ZeroAmount):
            net.format_gateway_request(0, VALID_CARD, "shop-1", routing)

    def test_format_request_unknown_bank(self, net):
        with pytest.raises(errors.UnknownBank):
            net.format_gateway_request(100, VALID_CARD, "shop-1",
                                       Routing("nowhere", "merchbank"))

    def test_canonical_serialization_keys_sorted_no_full_pan(self, net):
        req = GatewayRequest("txn-000001", "shop-1", 2500, VALID_CARD,
                             "custbank", "merchbank")
        text = canonical_request(req)
        assert text == ("amount_minor=2500\n"
                        "expiry=2030-12\n"
                        "merchant_id=shop-1\n"
                        "pan_last4=1111\n"
                        "txn_id=txn-000001")
        assert "4111111111111111" not in text

    def test_authorize_approves_and_holds(self, net):
        _, result = authorize(net, 10_000)
        assert result.approved
        acct = net.get_account("acct-c1")
        assert acct.balance_minor == 100_000  # money not moved yet
        assert acct.held_minor == 10_000
        assert acct.available_minor == 90_000

    def test_authorize_insufficient_funds(self, net):
        _, result = authorize(net, 100_001)
        assert (result.approved, result.reason) == (False, "InsufficientFunds")
        acct = net.get_account("acct-c1")
        assert (acct.balance_minor, acct.held_minor) == (100_000, 0)
        assert net.ledger_entries() == []

    def test_authorize_invalid_card(self, net):
        bad = CardDetails("A", "4111111111111112", 12, 2030)
        routing = Routing("custbank", "merchbank")
        req = net.format_gateway_request(100, bad, "shop-1", routing)
        result = net.gateway_authorize(req)
        assert result.reason == "InvalidCard"

    def test_authorize_unknown_account(self, net):
        stranger = CardDetails("A", "5555555555554444", 12, 2030)
        routing = Routing("custbank", "merchbank")
        req = net.format_gateway_request(100, stranger, "shop-1", routing)
        result = net.gateway_authorize(req)
        assert result.reason == "UnknownAccount"

    def test_gateway_fee_formula(self, net):
        # DERIVED: ceil(10000 * 290 / 10000) + 30 = 290 + 30
        assert math.ceil(Fraction(10_000 * 290, 10_000)) + 30 == 320
        _, result = authorize(net, 10_000)
        assert result.gateway_fee_minor == 320

    def test_holds_stack_until_available_exhausted(self, net):
        for _ in range(10):
            assert authorize(net, 10_000)[1].approved
        assert net.get_account("acct-c1").available_minor == 0
        assert authorize(net, 1)[1].reason == "InsufficientFunds"


class TestBatching:
    def test_fifo_batch(self, net):
        ids = [authorize(net, 100 * (i + 1))[1].txn_id for i in range(3)]
        batch = net.batch_transactions()
        assert list(batch.txn_ids) == ids
        for txn_id in ids:
            assert net.get_txn(txn_id).state == "batched"

    def test_nothing_to_batch(self, net):
        with pytest.raises(errors.NothingToBatch):
            net.batch_transactions()

    def test_capacity_rule(self, net):
        net.open_account("acct-rich", "customer", "cust-2", "custbank", 10**9,
                         CardDetails("R", "5555555555554444", 1, 2035))
        card = CardDetails("R", "5555555555554444", 1, 2035)
        for _ in range(250):
            assert authorize(net, 100, card=card)[1].approved
        sizes = [len(net.batch_transactions(100).txn_ids) for _ in range(3)]
        assert sizes == [100, 100, 50]
        with pytest.raises(errors.NothingToBatch):
            net.batch_transactions(100)


class TestSettlement:
    def test_settle_example_two_txns(self, tmp_path):
        """DERIVED: batch {10000, 5000} at 2% + 0 fixed, zero other fees."""
        mall = Mall(make_config(tmp_path, fee_schedule=FeeSchedule(200, 0, 0, 0)),
                    clock=SimClock())
        net = mall.payments
        net.register_bank("custbank")
        net.register_bank("merchbank")
        net.open_account("acct-c1", "customer", "cust-1", "custbank", 100_000, VALID_CARD)
        net.open_account("acct-m1", "merchant", "shop-1", "merchbank", 0)
        authorize(net, 10_000)
        authorize(net, 5_000)
        batch = net.batch_transactions()
        settlement = net.clearinghouse_settle(batch.batch_id)
        assert settlement.customer_debit_total == 15_000
        assert net.get_account("acct-c1").balance_minor == 85_000
        # per-txn oracle: 10000 - 200 and 5000 - 100
        assert net.get_account("merchbank.settlement").balance_minor == 9_800 + 4_900
        assert net.get_account("gateway.fees").balance_minor == 200 + 100
        mall.close()

    def test_settle_twice_rejected(self, net):
        authorize(net)
        batch = net.batch_transactions()
        net.clearinghouse_settle(batch.batch_id)
        before = net.ledger_entries()
        with pytest.raises(errors.AlreadySettled):
            net.clearinghouse_settle(batch.batch_id)
        assert net.ledger_entries() == before

    def test_settle_unknown_batch(self, net):
        with pytest.raises(errors.UnknownBatch):
            net.clearinghouse_settle("batch-nope")

    def test_zero_fee_identity(self, tmp_path):
        mall = Mall(make_config(tmp_path, fee_schedule=FeeSchedule(0, 0, 0, 0)),
                    clock=SimClock())
        net = mall.payments
        net.register_bank("custbank")
        net.register_bank("merchbank")
        net.open_account("acct-c1", "customer", "cust-1", "custbank", 50_000, VALID_CARD)
        net.open_account("acct-m1", "merchant", "shop-1", "merchbank", 0)
        authorize(net, 12_345)
        batch = net.batch_transactions()
        net.clearinghouse_settle(batch.batch_id)
        assert net.get_account("merchbank.settlement").balance_minor == 12_345
        txn_id = net.get_txn(batch.txn_ids[0]).txn_id
        net.merchant_bank_post(txn_id)
        assert net.get_account("acct-m1").balance_minor == 12_345
        mall.close()

    def test_hold_consumed_at_settlement(self, net):
        authorize(net, 10_000)
        batch = net.batch_transactions()
        net.clearinghouse_settle(batch.batch_id)
        acct = net.get_account("acct-c1")
        assert (acct.balance_minor, acct.held_minor) == (90_000, 0)

    def test_net_positions_match_gross_sum(self, net):
        authorize(net, 10_000)
        authorize(net, 5_000)
        batch = net.batch_transactions()
        settlement = net.clearinghouse_settle(batch.batch_id)
        total_moved = sum(settlement.net_positions.values())
        assert total_moved == 0  # money moved, never created
        assert settlement.net_positions["custbank"] == -15_000


class TestPosting:
    def test_merchant_bank_post_subtracts_fee(self, net):
        # cleared = 10000 - 320 = 9680; merchant gets 9680 - 25
        _, result = authorize(net, 10_000)
        batch = net.batch_transactions()
        net.clearinghouse_settle(batch.batch_id)
        txn = net.merchant_bank_post(result.txn_id)
        assert txn.state == "posted"
        assert net.get_account("acct-m1").balance_minor == 9_655
        assert net.get_account("merchbank.income").balance_minor == 25
        assert net.get_account("merchbank.settlement").balance_minor == 0

    def test_post_twice_rejected(self, net):
        _, result = authorize(net)
        batch = net.batch_transactions()
        net.clearinghouse_settle(batch.batch_id)
        net.merchant_bank_post(result.txn_id)
        with pytest.raises(errors.WrongState):
            net.merchant_bank_post(result.txn_id)

    def test_post_requires_cleared(self, net):
        _, result = authorize(net)
        with pytest.raises(errors.WrongState):
            net.merchant_bank_post(result.txn_id)


class TestConservation:
    def test_double_entry_per_txn(self, net):
        for amount in (10_000, 5_000, 77):
            authorize(net, amount)
        net.settle_to_quiescence()
        per_txn: dict[str, int] = {}
        for entry in net.ledger_entries():
            sign = 1 if entry["direction"] == "credit" else -1
            per_txn[entry["txn_id"]] = per_txn.get(entry["txn_id"], 0) \
                + sign * entry["amount_minor"]
        assert per_txn and all(v == 0 for v in per_txn.values())

    def test_fee_exceeds_amount_still_balances(self, net):
        """A 1-minor-unit payment with fees above it keeps exact conservation."""
        initial = net.total_balance()
        _, result = authorize(net, 1)
        assert result.approved
        net.settle_to_quiescence()
        assert net.total_balance() == initial
        txn = net.get_txn(result.txn_id)
        merchant_net = sum(
            (1 if e["direction"] == "credit" else -1) * e["amount_minor"]
            for e in net.ledger_entries()
            if e["txn_id"] == txn.txn_id and e["account_id"] == "acct-m1")
        assert 1 == merchant_net + txn.gateway_fee_minor \
            + txn.clearinghouse_fee_minor + txn.merchant_bank_fee_minor

    def test_decline_purity(self, net):
        before_accounts = {a.account_id: (a.balance_minor, a.held_minor)
                           for a in net.accounts()}
        authorize(net, 10**9)  # insufficient funds
        bad = CardDetails("A", "4111111111111112", 12, 2030)
        req = net.format_gateway_request(100, bad, "shop-1", Routing("custbank", "merchbank"))
        net.gateway_authorize(req)
        assert net.ledger_entries() == []
        after = {a.account_id: (a.balance_minor, a.held_minor) for a in net.accounts()}
        assert after == before_accounts


def drive_random_stream(net, rng: random.Random, n_txns: int) -> None:
    """Random amounts 1..10^6, random valid/invalid/unknown cards."""
    banks = [f"bank-{i}" for i in range(4)]
    for bank in banks:
        net.register_bank(bank)
    cards = []
    for i in range(20):
        pan = make_valid_pan(rng, rng.randint(12, 19))
        card = CardDetails(f"Holder {i}", pan, 12, 2035)
        net.open_account(f"acct-c{i}", "customer", f"cust-{i}", rng.choice(banks),
                         rng.randrange(0, 2_000_000), card)
        cards.append(card)
    for i in range(5):
        net.open_account(f"acct-m{i}", "merchant", f"shop-{i}", rng.choice(banks), 0)
    for _ in range(n_txns):
        amount = rng.randint(1, 10**6)
        merchant = f"shop-{rng.randrange(5)}"
        roll = rng.random()
        if roll < 0.1:  # invalid card -> InvalidCard decline
            card = CardDetails("X", "4111111111111112", 12, 2030)
            routing = Routing(rng.choice(banks), rng.choice(banks))
        elif roll < 0.2:  # valid but unissued card -> UnknownAccount decline
            card = CardDetails("X", make_valid_pan(rng, 16), 12, 2035)
            routing = Routing(rng.choice(banks), rng.choice(banks))
        else:
            card = rng.choice(cards)
            routing = net.routing_for_card(card, merchant)
        req = net.format_gateway_request(amount, card, merchant, routing)
        net.gateway_authorize(req)


def run_settlement(net, max_batch: int) -> None:
    """Settle every pending batch, then post all cleared txns in FIFO order."""
    cleared: list[str] = []
    while True:
        try:
            batch = net.batch_transactions(max_batch)
        except errors.NothingToBatch:
            break
        cleared.extend(net.clearinghouse_settle(batch.batch_id).txn_ids)
    for txn_id in cleared:
        net.merchant_bank_post(txn_id)


def test_global_conservation_random_stream(tmp_path):
    mall = Mall(make_config(tmp_path), clock=SimClock())
    try:
        net = mall.payments
        rng = random.Random(11)
        initial_pre = net.total_balance()
        drive_random_stream(net, rng, 300)
        initial = net.total_balance()
        assert initial != initial_pre  # accounts funded
        net.settle_to_quiescence(max_batch=100)
        assert net.total_balance() == initial
        for account in net.accounts():
            if account.owner_kind == "customer":
                assert account.balance_minor >= 0
                assert account.held_minor == 0
    finally:
        mall.close()


def test_settlement_equivalence_batch_vs_replay(tmp_path):
    """Batch settlement and one-by-one replay produce byte-identical ledgers."""
    for seed in (3, 4):
        exports = []
        for mode, max_batch in (("batch", 10), ("replay", 1)):
            workdir = tmp_path / f"{mode}-{seed}"
            workdir.mkdir()
            mall = Mall(make_config(workdir), clock=SimClock())
            try:
                drive_random_stream(mall.payments, random.Random(seed), 10)
                run_settlement(mall.payments, max_batch)
                exports.append(mall.payments.export_ledger_csv())
            finally:
                mall.close()
        assert exports[0] == exports[1]


def test_ledger_export_format(net):
    authorize(net, 10_000)
    net.settle_to_quiescence()
    text = net.export_ledger_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "txn_id,account_id,direction,amount_minor,posted_at"
    assert len(lines) > 1
    for line in lines[1:]:
        txn_id, account_id, direction, amount, posted_at = line.split(",")
        assert direction in ("debit", "credit")
        assert int(amount) > 0
        float(posted_at)
    assert "4111111111111111" not in text


def test_full_pan_never_persisted(net):
    authorize(net, 10_000)
    net.settle_to_quiescence()
    for row in net.db.query("SELECT audit_text, card_last4 FROM txns"):
        assert "4111111111111111" not in (row["audit_text"] or "")
        assert row["card_last4"] == "1111"
