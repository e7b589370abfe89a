"""Card-not-present payment network simulation.

The pipeline: card validation, gateway authorization (funds check + hold +
gateway fee), FIFO batching to the clearinghouse, interbank settlement, and
merchant-bank posting. Every movement of money is a double-entry ledger
posting, so per-transaction debits always equal credits and the sum of all
account balances is invariant under the whole pipeline.

Fees are snapshotted at approval time. A hold earmarks part of a customer
balance at authorization and is consumed at settlement; holds never create
ledger entries. Declines are values, not exceptions, and touch nothing.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field

from . import errors
from .clock import Clock
from .money import basis_point_fee
from .storage import Database

GATEWAY_BANK = "gateway"
GATEWAY_FEE_ACCOUNT = "gateway.fees"
CLEARINGHOUSE_BANK = "clearinghouse"
CLEARINGHOUSE_FEE_ACCOUNT = "clearinghouse.income"

DEFAULT_MAX_BATCH = 100

LEDGER_CSV_HEADER = "txn_id,account_id,direction,amount_minor,posted_at"


@dataclass(frozen=True)
class CardDetails:
    holder_name: str
    pan: str
    expiry_month: int
    expiry_year: int

    def last4(self) -> str:
        return self.pan[-4:]

    def fingerprint(self) -> str:
        # Never persist the PAN itself; accounts are bound to cards by digest.
        return hashlib.sha256(self.pan.encode()).hexdigest()[:32]


@dataclass(frozen=True)
class CardValidation:
    valid: bool
    reason: str | None = None  # EmptyName | BadPanFormat | BadChecksum | Expired


def checksum_ok(pan: str) -> bool:
    """Mod-10 rule: double every second digit from the right, sum the digits
    of the products, and require the total to be divisible by 10."""
    total = 0
    for i, ch in enumerate(reversed(pan)):
        d = int(ch)
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0


def validate_card_details(card: CardDetails, now: float) -> CardValidation:
    """Check name, PAN format, checksum, then expiry, in that order.

    Always returns a value; an out-of-range expiry month counts as Expired.
    """
    if not card.holder_name or not card.holder_name.strip():
        return CardValidation(False, "EmptyName")
    if not card.pan.isdigit() or not 12 <= len(card.pan) <= 19:
        return CardValidation(False, "BadPanFormat")
    if not checksum_ok(card.pan):
        return CardValidation(False, "BadChecksum")
    if not 1 <= card.expiry_month <= 12:
        return CardValidation(False, "Expired")
    t = time.gmtime(now)
    if (card.expiry_year, card.expiry_month) < (t.tm_year, t.tm_mon):
        return CardValidation(False, "Expired")
    return CardValidation(True)


@dataclass(frozen=True)
class FeeSchedule:
    gateway_percent_bp: int = 290
    gateway_fixed_minor: int = 30
    merchant_bank_per_txn_minor: int = 25
    clearinghouse_per_txn_minor: int = 0

    def __post_init__(self):
        for name in ("gateway_percent_bp", "gateway_fixed_minor",
                     "merchant_bank_per_txn_minor", "clearinghouse_per_txn_minor"):
            if getattr(self, name) < 0:
                raise errors.BadConfig(f"fee component {name} must be >= 0")

    def gateway_fee(self, amount_minor: int) -> int:
        return basis_point_fee(amount_minor, self.gateway_percent_bp) + self.gateway_fixed_minor

    def to_dict(self) -> dict:
        return {
            "gateway": {"percent_bp": self.gateway_percent_bp,
                        "fixed_minor": self.gateway_fixed_minor},
            "merchant_bank": {"per_txn_fixed_minor": self.merchant_bank_per_txn_minor},
            "clearinghouse": {"per_txn_fixed_minor": self.clearinghouse_per_txn_minor},
        }

    @staticmethod
    def from_dict(data: dict) -> "FeeSchedule":
        return FeeSchedule(
            gateway_percent_bp=data.get("gateway", {}).get("percent_bp", 290),
            gateway_fixed_minor=data.get("gateway", {}).get("fixed_minor", 30),
            merchant_bank_per_txn_minor=data.get("merchant_bank", {}).get("per_txn_fixed_minor", 25),
            clearinghouse_per_txn_minor=data.get("clearinghouse", {}).get("per_txn_fixed_minor", 0),
        )


@dataclass(frozen=True)
class Routing:
    customer_bank_id: str
    merchant_bank_id: str


@dataclass(frozen=True)
class GatewayRequest:
    txn_id: str
    merchant_id: str
    amount_minor: int
    card: CardDetails  # in-memory only, never persisted whole
    customer_bank_id: str
    merchant_bank_id: str


def canonical_request(req: GatewayRequest) -> str:
    """Key-sorted flat-map serialization used for audit logging.

    Only the last four PAN digits ever appear here.
    """
    fields = {
        "amount_minor": str(req.amount_minor),
        "expiry": f"{req.card.expiry_year:04d}-{req.card.expiry_month:02d}",
        "merchant_id": req.merchant_id,
        "pan_last4": req.card.last4(),
        "txn_id": req.txn_id,
    }
    return "\n".join(f"{key}={fields[key]}" for key in sorted(fields))


@dataclass(frozen=True)
class BankAccount:
    account_id: str
    owner_kind: str  # customer | merchant | gateway_operator | bank
    owner_ref: str | None
    bank_id: str
    balance_minor: int
    held_minor: int

    @property
    def available_minor(self) -> int:
        return self.balance_minor - self.held_minor


@dataclass(frozen=True)
class PaymentTransaction:
    txn_id: str
    state: str
    amount_minor: int
    merchant_id: str
    decline_reason: str | None = None
    gateway_fee_minor: int = 0
    merchant_bank_fee_minor: int = 0
    clearinghouse_fee_minor: int = 0
    customer_bank_id: str | None = None
    merchant_bank_id: str | None = None
    card_last4: str | None = None
    batch_id: str | None = None
    timestamps: dict = field(default_factory=dict)

    def cleared_amount_minor(self) -> int:
        return self.amount_minor - self.gateway_fee_minor - self.clearinghouse_fee_minor


@dataclass(frozen=True)
class AuthorizationResult:
    approved: bool
    txn_id: str
    reason: str | None = None
    gateway_fee_minor: int = 0


@dataclass(frozen=True)
class Batch:
    batch_id: str
    txn_ids: tuple[str, ...]


@dataclass(frozen=True)
class Settlement:
    batch_id: str
    txn_ids: tuple[str, ...]
    customer_debit_total: int
    net_positions: dict[str, int]  # bank_id -> signed balance change


class PaymentNetwork:
    """Banks, accounts, and the authorize/batch/settle/post pipeline."""

    def __init__(self, db: Database, clock: Clock):
        self.db = db
        self.clock = clock
        self._ensure_system_banks()

    def _ensure_system_banks(self) -> None:
        self.register_bank(GATEWAY_BANK, "Gateway Operator Bank")
        self.register_bank(CLEARINGHOUSE_BANK, "Clearinghouse")
        if self.db.query_one("SELECT id FROM accounts WHERE id = ?", (GATEWAY_FEE_ACCOUNT,)) is None:
            with self.db.transaction() as conn:
                conn.execute(
                    "INSERT INTO accounts (id, owner_kind, owner_ref, bank_id, balance_minor) "
                    "VALUES (?, 'gateway_operator', NULL, ?, 0)",
                    (GATEWAY_FEE_ACCOUNT, GATEWAY_BANK),
                )

    # -- configuration -----------------------------------------------------

    @property
    def fee_schedule(self) -> FeeSchedule:
        raw = self.db.get_setting("fee_schedule")
        return FeeSchedule.from_dict(json.loads(raw)) if raw else FeeSchedule()

    def set_fee_schedule(self, schedule: FeeSchedule) -> None:
        self.db.put_setting("fee_schedule", json.dumps(schedule.to_dict()))

    # -- banks and accounts ---------------------------------------------------

    def register_bank(self, bank_id: str, name: str | None = None) -> None:
        """Idempotent; every bank gets a settlement and an income account."""
        with self.db.transaction() as conn:
            conn.execute("INSERT OR IGNORE INTO banks (id, name) VALUES (?, ?)",
                         (bank_id, name or bank_id))
            for suffix in ("settlement", "income"):
                conn.execute(
                    "INSERT OR IGNORE INTO accounts (id, owner_kind, owner_ref, bank_id, balance_minor) "
                    "VALUES (?, 'bank', ?, ?, 0)",
                    (f"{bank_id}.{suffix}", bank_id, bank_id),
                )

    def bank_exists(self, bank_id: str) -> bool:
        return self.db.query_one("SELECT id FROM banks WHERE id = ?", (bank_id,)) is not None

    def open_account(self, account_id: str, owner_kind: str, owner_ref: str | None,
                     bank_id: str, balance_minor: int = 0,
                     card: CardDetails | None = None) -> BankAccount:
        if not self.bank_exists(bank_id):
            raise errors.UnknownBank(bank_id)
        with self.db.transaction() as conn:
            conn.execute(
                "INSERT INTO accounts (id, owner_kind, owner_ref, bank_id, balance_minor, "
                "held_minor, card_fingerprint) VALUES (?, ?, ?, ?, ?, 0, ?)",
                (account_id, owner_kind, owner_ref, bank_id, balance_minor,
                 card.fingerprint() if card else None),
            )
        return self.get_account(account_id)

    def get_account(self, account_id: str) -> BankAccount:
        row = self.db.query_one("SELECT * FROM accounts WHERE id = ?", (account_id,))
        if row is None:
            raise errors.UnknownAccount(account_id)
        return self._account_from_row(row)

    @staticmethod
    def _account_from_row(row) -> BankAccount:
        return BankAccount(
            account_id=row["id"], owner_kind=row["owner_kind"], owner_ref=row["owner_ref"],
            bank_id=row["bank_id"], balance_minor=row["balance_minor"],
            held_minor=row["held_minor"],
        )

    def accounts(self) -> list[BankAccount]:
        return [self._account_from_row(r) for r in self.db.query("SELECT * FROM accounts ORDER BY id")]

    def total_balance(self) -> int:
        return self.db.scalar("SELECT COALESCE(SUM(balance_minor), 0) FROM accounts")

    def find_account_by_card(self, card: CardDetails) -> BankAccount | None:
        row = self.db.query_one(
            "SELECT * FROM accounts WHERE card_fingerprint = ? ORDER BY id LIMIT 1",
            (card.fingerprint(),),
        )
        return self._account_from_row(row) if row else None

    def merchant_account(self, shop_id: str) -> BankAccount:
        row = self.db.query_one(
            "SELECT * FROM accounts WHERE owner_kind = 'merchant' AND owner_ref = ? "
            "ORDER BY id LIMIT 1", (shop_id,),
        )
        if row is None:
            raise errors.UnknownAccount(f"no merchant account for {shop_id}")
        return self._account_from_row(row)

    def routing_for_card(self, card: CardDetails, shop_id: str) -> Routing:
        """Resolve issuing and acquiring banks for a payment."""
        customer_account = self.find_account_by_card(card)
        if customer_account is None:
            raise errors.UnknownAccount("card matches no account at any registered bank")
        merchant = self.merchant_account(shop_id)
        return Routing(customer_bank_id=customer_account.bank_id,
                       merchant_bank_id=merchant.bank_id)

    # -- transactions -----------------------------------------------------------

    def get_txn(self, txn_id: str) -> PaymentTransaction:
        row = self.db.query_one("SELECT * FROM txns WHERE id = ?", (txn_id,))
        if row is None:
            raise errors.MallError(f"no transaction {txn_id}")
        return PaymentTransaction(
            txn_id=row["id"], state=row["state"], decline_reason=row["decline_reason"],
            amount_minor=row["amount_minor"], gateway_fee_minor=row["gateway_fee_minor"],
            merchant_bank_fee_minor=row["merchant_bank_fee_minor"],
            clearinghouse_fee_minor=row["clearinghouse_fee_minor"],
            merchant_id=row["merchant_id"], customer_bank_id=row["customer_bank_id"],
            merchant_bank_id=row["merchant_bank_id"], card_last4=row["card_last4"],
            batch_id=row["batch_id"], timestamps=json.loads(row["timestamps_json"]),
        )

    def format_gateway_request(self, amount_minor: int, card: CardDetails,
                               merchant_id: str, routing: Routing) -> GatewayRequest:
        """Create the canonical request the gateway understands; allocates the
        transaction id and records the audit form (PAN reduced to last4)."""
        if amount_minor <= 0:
            raise errors.ZeroAmount(f"amount must be > 0, got {amount_minor}")
        for bank_id in (routing.customer_bank_id, routing.merchant_bank_id):
            if not self.bank_exists(bank_id):
                raise errors.UnknownBank(bank_id)
        now = self.clock.now()
        with self.db.transaction() as conn:
            txn_id = self.db.next_id("txn")
            req = GatewayRequest(txn_id=txn_id, merchant_id=merchant_id,
                                 amount_minor=amount_minor, card=card,
                                 customer_bank_id=routing.customer_bank_id,
                                 merchant_bank_id=routing.merchant_bank_id)
            conn.execute(
                "INSERT INTO txns (id, state, amount_minor, merchant_id, customer_bank_id, "
                "merchant_bank_id, card_last4, audit_text, timestamps_json) "
                "VALUES (?, 'submitted', ?, ?, ?, ?, ?, ?, ?)",
                (txn_id, amount_minor, merchant_id, routing.customer_bank_id,
                 routing.merchant_bank_id, card.last4(), canonical_request(req),
                 json.dumps({"submitted": now})),
            )
        return req

    def gateway_authorize(self, req: GatewayRequest) -> AuthorizationResult:
        """Approve iff the card re-validates and the funds are available.

        Approval places a hold on the customer account and fixes all fees.
        A decline changes no balances and writes no ledger entries.
        """
        now = self.clock.now()
        schedule = self.fee_schedule
        with self.db.transaction() as conn:
            row = conn.execute("SELECT * FROM txns WHERE id = ?", (req.txn_id,)).fetchone()
            if row is None or row["state"] != "submitted":
                raise errors.WrongState(f"transaction {req.txn_id} not awaiting authorization")
            ts = json.loads(row["timestamps_json"])

            check = validate_card_details(req.card, now)
            if not check.valid:
                ts["declined"] = now
                conn.execute(
                    "UPDATE txns SET state = 'declined', decline_reason = ?, timestamps_json = ? "
                    "WHERE id = ?", ("InvalidCard", json.dumps(ts), req.txn_id))
                return AuthorizationResult(False, req.txn_id, "InvalidCard")
            ts["validated"] = now
            conn.execute("UPDATE txns SET state = 'validated', timestamps_json = ? WHERE id = ?",
                         (json.dumps(ts), req.txn_id))

            account = conn.execute(
                "SELECT * FROM accounts WHERE card_fingerprint = ? AND bank_id = ? "
                "ORDER BY id LIMIT 1",
                (req.card.fingerprint(), req.customer_bank_id),
            ).fetchone()
            if account is None:
                ts["declined"] = now
                conn.execute(
                    "UPDATE txns SET state = 'declined', decline_reason = ?, timestamps_json = ? "
                    "WHERE id = ?", ("UnknownAccount", json.dumps(ts), req.txn_id))
                return AuthorizationResult(False, req.txn_id, "UnknownAccount")
            if account["balance_minor"] - account["held_minor"] < req.amount_minor:
                ts["declined"] = now
                conn.execute(
                    "UPDATE txns SET state = 'declined', decline_reason = ?, timestamps_json = ? "
                    "WHERE id = ?", ("InsufficientFunds", json.dumps(ts), req.txn_id))
                return AuthorizationResult(False, req.txn_id, "InsufficientFunds")

            gateway_fee = schedule.gateway_fee(req.amount_minor)
            ts["approved"] = now
            conn.execute(
                "UPDATE accounts SET held_minor = held_minor + ? WHERE id = ?",
                (req.amount_minor, account["id"]),
            )
            conn.execute(
                "UPDATE txns SET state = 'approved', gateway_fee_minor = ?, "
                "merchant_bank_fee_minor = ?, clearinghouse_fee_minor = ?, "
                "customer_account_id = ?, timestamps_json = ? WHERE id = ?",
                (gateway_fee, schedule.merchant_bank_per_txn_minor,
                 schedule.clearinghouse_per_txn_minor, account["id"],
                 json.dumps(ts), req.txn_id),
            )
        return AuthorizationResult(True, req.txn_id, gateway_fee_minor=gateway_fee)

    # -- batching -----------------------------------------------------------------

    def batch_transactions(self, max_batch: int = DEFAULT_MAX_BATCH) -> Batch:
        """Move up to max_batch approved transactions into an immutable batch,
        FIFO by approval order."""
        now = self.clock.now()
        with self.db.transaction() as conn:
            rows = conn.execute(
                "SELECT id, timestamps_json FROM txns WHERE state = 'approved' "
                "ORDER BY json_extract(timestamps_json, '$.approved'), id LIMIT ?",
                (max_batch,),
            ).fetchall()
            if not rows:
                raise errors.NothingToBatch()
            batch_id = self.db.next_id("batch")
            conn.execute("INSERT INTO batches (id, created_at) VALUES (?, ?)", (batch_id, now))
            txn_ids = []
            for seq, row in enumerate(rows):
                ts = json.loads(row["timestamps_json"])
                ts["batched"] = now
                conn.execute(
                    "UPDATE txns SET state = 'batched', batch_id = ?, timestamps_json = ? "
                    "WHERE id = ?", (batch_id, json.dumps(ts), row["id"]))
                conn.execute(
                    "INSERT INTO batch_txns (batch_id, seq, txn_id) VALUES (?, ?, ?)",
                    (batch_id, seq, row["id"]))
                txn_ids.append(row["id"])
        return Batch(batch_id=batch_id, txn_ids=tuple(txn_ids))

    # -- settlement ------------------------------------------------------------------

    def _post(self, conn, txn_id: str, account_id: str, signed_amount: int,
              posted_at: float) -> None:
        """One double-entry leg: positive credits, negative debits; zero skipped
        (ledger entries are strictly positive)."""
        if signed_amount == 0:
            return
        direction = "credit" if signed_amount > 0 else "debit"
        conn.execute(
            "INSERT INTO ledger_entries (txn_id, account_id, direction, amount_minor, posted_at) "
            "VALUES (?, ?, ?, ?, ?)",
            (txn_id, account_id, direction, abs(signed_amount), posted_at),
        )
        conn.execute("UPDATE accounts SET balance_minor = balance_minor + ? WHERE id = ?",
                     (signed_amount, account_id))

    def clearinghouse_settle(self, batch_id: str) -> Settlement:
        """Move the money for every transaction in the batch: consume the
        customer hold, pay the merchant bank net of gateway and clearinghouse
        fees, and pay the fee takers."""
        now = self.clock.now()
        with self.db.transaction() as conn:
            batch = conn.execute("SELECT * FROM batches WHERE id = ?", (batch_id,)).fetchone()
            if batch is None:
                raise errors.UnknownBatch(batch_id)
            if batch["settled"]:
                raise errors.AlreadySettled(batch_id)
            rows = conn.execute(
                "SELECT t.* FROM batch_txns b JOIN txns t ON b.txn_id = t.id "
                "WHERE b.batch_id = ? ORDER BY b.seq", (batch_id,),
            ).fetchall()
            txn_ids = []
            debit_total = 0
            for row in rows:
                amount = row["amount_minor"]
                gateway_fee = row["gateway_fee_minor"]
                ch_fee = row["clearinghouse_fee_minor"]
                settlement_account = f"{row['merchant_bank_id']}.settlement"
                self._post(conn, row["id"], row["customer_account_id"], -amount, now)
                conn.execute("UPDATE accounts SET held_minor = held_minor - ? WHERE id = ?",
                             (amount, row["customer_account_id"]))
                self._post(conn, row["id"], settlement_account, amount - gateway_fee - ch_fee, now)
                self._post(conn, row["id"], GATEWAY_FEE_ACCOUNT, gateway_fee, now)
                self._post(conn, row["id"], CLEARINGHOUSE_FEE_ACCOUNT, ch_fee, now)
                ts = json.loads(row["timestamps_json"])
                ts["cleared"] = now
                conn.execute("UPDATE txns SET state = 'cleared', timestamps_json = ? WHERE id = ?",
                             (json.dumps(ts), row["id"]))
                txn_ids.append(row["id"])
                debit_total += amount
            conn.execute("UPDATE batches SET settled = 1 WHERE id = ?", (batch_id,))
        return Settlement(batch_id=batch_id, txn_ids=tuple(txn_ids),
                          customer_debit_total=debit_total,
                          net_positions=self._net_positions(txn_ids))

    def _net_positions(self, txn_ids: list[str]) -> dict[str, int]:
        """Signed balance change per bank produced by the given transactions."""
        if not txn_ids:
            return {}
        placeholders = ",".join("?" for _ in txn_ids)
        rows = self.db.query(
            f"SELECT a.bank_id, "
            f"SUM(CASE WHEN le.direction = 'credit' THEN le.amount_minor ELSE -le.amount_minor END) AS net "
            f"FROM ledger_entries le JOIN accounts a ON le.account_id = a.id "
            f"WHERE le.txn_id IN ({placeholders}) GROUP BY a.bank_id ORDER BY a.bank_id",
            tuple(txn_ids),
        )
        return {r["bank_id"]: r["net"] for r in rows}

    def merchant_bank_post(self, txn_id: str) -> PaymentTransaction:
        """Final leg: the merchant's bank credits the merchant account with the
        cleared amount less its own per-transaction fee."""
        now = self.clock.now()
        with self.db.transaction() as conn:
            row = conn.execute("SELECT * FROM txns WHERE id = ?", (txn_id,)).fetchone()
            if row is None or row["state"] != "cleared":
                raise errors.WrongState(f"transaction {txn_id} is not cleared")
            cleared = (row["amount_minor"] - row["gateway_fee_minor"]
                       - row["clearinghouse_fee_minor"])
            bank_fee = row["merchant_bank_fee_minor"]
            merchant = conn.execute(
                "SELECT * FROM accounts WHERE owner_kind = 'merchant' AND owner_ref = ? "
                "ORDER BY id LIMIT 1", (row["merchant_id"],),
            ).fetchone()
            if merchant is None:
                raise errors.UnknownAccount(f"no merchant account for {row['merchant_id']}")
            settlement_account = f"{row['merchant_bank_id']}.settlement"
            income_account = f"{row['merchant_bank_id']}.income"
            self._post(conn, txn_id, settlement_account, -cleared, now)
            self._post(conn, txn_id, merchant["id"], cleared - bank_fee, now)
            self._post(conn, txn_id, income_account, bank_fee, now)
            ts = json.loads(row["timestamps_json"])
            ts["posted"] = now
            conn.execute("UPDATE txns SET state = 'posted', timestamps_json = ? WHERE id = ?",
                         (json.dumps(ts), txn_id))
        return self.get_txn(txn_id)

    def settle_to_quiescence(self, max_batch: int = DEFAULT_MAX_BATCH) -> dict:
        """Batch, settle, and post everything outstanding. Returns counts."""
        batches = settled = posted = 0
        while True:
            try:
                batch = self.batch_transactions(max_batch)
            except errors.NothingToBatch:
                break
            batches += 1
            settlement = self.clearinghouse_settle(batch.batch_id)
            settled += len(settlement.txn_ids)
            for txn_id in settlement.txn_ids:
                self.merchant_bank_post(txn_id)
                posted += 1
        return {"batches": batches, "settled": settled, "posted": posted}

    # -- exports ------------------------------------------------------------------

    def ledger_entries(self) -> list[dict]:
        return [dict(r) for r in self.db.query(
            "SELECT * FROM ledger_entries ORDER BY entry_id")]

    def export_ledger_csv(self) -> str:
        lines = [LEDGER_CSV_HEADER]
        for r in self.db.query(
                "SELECT txn_id, account_id, direction, amount_minor, posted_at "
                "FROM ledger_entries ORDER BY entry_id"):
            lines.append(f"{r['txn_id']},{r['account_id']},{r['direction']},"
                         f"{r['amount_minor']},{r['posted_at']!r}")
        return "\n".join(lines) + "\n"
