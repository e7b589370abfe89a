"""SQLite-backed persistence.

A single ``Database`` owns the connection, the schema, id sequences, and a
process-wide write lock: mutations are serialized (single logical writer),
reads see only committed state. Every service keeps its SQL here-adjacent by
going through ``transaction()`` / ``query()``.
"""

from __future__ import annotations

import sqlite3
import threading
from contextlib import contextmanager
from pathlib import Path
from typing import Any, Iterator

from .errors import StorageUnavailable

_SCHEMA = """
CREATE TABLE IF NOT EXISTS seqs (
    kind TEXT PRIMARY KEY,
    next INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS settings (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS categories (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    name_ci TEXT NOT NULL UNIQUE
);
CREATE TABLE IF NOT EXISTS shops (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL,
    category_id TEXT NOT NULL REFERENCES categories(id),
    floor INTEGER NOT NULL,
    slot INTEGER NOT NULL,
    UNIQUE (floor, slot)
);
CREATE TABLE IF NOT EXISTS items (
    id TEXT PRIMARY KEY,
    shop_id TEXT NOT NULL REFERENCES shops(id),
    name TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS products (
    id TEXT PRIMARY KEY,
    item_id TEXT NOT NULL REFERENCES items(id),
    name TEXT NOT NULL,
    unit_price_minor INTEGER NOT NULL CHECK (unit_price_minor >= 0),
    kind TEXT NOT NULL CHECK (kind IN ('physical', 'digital')),
    stock INTEGER NOT NULL CHECK (stock >= 0)
);
CREATE TABLE IF NOT EXISTS offers (
    id TEXT PRIMARY KEY,
    shop_id TEXT NOT NULL REFERENCES shops(id),
    product_id TEXT NOT NULL REFERENCES products(id),
    rule TEXT NOT NULL,
    active INTEGER NOT NULL DEFAULT 1
);
CREATE TABLE IF NOT EXISTS customers (
    id TEXT PRIMARY KEY,
    username TEXT NOT NULL UNIQUE,
    password_hash TEXT NOT NULL,
    email TEXT NOT NULL,
    postal_address TEXT NOT NULL,
    card_json TEXT
);
CREATE TABLE IF NOT EXISTS recommendations (
    id TEXT PRIMARY KEY,
    customer_id TEXT NOT NULL REFERENCES customers(id),
    product_id TEXT NOT NULL REFERENCES products(id),
    text TEXT NOT NULL,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS sessions (
    token TEXT PRIMARY KEY,
    customer_id TEXT NOT NULL REFERENCES customers(id),
    issued_at REAL NOT NULL,
    ttl_seconds INTEGER NOT NULL
);
CREATE TABLE IF NOT EXISTS store_grants (
    id TEXT PRIMARY KEY,
    token TEXT NOT NULL REFERENCES sessions(token),
    shop_id TEXT NOT NULL REFERENCES shops(id),
    granted_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS participation (
    shop_id TEXT PRIMARY KEY REFERENCES shops(id)
);
CREATE TABLE IF NOT EXISTS basket_lines (
    customer_id TEXT NOT NULL REFERENCES customers(id),
    product_id TEXT NOT NULL REFERENCES products(id),
    quantity INTEGER NOT NULL CHECK (quantity >= 1),
    pos INTEGER NOT NULL,
    PRIMARY KEY (customer_id, product_id)
);
CREATE TABLE IF NOT EXISTS orders (
    id TEXT PRIMARY KEY,
    customer_id TEXT NOT NULL REFERENCES customers(id),
    state TEXT NOT NULL,
    goods_total_minor INTEGER NOT NULL,
    shipping_fee_minor INTEGER NOT NULL,
    other_fees_minor INTEGER NOT NULL,
    grand_total_minor INTEGER NOT NULL,
    registration_address TEXT NOT NULL,
    buyer_json TEXT,
    txn_id TEXT,
    decline_reason TEXT,
    created_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS order_lines (
    order_id TEXT NOT NULL REFERENCES orders(id),
    pos INTEGER NOT NULL,
    product_id TEXT NOT NULL,
    shop_id TEXT NOT NULL,
    kind TEXT NOT NULL,
    quantity INTEGER NOT NULL,
    unit_price_minor INTEGER NOT NULL,
    discount_minor INTEGER NOT NULL,
    line_total_minor INTEGER NOT NULL,
    PRIMARY KEY (order_id, pos)
);
CREATE TABLE IF NOT EXISTS receipts (
    order_id TEXT PRIMARY KEY REFERENCES orders(id),
    to_email TEXT NOT NULL,
    subject TEXT NOT NULL,
    body TEXT NOT NULL,
    codes_json TEXT NOT NULL,
    sent_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS code_audit (
    order_id TEXT PRIMARY KEY REFERENCES orders(id),
    codes_json TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS deliveries (
    order_id TEXT PRIMARY KEY REFERENCES orders(id),
    address TEXT NOT NULL,
    status TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS banks (
    id TEXT PRIMARY KEY,
    name TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS accounts (
    id TEXT PRIMARY KEY,
    owner_kind TEXT NOT NULL CHECK (owner_kind IN ('customer', 'merchant', 'gateway_operator', 'bank')),
    owner_ref TEXT,
    bank_id TEXT NOT NULL REFERENCES banks(id),
    balance_minor INTEGER NOT NULL,
    held_minor INTEGER NOT NULL DEFAULT 0,
    card_fingerprint TEXT
);
CREATE INDEX IF NOT EXISTS idx_accounts_fingerprint ON accounts(card_fingerprint);
CREATE TABLE IF NOT EXISTS txns (
    id TEXT PRIMARY KEY,
    state TEXT NOT NULL,
    decline_reason TEXT,
    amount_minor INTEGER NOT NULL,
    gateway_fee_minor INTEGER NOT NULL DEFAULT 0,
    merchant_bank_fee_minor INTEGER NOT NULL DEFAULT 0,
    clearinghouse_fee_minor INTEGER NOT NULL DEFAULT 0,
    merchant_id TEXT NOT NULL,
    customer_account_id TEXT,
    customer_bank_id TEXT,
    merchant_bank_id TEXT,
    card_last4 TEXT,
    batch_id TEXT,
    audit_text TEXT,
    timestamps_json TEXT NOT NULL DEFAULT '{}'
);
CREATE TABLE IF NOT EXISTS batches (
    id TEXT PRIMARY KEY,
    created_at REAL NOT NULL,
    settled INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS batch_txns (
    batch_id TEXT NOT NULL REFERENCES batches(id),
    seq INTEGER NOT NULL,
    txn_id TEXT NOT NULL REFERENCES txns(id),
    PRIMARY KEY (batch_id, seq)
);
CREATE TABLE IF NOT EXISTS ledger_entries (
    entry_id INTEGER PRIMARY KEY AUTOINCREMENT,
    txn_id TEXT NOT NULL,
    account_id TEXT NOT NULL REFERENCES accounts(id),
    direction TEXT NOT NULL CHECK (direction IN ('debit', 'credit')),
    amount_minor INTEGER NOT NULL CHECK (amount_minor > 0),
    posted_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS request_log (
    request_id TEXT PRIMARY KEY,
    status INTEGER NOT NULL,
    body TEXT NOT NULL
);
"""


class Database:
    """Owns the SQLite connection and serializes writes."""

    def __init__(self, path: str | Path = ":memory:"):
        self.path = str(path)
        try:
            self._conn = sqlite3.connect(self.path, check_same_thread=False, timeout=30)
        except sqlite3.Error as exc:
            raise StorageUnavailable(f"cannot open database at {self.path}: {exc}") from exc
        self._conn.row_factory = sqlite3.Row
        self._lock = threading.RLock()
        with self._lock:
            self._conn.execute("PRAGMA foreign_keys = ON")
            if self.path != ":memory:":
                self._conn.execute("PRAGMA journal_mode = WAL")
                self._conn.execute("PRAGMA synchronous = NORMAL")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        self._conn.close()

    @contextmanager
    def transaction(self) -> Iterator[sqlite3.Connection]:
        """Serialized read-write transaction; commits on success."""
        with self._lock:
            try:
                yield self._conn
            except Exception:
                self._conn.rollback()
                raise
            else:
                self._conn.commit()

    @contextmanager
    def lock(self) -> Iterator[None]:
        """Hold the writer lock across several transactions (reentrant)."""
        with self._lock:
            yield

    def query(self, sql: str, params: tuple = ()) -> list[sqlite3.Row]:
        with self._lock:
            return self._conn.execute(sql, params).fetchall()

    def query_one(self, sql: str, params: tuple = ()) -> sqlite3.Row | None:
        with self._lock:
            return self._conn.execute(sql, params).fetchone()

    def scalar(self, sql: str, params: tuple = ()) -> Any:
        row = self.query_one(sql, params)
        return None if row is None else row[0]

    def next_id(self, kind: str) -> str:
        """Allocate the next sequential id for an entity kind, e.g. shop-000003."""
        with self._lock:
            row = self._conn.execute("SELECT next FROM seqs WHERE kind = ?", (kind,)).fetchone()
            n = 1 if row is None else row["next"]
            self._conn.execute(
                "INSERT INTO seqs (kind, next) VALUES (?, ?) "
                "ON CONFLICT(kind) DO UPDATE SET next = excluded.next",
                (kind, n + 1),
            )
            return f"{kind}-{n:06d}"

    # Settings are tiny JSON-ish strings (fee schedule, layout, ...).

    def get_setting(self, key: str) -> str | None:
        return self.scalar("SELECT value FROM settings WHERE key = ?", (key,))

    def put_setting(self, key: str, value: str) -> None:
        with self.transaction() as conn:
            conn.execute(
                "INSERT INTO settings (key, value) VALUES (?, ?) "
                "ON CONFLICT(key) DO UPDATE SET value = excluded.value",
                (key, value),
            )
