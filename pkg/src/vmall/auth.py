"""Mall-wide single sign-on.

One successful login yields an opaque 128-bit session token; the mall
management then vouches for the customer at every participating store without
re-prompting credentials. Store grants are audit records, not capabilities.
"""

from __future__ import annotations

import hashlib
import json
import secrets
from dataclasses import dataclass

from . import errors
from .clock import Clock
from .domain import Customer
from .storage import Database

DEFAULT_TTL_SECONDS = 3600

# Simulation-scale work factor; this platform models the trust steps, not
# production password storage.
_PBKDF2_ITERATIONS = 1000


@dataclass(frozen=True)
class SessionToken:
    token: str
    customer_id: str
    issued_at: float
    ttl_seconds: int

    def expires_at(self) -> float:
        return self.issued_at + self.ttl_seconds


@dataclass(frozen=True)
class StoreGrant:
    grant_id: str
    token: str
    shop_id: str
    granted_at: float


def hash_password(password: str, salt: str | None = None) -> str:
    salt = salt if salt is not None else secrets.token_hex(8)
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(salt), _PBKDF2_ITERATIONS
    )
    return f"{salt}${digest.hex()}"


def verify_password(password: str, stored: str) -> bool:
    salt, _ = stored.split("$", 1)
    return secrets.compare_digest(hash_password(password, salt), stored)


def validate_email(email: str) -> None:
    local, sep, host = email.partition("@")
    if not sep or not local or not host or "@" in host:
        raise errors.InvalidEmail(f"{email!r} is not a valid address")


class AuthService:
    """Customer registration, login, and cross-store authorization."""

    def __init__(self, db: Database, clock: Clock, ttl_seconds: int = DEFAULT_TTL_SECONDS):
        self.db = db
        self.clock = clock
        self.ttl_seconds = ttl_seconds
        # Number of times a caller presented credentials (the one-login SSO
        # property counts these).
        self.credential_submissions = 0

    # -- customers ---------------------------------------------------------

    def register_customer(self, username: str, password: str, email: str,
                          postal_address: str, card_on_file: dict | None = None) -> Customer:
        if not username or not username.strip():
            raise errors.EmptyName("username must be non-empty")
        validate_email(email)
        if not postal_address or not postal_address.strip():
            raise errors.MallError("postal address must be non-empty")
        username = username.strip()
        if self.db.query_one("SELECT id FROM customers WHERE username = ?", (username,)):
            raise errors.DuplicateUsername(username)
        password_hash = hash_password(password)
        with self.db.transaction() as conn:
            customer_id = self.db.next_id("cust")
            conn.execute(
                "INSERT INTO customers (id, username, password_hash, email, postal_address, card_json) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (customer_id, username, password_hash, email, postal_address,
                 json.dumps(card_on_file) if card_on_file else None),
            )
        return Customer(id=customer_id, username=username, password_hash=password_hash,
                        email=email, postal_address=postal_address, card_on_file=card_on_file)

    def get_customer(self, customer_id: str) -> Customer:
        row = self.db.query_one("SELECT * FROM customers WHERE id = ?", (customer_id,))
        if row is None:
            raise errors.MallError(f"no customer {customer_id}")
        return Customer(
            id=row["id"], username=row["username"], password_hash=row["password_hash"],
            email=row["email"], postal_address=row["postal_address"],
            card_on_file=json.loads(row["card_json"]) if row["card_json"] else None,
        )

    # -- sessions ------------------------------------------------------------

    def login(self, username: str, password: str) -> SessionToken:
        self.credential_submissions += 1
        row = self.db.query_one("SELECT * FROM customers WHERE username = ?", (username,))
        # Wrong user and wrong password are indistinguishable to the caller.
        if row is None or not verify_password(password, row["password_hash"]):
            raise errors.BadCredentials()
        token = secrets.token_hex(16)
        issued_at = self.clock.now()
        with self.db.transaction() as conn:
            conn.execute(
                "INSERT INTO sessions (token, customer_id, issued_at, ttl_seconds) VALUES (?, ?, ?, ?)",
                (token, row["id"], issued_at, self.ttl_seconds),
            )
        return SessionToken(token=token, customer_id=row["id"],
                            issued_at=issued_at, ttl_seconds=self.ttl_seconds)

    def session_for(self, token: str) -> SessionToken:
        """Resolve a live session or raise UnknownToken / ExpiredToken."""
        row = self.db.query_one("SELECT * FROM sessions WHERE token = ?", (token,))
        if row is None:
            raise errors.UnknownToken()
        session = SessionToken(token=row["token"], customer_id=row["customer_id"],
                               issued_at=row["issued_at"], ttl_seconds=row["ttl_seconds"])
        if self.clock.now() >= session.expires_at():
            raise errors.ExpiredToken()
        return session

    def customer_for_token(self, token: str) -> Customer:
        return self.get_customer(self.session_for(token).customer_id)

    def sweep_expired(self) -> int:
        """Drop expired sessions; returns the number removed."""
        now = self.clock.now()
        with self.db.transaction() as conn:
            cur = conn.execute(
                "DELETE FROM sessions WHERE issued_at + ttl_seconds <= ?", (now,)
            )
            return cur.rowcount

    # -- participation registry ----------------------------------------------

    def enroll_store(self, shop_id: str) -> list[str]:
        if self.db.query_one("SELECT id FROM shops WHERE id = ?", (shop_id,)) is None:
            raise errors.UnknownShop(shop_id)
        with self.db.transaction() as conn:
            conn.execute("INSERT OR IGNORE INTO participation (shop_id) VALUES (?)", (shop_id,))
        return self.participating_shops()

    def withdraw_store(self, shop_id: str) -> list[str]:
        if self.db.query_one("SELECT id FROM shops WHERE id = ?", (shop_id,)) is None:
            raise errors.UnknownShop(shop_id)
        with self.db.transaction() as conn:
            conn.execute("DELETE FROM participation WHERE shop_id = ?", (shop_id,))
        return self.participating_shops()

    def participating_shops(self) -> list[str]:
        return [r["shop_id"] for r in self.db.query("SELECT shop_id FROM participation ORDER BY shop_id")]

    def is_participating(self, shop_id: str) -> bool:
        return self.db.query_one("SELECT 1 FROM participation WHERE shop_id = ?", (shop_id,)) is not None

    # -- store grants -----------------------------------------------------------

    def authorize_store_access(self, token: str, shop_id: str) -> StoreGrant:
        """Vouch for the token holder at a participating store.

        No credential prompt happens here: possession of a live token is
        sufficient for every enrolled shop.
        """
        session = self.session_for(token)
        if not self.is_participating(shop_id):
            raise errors.ShopNotParticipating(shop_id)
        granted_at = self.clock.now()
        with self.db.transaction() as conn:
            grant_id = self.db.next_id("grant")
            conn.execute(
                "INSERT INTO store_grants (id, token, shop_id, granted_at) VALUES (?, ?, ?, ?)",
                (grant_id, session.token, shop_id, granted_at),
            )
        return StoreGrant(grant_id=grant_id, token=session.token,
                          shop_id=shop_id, granted_at=granted_at)

    def grants_for_token(self, token: str) -> list[StoreGrant]:
        return [
            StoreGrant(grant_id=r["id"], token=r["token"], shop_id=r["shop_id"],
                       granted_at=r["granted_at"])
            for r in self.db.query(
                "SELECT * FROM store_grants WHERE token = ? ORDER BY id", (token,)
            )
        ]
