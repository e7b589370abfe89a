"""The assembled mall: storage, clock, and every service wired together."""

from __future__ import annotations

import json
from pathlib import Path

from .auth import AuthService
from .checkout import CheckoutService
from .clock import Clock
from .config import MallConfig
from .domain import ADMIN, Actor, CatalogService, shop_manager
from .fixtures import load_fixture, parse_fixture
from .outbox import Outbox
from .payments import PaymentNetwork
from .scene import MallLayout, SceneGraph, build_mall_scene
from .storage import Database
from .storefront import StorefrontService


class Mall:
    """Facade over the whole platform; the API and CLI drive this."""

    def __init__(self, config: MallConfig | None = None, clock: Clock | None = None):
        self.config = config or MallConfig()
        self.clock = clock or Clock()
        self.db = Database(self.config.storage_path)
        self.outbox = Outbox(self.config.outbox_path)
        self.catalog = CatalogService(self.db)
        self.auth = AuthService(self.db, self.clock,
                                ttl_seconds=self.config.token_ttl_seconds)
        self.storefront = StorefrontService(
            self.db, self.clock, self.auth, self.catalog,
            availability_deadline_ms=self.config.availability_deadline_ms)
        self.payments = PaymentNetwork(self.db, self.clock)
        self.checkout = CheckoutService(
            self.db, self.clock, self.auth, self.catalog, self.storefront,
            self.payments, self.outbox,
            shipping_fee_per_physical_line=self.config.shipping_fee_per_physical_line_minor,
            other_fees_minor=self.config.other_fees_minor)
        self._apply_config()

    def _apply_config(self) -> None:
        # Idempotent startup over an existing database.
        self.payments.set_fee_schedule(self.config.fee_schedule)
        for bank_id, name in self.config.banks:
            self.payments.register_bank(bank_id, name)

    def close(self) -> None:
        self.db.close()

    # -- staff keys ---------------------------------------------------------

    def actor_for_key(self, key: str) -> Actor | None:
        for staff in self.config.staff_keys:
            if staff.key == key:
                if staff.role == "administrator":
                    return ADMIN
                return shop_manager(staff.shop_id)
        return None

    # -- scene ----------------------------------------------------------------

    def layout(self) -> MallLayout:
        stored = self.db.get_setting("layout")
        if stored:
            return MallLayout.from_dict(json.loads(stored))
        return self.config.layout

    def scene(self) -> SceneGraph:
        return build_mall_scene(self.layout(), self.catalog.all_shops())

    # -- fixtures ---------------------------------------------------------------

    def load_fixture(self, data: dict) -> dict:
        return load_fixture(self.db, data)

    def load_fixture_file(self, path: str | Path) -> dict:
        return self.load_fixture(parse_fixture(Path(path).read_text(encoding="utf-8")))
