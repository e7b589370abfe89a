"""Service configuration (JSON file).

Carries the storage path, fee schedule, shipping fee, token TTL, staff keys,
bank roster, and mall layout. Malformed files raise BadConfig with the line
number.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BadConfig
from .payments import FeeSchedule
from .scene import MallLayout


@dataclass(frozen=True)
class StaffKey:
    key: str
    role: str  # "administrator" | "shop_manager"
    shop_id: str | None = None


@dataclass(frozen=True)
class MallConfig:
    storage_path: str = "mall.db"
    outbox_path: str = "outbox.ndjson"
    token_ttl_seconds: int = 3600
    shipping_fee_per_physical_line_minor: int = 500
    other_fees_minor: int = 0
    availability_deadline_ms: float = 200.0
    fee_schedule: FeeSchedule = field(default_factory=FeeSchedule)
    staff_keys: tuple[StaffKey, ...] = ()
    banks: tuple[tuple[str, str], ...] = ()  # (bank_id, display name)
    layout: MallLayout = field(default_factory=MallLayout)
    host: str = "127.0.0.1"
    port: int = 8765

    @staticmethod
    def from_dict(data: dict) -> "MallConfig":
        if not isinstance(data, dict):
            raise BadConfig("config root must be an object")
        staff = []
        raw_staff = data.get("staff_keys", {})
        for key in raw_staff.get("admin", []):
            staff.append(StaffKey(key=key, role="administrator"))
        for key, shop_id in raw_staff.get("shop_managers", {}).items():
            staff.append(StaffKey(key=key, role="shop_manager", shop_id=shop_id))
        banks = tuple((b["id"], b.get("name", b["id"])) for b in data.get("banks", []))
        try:
            return MallConfig(
                storage_path=data.get("storage_path", "mall.db"),
                outbox_path=data.get("outbox_path", "outbox.ndjson"),
                token_ttl_seconds=int(data.get("token_ttl_seconds", 3600)),
                shipping_fee_per_physical_line_minor=int(
                    data.get("shipping_fee_per_physical_line_minor", 500)),
                other_fees_minor=int(data.get("other_fees_minor", 0)),
                availability_deadline_ms=float(data.get("availability_deadline_ms", 200.0)),
                fee_schedule=FeeSchedule.from_dict(data.get("fee_schedule", {})),
                staff_keys=tuple(staff),
                banks=banks,
                layout=MallLayout.from_dict(data["layout"]) if "layout" in data else MallLayout(),
                host=data.get("host", "127.0.0.1"),
                port=int(data.get("port", 8765)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise BadConfig(f"bad config value: {exc}") from exc

    @staticmethod
    def from_file(path: str | Path) -> "MallConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise BadConfig(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise BadConfig(f"{path}: malformed JSON at line {exc.lineno}: {exc.msg}") from exc
        return MallConfig.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "storage_path": self.storage_path,
            "outbox_path": self.outbox_path,
            "token_ttl_seconds": self.token_ttl_seconds,
            "shipping_fee_per_physical_line_minor": self.shipping_fee_per_physical_line_minor,
            "other_fees_minor": self.other_fees_minor,
            "availability_deadline_ms": self.availability_deadline_ms,
            "fee_schedule": self.fee_schedule.to_dict(),
            "staff_keys": {
                "admin": [s.key for s in self.staff_keys if s.role == "administrator"],
                "shop_managers": {s.key: s.shop_id for s in self.staff_keys
                                  if s.role == "shop_manager"},
            },
            "banks": [{"id": b, "name": n} for b, n in self.banks],
            "layout": self.layout.to_dict(),
            "host": self.host,
            "port": self.port,
        }
