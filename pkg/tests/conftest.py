import pytest

from vmall import Mall, MallConfig, SimClock
from vmall.config import StaffKey
from vmall.fixtures import demo_fixture

ADMIN_KEY = "admin-key-1"
MANAGER_KEYS = {
    "mgr-elegance": "shop-elegance",
    "mgr-dapper": "shop-dapper",
    "mgr-littlestars": "shop-littlestars",
    "mgr-silkstone": "shop-silkstone",
    "mgr-playroom": "shop-playroom",
}


def make_config(tmp_path, **overrides) -> MallConfig:
    staff = [StaffKey(key=ADMIN_KEY, role="administrator")]
    staff += [StaffKey(key=k, role="shop_manager", shop_id=s) for k, s in MANAGER_KEYS.items()]
    defaults = dict(
        storage_path=str(tmp_path / "mall.db"),
        outbox_path=str(tmp_path / "outbox.ndjson"),
        staff_keys=tuple(staff),
    )
    defaults.update(overrides)
    return MallConfig(**defaults)


@pytest.fixture
def clock():
    return SimClock()


@pytest.fixture
def mall(tmp_path, clock):
    m = Mall(make_config(tmp_path), clock=clock)
    yield m
    m.close()


@pytest.fixture
def seeded(mall):
    mall.load_fixture(demo_fixture())
    return mall


def login(mall, username="amal", password="pw1"):
    return mall.auth.login(username, password).token
