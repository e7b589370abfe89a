"""Multi-store virtual shopping mall platform.

Mall-wide single sign-on, federated catalog and availability, the five-step
checkout, a simulated card-not-present clearing network on a double-entry
ledger, and a 3D mall scene compiler with automatic camera walkthrough.
"""

from .clock import Clock, SimClock
from .config import MallConfig
from .service import Mall

__version__ = "0.1.0"

__all__ = ["Clock", "Mall", "MallConfig", "SimClock", "__version__"]
