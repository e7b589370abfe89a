"""Integer money arithmetic.

All amounts are integer minor currency units (cents). Percentage discounts
round half-up; percentage fees round up (against the merchant). Both helpers
are exact integer arithmetic, no floats.
"""

from __future__ import annotations


def percent_discount(total_minor: int, percent: int) -> int:
    """Half-up rounding of ``total_minor * percent / 100``."""
    if total_minor < 0 or percent < 0:
        raise ValueError("negative inputs")
    return (total_minor * percent + 50) // 100


def basis_point_fee(amount_minor: int, percent_bp: int) -> int:
    """Ceiling of ``amount_minor * percent_bp / 10000``."""
    if amount_minor < 0 or percent_bp < 0:
        raise ValueError("negative inputs")
    return -(-(amount_minor * percent_bp) // 10000)
