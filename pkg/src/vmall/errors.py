"""Error types shared across the mall platform.

Every error carries a stable ``code`` string (used by the HTTP layer and by
clients) and an ``http_status`` hint. Payment declines are deliberately NOT
errors; they are ordinary return values / order states.
"""

from __future__ import annotations


class MallError(Exception):
    """Base class for all domain errors."""

    code = "MallError"
    http_status = 400

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)
        self.message = message or self.code


# --- catalog -----------------------------------------------------------

class EmptyName(MallError):
    code = "EmptyName"


class DuplicateName(MallError):
    code = "DuplicateName"
    http_status = 409


class UnknownCategory(MallError):
    code = "UnknownCategory"
    http_status = 404


class SlotOccupied(MallError):
    code = "SlotOccupied"
    http_status = 409


class UnknownParent(MallError):
    code = "UnknownParent"
    http_status = 404


class NegativePrice(MallError):
    code = "NegativePrice"


class NegativeStock(MallError):
    code = "NegativeStock"


class NotShopManager(MallError):
    code = "NotShopManager"
    http_status = 403


class ForeignProduct(MallError):
    code = "ForeignProduct"


class BadRule(MallError):
    code = "BadRule"


class UnknownShop(MallError):
    code = "UnknownShop"
    http_status = 404


class UnknownProduct(MallError):
    code = "UnknownProduct"
    http_status = 404


# --- auth --------------------------------------------------------------

class DuplicateUsername(MallError):
    code = "DuplicateUsername"
    http_status = 409


class InvalidEmail(MallError):
    code = "InvalidEmail"


class BadCredentials(MallError):
    code = "BadCredentials"
    http_status = 401


class ExpiredToken(MallError):
    code = "ExpiredToken"
    http_status = 401


class UnknownToken(MallError):
    code = "UnknownToken"
    http_status = 401


class ShopNotParticipating(MallError):
    code = "ShopNotParticipating"
    http_status = 403


class Unauthorized(MallError):
    code = "Unauthorized"
    http_status = 403


# --- storefront / basket ------------------------------------------------

class ZeroQuantity(MallError):
    code = "ZeroQuantity"


class TextOutOfBounds(MallError):
    code = "TextOutOfBounds"


class NoParticipatingShops(MallError):
    code = "NoParticipatingShops"


# --- checkout -----------------------------------------------------------

class EmptyBasket(MallError):
    code = "EmptyBasket"


class InsufficientStock(MallError):
    code = "InsufficientStock"
    http_status = 409

    def __init__(self, product_id: str, message: str = ""):
        super().__init__(message or f"insufficient stock for {product_id}")
        self.product_id = product_id


class WrongState(MallError):
    code = "WrongState"
    http_status = 409


class MissingBuyerField(MallError):
    code = "MissingBuyerField"


class NoPhysicalLines(MallError):
    code = "NoPhysicalLines"


class UnknownOrder(MallError):
    code = "UnknownOrder"
    http_status = 404


# --- payment network ----------------------------------------------------

class ZeroAmount(MallError):
    code = "ZeroAmount"


class UnknownBank(MallError):
    code = "UnknownBank"
    http_status = 404


class NothingToBatch(MallError):
    code = "NothingToBatch"


class UnknownBatch(MallError):
    code = "UnknownBatch"
    http_status = 404


class AlreadySettled(MallError):
    code = "AlreadySettled"
    http_status = 409


class UnknownAccount(MallError):
    code = "UnknownAccount"
    http_status = 404


# --- scene ---------------------------------------------------------------

class ShopOutOfBounds(MallError):
    code = "ShopOutOfBounds"

    def __init__(self, shop_id: str, message: str = ""):
        super().__init__(message or f"shop {shop_id} does not fit the layout")
        self.shop_id = shop_id


# --- service shell --------------------------------------------------------

class BadConfig(MallError):
    code = "BadConfig"


class StorageUnavailable(MallError):
    code = "StorageUnavailable"
    http_status = 503


class ParseError(MallError):
    code = "ParseError"


class IntegrityError(MallError):
    code = "IntegrityError"

    def __init__(self, reference: str, message: str = ""):
        super().__init__(message or f"unresolved reference: {reference}")
        self.reference = reference
