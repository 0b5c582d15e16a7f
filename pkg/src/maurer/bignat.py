"""Exact naturals of the form ``m * 2**e`` that may be far too large to expand."""

from __future__ import annotations

from functools import total_ordering

# values up to this many bits are shown in decimal
DECIMAL_BITS = 4096


@total_ordering
class BigNat:
    __slots__ = ("mantissa", "exponent")

    def __init__(self, mantissa: int, exponent: int = 0):
        if mantissa < 0 or exponent < 0:
            raise ValueError("BigNat holds naturals only")
        if mantissa == 0:
            exponent = 0
        else:
            tz = (mantissa & -mantissa).bit_length() - 1
            mantissa >>= tz
            exponent += tz
        self.mantissa = mantissa
        self.exponent = exponent

    @classmethod
    def pow2(cls, exponent: int) -> BigNat:
        return cls(1, exponent)

    @classmethod
    def of(cls, value: int | BigNat) -> BigNat:
        return value if isinstance(value, BigNat) else cls(value)

    def bit_length(self) -> int:
        return self.mantissa.bit_length() + self.exponent if self.mantissa else 0

    def __int__(self) -> int:
        return self.mantissa << self.exponent

    def __mul__(self, other: int | BigNat) -> BigNat:
        other = BigNat.of(other)
        return BigNat(self.mantissa * other.mantissa, self.exponent + other.exponent)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> BigNat:
        if self.mantissa > 1 and k.bit_length() > 64:
            raise OverflowError("power of a non power of two is too large")
        return BigNat(self.mantissa**k, self.exponent * k)

    def _cmp(self, other: int | BigNat) -> int:
        other = BigNat.of(other)
        a, b = self, other
        if a.mantissa == 0 or b.mantissa == 0:
            return (a.mantissa > 0) - (b.mantissa > 0)
        la, lb = a.bit_length(), b.bit_length()
        if la != lb:
            return -1 if la < lb else 1
        shift = min(a.exponent, b.exponent)
        x = a.mantissa << (a.exponent - shift)
        y = b.mantissa << (b.exponent - shift)
        return (x > y) - (x < y)

    def __eq__(self, other) -> bool:
        if not isinstance(other, (int, BigNat)):
            return NotImplemented
        return self._cmp(other) == 0

    def __lt__(self, other) -> bool:
        if not isinstance(other, (int, BigNat)):
            return NotImplemented
        return self._cmp(other) < 0

    def __hash__(self) -> int:
        return hash((self.mantissa, self.exponent))

    def __str__(self) -> str:
        if self.bit_length() <= DECIMAL_BITS:
            return str(int(self))
        if self.mantissa == 1:
            return f"2^{self.exponent}"
        return f"{self.mantissa}*2^{self.exponent}"

    def __repr__(self) -> str:
        return f"BigNat({self})"
