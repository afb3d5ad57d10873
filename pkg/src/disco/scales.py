"""Exact scale arithmetic and the ordered scale sets a basis lives on.

A scale is stored as a product of primes with rational exponents, so
``sqrt2 * sqrt2 == 2`` holds exactly and integer-ratio detection never
depends on floating comparison.  Accepted tokens::

    2   1.5   sqrt2   2sqrt2   2*sqrt3   2^1/3   2^(2/3)   2^-1
"""
import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError

_SQRT = re.compile(r"^(\d+(?:\.\d+)?)?\*?sqrt(?:(\d+)|\((\d+)\))$")
_POW = re.compile(r"^(\d+(?:\.\d+)?)\^(?:(-?\d+)(?:/(\d+))?|\((-?\d+)(?:/(\d+))?\))$")
_LIT = re.compile(r"^\d+(?:\.\d+)?(?:/\d+)?$")


def _factorize(n):
    out = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class Scale:
    """Positive real ``prod(p ** e)`` with rational exponents ``e``."""

    powers: tuple = ()

    @classmethod
    def from_exponents(cls, exps):
        return cls(tuple(sorted((p, Fraction(e)) for p, e in exps.items() if e != 0)))

    @classmethod
    def rational(cls, value):
        value = Fraction(value)
        if value <= 0:
            raise DomainError(f"scales must be positive, got {value}")
        exps = {p: Fraction(e) for p, e in _factorize(value.numerator).items()}
        for p, e in _factorize(value.denominator).items():
            exps[p] = exps.get(p, 0) - e
        return cls.from_exponents(exps)

    @classmethod
    def parse(cls, token):
        tok = str(token).strip().lower().replace(" ", "")
        if not tok:
            raise DomainError("empty scale token")
        out = cls()
        for part in tok.split("*"):
            out = out * cls._parse_factor(part, token)
        return out

    @classmethod
    def _parse_factor(cls, part, token):
        m = _SQRT.match(part)
        if m:
            coef = cls.rational(Fraction(m.group(1))) if m.group(1) else cls()
            return coef * cls.rational(int(m.group(2) or m.group(3))) ** Fraction(1, 2)
        m = _POW.match(part)
        if m:
            num, den = (m.group(2), m.group(3)) if m.group(2) else (m.group(4), m.group(5))
            exp = Fraction(int(num), int(den or 1))
            return cls.rational(Fraction(m.group(1))) ** exp
        if _LIT.match(part):
            return cls.rational(Fraction(part))
        raise DomainError(f"cannot parse scale token {token!r}")

    def _exps(self):
        return dict(self.powers)

    def __mul__(self, other):
        exps = self._exps()
        for p, e in other.powers:
            exps[p] = exps.get(p, 0) + e
        return Scale.from_exponents(exps)

    def __truediv__(self, other):
        return self * other ** -1

    def __pow__(self, k):
        k = Fraction(k)
        return Scale.from_exponents({p: e * k for p, e in self.powers})

    def __float__(self):
        return float(math.prod((float(p) ** float(e) for p, e in self.powers), start=1.0))

    def is_integer(self):
        return all(e.denominator == 1 and e > 0 for _, e in self.powers)

    def is_rational(self):
        return all(e.denominator == 1 for _, e in self.powers)

    def as_int(self):
        if not self.is_integer():
            raise DomainError(f"{self} is not an integer")
        return math.prod(p ** int(e) for p, e in self.powers)

    def as_fraction(self):
        if not self.is_rational():
            raise DomainError(f"{self} is irrational")
        return math.prod((Fraction(p) ** int(e) for p, e in self.powers), start=Fraction(1))

    def __str__(self):
        if not self.powers:
            return "1"
        parts = []
        for p, e in self.powers:
            parts.append(str(p) if e == 1 else f"{p}^{e.numerator}" + (f"/{e.denominator}" if e.denominator != 1 else ""))
        return "*".join(parts)


def odd_ceil(x):
    """Round to nearest integer, then up to the next odd one."""
    n = int(math.floor(x + 0.5))
    return n if n % 2 else n + 1


class ScaleSet:
    """Strictly increasing geometric sequence ``s0 * a**k`` plus per-scale kernel sizes.

    Kernel sizes: integer ratios to ``s0`` use the dilation size
    ``(W - 1) * r + 1``; a non-integer scale that is an integer multiple of
    an earlier non-integer one inherits that slot's dilated size; any other
    scale gets ``odd_ceil(W * r)``.
    """

    def __init__(self, scales, smallest_size, tokens=None):
        scales = [s if isinstance(s, Scale) else Scale.parse(s) for s in scales]
        if not scales:
            raise DomainError("a scale set needs at least one scale")
        if int(smallest_size) != smallest_size or smallest_size < 1 or smallest_size % 2 == 0:
            raise DomainError(f"smallest kernel size must be odd and positive, got {smallest_size}")
        self.scales = tuple(scales)
        self.smallest_size = int(smallest_size)
        self.tokens = tuple(tokens) if tokens is not None else tuple(str(s) for s in scales)
        steps = [b / a for a, b in zip(scales, scales[1:])]
        if steps:
            if any(st != steps[0] for st in steps):
                raise DomainError("scale set must have a constant step")
            if float(steps[0]) <= 1.0:
                raise DomainError("scales must be strictly increasing")
        self.step = steps[0] if steps else None
        self.kernel_sizes = tuple(self._sizes())

    @classmethod
    def parse(cls, text, smallest_size):
        tokens = [t.strip() for t in str(text).split(",") if t.strip()]
        return cls([Scale.parse(t) for t in tokens], smallest_size, tokens=tokens)

    @classmethod
    def geometric(cls, step, count, smallest_size, start="1"):
        step = step if isinstance(step, Scale) else Scale.parse(step)
        start = start if isinstance(start, Scale) else Scale.parse(start)
        return cls([start * step ** k for k in range(count)], smallest_size)

    def __len__(self):
        return len(self.scales)

    def __eq__(self, other):
        return (isinstance(other, ScaleSet) and self.scales == other.scales
                and self.smallest_size == other.smallest_size)

    def __hash__(self):
        return hash((self.scales, self.smallest_size))

    def __repr__(self):
        return f"ScaleSet([{', '.join(self.tokens)}], smallest_size={self.smallest_size})"

    @property
    def values(self):
        return tuple(float(s) for s in self.scales)

    def ratio(self, k, l=0):
        """Exact ``s_k / s_l``."""
        return self.scales[k] / self.scales[l]

    @property
    def integer_ratio(self):
        return tuple(self.ratio(k).is_integer() for k in range(len(self)))

    def _sizes(self):
        W = self.smallest_size
        sizes = []
        for k in range(len(self)):
            r = self.ratio(k)
            if r.is_integer():
                sizes.append((W - 1) * r.as_int() + 1)
                continue
            for k0 in range(k):
                if not self.ratio(k0).is_integer() and self.ratio(k, k0).is_integer():
                    sizes.append((sizes[k0] - 1) * self.ratio(k, k0).as_int() + 1)
                    break
            else:
                sizes.append(odd_ceil(W * float(r)))
        if any(b < a for a, b in zip(sizes, sizes[1:])):
            raise DomainError(f"kernel sizes {sizes} are not nondecreasing")
        return sizes

    def to_dict(self):
        return {
            "tokens": list(self.tokens),
            "exact": [str(s) for s in self.scales],
            "values": list(self.values),
            "step": str(self.step) if self.step is not None else None,
            "count": len(self),
            "smallest_size": self.smallest_size,
            "kernel_sizes": list(self.kernel_sizes),
            "integer_ratio": list(self.integer_ratio),
        }

    @classmethod
    def from_dict(cls, data):
        return cls([Scale.parse(s) for s in data["exact"]], data["smallest_size"], tokens=data["tokens"])
