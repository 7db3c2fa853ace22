"""Integers in factored representation over a prime base.

A value is stored as prod_{p in B} p^alpha_p * r with nonnegative exponents
alpha_p (sparse, sorted by prime slot) and a signed arbitrary-precision
cofactor r.  The representation is fully factored when r = +-1.  Zero is
r = 0 with no exponents.

Multiplication adds exponent vectors and multiplies cofactors; addition
extracts the slot-wise minimum of the exponents and pushes the differences
into an exact cofactor sum.  Neither operation factors cofactors; only the
sieve produces fully factored leaves.
"""

from __future__ import annotations

import numpy as np
from gmpy2 import mpz

from . import _kernels as K

_I32 = np.int32
_I64 = np.int64
_EMPTY_S = np.empty(0, dtype=_I32)
_EMPTY_E = np.empty(0, dtype=_I64)


class NotFullyFactored(ValueError):
    """Operation requires cofactor +-1."""


def primes_upto(bound: int) -> np.ndarray:
    """All primes <= bound, by a segmented Eratosthenes sieve."""
    if bound < 2:
        return np.empty(0, dtype=_I64)
    root = int(bound ** 0.5) + 1
    small = np.ones(root + 1, dtype=bool)
    small[:2] = False
    for i in range(2, int(root ** 0.5) + 1):
        if small[i]:
            small[i * i:: i] = False
    base_primes = np.flatnonzero(small)
    chunks = [base_primes[base_primes <= bound]]
    seg = 1 << 20
    lo = root + 1
    while lo <= bound:
        hi = min(lo + seg, bound + 1)
        mark = np.ones(hi - lo, dtype=bool)
        for p in base_primes:
            p = int(p)
            start = ((lo + p - 1) // p) * p
            mark[start - lo:: p] = False
        chunks.append(np.flatnonzero(mark) + lo)
        lo = hi
    return np.concatenate(chunks).astype(_I64)


class FactorBase:
    """The sorted set of all primes <= bound, with slot lookup."""

    __slots__ = ("primes", "bound", "_log2", "_mpz_primes")

    def __init__(self, bound: int):
        self.bound = int(bound)
        self.primes = primes_upto(self.bound)
        self._log2 = None
        self._mpz_primes = None

    def __len__(self):
        return len(self.primes)

    def slot(self, p: int) -> int:
        i = int(np.searchsorted(self.primes, p))
        if i >= len(self.primes) or self.primes[i] != p:
            raise KeyError(f"{p} is not in the factor base (bound {self.bound})")
        return i

    @property
    def log2_primes(self) -> np.ndarray:
        if self._log2 is None:
            self._log2 = np.log2(self.primes.astype(np.float64))
        return self._log2

    def mpz_prime(self, slot: int) -> mpz:
        if self._mpz_primes is None:
            self._mpz_primes = [None] * len(self.primes)
        v = self._mpz_primes[slot]
        if v is None:
            v = mpz(int(self.primes[slot]))
            self._mpz_primes[slot] = v
        return v


class FactoredInt:
    """prod primes[slots[i]]^exps[i] * cof over a FactorBase."""

    __slots__ = ("slots", "exps", "cof")

    def __init__(self, slots, exps, cof, _checked=False):
        cof = mpz(cof)
        if cof == 0:
            slots, exps = _EMPTY_S, _EMPTY_E
        if not _checked:
            slots = np.ascontiguousarray(slots, dtype=_I32)
            exps = np.ascontiguousarray(exps, dtype=_I64)
            if len(slots) != len(exps):
                raise ValueError("slot/exponent length mismatch")
            if len(slots) and (np.any(exps <= 0) or np.any(np.diff(slots) <= 0)):
                raise ValueError("slots must be strictly increasing with positive exponents")
        self.slots = slots
        self.exps = exps
        self.cof = cof

    @classmethod
    def one(cls) -> "FactoredInt":
        return cls(_EMPTY_S, _EMPTY_E, 1, _checked=True)

    @classmethod
    def zero(cls) -> "FactoredInt":
        return cls(_EMPTY_S, _EMPTY_E, 0, _checked=True)

    @classmethod
    def from_pairs(cls, base: FactorBase, pairs, cof=1) -> "FactoredInt":
        """Build from (prime, exponent) pairs; primes looked up in the base."""
        pairs = sorted((base.slot(p), int(e)) for p, e in pairs if e)
        slots = np.array([s for s, _ in pairs], dtype=_I32)
        exps = np.array([e for _, e in pairs], dtype=_I64)
        return cls(slots, exps, cof)

    @property
    def is_zero(self) -> bool:
        return self.cof == 0

    @property
    def is_fully_factored(self) -> bool:
        return abs(self.cof) == 1

    def factored_bits(self, base: FactorBase) -> float:
        """Size in bits of the factored part, sum(e * log2 p)."""
        if not len(self.slots):
            return 0.0
        return float(np.dot(self.exps.astype(np.float64), base.log2_primes[self.slots]))

    def __repr__(self):
        return f"FactoredInt({len(self.slots)} slots, cof {self.cof.bit_length()} bits)"


def full_factor(n, base: FactorBase) -> FactoredInt:
    """Factor n over the base by trial division; the unfactored remainder
    stays in the cofactor."""
    n = mpz(n)
    if n == 0:
        return FactoredInt.zero()
    sign = -1 if n < 0 else 1
    n = abs(n)
    slots = []
    exps = []
    for slot, p in enumerate(base.primes):
        p = int(p)
        if p * p > n:
            break
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            slots.append(slot)
            exps.append(e)
    if n > 1 and n <= base.bound:
        slot = base.slot(int(n))
        if slots and slots[-1] == slot:
            exps[-1] += 1
        else:
            slots.append(slot)
            exps.append(1)
        n = mpz(1)
    return FactoredInt(np.array(slots, dtype=_I32), np.array(exps, dtype=_I64), sign * n)


def partial_mult(x: FactoredInt, y: FactoredInt) -> FactoredInt:
    """value(out) = value(x) * value(y); exponents added slot-wise."""
    if x.is_zero or y.is_zero:
        return FactoredInt.zero()
    s, e = K.merge_add(x.slots, x.exps, y.slots, y.exps)
    return FactoredInt(s, e, x.cof * y.cof, _checked=True)


def _power_list(slots, exps, base: FactorBase):
    return [base.mpz_prime(int(s)) ** int(e) for s, e in zip(slots, exps)]


def product_tree(values) -> mpz:
    """Balanced product of a list of mpz (never a left-to-right fold)."""
    vals = [mpz(v) for v in values]
    if not vals:
        return mpz(1)
    while len(vals) > 1:
        nxt = [vals[i] * vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) & 1:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def partial_add(x: FactoredInt, y: FactoredInt, base: FactorBase) -> FactoredInt:
    """value(out) = value(x) + value(y).

    Output exponents are gamma_p = min(alpha_p, beta_p); the exponent
    differences are expanded through balanced product trees into the exact
    cofactor sum.
    """
    if x.is_zero:
        return y
    if y.is_zero:
        return x
    gs, ge, d1s, d1e, d2s, d2e = K.merge_min_split(x.slots, x.exps, y.slots, y.exps)
    r = product_tree(_power_list(d1s, d1e, base)) * x.cof \
        + product_tree(_power_list(d2s, d2e, base)) * y.cof
    if r == 0:
        return FactoredInt.zero()
    return FactoredInt(gs, ge, r, _checked=True)


def expand(x: FactoredInt, base: FactorBase) -> mpz:
    """The plain integer value, via binary powering and a balanced product
    tree over the prime powers and the cofactor."""
    if x.is_zero:
        return mpz(0)
    return product_tree(_power_list(x.slots, x.exps, base)) * x.cof


def gcd_by_exponents(x: FactoredInt, y: FactoredInt) -> FactoredInt:
    """gcd of two fully factored values by comparing exponent vectors."""
    if not x.is_fully_factored or not y.is_fully_factored:
        raise NotFullyFactored("gcd_by_exponents requires cofactors +-1")
    s, e = K.merge_min(x.slots, x.exps, y.slots, y.exps)
    return FactoredInt(s, e, 1, _checked=True)


def value_equal(x: FactoredInt, y: FactoredInt, base: FactorBase) -> bool:
    """Representation-independent value comparison."""
    return expand(x, base) == expand(y, base)


def to_text(x: FactoredInt, base: FactorBase) -> str:
    """Debug form 'p1^e1 * p2^e2 * ... * r' (fixture format)."""
    parts = [f"{int(base.primes[s])}^{int(e)}" for s, e in zip(x.slots, x.exps)]
    parts.append(str(x.cof))
    return " * ".join(parts)


def from_text(text: str, base: FactorBase) -> FactoredInt:
    parts = [p.strip() for p in text.split("*")]
    pairs = []
    for part in parts[:-1]:
        pstr, _, estr = part.partition("^")
        pairs.append((int(pstr), int(estr or 1)))
    return FactoredInt.from_pairs(base, pairs, cof=int(parts[-1]))
