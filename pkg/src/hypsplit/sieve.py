"""Windowed sieve producing fully factored values of linear forms.

All forms of a series share one stride table (one prime enumeration) and
one pass per window.  For each prime power l^k <= value_bound and each
form u*n+v with l coprime to u, the table holds the current offset i such
that u*(next_n+i)+v = 0 (mod l^k); striding a window updates the offsets
in place, so consecutive windows resume with no re-initialization.

Prime powers are sieved as independent strides, each contributing one unit
of multiplicity; a final per-cell check compares the accumulated product
against |u*n+v|, so an undersized value_bound surfaces as BoundExceeded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .factored import FactorBase, FactoredInt
from .series import LinearFactor

MAX_FACTORS = 16  # distinct primes of a value < 2^63 (15 suffices; one spare)

_I8 = np.int8
_I32 = np.int32
_I64 = np.int64
_U8 = np.uint8


class SieveError(ValueError):
    pass


class UnextractedContent(SieveError):
    """A sieving prime divides both u and v of a form; the catalog normal
    form should have pulled it into the constant."""


class BoundExceeded(SieveError):
    """Some |f(n)| kept a prime factor above value_bound (mis-sized config)."""


@dataclass(frozen=True)
class SieveConfig:
    window_width: int
    value_bound: int
    forms: tuple[LinearFactor, ...]

    def __post_init__(self):
        if self.window_width < 1:
            raise SieveError("window_width must be >= 1")
        if self.value_bound < 1:
            raise SieveError("value_bound must be >= 1")


def default_window_width(n_terms: int) -> int:
    """N / (4 log2 N) clamped to [2^14, 2^22]."""
    if n_terms < 2:
        return 1 << 14
    w = n_terms * 1.0 / (4.0 * np.log2(n_terms))
    return int(min(max(w, 1 << 14), 1 << 22))


def _prime_powers(primes: np.ndarray, bound: int):
    """(value, prime_slot, k) for every l^k <= bound, k >= 1."""
    vals = [primes.astype(_I64)]
    slots = [np.arange(len(primes), dtype=_I32)]
    ks = [np.ones(len(primes), dtype=_I32)]
    cur_val = primes.astype(_I64)
    cur_prime = primes.astype(_I64)
    cur_slot = slots[0]
    k = 1
    while len(cur_val):
        # cur*p <= bound tested as cur <= bound//p to stay inside int64
        mask = cur_val <= bound // cur_prime
        if not mask.any():
            break
        k += 1
        cur_val = cur_val[mask] * cur_prime[mask]
        cur_prime = cur_prime[mask]
        cur_slot = cur_slot[mask]
        vals.append(cur_val)
        slots.append(cur_slot)
        ks.append(np.full(len(cur_val), k, dtype=_I32))
    return np.concatenate(vals), np.concatenate(slots), np.concatenate(ks)


def _first_offsets(m_vals, u: int, v: int, n_start: int):
    """Smallest i >= 0 with u*(n_start+i)+v = 0 (mod m) for each modulus,
    vectorized over prime-power moduli coprime to u (u small)."""
    m = m_vals.astype(object)
    # inverse of u mod m: (t*m + 1)/|u| for the unique t in [0, |u|)
    au = abs(u)
    t = np.zeros(len(m), dtype=object)
    if au > 1:
        found = np.zeros(len(m), dtype=bool)
        for cand in range(au):
            hit = ~found & ((cand * m + 1) % au == 0).astype(bool)
            t[hit] = cand
            found |= hit
    inv = (t * m + 1) // au
    if u < 0:
        inv = m - inv
    rhs = (-(v + u * n_start)) % m
    return ((rhs * inv) % m).astype(_I64)


class SieveState:
    """Resumable sieve over a fixed set of forms.

    Owns the per-(form, prime power) offsets plus reusable window buffers.
    Strictly sequential: each window updates the offsets for the next one.
    """

    def __init__(self, config: SieveConfig, n_start: int, base: FactorBase | None = None):
        if base is None:
            base = FactorBase(config.value_bound)
        elif base.bound < config.value_bound:
            raise SieveError("factor base bound below sieve value_bound")
        self.base = base
        self.config = config
        self.next_n = int(n_start)
        nf = len(config.forms)
        prime_mask = base.primes <= config.value_bound
        pp_val, pp_slot, pp_k = _prime_powers(base.primes[prime_mask], config.value_bound)

        tab_m, tab_slot, tab_first, tab_form = [], [], [], []
        offsets = []
        for fi, form in enumerate(config.forms):
            u, v = form.u, form.v
            keep = np.ones(len(pp_val), dtype=bool)
            lvals = base.primes[pp_slot]
            divides_u = (abs(u) % lvals) == 0
            if divides_u.any():
                bad = divides_u & ((abs(v) % lvals) == 0)
                if bad.any():
                    l = int(lvals[np.flatnonzero(bad)[0]])
                    raise UnextractedContent(
                        f"prime {l} divides both coefficients of ({u}n+{v})")
                keep &= ~divides_u  # form value is never divisible by these
            tab_m.append(pp_val[keep])
            tab_slot.append(pp_slot[keep])
            tab_first.append((pp_k[keep] == 1).astype(_U8))
            tab_form.append(np.full(int(keep.sum()), fi, dtype=_I8))
            offsets.append(_first_offsets(pp_val[keep], u, v, self.next_n))

        self.tab_m = np.ascontiguousarray(np.concatenate(tab_m), dtype=_I64)
        self.tab_slot = np.ascontiguousarray(np.concatenate(tab_slot), dtype=_I32)
        self.tab_first = np.ascontiguousarray(np.concatenate(tab_first), dtype=_U8)
        self.tab_form = np.ascontiguousarray(np.concatenate(tab_form), dtype=_I8)
        self.offsets = np.ascontiguousarray(np.concatenate(offsets), dtype=_I64)
        self.update_counts = np.zeros(len(self.tab_m), dtype=_I64)

        w = config.window_width
        self._counts = np.zeros((nf, w), dtype=_I32)
        self._slots = np.zeros((nf, w, MAX_FACTORS), dtype=_I32)
        self._mults = np.zeros((nf, w, MAX_FACTORS), dtype=_I64)
        self._signs = np.zeros((nf, w), dtype=_I8)
        self._us = np.array([f.u for f in config.forms], dtype=_I64)
        self._vs = np.array([f.v for f in config.forms], dtype=_I64)

    def live_bytes(self) -> int:
        """Approximate live allocation (window buffers + stride table)."""
        arrays = (self.tab_m, self.tab_slot, self.tab_first, self.tab_form,
                  self.offsets, self.update_counts,
                  self._counts, self._slots, self._mults, self._signs)
        return sum(a.nbytes for a in arrays)

    def window_raw(self, width: int | None = None):
        """Sieve the next window; returns (n0, width, counts, slots, mults, signs).

        The returned arrays are reused by the next call.
        """
        w = self.config.window_width if width is None else int(width)
        if w < 1 or w > self.config.window_width:
            raise SieveError("width must be in [1, window_width]")
        n0 = self.next_n
        self._counts[:, :w] = 0
        rc = K.sieve_pass(self.tab_m, self.tab_slot, self.tab_first, self.tab_form,
                          self.offsets, w, self._counts, self._slots, self._mults,
                          self.update_counts)
        if rc == -2:
            raise SieveError("factor-list overflow (value_bound out of int64 range?)")
        f, i, residual = K.complete_window(n0, w, self._us, self._vs, self.base.primes,
                                           self._counts, self._slots, self._mults,
                                           self._signs)
        if f >= 0:
            form = self.config.forms[f]
            if residual == 0:
                raise SieveError(f"form ({form.u}n+{form.v}) vanishes at n = {n0 + i}")
            raise BoundExceeded(
                f"|{form.u}*{n0 + i}+{form.v}| has residual factor {residual} "
                f"above value_bound {self.config.value_bound}")
        self.next_n = n0 + w
        return n0, w, self._counts, self._slots, self._mults, self._signs


def init(config: SieveConfig, n_start: int, base: FactorBase | None = None) -> SieveState:
    """Set up offsets so the state invariant holds at n_start."""
    return SieveState(config, n_start, base)


def next_window(state: SieveState, config: SieveConfig, width: int | None = None):
    """Factor the next `width` values of every form.

    Returns one list per form holding FactoredInt values (cofactor +-1,
    exponents are the power-of-the-base-form multiplicities only; form
    powers and series constants are applied by the engines).
    """
    if config is not state.config:
        raise SieveError("config does not match the state it initialized")
    n0, w, counts, slots, mults, signs = state.window_raw(width)
    out = []
    for f in range(len(config.forms)):
        row = []
        for i in range(w):
            c = int(counts[f, i])
            row.append(FactoredInt(slots[f, i, :c].copy(),
                                   mults[f, i, :c].copy(),
                                   int(signs[f, i]), _checked=True))
        out.append(row)
    return out
