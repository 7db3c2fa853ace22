"""Binary splitting engines over a term range [n1, n2).

Three engines produce the (P, Q, T) triple with T/Q = S(n1, n2):

* classic: plain big integers, the textbook recurrences.
* factored: every leaf arrives fully factored from the window sieve and the
  tree combines factored representations only (products are exponent
  merges; the T combination extracts the common exponent part and keeps an
  exact unfactored cofactor).
* hybrid: plain integers below a cut-off span, factored above it.  At each
  boundary node the factored P and Q are batch-accumulated from the sieve
  output, so the sub-cutoff recursion runs at full classic speed while the
  expensive top-of-tree products become exponent merges.

The parallel driver partitions [0, N) into contiguous subranges, evaluates
them independently (one sieve state per worker) and merges the results as
a balanced tree; any merge schedule over contiguous ranges yields the same
values, so the result is value-identical to a single-threaded run.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from gmpy2 import mpz

from . import _kernels as K
from . import sieve as sievemod
from .factored import FactorBase, FactoredInt, partial_add, partial_mult
from .series import SeriesDef, eval_a, eval_p, eval_q
from .sieve import SieveConfig, default_window_width

_I32 = np.int32
_I64 = np.int64
_EMPTY_S = np.empty(0, dtype=_I32)
_EMPTY_E = np.empty(0, dtype=_I64)


class RangeMismatch(ValueError):
    pass


@dataclass
class SplitTriple:
    n1: int
    n2: int
    plain: tuple | None
    factored: tuple | None
    base: FactorBase | None = None

    @property
    def form(self) -> str:
        if self.plain is not None and self.factored is not None:
            return "both"
        return "plain" if self.plain is not None else "factored"


@dataclass
class EngineConfig:
    mode: str = "hybrid"
    cutoff_span: int | None = None
    threads: int = 1
    window_width: int | None = None
    base: FactorBase | None = None

    def __post_init__(self):
        if self.mode not in ("classic", "factored", "hybrid"):
            raise ValueError(f"unknown engine mode {self.mode!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.cutoff_span is not None and self.cutoff_span < 1:
            raise ValueError("cutoff_span must be >= 1")


def default_cutoff_span(n_terms: int) -> int:
    """Largest power of two <= N/log2(N) (compensations between numerator
    and denominator only pay off once spans reach that order)."""
    if n_terms < 4:
        return 2
    target = n_terms / np.log2(n_terms)
    return 1 << max(int(target).bit_length() - 1, 1)


def series_forms(sdef: SeriesDef):
    """Deduplicated linear forms of p and q plus per-side (index, power) lists."""
    forms: list = []
    index: dict[tuple[int, int], int] = {}
    sel = {"p": [], "q": []}
    for side in ("p", "q"):
        for f in getattr(sdef, f"{side}_factors"):
            key = (f.u, f.v)
            if key not in index:
                index[key] = len(forms)
                forms.append(f.__class__(f.u, f.v, 1))
            sel[side].append((index[key], f.power))
    return tuple(forms), sel["p"], sel["q"]


def _forms_value_bound(forms, n_lo: int, n_hi: int) -> int:
    bound = 1
    for f in forms:
        for n in (n_lo, max(n_hi - 1, n_lo)):
            bound = max(bound, abs(f.u * n + f.v))
    return bound


def series_factor_base(sdef: SeriesDef, n_terms: int) -> FactorBase:
    """Factor base covering every prime factor of p(n), q(n) for n < n_terms."""
    forms, _, _ = series_forms(sdef)
    bound = _forms_value_bound(forms, 0, max(n_terms, 1))
    for side in ("p", "q"):
        for prime, _e in getattr(sdef, f"{side}_const_factors"):
            bound = max(bound, prime)
    return FactorBase(bound)


# --- instrumentation --------------------------------------------------------


class EngineProbe:
    """Per-level size statistics, keyed by span (power-of-two bucket)."""

    def __init__(self):
        self.levels: dict[int, dict] = {}

    def _bucket(self, span: int) -> dict:
        key = 1 << (span - 1).bit_length()
        return self.levels.setdefault(
            key, {"count": 0, "plain_bits": 0, "t_cofactor_bits": 0,
                  "t_factored_bits": 0.0, "pq_slots": 0})

    def record_plain(self, span, P, Q, T):
        b = self._bucket(span)
        b["count"] += 1
        b["plain_bits"] = max(b["plain_bits"],
                              P.bit_length(), Q.bit_length(), T.bit_length())

    def record_factored(self, span, P, Q, T, base):
        b = self._bucket(span)
        b["count"] += 1
        b["t_cofactor_bits"] = max(b["t_cofactor_bits"], T.cof.bit_length())
        b["t_factored_bits"] = max(b["t_factored_bits"], T.factored_bits(base))
        b["pq_slots"] = max(b["pq_slots"], len(P.slots), len(Q.slots))

    def to_dict(self) -> dict:
        return {str(k): v for k, v in sorted(self.levels.items())}


# --- classic engine ---------------------------------------------------------


def _classic_triple(sdef, n1, n2, probe=None):
    # Leaf T(n, n+1) = a(n) * q(n): with the summand convention
    # S(n1, n2) = sum a(n) prod_{i=n1}^{n-1} p(i)/q(i) this is the leaf that
    # makes T/Q = S hold through the merge recurrences (a(n) * p(n) would
    # evaluate the shifted sum with products running through i = n).
    if n2 - n1 == 1:
        P = mpz(eval_p(sdef, n1))
        Q = mpz(eval_q(sdef, n1))
        T = mpz(eval_a(sdef, n1)) * Q
        return P, Q, T
    m = (n1 + n2) >> 1
    P1, Q1, T1 = _classic_triple(sdef, n1, m, probe)
    P2, Q2, T2 = _classic_triple(sdef, m, n2, probe)
    P = P1 * P2
    Q = Q1 * Q2
    T = T1 * Q2 + P1 * T2
    if probe is not None:
        probe.record_plain(n2 - n1, P, Q, T)
    return P, Q, T


def classic_eval(sdef: SeriesDef, n1: int, n2: int, probe: EngineProbe | None = None) -> SplitTriple:
    """Exact plain-integer P, Q, T with midpoint splitting."""
    if not 0 <= n1 < n2:
        raise RangeMismatch(f"need 0 <= n1 < n2, got ({n1}, {n2})")
    return SplitTriple(n1, n2, _classic_triple(sdef, n1, n2, probe), None)


# --- sieve-fed leaves -------------------------------------------------------


class _WindowCursor:
    """Sequential window supplier for one contiguous range [start, stop)."""

    def __init__(self, sdef, start, stop, base, width=None):
        self.forms, self.p_sel, self.q_sel = series_forms(sdef)
        self.start, self.stop = start, stop
        span = stop - start
        width = width or default_window_width(span)
        width = max(1, min(width, span))
        bound = _forms_value_bound(self.forms, start, stop)
        if bound > base.bound:
            raise ValueError("factor base bound too small for this range")
        self.config = SieveConfig(width, bound, self.forms)
        self.state = sievemod.init(self.config, start, base)
        self.w0 = self.w1 = start
        self.counts = self.slots = self.mults = self.signs = None

    def ensure(self, n: int):
        """Advance so that n lies in the current window."""
        while n >= self.w1:
            remaining = self.stop - self.w1
            w = min(self.config.window_width, remaining)
            n0, wlen, self.counts, self.slots, self.mults, self.signs = \
                self.state.window_raw(w)
            self.w0, self.w1 = n0, n0 + wlen


def _const_arrays(sdef, side, base):
    fac = getattr(sdef, f"{side}_const_factors")
    slots = np.array([base.slot(p) for p, _ in fac], dtype=_I32)
    exps = np.array([e for _, e in fac], dtype=_I64)
    order = np.argsort(slots)
    sign = -1 if getattr(sdef, f"{side}_const") < 0 else 1
    return slots[order], exps[order], sign


class _FactoredLeafSource:
    """Fully factored p(n), q(n) leaves, assembled window by window."""

    def __init__(self, sdef, start, stop, base, width=None):
        self.cur = _WindowCursor(sdef, start, stop, base, width)
        self.sdef = sdef
        self.base = base
        self._sides = {}
        for side, sel in (("p", self.cur.p_sel), ("q", self.cur.q_sel)):
            cslots, cexps, csign = _const_arrays(sdef, side, base)
            cap = sievemod.MAX_FACTORS * max(len(sel), 1) + len(cslots)
            w = self.cur.config.window_width
            self._sides[side] = {
                "sel_idx": np.array([i for i, _ in sel], dtype=_I32),
                "sel_weight": np.array([p for _, p in sel], dtype=_I64),
                "const_slots": cslots, "const_exps": cexps, "const_sign": csign,
                "counts": np.zeros(w, dtype=_I32),
                "slots": np.zeros((w, cap), dtype=_I32),
                "exps": np.zeros((w, cap), dtype=_I64),
                "signs": np.zeros(w, dtype=np.int8),
            }
        self._combined_for = None

    def _combine(self):
        w = self.cur.w1 - self.cur.w0
        for side in ("p", "q"):
            d = self._sides[side]
            rc = K.combine_forms(self.cur.counts, self.cur.slots, self.cur.mults,
                                 self.cur.signs, w, d["sel_idx"], d["sel_weight"],
                                 d["const_slots"], d["const_exps"],
                                 d["counts"], d["slots"], d["exps"], d["signs"])
            if rc == -2:
                raise RuntimeError("leaf capacity overflow")
        self._combined_for = self.cur.w0

    def leaf(self, n: int):
        self.cur.ensure(n)
        if self._combined_for != self.cur.w0:
            self._combine()
        i = n - self.cur.w0
        out = []
        for side in ("p", "q"):
            d = self._sides[side]
            c = int(d["counts"][i])
            out.append(FactoredInt(d["slots"][i, :c].copy(), d["exps"][i, :c].copy(),
                                   int(d["signs"][i]) * d["const_sign"], _checked=True))
        return out[0], out[1]


class _RangeAccumulator:
    """Factored P(a, b), Q(a, b) by summing sieve exponents over [a, b).

    Windows are consumed in place, so each overlapping segment is folded
    into the dense scratch vectors before the cursor advances.
    """

    def __init__(self, sdef, start, stop, base, width=None):
        self.cur = _WindowCursor(sdef, start, stop, base, width)
        self.base = base
        self.dense = {"p": np.zeros(len(base), dtype=_I64),
                      "q": np.zeros(len(base), dtype=_I64)}
        self.sides = {}
        for side, sel in (("p", self.cur.p_sel), ("q", self.cur.q_sel)):
            cslots, cexps, csign = _const_arrays(sdef, side, base)
            self.sides[side] = (sel, cslots, cexps, csign)

    def range_factored(self, a: int, b: int):
        """Called with consecutive contiguous ranges, left to right."""
        span = b - a
        neg = {"p": 0, "q": 0}
        for d in self.dense.values():
            d[:] = 0
        pos = a
        while pos < b:
            self.cur.ensure(pos)
            hi = min(b, self.cur.w1)
            lo_i, hi_i = pos - self.cur.w0, hi - self.cur.w0
            for side in ("p", "q"):
                sel = self.sides[side][0]
                dense = self.dense[side]
                for fi, power in sel:
                    K.accumulate_exponents(dense, self.cur.counts, self.cur.slots,
                                           self.cur.mults, fi, lo_i, hi_i, power)
                    if power & 1:
                        neg[side] += K.count_negative(self.cur.signs, fi, lo_i, hi_i)
            pos = hi
        out = []
        for side in ("p", "q"):
            _sel, cslots, cexps, csign = self.sides[side]
            dense = self.dense[side]
            np.add.at(dense, cslots, cexps * span)
            nz = np.flatnonzero(dense)
            sign = -1 if (csign < 0 and span & 1) else 1
            if neg[side] & 1:
                sign = -sign
            out.append(FactoredInt(nz.astype(_I32), dense[nz].copy(), sign, _checked=True))
        return out[0], out[1]


# --- factored and hybrid engines --------------------------------------------


def _merge_factored(lhs, rhs, base, probe=None, span=None):
    P1, Q1, T1 = lhs
    P2, Q2, T2 = rhs
    P = partial_mult(P1, P2)
    Q = partial_mult(Q1, Q2)
    T = partial_add(partial_mult(Q2, T1), partial_mult(P1, T2), base)
    if probe is not None:
        probe.record_factored(span, P, Q, T, base)
    return P, Q, T


def fast_eval(sdef: SeriesDef, n1: int, n2: int, base: FactorBase | None = None,
              window_width: int | None = None, probe: EngineProbe | None = None) -> SplitTriple:
    """Fully factored splitting: P, Q stay fully factored (cofactor +-1);
    a(n) multiplies into T's cofactor at the leaves."""
    if not 0 <= n1 < n2:
        raise RangeMismatch(f"need 0 <= n1 < n2, got ({n1}, {n2})")
    if base is None:
        base = series_factor_base(sdef, n2)
    src = _FactoredLeafSource(sdef, n1, n2, base, window_width)

    def rec(a, b):
        if b - a == 1:
            P, Q = src.leaf(a)
            # a(n) stays unfactored in the cofactor
            T = FactoredInt(Q.slots, Q.exps, Q.cof * mpz(eval_a(sdef, a)), _checked=True)
            return P, Q, T
        m = (a + b) >> 1
        return _merge_factored(rec(a, m), rec(m, b), base, probe, b - a)

    return SplitTriple(n1, n2, None, rec(n1, n2), base)


def hybrid_eval(sdef: SeriesDef, n1: int, n2: int, cfg: EngineConfig | None = None,
                probe: EngineProbe | None = None) -> SplitTriple:
    """Plain integers below the cut-off span, factored representation above.

    Boundary nodes carry both representations; the plain component is
    dropped at the first merge above the cut-off.
    """
    if not 0 <= n1 < n2:
        raise RangeMismatch(f"need 0 <= n1 < n2, got ({n1}, {n2})")
    cfg = cfg or EngineConfig()
    cutoff = cfg.cutoff_span or default_cutoff_span(n2 - n1)
    base = cfg.base or series_factor_base(sdef, n2)
    acc = _RangeAccumulator(sdef, n1, n2, base, cfg.window_width)

    def rec(a, b) -> SplitTriple:
        span = b - a
        if span <= cutoff:
            plain = _classic_triple(sdef, a, b, probe)
            fP, fQ = acc.range_factored(a, b)
            fT = FactoredInt(_EMPTY_S, _EMPTY_E, plain[2], _checked=True)
            return SplitTriple(a, b, plain, (fP, fQ, fT), base)
        m = (a + b) >> 1
        left, right = rec(a, m), rec(m, b)
        fac = _merge_factored(left.factored, right.factored, base, probe, span)
        return SplitTriple(a, b, None, fac, base)

    return rec(n1, n2)


# --- merging and the parallel driver -----------------------------------------


def merge(left: SplitTriple, right: SplitTriple) -> SplitTriple:
    """Combine adjacent triples; merges every representation both sides carry."""
    if left.n2 != right.n1:
        raise RangeMismatch(f"ranges ({left.n1},{left.n2}) and ({right.n1},{right.n2}) "
                            "are not adjacent")
    plain = None
    if left.plain is not None and right.plain is not None:
        P1, Q1, T1 = left.plain
        P2, Q2, T2 = right.plain
        plain = (P1 * P2, Q1 * Q2, T1 * Q2 + P1 * T2)
    factored = None
    base = left.base or right.base
    if left.factored is not None and right.factored is not None:
        factored = _merge_factored(left.factored, right.factored, base,
                                   None, right.n2 - left.n1)
    if plain is None and factored is None:
        raise RangeMismatch("triples share no representation to merge")
    return SplitTriple(left.n1, right.n2, plain, factored, base)


def _partition(n_terms: int, k: int):
    k = max(1, min(k, n_terms))
    widths = [n_terms // k + (1 if i < n_terms % k else 0) for i in range(k)]
    bounds = []
    lo = 0
    for w in widths:
        bounds.append((lo, lo + w))
        lo += w
    return bounds


def _run_engine(sdef, n1, n2, cfg, base, probe=None):
    if cfg.mode == "classic":
        return classic_eval(sdef, n1, n2, probe)
    if cfg.mode == "factored":
        return fast_eval(sdef, n1, n2, base, cfg.window_width, probe)
    sub = EngineConfig(mode="hybrid", cutoff_span=cfg.cutoff_span or
                       default_cutoff_span(n2 - n1), threads=1,
                       window_width=cfg.window_width, base=base)
    return hybrid_eval(sdef, n1, n2, sub, probe)


def parallel_eval(sdef: SeriesDef, n_terms: int, cfg: EngineConfig | None = None,
                  probe: EngineProbe | None = None) -> SplitTriple:
    """Evaluate (0, n_terms) across cfg.threads contiguous subranges and
    merge the partial triples as a balanced tree."""
    if n_terms < 1:
        raise RangeMismatch("n_terms must be >= 1")
    cfg = cfg or EngineConfig()
    base = cfg.base
    if base is None and cfg.mode != "classic":
        base = series_factor_base(sdef, n_terms)
    if cfg.mode == "hybrid" and cfg.cutoff_span is None:
        # one cut-off for all workers, derived from the full range
        cfg = EngineConfig(mode=cfg.mode, cutoff_span=default_cutoff_span(n_terms),
                           threads=cfg.threads, window_width=cfg.window_width, base=base)
    bounds = _partition(n_terms, cfg.threads)
    if len(bounds) == 1:
        return _run_engine(sdef, 0, n_terms, cfg, base, probe)
    with ThreadPoolExecutor(max_workers=len(bounds)) as ex:
        triples = list(ex.map(lambda ab: _run_engine(sdef, ab[0], ab[1], cfg, base, probe),
                              bounds))
    while len(triples) > 1:
        nxt = [merge(triples[i], triples[i + 1]) for i in range(0, len(triples) - 1, 2)]
        if len(triples) & 1:
            nxt.append(triples[-1])
        triples = nxt
    return triples[0]
