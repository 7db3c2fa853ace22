"""Pure-Python kernel backend.

Reference implementation of the hot loops: sparse exponent-vector merges,
the window sieve inner loop, leaf assembly and range accumulation.  The
compiled backend in ``_native.pyx`` mirrors these semantics exactly; the
cross-backend equivalence is pinned by tests/test_kernels.py.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"

_I32 = np.int32
_I64 = np.int64


def _empty_pair():
    return np.empty(0, dtype=_I32), np.empty(0, dtype=_I64)


def merge_add(s1, e1, s2, e2):
    """Union of two sorted sparse exponent vectors, exponents added."""
    if len(s1) == 0:
        return s2.copy(), e2.copy()
    if len(s2) == 0:
        return s1.copy(), e1.copy()
    s = np.concatenate([s1, s2])
    e = np.concatenate([e1, e2])
    order = np.argsort(s, kind="mergesort")
    s = s[order]
    e = e[order]
    keep = np.empty(len(s), dtype=bool)
    keep[0] = True
    np.not_equal(s[1:], s[:-1], out=keep[1:])
    pos = np.cumsum(keep) - 1
    out_s = s[keep].astype(_I32, copy=True)
    out_e = np.zeros(len(out_s), dtype=_I64)
    np.add.at(out_e, pos, e)
    return out_s, out_e


def merge_min(s1, e1, s2, e2):
    """Slot-wise min over the intersection (exponent-gcd)."""
    common, i1, i2 = np.intersect1d(s1, s2, assume_unique=True, return_indices=True)
    return common.astype(_I32, copy=True), np.minimum(e1[i1], e2[i2]).astype(_I64)


def merge_min_split(s1, e1, s2, e2):
    """Split two exponent vectors into (common min, residual1, residual2).

    Returns (gs, ge, d1s, d1e, d2s, d2e) with e1 = g + d1 and e2 = g + d2
    slot-wise, g supported on the intersection only.
    """
    if len(s1) == 0 or len(s2) == 0:
        gs, ge = _empty_pair()
        return gs, ge, s1.copy(), e1.copy(), s2.copy(), e2.copy()
    common, i1, i2 = np.intersect1d(s1, s2, assume_unique=True, return_indices=True)
    g = np.minimum(e1[i1], e2[i2])
    r1 = e1.copy()
    r1[i1] -= g
    m1 = r1 > 0
    r2 = e2.copy()
    r2[i2] -= g
    m2 = r2 > 0
    return (
        common.astype(_I32, copy=True),
        g.astype(_I64),
        s1[m1].astype(_I32, copy=True),
        r1[m1],
        s2[m2].astype(_I32, copy=True),
        r2[m2],
    )


def sieve_pass(tab_m, tab_slot, tab_first, tab_form, offsets, width,
               counts, slots, mults, upd_counts):
    """One window of the stride sieve over all (form, prime-power) entries.

    Marks prime slots into the per-cell factor lists (first power appends,
    higher powers bump the multiplicity of the already-present slot) and
    leaves ``offsets`` pointing at the next window.  Returns 0, or -2 on
    per-cell factor-list overflow.
    """
    maxf = slots.shape[2]
    for t in range(len(tab_m)):
        i = int(offsets[t])
        m = int(tab_m[t])
        f = int(tab_form[t])
        sl = int(tab_slot[t])
        if i < width:
            upd_counts[t] += (width - i + m - 1) // m
        if tab_first[t]:
            while i < width:
                c = counts[f, i]
                if c >= maxf:
                    return -2
                slots[f, i, c] = sl
                mults[f, i, c] = 1
                counts[f, i] = c + 1
                i += m
        else:
            while i < width:
                for j in range(counts[f, i]):
                    if slots[f, i, j] == sl:
                        mults[f, i, j] += 1
                        break
                i += m
        offsets[t] = i - width
    return 0


def complete_window(n0, width, us, vs, primes, counts, slots, mults, signs):
    """Check each cell against |u*(n0+i)+v| and record signs.

    Returns (-1, -1, 0) when every cell factors completely over the marked
    slots, else (form, i, residual) for the first incomplete cell.
    """
    nf = len(us)
    for f in range(nf):
        u = int(us[f])
        v = int(vs[f])
        for i in range(width):
            val = u * (n0 + i) + v
            if val == 0:
                return f, i, 0
            signs[f, i] = 1 if val > 0 else -1
            a = abs(val)
            prod = 1
            for j in range(counts[f, i]):
                p = int(primes[slots[f, i, j]])
                for _ in range(mults[f, i, j]):
                    prod *= p
            if prod != a:
                return f, i, a // prod
    return -1, -1, 0


def combine_forms(counts, slots, mults, signs, width, sel_idx, sel_weight,
                  const_slots, const_exps, out_counts, out_slots, out_exps, out_signs):
    """Per-cell product of selected form values (with powers) and a constant.

    Fills sorted merged (slot, exponent) lists per cell plus the sign of the
    product (constant sign excluded; caller folds it in).  Returns 0, or -2
    on overflow of the output capacity.
    """
    cap = out_slots.shape[1]
    nconst = len(const_slots)
    for i in range(width):
        acc: dict[int, int] = {}
        for j in range(nconst):
            acc[int(const_slots[j])] = int(const_exps[j])
        sign = 1
        for k in range(len(sel_idx)):
            f = int(sel_idx[k])
            w = int(sel_weight[k])
            if signs[f, i] < 0 and (w & 1):
                sign = -sign
            for j in range(counts[f, i]):
                sl = int(slots[f, i, j])
                acc[sl] = acc.get(sl, 0) + int(mults[f, i, j]) * w
        if len(acc) > cap:
            return -2
        out_counts[i] = len(acc)
        for j, sl in enumerate(sorted(acc)):
            out_slots[i, j] = sl
            out_exps[i, j] = acc[sl]
        out_signs[i] = sign
    return 0


def accumulate_exponents(dense, counts, slots, mults, form, i_lo, i_hi, weight):
    """dense[slot] += weight * multiplicity over cells [i_lo, i_hi) of one form."""
    for i in range(i_lo, i_hi):
        for j in range(counts[form, i]):
            dense[slots[form, i, j]] += mults[form, i, j] * weight


def count_negative(signs, form, i_lo, i_hi):
    n = 0
    for i in range(i_lo, i_hi):
        if signs[form, i] < 0:
            n += 1
    return n
