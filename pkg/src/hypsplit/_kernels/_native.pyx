# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernel backend: sparse exponent merges and the window sieve.

Semantics match pykernels.py one for one; tests compare the two backends
on randomized inputs.
"""

import numpy as np

BACKEND_NAME = "cython"


def merge_add(int[::1] s1, long long[::1] e1, int[::1] s2, long long[::1] e2):
    cdef Py_ssize_t n1 = s1.shape[0], n2 = s2.shape[0]
    out_s_arr = np.empty(n1 + n2, dtype=np.int32)
    out_e_arr = np.empty(n1 + n2, dtype=np.int64)
    cdef int[::1] os = out_s_arr
    cdef long long[::1] oe = out_e_arr
    cdef Py_ssize_t i = 0, j = 0, k = 0
    while i < n1 and j < n2:
        if s1[i] < s2[j]:
            os[k] = s1[i]; oe[k] = e1[i]; i += 1
        elif s1[i] > s2[j]:
            os[k] = s2[j]; oe[k] = e2[j]; j += 1
        else:
            os[k] = s1[i]; oe[k] = e1[i] + e2[j]; i += 1; j += 1
        k += 1
    while i < n1:
        os[k] = s1[i]; oe[k] = e1[i]; i += 1; k += 1
    while j < n2:
        os[k] = s2[j]; oe[k] = e2[j]; j += 1; k += 1
    return out_s_arr[:k].copy(), out_e_arr[:k].copy()


def merge_min(int[::1] s1, long long[::1] e1, int[::1] s2, long long[::1] e2):
    cdef Py_ssize_t n1 = s1.shape[0], n2 = s2.shape[0]
    cdef Py_ssize_t cap = n1 if n1 < n2 else n2
    out_s_arr = np.empty(cap, dtype=np.int32)
    out_e_arr = np.empty(cap, dtype=np.int64)
    cdef int[::1] os = out_s_arr
    cdef long long[::1] oe = out_e_arr
    cdef Py_ssize_t i = 0, j = 0, k = 0
    while i < n1 and j < n2:
        if s1[i] < s2[j]:
            i += 1
        elif s1[i] > s2[j]:
            j += 1
        else:
            os[k] = s1[i]
            oe[k] = e1[i] if e1[i] < e2[j] else e2[j]
            i += 1; j += 1; k += 1
    return out_s_arr[:k].copy(), out_e_arr[:k].copy()


def merge_min_split(int[::1] s1, long long[::1] e1, int[::1] s2, long long[::1] e2):
    cdef Py_ssize_t n1 = s1.shape[0], n2 = s2.shape[0]
    cdef Py_ssize_t capg = n1 if n1 < n2 else n2
    gs_arr = np.empty(capg, dtype=np.int32)
    ge_arr = np.empty(capg, dtype=np.int64)
    d1s_arr = np.empty(n1, dtype=np.int32)
    d1e_arr = np.empty(n1, dtype=np.int64)
    d2s_arr = np.empty(n2, dtype=np.int32)
    d2e_arr = np.empty(n2, dtype=np.int64)
    cdef int[::1] gs = gs_arr, d1s = d1s_arr, d2s = d2s_arr
    cdef long long[::1] ge = ge_arr, d1e = d1e_arr, d2e = d2e_arr
    cdef Py_ssize_t i = 0, j = 0, kg = 0, k1 = 0, k2 = 0
    cdef long long g
    while i < n1 and j < n2:
        if s1[i] < s2[j]:
            d1s[k1] = s1[i]; d1e[k1] = e1[i]; k1 += 1; i += 1
        elif s1[i] > s2[j]:
            d2s[k2] = s2[j]; d2e[k2] = e2[j]; k2 += 1; j += 1
        else:
            g = e1[i] if e1[i] < e2[j] else e2[j]
            gs[kg] = s1[i]; ge[kg] = g; kg += 1
            if e1[i] > g:
                d1s[k1] = s1[i]; d1e[k1] = e1[i] - g; k1 += 1
            if e2[j] > g:
                d2s[k2] = s2[j]; d2e[k2] = e2[j] - g; k2 += 1
            i += 1; j += 1
    while i < n1:
        d1s[k1] = s1[i]; d1e[k1] = e1[i]; k1 += 1; i += 1
    while j < n2:
        d2s[k2] = s2[j]; d2e[k2] = e2[j]; k2 += 1; j += 1
    return (gs_arr[:kg].copy(), ge_arr[:kg].copy(),
            d1s_arr[:k1].copy(), d1e_arr[:k1].copy(),
            d2s_arr[:k2].copy(), d2e_arr[:k2].copy())


def sieve_pass(long long[::1] tab_m, int[::1] tab_slot,
               unsigned char[::1] tab_first, signed char[::1] tab_form,
               long long[::1] offsets, Py_ssize_t width,
               int[:, ::1] counts, int[:, :, ::1] slots, long long[:, :, ::1] mults,
               long long[::1] upd_counts):
    cdef Py_ssize_t t, j
    cdef long long i, m
    cdef int f, sl, c
    cdef int maxf = <int> slots.shape[2]
    for t in range(tab_m.shape[0]):
        i = offsets[t]
        m = tab_m[t]
        f = tab_form[t]
        sl = tab_slot[t]
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
                c = counts[f, i]
                for j in range(c):
                    if slots[f, i, j] == sl:
                        mults[f, i, j] += 1
                        break
                i += m
        offsets[t] = i - width
    return 0


def complete_window(long long n0, Py_ssize_t width,
                    long long[::1] us, long long[::1] vs, long long[::1] primes,
                    int[:, ::1] counts, int[:, :, ::1] slots, long long[:, :, ::1] mults,
                    signed char[:, ::1] signs):
    cdef Py_ssize_t f, i, j, e
    cdef long long u, v, val, a, prod, p
    for f in range(us.shape[0]):
        u = us[f]
        v = vs[f]
        for i in range(width):
            val = u * (n0 + i) + v
            if val == 0:
                return f, i, 0
            signs[f, i] = 1 if val > 0 else -1
            a = val if val > 0 else -val
            prod = 1
            for j in range(counts[f, i]):
                p = primes[slots[f, i, j]]
                for e in range(mults[f, i, j]):
                    prod *= p
            if prod != a:
                return f, i, a // prod
    return -1, -1, 0


def combine_forms(int[:, ::1] counts, int[:, :, ::1] slots, long long[:, :, ::1] mults,
                  signed char[:, ::1] signs, Py_ssize_t width,
                  int[::1] sel_idx, long long[::1] sel_weight,
                  int[::1] const_slots, long long[::1] const_exps,
                  int[::1] out_counts, int[:, ::1] out_slots, long long[:, ::1] out_exps,
                  signed char[::1] out_signs):
    cdef Py_ssize_t i, j, k, pos, q
    cdef int cap = <int> out_slots.shape[1]
    cdef int n, f, sl
    cdef long long w, ex
    cdef int sign
    cdef Py_ssize_t nconst = const_slots.shape[0]
    for i in range(width):
        n = 0
        for j in range(nconst):
            out_slots[i, n] = const_slots[j]
            out_exps[i, n] = const_exps[j]
            n += 1
        sign = 1
        for k in range(sel_idx.shape[0]):
            f = sel_idx[k]
            w = sel_weight[k]
            if signs[f, i] < 0 and (w & 1):
                sign = -sign
            for j in range(counts[f, i]):
                sl = slots[f, i, j]
                ex = mults[f, i, j] * w
                # insertion into the sorted prefix, merging equal slots
                pos = n
                while pos > 0 and out_slots[i, pos - 1] >= sl:
                    pos -= 1
                if pos < n and out_slots[i, pos] == sl:
                    out_exps[i, pos] += ex
                else:
                    if n >= cap:
                        return -2
                    q = n
                    while q > pos:
                        out_slots[i, q] = out_slots[i, q - 1]
                        out_exps[i, q] = out_exps[i, q - 1]
                        q -= 1
                    out_slots[i, pos] = sl
                    out_exps[i, pos] = ex
                    n += 1
        out_counts[i] = n
        out_signs[i] = sign
    return 0


def accumulate_exponents(long long[::1] dense, int[:, ::1] counts, int[:, :, ::1] slots,
                         long long[:, :, ::1] mults, Py_ssize_t form,
                         Py_ssize_t i_lo, Py_ssize_t i_hi, long long weight):
    cdef Py_ssize_t i, j
    for i in range(i_lo, i_hi):
        for j in range(counts[form, i]):
            dense[slots[form, i, j]] += mults[form, i, j] * weight


def count_negative(signed char[:, ::1] signs, Py_ssize_t form, Py_ssize_t i_lo, Py_ssize_t i_hi):
    cdef Py_ssize_t i, n = 0
    for i in range(i_lo, i_hi):
        if signs[form, i] < 0:
            n += 1
    return n
