"""Brute-force loop-nest evaluation of the doubles algebra.

Deliberately naive: every contraction is an explicit Python loop and every
antisymmetrizer is expanded by re-evaluating the base term at swapped indices.
Only usable at oracle sizes (L <= 6); exists purely to cross-check the
vectorized path in ccd.py.
"""

from itertools import product

import numpy as np


def energy_loops(h, u, amp):
    n, nv = amp.n_occupied, amp.n_virtual
    t, lam = amp.t2, amp.l2
    O, V = range(n), range(nv)

    def hv(a, b):
        return h[n + a, n + b]

    def ho(i, j):
        return h[i, j]

    def uu(p, r, q, s):
        return u[p, r, q, s]

    e = 0.0 + 0.0j
    for i in O:
        e += ho(i, i)
    for i, j in product(O, O):
        e += 0.5 * uu(i, j, i, j)
    for a, b, c, i, j in product(V, V, V, O, O):
        e += 0.5 * hv(a, b) * lam[a, c, i, j] * t[i, j, b, c]
    for i, j, k, a, b in product(O, O, O, V, V):
        e -= 0.5 * ho(j, i) * lam[a, b, k, i] * t[k, j, a, b]
    for i, j, k, l, a, b in product(O, O, O, O, V, V):
        e -= 0.5 * lam[a, b, i, j] * t[k, i, a, b] * uu(k, l, l, j)
        e += 0.125 * lam[a, b, i, j] * t[k, l, a, b] * uu(k, l, i, j)
    for i, j, k, l, a, b, c, d in product(O, O, O, O, V, V, V, V):
        lu = lam[a, b, i, j] * uu(k, l, n + d, n + c)
        e += 0.125 * lu * t[k, j, a, b] * t[l, i, d, c]
        e += 0.0625 * lu * t[k, l, a, b] * t[i, j, d, c]
        e += 0.125 * lu * t[l, i, a, b] * t[k, j, d, c]
        e -= 0.5 * lu * t[k, j, a, c] * t[l, i, d, b]
        e -= 0.25 * lu * t[k, l, a, c] * t[i, j, d, b]
    for i, j, k, a, b, c in product(O, O, O, V, V, V):
        e += 0.5 * lam[a, b, i, j] * t[i, j, a, c] * uu(n + b, k, n + c, k)
        e += lam[a, b, i, j] * t[k, i, a, c] * uu(n + b, k, n + c, j)
    for i, j, a, b, c, d in product(O, O, V, V, V, V):
        e += 0.125 * lam[a, b, i, j] * t[i, j, d, c] * uu(n + a, n + b, n + d, n + c)
    for i, j, a, b in product(O, O, V, V):
        e += 0.25 * lam[a, b, i, j] * uu(n + a, n + b, i, j)
        e += 0.25 * t[i, j, a, b] * uu(i, j, n + a, n + b)
    return e


def tau_rhs_loops(h, u, amp):
    n, nv = amp.n_occupied, amp.n_virtual
    t = amp.t2
    O, V = range(n), range(nv)

    def base_one_vir(i, j, a, b):
        return -sum(h[n + a, n + c] * t[i, j, b, c] for c in V)

    def base_one_occ(i, j, a, b):
        return sum(h[k, i] * t[j, k, a, b] for k in O)

    def base_occ(i, j, a, b):
        val = -sum(t[i, k, a, b] * u[k, l, j, l] for k, l in product(O, O))
        val += 0.5 * sum(
            t[i, l, a, b] * t[j, k, d, c] * u[k, l, n + d, n + c]
            for k, l, c, d in product(O, O, V, V)
        )
        return val

    def base_vir(i, j, a, b):
        val = 0.5 * sum(
            t[i, j, a, c] * t[k, l, b, d] * u[k, l, n + d, n + c]
            for k, l, c, d in product(O, O, V, V)
        )
        val += sum(t[i, j, a, c] * u[n + b, k, n + c, k] for k, c in product(O, V))
        val -= sum(
            t[i, k, a, c] * t[j, l, b, d] * u[k, l, n + d, n + c]
            for k, l, c, d in product(O, O, V, V)
        )
        return val

    def base_both(i, j, a, b):
        return sum(t[i, k, a, c] * u[n + b, k, j, n + c] for k, c in product(O, V))

    out = np.zeros((n, n, nv, nv), dtype=complex)
    for i, j, a, b in product(O, O, V, V):
        val = base_one_vir(i, j, a, b) - base_one_vir(i, j, b, a)
        val += base_one_occ(i, j, a, b) - base_one_occ(j, i, a, b)
        val += base_occ(i, j, a, b) - base_occ(j, i, a, b)
        val += base_vir(i, j, a, b) - base_vir(i, j, b, a)
        val += (
            base_both(i, j, a, b)
            - base_both(j, i, a, b)
            - base_both(i, j, b, a)
            + base_both(j, i, b, a)
        )
        val += 0.25 * sum(
            t[k, l, a, b] * t[i, j, d, c] * u[k, l, n + d, n + c]
            for k, l, c, d in product(O, O, V, V)
        )
        val += 0.5 * sum(t[k, l, a, b] * u[k, l, i, j] for k, l in product(O, O))
        val += 0.5 * sum(
            t[i, j, d, c] * u[n + a, n + b, n + d, n + c] for c, d in product(V, V)
        )
        val += u[n + a, n + b, i, j]
        out[i, j, a, b] = val
    return out


def lambda_rhs_loops(h, u, amp):
    n, nv = amp.n_occupied, amp.n_virtual
    t, lam = amp.t2, amp.l2
    O, V = range(n), range(nv)

    def base_occ(a, b, i, j):
        val = sum(h[i, k] * lam[a, b, j, k] for k in O)
        val += 0.5 * sum(
            lam[a, b, j, k] * t[k, l, d, c] * u[i, l, n + d, n + c]
            for k, l, c, d in product(O, O, V, V)
        )
        val += sum(lam[a, b, j, k] * u[i, l, k, l] for k, l in product(O, O))
        val += 0.5 * sum(
            lam[d, c, j, k] * t[k, l, d, c] * u[i, l, n + a, n + b]
            for k, l, c, d in product(O, O, V, V)
        )
        return val

    def base_vir(a, b, i, j):
        val = -sum(h[n + c, n + a] * lam[b, c, i, j] for c in V)
        val -= 0.5 * sum(
            lam[b, c, i, j] * t[k, l, d, c] * u[k, l, n + a, n + d]
            for k, l, c, d in product(O, O, V, V)
        )
        val -= sum(lam[b, c, i, j] * u[n + c, k, n + a, k] for k, c in product(O, V))
        val -= 0.5 * sum(
            lam[b, c, k, l] * t[k, l, d, c] * u[i, j, n + a, n + d]
            for k, l, c, d in product(O, O, V, V)
        )
        return val

    def base_both(a, b, i, j):
        val = -sum(
            lam[b, c, j, k] * t[k, l, d, c] * u[i, l, n + a, n + d]
            for k, l, c, d in product(O, O, V, V)
        )
        val += sum(lam[b, c, j, k] * u[i, n + c, n + a, k] for k, c in product(O, V))
        return val

    out = np.zeros((nv, nv, n, n), dtype=complex)
    for a, b, i, j in product(V, V, O, O):
        val = base_occ(a, b, i, j) - base_occ(a, b, j, i)
        val += base_vir(a, b, i, j) - base_vir(b, a, i, j)
        val += (
            base_both(a, b, i, j)
            - base_both(b, a, i, j)
            - base_both(a, b, j, i)
            + base_both(b, a, j, i)
        )
        val += 0.25 * sum(
            lam[d, c, i, j] * t[k, l, d, c] * u[k, l, n + a, n + b]
            for k, l, c, d in product(O, O, V, V)
        )
        val += 0.5 * sum(
            lam[d, c, i, j] * u[n + d, n + c, n + a, n + b] for c, d in product(V, V)
        )
        val += 0.25 * sum(
            lam[a, b, k, l] * t[k, l, d, c] * u[i, j, n + d, n + c]
            for k, l, c, d in product(O, O, V, V)
        )
        val += 0.5 * sum(lam[a, b, k, l] * u[i, j, k, l] for k, l in product(O, O))
        val += u[i, j, n + a, n + b]
        out[a, b, i, j] = val
    return out
