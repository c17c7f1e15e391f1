"""Closed-form coupled-cluster doubles algebra.

Conventions: t2[i, j, a, b] is the doubles amplitude with occupied subscripts
(i, j) and virtual superscripts (a, b); l2[a, b, i, j] is the conjugate-role
de-excitation amplitude.  Integral tensors use h[p, q] for the one-body matrix
element with upper index p, and u[p, r, q, s] for the antisymmetrized two-body
element with upper pair (p, r) and lower pair (q, s).  Occupied orbitals come
first: slices o = :N and v = N:.

All contractions were transcribed term by term from symbolic Wick expansions
of the doubles expectation functional and are cross-checked in the test suite
against a dense determinant-space oracle and against explicit loop nests.
"""

from dataclasses import dataclass

import numpy as np


class AmplitudeError(ValueError):
    pass


def antisymmetrize_occ(x):
    """P(ij) acting on the two leading occupied axes: f - f(i <-> j)."""
    return x - x.transpose(1, 0, 2, 3)


def antisymmetrize_vir(x):
    """P(ab) acting on the two trailing virtual axes: f - f(a <-> b)."""
    return x - x.transpose(0, 1, 3, 2)


@dataclass
class Amplitudes:
    t2: np.ndarray   # (N, N, V, V)
    l2: np.ndarray   # (V, V, N, N)

    def __post_init__(self):
        self.t2 = np.asarray(self.t2, dtype=complex)
        self.l2 = np.asarray(self.l2, dtype=complex)
        n, nv = self.n_occupied, self.n_virtual
        if self.t2.shape != (n, n, nv, nv) or self.l2.shape != (nv, nv, n, n):
            raise AmplitudeError(
                f"inconsistent amplitude shapes {self.t2.shape} / {self.l2.shape}"
            )

    @property
    def n_occupied(self):
        return self.t2.shape[0]

    @property
    def n_virtual(self):
        return self.t2.shape[2]

    def antisymmetry_error(self):
        return max(
            float(np.max(np.abs(self.t2 + self.t2.transpose(1, 0, 2, 3)), initial=0.0)),
            float(np.max(np.abs(self.t2 + self.t2.transpose(0, 1, 3, 2)), initial=0.0)),
            float(np.max(np.abs(self.l2 + self.l2.transpose(1, 0, 2, 3)), initial=0.0)),
            float(np.max(np.abs(self.l2 + self.l2.transpose(0, 1, 3, 2)), initial=0.0)),
        )

    def copy(self):
        return Amplitudes(self.t2.copy(), self.l2.copy())


def zero_amplitudes(n_occupied, n_virtual):
    n, nv = n_occupied, n_virtual
    return Amplitudes(np.zeros((n, n, nv, nv), complex), np.zeros((nv, nv, n, n), complex))


def random_amplitudes(n_occupied, n_virtual, rng, scale=0.1):
    """Seeded antisymmetric amplitudes for tests and relaxation starts."""
    n, nv = n_occupied, n_virtual
    t2 = rng.standard_normal((n, n, nv, nv)) + 1j * rng.standard_normal((n, n, nv, nv))
    l2 = rng.standard_normal((nv, nv, n, n)) + 1j * rng.standard_normal((nv, nv, n, n))
    t2 = antisymmetrize_vir(antisymmetrize_occ(t2)) * scale / 4
    l2 = l2 - l2.transpose(1, 0, 2, 3)
    l2 = l2 - l2.transpose(0, 1, 3, 2)
    return Amplitudes(t2, l2 * scale / 4)


def _blocks(h, u, n):
    o, v = slice(0, n), slice(n, h.shape[0])
    return o, v


def reference_energy(h, u, n_occupied):
    """h^i_i + (1/2) u^{ij}_{ij}: the expectation value in the bare reference."""
    o, _ = _blocks(h, u, n_occupied)
    return np.einsum("ii->", h[o, o]) + 0.5 * np.einsum("ijij->", u[o, o, o, o])


def ccd_energy(h, u, amp):
    """Doubles expectation functional; complex in the biorthogonal setting."""
    n = amp.n_occupied
    o, v = _blocks(h, u, n)
    t2, l2 = amp.t2, amp.l2
    uoooo = u[o, o, o, o]
    uoovv = u[o, o, v, v]
    uvovo = u[v, o, v, o]
    uvvvv = u[v, v, v, v]
    uvvoo = u[v, v, o, o]

    e = 0.5 * np.einsum("ab,acij,ijbc->", h[v, v], l2, t2, optimize=True)
    e += np.einsum("ii->", h[o, o])
    e -= 0.5 * np.einsum("ji,abki,kjab->", h[o, o], l2, t2, optimize=True)
    e -= 0.5 * np.einsum("abij,kiab,kllj->", l2, t2, uoooo, optimize=True)
    e += 0.125 * np.einsum("abij,kjab,lidc,kldc->", l2, t2, t2, uoovv, optimize=True)
    e += 0.0625 * np.einsum("abij,klab,ijdc,kldc->", l2, t2, t2, uoovv, optimize=True)
    e += 0.125 * np.einsum("abij,klab,klij->", l2, t2, uoooo, optimize=True)
    e += 0.125 * np.einsum("abij,liab,kjdc,kldc->", l2, t2, t2, uoovv, optimize=True)
    e += 0.5 * np.einsum("abij,ijac,bkck->", l2, t2, uvovo, optimize=True)
    e += np.einsum("abij,kiac,bkcj->", l2, t2, u[v, o, v, o], optimize=True)
    e -= 0.5 * np.einsum("abij,kjac,lidb,kldc->", l2, t2, t2, uoovv, optimize=True)
    e -= 0.25 * np.einsum("abij,klac,ijdb,kldc->", l2, t2, t2, uoovv, optimize=True)
    e += 0.125 * np.einsum("abij,ijdc,abdc->", l2, t2, uvvvv, optimize=True)
    e += 0.25 * np.einsum("abij,abij->", l2, uvvoo)
    e += 0.25 * np.einsum("ijab,ijab->", t2, uoovv)
    e += 0.5 * np.einsum("ijij->", uoooo)
    return complex(e)


def tau_rhs(h, u, amp):
    """dE/dl2: the amplitude-equation right-hand side <mu| exp(-T) H exp(T) |ref>.

    Independent of l2; antisymmetric in (i, j) and (a, b) by construction.
    """
    n = amp.n_occupied
    o, v = _blocks(h, u, n)
    t2 = amp.t2
    uoooo = u[o, o, o, o]
    uoovv = u[o, o, v, v]

    out = antisymmetrize_vir(-np.einsum("ac,ijbc->ijab", h[v, v], t2, optimize=True))
    out += antisymmetrize_occ(np.einsum("ki,jkab->ijab", h[o, o], t2, optimize=True))
    out += antisymmetrize_occ(
        -np.einsum("ikab,kljl->ijab", t2, uoooo, optimize=True)
        + 0.5 * np.einsum("ilab,jkdc,kldc->ijab", t2, t2, uoovv, optimize=True)
    )
    out += 0.25 * np.einsum("klab,ijdc,kldc->ijab", t2, t2, uoovv, optimize=True)
    out += 0.5 * np.einsum("klab,klij->ijab", t2, uoooo, optimize=True)
    out += antisymmetrize_vir(
        0.5 * np.einsum("ijac,klbd,kldc->ijab", t2, t2, uoovv, optimize=True)
        + np.einsum("ijac,bkck->ijab", t2, u[v, o, v, o], optimize=True)
        - np.einsum("ikac,jlbd,kldc->ijab", t2, t2, uoovv, optimize=True)
    )
    out += antisymmetrize_occ(
        antisymmetrize_vir(np.einsum("ikac,bkjc->ijab", t2, u[v, o, o, v], optimize=True))
    )
    out += 0.5 * np.einsum("ijdc,abdc->ijab", t2, u[v, v, v, v], optimize=True)
    out += np.einsum("abij->ijab", u[v, v, o, o])
    return out


def lambda_rhs(h, u, amp):
    """dE/dt2: the de-excitation right-hand side <ref| (1+Lambda) exp(-T) [H, X_mu] exp(T) |ref>."""
    n = amp.n_occupied
    o, v = _blocks(h, u, n)
    t2, l2 = amp.t2, amp.l2
    uoooo = u[o, o, o, o]
    uoovv = u[o, o, v, v]

    def p_ij(x):
        return x - x.transpose(0, 1, 3, 2)   # output axes are (a, b, i, j)

    def p_ab(x):
        return x - x.transpose(1, 0, 2, 3)

    out = p_ij(np.einsum("ik,abjk->abij", h[o, o], l2, optimize=True))
    out += p_ab(-np.einsum("ca,bcij->abij", h[v, v], l2, optimize=True))
    out += p_ab(
        -0.5 * np.einsum("bcij,kldc,klad->abij", l2, t2, uoovv, optimize=True)
        - np.einsum("bcij,ckak->abij", l2, u[v, o, v, o], optimize=True)
    )
    out += 0.25 * np.einsum("dcij,kldc,klab->abij", l2, t2, uoovv, optimize=True)
    out += 0.5 * np.einsum("dcij,dcab->abij", l2, u[v, v, v, v], optimize=True)
    out += p_ij(
        0.5 * np.einsum("abjk,kldc,ildc->abij", l2, t2, uoovv, optimize=True)
        + np.einsum("abjk,ilkl->abij", l2, uoooo, optimize=True)
    )
    out += p_ab(
        p_ij(
            -np.einsum("bcjk,kldc,ilad->abij", l2, t2, uoovv, optimize=True)
            + np.einsum("bcjk,icak->abij", l2, u[o, v, v, o], optimize=True)
        )
    )
    out += p_ij(0.5 * np.einsum("dcjk,kldc,ilab->abij", l2, t2, uoovv, optimize=True))
    out += 0.25 * np.einsum("abkl,kldc,ijdc->abij", l2, t2, uoovv, optimize=True)
    out += 0.5 * np.einsum("abkl,ijkl->abij", l2, uoooo, optimize=True)
    out += p_ab(-0.5 * np.einsum("bckl,kldc,ijad->abij", l2, t2, uoovv, optimize=True))
    out += np.einsum("ijab->abij", uoovv)
    return out


def density_1b(amp):
    """One-body reduced density rho1[p, q] = rho^p_q; occ-vir blocks vanish."""
    n, nv = amp.n_occupied, amp.n_virtual
    L = n + nv
    rho = np.zeros((L, L), dtype=complex)
    rho[:n, :n] = np.eye(n) - 0.5 * np.einsum(
        "abkj,kiab->ji", amp.l2, amp.t2, optimize=True
    )
    rho[n:, n:] = 0.5 * np.einsum("acij,ijbc->ba", amp.l2, amp.t2, optimize=True)
    return rho


def density_2b(amp):
    """Two-body reduced density d2[q, s, p, r] = rho^{qs}_{pr}, all five blocks."""
    n, nv = amp.n_occupied, amp.n_virtual
    L = n + nv
    t2, l2 = amp.t2, amp.l2
    o, v = slice(0, n), slice(n, L)
    d2 = np.zeros((L, L, L, L), dtype=complex)

    # occupied-occupied block rho^{kl}_{ij}
    eye = np.eye(n, dtype=complex)
    oooo = np.einsum("ki,lj->klij", eye, eye) - np.einsum("kj,li->klij", eye, eye)
    corr = np.einsum("cdlm,jmcd->lj", l2, t2, optimize=True)
    g = 0.5 * np.einsum("ki,lj->klij", eye, corr)
    oooo -= g - g.transpose(0, 1, 3, 2) - g.transpose(1, 0, 2, 3) + g.transpose(1, 0, 3, 2)
    oooo += 0.5 * np.einsum("cdkl,ijcd->klij", l2, t2, optimize=True)
    d2[o, o, o, o] = oooo

    # rho^{ab}_{ij}
    vvoo = -0.5 * antisymmetrize_vir(
        np.einsum("cdkl,ijac,klbd->ijab", l2, t2, t2, optimize=True)
    )
    vvoo += antisymmetrize_occ(
        np.einsum("cdkl,ikac,jlbd->ijab", l2, t2, t2, optimize=True)
        + 0.5 * np.einsum("cdkl,ilab,jkcd->ijab", l2, t2, t2, optimize=True)
    )
    vvoo += 0.25 * np.einsum("cdkl,klab,ijcd->ijab", l2, t2, t2, optimize=True)
    vvoo += t2
    d2[v, v, o, o] = vvoo.transpose(2, 3, 0, 1)

    # mixed block rho^{jb}_{ia} and its sign aliases
    ovov = 0.5 * np.einsum(
        "ji,ackl,klbc->jbia", np.eye(n), l2, t2, optimize=True
    ) - np.einsum("acjk,ikbc->jbia", l2, t2, optimize=True)
    d2[o, v, o, v] = ovov
    d2[v, o, o, v] = -ovov.transpose(1, 0, 2, 3)
    d2[o, v, v, o] = -ovov.transpose(0, 1, 3, 2)
    d2[v, o, v, o] = ovov.transpose(1, 0, 3, 2)

    # rho^{ij}_{ab} and rho^{cd}_{ab}
    d2[o, o, v, v] = np.einsum("abij->ijab", l2)
    d2[v, v, v, v] = 0.5 * np.einsum("abij,ijcd->cdab", l2, t2, optimize=True)
    return d2


def expectation(h, u, amp, rho1=None, d2=None):
    """sum rho^q_p h^p_q + (1/4) sum rho^{qs}_{pr} u^{pr}_{qs} for any operator tables."""
    if rho1 is None:
        rho1 = density_1b(amp)
    if d2 is None:
        d2 = density_2b(amp)
    return complex(
        np.einsum("qp,pq->", rho1, h) + 0.25 * np.einsum("qspr,prqs->", d2, u, optimize=True)
    )


def _energy_denominators(h, n):
    o, v = _blocks(h, h, n)
    eps_o = np.real(np.diag(h[o, o]))
    eps_v = np.real(np.diag(h[v, v]))
    return (
        eps_v[None, None, :, None]
        + eps_v[None, None, None, :]
        - eps_o[:, None, None, None]
        - eps_o[None, :, None, None]
    )


class DiisMixer:
    """Pulay residual extrapolation over a short history of amplitude updates."""

    def __init__(self, depth=6):
        self.depth = depth
        self.vectors = []
        self.residuals = []

    def push(self, vector, residual):
        self.vectors.append(vector)
        self.residuals.append(residual)
        if len(self.vectors) > self.depth:
            self.vectors.pop(0)
            self.residuals.pop(0)

    def extrapolate(self):
        m = len(self.vectors)
        if m < 2:
            return self.vectors[-1]
        b = np.empty((m + 1, m + 1), dtype=complex)
        b[:m, :m] = [[np.vdot(ri, rj) for rj in self.residuals] for ri in self.residuals]
        b[m, :], b[:, m], b[m, m] = -1.0, -1.0, 0.0
        rhs = np.zeros(m + 1, dtype=complex)
        rhs[m] = -1.0
        try:
            coeff = np.linalg.solve(b, rhs)[:m]
        except np.linalg.LinAlgError:
            return self.vectors[-1]
        return sum(c * v for c, v in zip(coeff, self.vectors))


class ConvergenceError(RuntimeError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


def ccd_ground_solve(
    h, u, n_occupied, tol=1e-10, max_iter=200, mixing=1.0, shift=0.0, use_diis=True
):
    """Stationary doubles amplitudes: tau with tau_rhs = 0, lambda with lambda_rhs = 0.

    Damped quasi-Newton iteration preconditioned by orbital-energy differences,
    optionally accelerated by residual extrapolation.  Raises ConvergenceError
    with the final residual when the iteration stalls.
    """
    n = n_occupied
    nv = h.shape[0] - n
    denom_t = _energy_denominators(h, n) + shift
    denom_l = np.transpose(denom_t, (2, 3, 0, 1))
    amp = zero_amplitudes(n, nv)

    mixer = DiisMixer() if use_diis else None
    for _ in range(max_iter):
        residual = tau_rhs(h, u, amp)
        if np.max(np.abs(residual)) < tol:
            break
        new_t2 = amp.t2 - mixing * residual / denom_t
        if mixer is not None:
            mixer.push(new_t2.ravel(), (residual / denom_t).ravel())
            new_t2 = mixer.extrapolate().reshape(amp.t2.shape)
        amp = Amplitudes(new_t2, amp.l2)
    else:
        raise ConvergenceError(
            "tau iteration did not converge", float(np.max(np.abs(tau_rhs(h, u, amp))))
        )

    mixer = DiisMixer() if use_diis else None
    for _ in range(max_iter):
        residual = lambda_rhs(h, u, amp)
        if np.max(np.abs(residual)) < tol:
            break
        new_l2 = amp.l2 + mixing * residual / denom_l
        if mixer is not None:
            mixer.push(new_l2.ravel(), (residual / denom_l).ravel())
            new_l2 = mixer.extrapolate().reshape(amp.l2.shape)
        amp = Amplitudes(amp.t2, new_l2)
    else:
        raise ConvergenceError(
            "lambda iteration did not converge",
            float(np.max(np.abs(lambda_rhs(h, u, amp)))),
        )
    return amp
