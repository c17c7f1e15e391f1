"""Shared brute-force oracles for the test suite.

These deliberately avoid the production code paths: the dense Hamiltonian is
rebuilt by applying elementary operators determinant by determinant, and the
coupled-cluster quantities are evaluated in the full determinant space.
"""

import numpy as np

from oatdcc.ccd import Amplitudes, random_amplitudes
from oatdcc.determinants import annihilate, create, occupied_orbitals
from oatdcc.fci import (
    doubles_map,
    dual_cc_vector,
    exp_t_apply,
    expm_apply,
    operator_matrix,
    t2_operator,
)


def random_one_body(rng, L, hermitian=False, scale=1.0):
    h = rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L))
    if hermitian:
        h = 0.5 * (h + h.conj().T)
    return scale * h


def random_two_body(rng, L, hermitian=False, scale=1.0):
    """Random tensor with the full antisymmetry pattern of u^{pr}_{qs}."""
    raw = rng.standard_normal((L, L, L, L)) + 1j * rng.standard_normal((L, L, L, L))
    u = raw - raw.transpose(0, 1, 3, 2)
    u = u - u.transpose(1, 0, 2, 3)
    if hermitian:
        u = 0.5 * (u + u.transpose(2, 3, 0, 1).conj())
    return scale * u


def random_problem(rng, n, L, scale=0.1, hermitian=False):
    h = random_one_body(rng, L, hermitian=hermitian)
    u = random_two_body(rng, L, hermitian=hermitian)
    amp = random_amplitudes(n, L - n, rng, scale=scale)
    return h, u, amp


def dense_hamiltonian_naive(space, h, u):
    """Dense <mu|H|nu> by sequential elementary-operator application."""
    dim = space.dim
    L = space.n_orbitals
    mat = np.zeros((dim, dim), dtype=complex)
    for nu, mask in enumerate(space.masks):
        mask = int(mask)
        for q in occupied_orbitals(mask):
            m1, ph1 = annihilate(mask, q)
            for p in range(L):
                m2, ph2 = create(m1, p)
                if m2 is None or m2 not in space.index:
                    continue
                mat[space.index[m2], nu] += ph1 * ph2 * h[p, q]
        for q in occupied_orbitals(mask):
            m1, ph1 = annihilate(mask, q)
            for s in occupied_orbitals(m1):
                m2, ph2 = annihilate(m1, s)
                for r in range(L):
                    m3, ph3 = create(m2, r)
                    if m3 is None:
                        continue
                    for p in range(L):
                        m4, ph4 = create(m3, p)
                        if m4 is None or m4 not in space.index:
                            continue
                        mat[space.index[m4], nu] += (
                            0.25 * ph1 * ph2 * ph3 * ph4 * u[p, r, q, s]
                        )
    return mat


def excitation(space, a_abs, i):
    """Matrix of X^a_i = c+_a ann_i."""
    return space.excitation_matrix(a_abs, i)


def oracle_energy(space, h, u, amp):
    """<ref|(1 + Lambda) exp(-T) H exp(T)|ref> in the determinant space."""
    ket = exp_t_apply(space, amp.t2)
    dual = dual_cc_vector(space, amp.t2, amp.l2)
    return dual @ (operator_matrix(space, h, u) @ ket)


def oracle_tau_rhs(space, h, u, amp):
    """<dbl_mu| exp(-T) H exp(T) |ref> mapped back to tensor layout."""
    ket = exp_t_apply(space, amp.t2)
    sigma = operator_matrix(space, h, u) @ ket
    w = expm_apply(-t2_operator(space, amp.t2), sigma)
    idx, phase = doubles_map(space)
    return np.where(idx >= 0, phase * w[idx], 0.0)


def oracle_lambda_rhs(space, h, u, amp):
    """<ref|(1 + Lambda) exp(-T) [H, X_mu] exp(T)|ref> for every doubles mu."""
    n = space.n_particles
    nv = space.n_orbitals - n
    ket = exp_t_apply(space, amp.t2)
    dual = dual_cc_vector(space, amp.t2, amp.l2)
    ham = operator_matrix(space, h, u)
    h_ket = ham @ ket
    out = np.zeros((nv, nv, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            for a in range(nv):
                for b in range(nv):
                    if a == b:
                        continue
                    x = excitation(space, n + a, i) @ excitation(space, n + b, j)
                    out[a, b, i, j] = dual @ (ham @ (x @ ket) - x @ h_ket)
    return out


def oracle_densities(space, amp):
    from oatdcc.fci import fci_densities

    ket = exp_t_apply(space, amp.t2)
    dual = dual_cc_vector(space, amp.t2, amp.l2)
    return fci_densities(space, dual, ket)


def restricted_hf(model, n_pairs, tol=1e-13, max_iter=2000, mixing=0.5):
    """Closed-shell Hartree-Fock on the spatial grid by damped SCF iteration.

    Returns (spatial orbital matrix (n_grid, n_pairs), total energy).  Serves
    as the exact mean-field reference for the single-determinant limit.
    """
    grid = model.grid
    n = grid.n_grid
    dx = grid.dx
    h1 = model.dense_one_body()[:n, :n]
    kernel = model.dense_spin_kernel()[:n, :n]

    vals, vecs = np.linalg.eigh((h1 + h1.conj().T) / 2)
    orbitals = vecs[:, :n_pairs] / np.sqrt(dx)

    def fock(c):
        gamma = c @ c.conj().T                     # per-spin spatial density matrix
        density = 2.0 * np.real(np.diag(gamma))    # both spins
        coulomb = kernel @ density * dx
        return h1 + np.diag(coulomb) - kernel * gamma * dx

    previous = None
    for _ in range(max_iter):
        f = fock(orbitals)
        f = (f + f.conj().T) / 2
        _, vecs = np.linalg.eigh(f)
        new = vecs[:, :n_pairs] / np.sqrt(dx)
        gamma_old = orbitals @ orbitals.conj().T
        gamma_new = new @ new.conj().T
        gamma = mixing * gamma_new + (1 - mixing) * gamma_old
        vals_g, vecs_g = np.linalg.eigh(gamma)
        orbitals = vecs_g[:, np.argsort(-vals_g)[:n_pairs]]
        orbitals /= np.sqrt(np.sum(np.abs(orbitals) ** 2, axis=0) * dx)
        change = np.max(np.abs(gamma_new - gamma_old))
        if previous is not None and change < tol:
            break
        previous = change

    gamma = orbitals @ orbitals.conj().T
    density = 2.0 * np.real(np.diag(gamma))
    one_body = 2.0 * np.real(np.einsum("xi,xy,yi->", orbitals.conj(), h1, orbitals)) * dx
    direct = 0.5 * np.einsum("x,xy,y->", density, kernel, density).real * dx * dx
    exchange = np.einsum("xy,xy,yx->", kernel, gamma, gamma).real * dx * dx
    return orbitals, one_body + direct - exchange
