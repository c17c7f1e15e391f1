"""Full-CI engine: Hamiltonian action, CC-structured vectors, densities, MCTDHF.

Everything here works in a fixed determinant space over L (bi)orthogonal
orbitals.  It serves three roles: the MCTDHF propagation backend, the
brute-force oracle for all coupled-cluster algebra, and the state-preparation
workhorse (imaginary-time relaxation, coefficient rotations).
"""

from dataclasses import dataclass

import numpy as np

from . import HBAR
from .determinants import DeterminantSpace, annihilate, create
from .numerics import regularized_inverse
from .orbitals import (
    lowdin_orthonormalize,
    mean_fields,
    one_body_integrals,
    orthonormal_pair,
    project_out,
    two_body_integrals,
)


class FciError(ValueError):
    pass


class UnsupportedModeError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# operator matrices and Hamiltonian action
# ---------------------------------------------------------------------------

def operator_matrix(space, h=None, u=None):
    """Dense matrix of sum h[p,q] c+_p ann_q + (1/4) sum u[p,r,q,s] c+_p c+_r ann_s ann_q."""
    dim = space.dim
    mat = np.zeros((dim, dim), dtype=complex)
    if h is not None:
        nu, mu, sign, ps, qs = space.one_body_connections()
        np.add.at(mat, (mu, nu), sign * np.asarray(h, dtype=complex)[ps, qs])
    if u is not None:
        nu, mu, sign, ps, rs, qs, ss = space.two_body_connections()
        vals = 0.25 * sign * np.asarray(u, dtype=complex)[ps, rs, qs, ss]
        np.add.at(mat, (mu, nu), vals)
    return mat


def apply_hamiltonian(space, h, u, vec):
    """sigma_mu = sum_nu <mu|H|nu> A_nu for the projected Hamiltonian."""
    return operator_matrix(space, h, u) @ np.asarray(vec, dtype=complex)


def expectation_value(space, h, u, dual, vec):
    return dual @ apply_hamiltonian(space, h, u, vec)


def fci_densities(space, dual, vec):
    """Reduced density matrices from a (dual, ket) coefficient pair.

    Returns rho1 with rho1[p, q] = <dual| c+_q ann_p |ket> and the two-body
    tensor d2[q, s, p, r] = <dual| c+_p c+_r ann_s ann_q |ket>, matching the
    index placement used by the coupled-cluster expressions.
    """
    L = space.n_orbitals
    dual = np.asarray(dual, dtype=complex)
    vec = np.asarray(vec, dtype=complex)
    nu, mu, sign, ps, qs = space.one_body_connections()
    rho1 = np.zeros((L, L), dtype=complex)
    np.add.at(rho1, (qs, ps), sign * dual[mu] * vec[nu])
    nu, mu, sign, ps, rs, qs, ss = space.two_body_connections()
    d2 = np.zeros((L, L, L, L), dtype=complex)
    np.add.at(d2, (qs, ss, ps, rs), sign * dual[mu] * vec[nu])
    return rho1, d2


# ---------------------------------------------------------------------------
# coupled-cluster structured vectors
# ---------------------------------------------------------------------------

def _embed_t2(space, t2):
    n = space.n_particles
    L = space.n_orbitals
    coeffs = np.zeros((L, L, L, L), dtype=complex)
    coeffs[n:, n:, :n, :n] = np.transpose(t2, (2, 3, 0, 1))
    return coeffs


def _embed_l2(space, l2):
    n = space.n_particles
    L = space.n_orbitals
    coeffs = np.zeros((L, L, L, L), dtype=complex)
    coeffs[:n, :n, n:, n:] = np.transpose(l2, (2, 3, 0, 1))
    return coeffs


def t2_operator(space, t2):
    """Matrix of the doubles excitation operator for amplitudes t2[i, j, a, b]."""
    return operator_matrix(space, u=_embed_t2(space, t2))


def lambda_operator(space, l2):
    """Matrix of the doubles de-excitation operator for amplitudes l2[a, b, i, j]."""
    return operator_matrix(space, u=_embed_l2(space, l2))


def expm_apply(mat, vec, max_terms=None):
    """exp(mat) @ vec by power series; exact for the nilpotent cluster operators."""
    out = np.asarray(vec, dtype=complex).copy()
    term = out.copy()
    limit = max_terms if max_terms is not None else mat.shape[0] + 1
    for k in range(1, limit + 1):
        term = mat @ term / k
        if not np.any(term):
            break
        out += term
    return out

def exp_t_apply(space, t2):
    """Coefficients of exp(T2)|reference> over the determinant space."""
    ref = np.zeros(space.dim, dtype=complex)
    ref[space.reference_index()] = 1.0
    rank = min(space.n_particles, space.n_orbitals - space.n_particles)
    return expm_apply(t2_operator(space, t2), ref, max_terms=rank // 2 + 1)


def dual_cc_vector(space, t2, l2):
    """Coefficients of <reference| (1 + Lambda) exp(-T2) over bra determinants."""
    ref = np.zeros(space.dim, dtype=complex)
    ref[space.reference_index()] = 1.0
    w = ref + lambda_operator(space, l2).T @ ref
    return expm_apply(-t2_operator(space, t2).T, w)


# ---------------------------------------------------------------------------
# maps between determinant coefficients and amplitude tensors
# ---------------------------------------------------------------------------

def singles_map(space):
    """(index, phase) of c+_a ann_i |ref> for each occupied i, virtual a.

    Entries whose target determinant is outside the space carry index -1.
    """
    n, L = space.n_particles, space.n_orbitals
    nv = L - n
    ref = (1 << n) - 1
    idx = -np.ones((n, nv), dtype=np.int64)
    phase = np.zeros((n, nv), dtype=np.int64)
    for i in range(n):
        m1, p1 = annihilate(ref, i)
        for a in range(nv):
            m2, p2 = create(m1, n + a)
            j = space.index.get(m2)
            if j is not None:
                idx[i, a] = j
                phase[i, a] = p1 * p2
    return idx, phase


def doubles_map(space):
    """(index, phase) of c+_a ann_i c+_b ann_j |ref> for i<j, a<b."""
    n, L = space.n_particles, space.n_orbitals
    nv = L - n
    ref = (1 << n) - 1
    idx = -np.ones((n, n, nv, nv), dtype=np.int64)
    phase = np.zeros((n, n, nv, nv), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            for a in range(nv):
                for b in range(a + 1, nv):
                    m1, p1 = annihilate(ref, j)
                    m2, p2 = create(m1, n + b)
                    m3, p3 = annihilate(m2, i)
                    m4, p4 = create(m3, n + a)
                    k = space.index.get(m4)
                    if k is None:
                        continue
                    sgn = p1 * p2 * p3 * p4
                    for (ii, jj, sa) in ((i, j, 1), (j, i, -1)):
                        for (aa, bb, sb) in ((a, b, 1), (b, a, -1)):
                            idx[ii, jj, aa, bb] = k
                            phase[ii, jj, aa, bb] = sgn * sa * sb
    return idx, phase


def doubles_from_vector(space, vec):
    """Extract t2[i, j, a, b] = <ref-relative doubles coefficients> / A_ref."""
    vec = np.asarray(vec, dtype=complex)
    ref_coeff = vec[space.reference_index()]
    if abs(ref_coeff) < 1e-8:
        raise FciError(
            "reference coefficient too small for a single-reference expansion: "
            f"|A0| = {abs(ref_coeff):.3e}"
        )
    idx, phase = doubles_map(space)
    t2 = np.where(idx >= 0, phase * vec[idx], 0.0) / ref_coeff
    return t2


def singles_from_vector(space, vec):
    vec = np.asarray(vec, dtype=complex)
    ref_coeff = vec[space.reference_index()]
    idx, phase = singles_map(space)
    return np.where(idx >= 0, phase * vec[idx], 0.0) / ref_coeff


def doubles_from_dual_row(space, row):
    """De-excitation amplitudes l2[a, b, i, j] from a row over bra determinants.

    The bra determinants are biorthonormal to the kets, so the same index and
    phase maps apply; used to match <dual| exp(T2) = <ref| (1 + Lambda) at
    doubles order.
    """
    row = np.asarray(row, dtype=complex)
    ref_coeff = row[space.reference_index()]
    if abs(ref_coeff) < 1e-8:
        raise FciError("dual reference weight too small for amplitude matching")
    idx, phase = doubles_map(space)
    lam_ijab = np.where(idx >= 0, phase * row[idx], 0.0) / ref_coeff
    return np.transpose(lam_ijab, (2, 3, 0, 1))


def rotate_coefficients(space, vec, rotation, target_space=None):
    """Coefficients of the same state after the orbital change phi' = phi @ U.

    Uses the generalized Slater overlap <det'_mu | det_nu> = det(W restricted
    to the occupied rows/columns) with W = inv(U).  ``target_space`` lets the
    output live in a re-labelled determinant space (e.g. after reordering
    spin assignments along with the orbitals).
    """
    w = np.linalg.inv(np.asarray(rotation, dtype=complex))
    occ_in = space.occupations
    occ_out = (target_space if target_space is not None else space).occupations
    sub = w[occ_out[:, None, :, None], occ_in[None, :, None, :]]
    overlap = np.linalg.det(sub)
    return overlap @ np.asarray(vec, dtype=complex)


def state_overlap(space, phi_a, vec_a, phi_b, vec_b, dx):
    """<Psi_a | Psi_b> for states over two orthonormal orbital sets."""
    u = phi_a.conj().T @ phi_b * dx
    vec_b_in_a = rotate_coefficients(space, vec_b, np.linalg.inv(u))
    return np.vdot(vec_a, vec_b_in_a)


# ---------------------------------------------------------------------------
# MCTDHF equations of motion and imaginary-time relaxation
# ---------------------------------------------------------------------------

@dataclass
class MctdhfState:
    space: DeterminantSpace
    phi: np.ndarray          # (n_basis, L), orthonormal columns
    coeffs: np.ndarray       # (dim,)
    time: float = 0.0

    def pair(self, dx):
        return orthonormal_pair(self.phi, self.space.n_particles, dx)

    def copy(self):
        return MctdhfState(self.space, self.phi.copy(), self.coeffs.copy(), self.time)


def mctdhf_rhs(model, state, one_body_op=None, imaginary=False, eps=1e-8):
    """Time derivative (dA, dphi) in the eta = 0 gauge, plus the current energy.

    Real time:  i dA/dt = H A,  i rho1 dphi/dt = Q [h phi rho1 + mean-field].
    Imaginary time (Wick rotation) flips both to gradient flows; the energy is
    shifted off A to keep the norm roughly constant between renormalizations.
    """
    op = one_body_op if one_body_op is not None else model.apply_h
    dx = model.grid.dx
    pair = state.pair(dx)
    h = one_body_integrals(pair, op)
    fields = mean_fields(pair, model.interaction)
    u = two_body_integrals(pair, fields)
    ham = operator_matrix(state.space, h, u)
    coeffs = state.coeffs
    norm = np.vdot(coeffs, coeffs)
    dual = coeffs.conj() / norm
    energy = dual @ (ham @ coeffs)
    rho1, d2 = fci_densities(state.space, dual, coeffs)

    # h phi (rho rho_reg^-1) + mean-field rho_reg^-1: identical to projecting
    # the raw numerator and inverting, but bounded at vanishing occupations
    rho_inv = regularized_inverse(rho1, eps=eps, hermitian=True)
    two_body = np.einsum("qspr,rsk,kq->kp", d2, fields, state.phi, optimize=True)
    velocity = project_out(pair, op(state.phi) @ (rho1 @ rho_inv) + two_body @ rho_inv)
    if imaginary:
        d_coeffs = -(ham @ coeffs - energy * coeffs) / HBAR
        d_phi = -velocity / HBAR
    else:
        d_coeffs = ham @ coeffs / (1j * HBAR)
        d_phi = velocity / (1j * HBAR)
    return d_coeffs, d_phi, energy


def mctdhf_rk4_step(model, state, dt, one_body_op=None, imaginary=False, eps=1e-8):
    """Classical RK4 update of (A, phi); returns the new state and start-of-step energy."""

    def rhs(s):
        return mctdhf_rhs(model, s, one_body_op=one_body_op, imaginary=imaginary, eps=eps)

    def shifted(da, dphi, factor):
        return MctdhfState(
            state.space,
            state.phi + factor * dphi,
            state.coeffs + factor * da,
            state.time + factor,
        )

    k1a, k1p, energy = rhs(state)
    k2a, k2p, _ = rhs(shifted(k1a, k1p, dt / 2))
    k3a, k3p, _ = rhs(shifted(k2a, k2p, dt / 2))
    k4a, k4p, _ = rhs(shifted(k3a, k3p, dt))
    new = MctdhfState(
        state.space,
        state.phi + dt / 6 * (k1p + 2 * k2p + 2 * k3p + k4p),
        state.coeffs + dt / 6 * (k1a + 2 * k2a + 2 * k3a + k4a),
        state.time + dt,
    )
    return new, energy


def relax_imaginary_time(model, state, ds=0.01, tol=1e-9, max_steps=100_000, eps=1e-8):
    """Wick-rotated relaxation toward the lowest state in the spin sector.

    Renormalizes the coefficients and re-orthonormalizes the orbitals after
    every step; converged when |E(s+ds) - E(s)| / ds < tol.  Refuses
    coupled-cluster states: the CC energy is constant along analytic flows, so
    imaginary time cannot relax it.
    """
    if not isinstance(state, MctdhfState):
        raise UnsupportedModeError(
            "imaginary-time relaxation is only defined for the MCTDHF ansatz"
        )
    dx = model.grid.dx
    history = []
    current = state.copy()
    previous_energy = None
    for _ in range(max_steps):
        current, energy = mctdhf_rk4_step(model, current, ds, imaginary=True, eps=eps)
        current.coeffs /= np.sqrt(np.vdot(current.coeffs, current.coeffs).real)
        current.phi = lowdin_orthonormalize(current.phi, dx)
        current.time = 0.0
        history.append(energy.real)
        if previous_energy is not None and abs(energy.real - previous_energy) / ds < tol:
            return current, np.array(history)
        previous_energy = energy.real
    raise FciError(
        f"imaginary-time relaxation did not converge in {max_steps} steps; "
        f"last energies {history[-3:]}"
    )
