"""Biorthogonal orbital pairs and matrix elements in the moving basis.

An OrbitalPair stores ket orbitals as columns of ``phi`` (n_basis x L) and dual
bra orbitals as rows of ``phi_tilde`` (L x n_basis), with the quadrature-weighted
pairing phi_tilde @ phi * dx = I.  All integrals use the plain Riemann sum with
weight dx, which is the natural pairing for the Fourier grid.
"""

from dataclasses import dataclass

import numpy as np


class OrbitalError(ValueError):
    pass


@dataclass
class OrbitalPair:
    phi: np.ndarray         # (n_basis, L)
    phi_tilde: np.ndarray   # (L, n_basis)
    n_occupied: int
    dx: float

    @property
    def n_orbitals(self):
        return self.phi.shape[1]

    @property
    def n_virtual(self):
        return self.n_orbitals - self.n_occupied

    def overlap(self):
        return self.phi_tilde @ self.phi * self.dx

    def biorthogonality_error(self):
        return float(np.max(np.abs(self.overlap() - np.eye(self.n_orbitals))))

    def copy(self):
        return OrbitalPair(self.phi.copy(), self.phi_tilde.copy(), self.n_occupied, self.dx)


def orthonormal_pair(phi, n_occupied, dx):
    """Pair with the bra set tied to the ket set (MCTDHF convention)."""
    phi = np.asarray(phi, dtype=complex)
    return OrbitalPair(phi, phi.conj().T.copy(), n_occupied, dx)


def one_body_integrals(pair, op):
    """h[p, q] = <phi_tilde_p| op |phi_q> by quadrature; op acts on ket columns."""
    op_phi = op(pair.phi)
    if op_phi.shape != pair.phi.shape:
        raise OrbitalError("one-body operator changed the orbital matrix shape")
    return pair.phi_tilde @ op_phi * pair.dx


def mean_fields(pair, lowrank):
    """Mean-field grid functions W[r, s, :] = integral of phi_tilde_r * u * phi_s.

    Assembled through the low-rank kernel expansion; W[r, s] is the local
    potential generated by the orbital pair (r, s).
    """
    L, nb = pair.phi_tilde.shape
    if lowrank is None:
        return np.zeros((L, L, nb), dtype=complex)
    modes = lowrank.spin_modes()                       # (M, n_basis)
    inner = np.einsum("rk,mk,ks->mrs", pair.phi_tilde, modes, pair.phi) * pair.dx
    return np.einsum("m,mk,mrs->rsk", lowrank.weights, modes, inner)


def two_body_integrals(pair, fields):
    """Antisymmetrized u[p, r, q, s] = <pr|u|qs> - <pr|u|sq> from mean fields."""
    raw = np.einsum("pk,rsk,kq->prqs", pair.phi_tilde, fields, pair.phi) * pair.dx
    return raw - raw.transpose(0, 1, 3, 2)


def project_out(pair, v):
    """Q v = v - P v with the oblique projector P = phi (phi_tilde dx)."""
    return v - pair.phi @ (pair.phi_tilde @ v) * pair.dx


def project_out_rows(pair, w):
    """Row-side complement: w Q for bra-type quantities (rows of shape (.., n_basis))."""
    return w - (w @ pair.phi) * pair.dx @ pair.phi_tilde


def rebiorthonormalize(pair):
    """Restore phi_tilde @ phi * dx = I by adjusting the bra set only."""
    s = pair.overlap()
    try:
        new_tilde = np.linalg.solve(s, pair.phi_tilde)
    except np.linalg.LinAlgError as exc:
        raise OrbitalError(f"orbital overlap is singular, state degenerate: {exc}") from exc
    return OrbitalPair(pair.phi, new_tilde, pair.n_occupied, pair.dx)


def lowdin_orthonormalize(phi, dx):
    """Symmetric (minimal-change) orthonormalization of ket columns."""
    s = phi.conj().T @ phi * dx
    vals, vecs = np.linalg.eigh(s)
    if np.min(vals) <= 0:
        raise OrbitalError("orbital set is numerically linearly dependent")
    s_inv_half = (vecs * (1.0 / np.sqrt(vals))) @ vecs.conj().T
    return phi @ s_inv_half
