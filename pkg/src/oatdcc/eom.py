"""Assembly of the full time derivative for adaptive-orbital coupled cluster.

The composite derivative of a CCState has four pieces: the amplitude equations
(pure doubles algebra), the linear P-space solve for the occupied-virtual
rotation eta, and a Q-space equation per orbital set.  A fixed-basis variant
with frozen orbitals is included for the standard time-dependent CC mode.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import HBAR
from .ccd import Amplitudes, density_1b, density_2b, lambda_rhs, tau_rhs
from .numerics import regularized_inverse
from .orbitals import (
    OrbitalPair,
    mean_fields,
    one_body_integrals,
    project_out,
    project_out_rows,
    two_body_integrals,
)


@dataclass
class CCState:
    pair: OrbitalPair
    amps: Amplitudes
    time: float = 0.0

    def copy(self):
        return CCState(self.pair.copy(), self.amps.copy(), self.time)


@dataclass
class CCDerivative:
    d_phi: np.ndarray
    d_phi_tilde: np.ndarray
    d_t2: np.ndarray
    d_l2: np.ndarray
    eta: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def build_pspace_matrix(rho1, n_occupied):
    """A^{ib}_{aj} = delta^b_a rho^i_j - delta^i_j rho^b_a as an (N*V, N*V) matrix.

    Rows are the equation labels (i, a), columns the unknown labels (j, b),
    both flattened occupied-major; identity at the bare reference.
    """
    n = n_occupied
    rho_oo = rho1[:n, :n]
    rho_vv = rho1[n:, n:]
    nv = rho_vv.shape[0]
    mat = np.einsum("ab,ij->iajb", np.eye(nv), rho_oo) - np.einsum(
        "ij,ba->iajb", np.eye(n), rho_vv
    )
    return mat.reshape(n * nv, n * nv)


def _pspace_matrix_bra(rho1, n_occupied):
    """A^{ja}_{bi} with rows (i, a) and columns (j, b), both occupied-major."""
    n = n_occupied
    rho_oo = rho1[:n, :n]
    rho_vv = rho1[n:, n:]
    nv = rho_vv.shape[0]
    mat = np.einsum("ab,ji->iajb", np.eye(nv), rho_oo) - np.einsum(
        "ij,ab->iajb", np.eye(n), rho_vv
    )
    return mat.reshape(n * nv, n * nv)


def _solve_pspace(mat, rhs_vec, cond_limit, diagnostics, label):
    if mat.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    cond = np.linalg.cond(mat)
    diagnostics[f"{label}_condition"] = float(cond.real)
    if not np.isfinite(cond) or cond > cond_limit:
        warnings.warn(
            f"P-space system '{label}' ill-conditioned (cond={cond:.3e}); "
            "falling back to least squares",
            RuntimeWarning,
        )
        solution = np.linalg.lstsq(mat, rhs_vec, rcond=None)[0]
    else:
        solution = np.linalg.solve(mat, rhs_vec)
    scale = max(np.linalg.norm(rhs_vec), 1.0)
    diagnostics[f"{label}_residual"] = float(
        np.linalg.norm(mat @ solution - rhs_vec) / scale
    )
    return solution


def solve_eta(rho1, d2, h, u, n_occupied, cond_limit=1e12, diagnostics=None):
    """Occupied-virtual orbital rotation from the two P-space linear systems.

    Returns the full (L, L) eta matrix whose only nonzero blocks are
    eta[v, o] (ket rotation) and eta[o, v] (bra rotation); the gauge blocks
    are identically zero.
    """
    if diagnostics is None:
        diagnostics = {}
    n = n_occupied
    L = h.shape[0]
    nv = L - n
    o, v = slice(0, n), slice(n, L)
    rho_oo = rho1[:n, :n]
    rho_vv = rho1[n:, n:]
    eta = np.zeros((L, L), dtype=complex)
    if nv == 0 or n == 0:
        return eta

    # ket-orbital variations: i hbar A^{ib}_{aj} eta^j_b = <[H, c+_a ann_i]>,
    # fixing the virtual-orbital velocities along the occupied space.  The
    # moving-frame generator block that survives the commutator is the one
    # with occupied creation, i.e. the eta^j_b entries.
    rhs_ket = rho_oo @ h[o, v] - h[o, v] @ rho_vv
    rhs_ket += 0.5 * (
        np.einsum("ispr,pras->ia", d2[o, :, :, :], u[:, :, v, :], optimize=True)
        - np.einsum("qsar,irqs->ia", d2[:, :, v, :], u[o, :, :, :], optimize=True)
    )
    sol = _solve_pspace(
        build_pspace_matrix(rho1, n),
        rhs_ket.reshape(-1) / (1j * HBAR),
        cond_limit,
        diagnostics,
        "eta_ket",
    )
    eta[o, v] = sol.reshape(n, nv)

    # bra-orbital variations: -i hbar A^{ja}_{bi} eta^b_j = <[H, c+_i ann_a]>,
    # fixing the occupied-orbital velocities along the virtual space.
    # NOTE: with truncations beyond doubles the mixed density block rho^a_i is
    # no longer identically zero and its time derivative must be added here.
    rhs_bra = rho_vv @ h[v, o] - h[v, o] @ rho_oo
    rhs_bra += 0.5 * (
        np.einsum("aspr,pris->ai", d2[v, :, :, :], u[:, :, o, :], optimize=True)
        - np.einsum("qsir,arqs->ai", d2[:, :, o, :], u[v, :, :, :], optimize=True)
    )
    sol = _solve_pspace(
        _pspace_matrix_bra(rho1, n),
        rhs_bra.T.reshape(-1) / (-1j * HBAR),
        cond_limit,
        diagnostics,
        "eta_bra",
    )
    eta[v, o] = sol.reshape(n, nv).T
    return eta


def qspace_numerator_ket(pair, rho1, d2, h_phi, fields):
    """sum_q rho^q_p [h |phi_q> + W-contraction], before Q projection."""
    two_body = np.einsum("qspr,rsk,kq->kp", d2, fields, pair.phi, optimize=True)
    return h_phi @ rho1 + two_body


def qspace_numerator_bra(pair, rho1, d2, h_tilde, fields):
    two_body = np.einsum("qspr,px,rsx->qx", d2, pair.phi_tilde, fields, optimize=True)
    return rho1 @ h_tilde + two_body


def _block_regularized_inverse(rho1, n, eps):
    inv = np.zeros_like(rho1)
    inv[:n, :n] = regularized_inverse(rho1[:n, :n], eps=eps)
    inv[n:, n:] = regularized_inverse(rho1[n:, n:], eps=eps)
    return inv


def qspace_rhs_ket(pair, rho1, d2, h_phi, fields, eps=1e-8):
    """Q-space ket velocity: i hbar Q dphi rho1 = Q [h phi rho1 + mean-field].

    Evaluated as Q[h phi (rho rho_reg^-1) + W-term rho_reg^-1]: algebraically
    identical, but the one-body part never multiplies a 1/eps against a zero
    column, which keeps unoccupied-orbital velocities bounded.
    """
    inv = _block_regularized_inverse(rho1, pair.n_occupied, eps)
    filt = rho1 @ inv
    two_body = np.einsum("qspr,rsk,kq->kp", d2, fields, pair.phi, optimize=True)
    velocity = project_out(pair, h_phi @ filt + two_body @ inv)
    return project_out(pair, velocity) / (1j * HBAR)


def qspace_rhs_bra(pair, rho1, d2, h_tilde, fields, eps=1e-8):
    """Q-space bra velocity (rows); the sign flip comes from integration by parts."""
    inv = _block_regularized_inverse(rho1, pair.n_occupied, eps)
    filt = inv @ rho1
    two_body = np.einsum("qspr,px,rsx->qx", d2, pair.phi_tilde, fields, optimize=True)
    velocity = project_out_rows(pair, filt @ h_tilde + inv @ two_body)
    return project_out_rows(pair, velocity) / (-1j * HBAR)


def apply_h_to_rows(op, rows):
    """Row-side action of a symmetric one-body grid operator (kinetic + local)."""
    return op(rows.T).T


def assemble_derivative(state, model, one_body_op=None, eps=1e-8, cond_limit=1e12):
    """Full OATDCCD time derivative of (phi, phi_tilde, t2, l2) at one state snapshot."""
    op = one_body_op if one_body_op is not None else model.apply_h
    pair = state.pair
    amps = state.amps
    n = pair.n_occupied

    h_phi = op(pair.phi)
    h = pair.phi_tilde @ h_phi * pair.dx
    fields = mean_fields(pair, model.interaction)
    u = two_body_integrals(pair, fields)

    d_t2 = tau_rhs(h, u, amps) / (1j * HBAR)
    d_l2 = lambda_rhs(h, u, amps) / (-1j * HBAR)

    rho1 = density_1b(amps)
    d2 = density_2b(amps)
    diagnostics = {}
    eta = solve_eta(rho1, d2, h, u, n, cond_limit=cond_limit, diagnostics=diagnostics)
    # the moving-frame generator contracted with the CC densities must vanish in
    # the doubles approximation (occ-vir density blocks are identically zero)
    diagnostics["d0_expectation"] = complex(np.einsum("qp,pq->", rho1, eta))

    h_tilde = apply_h_to_rows(op, pair.phi_tilde)
    d_phi_q = qspace_rhs_ket(pair, rho1, d2, h_phi, fields, eps=eps)
    d_phi_tilde_q = qspace_rhs_bra(pair, rho1, d2, h_tilde, fields, eps=eps)

    d_phi = pair.phi @ eta + d_phi_q
    d_phi_tilde = -eta @ pair.phi_tilde + d_phi_tilde_q
    return CCDerivative(d_phi, d_phi_tilde, d_t2, d_l2, eta, diagnostics)


def tdcc_fixed_basis_rhs(h, u, amps):
    """Frozen-orbital amplitude derivatives: i dt2/dt = tau_rhs, -i dl2/dt = lambda_rhs."""
    return tau_rhs(h, u, amps) / (1j * HBAR), lambda_rhs(h, u, amps) / (-1j * HBAR)


def state_integrals(state, model, one_body_op=None):
    """(h, u, W) tables of the model Hamiltonian in the state's orbital basis."""
    op = one_body_op if one_body_op is not None else model.apply_h
    h = one_body_integrals(state.pair, op)
    fields = mean_fields(state.pair, model.interaction)
    return h, two_body_integrals(state.pair, fields), fields


def state_energy(state, model, one_body_op=None):
    from .ccd import ccd_energy

    h, u, _ = state_integrals(state, model, one_body_op)
    return ccd_energy(h, u, state.amps)
