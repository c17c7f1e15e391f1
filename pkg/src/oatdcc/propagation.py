"""Time evolution by variational splitting, with observable monitoring.

One composite step is: exact kinetic half step on the orbitals, one RK4 step
of the remaining generator (external potential plus interaction) on the full
parameter set, exact kinetic half step again.  The kinetic flow never touches
amplitudes or CI coefficients.  A fixed-basis mode integrates the amplitude
equations alone with the full Hamiltonian (no splitting; stiff, small steps).
"""

from dataclasses import dataclass, field

import numpy as np

from .ccd import Amplitudes, ccd_energy, density_1b
from .eom import CCState, assemble_derivative, state_integrals, tdcc_fixed_basis_rhs
from .fci import MctdhfState, mctdhf_rhs
from .grid import apply_kinetic_phase
from .orbitals import OrbitalPair, lowdin_orthonormalize, rebiorthonormalize


class PropagationError(RuntimeError):
    def __init__(self, message, records=None, last_state=None):
        super().__init__(message)
        self.records = records or []
        self.last_state = last_state


@dataclass
class ObservableRecord:
    time: float
    energy: complex
    norm: complex
    imag_density_integral: float
    density: np.ndarray | None = None


@dataclass
class RunDiagnostics:
    max_biorthogonality_drift: float = 0.0
    max_pspace_residual: float = 0.0
    max_pspace_condition: float = 0.0
    steps: int = 0
    extra: dict = field(default_factory=dict)


def grid_density(state, model):
    """Complex particle density n(x, s) from the one-body density matrix."""
    if isinstance(state, CCState):
        rho1 = density_1b(state.amps)
        return np.einsum(
            "xp,pq,qx->x", state.pair.phi, rho1, state.pair.phi_tilde, optimize=True
        )
    coeffs = state.coeffs
    norm = np.vdot(coeffs, coeffs)
    from .fci import fci_densities

    rho1, _ = fci_densities(state.space, coeffs.conj() / norm, coeffs)
    return np.einsum(
        "xp,pq,qx->x", state.phi, rho1, state.phi.conj().T, optimize=True
    )


def state_norm(state):
    """<dual|ket>: identically one for CC (intermediate normalization)."""
    if isinstance(state, CCState):
        return 1.0 + 0.0j
    return complex(np.vdot(state.coeffs, state.coeffs))


def total_energy(state, model):
    if isinstance(state, CCState):
        h, u, _ = state_integrals(state, model)
        return ccd_energy(h, u, state.amps)
    _, _, energy = mctdhf_rhs(model, state)
    return energy


def observe(state, model, with_density=True):
    density = grid_density(state, model)
    f_t = float(np.sum(np.abs(density.imag)) * model.grid.dx)
    return ObservableRecord(
        time=float(state.time),
        energy=total_energy(state, model),
        norm=state_norm(state),
        imag_density_integral=f_t,
        density=density if with_density else None,
    )


# ---------------------------------------------------------------------------
# elementary steps
# ---------------------------------------------------------------------------

def kinetic_half_step(state, model, dt):
    """Exact free flow for dt/2: spectral phases on kets, inverse phases on duals."""
    grid = model.grid
    factor = -0.5j * dt
    if isinstance(state, CCState):
        phi = apply_kinetic_phase(grid, state.pair.phi, factor)
        phi_tilde = apply_kinetic_phase(grid, state.pair.phi_tilde.T, -factor).T
        pair = OrbitalPair(phi, phi_tilde, state.pair.n_occupied, state.pair.dx)
        return CCState(pair, state.amps, state.time)
    phi = apply_kinetic_phase(grid, state.phi, factor)
    return MctdhfState(state.space, phi, state.coeffs, state.time)


def _cc_rhs(state, model, one_body_op, fixed_orbitals, eps, diagnostics=None):
    if fixed_orbitals:
        h, u, _ = state_integrals(state, model, one_body_op)
        d_t2, d_l2 = tdcc_fixed_basis_rhs(h, u, state.amps)
        return np.zeros_like(state.pair.phi), np.zeros_like(state.pair.phi_tilde), d_t2, d_l2
    deriv = assemble_derivative(state, model, one_body_op=one_body_op, eps=eps)
    if diagnostics is not None:
        for label in ("eta_ket", "eta_bra"):
            diagnostics.max_pspace_residual = max(
                diagnostics.max_pspace_residual,
                deriv.diagnostics.get(f"{label}_residual", 0.0),
            )
            diagnostics.max_pspace_condition = max(
                diagnostics.max_pspace_condition,
                deriv.diagnostics.get(f"{label}_condition", 0.0),
            )
    return deriv.d_phi, deriv.d_phi_tilde, deriv.d_t2, deriv.d_l2


def _cc_shift(state, parts, factor):
    d_phi, d_phi_tilde, d_t2, d_l2 = parts
    pair = OrbitalPair(
        state.pair.phi + factor * d_phi,
        state.pair.phi_tilde + factor * d_phi_tilde,
        state.pair.n_occupied,
        state.pair.dx,
    )
    amps = Amplitudes(state.amps.t2 + factor * d_t2, state.amps.l2 + factor * d_l2)
    return CCState(pair, amps, state.time + factor)


def potential_full_step(
    state, model, dt, one_body_op=None, fixed_orbitals=False, eps=1e-8, diagnostics=None
):
    """One RK4 step of the non-kinetic generator, then drift correction.

    ``one_body_op`` defaults to the external potential (the splitting
    remainder); pass ``model.apply_h`` for unsplit full-Hamiltonian stepping.
    """
    op = one_body_op if one_body_op is not None else model.apply_v
    if isinstance(state, CCState):
        k1 = _cc_rhs(state, model, op, fixed_orbitals, eps, diagnostics)
        k2 = _cc_rhs(_cc_shift(state, k1, dt / 2), model, op, fixed_orbitals, eps)
        k3 = _cc_rhs(_cc_shift(state, k2, dt / 2), model, op, fixed_orbitals, eps)
        k4 = _cc_rhs(_cc_shift(state, k3, dt), model, op, fixed_orbitals, eps)
        combined = tuple(
            (a + 2 * b + 2 * c + d) / 6 for a, b, c, d in zip(k1, k2, k3, k4)
        )
        new = _cc_shift(state, combined, dt)
        new.time = state.time + dt
        if not fixed_orbitals:
            if diagnostics is not None:
                diagnostics.max_biorthogonality_drift = max(
                    diagnostics.max_biorthogonality_drift,
                    new.pair.biorthogonality_error(),
                )
            new = CCState(rebiorthonormalize(new.pair), new.amps, new.time)
        return new

    def rhs(s):
        d_coeffs, d_phi, _ = mctdhf_rhs(model, s, one_body_op=op, eps=eps)
        return d_coeffs, d_phi

    def shift(parts, factor):
        return MctdhfState(
            state.space,
            state.phi + factor * parts[1],
            state.coeffs + factor * parts[0],
            state.time + factor,
        )

    k1 = rhs(state)
    k2 = rhs(shift(k1, dt / 2))
    k3 = rhs(shift(k2, dt / 2))
    k4 = rhs(shift(k3, dt))
    new_coeffs = state.coeffs + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
    new_phi = state.phi + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
    if diagnostics is not None:
        overlap = new_phi.conj().T @ new_phi * model.grid.dx
        diagnostics.max_biorthogonality_drift = max(
            diagnostics.max_biorthogonality_drift,
            float(np.max(np.abs(overlap - np.eye(overlap.shape[0])))),
        )
    new_phi = lowdin_orthonormalize(new_phi, model.grid.dx)
    return MctdhfState(state.space, new_phi, new_coeffs, state.time + dt)


def propagate(
    state,
    model,
    dt,
    t_final,
    stride=20,
    eps=1e-8,
    splitting=True,
    fixed_orbitals=False,
    record_density=True,
    on_record=None,
):
    """Strang-split (or unsplit) evolution until t_final, monitoring observables.

    Density snapshots are stored at the record stride, plus the initial and
    final times.  Numerical blow-up raises PropagationError carrying the
    partial trajectory and the last finite state.
    """
    if dt == 0 or (t_final - state.time) * dt <= 0:
        raise ValueError("time step must advance the state toward t_final")
    n_steps = int(round((t_final - state.time) / dt))
    records = [observe(state, model, with_density=record_density)]
    if on_record is not None:
        on_record(records[-1])
    diagnostics = RunDiagnostics()
    current = state
    for step in range(1, n_steps + 1):
        previous = current
        try:
            if splitting:
                current = kinetic_half_step(current, model, dt)
                current = potential_full_step(
                    current, model, dt, fixed_orbitals=fixed_orbitals, eps=eps,
                    diagnostics=diagnostics,
                )
                current = kinetic_half_step(current, model, dt)
            else:
                current = potential_full_step(
                    current, model, dt, one_body_op=model.apply_h,
                    fixed_orbitals=fixed_orbitals, eps=eps, diagnostics=diagnostics,
                )
        except np.linalg.LinAlgError as exc:
            raise PropagationError(
                f"linear algebra failure at t = {previous.time:.6f}: {exc}",
                records=records,
                last_state=previous,
            ) from exc
        current.time = state.time + step * dt
        diagnostics.steps = step
        arrays = (
            (current.pair.phi, current.pair.phi_tilde, current.amps.t2, current.amps.l2)
            if isinstance(current, CCState)
            else (current.phi, current.coeffs)
        )
        if not all(np.all(np.isfinite(a.view(float))) for a in arrays):
            raise PropagationError(
                f"non-finite state at t = {current.time:.6f}",
                records=records,
                last_state=previous,
            )
        if step % stride == 0 or step == n_steps:
            records.append(observe(current, model, with_density=record_density))
            if on_record is not None:
                on_record(records[-1])
    return current, records, diagnostics
