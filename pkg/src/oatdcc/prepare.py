"""Construction of initial states for the collision experiment.

The pipeline: relax an N-electron ground state in imaginary time, reorder to
natural orbitals, attach an incoming Gaussian wavepacket as an extra particle,
then (for coupled-cluster runs) rotate to Brueckner orbitals and project the
wavefunction onto doubles amplitudes.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .ccd import Amplitudes
from .determinants import DeterminantSpace
from .eom import CCState
from .fci import (
    MctdhfState,
    doubles_from_dual_row,
    doubles_from_vector,
    exp_t_apply,
    expm_apply,
    fci_densities,
    relax_imaginary_time,
    rotate_coefficients,
    singles_from_vector,
    t2_operator,
)
from .orbitals import lowdin_orthonormalize, orthonormal_pair


class PreparationError(RuntimeError):
    pass


@dataclass(frozen=True)
class WavepacketParams:
    center: float = 10.0
    momentum: float = 1.2
    width: float = 1.25
    spin: int = 1           # +1 spin-up channel, -1 spin-down

    def __post_init__(self):
        if self.width <= 0:
            raise PreparationError("wavepacket width must be positive")
        if self.spin not in (1, -1):
            raise PreparationError("wavepacket spin must be +1 or -1")


def gaussian_packet(grid, params):
    """Normalized packet exp(-(x-x0)^2/(4 sigma^2) + i k0 x) on one spin channel."""
    psi = np.exp(
        -((grid.x - params.center) ** 2) / (4.0 * params.width**2)
        + 1j * params.momentum * grid.x
    )
    psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    column = np.zeros(grid.n_basis, dtype=complex)
    if params.spin == 1:
        column[: grid.n_grid] = psi
    else:
        column[grid.n_grid :] = psi
    return column


def spin_split_counts(n_particles, n_orbitals):
    """(n_up, n_down, l_up, l_down): odd electrons and odd orbitals go spin-down."""
    n_up = n_particles // 2
    n_down = n_particles - n_up
    l_up = n_orbitals // 2
    l_down = n_orbitals - l_up
    if n_up > l_up or n_down > l_down:
        raise PreparationError(
            f"cannot place {n_particles} electrons in {n_orbitals} split orbitals"
        )
    return n_up, n_down, l_up, l_down


def random_spin_orbitals(grid, l_up, l_down, rng):
    """Seeded random orthonormal orbitals, spin-pure by construction.

    Ordering interleaves the channels (down, up, down, up, ...) so that the
    leading orbitals of a relaxed state cover both spins.
    """
    n = grid.n_grid
    columns = []
    spins = []
    remaining = [(-1, l_down), (1, l_up)]
    while any(count > 0 for _, count in remaining):
        for idx, (spin, count) in enumerate(remaining):
            if count == 0:
                continue
            block = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            col = np.zeros(2 * n, dtype=complex)
            if spin == 1:
                col[:n] = block
            else:
                col[n:] = block
            columns.append(col)
            spins.append(spin)
            remaining[idx] = (spin, count - 1)
    phi = np.array(columns).T
    return lowdin_orthonormalize(phi, grid.dx), np.array(spins, dtype=int)


def natural_orbital_order(model, state):
    """Rotate to natural orbitals, most occupied first; density becomes diagonal.

    The one-body density of a spin-projection eigenstate is block diagonal in
    spin, so each channel is diagonalized separately; this keeps the natural
    orbitals spin-pure even across degenerate occupations.
    """
    coeffs = state.coeffs
    dual = coeffs.conj() / np.vdot(coeffs, coeffs)
    rho1, _ = fci_densities(state.space, dual, coeffs)
    L = state.space.n_orbitals
    spins = state.space.spins
    blocks = (
        [np.arange(L)]
        if spins is None
        else [np.nonzero(spins == s)[0] for s in (1, -1)]
    )
    rotation = np.zeros((L, L), dtype=complex)
    occupations = np.zeros(L)
    col_spins = np.zeros(L, dtype=int)
    col = 0
    for block_idx, block in enumerate(blocks):
        if block.size == 0:
            continue
        occs, vecs = np.linalg.eigh(rho1[np.ix_(block, block)])
        for k in np.argsort(-occs):
            rotation[block, col] = vecs[:, k]
            occupations[col] = occs[k]
            col_spins[col] = 1 if (spins is None or block_idx == 0) else -1
            col += 1
    order = np.argsort(-occupations, kind="stable")
    rotation = rotation[:, order]
    new_spins = None if spins is None else col_spins[order]
    new_space = DeterminantSpace(
        state.space.n_particles, state.space.n_orbitals, new_spins, state.space.total_sz
    )
    new_coeffs = rotate_coefficients(state.space, coeffs, rotation, target_space=new_space)
    return MctdhfState(new_space, state.phi @ rotation, new_coeffs, state.time)


def ground_state_mctdhf(model, n_particles, n_orbitals, seed, ds=0.01, tol=1e-9,
                        max_steps=100_000, split=None):
    """Relaxed ground state in the fixed spin-projection sector, natural-ordered.

    Deterministic for a given seed.  For zero particles, returns the vacuum
    over a random orthonormal orbital set (the collision pipeline attaches the
    projectile to it).  ``split`` overrides the default even orbital split
    with explicit (l_up, l_down) channel sizes.
    """
    rng = np.random.default_rng(seed)
    grid = model.grid
    n_up, n_down, l_up, l_down = spin_split_counts(n_particles, n_orbitals)
    if split is not None:
        l_up, l_down = split
        if l_up + l_down != n_orbitals or n_up > l_up or n_down > l_down:
            raise PreparationError(f"invalid orbital split {split}")
    phi, spins = random_spin_orbitals(grid, l_up, l_down, rng)
    space = DeterminantSpace(n_particles, n_orbitals, spins, total_sz=n_up - n_down)
    if n_particles == 0:
        coeffs = np.ones(1, dtype=complex)
        return MctdhfState(space, phi, coeffs), np.zeros(0)
    coeffs = rng.standard_normal(space.dim) + 1j * rng.standard_normal(space.dim)
    coeffs /= np.sqrt(np.vdot(coeffs, coeffs).real)
    state = MctdhfState(space, phi, coeffs)
    relaxed, history = relax_imaginary_time(
        model, state, ds=ds, tol=tol, max_steps=max_steps
    )
    return natural_orbital_order(model, relaxed), history


def attach_wavepacket(model, state, params):
    """g+ |Psi_N>: extend the orbital set by the packet and remap coefficients.

    The packet is orthogonalized against the existing orbitals and inserted at
    position N (so the reference determinant of the (N+1)-particle state is
    the first N+1 orbitals); old orbital indices >= N shift up by one, which
    preserves determinant ordering and requires no extra phases.
    """
    grid = model.grid
    n = state.space.n_particles
    L = state.space.n_orbitals
    packet = gaussian_packet(grid, params)
    overlap = state.phi.conj().T @ packet * grid.dx
    packet = packet - state.phi @ overlap
    residual_norm = np.sqrt(np.sum(np.abs(packet) ** 2).real * grid.dx)
    if residual_norm < 1e-8:
        raise PreparationError(
            "wavepacket is numerically inside the occupied orbital span"
        )
    packet = packet / residual_norm

    new_phi = np.concatenate(
        [state.phi[:, :n], packet[:, None], state.phi[:, n:]], axis=1
    )
    old_spins = (
        state.space.spins if state.space.spins is not None else np.ones(L, dtype=int)
    )
    new_spins = np.concatenate([old_spins[:n], [params.spin], old_spins[n:]])
    new_sz = (state.space.total_sz or 0) + params.spin
    new_space = DeterminantSpace(n + 1, L + 1, new_spins, total_sz=new_sz)

    new_coeffs = np.zeros(new_space.dim, dtype=complex)
    for idx, mask in enumerate(state.space.masks):
        mask = int(mask)
        low = mask & ((1 << n) - 1)
        high = (mask >> n) << (n + 1)
        shifted = low | high | (1 << n)
        phase = 1 if bin(low).count("1") % 2 == 0 else -1
        new_coeffs[new_space.index[shifted]] = phase * state.coeffs[idx]
    return MctdhfState(new_space, new_phi, new_coeffs, state.time)


def brueckner_rotate(state, dx, tol=1e-10, max_iter=100):
    """Unitary orbital rotations until the singles coefficients vanish.

    The physical state is unchanged; only its parametrization moves.  The
    reference overlap |A0| grows monotonically toward the Brueckner maximum.
    """
    space = state.space
    n = space.n_particles
    L = space.n_orbitals
    phi = state.phi.copy()
    coeffs = state.coeffs.copy()
    residual = None
    for _ in range(max_iter):
        t1 = singles_from_vector(space, coeffs)
        residual = float(np.max(np.abs(t1), initial=0.0))
        if residual < tol:
            return MctdhfState(space, phi, coeffs, state.time)
        g = np.zeros((L, L), dtype=complex)
        g[n:, :n] = t1.T
        rotation = expm(g - g.conj().T)
        phi = phi @ rotation
        coeffs = rotate_coefficients(space, coeffs, rotation)
    raise PreparationError(
        f"singles elimination stagnated; residual singles norm {residual:.3e}"
    )


def _channel_seed(n, nv, occ_spins, vir_spins, scale):
    """Deterministic antisymmetric spin-allowed amplitude pattern of given size.

    Used to give structurally empty correlation channels a small initial
    amplitude, keeping the density-matrix inversion well conditioned from the
    first time step.  The physical perturbation is of order scale^2.
    """
    i_w = 1.0 + 0.25 * np.arange(n)
    j_w = 1.0 + 0.125 * np.arange(n)
    a_w = 1.0 + 0.5 * np.arange(nv)
    b_w = 1.0 + 0.0625 * np.arange(nv)
    base = np.einsum("i,j,a,b->ijab", i_w, j_w, a_w, b_w).astype(complex)
    base = base - base.transpose(1, 0, 2, 3)
    base = base - base.transpose(0, 1, 3, 2)
    allowed = (
        occ_spins[:, None, None, None] + occ_spins[None, :, None, None]
        == vir_spins[None, None, :, None] + vir_spins[None, None, None, :]
    )
    base = base * allowed
    peak = np.max(np.abs(base))
    return scale * base / peak if peak > 0 else base


def extract_cc_initial(model, state, singles_tol=1e-8, virtual_seed=0.0):
    """Project a singles-free wavefunction onto doubles amplitudes.

    tau is read off the doubles coefficients; lambda solves the doubles-order
    matching of the conjugate state, discarding higher de-excitation sectors.
    Returns the CC state plus diagnostics (truncated triples-and-higher weight).
    ``virtual_seed`` adds a small conjugate-paired amplitude pattern across all
    spin-allowed channels; see _channel_seed.
    """
    space = state.space
    singles = singles_from_vector(space, state.coeffs)
    if np.max(np.abs(singles), initial=0.0) > singles_tol:
        raise PreparationError("state has singles; run the Brueckner rotation first")
    t2 = doubles_from_vector(space, state.coeffs)

    dual_target = state.coeffs.conj() / np.vdot(state.coeffs, state.coeffs)
    row = expm_apply(t2_operator(space, t2).T, dual_target)
    l2 = doubles_from_dual_row(space, row)
    if virtual_seed:
        if space.spins is None:
            raise PreparationError("channel seeding requires spin labels")
        n = space.n_particles
        seed = _channel_seed(
            n, space.n_orbitals - n, space.spins[:n], space.spins[n:], virtual_seed
        )
        t2 = t2 + seed
        l2 = l2 + np.conj(seed.transpose(2, 3, 0, 1))

    ref = space.reference_index()
    rebuilt = exp_t_apply(space, t2)
    residual = state.coeffs / state.coeffs[ref] - rebuilt
    ranks = np.array(
        [bin(int(m) ^ int(space.masks[ref])).count("1") // 2 for m in space.masks]
    )
    low_sector = np.sqrt(np.sum(np.abs(residual[ranks <= 2]) ** 2).real)
    truncated = np.sqrt(np.sum(np.abs(residual[ranks > 2]) ** 2).real)
    diagnostics = {
        "low_sector_residual": low_sector,
        "truncated_weight": truncated,
        "reference_weight": abs(state.coeffs[ref])
        / np.sqrt(np.vdot(state.coeffs, state.coeffs).real),
    }
    pair = orthonormal_pair(state.phi.copy(), space.n_particles, model.grid.dx)
    return CCState(pair, Amplitudes(t2, l2), state.time), diagnostics


def boost(model, state, momentum):
    """Multiply every ket orbital by exp(i k x): a rigid momentum kick.

    The coefficients are untouched (the kicked state has identical expansion
    coefficients over the kicked orbitals); occupations are preserved, which
    keeps the density-matrix inversion well conditioned.  Works for both
    orthonormal and coupled-cluster states.
    """
    phase = np.exp(1j * momentum * np.concatenate([model.grid.x, model.grid.x]))
    if isinstance(state, CCState):
        pair = state.pair.copy()
        pair.phi = phase[:, None] * pair.phi
        pair.phi_tilde = pair.phi_tilde / phase[None, :]
        return CCState(pair, state.amps.copy(), state.time)
    return MctdhfState(state.space, phase[:, None] * state.phi, state.coeffs.copy(),
                       state.time)


def prepare_collision_state(model, n_particles, n_orbitals, packet, seed,
                            ds=0.01, tol=1e-9, atom_split=None):
    """Full pipeline: relax the (N-1)-electron atom, attach the projectile.

    ``n_particles``/``n_orbitals`` count the final assembled system; the atom
    is relaxed with one electron and one orbital fewer.
    """
    atom, history = ground_state_mctdhf(
        model, n_particles - 1, n_orbitals - 1, seed, ds=ds, tol=tol, split=atom_split
    )
    assembled = attach_wavepacket(model, atom, packet)
    return assembled, history
