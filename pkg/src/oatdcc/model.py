"""Model bundle: grid, external potential, and interaction in one place."""

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    GridSpec,
    InteractionLowRank,
    apply_kinetic,
    build_grid,
    decompose_interaction,
    gaussian_well,
    soft_coulomb,
)


@dataclass(frozen=True)
class Model:
    grid: GridSpec
    v_ext: np.ndarray                 # external potential on the spatial grid
    interaction: InteractionLowRank | None   # None means a non-interacting model
    coulomb_strength: float = 1.0
    coulomb_softening: float = 0.2
    coulomb_squared: bool = False
    _v_spin: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_v_spin", np.concatenate([self.v_ext, self.v_ext]))

    def apply_h(self, psi):
        """Full one-body operator: kinetic plus external potential."""
        return apply_kinetic(self.grid, psi) + self.apply_v(psi)

    def apply_v(self, psi):
        """External potential only (the one-body part of H - T)."""
        psi = np.asarray(psi, dtype=complex)
        if psi.ndim == 1:
            return self._v_spin * psi
        return self._v_spin[:, None] * psi

    def kernel(self, x1, x2):
        if self.interaction is None:
            return np.zeros(np.broadcast(x1, x2).shape)
        return soft_coulomb(
            x1,
            x2,
            strength=self.coulomb_strength,
            softening=self.coulomb_softening,
            squared=self.coulomb_squared,
        )

    def dense_spin_kernel(self):
        """Interaction sampled over the full spin grid; oracle-sized systems only."""
        n = self.grid.n_grid
        if self.interaction is None:
            return np.zeros((2 * n, 2 * n))
        spatial = self.kernel(self.grid.x[:, None], self.grid.x[None, :])
        return np.tile(spatial, (2, 2))

    def dense_one_body(self):
        """Dense matrix of the one-body Hamiltonian on the spin grid."""
        nb = self.grid.n_basis
        return apply_kinetic(self.grid, np.eye(nb, dtype=complex)) + np.diag(self._v_spin)


def build_model(
    half_width=15.0,
    n_grid=64,
    well_depth=7.0,
    well_width=1.5,
    coulomb_strength=1.0,
    coulomb_softening=0.2,
    coulomb_squared=False,
    interaction_rank=None,
):
    """Assemble the Gaussian-well / soft-Coulomb model on a Fourier grid."""
    grid = build_grid(half_width, n_grid)
    v_ext = gaussian_well(grid.x, depth=well_depth, width=well_width)
    if coulomb_strength == 0.0:
        lowrank = None
    else:
        lowrank = decompose_interaction(
            grid,
            kernel=lambda a, b: soft_coulomb(
                a, b, strength=coulomb_strength, softening=coulomb_softening,
                squared=coulomb_squared,
            ),
            rank=interaction_rank,
        )
    return Model(
        grid=grid,
        v_ext=v_ext,
        interaction=lowrank,
        coulomb_strength=coulomb_strength,
        coulomb_softening=coulomb_softening,
        coulomb_squared=coulomb_squared,
    )
