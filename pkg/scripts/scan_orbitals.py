#!/usr/bin/env python3
"""Convergence of the assembled initial energy with the orbital count.

For each total orbital count L, the four-electron ground state is relaxed at
L-1 orbitals, the projectile is attached, and both initial energies (the
determinant-space value and the doubles-amplitude value after the Brueckner
rotation) are reported together with the truncated triples-plus weight.
"""

import argparse

from oatdcc.eom import state_energy
from oatdcc.fci import mctdhf_rhs
from oatdcc.model import build_model
from oatdcc.prepare import (
    WavepacketParams,
    brueckner_rotate,
    extract_cc_initial,
    prepare_collision_state,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--orbital-counts", type=int, nargs="+", default=[5, 7, 8, 9])
    parser.add_argument("--particles", type=int, default=5)
    parser.add_argument("--coulomb-squared", action="store_true", default=True)
    parser.add_argument("--seed", type=int, default=21)
    args = parser.parse_args()

    model = build_model(half_width=15.0, n_grid=64, coulomb_squared=args.coulomb_squared)
    packet = WavepacketParams(center=10.0, momentum=1.2, width=1.25, spin=1)
    print("L   E_reference      E_doubles        gap        truncated_weight")
    for total_l in args.orbital_counts:
        assembled, _ = prepare_collision_state(
            model, args.particles, total_l, packet, args.seed, ds=0.01, tol=1e-10
        )
        _, _, e_ref = mctdhf_rhs(model, assembled)
        cc, diagnostics = extract_cc_initial(
            model, brueckner_rotate(assembled, model.grid.dx)
        )
        e_cc = state_energy(cc, model)
        print(
            f"{total_l:<3d} {e_ref.real:<16.8f} {e_cc.real:<16.8f} "
            f"{e_cc.real - e_ref.real:+.3e} {diagnostics['truncated_weight']:.3e}"
        )


if __name__ == "__main__":
    main()
