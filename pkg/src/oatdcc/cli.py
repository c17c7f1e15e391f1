"""Command-line entry point: relax / prepare / propagate / compare workflows.

A full run performs two phases: preparation (imaginary-time relaxation of the
(N-1)-electron system, wavepacket attachment, and for coupled-cluster methods
the Brueckner rotation plus amplitude extraction) and real-time propagation
with observable monitoring.  All outputs land in the run directory:
manifest.json, energy.csv, density.bin, prepared/final checkpoints.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, apply_overrides, config_dict, load_config, validate
from .model import build_model
from .prepare import (
    WavepacketParams,
    brueckner_rotate,
    extract_cc_initial,
    prepare_collision_state,
)
from .propagation import PropagationError, propagate
from .runio import (
    DensityWriter,
    EnergyWriter,
    load_checkpoint,
    read_density_file,
    read_energy_table,
    read_manifest,
    save_checkpoint,
    write_manifest,
)


def model_from_config(config):
    return build_model(
        half_width=config.half_width,
        n_grid=config.n_grid,
        well_depth=config.well_depth,
        well_width=config.well_width,
        coulomb_strength=config.coulomb_strength,
        coulomb_softening=config.coulomb_softening,
        coulomb_squared=config.coulomb_squared,
        interaction_rank=config.interaction_rank or None,
    )


def packet_from_config(config):
    return WavepacketParams(
        center=config.packet_center,
        momentum=config.packet_momentum,
        width=config.packet_width,
        spin=config.packet_spin,
    )


def prepare_state(config, model, out_dir, log=print):
    """Preparation phase; writes the prepared checkpoint and returns the state."""
    log(f"relaxing {config.n_particles - 1}-electron ground state "
        f"(L={config.n_orbitals - 1}, seed={config.seed})")
    assembled, history = prepare_collision_state(
        model,
        config.n_particles,
        config.n_orbitals,
        packet_from_config(config),
        config.seed,
        ds=config.relax_step,
        tol=config.relax_tol,
    )
    prep_info = {"relax_steps": int(history.size)}
    if history.size:
        prep_info["relaxed_energy"] = float(history[-1])
        log(f"relaxed energy {history[-1]:.10f} after {history.size} steps")
    if config.method in ("oatdccd", "tdccd-fixed"):
        rotated = brueckner_rotate(assembled, model.grid.dx)
        state, diagnostics = extract_cc_initial(model, rotated)
        prep_info["truncated_weight"] = diagnostics["truncated_weight"]
        prep_info["reference_weight"] = diagnostics["reference_weight"]
        log(
            "extracted doubles amplitudes; truncated weight "
            f"{diagnostics['truncated_weight']:.3e}"
        )
    else:
        state = assembled
    save_checkpoint(out_dir / "prepared.oatc", state, model, config.method)
    return state, prep_info


def run(config, log=print):
    """Execute one full simulation; returns the output directory path."""
    validate(config)
    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model = model_from_config(config)
    manifest_extra = {"code_version": __version__}

    prepared_path = out_dir / "prepared.oatc"
    if prepared_path.exists():
        state, method = load_checkpoint(prepared_path, model)
        if method != config.method:
            raise ConfigError(
                f"prepared checkpoint in {out_dir} was made for method {method!r}"
            )
        log(f"resuming from prepared checkpoint at t={state.time}")
        prep_info = {"resumed": True}
    else:
        state, prep_info = prepare_state(config, model, out_dir, log=log)
    manifest_extra["preparation"] = prep_info
    write_manifest(out_dir / "manifest.json", config_dict(config), manifest_extra)

    energy_writer = EnergyWriter(out_dir / "energy.csv")
    density_writer = DensityWriter(
        out_dir / "density.bin", model.grid.n_basis, model.grid.n_grid
    )

    def on_record(record):
        energy_writer.write(record)
        density_writer.write(record.time, record.density)

    status = 0
    try:
        fixed = config.method == "tdccd-fixed"
        final_state, records, diagnostics = propagate(
            state,
            model,
            dt=config.dt,
            t_final=config.t_final,
            stride=config.stride,
            eps=config.eps_density_reg,
            splitting=not fixed,
            fixed_orbitals=fixed,
            on_record=on_record,
        )
        save_checkpoint(out_dir / "final.oatc", final_state, model, config.method)
        log(
            f"propagated to t={records[-1].time:g}; "
            f"energy drift {abs(records[-1].energy - records[0].energy):.3e}"
        )
        summary = {
            "final_time": records[-1].time,
            "initial_energy": [records[0].energy.real, records[0].energy.imag],
            "final_energy": [records[-1].energy.real, records[-1].energy.imag],
            "max_imag_density_integral": max(
                r.imag_density_integral for r in records
            ),
            "max_biorthogonality_drift": diagnostics.max_biorthogonality_drift,
            "max_pspace_residual": diagnostics.max_pspace_residual,
        }
        with open(out_dir / "summary.json", "w", encoding="utf-8") as handle:
            json.dump(summary, handle, indent=2, sort_keys=True)
            handle.write("\n")
    except PropagationError as exc:
        log(f"propagation aborted: {exc}", file=sys.stderr)
        if exc.last_state is not None:
            save_checkpoint(out_dir / "aborted.oatc", exc.last_state, model, config.method)
        status = 2
    finally:
        energy_writer.close()
        density_writer.close()
    return status, out_dir


def compare(dir_a, dir_b):
    """Per-time density discrepancies between two finished run directories."""
    manifest_a = read_manifest(Path(dir_a) / "manifest.json")
    manifest_b = read_manifest(Path(dir_b) / "manifest.json")
    for key in ("half_width", "n_grid"):
        if manifest_a["config"][key] != manifest_b["config"][key]:
            raise ConfigError(f"runs use different grids ({key} differs)")
    times_a, dens_a, _ = read_density_file(Path(dir_a) / "density.bin")
    times_b, dens_b, _ = read_density_file(Path(dir_b) / "density.bin")
    n_common = min(len(times_a), len(times_b))
    if n_common == 0:
        raise ConfigError("no density snapshots to compare")
    if not np.allclose(times_a[:n_common], times_b[:n_common], atol=1e-12):
        raise ConfigError("snapshot times do not match")
    dx = 2.0 * manifest_a["config"]["half_width"] / manifest_a["config"]["n_grid"]
    diff = np.abs(dens_a[:n_common] - dens_b[:n_common])
    report = {
        "times": times_a[:n_common].tolist(),
        "max_abs_difference": diff.max(axis=1).tolist(),
        "integrated_difference": (diff.sum(axis=1) * dx).tolist(),
        "overall_max": float(diff.max()),
    }
    energies_a = read_energy_table(Path(dir_a) / "energy.csv")
    energies_b = read_energy_table(Path(dir_b) / "energy.csv")
    n_e = min(energies_a.size, energies_b.size)
    report["max_energy_difference"] = float(
        np.max(np.abs(energies_a["re_energy"][:n_e] - energies_b["re_energy"][:n_e]))
    )
    return report


def build_parser():
    parser = argparse.ArgumentParser(
        prog="oatdcc",
        description="Fermionic quantum dynamics: adaptive-orbital CCD and MCTDHF",
    )
    parser.add_argument("--config", type=str, help="key=value configuration file")
    parser.add_argument("--method", type=str, choices=["mctdhf", "oatdccd", "tdhf",
                                                       "tdccd-fixed"])
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-final", dest="t_final", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--output", dest="output_dir", type=str)
    parser.add_argument("--relax", action="store_true",
                        help="stop after the imaginary-time relaxation phase")
    parser.add_argument("--prepare", action="store_true",
                        help="stop after writing the prepared-state checkpoint")
    parser.add_argument("--compare", nargs=2, metavar=("DIR_A", "DIR_B"),
                        help="report density discrepancies between two runs")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.compare:
        try:
            report = compare(*args.compare)
        except (ConfigError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        json.dump(report, sys.stdout, indent=2, sort_keys=True)
        print()
        return 0

    try:
        config = load_config(args.config) if args.config else RunConfig()
        overrides = {
            key: getattr(args, key)
            for key in ("method", "dt", "t_final", "seed", "output_dir")
        }
        config = validate(apply_overrides(config, overrides))
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.relax or args.prepare:
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        model = model_from_config(config)
        if args.relax:
            from .prepare import ground_state_mctdhf

            state, history = ground_state_mctdhf(
                model, config.n_particles - 1, config.n_orbitals - 1, config.seed,
                ds=config.relax_step, tol=config.relax_tol,
            )
            save_checkpoint(out_dir / "relaxed.oatc", state, model, "mctdhf")
            write_manifest(
                out_dir / "manifest.json",
                config_dict(config),
                {"code_version": __version__,
                 "relaxed_energy": float(history[-1]) if history.size else 0.0},
            )
            print(f"relaxed energy {history[-1]:.10f}" if history.size else "vacuum")
            return 0
        state, prep_info = prepare_state(config, model, out_dir)
        write_manifest(
            out_dir / "manifest.json",
            config_dict(config),
            {"code_version": __version__, "preparation": prep_info},
        )
        return 0

    status, out_dir = run(config)
    print(f"outputs in {out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
