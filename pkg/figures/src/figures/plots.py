"""The four figure products: initial density, heatmap, conservation, difference.

Every plot writes a PNG at fixed DPI plus a sidecar text file recording the
color-scale limits, so a rerun is reproducible and auditable.  Run
directories are strictly read-only inputs.
"""

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .runs import RunFormatError, load_run

DPI = 150


def _write_sidecar(image_path, entries):
    lines = [f"{key} = {value}" for key, value in entries.items()]
    Path(str(image_path) + ".txt").write_text("\n".join(lines) + "\n", encoding="utf-8")


def _quantile_limits(values, low=0.01, high=0.99):
    finite = values[np.isfinite(values)]
    vmin, vmax = np.quantile(finite, [low, high])
    if vmin == vmax:
        vmax = vmin + 1.0
    return float(vmin), float(vmax)


def plot_initial_density(run_dir, output=None):
    """Overlay of the t=0 particle density and the external well."""
    run = load_run(run_dir)
    output = Path(output) if output else Path(run_dir) / "initial_density.png"
    x = run.positions
    density = run.spatial_density(0)
    config = run.config
    potential = -config["well_depth"] * np.exp(
        -(x**2) / (2.0 * config["well_width"] ** 2)
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x, density, label="n(x, t=0)")
    ax.plot(x, potential, "--", label="V(x)")
    ax.set_xlabel("x")
    ax.legend()
    ax.set_title(f"initial density, N = {config['n_particles']}")
    fig.savefig(output, dpi=DPI)
    plt.close(fig)
    _write_sidecar(
        output,
        {
            "source": str(run_dir),
            "density_min": float(density.min()),
            "density_max": float(density.max()),
            "potential_min": float(potential.min()),
        },
    )
    return output


def plot_density_heatmap(run_dir, output=None):
    """Time-versus-position map of Re n, spin up on the left half."""
    run = load_run(run_dir)
    output = Path(output) if output else Path(run_dir) / "density_heatmap.png"
    data = run.densities.real
    vmin, vmax = _quantile_limits(data)
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(
        data,
        aspect="auto",
        origin="lower",
        extent=[0, data.shape[1], run.times[0], run.times[-1]],
        vmin=vmin,
        vmax=vmax,
    )
    ax.axvline(run.n_grid, color="white", linewidth=0.8)
    ax.set_xlabel("grid index (spin up | spin down)")
    ax.set_ylabel("t")
    ax.set_title(f"density, method {run.config['method']}")
    fig.colorbar(image, ax=ax)
    fig.savefig(output, dpi=DPI)
    plt.close(fig)
    _write_sidecar(output, {"source": str(run_dir), "vmin": vmin, "vmax": vmax})
    return output


def plot_energy_and_imag(run_dirs, output):
    """|E(t) - E(0)| and the integrated imaginary density per run."""
    output = Path(output)
    fig, (ax_energy, ax_imag) = plt.subplots(1, 2, figsize=(10, 4))
    stats = {}
    for run_dir in run_dirs:
        run = load_run(run_dir)
        label = f"{run.config['method']} ({Path(run_dir).name})"
        t = run.energy["t"]
        deviation = np.abs(run.energy["re_energy"] - run.energy["re_energy"][0])
        floor = 1e-17
        ax_energy.semilogy(t, np.maximum(deviation, floor), label=label)
        ax_imag.plot(t, run.energy["f_t"], label=label)
        stats[f"max_energy_deviation[{label}]"] = float(deviation.max())
        stats[f"max_f_t[{label}]"] = float(run.energy["f_t"].max())
    ax_energy.set_xlabel("t")
    ax_energy.set_ylabel("|E(t) - E(0)|")
    ax_energy.legend(fontsize=7)
    ax_imag.set_xlabel("t")
    ax_imag.set_ylabel("integral |Im n|")
    ax_imag.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(output, dpi=DPI)
    plt.close(fig)
    _write_sidecar(output, stats)
    return output


def plot_difference(run_dir_a, run_dir_b, output=None):
    """Heatmap of |n_A - n_B| over the common snapshots."""
    run_a = load_run(run_dir_a)
    run_b = load_run(run_dir_b)
    if run_a.n_grid != run_b.n_grid or run_a.config["half_width"] != run_b.config[
        "half_width"
    ]:
        raise RunFormatError("run directories use different grids")
    n_common = min(run_a.densities.shape[0], run_b.densities.shape[0])
    if not np.allclose(run_a.times[:n_common], run_b.times[:n_common], atol=1e-12):
        raise RunFormatError("snapshot times do not match")
    output = Path(output) if output else Path(run_dir_a) / "density_difference.png"
    diff = np.abs(run_a.densities[:n_common] - run_b.densities[:n_common])
    fig, ax = plt.subplots(figsize=(6, 5))
    image = ax.imshow(
        diff,
        aspect="auto",
        origin="lower",
        extent=[0, diff.shape[1], run_a.times[0], run_a.times[n_common - 1]],
    )
    ax.axvline(run_a.n_grid, color="white", linewidth=0.8)
    ax.set_xlabel("grid index (spin up | spin down)")
    ax.set_ylabel("t")
    ax.set_title(
        f"|n_A - n_B|, {run_a.config['method']} vs {run_b.config['method']}"
    )
    fig.colorbar(image, ax=ax)
    fig.savefig(output, dpi=DPI)
    plt.close(fig)
    _write_sidecar(
        output,
        {
            "source_a": str(run_dir_a),
            "source_b": str(run_dir_b),
            "max_difference": float(diff.max()),
        },
    )
    return output
