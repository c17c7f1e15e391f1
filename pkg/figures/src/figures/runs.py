"""Readers for the run-directory formats.

Implemented from the documented interface only: manifest.json (resolved
configuration), energy.csv (t, Re E, Im E, norm_re, norm_im, f_t with 17
significant digits), and density.bin (magic 'OATD', version u32, n_t u32,
n_basis u32, n_grid u32; per snapshot a little-endian f64 time followed by
n_basis complex128 values in spin-block order).
"""

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DENSITY_MAGIC = b"OATD"


class RunFormatError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunArtifacts:
    manifest: dict
    energy: np.ndarray            # structured array over the csv columns
    times: np.ndarray             # (n_t,)
    densities: np.ndarray         # (n_t, n_basis) complex
    n_grid: int

    @property
    def config(self):
        return self.manifest["config"]

    @property
    def positions(self):
        half_width = self.config["half_width"]
        dx = 2.0 * half_width / self.n_grid
        return -half_width + dx * np.arange(self.n_grid)

    @property
    def dx(self):
        return 2.0 * self.config["half_width"] / self.n_grid

    def spatial_density(self, index):
        """Total (spin-summed) real density at one snapshot."""
        snap = self.densities[index].real
        return snap[: self.n_grid] + snap[self.n_grid :]


def read_density(path):
    with open(path, "rb") as handle:
        if handle.read(4) != DENSITY_MAGIC:
            raise RunFormatError(f"{path}: not a density file")
        version, n_t, n_basis, n_grid = struct.unpack("<IIII", handle.read(16))
        if version != 1:
            raise RunFormatError(f"{path}: unsupported version {version}")
        times = np.empty(n_t)
        densities = np.empty((n_t, n_basis), dtype=complex)
        for k in range(n_t):
            (times[k],) = struct.unpack("<d", handle.read(8))
            densities[k] = np.frombuffer(handle.read(16 * n_basis), dtype="<c16")
    if n_basis != 2 * n_grid:
        raise RunFormatError(f"{path}: n_basis {n_basis} does not match n_grid {n_grid}")
    return times, densities, n_grid


def load_run(run_dir):
    run_dir = Path(run_dir)
    with open(run_dir / "manifest.json", "r", encoding="utf-8") as handle:
        manifest = json.load(handle)
    energy = np.genfromtxt(run_dir / "energy.csv", delimiter=",", names=True)
    times, densities, n_grid = read_density(run_dir / "density.bin")
    if densities.shape[0] != energy.shape[0]:
        raise RunFormatError(f"{run_dir}: energy table and density records disagree")
    if np.any(np.diff(times) <= 0):
        raise RunFormatError(f"{run_dir}: snapshot times are not strictly increasing")
    return RunArtifacts(manifest, energy, times, densities, n_grid)
