"""Run outputs: energy table, density records, checkpoints, manifest.

Formats (all little-endian):
  energy.csv    t, Re E, Im E, norm_re, norm_im, f_t as decimal text with 17
                significant digits.
  density.bin   header: magic 'OATD', version u32, n_t u32, n_basis u32,
                n_grid u32; per snapshot: t as f64 then n_basis complex128
                density values n(x, s, t) in spin-block order.  n_t is patched
                when the file is closed, so aborted runs stay readable.
  *.oatc        checkpoint: magic 'OATC', version u32, method tag u32,
                n_grid u32, n_basis u32, N u32, L u32, half_width f64, dx f64,
                t f64, spins i8[L], then the state arrays as complex128:
                mctdhf: phi, coefficient vector (length prefixed u64);
                cc:     phi, phi_tilde, t2, l2.
"""

import json
import struct

import numpy as np

from .ccd import Amplitudes
from .determinants import DeterminantSpace
from .eom import CCState
from .fci import MctdhfState
from .orbitals import OrbitalPair

DENSITY_MAGIC = b"OATD"
CHECKPOINT_MAGIC = b"OATC"
FORMAT_VERSION = 1

_METHOD_TAGS = {"mctdhf": 0, "oatdccd": 1, "tdhf": 2, "tdccd-fixed": 3}
_TAG_METHODS = {v: k for k, v in _METHOD_TAGS.items()}


class RunIOError(RuntimeError):
    pass


def format_float(value):
    return f"{value:.17g}"


class EnergyWriter:
    columns = ("t", "re_energy", "im_energy", "norm_re", "norm_im", "f_t")

    def __init__(self, path):
        self.handle = open(path, "w", encoding="utf-8")
        self.handle.write(",".join(self.columns) + "\n")

    def write(self, record):
        row = (
            record.time,
            record.energy.real,
            record.energy.imag,
            record.norm.real if hasattr(record.norm, "real") else record.norm,
            record.norm.imag if hasattr(record.norm, "imag") else 0.0,
            record.imag_density_integral,
        )
        self.handle.write(",".join(format_float(v) for v in row) + "\n")

    def close(self):
        self.handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_energy_table(path):
    data = np.genfromtxt(path, delimiter=",", names=True)
    return data


class DensityWriter:
    def __init__(self, path, n_basis, n_grid):
        self.handle = open(path, "wb")
        self.n_basis = n_basis
        self.count = 0
        self.handle.write(DENSITY_MAGIC)
        self.handle.write(struct.pack("<IIII", FORMAT_VERSION, 0, n_basis, n_grid))

    def write(self, time, density):
        density = np.ascontiguousarray(density, dtype=np.complex128)
        if density.shape != (self.n_basis,):
            raise RunIOError(f"density snapshot has shape {density.shape}")
        self.handle.write(struct.pack("<d", float(time)))
        self.handle.write(density.astype("<c16").tobytes())
        self.count += 1

    def close(self):
        self.handle.seek(8)
        self.handle.write(struct.pack("<I", self.count))
        self.handle.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_density_file(path):
    """Returns (times (n_t,), densities (n_t, n_basis) complex, n_grid)."""
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != DENSITY_MAGIC:
            raise RunIOError(f"{path}: bad magic {magic!r}")
        version, n_t, n_basis, n_grid = struct.unpack("<IIII", handle.read(16))
        if version != FORMAT_VERSION:
            raise RunIOError(f"{path}: unsupported version {version}")
        times = np.empty(n_t)
        densities = np.empty((n_t, n_basis), dtype=complex)
        for k in range(n_t):
            (times[k],) = struct.unpack("<d", handle.read(8))
            densities[k] = np.frombuffer(handle.read(16 * n_basis), dtype="<c16")
    return times, densities, n_grid


def _write_array(handle, array):
    data = np.ascontiguousarray(array, dtype=np.complex128).astype("<c16")
    handle.write(struct.pack("<Q", data.size))
    handle.write(data.tobytes())


def _read_array(handle, shape=None):
    (size,) = struct.unpack("<Q", handle.read(8))
    flat = np.frombuffer(handle.read(16 * size), dtype="<c16").copy()
    return flat if shape is None else flat.reshape(shape)


def save_checkpoint(path, state, model, method):
    grid = model.grid
    if method not in _METHOD_TAGS:
        raise RunIOError(f"unknown method {method!r}")
    if isinstance(state, CCState):
        n = state.pair.n_occupied
        L = state.pair.n_orbitals
        spins = np.zeros(L, dtype=np.int8)
        time = state.time
    else:
        n = state.space.n_particles
        L = state.space.n_orbitals
        spins = np.asarray(
            state.space.spins if state.space.spins is not None else np.zeros(L),
            dtype=np.int8,
        )
        time = state.time
    with open(path, "wb") as handle:
        handle.write(CHECKPOINT_MAGIC)
        handle.write(
            struct.pack(
                "<IIIIII",
                FORMAT_VERSION,
                _METHOD_TAGS[method],
                grid.n_grid,
                grid.n_basis,
                n,
                L,
            )
        )
        handle.write(struct.pack("<ddd", grid.half_width, grid.dx, float(time)))
        handle.write(spins.tobytes())
        sz_sentinel = 0x7FFFFFFF
        if isinstance(state, CCState) or state.space.total_sz is None:
            handle.write(struct.pack("<i", sz_sentinel))
        else:
            handle.write(struct.pack("<i", state.space.total_sz))
        if isinstance(state, CCState):
            _write_array(handle, state.pair.phi)
            _write_array(handle, state.pair.phi_tilde)
            _write_array(handle, state.amps.t2)
            _write_array(handle, state.amps.l2)
        else:
            _write_array(handle, state.phi)
            _write_array(handle, state.coeffs)


def load_checkpoint(path, model):
    grid = model.grid
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise RunIOError(f"{path}: bad magic {magic!r}")
        version, tag, n_grid, n_basis, n, L = struct.unpack("<IIIIII", handle.read(24))
        if version != FORMAT_VERSION:
            raise RunIOError(f"{path}: unsupported version {version}")
        half_width, dx, time = struct.unpack("<ddd", handle.read(24))
        if n_grid != grid.n_grid or abs(half_width - grid.half_width) > 1e-12:
            raise RunIOError(f"{path}: grid mismatch with current model")
        spins = np.frombuffer(handle.read(L), dtype=np.int8).astype(int)
        (sz_raw,) = struct.unpack("<i", handle.read(4))
        method = _TAG_METHODS[tag]
        if method in ("oatdccd", "tdccd-fixed"):
            phi = _read_array(handle, (n_basis, L))
            phi_tilde = _read_array(handle, (L, n_basis))
            nv = L - n
            t2 = _read_array(handle, (n, n, nv, nv))
            l2 = _read_array(handle, (nv, nv, n, n))
            pair = OrbitalPair(phi, phi_tilde, n, grid.dx)
            return CCState(pair, Amplitudes(t2, l2), time), method
        phi = _read_array(handle, (n_basis, L))
        coeffs = _read_array(handle)
        sz = None if sz_raw == 0x7FFFFFFF else sz_raw
        space_spins = spins if np.any(spins) else None
        space = DeterminantSpace(n, L, space_spins, total_sz=sz)
        if coeffs.shape[0] != space.dim:
            raise RunIOError(f"{path}: coefficient length does not match space")
        return MctdhfState(space, phi, coeffs, time), method


def write_manifest(path, config_values, extra=None):
    payload = {"config": config_values, "format_version": FORMAT_VERSION}
    if extra:
        payload.update(extra)
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, indent=2, sort_keys=True)
        handle.write("\n")


def read_manifest(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)
