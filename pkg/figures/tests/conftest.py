"""Fixtures fabricating run directories through the simulation package's
external interfaces (its CLI and checkpoint format)."""

import subprocess
import sys
from pathlib import Path

import pytest

BASE_CONFIG = """
method = mctdhf
half_width = 8.0
n_grid = 16
n_particles = 2
n_orbitals = 4
dt = 0.01
t_final = 0.3
stride = 5
eps_density_reg = 1e-5
packet_center = 3.0
packet_momentum = 0.8
packet_width = 1.0
relax_step = 0.02
relax_tol = 1e-8
seed = 5
"""


def run_cli(config_text, out_dir):
    config_path = Path(out_dir).parent / (Path(out_dir).name + ".conf")
    config_path.write_text(config_text + f"output_dir = {out_dir}\n")
    subprocess.run(
        [sys.executable, "-m", "oatdcc", "--config", str(config_path)],
        check=True,
        capture_output=True,
    )
    return Path(out_dir)


@pytest.fixture(scope="session")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "small"
    return run_cli(BASE_CONFIG, out)


FREE_PACKET_CONFIG = """
method = mctdhf
half_width = 20.0
n_grid = 64
well_depth = 0.0
coulomb_strength = 0.0
n_particles = 1
n_orbitals = 2
dt = 0.01
t_final = 2.0
stride = 20
packet_center = -8.0
packet_momentum = 1.1
packet_width = 1.5
seed = 3
"""


@pytest.fixture(scope="session")
def free_packet_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs") / "free"
    return run_cli(FREE_PACKET_CONFIG, out)


@pytest.fixture(scope="session")
def equivalence_pair(tmp_path_factory):
    """Two runs of the same two-particle state, one per method.

    The shared initial condition is prepared once (relaxed interacting ground
    state, then a momentum kick) and handed to each run directory through the
    documented checkpoint format; the runs themselves go through the CLI.
    """
    base = tmp_path_factory.mktemp("pair")
    script = f"""
import sys
from oatdcc.cli import model_from_config, run
from oatdcc.config import RunConfig
from oatdcc.prepare import boost, brueckner_rotate, extract_cc_initial, ground_state_mctdhf
from oatdcc.runio import save_checkpoint

config = RunConfig(
    method="mctdhf", half_width=15.0, n_grid=32, well_depth=2.0,
    n_particles=2, n_orbitals=4, dt=0.005, t_final=0.5, stride=10,
    relax_step=0.01, relax_tol=1e-10, seed=11, output_dir=r"{base}/mctdhf",
)
model = model_from_config(config)
ground, _ = ground_state_mctdhf(model, 2, 4, seed=11, ds=0.01, tol=1e-10)
kicked = boost(model, ground, 0.5)
cc, _ = extract_cc_initial(model, brueckner_rotate(kicked, model.grid.dx))

import pathlib
for method, state in (("mctdhf", kicked), ("oatdccd", cc)):
    out = pathlib.Path(r"{base}") / method
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / "prepared.oatc", state, model, method)
    cfg = RunConfig(**{{**config.__dict__, "method": method, "output_dir": str(out)}})
    status, _ = run(cfg, log=lambda *a, **k: None)
    assert status == 0
"""
    subprocess.run([sys.executable, "-c", script], check=True, capture_output=True)
    return base / "mctdhf", base / "oatdccd"
