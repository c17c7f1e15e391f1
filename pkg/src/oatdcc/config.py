"""Run configuration: defaults, flat key=value config files, validation."""

from dataclasses import asdict, dataclass, fields

METHODS = ("mctdhf", "oatdccd", "tdhf", "tdccd-fixed")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    """Complete description of one simulation run.

    Defaults reproduce the electron-atom collision setup: a 5-electron system
    assembled from a relaxed 4-electron ground state plus an incoming packet.
    """

    method: str = "oatdccd"
    half_width: float = 15.0
    n_grid: int = 64
    well_depth: float = 7.0
    well_width: float = 1.5
    coulomb_strength: float = 1.0
    coulomb_softening: float = 0.2
    coulomb_squared: bool = False
    n_particles: int = 5
    n_orbitals: int = 9
    dt: float = 0.005
    t_final: float = 30.0
    stride: int = 20
    eps_density_reg: float = 1e-8
    interaction_rank: int = 0          # 0 selects the spectral threshold rule
    relax_step: float = 0.01
    relax_tol: float = 1e-9
    packet_center: float = 10.0
    packet_momentum: float = 1.2
    packet_width: float = 1.25
    packet_spin: int = 1
    seed: int = 1
    output_dir: str = "run_output"


_BOOL_STRINGS = {"true": True, "1": True, "yes": True, "false": False, "0": False,
                 "no": False}


def _convert(name, kind, raw):
    if kind is bool:
        key = str(raw).strip().lower()
        if key not in _BOOL_STRINGS:
            raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
        return _BOOL_STRINGS[key]
    try:
        return kind(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: cannot parse {raw!r} as {kind.__name__}") from exc


def load_config(path):
    """Parse a flat key=value file ('#' comments, blank lines ignored)."""
    known = {f.name: f.type for f in fields(RunConfig)}
    types = {f.name: type(getattr(RunConfig(), f.name)) for f in fields(RunConfig)}
    values = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {text!r}")
            key, raw = (part.strip() for part in text.split("=", 1))
            if key not in known:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _convert(key, types[key], raw)
    return RunConfig(**values)


def apply_overrides(config, overrides):
    """New config with non-None override values applied."""
    values = asdict(config)
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in values:
            raise ConfigError(f"unknown configuration key {key!r}")
        values[key] = value
    return RunConfig(**values)


def validate(config):
    if config.method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {config.method!r}")
    if config.half_width <= 0:
        raise ConfigError("half_width must be positive")
    if config.n_grid < 4 or config.n_grid & (config.n_grid - 1):
        raise ConfigError("n_grid must be a power of two >= 4")
    if config.n_particles < 1:
        raise ConfigError("n_particles must be at least 1")
    if not config.n_particles < config.n_orbitals <= 2 * config.n_grid:
        if config.method == "tdhf" and config.n_particles == config.n_orbitals:
            pass
        else:
            raise ConfigError("need n_particles < n_orbitals <= 2 * n_grid")
    if config.method == "tdhf" and config.n_orbitals != config.n_particles:
        raise ConfigError("tdhf requires n_orbitals == n_particles")
    if config.dt <= 0 or config.t_final <= 0:
        raise ConfigError("dt and t_final must be positive")
    if config.stride < 1:
        raise ConfigError("stride must be at least 1")
    if config.interaction_rank < 0 or config.interaction_rank > config.n_grid:
        raise ConfigError("interaction_rank must lie in [0, n_grid]")
    if config.packet_width <= 0:
        raise ConfigError("packet_width must be positive")
    if config.packet_spin not in (1, -1):
        raise ConfigError("packet_spin must be +1 or -1")
    if config.eps_density_reg <= 0:
        raise ConfigError("eps_density_reg must be positive")
    return config


def config_dict(config):
    return asdict(config)
