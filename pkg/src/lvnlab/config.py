"""Experiment configs: one dataclass per subcommand, loaded from TOML.

Every key is checked against the dataclass fields before anything runs;
unknown keys and ill-typed values raise :class:`ConfigError`.
"""
from __future__ import annotations

import math
import sys
from dataclasses import MISSING, asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .exponents import ExponentError, ExponentTriple
from .lattice import BipartiteField, GridSpec, radius2, sample

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    pass


def _number(name, value, *, positive=False, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        value = int(value)
    else:
        value = float(value)
        if not math.isfinite(value):
            raise ConfigError(f"{name}: must be finite")
    if positive and not value > 0:
        raise ConfigError(f"{name}: must be positive, got {value}")
    return value


def _exponent(name, value):
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return "inf"
    value = _number(name, value)
    if value < 1:
        raise ConfigError(f"{name}: Lebesgue exponent must be >= 1, got {value}")
    return value


def _triple(name, value) -> list[str]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError(f"{name}: expected three reciprocals [1/q, 1/r1, 1/r2]")
    try:
        ExponentTriple.parse([str(v) for v in value])
    except (ExponentError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"{name}: {exc}") from None
    return [str(v) for v in value]


def _float_list(name, value, *, positive=False):
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(f"{name}: expected a non-empty list of numbers")
    return [_number(f"{name}[{k}]", v, positive=positive) for k, v in enumerate(value)]


def _from_mapping(cls, data, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a table, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")
    missing = [f.name for f in fields(cls)
               if f.name not in data and f.default is MISSING and f.default_factory is MISSING]
    if missing:
        raise ConfigError(f"{where}: missing key(s) {', '.join(missing)}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


PROFILES = ("gaussian", "product_gaussian", "plane_modulated", "random_smooth")


@dataclass
class ProfileConfig:
    profile: str = "gaussian"
    width: float = 1.0
    amplitude: float = 1.0
    xi0: float = 0.0
    cutoff: float = 2.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"initial.profile: expected one of {', '.join(PROFILES)}, got {self.profile!r}")
        self.width = _number("initial.width", self.width, positive=True)
        self.amplitude = _number("initial.amplitude", self.amplitude)
        self.xi0 = _number("initial.xi0", self.xi0)
        self.cutoff = _number("initial.cutoff", self.cutoff, positive=True)


def _phase(coords, xi0):
    if isinstance(coords, tuple):
        return xi0 * sum(coords)
    return xi0 * coords


def build_initial(grid: GridSpec, prof: ProfileConfig, seed: int = 0) -> BipartiteField:
    """Sample a named initial profile on ``grid``."""
    w, a, xi0 = prof.width, prof.amplitude, prof.xi0
    envelope = lambda x, y: np.exp(-(radius2(x) + radius2(y)) / (2 * w * w))  # noqa: E731
    if prof.profile == "gaussian":
        return sample(grid, lambda x, y: a * envelope(x, y))
    if prof.profile == "product_gaussian":
        # psi(x) conj(psi(y)) with psi a modulated Gaussian
        return sample(grid, lambda x, y: a * envelope(x, y) * np.exp(1j * (_phase(x, xi0) - _phase(y, xi0))))
    if prof.profile == "plane_modulated":
        return sample(grid, lambda x, y: a * envelope(x, y) * np.exp(1j * _phase(x, xi0)))
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    k2 = sum(grid.axis_view(grid.wavenumbers, ax) ** 2 for ax in range(2 * grid.n))
    smooth = np.fft.ifftn(np.fft.fftn(noise) * np.exp(-k2 / (2 * prof.cutoff**2)))
    vals = smooth * sample(grid, envelope).values
    peak = np.abs(vals).max()
    return BipartiteField(grid, a * vals / peak if peak > 0 else vals)


@dataclass
class GridConfig:
    n: int = 1
    points_per_axis: int = 64
    half_length: float = 16.0
    initial: ProfileConfig = field(default_factory=ProfileConfig)

    def __post_init__(self):
        self.n = _number("n", self.n, integer=True)
        self.points_per_axis = _number("points_per_axis", self.points_per_axis, integer=True)
        self.half_length = _number("half_length", self.half_length, positive=True)
        if isinstance(self.initial, dict):
            self.initial = _from_mapping(ProfileConfig, self.initial, "initial")
        try:
            self.grid
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.n, self.points_per_axis, self.half_length)


@dataclass
class PropagateConfig(GridConfig):
    times: list = field(default_factory=lambda: [0.0, 0.5, 1.0])
    kernel_oracle: bool = False

    def __post_init__(self):
        super().__post_init__()
        self.times = _float_list("times", self.times)
        if not isinstance(self.kernel_oracle, bool):
            raise ConfigError("kernel_oracle: expected true or false")


@dataclass
class DecayConfig(GridConfig):
    r1: object = "inf"
    r2: object = "inf"
    window: list = field(default_factory=lambda: [1.0, 16.0])
    samples: int = 9
    guard: float = 1e-10

    def __post_init__(self):
        super().__post_init__()
        self.r1 = _exponent("r1", self.r1)
        self.r2 = _exponent("r2", self.r2)
        self.window = _float_list("window", self.window, positive=True)
        if len(self.window) != 2 or self.window[0] >= self.window[1]:
            raise ConfigError("window: expected [t_min, t_max] with 0 < t_min < t_max")
        self.samples = _number("samples", self.samples, integer=True, positive=True)
        if self.samples < 4:
            raise ConfigError("samples: need at least 4 fit points")
        self.guard = _number("guard", self.guard, positive=True)


@dataclass
class RegionConfig:
    n: int = 1
    bound: int = 60
    alpha: object = None

    def __post_init__(self):
        self.n = _number("n", self.n, integer=True, positive=True)
        self.bound = _number("bound", self.bound, integer=True)
        if self.bound < 2:
            raise ConfigError(f"bound: denominator bound must be >= 2, got {self.bound}")
        if self.alpha is not None:
            if not isinstance(self.alpha, (str, int, float)) or isinstance(self.alpha, bool):
                raise ConfigError("alpha: expected a rational such as \"1/3\"")
            self.alpha = str(self.alpha)


@dataclass
class WhitneyConfig(GridConfig):
    window: list = field(default_factory=lambda: [0.0, 8.0])
    j_range: list = field(default_factory=lambda: [-5, 1])
    scan_js: list = field(default_factory=lambda: [-2, -1, 0, 1, 2, 3])
    nodes: int = 17
    inv_a: object = "0"
    inv_a_tilde: object = "0"
    inv_r2: object = "0"
    method: str = "kernel"

    def __post_init__(self):
        super().__post_init__()
        self.window = _float_list("window", self.window)
        if len(self.window) != 2 or self.window[0] >= self.window[1]:
            raise ConfigError("window: expected [t0, t1] with t0 < t1")
        if not isinstance(self.j_range, list) or len(self.j_range) != 2:
            raise ConfigError("j_range: expected [j_min, j_max]")
        self.j_range = [_number("j_range", j, integer=True) for j in self.j_range]
        if self.j_range[0] > self.j_range[1]:
            raise ConfigError("j_range: j_min exceeds j_max")
        if not isinstance(self.scan_js, list) or len(self.scan_js) < 2:
            raise ConfigError("scan_js: need at least two scales")
        self.scan_js = [_number("scan_js", j, integer=True) for j in self.scan_js]
        self.nodes = _number("nodes", self.nodes, integer=True, positive=True)
        if self.nodes < 2:
            raise ConfigError("nodes: need at least two quadrature nodes")
        for key in ("inv_a", "inv_a_tilde", "inv_r2"):
            setattr(self, key, str(getattr(self, key)))
        if self.method not in ("kernel", "spectral"):
            raise ConfigError(f"method: expected kernel or spectral, got {self.method!r}")


@dataclass
class StrichartzConfig(GridConfig):
    triple: list = field(default_factory=lambda: ["1/6", "1/3", "1/3"])
    horizon: float = 1.0
    steps: int = 64
    lambdas: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])

    def __post_init__(self):
        super().__post_init__()
        self.triple = _triple("triple", self.triple)
        self.horizon = _number("horizon", self.horizon, positive=True)
        self.steps = _number("steps", self.steps, integer=True, positive=True)
        self.lambdas = _float_list("lambdas", self.lambdas, positive=True)


@dataclass
class SolveConfig(GridConfig):
    alpha: float = 2.0
    sign: int = 1
    horizon: float = 10.0
    steps: int = 256
    triple: list = field(default_factory=lambda: ["1/6", "1/3", "1/3"])
    max_iter: int = 60
    tol: float = 1e-12
    constant: object = None
    save_every: int = 32
    cross_check: bool = True

    def __post_init__(self):
        super().__post_init__()
        self.alpha = _number("alpha", self.alpha, positive=True)
        self.sign = _number("sign", self.sign, integer=True)
        if self.sign not in (-1, 0, 1):
            raise ConfigError(f"sign: expected -1, 0 or 1, got {self.sign}")
        self.horizon = _number("horizon", self.horizon, positive=True)
        self.steps = _number("steps", self.steps, integer=True, positive=True)
        self.triple = _triple("triple", self.triple)
        self.max_iter = _number("max_iter", self.max_iter, integer=True, positive=True)
        self.tol = _number("tol", self.tol, positive=True)
        if self.constant is not None:
            self.constant = _number("constant", self.constant, positive=True)
        self.save_every = _number("save_every", self.save_every, integer=True, positive=True)
        if not isinstance(self.cross_check, bool):
            raise ConfigError("cross_check: expected true or false")


CONFIGS = {
    "propagate": PropagateConfig,
    "decay": DecayConfig,
    "region": RegionConfig,
    "whitney": WhitneyConfig,
    "strichartz": StrichartzConfig,
    "solve": SolveConfig,
}


def parse_override(item: str) -> tuple[str, object]:
    """``key=value`` with the value read as a TOML literal, else as a string."""
    key, sep, raw = item.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {item!r}: expected key=value")
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def load_config(command: str, path: str | Path | None = None, overrides=()):
    """Build the config dataclass for ``command`` from a TOML file plus overrides.

    Dotted override keys (``initial.width=2``) address nested tables.
    """
    if command not in CONFIGS:
        raise ConfigError(f"unknown subcommand {command!r}")
    data: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for item in overrides:
        key, value = parse_override(item)
        head, _, tail = key.partition(".")
        if tail:
            sub = data.setdefault(head, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"override {key}: {head} is not a table")
            sub[tail] = value
        else:
            data[key] = value
    return _from_mapping(CONFIGS[command], data, command)


def config_echo(cfg) -> dict:
    """Plain-data copy of a config, suitable for JSON and for re-loading."""
    return {k: v for k, v in asdict(cfg).items() if v is not None}
