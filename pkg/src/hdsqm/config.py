"""Experiment configuration: strict JSON schema, round trip and atomic output."""
import dataclasses
import json
import os
import tempfile
import typing
from dataclasses import dataclass, field
from typing import Optional


class ConfigError(ValueError):
    pass


@dataclass
class ModelConfig:
    kind: str = "pure"
    potential: str = "quartic"
    omega: float = 1.0
    lam: float = 1.0
    gamma: float = 0.1
    cubic_a: float = 1.0


@dataclass
class InitialConfig:
    # analytic seed at t = 0: D = A D1 + B D2 on the orbit of quasi-energy N
    N: float = 1.0
    A: float = 0.0
    B: float = 1.0
    state: Optional[list] = None


@dataclass
class IntegratorConfig:
    t_end: float = 60.0
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    guard: float = 1e12
    max_steps: int = 5_000_000
    samples_per_unit: int = 20


@dataclass
class GridConfig:
    nx: int = 512
    ny: int = 512
    L: Optional[float] = None


@dataclass
class SpectrumConfig:
    omega: float = 1.0
    gamma: float = 2.0
    j_max: int = 20
    k_max: int = 20
    convention: str = "literal"
    truncations: list = field(default_factory=lambda: [10, 20, 40])


@dataclass
class QuantizeConfig:
    curves: list = field(default_factory=lambda: [[1.0, 1.0], [1.0, 0.1]])
    N_values: list = field(default_factory=lambda: [0.25 * i for i in range(1, 21)])
    n_max: int = 3
    level: int = 1
    grid: bool = False


@dataclass
class OutputConfig:
    dir: str = "out"
    binary: bool = True


@dataclass
class ExperimentConfig:
    experiment: str = "default"
    seed: int = 0
    model: ModelConfig = field(default_factory=ModelConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    spectrum: SpectrumConfig = field(default_factory=SpectrumConfig)
    quantize: QuantizeConfig = field(default_factory=QuantizeConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self):
        return dataclasses.asdict(self)

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"



MODEL_KINDS = ("pure", "mixed", "twodot")
POTENTIALS = ("quartic", "cubic", "harmonic", "twodot_quadratic")
CONVENTIONS = ("literal", "oscillator")
SEED_MAX = 2**64 - 1


def _coerce(value, tp, path):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(value, args[0], path)
    if dataclasses.is_dataclass(tp):
        return _from_dict(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    if tp is list:
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list")
        return _plain_list(value, path)
    raise ConfigError(f"{path}: unsupported type {tp}")


def _plain_list(value, path):
    out = []
    for i, v in enumerate(value):
        if isinstance(v, list):
            out.append(_plain_list(v, f"{path}[{i}]"))
        elif isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{path}[{i}]: expected a number")
        else:
            out.append(v)
    return out


def _from_dict(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: _coerce(v, hints[k], f"{path}.{k}" if path else k) for k, v in data.items()}
    return cls(**kwargs)


def validate(cfg):
    m = cfg.model
    if m.kind not in MODEL_KINDS:
        raise ConfigError(f"model.kind must be one of {MODEL_KINDS}")
    if m.potential not in POTENTIALS:
        raise ConfigError(f"model.potential must be one of {POTENTIALS}")
    if m.omega < 0 or m.lam < 0 or m.gamma < 0:
        raise ConfigError("model.omega, model.lam and model.gamma must be non-negative")
    if not 0 <= cfg.seed <= SEED_MAX:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    it = cfg.integrator
    if not (0 < it.rel_tol <= 1e-2 and 0 < it.abs_tol <= 1e-2):
        raise ConfigError("integrator tolerances must lie in (0, 1e-2]")
    if it.t_end <= 0 or it.samples_per_unit < 1 or it.max_steps < 1 or it.guard <= 0:
        raise ConfigError("integrator.t_end, samples_per_unit, max_steps and guard must be positive")
    if cfg.initial.N <= 0:
        raise ConfigError("initial.N must be positive")
    if cfg.grid.nx < 8 or cfg.grid.ny < 8:
        raise ConfigError("grid needs at least 8 points per axis")
    if cfg.grid.L is not None and cfg.grid.L <= 0:
        raise ConfigError("grid.L must be positive")
    sp = cfg.spectrum
    if sp.convention not in CONVENTIONS:
        raise ConfigError(f"spectrum.convention must be one of {CONVENTIONS}")
    if sp.gamma <= 0 or sp.omega < 0 or sp.j_max < 0 or sp.k_max < 0:
        raise ConfigError("spectrum needs gamma > 0, omega >= 0 and non-negative truncations")
    if any(not isinstance(n, int) or n < 1 for n in sp.truncations):
        raise ConfigError("spectrum.truncations must be positive integers")
    q = cfg.quantize
    if any(not (isinstance(c, list) and len(c) == 2) for c in q.curves):
        raise ConfigError("quantize.curves must be [omega, lambda] pairs")
    if not q.N_values or any(n <= 0 for n in q.N_values):
        raise ConfigError("quantize.N_values must be positive")
    if q.n_max < 0:
        raise ConfigError("quantize.n_max must be non-negative")
    return cfg


def from_dict(data):
    return validate(_from_dict(ExperimentConfig, data, ""))


def loads(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from exc
    return from_dict(data)


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def schema():
    """Nested mapping of keys to type names and defaults, for documentation."""
    def walk(cls):
        hints = typing.get_type_hints(cls)
        out = {}
        for f in dataclasses.fields(cls):
            tp = hints[f.name]
            if dataclasses.is_dataclass(tp):
                out[f.name] = walk(tp)
            else:
                default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
                out[f.name] = {"type": getattr(tp, "__name__", str(tp)), "default": default}
        return out
    return walk(ExperimentConfig)


def atomic_write(path, data):
    """Write text or bytes to path via a temporary file in the same directory."""
    path = os.fspath(path)
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    binary = isinstance(data, (bytes, bytearray))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb" if binary else "w", newline=None if binary else "") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
