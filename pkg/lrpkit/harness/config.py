"""
Experiment configuration files.

A config is a flat `key = value` file; keys carry dotted sections and values
are JSON (bare words fall back to strings):

    kind = scaling
    kernel.d = 1
    kernel.alpha = 0.3333333333333333
    grid.r = [8, 16, 32, 64]
    run.n_replicas = 20000
    options.mode = "vertex-set"
"""

import hashlib
import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from dotenv import dotenv_values

from ..engine import VERTEX_SET, WITH_CHEMICAL
from ..errors import ConfigError
from ..kernel import KernelSpec

logger = logging.getLogger(__name__)

KINDS = (
    "simulate", "betac", "edian", "scaling", "twopoint", "threepoint", "corrections",
    "kappa", "recurrence", "diagrams", "ode", "constants", "oracle",
)

# dotted key -> (attribute, accepted types)
FIELDS = {
    "kind": ("kind", (str,)),
    "kernel.d": ("d", (int,)),
    "kernel.alpha": ("alpha", (int, float)),
    "grid.beta": ("betas", (list, int, float)),
    "grid.r": ("radii", (list, int, float, str)),
    "grid.L": ("sides", (list, int)),
    "run.n_replicas": ("n_replicas", (int,)),
    "run.seed": ("seed", (int,)),
    "run.out": ("out", (str,)),
    "run.workers": ("workers", (int,)),
    "run.n_batches": ("n_batches", (int,)),
    "run.mode": ("mode", (str,)),
    "run.chunk_size": ("chunk_size", (int,)),
}
OPTION_PREFIX = "options."


def _decode(raw):
    if raw is None:
        return None
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw.strip()


def _radius(value):
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise TypeError(value)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    d: int = 1
    alpha: float = 1.0 / 3.0
    betas: tuple = ()
    radii: tuple = (math.inf,)
    sides: tuple = ()
    n_replicas: int = 10_000
    seed: int = 0
    out: str = "results"
    workers: int = None
    n_batches: int = 32
    mode: str = VERTEX_SET
    chunk_size: int = 1024
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {', '.join(KINDS)}",
                              field="kind")
        if self.d < 1:
            raise ConfigError("dimension must be positive", field="kernel.d")
        if not 0 < self.alpha < 2:
            raise ConfigError("alpha must lie in (0, 2)", field="kernel.alpha")
        if not self.radii:
            raise ConfigError("grid must not be empty", field="grid.r")
        if self.n_replicas < 1:
            raise ConfigError("replica count must be positive", field="run.n_replicas")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("worker count must be positive", field="run.workers")
        if self.mode not in (VERTEX_SET, WITH_CHEMICAL):
            raise ConfigError(f"unknown sampling mode {self.mode!r}", field="run.mode")

    @property
    def spec(self):
        return KernelSpec(self.d, self.alpha)

    def option(self, name, default=None):
        return self.options.get(name, default)

    def with_overrides(self, seed=None, workers=None, out=None):
        changes = {}
        if seed is not None:
            changes["seed"] = seed
        if workers is not None:
            changes["workers"] = workers
        if out is not None:
            changes["out"] = str(out)
        return replace(self, **changes) if changes else self

    def echo(self):
        """Canonical JSON-compatible view; the worker count is left out so it cannot change results"""
        data = asdict(self)
        data.pop("workers")
        data["radii"] = ["inf" if math.isinf(r) else r for r in self.radii]
        return data

    def config_hash(self):
        blob = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _line_numbers(path):
    lines = {}
    for number, text in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = text.strip()
        if not stripped or stripped.startswith("#") or "=" not in stripped:
            continue
        key = stripped.split("=", 1)[0].strip()
        if key.startswith("export "):
            key = key[len("export "):].strip()
        lines.setdefault(key, number)
    return lines


def _as_tuple(value, convert):
    items = value if isinstance(value, list) else [value]
    return tuple(convert(v) for v in items)


def parse_config(values, lines=None):
    """Build an ExperimentConfig from {dotted key: raw string}"""
    lines = lines or {}
    kwargs, options = {}, {}
    for key, raw in values.items():
        line = lines.get(key)
        value = _decode(raw)
        if key.startswith(OPTION_PREFIX):
            options[key[len(OPTION_PREFIX):]] = value
            continue
        if key not in FIELDS:
            raise ConfigError(f"unknown key {key!r}", field=key, line=line)
        attr, types = FIELDS[key]
        if isinstance(value, bool) or not isinstance(value, types):
            raise ConfigError(f"expected {' or '.join(t.__name__ for t in types)}, got {value!r}",
                              field=key, line=line)
        try:
            if attr == "radii":
                value = _as_tuple(value, _radius)
            elif attr == "betas":
                value = _as_tuple(value, float)
            elif attr == "sides":
                value = _as_tuple(value, int)
            elif attr == "alpha":
                value = float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"invalid grid entry in {value!r}", field=key, line=line) from None
        kwargs[attr] = value
    if "kind" not in kwargs:
        raise ConfigError("missing experiment kind", field="kind")
    try:
        return ExperimentConfig(options=options, **kwargs)
    except ConfigError as exc:
        if exc.line is None and exc.field in lines:
            raise ConfigError(str(exc).split(": ", 1)[-1], field=exc.field, line=lines[exc.field]) from None
        raise


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path, interpolate=False)
    config = parse_config(values, _line_numbers(path))
    logger.info("loaded %s config from %s (hash %s)", config.kind, path, config.config_hash())
    return config
