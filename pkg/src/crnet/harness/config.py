"""Experiment configuration: a flat JSON document validated on load."""

import json
from dataclasses import asdict, dataclass, field, fields

KINDS = ("probe", "construct", "separation", "flow", "symmetry", "density")

MAX_D = 4
MAX_WIDTH = 2048
MAX_SAMPLES = 10 ** 6


class ConfigError(ValueError):
    """Invalid or unreadable configuration."""


DEFAULT_TOLERANCES = {
    "activation": 1e-12,
    "gradient_rel": 1e-5,
    "smatrix": 1e-12,
    "growth": 1e-8,
    "unit_norm": 1e-8,
    "tangency": 1e-10,
    "descent": 1e-10,
    "exact_map": 1e-12,
    "phi_map": 1e-10,
    "density": 0.02,
    "ks": 0.02,
    "g0": 1e-6,
    "real_after": 1e-5,
    "separation_factor": 100.0,
}


@dataclass
class ExperimentConfig:
    """Settings shared by every experiment kind.

    ``widths`` are hidden widths (flow, census) and ``budgets`` real
    parameter counts (separation). ``params`` carries kind-specific extras.
    """

    kind: str
    d: int = 2
    N: int = 8
    C2: float = 1.0
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    widths: list = field(default_factory=list)
    budgets: list = field(default_factory=list)
    learning_rate: float = 0.05
    steps: int = 2000
    samples: int = 16384
    eval_samples: int = 100000
    tolerances: dict = field(default_factory=dict)
    out: str = "results"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if not isinstance(self.d, int) or not 1 <= self.d <= MAX_D:
            raise ConfigError(f"d must be an integer in [1, {MAX_D}]")
        if not isinstance(self.N, int) or self.N < 0:
            raise ConfigError("N must be a nonnegative integer")
        if not self.C2 > 0:
            raise ConfigError("C2 must be positive")
        if not self.seeds or not all(isinstance(s, int) and s >= 0 for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of nonnegative integers")
        if not all(isinstance(w, int) and 1 <= w <= MAX_WIDTH for w in self.widths):
            raise ConfigError(f"widths must be integers in [1, {MAX_WIDTH}]")
        if not all(isinstance(b, int) and b > 0 for b in self.budgets):
            raise ConfigError("budgets must be positive integers")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")
        if not isinstance(self.steps, int) or self.steps < 0:
            raise ConfigError("steps must be a nonnegative integer")
        for name in ("samples", "eval_samples"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 1 <= v <= MAX_SAMPLES:
                raise ConfigError(f"{name} must be an integer in [1, {MAX_SAMPLES}]")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerances: {sorted(unknown)}")
        if not isinstance(self.params, dict):
            raise ConfigError("params must be an object")

    def tol(self, name):
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError("configuration must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        if "kind" not in doc:
            raise ConfigError("configuration needs a 'kind'")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(doc)


def load_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return ExperimentConfig.from_json(text)


def default_config(kind):
    """Defaults per kind, sized for the desk-scale acceptance runs."""
    base = {"kind": kind}
    if kind == "flow":
        base.update(widths=[8, 8], samples=16, steps=200,
                    params={"h": 0.01, "eta": 1.0})
    elif kind == "separation":
        base.update(N=8, budgets=[97, 193, 409], seeds=[0, 1, 2, 3, 4],
                    samples=16384, eval_samples=100000, steps=2000, learning_rate=0.05,
                    params={"out_scale": 0.01})
    elif kind == "symmetry":
        base.update(widths=[1, 2, 3], seeds=list(range(10)),
                    params={"rhos": [[0.3, 0.0], [-0.7, 0.0], [0.3, 0.5], [-0.4, 0.3],
                                     [0.5, -0.6], [0.0, 0.25]],
                            "distinct": 24})
    elif kind == "density":
        base.update(N=8, samples=10 ** 6, eval_samples=100000,
                    params={"n_values": [2, 4, 6]})
    elif kind == "construct":
        base.update(N=8, params={"deltas_1d": [0.1, 0.05, 0.02], "delta_radial": 0.2})
    return ExperimentConfig(**base)
