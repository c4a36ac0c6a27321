"""Monte-Carlo estimators with error bars."""
from dataclasses import dataclass, field

import numpy as np


def mean_stderr(x):
    """Sample mean and ``std / sqrt(n)`` (0 for a single sample)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n < 2:
        return x.mean(axis=0), np.zeros_like(x.mean(axis=0))
    return x.mean(axis=0), x.std(axis=0, ddof=1) / np.sqrt(n)


class Accumulator:
    """Running sum, sum of squares and max; merging is associative."""

    def __init__(self):
        self.n, self.s, self.s2, self.mx = 0, 0.0, 0.0, -np.inf

    def add(self, x):
        x = np.asarray(x, dtype=float)
        self.n += 1
        self.s = self.s + x
        self.s2 = self.s2 + x * x
        self.mx = np.maximum(self.mx, x)

    def merge(self, other):
        out = Accumulator()
        out.n, out.s, out.s2 = self.n + other.n, self.s + other.s, self.s2 + other.s2
        out.mx = np.maximum(self.mx, other.mx)
        return out

    def result(self):
        mean = self.s / self.n
        var = np.maximum(self.s2 / self.n - mean ** 2, 0) * self.n / max(self.n - 1, 1)
        return mean, np.sqrt(var / self.n)


@dataclass
class EstimatorResult:
    """Point estimate with standard error and a pass/fail verdict.

    Passing requires ``|estimate - target| <= max(atol, k * stderr)``.
    """

    name: str
    estimate: float
    stderr: float
    n: int
    target: float
    k: float = 3.0
    atol: float = 0.0
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(abs(self.estimate - self.target) <= max(self.atol, self.k * self.stderr))

    def to_dict(self):
        return {"name": self.name, "estimate": _num(self.estimate), "stderr": _num(self.stderr),
                "n": self.n, "target": _num(self.target), "k": self.k, "atol": self.atol,
                "passed": self.passed, "extra": _jsonable(self.extra)}


@dataclass
class Check:
    """Deterministic check: ``value <= bound``."""

    name: str
    value: float
    bound: float
    extra: dict = field(default_factory=dict)

    @property
    def passed(self):
        return bool(np.isfinite(self.value) and self.value <= self.bound)

    def to_dict(self):
        return {"name": self.name, "value": _num(self.value), "bound": _num(self.bound),
                "passed": self.passed, "extra": _jsonable(self.extra)}


def _num(x):
    if isinstance(x, complex) or np.iscomplexobj(x):
        return {"re": float(np.real(x)), "im": float(np.imag(x))}
    return float(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _num(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    return obj
