"""Experiment configuration and its JSON schema."""
import json
from dataclasses import asdict, dataclass, field

import jsonschema

from ..lattice import TorusGeometry

EXPERIMENTS = ["sample", "local-law", "diffusion", "deloc", "lk", "kloop",
               "flow-check", "ward-check", "decay"]

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "bandlab experiment config",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": EXPERIMENTS},
        "geometry": {
            "type": "object",
            "additionalProperties": False,
            "required": ["d", "W", "L"],
            "properties": {
                "d": {"type": "integer", "minimum": 1},
                "W": {"type": "integer", "minimum": 1},
                "L": {"type": "integer", "minimum": 1},
            },
        },
        "lambda": {"type": "number", "exclusiveMinimum": 0},
        "z": {
            "type": "object",
            "additionalProperties": False,
            "required": ["re", "im"],
            "properties": {"re": {"type": "number"}, "im": {"type": "number", "exclusiveMinimum": 0}},
        },
        "flow": {
            "type": "object",
            "additionalProperties": False,
            "required": ["E", "t"],
            "properties": {"E": {"type": "number"}, "t": {"type": "number", "minimum": 0, "exclusiveMaximum": 1}},
        },
        "kappa": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "samples": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "n": {"type": "integer", "minimum": 1, "maximum": 6},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "slack": {"type": "number", "exclusiveMinimum": 0},
                "k_sigma": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "minimum": 0},
                "deloc_c": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "output": {"type": "string"},
    },
}


@dataclass
class ExperimentConfig:
    """Resolved experiment configuration (defaults filled in)."""

    experiment: str = "ward-check"
    geometry: dict = field(default_factory=lambda: {"d": 3, "W": 3, "L": 3})
    lam: float = 1.0
    z: dict = field(default_factory=lambda: {"re": 0.2, "im": 0.05})
    flow: dict = field(default_factory=lambda: {"E": 0.3, "t": 0.5})
    kappa: float = 0.5
    samples: int = 20
    seed: int = 0
    n: int = 2
    dt: float = 5e-4
    tolerances: dict = field(default_factory=lambda: {"slack": 10.0, "k_sigma": 3.0, "atol": 0.0,
                                                      "deloc_c": 3.0})
    output: str = "bandlab-out"

    @property
    def geo(self):
        g = self.geometry
        return TorusGeometry(g["d"], g["W"], g["L"])

    @property
    def zc(self):
        return complex(self.z["re"], self.z["im"])

    def to_dict(self):
        out = asdict(self)
        out["lambda"] = out.pop("lam")
        return out


def validate(raw):
    """Raise ``jsonschema.ValidationError`` on a malformed config."""
    jsonschema.validate(raw, SCHEMA)


def from_dict(raw, experiment=None):
    validate(raw)
    cfg = ExperimentConfig()
    for key, val in raw.items():
        if key == "lambda":
            cfg.lam = float(val)
        elif key == "tolerances":
            cfg.tolerances = {**cfg.tolerances, **val}
        else:
            setattr(cfg, key, val)
    if experiment is not None:
        cfg.experiment = experiment
    return cfg


def load(path, experiment=None):
    with open(path) as fh:
        raw = json.load(fh)
    return from_dict(raw, experiment)
