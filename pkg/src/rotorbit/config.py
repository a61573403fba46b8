"""Experiment configuration: one JSON file, schema version 1."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import jsonschema

from .errors import ConfigError
from .group import GroupWord

TASKS = (
    "surface-check",
    "filling-check",
    "equivariance-check",
    "mz-estimate",
    "lebesgue-vector",
    "deviation",
    "realize",
    "periodic-point",
    "torus-oracle",
)

_WORD = {"type": "string", "pattern": r"^\s*([aAbB][1-9][0-9]*\s*)*$"}
_RATIONAL = {"type": ["string", "integer"], "pattern": r"^-?[0-9]+(/[1-9][0-9]*)?$"}
_PROFILE = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["zero", "constant", "cosine", "plateau"]},
        "amplitude": {"type": "number"},
        "plateau": {"type": "number", "minimum": 0, "exclusiveMaximum": 0.5},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

SCHEMA = {
    "type": "object",
    "properties": {
        "schema": {"const": 1},
        "genus": {"type": "integer", "minimum": 2, "maximum": 8},
        "seed": {"type": "integer", "minimum": 0},
        "output": {"type": "string"},
        "tasks": {"type": "array", "items": {"enum": list(TASKS)}, "uniqueItems": True},
        "curves": {"type": "array", "items": _WORD},
        "shears": {
            "type": "array",
            "items": {
                "type": "object",
                "properties": {
                    "curve": _WORD,
                    "width": {"type": "number", "exclusiveMinimum": 0},
                    "strength": {"type": "number"},
                    "side_offset": {"type": "number", "minimum": 0},
                    "order": {"type": "integer"},
                    "both_orientations": {"type": "boolean"},
                },
                "required": ["curve", "width"],
                "additionalProperties": False,
            },
        },
        "rotation": {
            "type": "object",
            "properties": {
                "n_iters": {"type": "integer", "minimum": 1},
                "n_samples": {"type": "integer", "minimum": 1},
                "n_directions": {"type": "integer", "minimum": 0},
                "basepoint": {"enum": ["origin"]},
            },
            "additionalProperties": False,
        },
        "equivariance": {
            "type": "object",
            "properties": {
                "pairs": {"type": "integer", "minimum": 1},
                "max_word_length": {"type": "integer", "minimum": 1},
                "jacobian_points": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "deviation": {
            "type": "object",
            "properties": {
                "n_iters": {"type": "integer", "minimum": 2},
                "n_samples": {"type": "integer", "minimum": 1},
                "n_random": {"type": "integer", "minimum": 0},
                "linear": {"type": "integer", "minimum": 0},
                "union_from": {"type": ["integer", "null"], "minimum": 1},
            },
            "additionalProperties": False,
        },
        "realize": {
            "type": "object",
            "properties": {
                "targets": {"type": "array", "items": {"type": "array", "items": _RATIONAL}},
                "verify": {"type": "boolean"},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "grid": {"type": "integer", "minimum": 1},
                "irrational_target": {"type": "array", "items": {"type": "number"}},
                "steps": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "periodic_point": {
            "type": "object",
            "properties": {
                "words": {"type": "array", "items": _WORD},
                "N_max": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "grid": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "torus": {
            "type": "object",
            "properties": {
                "phi": _PROFILE,
                "psi": _PROFILE,
                "n_iters": {"type": "integer", "minimum": 1},
                "n_samples": {"type": "integer", "minimum": 1},
                "truth_grid": {"type": "integer", "minimum": 2},
                "tolerance": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
    },
    "required": ["schema", "genus", "tasks"],
    "additionalProperties": False,
}

DEFAULTS = {
    "seed": 0,
    "output": "rotorbit-out",
    "curves": [],
    "shears": [],
    "rotation": {"n_iters": 1024, "n_samples": 1000, "n_directions": 512, "basepoint": "origin"},
    "equivariance": {"pairs": 1000, "max_word_length": 3, "jacobian_points": 1000},
    "deviation": {"n_iters": 10000, "n_samples": 500, "n_random": 8, "linear": 64, "union_from": -1},
    "realize": {"targets": [], "verify": False, "tol": 1e-6, "grid": 2000, "irrational_target": [], "steps": 100000},
    "periodic_point": {"words": [], "N_max": 1, "tol": 1e-6, "grid": 2000},
    "torus": {
        "phi": {"kind": "cosine", "amplitude": 1.0},
        "psi": {"kind": "zero"},
        "n_iters": 10000,
        "n_samples": 10000,
        "truth_grid": 4001,
        "tolerance": 0.05,
    },
}


@dataclass
class ExperimentConfig:
    raw: dict
    genus: int
    tasks: list
    seed: int
    output: str
    curves: list = field(default_factory=list)
    shears: list = field(default_factory=list)
    sections: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.sections[name]

    @property
    def hash(self) -> str:
        text = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


def _pointer(path) -> str:
    return "/" + "/".join(str(p).replace("~", "~0").replace("/", "~1") for p in path)


def validate(raw: dict) -> ExperimentConfig:
    v = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(v.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        ptr = _pointer(e.absolute_path)
        raise ConfigError(e.message, ptr)
    genus = raw["genus"]
    for key in ("curves",):
        for i, w in enumerate(raw.get(key, [])):
            _check_word(w, genus, f"/{key}/{i}")
    for i, s in enumerate(raw.get("shears", [])):
        _check_word(s["curve"], genus, f"/shears/{i}/curve")
    for i, w in enumerate(raw.get("periodic_point", {}).get("words", [])):
        _check_word(w, genus, f"/periodic_point/words/{i}")
    for i, t in enumerate(raw.get("realize", {}).get("targets", [])):
        if len(t) != 2 * genus:
            ptr = f"/realize/targets/{i}"
            raise ConfigError(f"target needs {2 * genus} coordinates", ptr)
    irr = raw.get("realize", {}).get("irrational_target", [])
    if irr and len(irr) != 2 * genus:
        raise ConfigError("wrong length", "/realize/irrational_target")
    sections = {}
    for name, default in DEFAULTS.items():
        if isinstance(default, dict):
            merged = copy.deepcopy(default)
            merged.update(raw.get(name, {}))
            sections[name] = merged
    shears = sorted(enumerate(raw.get("shears", [])), key=lambda p: (p[1].get("order", p[0]), p[0]))
    return ExperimentConfig(
        raw=raw,
        genus=genus,
        tasks=list(raw["tasks"]),
        seed=raw.get("seed", DEFAULTS["seed"]),
        output=raw.get("output", DEFAULTS["output"]),
        curves=list(raw.get("curves", [])),
        shears=[s for _, s in shears],
        sections=sections,
    )


def _check_word(text: str, genus: int, ptr: str) -> None:
    w = GroupWord.parse(text)
    if w.max_index() > 2 * genus:
        raise ConfigError(f"word {text!r} uses a generator beyond genus {genus}", ptr)


def load(path, seed: int | None = None, output: str | None = None, tasks=None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path} is not valid JSON ({e.msg} at line {e.lineno})", "") from e
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", "")
    raw = copy.deepcopy(raw)
    if seed is not None:
        raw["seed"] = seed
    if output is not None:
        raw["output"] = output
    if tasks is not None:
        raw["tasks"] = list(tasks)
    return validate(raw)


def parse_rational(x) -> Fraction:
    return Fraction(str(x))
