"""Experiment configuration: a versioned JSON document checked against a schema.

A minimal configuration::

    {
      "version": 1,
      "system": {"dimension": 2, "basis": "standard_pauli",
                 "drift": [0, 0, 3.14159], "controls": [[1, 0, 0]]},
      "initial_state": [0, 0, 1],
      "controls": [{"kind": "pure_tone", "frequency": 1.1}],
      "sampling": {"dt": 0.0625, "t_end": 5.0},
      "noise": {"sigma": 0.01, "seed": 0},
      "algorithm": {"name": "bidmd"}
    }

Hamiltonians are coefficient vectors in the named basis:
``H = sum_j c_j sigma_j``.
"""

import copy
import json
from dataclasses import dataclass, field

import jsonschema
import numpy as np

from .bloch import build_basis, vectorize_hamiltonian
from .controls import control_from_dict
from .exceptions import ConfigError

__all__ = ["SCHEMA", "SCHEMA_VERSION", "ExperimentConfig", "load_config", "parse_config"]

SCHEMA_VERSION = 1

ALGORITHMS = ("dmd", "dmdc", "bidmd", "floquet", "aht")

_NUMBER_LIST = {"type": "array", "items": {"type": "number"}}
_RANK = {"type": ["integer", "null"], "minimum": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "system"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "system": {
            "type": "object",
            "required": ["dimension", "drift"],
            "additionalProperties": False,
            "properties": {
                "dimension": {"type": "integer", "minimum": 2},
                "basis": {"enum": ["standard_pauli", "orthonormal"]},
                "drift": _NUMBER_LIST,
                "controls": {"type": "array", "items": _NUMBER_LIST},
            },
        },
        "initial_state": _NUMBER_LIST,
        "controls": {
            "type": "array",
            "items": {"type": "object", "required": ["kind"], "properties": {"kind": {"type": "string"}}},
        },
        "sampling": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dt": {"type": "number", "exclusiveMinimum": 0},
                "t_end": {"type": "number", "exclusiveMinimum": 0},
                "period": {"type": "number", "exclusiveMinimum": 0},
                "samples_per_period": {"type": "integer", "minimum": 1},
                "n_periods": {"type": "integer", "minimum": 1},
                "substeps": {"type": "integer", "minimum": 1},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sigma": {"type": "number", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "algorithm": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {
                "name": {"enum": list(ALGORITHMS)},
                "rank": _RANK,
                "rank_hat": _RANK,
                "degree": {"type": "integer", "minimum": 1},
                "n_harmonics": {"type": "integer", "minimum": 1},
                "base_frequency": {"type": "number", "exclusiveMinimum": 0},
                "period": {"type": "number", "exclusiveMinimum": 0},
                "samples_per_period": {"type": "integer", "minimum": 1},
            },
        },
        "predict": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_steps": {"type": "integer", "minimum": 0},
                "initial_state": _NUMBER_LIST,
                "controls": {"type": "array", "items": {"type": "object"}},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dir": {"type": "string"},
                "format": {"enum": ["csv", "json"]},
            },
        },
    },
}

_DEFAULTS = {
    "system": {"basis": "standard_pauli", "controls": []},
    "controls": [],
    "sampling": {"dt": 0.0625, "t_end": 1.0},
    "noise": {"sigma": 0.0, "seed": 0},
    "algorithm": {"name": "bidmd", "rank": None, "rank_hat": None},
    "output": {"dir": ".", "format": "csv"},
}


def _location(error):
    path = ".".join(str(p) for p in error.absolute_path)
    return path or "<root>"


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``raw`` is the document with defaults filled in."""

    raw: dict = field(compare=True)

    @property
    def system(self):
        return self.raw["system"]

    @property
    def sampling(self):
        return self.raw["sampling"]

    @property
    def noise(self):
        return self.raw["noise"]

    @property
    def algorithm(self):
        return self.raw["algorithm"]

    @property
    def output(self):
        return self.raw["output"]

    def to_dict(self):
        return copy.deepcopy(self.raw)

    def basis(self):
        return build_basis(self.system["dimension"], self.system["basis"])

    def generators(self):
        """Drift generator and one generator per control Hamiltonian."""
        basis = self.basis()
        L0 = vectorize_hamiltonian(basis.expand(np.asarray(self.system["drift"], dtype=float)), basis)
        ctrl = [
            vectorize_hamiltonian(basis.expand(np.asarray(c, dtype=float)), basis).L
            for c in self.system["controls"]
        ]
        return L0, ctrl

    def control_signals(self, key="controls"):
        specs = self.raw.get(key, []) if key == "controls" else self.raw.get("predict", {}).get("controls")
        if specs is None:
            specs = self.raw["controls"]
        return [control_from_dict(s) for s in specs]

    def initial_state(self):
        if "initial_state" in self.raw:
            return np.asarray(self.raw["initial_state"], dtype=float)
        x0 = np.zeros(self.system["dimension"] ** 2 - 1)
        x0[-1] = 1.0
        return x0

    def with_overrides(self, seed=None, noise=None, rank=None, rank_hat=None, out=None, fmt=None):
        raw = self.to_dict()
        if seed is not None:
            raw["noise"]["seed"] = int(seed)
        if noise is not None:
            raw["noise"]["sigma"] = float(noise)
        if rank is not None:
            raw["algorithm"]["rank"] = int(rank)
        if rank_hat is not None:
            raw["algorithm"]["rank_hat"] = int(rank_hat)
        if out is not None:
            raw["output"]["dir"] = str(out)
        if fmt is not None:
            raw["output"]["format"] = fmt
        return parse_config(raw)


def _fill_defaults(doc):
    doc = copy.deepcopy(doc)
    sampling = doc.get("sampling", {})
    if "period" in sampling or "dt" in sampling:
        # an explicit grid is never mixed with the default one
        doc["sampling"] = dict(sampling)
        if "dt" in sampling and "period" not in sampling and "t_end" not in sampling:
            doc["sampling"]["t_end"] = _DEFAULTS["sampling"]["t_end"]
    for key, default in _DEFAULTS.items():
        if key == "sampling" and ("period" in sampling or "dt" in sampling):
            continue
        if isinstance(default, dict):
            merged = copy.deepcopy(default)
            merged.update(doc.get(key, {}))
            doc[key] = merged
        else:
            doc.setdefault(key, copy.deepcopy(default))
    return doc


def _check_consistency(doc):
    sysd = doc["system"]
    N = sysd["dimension"]
    n = N * N - 1
    if sysd["basis"] == "standard_pauli" and N != 2:
        raise ConfigError("standard_pauli basis requires dimension 2", "system.basis")
    if len(sysd["drift"]) != n:
        raise ConfigError(f"drift needs {n} coefficients for dimension {N}, got {len(sysd['drift'])}",
                          "system.drift")
    for i, c in enumerate(sysd["controls"]):
        if len(c) != n:
            raise ConfigError(f"control Hamiltonian needs {n} coefficients, got {len(c)}",
                              f"system.controls.{i}")
    if "initial_state" in doc and len(doc["initial_state"]) != n:
        raise ConfigError(f"initial state needs {n} entries, got {len(doc['initial_state'])}",
                          "initial_state")
    if len(doc["controls"]) != len(sysd["controls"]):
        raise ConfigError(
            f"{len(sysd['controls'])} control Hamiltonians but {len(doc['controls'])} control signals",
            "controls",
        )
    for i, spec in enumerate(doc["controls"]):
        try:
            control_from_dict(spec)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), f"controls.{i}") from None
    s = doc["sampling"]
    if "period" in s and "samples_per_period" not in s:
        raise ConfigError("a sampling period needs samples_per_period", "sampling")
    if "period" in s and "samples_per_period" in s:
        if "dt" in s and abs(s["dt"] * s["samples_per_period"] - s["period"]) > 1e-12 * s["period"]:
            # an explicit dt must be commensurate with the stroboscopic grid
            ratio = s["period"] / s["samples_per_period"] / s["dt"]
            if abs(ratio - round(ratio)) > 1e-9 * ratio:
                raise ConfigError("dt does not divide period / samples_per_period", "sampling.dt")


def parse_config(doc):
    """Validate a config mapping and return an :class:`ExperimentConfig`."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise ConfigError(err.message, _location(err))
    full = _fill_defaults(doc)
    _check_consistency(full)
    return ExperimentConfig(full)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", str(path)) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(exc.msg, f"{path}: line {exc.lineno} column {exc.colno}") from None
    return parse_config(doc)
