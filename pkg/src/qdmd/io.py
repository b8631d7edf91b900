"""Model and report serialization.

Models are stored as JSON. Floats are written with ``repr`` precision so a
load reproduces every double bit for bit; complex arrays are written as
``{"re": ..., "im": ...}`` objects in row-major nesting.
"""

import csv
import json

import numpy as np

from ._validation import frozen
from .dmd import BiDMDModel, DMDcModel, DMDModel
from .exceptions import ShapeError
from .floquet import FloquetModel

__all__ = [
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "save_quasi_energy_csv",
    "save_coefficient_csv",
    "load_coefficient_csv",
    "save_feature_manifest",
    "write_json",
]

FORMAT_VERSION = 1


def _real(a):
    return None if a is None else np.asarray(a, dtype=float).tolist()


def _complex(a):
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return {"re": float(a.real), "im": float(a.imag)}
    return [_complex(x) for x in a]


def _from_complex(obj):
    if isinstance(obj, dict):
        return complex(obj["re"], obj["im"])
    return [_from_complex(x) for x in obj]


def _carray(obj, shape=None):
    arr = np.array(_from_complex(obj), dtype=complex)
    if shape is not None and arr.size == 0:
        arr = arr.reshape(shape)
    return frozen(arr)


def _rarray(obj, shape=None):
    arr = np.array(obj, dtype=float)
    if shape is not None and arr.size == 0:
        arr = arr.reshape(shape)
    return frozen(arr)


def model_to_dict(model):
    """Plain-JSON description of a fitted model."""
    if isinstance(model, BiDMDModel):
        out = _header("bidmd", model.n_states, model.n_controls, model.dt)
        out["ranks"] = {"rank": model.rank, "rank_hat": model.rank_hat}
        out["A"] = _real(model.A)
        out["B"] = _real(model.B)
        out["eigenvalues"] = _complex(model.eigenvalues)
        out["modes"] = _complex(model.modes)
        out["feature_names"] = list(model.feature_names) if model.feature_names else None
        return out
    if isinstance(model, FloquetModel):
        sd = model.stacked_modes.shape[0]
        out = _header("floquet", sd, 0, model.period)
        out["ranks"] = {"rank": model.rank}
        out["A"] = _real(model.propagator)
        out["B"] = []
        out["eigenvalues"] = _complex(model.eigenvalues)
        out["modes"] = _complex(model.stacked_modes)
        out["period"] = model.period
        out["n_states"] = model.n_states
        out["offsets"] = _real(model.offsets)
        return out
    if isinstance(model, DMDModel):
        d = model.A.shape[0]
        out = _header("dmd", d, 0, model.dt)
        out["ranks"] = {"rank": model.rank}
        out["A"] = _real(model.A)
        out["B"] = []
        out["eigenvalues"] = _complex(model.eigenvalues)
        out["modes"] = _complex(model.modes)
        out["reduced_operator"] = _real(model.reduced_operator)
        out["pod_basis"] = _real(model.pod_basis)
        out["defective"] = bool(model.defective)
        return out
    if isinstance(model, DMDcModel):
        d, nc = model.B.shape
        out = _header("dmdc", d, nc, model.dt)
        out["ranks"] = {}
        out["A"] = _real(model.A)
        out["B"] = _real(model.B)
        out["eigenvalues"] = _complex(np.linalg.eigvals(model.A))
        out["modes"] = []
        return out
    raise TypeError(f"cannot serialize {type(model).__name__}")


def _header(kind, d, nc, dt):
    return {"format": "qdmd-model", "version": FORMAT_VERSION, "kind": kind,
            "d": int(d), "Nc": int(nc), "dt": float(dt)}


def model_from_dict(obj):
    if obj.get("format") != "qdmd-model":
        raise ShapeError("not a qdmd model document")
    kind = obj["kind"]
    d = obj["d"]
    A = _rarray(obj["A"], (d, d))
    eig = _carray(obj["eigenvalues"], (0,))
    ranks = obj.get("ranks", {})
    if kind == "bidmd":
        names = obj.get("feature_names")
        return BiDMDModel(
            A=A,
            B=_rarray(obj["B"], (d, d * obj["Nc"])),
            modes=_carray(obj["modes"], (d, 0)),
            eigenvalues=eig,
            rank=ranks["rank"],
            rank_hat=ranks["rank_hat"],
            dt=obj["dt"],
            feature_names=tuple(names) if names else None,
        )
    if kind == "floquet":
        lam = np.asarray(eig)
        return FloquetModel(
            stacked_modes=_carray(obj["modes"], (d, 0)),
            eigenvalues=eig,
            quasi_energies=frozen(np.log(lam) / obj["period"]),
            period=obj["period"],
            offsets=_rarray(obj["offsets"]),
            n_states=obj["n_states"],
            rank=ranks["rank"],
            propagator=A,
        )
    if kind == "dmd":
        return DMDModel(
            A=A,
            modes=_carray(obj["modes"], (d, 0)),
            eigenvalues=eig,
            rank=ranks["rank"],
            dt=obj["dt"],
            reduced_operator=_rarray(obj["reduced_operator"]),
            pod_basis=_rarray(obj["pod_basis"]),
            defective=obj.get("defective", False),
        )
    if kind == "dmdc":
        return DMDcModel(A, _rarray(obj["B"], (d, obj["Nc"])), obj["dt"])
    raise ShapeError(f"unknown model kind {kind!r}")


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def save_model(model, path):
    write_json(model_to_dict(model), path)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))


def save_quasi_energy_csv(model, path):
    """Columns ``mode_index, re_eps, im_eps, |lambda|, arg_lambda``."""
    lam = np.asarray(model.eigenvalues)
    eps = np.asarray(model.quasi_energies)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["mode_index", "re_eps", "im_eps", "|lambda|", "arg_lambda"])
        for j, (e, l) in enumerate(zip(eps, lam)):
            w.writerow([j, repr(float(e.real)), repr(float(e.imag)),
                        repr(float(abs(l))), repr(float(np.angle(l)))])


def save_coefficient_csv(coefficients, path):
    """Columns ``period_index, a1..aK, b1..bK``; periods are numbered from 1."""
    values = np.asarray(getattr(coefficients, "values", coefficients), dtype=float)
    K = values.shape[0] // 2
    header = ["period_index"] + [f"a{k}" for k in range(1, K + 1)] + [f"b{k}" for k in range(1, K + 1)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for n, col in enumerate(values.T, start=1):
            w.writerow([n] + [repr(float(v)) for v in col])


def load_coefficient_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2:
        raise ShapeError(f"{path}: no coefficient rows")
    return np.array([[float(v) for v in r[1:]] for r in rows[1:]]).T


def save_feature_manifest(names, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(list(names), fh, indent=1)
        fh.write("\n")
