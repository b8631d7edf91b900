"""Command line interface: ``qdmd simulate|fit|predict|example``.

Exit codes: 0 success, 2 configuration error, 3 data or algorithm error,
4 numerical failure.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .exceptions import AccuracyError, ConfigError, QDMDError, ShapeError
from .experiments import fit_config, predict_config, simulate_config, write_bundle
from .io import (
    model_from_dict,
    model_to_dict,
    save_coefficient_csv,
    save_feature_manifest,
    save_quasi_energy_csv,
    write_json,
)
from .floquet import FloquetModel
from .simulator import BlochTrajectory, load_trajectory_csv, save_trajectory_csv

log = logging.getLogger("qdmd")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _common(parser):
    parser.add_argument("--config", metavar="PATH", help="experiment configuration (JSON)")
    parser.add_argument("--out", metavar="DIR", help="output directory (default: config output.dir)")
    parser.add_argument("--seed", type=int, metavar="N", help="override the noise seed")
    parser.add_argument("--rank", type=int, metavar="R", help="override the regression rank")
    parser.add_argument("--rank-hat", type=int, metavar="R", help="override the projection rank")
    parser.add_argument("--noise", type=float, metavar="SIGMA", help="override the noise level")
    parser.add_argument("--format", choices=("csv", "json"), help="tabular output format")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="qdmd", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qdmd {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate the configured system to a trajectory file")
    _common(p)

    p = sub.add_parser("fit", help="fit the configured algorithm to trajectory files")
    _common(p)
    p.add_argument("data", nargs="+", metavar="TRAJECTORY", help="trajectory CSV or JSON files")

    p = sub.add_parser("predict", help="roll a fitted model forward under a control")
    _common(p)
    p.add_argument("--model", required=True, metavar="PATH", help="model JSON written by 'fit'")
    p.add_argument("--steps", type=int, metavar="N", help="number of model steps")
    p.add_argument("--truth", metavar="PATH", help="reference trajectory for error columns")

    p = sub.add_parser("example", help="write the artifact bundle of a reference experiment")
    _common(p)
    p.add_argument("number", type=int, choices=(1, 2, 3))
    return parser


def _config(args):
    if not args.config:
        raise ConfigError("--config is required for this command", "--config")
    cfg = load_config(args.config)
    return cfg.with_overrides(seed=args.seed, noise=args.noise, rank=args.rank,
                              rank_hat=args.rank_hat, out=args.out, fmt=args.format)


def _out_dir(cfg, args):
    out = Path(args.out or cfg.output["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_trajectory(traj, path_stem, fmt):
    if fmt == "json":
        path = path_stem.with_suffix(".json")
        write_json({"dt": traj.dt, "meta": traj.meta, "t": traj.times.tolist(),
                    "x": traj.states.tolist(), "u": traj.controls.tolist()}, path)
    else:
        path = path_stem.with_suffix(".csv")
        save_trajectory_csv(traj, path)
    return path


def _load_trajectory(path):
    path = Path(path)
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
        try:
            return BlochTrajectory(doc["t"], doc["x"], doc["u"], doc["dt"], doc.get("meta", {}))
        except KeyError as exc:
            raise ShapeError(f"{path}: missing field {exc}") from None
    return load_trajectory_csv(path)


def cmd_simulate(args):
    cfg = _config(args)
    traj = simulate_config(cfg)
    path = _save_trajectory(traj, _out_dir(cfg, args) / "trajectory", cfg.output["format"])
    print(path)
    return EXIT_OK


def cmd_fit(args):
    cfg = _config(args)
    trajs = [_load_trajectory(p) for p in args.data]
    model, report, extras = fit_config(cfg, trajs)
    out = _out_dir(cfg, args)
    doc = model_to_dict(model)
    if "library" in extras:
        doc["library"] = extras["library"]
        save_feature_manifest(model.feature_names, out / "features.json")
        save_coefficient_csv(extras["coefficients"], out / "coefficients.csv")
    write_json(doc, out / "model.json")
    if isinstance(model, FloquetModel):
        save_quasi_energy_csv(model, out / "quasi_energies.csv")
    report["model_path"] = str(out / "model.json")
    write_json(report, out / "report.json")
    for f in report.get("resonance", []):
        print(f"resonance estimate: {f:.6f}")
    print(out / "model.json")
    return EXIT_OK


def cmd_predict(args):
    cfg = _config(args)
    with open(args.model, encoding="utf-8") as fh:
        doc = json.load(fh)
    model = model_from_dict(doc)
    pred_cfg = cfg.raw.get("predict", {})
    truth = _load_trajectory(args.truth) if args.truth else None
    n_steps = args.steps if args.steps is not None else pred_cfg.get("n_steps")
    if n_steps is None:
        n_steps = truth.n_samples - 1 if truth is not None else 0
    signals = cfg.control_signals("predict")

    if isinstance(model, FloquetModel):
        x0 = pred_cfg.get("initial_state")
        if x0 is None and truth is not None:
            x0 = truth.states[:, :model.samples_per_period].T.reshape(-1)
        if x0 is None:
            raise ShapeError("Floquet prediction needs one period of stacked initial samples")
        ref = None
        if truth is not None:
            s = model.samples_per_period
            ref = truth.states[:, : (n_steps + 1) * s]
    else:
        x0 = pred_cfg.get("initial_state", cfg.initial_state())
        ref = None
        if truth is not None:
            if truth.n_samples < n_steps + 1:
                raise ShapeError(f"truth has {truth.n_samples} samples, need {n_steps + 1}")
            step = 1
            if "library" in doc:
                step = int(round(model.dt / truth.dt))
            ref = truth.states[:, : n_steps * step + 1 : step]
            x0 = pred_cfg.get("initial_state", ref[:, 0])
    x0 = np.asarray(x0, dtype=float)
    times, states, err = predict_config(model, x0, signals, n_steps, doc.get("library"), ref)

    out = _out_dir(cfg, args)
    cols = {"t": times}
    for j, row in enumerate(states):
        cols[f"x{j + 1}"] = row
    if err is not None:
        cols["error_percent"] = np.asarray(err["stepwise_percent"])
    if cfg.output["format"] == "json":
        path = out / "prediction.json"
        write_json({k: np.asarray(v).tolist() for k, v in cols.items()}
                   | ({"relative_l2": err["relative_l2"]} if err else {}), path)
    else:
        path = out / "prediction.csv"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(",".join(cols) + "\n")
            for row in np.column_stack(list(cols.values())):
                fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
    if err is not None:
        print(f"relative l2 error: {err['relative_l2']:.6g}")
    print(path)
    return EXIT_OK


def cmd_example(args):
    out = Path(args.out or ".")
    root = write_bundle(args.number, out)
    print(root)
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fit": cmd_fit, "predict": cmd_predict, "example": cmd_example}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="qdmd: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"qdmd: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (AccuracyError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"qdmd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (QDMDError, ValueError, OSError) as exc:
        print(f"qdmd: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
