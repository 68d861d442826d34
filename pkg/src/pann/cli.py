"""Command-line interface: config-driven data generation, calibration,
evaluation, verification and the variant-ladder sweep.

Every command reads a JSON experiment config, optionally overridden by a
few scalar flags, and writes JSON/CSV artifacts that embed the config echo
and the library version.  Outputs carry no timestamps or machine state, so
a repeated run with the same config and seed is byte-identical.

Exit codes: 0 success, 2 config/usage error, 3 I/O error, 4 calibration
failure, 5 verification violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__, datagen, verify
from .analytic import NeoHooke, NeoHookeParams, TransIsoParams, TransIsoReference
from .calibrate import CalibrationConfig, calibrate, calibrate_simple_fp, loss
from .errors import ConfigError, FormatError, NonFiniteLossError, PannError
from .invariants import MaterialSymmetry
from .loadcases import biaxial_path, shear_path, uniaxial_path
from .model import MODEL_FORMAT, SIMPLE_FORMAT, PannModel, SimpleFP
from .verify import relative_error

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_CALIBRATION = 4
EXIT_VIOLATION = 5

CURVE_HEADER = ["control", "C11", "C22", "C33", "C12", "C13", "C23",
                "T11", "T22", "T33", "T12", "T13", "T23", "psi"]


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------

def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config {path!r} must hold a JSON object")
    return data


def _section(cfg: dict, key: str, required: bool = True) -> dict:
    value = cfg.get(key)
    if value is None:
        if required:
            raise ConfigError(f"config is missing the {key!r} section")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"config section {key!r} must be an object")
    return value


def _build_symmetry(cfg: dict) -> MaterialSymmetry:
    sec = _section(cfg, "symmetry")
    kind = sec.get("kind")
    if kind == "isotropic":
        return MaterialSymmetry.isotropic()
    if kind == "transversely_isotropic":
        return MaterialSymmetry.transversely_isotropic(float(sec.get("beta", 2.0)))
    raise ConfigError(f"unknown symmetry kind {kind!r}; expected "
                      "'isotropic' or 'transversely_isotropic'")


def _build_reference(cfg: dict):
    sec = _section(cfg, "reference")
    kind = sec.get("kind")
    params = {k: v for k, v in sec.items() if k != "kind"}
    try:
        if kind == "neo_hooke":
            return NeoHooke(NeoHookeParams(**params))
        if kind == "trans_iso":
            return TransIsoReference(TransIsoParams(**params))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad reference parameters: {exc}") from None
    raise ConfigError(f"unknown reference kind {kind!r}; expected "
                      "'neo_hooke' or 'trans_iso'")


def _generate_dataset(cfg: dict, seed: int) -> datagen.Dataset:
    model = _build_reference(cfg)
    sec = _section(cfg, "data")
    kind = sec.get("kind")
    count = int(sec.get("count", 30))
    if kind in ("uniaxial", "biaxial", "shear"):
        lo, hi = (float(x) for x in sec.get("range", [0.8, 2.0]))
        dup = bool(sec.get("duplicate_identity", True))
        if kind == "uniaxial":
            ds = datagen.uniaxial_data(model, lo, hi, count, dup)
        elif kind == "biaxial":
            ds = datagen.biaxial_data(model, lo, hi, count, dup)
        else:
            ds = datagen.shear_data(model, lo, hi, count)
    elif kind == "multiaxial":
        ds = datagen.sample_multiaxial(
            model, count, seed,
            stretch_range=tuple(sec.get("stretch_range", [0.7, 1.6])),
            shear_range=tuple(sec.get("shear_range", [0.0, 0.0])))
    else:
        raise ConfigError(f"unknown data kind {kind!r}; expected uniaxial, "
                          "biaxial, shear or multiaxial")
    for pert in cfg.get("perturbations", []):
        pkind = pert.get("kind")
        if pkind == "offset_t11":
            ds = datagen.apply_offset(ds, float(pert["value"]))
        elif pkind == "noise_t11":
            ds = datagen.apply_noise(ds, float(pert["std"]),
                                     int(pert.get("seed", seed)))
        else:
            raise ConfigError(f"unknown perturbation kind {pkind!r}")
    return ds


def _calibration_config(cfg: dict, seed: int) -> CalibrationConfig:
    sec = _section(cfg, "calibration", required=False)
    allowed = {"restarts", "prune_iter", "prune_keep", "max_iter",
               "polish_iter", "polish_top", "gtol", "loss_floor", "seed"}
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown calibration keys: {sorted(unknown)}")
    kwargs = dict(sec)
    kwargs.setdefault("seed", seed)
    try:
        return CalibrationConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad calibration config: {exc}") from None


def _payload(cfg: dict, body: dict) -> dict:
    return {"config": cfg, "version": __version__, **body}


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _out_dir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _load_model(path: str):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    fmt = data.get("format")
    if fmt == MODEL_FORMAT:
        return PannModel.from_dict(data)
    if fmt == SIMPLE_FORMAT:
        return SimpleFP.from_dict(data)
    raise FormatError(f"unrecognized model format {fmt!r} in {path!r}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gen_data(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    ds = _generate_dataset(cfg, seed)
    out = _out_dir(args)
    ds.meta["config"] = cfg
    ds.meta["version"] = __version__
    ds.meta["seed"] = seed
    path = os.path.join(out, "dataset.csv")
    datagen.write_csv(ds, path)
    print(f"wrote {len(ds)} tuples to {path}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    ds = datagen.read_csv(args.data)
    sym = _build_symmetry(cfg)
    variant = cfg.get("variant", "pann")
    hidden = tuple(cfg.get("hidden_layers", [8]))
    cal_cfg = _calibration_config(cfg, seed)
    split_sec = _section(cfg, "split", required=False)
    if split_sec:
        cal, test = datagen.split(ds, float(split_sec.get("fraction", 0.7)),
                                  int(split_sec.get("seed", seed)))
    else:
        cal, test = ds, None

    if variant == "simple_fp":
        result = calibrate_simple_fp(cal, test, hidden=int(hidden[0]), config=cal_cfg)
    else:
        result = calibrate(cal, test, variant, sym, hidden, cal_cfg)

    out = _out_dir(args)
    model_path = os.path.join(out, "model.json")
    _write_json(model_path, result.model.to_dict())
    report = _payload(cfg, {"seed": seed, "report": result.to_dict()})
    report_path = os.path.join(out, "calibration_report.json")
    _write_json(report_path, report)
    test_part = (f" test_mse={result.test_mse:.6g}" if result.test_mse is not None else "")
    print(f"calibrated {variant}: train_mse={result.train_mse:.6g}{test_part}")
    print(f"wrote {model_path} and {report_path}")
    return EXIT_OK


def _curve_rows(model, spec: dict):
    kind = spec.get("kind", "uniaxial")
    lo, hi = (float(x) for x in spec.get("range", [0.5, 2.0]))
    count = int(spec.get("count", 50))
    dup = bool(spec.get("duplicate_identity", True))
    if kind == "uniaxial":
        points = uniaxial_path(model, lo, hi, count, dup)
    elif kind == "biaxial":
        points = biaxial_path(model, lo, hi, count, dup)
    elif kind == "shear":
        points = shear_path(model, lo, hi, count)
    else:
        raise ConfigError(f"unknown evaluate kind {kind!r}")
    rows = []
    for pt in points:
        rows.append([pt.control, *pt.C.components(), *pt.T.components(),
                     model.energy(pt.C)])
    return rows


def cmd_evaluate(args) -> int:
    model = _load_model(args.model)
    if not isinstance(model, PannModel):
        raise ConfigError("evaluate requires an invariant-based model payload; "
                          "the plain F->P baseline has no energy to report")
    cfg = _load_config(args.config) if args.config else {}
    out = _out_dir(args)
    body: dict = {"model": os.path.basename(args.model)}

    if args.data:
        ds = datagen.read_csv(args.data)
        body["data"] = os.path.basename(args.data)
        body["mse"] = loss(model, ds)
        body["relative_error"] = relative_error(model, ds)

    spec = _section(cfg, "evaluate", required=False)
    if spec:
        rows = _curve_rows(model, spec)
        curve_path = os.path.join(out, "curve.csv")
        with open(curve_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CURVE_HEADER)
            for row in rows:
                writer.writerow([f"{x:.17g}" for x in row])
        body["curve"] = {"path": os.path.basename(curve_path),
                         "kind": spec.get("kind", "uniaxial"),
                         "points": len(rows)}
        print(f"wrote {curve_path} ({len(rows)} points)")

    if "mse" not in body and "curve" not in body:
        raise ConfigError("nothing to evaluate: pass --data and/or a config "
                          "with an 'evaluate' section")
    report_path = os.path.join(out, "evaluation_report.json")
    _write_json(report_path, _payload(cfg, body))
    if "mse" in body:
        print(f"mse={body['mse']:.6g} relative_error={body['relative_error']:.6g}")
    print(f"wrote {report_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    model = _load_model(args.model)
    if not isinstance(model, PannModel):
        raise ConfigError("verify requires an invariant-based model payload")
    cfg = _load_config(args.config) if args.config else {}
    sec = _section(cfg, "verify", required=False)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    lam_range = tuple(sec.get("lam_range", [0.1, 10.0]))
    audit_tol = float(sec.get("audit_tol", 1e-4))

    if model.symmetry.is_isotropic:
        scan = verify.nonneg_scan_iso(
            model, lam_range=lam_range,
            count=int(sec.get("scan_count", 1000)), seed=seed)
    else:
        scan = verify.nonneg_scan_transiso(
            model, lam_range=lam_range,
            count=int(sec.get("scan_count", 200_000)), seed=seed)
    audit = verify.gradient_audit(
        model, count=int(sec.get("audit_count", 100)), seed=seed,
        step=float(sec.get("audit_step", 1e-6)))

    violated = bool(scan.violation_count > 0
                    or audit["max_relative_deviation"] > audit_tol)
    body = {
        "model": os.path.basename(args.model),
        "seed": seed,
        "nonneg_scan": scan.to_dict(),
        "gradient_audit": audit,
        "audit_tol": audit_tol,
        "passed": not violated,
    }
    out = _out_dir(args)
    report_path = os.path.join(out, "verify_report.json")
    _write_json(report_path, _payload(cfg, body))
    status = "FAIL" if violated else "ok"
    print(f"nonneg violations={scan.violation_count} "
          f"audit_max_dev={audit['max_relative_deviation']:.3e} [{status}]")
    print(f"wrote {report_path}")
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
    sym = _build_symmetry(cfg)
    sec = _section(cfg, "sweep", required=False)
    if args.data:
        ds = datagen.read_csv(args.data)
    else:
        ds = _generate_dataset(cfg, int(sec.get("data_seed", seed)))
    study = verify.variant_ladder_study(
        sym, ds,
        runs=int(sec.get("runs", 20)),
        restarts=int(sec.get("restarts", 30)),
        seed=seed,
        hidden_layers=tuple(cfg.get("hidden_layers", [8])),
        prune_iter=int(sec.get("prune_iter", 150)),
        prune_keep=int(sec.get("prune_keep", 8)),
        max_iter=int(sec.get("max_iter", 600)),
        polish_iter=int(sec.get("polish_iter", 2500)),
        polish_top=int(sec.get("polish_top", 3)),
        threads=max(1, args.threads))
    out = _out_dir(args)
    for variant, entry in study["variants"].items():
        verify.write_epsilon_csv(entry["epsilons"],
                                 os.path.join(out, f"epsilon_{variant}.csv"))
    summary_path = os.path.join(out, "sweep_summary.json")
    _write_json(summary_path, _payload(cfg, {"seed": seed, "study": study}))
    for variant, entry in study["variants"].items():
        median = entry["stats"]["median"]
        print(f"{variant}: median_eps={median:.6g} "
              f"failed_runs={len(entry['failed_runs'])}")
    print(f"wrote {summary_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pann",
        description="Polyconvex neural constitutive models: data generation, "
                    "calibration, evaluation, verification and sweeps.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, config_required=True, data=None, model=False, threads=False):
        p.add_argument("--config", required=config_required,
                       help="experiment config (JSON)")
        if data is not None:
            p.add_argument("--data", required=(data == "required"),
                           help="dataset CSV path")
        if model:
            p.add_argument("--model", required=True, help="model JSON path")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="output directory")
        if threads:
            p.add_argument("--threads", type=int, default=1,
                           help="worker process cap")

    p = sub.add_parser("gen-data", help="generate a dataset CSV + sidecar")
    common(p)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("calibrate", help="fit a model variant to a dataset")
    common(p, data="required")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("evaluate", help="evaluate a model on data or load paths")
    common(p, config_required=False, data="optional", model=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", help="non-negativity scan and gradient audit")
    common(p, config_required=False, model=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="variant-ladder statistics study")
    common(p, data="optional", threads=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "threads"):
        args.threads = 1
    try:
        return args.func(args)
    except NonFiniteLossError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PannError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
