"""Command-line front end: flat key = value configs, one JSON report and one CSV per run.

Exit codes: 0 every verdict PASS or INFORMATIONAL, 1 usage or config error,
2 budget or convergence failure, 3 some verdict FAIL or INCONCLUSIVE.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
import time
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import exponents as E
from . import experiments as X
from .transforms import QuadratureError, QuadratureSpec

COMMANDS = ("exponents", "decay", "sharpness", "extension", "dual", "multilinear", "rescale", "ball", "whitney", "all")

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_VERDICT = 0, 1, 2, 3


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class Key:
    kind: type
    default: object
    doc: str


KEYS: dict[str, Key] = {
    "command": Key(str, "decay", "one of " + ", ".join(COMMANDS)),
    "d": Key(int, 3, "ambient dimension"),
    "alpha": Key(float, 2.5, "dimension of the measure"),
    "q": Key(float, 2.0, "Lebesgue exponent on the measure side"),
    "p": Key(float, 2.0, "Lebesgue exponent on the curve side"),
    "ell": Key(int, 0, "branch index"),
    "k": Key(int, 3, "number of factors (multilinear) or frame order (rescale)"),
    "L": Key(float, 0.25, "interval separation for the multilinear run"),
    "curve": Key(str, "moment", "moment, helix or perturbed:a=..,f=.."),
    "measure": Key(str, "sharpness", "sharpness, cantor, cube, ball or point"),
    "depth": Key(int, 14, "Cantor depth"),
    "profile": Key(str, "auto", "extension profile: auto, comb, indicator or sub_interval"),
    "lambda0": Key(float, 64.0, "first rung of the lambda ladder"),
    "ratio": Key(float, 2.0, "ladder ratio"),
    "count": Key(int, 9, "number of ladder rungs"),
    "h_count": Key(int, 6, "rescale ladder h = 2^-1 .. 2^-h_count"),
    "oversample": Key(float, 8.0, "quadrature nodes per wavelength"),
    "rule": Key(str, "simpson", "composite rule: simpson or trapezoid"),
    "tolerance": Key(float, 1e-3, "relative tolerance of the doubling audit"),
    "margin": Key(float, -1.0, "verdict margin; negative means the experiment default"),
    "n_mc": Key(int, 100_000, "Monte Carlo samples"),
    "q_max": Key(float, 24.0, "largest q in the exponent table"),
    "q_step": Key(float, 0.5, "q spacing in the exponent table"),
    "seed": Key(int, 0, "random seed"),
    "out": Key(str, "out", "output directory"),
    "max_lambda": Key(float, 0.0, "compute budget as the largest lambda; 0 means none"),
    "threads": Key(int, 1, "BLAS threads"),
}


def _coerce(key: str, raw) -> object:
    spec = KEYS[key]
    if isinstance(raw, spec.kind) and not isinstance(raw, bool):
        return raw
    text = str(raw).strip()
    try:
        if spec.kind is int:
            val = float(text)
            if val != int(val):
                raise ValueError
            return int(val)
        if spec.kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(key, f"expected {spec.kind.__name__}, got {text!r}") from None
    return text


def read_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for no, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}", f"expected key = value, got {line!r}")
        key, _, val = line.partition("=")
        out[key.strip()] = val.strip()
    return out


def _validate(cfg: dict) -> None:
    cmd = cfg["command"]
    if cmd not in COMMANDS:
        raise ConfigError("command", f"unknown command {cmd!r}")
    d, alpha = cfg["d"], cfg["alpha"]
    if not (2 <= d <= 5):
        raise ConfigError("d", f"must lie in [2, 5], got {d}")
    if not (0 < alpha <= d):
        raise ConfigError("alpha", f"must lie in (0, d] = (0, {d}], got {alpha:g}")
    if cfg["q"] < 1:
        raise ConfigError("q", "must be at least 1")
    if cfg["p"] < 1:
        raise ConfigError("p", "must be at least 1")
    if cfg["lambda0"] < 4:
        raise ConfigError("lambda0", "must be at least 4")
    if cfg["ratio"] <= 1:
        raise ConfigError("ratio", "must exceed 1")
    if cfg["count"] < 4:
        raise ConfigError("count", "need at least 4 rungs")
    if cfg["rule"] not in ("simpson", "trapezoid"):
        raise ConfigError("rule", "must be simpson or trapezoid")
    if cfg["n_mc"] < 1000:
        raise ConfigError("n_mc", "must be at least 1000")
    if cfg["max_lambda"] < 0:
        raise ConfigError("max_lambda", "must be nonnegative")
    if cfg["threads"] < 1:
        raise ConfigError("threads", "must be at least 1")
    if cmd in ("sharpness", "extension"):
        legal = E.ell_range(d, alpha)
        if cfg["ell"] not in legal:
            raise ConfigError("ell", f"must lie in [{legal[0]}, {legal[-1]}] for d={d}, alpha={alpha:g}")
    if cmd == "sharpness" and cfg["ell"] < 0:
        raise ConfigError("ell", "the anisotropic bump needs ell >= 0")
    if cmd == "extension":
        prof = cfg["profile"]
        if prof not in ("auto", "comb", "indicator", "sub_interval"):
            raise ConfigError("profile", f"unknown profile {prof!r}")
        if prof == "comb" and not (d - 1 <= alpha <= d):
            raise ConfigError("alpha", "the comb profile needs d - 1 <= alpha <= d")
        if prof != "comb" and not E.interval_J_circ(d, alpha, cfg["ell"]).contains(cfg["q"]):
            raise ConfigError("q", f"must lie in J_circ({cfg['ell']}) = {E.interval_J_circ(d, alpha, cfg['ell'])}")
    if cmd == "multilinear":
        if not (1 <= cfg["k"] <= d):
            raise ConfigError("k", f"must lie in [1, {d}]")
        if not (0 < cfg["L"] and (cfg["k"] - 1) * cfg["L"] < 1):
            raise ConfigError("L", f"{cfg['k']} intervals separated by {cfg['L']:g} do not fit in [0, 1]")
    if cmd == "rescale":
        if not (1 <= cfg["k"] <= d):
            raise ConfigError("k", f"must lie in [1, {d}]")
        if alpha - d + cfg["k"] <= 0:
            raise ConfigError("alpha", "need alpha - d + k > 0")
        if cfg["h_count"] < 4:
            raise ConfigError("h_count", "need at least 4 values of h")
    if cmd in ("decay", "dual", "ball"):
        if cfg["measure"] not in ("sharpness", "cantor", "cube", "ball", "point"):
            raise ConfigError("measure", f"unknown measure {cfg['measure']!r}")
    if cmd in ("decay", "dual", "whitney"):
        from .curves import curve_from_id

        try:
            curve_from_id(cfg["curve"], d)
        except ValueError as exc:
            raise ConfigError("curve", str(exc)) from None


def resolve_config(file_values: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the file, then flag overrides; every key validated."""
    cfg = {k: v.default for k, v in KEYS.items()}
    for source in (file_values or {}, overrides or {}):
        for key, raw in source.items():
            if key not in KEYS:
                raise ConfigError(key, "unknown key")
            cfg[key] = _coerce(key, raw)
    _validate(cfg)
    return cfg


def format_config(cfg: dict) -> str:
    lines = []
    for key in KEYS:
        val = cfg[key]
        lines.append(f"{key} = {repr(val) if isinstance(val, float) else val}")
    return "\n".join(lines) + "\n"


# -- commands -----------------------------------------------------------------


def _ladder(cfg: dict) -> X.LambdaLadder:
    cap = cfg["max_lambda"] or None
    return X.LambdaLadder(cfg["lambda0"], cfg["ratio"], cfg["count"], cap)


def _margin(cfg: dict, default: float) -> float:
    return default if cfg["margin"] < 0 else cfg["margin"]


def _spec(cfg: dict) -> QuadratureSpec:
    return QuadratureSpec(oversample=cfg["oversample"], rule=cfg["rule"], tolerance=cfg["tolerance"])


def exponent_table(cfg: dict) -> tuple[list[dict], dict]:
    d, alpha = cfg["d"], cfg["alpha"]
    qs = set(np.round(np.arange(2.0, cfg["q_max"] + 1e-9, cfg["q_step"]), 12).tolist())
    for ell in E.ell_range(d, alpha):
        for J in (E.interval_J(d, alpha, ell), E.interval_J_circ(d, alpha, ell)):
            for end in (J.lo, J.hi):
                if math.isfinite(float(end)) and 1 <= float(end) <= cfg["q_max"]:
                    qs.add(float(end))
    rows = []
    for q in sorted(qs):
        for ell in E.ell_range(d, alpha):
            J = E.interval_J(d, alpha, ell)
            Jc = E.interval_J_circ(d, alpha, ell)
            kap = E.kappa(d, alpha, q, ell) if J.contains(q) else None
            circ = None
            if Jc.contains(q) and float(Jc.lo) <= float(Jc.hi) and (ell < 0 or alpha > ell):
                circ = E.kappa_circ(d, alpha, q, ell)
            if kap is None and circ is None:
                continue
            rows.append(
                {
                    "q": q,
                    "ell": ell,
                    "J_lo": float(J.lo),
                    "J_hi": float(J.hi),
                    "kappa": "" if kap is None else float(kap.value),
                    "kappa_circ": "" if circ is None else float(circ.value),
                    "branch": "" if kap is None else kap.branch,
                }
            )
    mk = E.min_kappa(d, alpha) if alpha < d else None
    scalars = {
        "delta": E.delta_theorem(d, alpha).value,
        "delta_upper": E.delta_upper(d, alpha).value,
        "min_kappa": None if mk is None else mk.value,
        "min_kappa_q": None if mk is None else mk.q,
        "min_kappa_ell": None if mk is None else mk.ell,
    }
    return rows, scalars


def _dispatch(cfg: dict) -> list:
    cmd = cfg["command"]
    d, alpha = cfg["d"], cfg["alpha"]
    if cmd == "decay":
        fam = X.measure_family(cfg["measure"], d, alpha, **({"depth": cfg["depth"]} if cfg["measure"] == "cantor" else {}))
        return [X.run_decay(fam, cfg["curve"], alpha, _ladder(cfg), _spec(cfg), margin=_margin(cfg, 0.05))]
    if cmd == "sharpness":
        return [X.run_sharpness_lower(d, alpha, cfg["ell"], _ladder(cfg), margin=_margin(cfg, 0.05), spec=_spec(cfg))]
    if cmd == "extension":
        prof = None if cfg["profile"] == "auto" else cfg["profile"]
        return [X.run_extension_lower(d, alpha, cfg["q"], cfg["ell"], _ladder(cfg), profile=prof, margin=_margin(cfg, 0.07))]
    if cmd == "dual":
        fam = X.measure_family(cfg["measure"], d, alpha, **({"depth": cfg["depth"]} if cfg["measure"] == "cantor" else {}))
        return [X.run_dual_check(fam, cfg["curve"], _ladder(cfg), margin=_margin(cfg, 0.15), seed=cfg["seed"], spec=_spec(cfg))]
    if cmd == "multilinear":
        return [X.run_multilinear(d, cfg["k"], cfg["L"], _ladder(cfg), margin=_margin(cfg, 0.1))]
    if cmd == "rescale":
        hs = 2.0 ** -np.arange(1, cfg["h_count"] + 1)
        return [X.run_rescale_growth(d, cfg["k"], alpha, hs, lower_margin=_margin(cfg, 0.15))]
    if cmd == "ball":
        fam = X.measure_family(cfg["measure"], d, alpha, **({"depth": cfg["depth"]} if cfg["measure"] == "cantor" else {}))
        return [X.run_ball_baseline(fam, alpha, _ladder(cfg), cfg["n_mc"], cfg["seed"], margin=_margin(cfg, 0.15), d=d)]
    if cmd == "whitney":
        return [X.run_geometry(cfg["curve"], d, n_mc=cfg["n_mc"], seed=cfg["seed"])]
    raise ValueError(cmd)


def _csv_rows(command: str, reports) -> list[dict]:
    rows = []
    for rep in reports:
        fits = [rep.tube, rep.curve] if isinstance(rep, X.DualReport) else [rep] if isinstance(rep, X.FitReport) else []
        verdict = rep.verdict
        for fit in fits:
            for lam, val in zip(fit.lambdas, fit.values):
                rows.append(
                    {
                        "experiment": fit.name or command,
                        "lambda": lam,
                        "value": val,
                        "slope": fit.slope,
                        "predicted": "" if fit.predicted is None else fit.predicted,
                        "verdict": verdict,
                    }
                )
        if not fits:
            rows.append({"experiment": command, "lambda": "", "value": "", "slope": "", "predicted": "", "verdict": verdict})
    return rows


def _write_csv(path: Path, rows: list[dict], header: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=header, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})


def determinism_hash(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, allow_nan=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _write_report(out: Path, cfg: dict, body: dict) -> str:
    out.mkdir(parents=True, exist_ok=True)
    core = X._plain({"config": cfg, **body})
    # where the files go and how many threads ran do not change the numbers
    digest = determinism_hash({**core, "config": {k: v for k, v in core["config"].items() if k not in ("out", "threads")}})
    doc = {**core, "hash": digest, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")}
    with open(out / f"{cfg['command']}.json", "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return digest


def cmd_exponents(cfg: dict) -> int:
    rows, scalars = exponent_table(cfg)
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "exponents.csv", rows, ["q", "ell", "J_lo", "J_hi", "kappa", "kappa_circ", "branch"])
    _write_csv(out / "exponents_scalars.csv", [{"name": k, "value": v} for k, v in scalars.items()], ["name", "value"])
    digest = _write_report(out, cfg, {"scalars": scalars, "rows": rows})
    for k, v in scalars.items():
        print(f"{k} = {v}")
    print(f"{len(rows)} rows written to {out / 'exponents.csv'} (hash {digest[:12]})")
    return EXIT_OK


def cmd_all(cfg: dict) -> int:
    from . import acceptance

    out = Path(cfg["out"])
    results = []
    for number in sorted(acceptance.CRITERIA):
        res = acceptance.CRITERIA[number]()
        results.append(res)
        print(res.line(), flush=True)
        for line in res.details:
            print("    " + line)
    body = {
        "criteria": [
            {"number": r.number, "title": r.title, "passed": r.passed, "details": r.details, "reports": [x.to_dict() for x in r.reports]}
            for r in results
        ]
    }
    digest = _write_report(out, cfg, body)
    rows = [row for r in results for row in _csv_rows(f"criterion_{r.number}", r.reports)]
    _write_csv(out / "all.csv", rows, ["experiment", "lambda", "value", "slope", "predicted", "verdict"])
    print(f"hash {digest}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERDICT


def cmd_run(cfg: dict) -> int:
    if cfg["command"] == "exponents":
        return cmd_exponents(cfg)
    if cfg["command"] == "all":
        return cmd_all(cfg)
    out = Path(cfg["out"])
    reports = []
    try:
        reports = _dispatch(cfg)
    except (X.BudgetError, QuadratureError) as exc:
        _write_report(out, cfg, {"error": f"{cfg['command']}: {exc}", "reports": []})
        print(f"error in {cfg['command']}: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    digest = _write_report(out, cfg, {"reports": [r.to_dict() for r in reports]})
    _write_csv(out / f"{cfg['command']}.csv", _csv_rows(cfg["command"], reports), ["experiment", "lambda", "value", "slope", "predicted", "verdict"])
    for r in reports:
        print(r.line())
    print(f"report {out / (cfg['command'] + '.json')} (hash {digest[:12]})")
    ok = all(r.verdict in (X.PASS, X.INFORMATIONAL) for r in reports)
    return EXIT_OK if ok else EXIT_VERDICT


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="curvedecay",
        description="Averaged Fourier decay of fractal measures along space curves: exponent tables and lambda-ladder experiments.",
        epilog="Config keys: " + ", ".join(KEYS) + ". Trailing key=value arguments override the file.",
    )
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("overrides", nargs="*", metavar="key=value")
    ap.add_argument("--config", type=Path, help="flat key = value file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--max-lambda", type=float, dest="max_lambda")
    ap.add_argument("--threads", type=int)
    ap.add_argument("--print-config", action="store_true", help="echo the resolved config and exit")
    return ap


def _set_threads(n: int) -> None:
    try:
        from threadpoolctl import threadpool_limits
    except ImportError:
        return
    threadpool_limits(n)


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_intermixed_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        file_values = read_config_text(args.config.read_text(encoding="utf-8")) if args.config else {}
        flags = {"command": args.command}
        for item in args.overrides:
            if "=" not in item:
                raise ConfigError(item, "expected key=value")
            key, _, val = item.partition("=")
            flags[key.strip()] = val.strip()
        for key in ("seed", "out", "max_lambda", "threads"):
            if getattr(args, key) is not None:
                flags[key] = getattr(args, key)
        if file_values.get("command", args.command) != args.command:
            file_values = {k: v for k, v in file_values.items() if k != "command"}
        cfg = resolve_config(file_values, flags)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.print_config:
        sys.stdout.write(format_config(cfg))
        return EXIT_OK
    _set_threads(cfg["threads"])
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        try:
            return cmd_run(cfg)
        except X.BudgetError as exc:
            print(f"budget exceeded: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        except QuadratureError as exc:
            print(f"quadrature failed: {exc}", file=sys.stderr)
            return EXIT_BUDGET
        except ValueError as exc:
            print(f"error in {cfg['command']}: {exc}", file=sys.stderr)
            return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
