"""Command-line front end.

Exit codes: 0 success, 1 oracle check failed, 2 usage or validation error.
Every error is reported as one line starting with ``error:`` on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import FORMAT_VERSION
from .devices import Classical, DetectorModel, GeneralAB, NoisyWZ
from .metrics import (
    Usefulness,
    detector_only_useful,
    eta_e_closed_form,
    eta_e_limit,
    eta_e_recursion,
    information,
    ml_estimate,
    ml_gain_condition,
    ml_gain_threshold,
    ml_gain_threshold_weak_dark,
    ml_usefulness,
    q_detector_only,
    q_single_copier,
)
from .scan import FIGURES, Axis, Dataset, SweepSpec, figure_preset, fmt, grid_tables, run_sweep
from .scheme import (
    PHOTON,
    VACUUM,
    SchemeConfig,
    binomial_bound,
    build_outcome_table,
    cnot_oracle,
    outcome_label,
    sample_outcomes,
)

PARAMS = ("eta", "xi", "eps", "mu", "p", "N", "A", "B", "trials", "seed")
DEFAULTS = {"xi": 0.0, "mu": -1.0, "p": 0.5, "N": 1, "format": "csv"}
ORACLE_DEFAULTS = {"N": 1, "eta": 0.6, "eps": 0.8, "mu": -1.0, "xi": 0.01, "p": 0.5, "trials": 10**6, "seed": 0}
INT_PARAMS = {"N", "trials", "seed"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_params(p: argparse.ArgumentParser, names: Sequence[str]) -> None:
    for name in names:
        kind = int if name in INT_PARAMS else float
        p.add_argument(f"--{name}", type=kind, default=None)
    p.add_argument("--config", type=Path, help="file of 'key = value' lines; flags override it")
    p.add_argument("--format", choices=("csv", "json"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="copier-cascade", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("detect", help="outcome table, information and ML decision at one point")
    _add_params(p, ("eta", "xi", "eps", "mu", "p", "N", "A", "B"))
    p.add_argument("--copier", choices=("wz", "ab", "classical"), default=None)
    p.add_argument("--out", type=Path)

    p = sub.add_parser("mlcompare", help="single-copier vs bare detector ML success")
    _add_params(p, ("eta", "xi", "eps", "mu", "p"))
    p.add_argument("--out", type=Path)

    p = sub.add_parser("region", help="2-D gain-region sweep")
    _add_params(p, ("eta", "xi", "eps", "mu", "p", "N", "A", "B"))
    p.add_argument("--x", required=True, help="name:lo:hi[:steps]")
    p.add_argument("--y", required=True, help="name:lo:hi[:steps]")
    p.add_argument("--comparison", choices=("info-gain", "ml-gain", "eta_e-ratio"), default="info-gain")
    p.add_argument("--out", type=Path, default=Path("."))

    p = sub.add_parser("figure", help="regenerate a figure dataset")
    p.add_argument("figure_id")
    p.add_argument("-o", "--out", type=Path, default=Path("."))
    p.add_argument("--steps", type=int, default=201)
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--config", type=Path)

    p = sub.add_parser("oracle", help="cross-check exact tables against Monte Carlo and a density-matrix model")
    _add_params(p, ("eta", "xi", "eps", "mu", "p", "N", "trials", "seed"))
    return parser


def read_config(path: Path) -> dict:
    out = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.lstrip("-")] = value
    return out


def resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """Flags beat the config file, which beats defaults."""
    given = {k: v for k, v in vars(args).items() if v is not None}
    cfg = read_config(args.config) if getattr(args, "config", None) else {}
    merged = dict(defaults)
    for key, raw in cfg.items():
        if key not in PARAMS and key not in ("format", "copier", "comparison", "steps"):
            raise UsageError(f"unknown config key {key!r}")
        try:
            merged[key] = int(raw) if key in INT_PARAMS or key == "steps" else (float(raw) if key in PARAMS else raw)
        except ValueError:
            raise UsageError(f"invalid value for {key}: {raw!r}") from None
    merged.update(given)
    return merged


def _need(cfg: dict, *names: str) -> None:
    for n in names:
        if cfg.get(n) is None:
            raise UsageError(f"missing required parameter {n}")


def _copier(cfg: dict):
    kind = cfg.get("copier") or ("ab" if cfg.get("A") is not None or cfg.get("B") is not None else "wz")
    if kind == "ab":
        _need(cfg, "A", "B")
        return GeneralAB.from_ab(cfg["A"], cfg["B"])
    if kind == "classical":
        return Classical(DetectorModel(cfg["eta"], cfg["xi"]))
    _need(cfg, "eps")
    return NoisyWZ(cfg["eps"], cfg["mu"])


def _emit(result: dict, fmt_name: str, out: Optional[Path]) -> None:
    if fmt_name == "json":
        text = json.dumps(result, indent=2) + "\n"
    else:
        lines = ["quantity,value"] + [f"{k},{fmt(v) if v is not None else ''}" for k, v in _flatten(result)]
        text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)


def _flatten(d: dict, prefix: str = ""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        elif isinstance(v, list):
            for i, item in enumerate(v):
                yield f"{key}[{i}]", item
        else:
            yield key, v


def cmd_detect(cfg: dict) -> int:
    _need(cfg, "eta")
    N = int(cfg["N"])
    detector = DetectorModel(cfg["eta"], cfg["xi"])
    copier = _copier(cfg) if N > 0 else NoisyWZ(1.0, -1.0)
    if N == 0 and cfg.get("eps") is not None:
        NoisyWZ(cfg["eps"], cfg["mu"])  # still validate
    scheme = SchemeConfig(N, copier, detector, cfg["p"])
    table = build_outcome_table(scheme)
    p = scheme.prior
    info = information(table, p)
    ml = ml_estimate(table, p)
    n_det = table.n_detectors
    result = {
        "spec_version": FORMAT_VERSION,
        "parameters": {k: cfg[k] for k in ("eta", "xi", "eps", "mu", "p", "N", "A", "B") if cfg.get(k) is not None},
        "table": table.to_dict(),
        "I_m": info.i_m,
        "eta_e": info.eta_e,
        "ml": {
            "Q": ml.q,
            "degenerate": ml.degenerate,
            "estimator": {outcome_label(j, n_det): int(g) for j, g in enumerate(ml.estimator)},
        },
        "checks": {},
    }
    checks = result["checks"]
    wz = isinstance(copier, NoisyWZ)
    if N == 0:
        if detector_only_useful(detector.eta, detector.xi, p):
            checks["Q0_closed_form"] = q_detector_only(detector.eta, detector.xi, p)
    elif wz and copier.mu == -1.0:
        if detector.xi == 0.0:
            checks["eta_e_recursion"] = eta_e_recursion(copier.eps, detector.eta, N)
            checks["eta_e_limit"] = eta_e_limit(copier.eps)
            if N == 1:
                checks["eta_e_closed_form"] = eta_e_closed_form(copier.eps, detector.eta)
        if N == 1:
            use = ml_usefulness(copier.eps, detector.eta, detector.xi, p)
            checks["ml_usefulness"] = use.value
            if use is Usefulness.COUNT_MEANS_PHOTON:
                checks["Q1_closed_form"] = q_single_copier(copier.eps, detector.eta, detector.xi, p)
            checks["ml_gain_condition"] = ml_gain_condition(copier.eps, detector.eta, detector.xi, p)
            checks["ml_gain_threshold_simplified"] = ml_gain_threshold_weak_dark(detector.eta)
    _emit(result, cfg["format"], cfg.get("out"))
    return 0


def cmd_mlcompare(cfg: dict) -> int:
    _need(cfg, "eta", "eps")
    detector = DetectorModel(cfg["eta"], cfg["xi"])
    copier = NoisyWZ(cfg["eps"], cfg["mu"])
    p = cfg["p"]
    t0 = build_outcome_table(SchemeConfig(0, copier, detector, p))
    t1 = build_outcome_table(SchemeConfig(1, copier, detector, p))
    m0, m1 = ml_estimate(t0, p), ml_estimate(t1, p)
    eta, xi, eps = detector.eta, detector.xi, copier.eps
    result = {
        "spec_version": FORMAT_VERSION,
        "parameters": {"eta": eta, "xi": xi, "eps": eps, "mu": copier.mu, "p": p},
        "Q0": m0.q,
        "Q1": m1.q,
        "Q1_minus_Q0": m1.q - m0.q,
        "degenerate_N0": m0.degenerate,
        "degenerate_N1": m1.degenerate,
        "estimator_N1": {outcome_label(j, 2): int(g) for j, g in enumerate(m1.estimator)},
    }
    if copier.mu == -1.0:
        use = ml_usefulness(eps, eta, xi, p)
        result["usefulness"] = use.value
        result["Q0_closed_form"] = q_detector_only(eta, xi, p) if detector_only_useful(eta, xi, p) else None
        result["Q1_closed_form"] = q_single_copier(eps, eta, xi, p) if use is Usefulness.COUNT_MEANS_PHOTON else None
        result["gain_condition"] = ml_gain_condition(eps, eta, xi, p)
        result["eps_threshold"] = ml_gain_threshold(eta, xi, p) if p > 0 else None
        result["eps_threshold_simplified"] = ml_gain_threshold_weak_dark(eta)
    _emit(result, cfg["format"], cfg.get("out"))
    return 0


def parse_axis(text: str) -> Axis:
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise UsageError(f"axis {text!r} must look like name:lo:hi[:steps]")
    try:
        steps = int(parts[3]) if len(parts) == 4 else 201
        return Axis(parts[0], float(parts[1]), float(parts[2]), steps)
    except ValueError:
        raise UsageError(f"axis {text!r} has a non-numeric bound") from None


def _write_dataset(ds: Dataset, fmt_name: str, out: Path) -> None:
    if fmt_name == "json":
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{ds.figure}.json").write_text(json.dumps(ds.to_json_dict(), indent=2) + "\n")
    else:
        ds.write(out)


def cmd_region(cfg: dict) -> int:
    x, y = parse_axis(cfg["x"]), parse_axis(cfg["y"])
    fixed = {k: cfg[k] for k in ("eta", "xi", "eps", "mu", "p", "A", "B") if cfg.get(k) is not None}
    fixed.pop(x.name, None)
    fixed.pop(y.name, None)
    spec = SweepSpec(x, y, fixed, int(cfg["N"]), cfg["comparison"])
    grid = run_sweep(spec)
    meta = {**spec.to_dict(), "boundary_points": int(len(grid.boundary))}
    _write_dataset(Dataset("region", grid_tables(grid), meta), cfg["format"], cfg["out"])
    return 0


def cmd_figure(cfg: dict) -> int:
    fig = cfg["figure_id"]
    if fig not in FIGURES:
        raise UsageError(f"unknown figure {fig!r}; expected one of {', '.join(FIGURES)}")
    if cfg["steps"] < 2:
        raise UsageError("steps must be at least 2")
    _write_dataset(figure_preset(fig, cfg["steps"]), cfg["format"], cfg["out"])
    return 0


def cmd_oracle(cfg: dict) -> int:
    if cfg["trials"] < 1:
        raise UsageError(f"trials={cfg['trials']} must be at least 1")
    detector = DetectorModel(cfg["eta"], cfg["xi"])
    scheme = SchemeConfig(int(cfg["N"]), NoisyWZ(cfg["eps"], cfg["mu"]), detector, cfg["p"])
    exact = build_outcome_table(scheme)
    run = sample_outcomes(scheme, cfg["trials"], cfg["seed"])
    ok_all = True
    lines = [f"spec_version {FORMAT_VERSION}", f"monte carlo: trials={run.trials} seed={cfg['seed']}"]
    worst_mc = 0.0
    mc_ok = True
    for i, row in ((PHOTON, exact.p_given_photon), (VACUUM, exact.p_given_vacuum)):
        n = int(run.counts[i].sum())
        if n == 0:
            lines.append(f"  input {i}: never drawn, skipped")
            continue
        dev = np.abs(run.frequencies(i) - row)
        worst_mc = max(worst_mc, float(dev.max()))
        mc_ok &= bool(np.all(dev <= binomial_bound(row, n)))
    lines.append(f"  max |exact - empirical| = {worst_mc:.3e}  4-sigma bound: {'pass' if mc_ok else 'FAIL'}")
    ok_all &= mc_ok

    perfect = build_outcome_table(SchemeConfig(1, NoisyWZ(1.0, -1.0), detector, cfg["p"]))
    worst_dm = 0.0
    for q in (0.0, 1.0, cfg["p"]):
        got = cnot_oracle(np.diag([1.0 - q, q]), detector).outcomes
        want = q * perfect.p_given_photon + (1 - q) * perfect.p_given_vacuum
        worst_dm = max(worst_dm, float(np.max(np.abs(got - want))))
    plus = np.full((2, 2), 0.5)
    pops = np.real(np.diag(cnot_oracle(plus, detector).state.entries))
    super_ok = bool(np.allclose(pops, [0.5, 0, 0, 0.5], rtol=0, atol=1e-15))
    dm_ok = worst_dm < 1e-12
    lines.append(f"density matrix: max |exact - oracle| = {worst_dm:.3e}  1e-12 bound: {'pass' if dm_ok else 'FAIL'}")
    lines.append(f"  CNOT on (|0>+|1>)/sqrt2 populations {fmt_list(pops)}: {'pass' if super_ok else 'FAIL'}")
    ok_all &= dm_ok and super_ok
    lines.append("PASS" if ok_all else "FAIL")
    print("\n".join(lines))
    return 0 if ok_all else 1


def fmt_list(v) -> str:
    return "[" + ", ".join(f"{x:.6g}" for x in v) + "]"


COMMANDS = {
    "detect": (cmd_detect, DEFAULTS),
    "mlcompare": (cmd_mlcompare, DEFAULTS),
    "region": (cmd_region, DEFAULTS),
    "figure": (cmd_figure, {"format": "csv"}),
    "oracle": (cmd_oracle, {**ORACLE_DEFAULTS, "format": "csv"}),
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        func, defaults = COMMANDS[args.command]
        cfg = resolve(args, defaults)
        return func(cfg)
    except (UsageError, ValueError) as exc:
        msg = " ".join(str(exc).split())
        print(f"error: {msg}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc.strerror or exc}: {exc.filename or ''}".rstrip(": "), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
