"""Parameter sweeps, gain regions and figure datasets.

A sweep evaluates one comparison between the copier scheme and the bare
detector (same eta and xi) over a rectangular grid of two parameters.  The
gain boundary is located per column: wherever the gain verdict flips between
neighbouring cells along the y axis, the crossing is refined by bisection.

Copier parameters come either as (eps, mu) for the noisy Wootters-Zurek
copier or as (A, B); an (A, B) point is realized by ``GeneralAB.from_ab``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import FORMAT_VERSION
from .devices import ab_populations, detector_matrix, general_ab_matrix, noisy_wz_matrix
from .metrics import (
    base_info,
    base_rows,
    eta_e_limit,
    eta_e_recursion,
    invert_base_info,
    ml_success_rows,
    mutual_information_rows,
)
from .scheme import MAX_EXACT_LAYERS, cascade_rows

DOMAINS = {
    "eta": (0.0, 1.0),
    "eps": (0.0, 1.0),
    "mu": (-1.0, 1.0),
    "xi": (0.0, 1.0),
    "p": (0.0, 1.0),
    "A": (0.0, 2.0),
    "B": (0.0, 2.0),
}
WZ_PARAMS = ("eta", "eps", "mu", "xi", "p")
AB_PARAMS = ("eta", "xi", "p", "A", "B")
COMPARISONS = ("info-gain", "ml-gain", "eta_e-ratio")
THRESHOLD = {"info-gain": 0.0, "ml-gain": 0.0, "eta_e-ratio": 1.0}
# rounding noise on exact ties must not read as gain
MARGIN = {"info-gain": 1e-12, "ml-gain": 1e-12, "eta_e-ratio": 1e-9}

BOUNDARY_TOL = 1e-6
DEFAULT_STEPS = 201
_CHUNK_ENTRIES = 2**21


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    steps: int = DEFAULT_STEPS

    @property
    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)

    @property
    def step(self) -> float:
        return (self.hi - self.lo) / (self.steps - 1)


def _check_value(name: str, value: float) -> None:
    lo, hi = DOMAINS[name]
    if name == "xi":
        ok = lo <= value < hi
    else:
        ok = lo <= value <= hi
    if not ok:
        raise ValueError(f"{name}={value!r} outside its domain [{lo}, {hi}{')' if name == 'xi' else ']'}")


@dataclass(frozen=True)
class SweepSpec:
    x: Axis
    y: Axis
    fixed: Mapping[str, float] = field(default_factory=dict)
    layers: int = 1
    comparison: str = "info-gain"

    def __post_init__(self):
        for ax in (self.x, self.y):
            if ax.name not in DOMAINS:
                raise ValueError(f"unknown sweep parameter {ax.name!r}")
            if ax.steps < 2:
                raise ValueError(f"{ax.name} axis needs at least 2 steps")
            if not ax.lo < ax.hi:
                raise ValueError(f"{ax.name} axis range must be increasing")
            _check_value(ax.name, ax.lo)
            _check_value(ax.name, ax.hi)
        if self.x.name == self.y.name:
            raise ValueError("x and y must be different parameters")
        if self.comparison not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.comparison!r}")
        for name, value in self.fixed.items():
            if name not in DOMAINS:
                raise ValueError(f"unknown parameter {name!r}")
            _check_value(name, value)
        missing = [n for n in self.parameters if n not in self.fixed and n not in (self.x.name, self.y.name)]
        if missing:
            raise ValueError(f"missing fixed value for {', '.join(missing)}")
        if int(self.layers) != self.layers or self.layers < 0:
            raise ValueError(f"N={self.layers!r} must be a nonnegative integer")
        if self.layers > MAX_EXACT_LAYERS:
            if self.uses_ab or self.comparison == "ml-gain" or not self._noiseless():
                raise ValueError(
                    f"N={self.layers} needs exact enumeration (limit {MAX_EXACT_LAYERS}); "
                    "larger N is only available for xi=0, mu=-1 information comparisons"
                )
        object.__setattr__(self, "fixed", dict(self.fixed))

    @property
    def uses_ab(self) -> bool:
        names = {self.x.name, self.y.name} | set(self.fixed)
        return bool({"A", "B"} & names)

    @property
    def parameters(self) -> tuple[str, ...]:
        return AB_PARAMS if self.uses_ab else WZ_PARAMS

    def _noiseless(self) -> bool:
        axes = {self.x.name, self.y.name}
        return not ({"xi", "mu"} & axes) and self.fixed.get("xi") == 0 and self.fixed.get("mu") == -1

    def to_dict(self) -> dict:
        return {
            "x": vars(self.x),
            "y": vars(self.y),
            "fixed": {k: self.fixed[k] for k in self.parameters if k in self.fixed},
            "layers": self.layers,
            "comparison": self.comparison,
        }


def _transfer(params: Mapping[str, np.ndarray], ab: bool) -> np.ndarray:
    if ab:
        return general_ab_matrix(*ab_populations(params["A"], params["B"]))
    return noisy_wz_matrix(params["eps"], params["mu"])


def scheme_rows(params: Mapping[str, np.ndarray], layers: int, ab: bool = False) -> np.ndarray:
    return cascade_rows(_transfer(params, ab), detector_matrix(params["eta"], params["xi"]), layers)


def scheme_info(params: Mapping[str, np.ndarray], layers: int, ab: bool = False) -> np.ndarray:
    """Mutual information of the scheme at a batch of 1-D parameter arrays."""
    p = params["p"]
    if layers > MAX_EXACT_LAYERS:
        return base_info(eta_e_recursion(params["eps"], params["eta"], layers), p)
    n_out = 2 ** (2**layers)
    size = len(p)
    chunk = max(1, _CHUNK_ENTRIES // n_out)
    out = np.empty(size)
    for start in range(0, size, chunk):
        sl = slice(start, start + chunk)
        part = {k: v[sl] for k, v in params.items()}
        out[sl] = mutual_information_rows(scheme_rows(part, layers, ab), part["p"])
    return out


def _safe_eta_e(i_m: np.ndarray, p: np.ndarray) -> np.ndarray:
    interior = (p > 0) & (p < 1)
    eta_e = np.full(i_m.shape, np.nan)
    if interior.any():
        eta_e[interior] = invert_base_info(i_m[interior], p[interior])
    return eta_e


def comparison_values(params: Mapping[str, np.ndarray], layers: int, comparison: str, ab: bool = False) -> np.ndarray:
    """Compared quantity at each point of a batch of 1-D parameter arrays."""
    p = params["p"]
    bare = base_rows(params["eta"], params["xi"])
    if comparison == "ml-gain":
        n_out = 2 ** (2**layers)
        chunk = max(1, _CHUNK_ENTRIES // n_out)
        q = np.empty(len(p))
        for start in range(0, len(p), chunk):
            sl = slice(start, start + chunk)
            part = {k: v[sl] for k, v in params.items()}
            q[sl] = ml_success_rows(scheme_rows(part, layers, ab), part["p"])
        return q - ml_success_rows(bare, p)
    i_scheme = scheme_info(params, layers, ab)
    i_bare = mutual_information_rows(bare, p)
    if comparison == "info-gain":
        return i_scheme - i_bare
    num = _safe_eta_e(i_scheme, p)
    den = _safe_eta_e(i_bare, p)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)


def is_gain(values: np.ndarray, comparison: str) -> np.ndarray:
    with np.errstate(invalid="ignore"):
        return np.asarray(values) > THRESHOLD[comparison] + MARGIN[comparison]


@dataclass(frozen=True)
class RegionGrid:
    spec: SweepSpec
    x: np.ndarray
    y: np.ndarray
    values: np.ndarray
    gain: np.ndarray
    boundary: np.ndarray

    def column_boundary(self, x: float) -> np.ndarray:
        """Crossings (y values) in the column at ``x``."""
        return self.boundary[np.isclose(self.boundary[:, 0], x, rtol=0, atol=1e-12), 1]

    def grid_rows(self):
        for i, xv in enumerate(self.x):
            for j, yv in enumerate(self.y):
                yield xv, yv, self.values[i, j], int(self.gain[i, j])


def _point_params(spec: SweepSpec, xs: np.ndarray, ys: np.ndarray) -> dict:
    params = {name: np.full(xs.shape, float(spec.fixed[name])) for name in spec.parameters if name in spec.fixed}
    params[spec.x.name] = xs.astype(float)
    params[spec.y.name] = ys.astype(float)
    return params


def evaluate(spec: SweepSpec, xs, ys) -> np.ndarray:
    xs, ys = np.broadcast_arrays(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float))
    shape = xs.shape
    params = _point_params(spec, xs.ravel(), ys.ravel())
    return comparison_values(params, spec.layers, spec.comparison, spec.uses_ab).reshape(shape)


def _refine_crossings(spec: SweepSpec, xs, lo, hi, lo_gain, tol=BOUNDARY_TOL) -> np.ndarray:
    lo = lo.astype(float).copy()
    hi = hi.astype(float).copy()
    while len(lo) and np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        same = is_gain(evaluate(spec, xs, mid), spec.comparison) == lo_gain
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return 0.5 * (lo + hi)


def extract_boundary(spec: SweepSpec, x: np.ndarray, y: np.ndarray, values: np.ndarray, gain: np.ndarray) -> np.ndarray:
    flips = (gain[:, 1:] != gain[:, :-1]) & np.isfinite(values[:, 1:]) & np.isfinite(values[:, :-1])
    ix, jy = np.nonzero(flips)
    if len(ix) == 0:
        return np.empty((0, 2))
    yb = _refine_crossings(spec, x[ix], y[jy], y[jy + 1], gain[ix, jy])
    return np.column_stack([x[ix], yb])


def run_sweep(spec: SweepSpec) -> RegionGrid:
    x, y = spec.x.values, spec.y.values
    X, Y = np.meshgrid(x, y, indexing="ij")
    values = evaluate(spec, X, Y)
    gain = is_gain(values, spec.comparison)
    boundary = extract_boundary(spec, x, y, values, gain)
    return RegionGrid(spec, x, y, values, gain, boundary)


def boundary_shift(a: RegionGrid, b: RegionGrid) -> float:
    """Largest y distance between matching crossings of columns shared by both grids.

    Infinite when a shared column has a different number of crossings.
    """
    worst = 0.0
    for xv in a.x:
        if not np.any(np.isclose(b.x, xv, rtol=0, atol=1e-12)):
            continue
        ya, yb = np.sort(a.column_boundary(xv)), np.sort(b.column_boundary(xv))
        if len(ya) != len(yb):
            return math.inf
        if len(ya):
            worst = max(worst, float(np.max(np.abs(ya - yb))))
    return worst


# -- monotonicity of gain thresholds ------------------------------------------------


def min_gain_eps(eta: float, fixed: Mapping[str, float], layers: int = 1, comparison: str = "info-gain", steps: int = 401) -> float:
    """Smallest copier efficiency giving gain at this eta (inf if none)."""
    spec = SweepSpec(Axis("eta", 0.0, 1.0, 2), Axis("eps", 0.0, 1.0, steps), dict(fixed), layers, comparison)
    eps = spec.y.values
    gain = is_gain(evaluate(spec, np.full(steps, eta), eps), comparison)
    if not gain.any():
        return math.inf
    j = int(np.argmax(gain))
    if j == 0:
        return 0.0
    return float(_refine_crossings(spec, np.array([eta]), eps[[j - 1]], eps[[j]], np.array([False]))[0])


FAMILIES = {
    "xi": {"members": (0.0, 0.01, 0.1), "fixed": {"mu": -1.0, "p": 0.5}, "reference_eta": 0.6, "strict": False},
    "mu": {"members": (-1.0, 0.0, 1.0), "fixed": {"xi": 0.0, "p": 0.5}, "reference_eta": 0.4, "strict": True},
    "p": {"members": (0.9, 0.5, 0.1), "fixed": {"xi": 0.0, "mu": 0.0}, "reference_eta": 0.4, "strict": True},
}
# p = 0.4, 0.5, 0.6 thresholds must sit within this fraction of the 0.1..0.9 spread
P_CLOSENESS = 0.25
REPORT_ETAS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)


@dataclass
class MonotonicityReport:
    family: str
    etas: tuple
    eps_min: dict
    checks: list

    @property
    def passed(self) -> bool:
        return all(ok for _, ok in self.checks)

    def lines(self) -> list[str]:
        return [f"{'PASS' if ok else 'FAIL'} {desc}" for desc, ok in self.checks]


def _ordered(vals: Sequence[float], strict: bool) -> bool:
    pairs = zip(vals, vals[1:])
    return all(a < b for a, b in pairs) if strict else all(a <= b for a, b in pairs)


def boundary_monotonicity_report(family: str, etas: Sequence[float] = REPORT_ETAS) -> MonotonicityReport:
    """Minimal gain eps per family member, with the expected ordering checked.

    The ordering is required at the family's reference eta; at the other
    etas it is only tallied.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(FAMILIES)}")
    fam = FAMILIES[family]
    ref = fam["reference_eta"]
    members = list(fam["members"])
    if family == "p":
        members += [0.4, 0.6]
    etas = tuple(sorted(set(etas) | {ref}))
    eps_min = {}
    for m in members:
        fixed = dict(fam["fixed"], **{family: m})
        eps_min[m] = [min_gain_eps(e, fixed) for e in etas]
    i_ref = etas.index(ref)
    order = fam["members"]
    ref_vals = [eps_min[m][i_ref] for m in order]
    rel = "<" if fam["strict"] else "<="
    checks = [(
        f"{family} family at eta={ref}: " + f" {rel} ".join(f"eps_min({m:g})={v:.6f}" for m, v in zip(order, ref_vals)),
        _ordered(ref_vals, fam["strict"]),
    )]
    held = sum(_ordered([eps_min[m][i] for m in order], fam["strict"]) for i in range(len(etas)))
    checks.append((f"{family} family ordering holds at {held}/{len(etas)} eta values (informational)", True))
    if family == "p":
        mid = [eps_min[m][i_ref] for m in (0.4, 0.5, 0.6)]
        spread = max(mid) - min(mid)
        full = eps_min[0.1][i_ref] - eps_min[0.9][i_ref]
        checks.append((
            f"p in {{0.4,0.5,0.6}} spread {spread:.6f} <= {P_CLOSENESS} x p 0.1..0.9 spread {full:.6f}",
            bool(spread <= P_CLOSENESS * full),
        ))
    return MonotonicityReport(family, etas, eps_min, checks)


# -- figure datasets ---------------------------------------------------------------------


@dataclass
class Table:
    columns: tuple
    rows: list


@dataclass
class Dataset:
    figure: str
    tables: dict
    metadata: dict

    def write(self, out_dir: Path | str) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, table in self.tables.items():
            path = out / f"{self.figure}_{name}.csv"
            write_csv(path, table.columns, table.rows)
            written.append(path)
        sidecar = out / f"{self.figure}.json"
        meta = {"spec_version": FORMAT_VERSION, "figure": self.figure, "files": [p.name for p in written], **self.metadata}
        sidecar.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
        written.append(sidecar)
        return written

    def to_json_dict(self) -> dict:
        return {
            "spec_version": FORMAT_VERSION,
            "figure": self.figure,
            "metadata": self.metadata,
            "tables": {
                name: [dict(zip(t.columns, (_jsonable(v) for v in row))) for row in t.rows]
                for name, t in self.tables.items()
            },
        }


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _jsonable(v):
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        v = float(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def write_csv(path: Path, columns: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def grid_tables(grid: RegionGrid, prefix: str = "") -> dict:
    xn, yn = grid.spec.x.name, grid.spec.y.name
    return {
        f"{prefix}grid": Table((xn, yn, "value", "gain"), list(grid.grid_rows())),
        f"{prefix}boundary": Table((xn, yn), [tuple(pt) for pt in grid.boundary]),
    }


def _grid_meta(grid: RegionGrid) -> dict:
    return {**grid.spec.to_dict(), "boundary_points": int(len(grid.boundary))}


FIG5_MU = (-1.0, -0.5, 0.0, 0.5, 1.0)
FIG6_P = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
FIG7_P = (0.1, 0.3, 0.5, 0.7, 0.9)
FIG7_ETA = 1e-3
LANDMARKS = {"wootters-zurek": (2.0, 0.0), "uqcm": (5.0 / 3.0, 1.0 / 3.0)}


def _eta_eps_sweep(fixed, layers=1, comparison="info-gain", steps=DEFAULT_STEPS, eta_lo=0.0) -> SweepSpec:
    return SweepSpec(Axis("eta", eta_lo, 1.0, steps), Axis("eps", 0.0, 1.0, steps), fixed, layers, comparison)


def _family_dataset(figure: str, family: str, members, fixed, steps: int, chosen_note: Optional[str] = None) -> Dataset:
    tables, meta = {}, {"family": family, "members": list(members), "sweeps": {}}
    for m in members:
        grid = run_sweep(_eta_eps_sweep(dict(fixed, **{family: m}), steps=steps))
        tag = f"{family}{m:g}_"
        tables.update(grid_tables(grid, tag))
        meta["sweeps"][f"{m:g}"] = _grid_meta(grid)
    if chosen_note:
        meta["note"] = chosen_note
    return Dataset(figure, tables, meta)


def _fig2(steps):
    grid = run_sweep(_eta_eps_sweep({"xi": 0.0, "mu": -1.0, "p": 0.5}, layers=3, comparison="eta_e-ratio", steps=steps, eta_lo=0.01))
    i_max = np.unravel_index(np.nanargmax(grid.values), grid.values.shape)
    meta = _grid_meta(grid)
    meta["max_ratio"] = {"eta": float(grid.x[i_max[0]]), "eps": float(grid.y[i_max[1]]), "ratio": float(grid.values[i_max])}
    return Dataset("fig2", grid_tables(grid), meta)


def _fig3(steps):
    eta = 0.6
    eps = np.linspace(0.0, 1.0, steps)
    tables = {}
    for N in range(4):
        params = {"eta": np.full(steps, eta), "eps": eps, "mu": np.full(steps, -1.0), "xi": np.zeros(steps), "p": np.full(steps, 0.5)}
        eta_e = invert_base_info(scheme_info(params, N), params["p"])
        tables[f"N{N}"] = Table(("eps", "eta_e"), list(zip(eps, eta_e)))
    tables["limit"] = Table(("eps", "eta_e"), [(e, eta_e_limit(e)) for e in eps])
    meta = {"eta": eta, "xi": 0.0, "mu": -1.0, "p": 0.5, "layers": [0, 1, 2, 3], "steps": steps,
            "limit": "2 - 1/eps, floored at 0"}
    return Dataset("fig3", tables, meta)


def _fig7(steps):
    tables, meta = {}, {"eta": FIG7_ETA, "xi": 0.0, "layers": 1, "members": list(FIG7_P), "sweeps": {},
                        "landmarks": {k: list(v) for k, v in LANDMARKS.items()}}
    marks = []
    for p in FIG7_P:
        spec = SweepSpec(Axis("A", 0.0, 2.0, steps), Axis("B", 0.0, 2.0, steps), {"eta": FIG7_ETA, "xi": 0.0, "p": p}, 1, "info-gain")
        grid = run_sweep(spec)
        tables.update(grid_tables(grid, f"p{p:g}_"))
        meta["sweeps"][f"{p:g}"] = _grid_meta(grid)
        for name, (A, B) in LANDMARKS.items():
            v = float(evaluate(spec, A, B))
            marks.append((name, A, B, p, v, bool(is_gain(v, "info-gain"))))
    tables["landmarks"] = Table(("landmark", "A", "B", "p", "value", "gain"), marks)
    return Dataset("fig7", tables, meta)


FIGURES = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7")


def figure_preset(fig_id: str, steps: int = DEFAULT_STEPS) -> Dataset:
    if fig_id == "fig2":
        return _fig2(steps)
    if fig_id == "fig3":
        return _fig3(steps)
    if fig_id == "fig4":
        return _family_dataset("fig4", "xi", (0.0, 0.01, 0.1), {"mu": -1.0, "p": 0.5}, steps)
    if fig_id == "fig5":
        return _family_dataset("fig5", "mu", FIG5_MU, {"xi": 0.0, "p": 0.5}, steps,
                               "mu = -0.5 and 0.5 are evenly spaced intermediates chosen for this dataset")
    if fig_id == "fig6":
        return _family_dataset("fig6", "p", FIG6_P, {"xi": 0.0, "mu": 0.0}, steps)
    if fig_id == "fig7":
        return _fig7(steps)
    raise ValueError(f"unknown figure {fig_id!r}; expected one of {', '.join(FIGURES)}")
