"""Deterministic parameter sweeps and the figure data sets.

A sweep is a row-major product over named axes. Every grid point is resolved
through :func:`tipblockade.config.resolve_params`, so axis names and fixed
parameters use the flat config keys (``r_nm``, ``phi_um``,
``chi_over_gamma1``...). Failing points are kept as rows whose ``status``
column names the error.
"""
from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from . import __version__, analytic, liouville
from .config import SYSTEM_KEYS, resolve_params
from .errors import IdealNotBlockading, TipBlockadeError
from .model import SystemParams

ENGINES = ("master-equation", "analytic", "both", "none")
DELTA_SCAN = np.linspace(-6.0, 6.0, 241)
R_TOLERANCE = 0.01
PROB_STATES = [(m, k - m) for k in range(4) for m in range(k, -1, -1)]

COLUMN_ORDER = (
    ["panel", "family"]
    + list(SYSTEM_KEYS)
    + [
        "abs_j_over_gamma1",
        "abs_j_sq_over_gamma1_sq",
        "gamma_total_over_gamma1",
        "status",
        "n_cw",
        "g2_0",
        "g3_0",
        "g4_0",
    ]
    + [f"p{m}{n}" for m, n in PROB_STATES]
    + ["g2_0_analytic", "p10_analytic", "p01_analytic", "p20_analytic", "R", "R_analytic", "tau_over_gamma1_inv", "g2_tau"]
)
RESOLVED_KEYS = ("delta_over_gamma1", "chi_over_gamma1", "xi_over_gamma1", "j0_over_gamma1", "r_nm", "phi_um")


@dataclass(frozen=True)
class Axis:
    name: str
    min: float | None = None
    max: float | None = None
    points: int = 2
    scale: str = "linear"
    values: tuple | None = None

    def __post_init__(self):
        if self.name not in SYSTEM_KEYS:
            raise ValueError(f"unknown axis {self.name!r}")
        if self.values is None:
            if self.points < 2 or self.min is None or self.max is None:
                raise ValueError(f"axis {self.name}: need min, max and points >= 2")
            if self.scale not in ("linear", "log"):
                raise ValueError(f"axis {self.name}: scale must be linear or log")
        elif len(self.values) < 1:
            raise ValueError(f"axis {self.name}: empty value list")

    def grid(self) -> list[float]:
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.scale == "log":
            return [float(v) for v in np.geomspace(self.min, self.max, self.points)]
        return [float(v) for v in np.linspace(self.min, self.max, self.points)]


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple = ()
    fixed: dict = field(default_factory=dict)
    engine: str = "both"
    n_max: int = liouville.DEFAULT_N_MAX
    orders: tuple = (2,)
    family: str = ""
    panel: str = ""

    def __post_init__(self):
        if self.engine not in ENGINES:
            raise ValueError(f"engine must be one of {ENGINES}")
        names = [a.name for a in self.axes]
        if len(set(names)) != len(names):
            raise ValueError("duplicate axis names")
        for key in self.fixed:
            if key not in SYSTEM_KEYS:
                raise ValueError(f"unknown fixed parameter {key!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["axes"] = [asdict(a) for a in self.axes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SweepSpec":
        d = dict(d)
        axes = tuple(Axis(**{**a, "values": tuple(a["values"]) if a.get("values") is not None else None}) for a in d.pop("axes", ()))
        if "orders" in d:
            d["orders"] = tuple(d["orders"])
        return cls(axes=axes, **d)

    def points(self) -> list[dict]:
        grids = [a.grid() for a in self.axes]
        names = [a.name for a in self.axes]
        return [{**self.fixed, **dict(zip(names, combo))} for combo in itertools.product(*grids)]


def spec_hash(specs) -> str:
    blob = json.dumps([s.to_dict() for s in specs], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _derived_columns(p: SystemParams) -> dict:
    j = abs(p.j_total)
    return {
        "delta_over_gamma1": p.delta,
        "chi_over_gamma1": p.chi,
        "xi_over_gamma1": p.xi,
        "j0_over_gamma1": p.j0,
        "r_nm": p.geom.r if p.geom else None,
        "phi_um": p.geom.phi if p.geom else None,
        "abs_j_over_gamma1": j,
        "abs_j_sq_over_gamma1_sq": j * j,
        "gamma_total_over_gamma1": p.gamma_total,
    }


def _numeric_columns(p: SystemParams, n_max: int, orders) -> dict:
    rho = liouville.solve_point(p, n_max)
    probs = liouville.photon_probs(rho)
    row = {"n_cw": liouville.mean_photons(rho)}
    for n in orders:
        row[f"g{n}_0"] = liouville.gn_zero(rho, n)
    for m, n in PROB_STATES:
        row[f"p{m}{n}"] = probs.get((m, n), 0.0)
    return row


def _analytic_columns(p: SystemParams) -> dict:
    p10, p01 = analytic.single_photon_probs(p)
    return {
        "g2_0_analytic": analytic.g2_closed_form(p),
        "p10_analytic": p10,
        "p01_analytic": p01,
        "p20_analytic": abs(analytic.c20_closed_form(p)) ** 2,
    }


def evaluate_point(flat: dict, engine: str = "both", n_max: int = liouville.DEFAULT_N_MAX, orders=(2,)) -> dict:
    """One sweep row: the given inputs, resolved parameters and engine outputs."""
    row = dict(flat)
    try:
        p = resolve_params(flat)
        row.update(_derived_columns(p))
        if engine in ("master-equation", "both"):
            row.update(_numeric_columns(p, n_max, orders))
        if engine in ("analytic", "both"):
            row.update(_analytic_columns(p))
        row["status"] = "ok"
    except (TipBlockadeError, ValueError, ArithmeticError) as exc:
        row["status"] = f"error:{type(exc).__name__}"
    return row


def _evaluate_star(args):
    return evaluate_point(*args)


@dataclass
class SweepResult:
    rows: list
    specs: list
    metadata: dict = field(default_factory=dict)

    @property
    def columns(self) -> list[str]:
        present = set().union(*(r.keys() for r in self.rows)) if self.rows else set()
        ordered = [c for c in COLUMN_ORDER if c in present]
        return ordered + sorted(present - set(ordered))

    def select(self, **match) -> list[dict]:
        return [r for r in self.rows if all(r.get(k) == v for k, v in match.items())]

    def column(self, name: str, rows=None) -> np.ndarray:
        rows = self.rows if rows is None else rows
        return np.array([np.nan if r.get(name) is None else r[name] for r in rows], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        cols = self.columns
        writer.writerow(cols)
        for row in self.rows:
            writer.writerow([_fmt(row.get(c)) for c in cols])
        return buf.getvalue()

    def sidecar(self, seedless: bool = False) -> dict:
        meta = dict(self.metadata)
        meta.update(
            spec_hash=spec_hash(self.specs),
            code_version=__version__,
            rows=len(self.rows),
            columns=self.columns,
        )
        if not seedless:
            epoch = os.environ.get("SOURCE_DATE_EPOCH")
            stamp = float(epoch) if epoch else time.time()
            meta["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(stamp))
        return {"specs": [s.to_dict() for s in self.specs], "metadata": meta}

    def write(self, outdir, stem: str, seedless: bool = False) -> tuple[Path, Path]:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        csv_path = outdir / f"{stem}.csv"
        json_path = outdir / f"{stem}.spec.json"
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())
        with open(json_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(self.sidecar(seedless), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path

    @classmethod
    def concat(cls, results, **metadata) -> "SweepResult":
        rows, specs = [], []
        for res in results:
            rows.extend(res.rows)
            specs.extend(res.specs)
        return cls(rows, specs, metadata)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def run_sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    jobs = [(pt, spec.engine, spec.n_max, spec.orders) for pt in spec.points()]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_evaluate_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        rows = [_evaluate_star(j) for j in jobs]
    for row in rows:
        if spec.family:
            row["family"] = spec.family
        if spec.panel:
            row["panel"] = spec.panel
    return SweepResult(rows, [spec])


# efficiency ratio --------------------------------------------------------


def g2_at(p: SystemParams, engine: str = "master-equation", n_max: int = liouville.DEFAULT_N_MAX) -> float:
    if engine == "analytic":
        return analytic.g2_closed_form(p)
    return liouville.gn_zero(liouville.solve_point(p, n_max), 2)


def min_g2_over_detuning(p: SystemParams, delta_grid=(0.0,), engine="master-equation", n_max=liouville.DEFAULT_N_MAX, refine=False) -> tuple[float, float]:
    """Minimum of g2(0) over the detuning grid; ``(delta_min, g2_min)``.

    With ``refine`` a golden-section search polishes an interior grid minimum.
    """
    grid = np.asarray(delta_grid, dtype=float)
    vals = np.array([g2_at(p.replace(delta=float(d)), engine, n_max) for d in grid])
    i = int(np.argmin(vals))
    best = (float(grid[i]), float(vals[i]))
    if refine and 0 < i < len(grid) - 1:
        res = minimize_scalar(
            lambda d: g2_at(p.replace(delta=float(d)), engine, n_max),
            bracket=(grid[i - 1], grid[i], grid[i + 1]),
            method="golden",
            tol=1e-8,
        )
        if res.fun < best[1]:
            best = (float(res.x), float(res.fun))
    return best


def efficiency_ratio(params_with_tip: SystemParams, params_ideal: SystemParams, delta_grid=(0.0,), engine="master-equation", n_max=liouville.DEFAULT_N_MAX, refine=False) -> float:
    """Single-photon purity relative to the ideal cavity, clipped below at zero.

    ``R = max(0, (1 - min g2_device) / (1 - min g2_ideal))`` with both minima
    taken over ``delta_grid``. The default grid is resonance only (Delta = 0).
    """
    if not (math.isclose(params_with_tip.chi, params_ideal.chi) and math.isclose(params_with_tip.xi, params_ideal.xi)):
        raise ValueError("device and ideal parameters must share chi and xi")
    _, g_ideal = min_g2_over_detuning(params_ideal, delta_grid, engine, n_max, refine)
    _, g_dev = min_g2_over_detuning(params_with_tip, delta_grid, engine, n_max, refine)
    return _ratio(g_dev, g_ideal)


def _ratio(g_dev: float, g_ideal: float) -> float:
    if 1.0 - g_ideal <= 0:
        raise IdealNotBlockading(f"ideal cavity min g2 = {g_ideal:.4g} >= 1")
    return max(0.0, (1.0 - g_dev) / (1.0 - g_ideal))


def _attach_ratio(result: SweepResult, g_ideal: float, g_ideal_analytic: float | None):
    for row in result.rows:
        if row.get("status") != "ok":
            continue
        if "g2_0" in row:
            row["R"] = _ratio(row["g2_0"], g_ideal)
        if g_ideal_analytic is not None and "g2_0_analytic" in row:
            row["R_analytic"] = _ratio(row["g2_0_analytic"], g_ideal_analytic)
        for key in ("R", "R_analytic"):
            if key in row and row[key] > 1 + R_TOLERANCE:
                raise TipBlockadeError(f"efficiency {key}={row[key]:.4f} exceeds 1 + {R_TOLERANCE}")


# figure data sets --------------------------------------------------------

FIG1_CHI = 5.3
MARKED_PHI_UM = (0.21, 0.27, 0.33)


def fig1_detuning_scan(n_max=liouville.DEFAULT_N_MAX, workers=1) -> SweepResult:
    """g2(0) and N_cw versus detuning for the ideal, bare and tip-restored cavity."""
    delta = Axis("delta_over_gamma1", -6.0, 6.0, 241)
    families = {
        "ideal": {"j0_over_gamma1": 0.0, "tip": "none"},
        "bare": {"j0_over_gamma1": 1.8, "tip": "none"},
        "tip": {"j0_over_gamma1": 1.8, "tip": "decoupled"},
    }
    parts = []
    for name, fixed in families.items():
        spec = SweepSpec((delta,), {"chi_over_gamma1": FIG1_CHI, **fixed}, "both", n_max, (2,), family=name)
        parts.append(run_sweep(spec, workers))
    return SweepResult.concat(parts, figure=1)


def fig1_delay_curves(n_max=liouville.DEFAULT_N_MAX, taus=None) -> SweepResult:
    """g2(tau) at resonance for the three cavity families."""
    taus = np.linspace(0.0, 10.0, 101) if taus is None else np.asarray(taus)
    families = {
        "ideal": {"j0_over_gamma1": 0.0, "tip": "none"},
        "bare": {"j0_over_gamma1": 1.8, "tip": "none"},
        "tip": {"j0_over_gamma1": 1.8, "tip": "decoupled"},
    }
    rows, specs = [], []
    for name, fixed in families.items():
        flat = {"chi_over_gamma1": FIG1_CHI, "delta_over_gamma1": 0.0, **fixed}
        specs.append(SweepSpec((Axis("delta_over_gamma1", values=(0.0,)),), {k: v for k, v in flat.items() if k != "delta_over_gamma1"}, "master-equation", n_max, family=name))
        p = resolve_params(flat)
        L = liouville.build_liouvillian(liouville.fock.TwoModeBasis(n_max), p)
        rho = liouville.steady_state(L)
        for tau, g in zip(taus, liouville.g2_tau(L, rho, taus)):
            rows.append({"family": name, **_derived_columns(p), "tip": flat["tip"], "tau_over_gamma1_inv": float(tau), "g2_tau": float(g), "status": "ok"})
    return SweepResult(rows, specs, {"figure": "1-delay"})


def fig2_phi_chi_map(n_max=liouville.DEFAULT_N_MAX, workers=1) -> SweepResult:
    """g2(0) and N_cw over tip azimuth and Kerr strength at the decoupling radius.

    Kerr strengths are given relative to the total loss at that radius.
    """
    p0 = analytic.with_decoupled_tip(SystemParams())
    r_star = p0.geom.r
    phi = Axis("phi_um", 0.10, 0.45, 141)
    coarse = SweepSpec(
        (Axis("chi_over_gamma", values=(0.1, 0.5, 3.0, 5.3)), phi),
        {"r_nm": r_star},
        "both",
        n_max,
        panel="a",
    )
    fine = SweepSpec(
        (Axis("phi_um", values=MARKED_PHI_UM), Axis("chi_over_gamma", 0.05, 10.0, 41, "log")),
        {"r_nm": r_star},
        "both",
        n_max,
        panel="b",
    )
    return SweepResult.concat([run_sweep(coarse, workers), run_sweep(fine, workers)], figure=2)


def fig3_mechanism_scan(n_max=liouville.DEFAULT_N_MAX, workers=1) -> SweepResult:
    """|J|^2 geometry map and radial scans of P_10, P_01 and g2(0)."""
    p0 = analytic.with_decoupled_tip(SystemParams())
    coupling_map = SweepSpec(
        (Axis("r_nm", 0.0, 600.0, 61), Axis("phi_um", 0.0, 1.0, 101)),
        {},
        "none",
        n_max,
        panel="b",
    )
    radial = SweepSpec(
        (Axis("phi_um", values=(p0.geom.phi, 0.21)), Axis("r_nm", 0.0, 1000.0, 201)),
        {"chi_over_gamma1": FIG1_CHI},
        "both",
        n_max,
        panel="cd",
    )
    return SweepResult.concat([run_sweep(coupling_map, workers), run_sweep(radial, workers)], figure=3)


def fig4_robustness(n_max=liouville.DEFAULT_N_MAX, workers=1) -> SweepResult:
    """Efficiency R over tip position, and versus J0 with and without the tip."""
    ideal = resolve_params({"chi_over_gamma1": FIG1_CHI, "j0_over_gamma1": 0.0})
    g_ideal = g2_at(ideal, "master-equation", n_max)
    g_ideal_an = analytic.g2_closed_form(ideal)

    position_map = SweepSpec(
        (Axis("r_nm", 200.0, 500.0, 31), Axis("phi_um", 0.15, 0.40, 26)),
        {"chi_over_gamma1": FIG1_CHI, "j0_over_gamma1": 1.8},
        "both",
        n_max,
        panel="a",
    )
    j0 = Axis("j0_over_gamma1", 0.0, 2.5, 51)
    with_tip = SweepSpec((j0,), {"chi_over_gamma1": FIG1_CHI, "tip": "decoupled"}, "both", n_max, family="tip", panel="b")
    no_tip = SweepSpec((j0,), {"chi_over_gamma1": FIG1_CHI, "tip": "none"}, "both", n_max, family="no-tip", panel="b")
    parts = [run_sweep(s, workers) for s in (position_map, with_tip, no_tip)]
    for part in parts:
        _attach_ratio(part, g_ideal, g_ideal_an)
    return SweepResult.concat(parts, figure=4, g2_ideal=g_ideal, g2_ideal_analytic=g_ideal_an)


FIGURES = {1: fig1_detuning_scan, 2: fig2_phi_chi_map, 3: fig3_mechanism_scan, 4: fig4_robustness}
