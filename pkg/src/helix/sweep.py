"""Parameter sweeps, log-log fits, inequality reports and serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from .balls import require_admissible
from .constructions import (SQRT2PI, ScalingParams, admissibility_report, build_branching,
                            build_uniform, build_vortex_array, scaling_s)
from .energy import EnergyKind, annulus_masks, disc_mask, energy_on_mask, eval_W, total_variation_on_mask
from .errors import ConsistencyError, DataError, HelixError, ParameterError, RegimeError
from .field import GridSpec, Rect, VectorField2D, VorticityMeasure, circulations

COMPETITORS = ("uniform", "branching", "vortex_array")
CSV_FIELDS = ("sigma", "theta", "eps", "competitor", "energy_kind", "bulk", "regularizer",
              "total", "s_value", "ratio", "grid_n", "runtime_ms")
DEFAULT_THETAS = (0.05, 0.1, 0.25, 0.5)


def default_grid_n(eps: float) -> int:
    return min(2048, max(256, math.ceil(8.0 / eps)))


def crossover_sigma(theta: float) -> float:
    """sigma where theta^2 equals sigma(|ln sigma|/|ln theta| + 1)."""
    lt = abs(math.log(theta))
    return math.exp(brentq(lambda ls: theta * theta - math.exp(ls) * (abs(ls) / lt + 1.0), -50.0, -1e-12))


def default_sigmas(theta: float, n: int = 9, decades: float = 2.0) -> list[float]:
    """n points over ``decades`` decades centred on the uniform/branching crossover."""
    c = math.log10(crossover_sigma(theta))
    return [float(v) for v in np.logspace(c - decades / 2, c + decades / 2, n)]


@dataclass
class SweepConfig:
    theta_list: list
    # one list for every theta, or {str(theta): list}
    sigma_list: list | dict
    eps_rule: dict = field(default_factory=lambda: {"kind": "proportional", "kappa": 0.1})
    grid_n: int | None = None
    energies: list = field(default_factory=lambda: ["E1"])
    competitors: list = field(default_factory=lambda: list(COMPETITORS))
    output: str | None = None
    format: str = "csv"
    # wall-clock timings make output non-reproducible, so they are opt-in
    timing: bool = False

    @classmethod
    def default(cls, **kw) -> "SweepConfig":
        sig = {repr(t): default_sigmas(t) for t in DEFAULT_THETAS}
        return cls(list(DEFAULT_THETAS), sig, **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "SweepConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        if d.get("sigma_list") is None and d.get("theta_list") is None:
            base = cls.default()
            d = {**asdict(base), **{k: v for k, v in d.items() if v is not None}}
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "SweepConfig":
        try:
            with open(path) as fh:
                return cls.from_dict(json.load(fh))
        except json.JSONDecodeError as e:
            raise ParameterError(f"{path}: invalid JSON ({e})") from None

    def sigmas_for(self, theta: float) -> list[float]:
        if isinstance(self.sigma_list, dict):
            for k, v in self.sigma_list.items():
                if math.isclose(float(k), theta, rel_tol=1e-12):
                    return [float(s) for s in v]
            raise ParameterError(f"no sigma list for theta={theta}")
        return [float(s) for s in self.sigma_list]

    def eps_for(self, sigma: float, index: int) -> float:
        kind = self.eps_rule.get("kind")
        if kind == "proportional":
            return float(self.eps_rule["kappa"]) * sigma
        if kind == "fixed":
            vals = self.eps_rule["values"]
            return float(vals[index] if isinstance(vals, list) else vals)
        raise ParameterError(f"unknown eps rule {kind!r}")

    def triples(self) -> list[tuple[float, float, float]]:
        out = []
        for t in self.theta_list:
            for i, s in enumerate(self.sigmas_for(float(t))):
                out.append((s, float(t), self.eps_for(s, i)))
        return out

    def validate(self):
        if self.eps_rule.get("kind") == "proportional" and not 0 < self.eps_rule.get("kappa", 0) < 1 / SQRT2PI:
            raise ParameterError("proportional eps rule needs 0 < kappa < 1/(sqrt(2) pi)")
        for c in self.competitors:
            if c not in COMPETITORS:
                raise ParameterError(f"unknown competitor {c!r}")
        for e in self.energies:
            EnergyKind(e)
        if self.format not in ("csv", "json"):
            raise ParameterError(f"format must be csv or json, got {self.format!r}")
        for s, t, e in self.triples():
            ScalingParams(s, t, e)
        return self


@dataclass
class SweepRecord:
    sigma: float
    theta: float
    eps: float
    competitor: str
    energy_kind: str
    bulk: float
    regularizer: float
    total: float
    s_value: float
    ratio: float
    grid_n: int
    runtime_ms: float
    skipped: str | None = None

    def row(self) -> dict:
        return {k: getattr(self, k) for k in CSV_FIELDS}


@dataclass
class FitResult:
    slope: float
    intercept: float
    stderr: float
    n_points: int


def _build(kind: str, p: ScalingParams, n: int):
    if kind == "uniform":
        return build_uniform(p, GridSpec.unit(n)), n
    if kind == "branching":
        return build_branching(p, GridSpec.unit(n)), n
    c = build_vortex_array(p)
    return c, int(round(1.0 / c.field.spec.h))


def _evaluate_triple(cfg: SweepConfig, triple) -> list[SweepRecord]:
    s, t, e = triple
    p = ScalingParams(s, t, e)
    sv = scaling_s(p)
    n = cfg.grid_n or default_grid_n(e)
    out: list[SweepRecord] = []
    for kind in cfg.competitors:
        t0 = time.perf_counter()
        try:
            comp, gn = _build(kind, p, n)
        except RegimeError as err:
            for ek in cfg.energies:
                out.append(SweepRecord(s, t, e, kind, ek, math.nan, math.nan, math.nan, sv, math.nan,
                                       n, 0.0, skipped=str(err)))
            continue
        rep = admissibility_report(comp)
        if not rep.passed:
            raise ConsistencyError(f"{kind} at sigma={s:g}, theta={t:g} failed admissibility: {rep}")
        for ek in cfg.energies:
            E = comp.energy(ek)
            ms = (time.perf_counter() - t0) * 1e3 if cfg.timing else 0.0
            out.append(SweepRecord(s, t, e, kind, EnergyKind(ek).value, E.bulk, E.regularizer, E.total,
                                   sv, E.total / sv, gn, ms))
    for ek in cfg.energies:
        cands = [r for r in out if r.energy_kind == EnergyKind(ek).value and r.skipped is None]
        if cands:
            b = min(cands, key=lambda r: r.total)
            out.append(SweepRecord(s, t, e, "best", b.energy_kind, b.bulk, b.regularizer, b.total, sv,
                                   b.ratio, b.grid_n, sum(r.runtime_ms for r in cands)))
    return out


def thread_count() -> int:
    env = os.environ.get("HELIX_THREADS")
    cap = os.cpu_count() or 1
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ParameterError(f"HELIX_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise ParameterError("HELIX_THREADS must be >= 1")
        return min(n, cap)
    return cap


def run_sweep(cfg: SweepConfig, threads: int | None = None) -> list[SweepRecord]:
    """Records in config order (theta-major); regime refusals come back flagged as skipped."""
    cfg.validate()
    if not cfg.competitors:
        return []
    triples = cfg.triples()
    threads = threads or thread_count()
    if threads <= 1:
        chunks = [_evaluate_triple(cfg, tr) for tr in triples]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            chunks = list(ex.map(lambda tr: _evaluate_triple(cfg, tr), triples))
    return [r for ch in chunks for r in ch]


def fit_loglog(records, x_field: str, y_field: str) -> FitResult:
    xs = np.array([float(getattr(r, x_field)) for r in records])
    ys = np.array([float(getattr(r, y_field)) for r in records])
    if len(xs) < 3:
        raise DataError(f"need at least 3 records to fit, got {len(xs)}")
    if not (np.all(xs > 0) and np.all(ys > 0)):
        raise DataError(f"{x_field} and {y_field} must be positive for a log-log fit")
    res = stats.linregress(np.log(xs), np.log(ys))
    return FitResult(float(res.slope), float(res.intercept), float(res.stderr), len(xs))


# ---------------------------------------------------------------------------
# inequality report

CORE_CONSTANT = 5.0 / (64.0 * math.pi ** 3)


@dataclass
class InequalityRow:
    name: str
    lhs: float
    rhs: float
    ratio: float
    where: tuple = ()


def _atom_reach(f: VectorField2D, mu: VorticityMeasure, k: int) -> float:
    """Largest radius around atom k inside the grid and away from other atoms."""
    x, y, _ = mu.atoms[k]
    d = f.spec.domain
    R = min(x - d.x0, d.x1 - x, y - d.y0, d.y1 - y)
    c = mu.centers
    if len(c) > 1:
        dist = np.hypot(c[:, 0] - x, c[:, 1] - y)
        dist[k] = np.inf
        R = min(R, 0.5 * float(dist.min()))
    return R


def _est_elliptic(f: VectorField2D, inner: Rect, A: float) -> InequalityRow:
    outer = inner.inflate(A)
    if not f.spec.domain.contains_rect(outer, tol=1e-9):
        raise ParameterError(f"rectangle {outer} (inner inflated by A={A:g}) leaves the grid")
    h = f.spec.h
    v = f.values
    m_in = f.spec.cell_mask(inner)
    m_out = f.spec.cell_mask(outer)
    dx = np.diff(v, axis=0) / h
    dy = np.diff(v, axis=1) / h
    ex_in = m_in[1:, :] & m_in[:-1, :]
    ey_in = m_in[:, 1:] & m_in[:, :-1]
    lhs = h * h * ((dx ** 2).sum(-1)[ex_in].sum() + (dy ** 2).sum(-1)[ey_in].sum())
    ex_out = m_out[1:, :] & m_out[:-1, :]
    ey_out = m_out[:, 1:] & m_out[:, :-1]
    curl = circulations(f) / (h * h)
    c_out = m_out[1:, 1:] & m_out[:-1, :-1]
    rhs = h * h * ((dx[..., 0] ** 2)[ex_out].sum() + (dy[..., 1] ** 2)[ey_out].sum()
                   + A ** -2 * (v ** 2).sum(-1)[m_out].sum() + (curl ** 2)[c_out].sum())
    return InequalityRow("est_elliptic", float(lhs), float(rhs), float(lhs / rhs) if rhs > 0 else math.inf,
                         (inner.x0, inner.x1, inner.y0, inner.y1, A))


def inequality_report(f: VectorField2D, mu: VorticityMeasure, p: ScalingParams,
                      r_out: float | None = None, inner: Rect | None = None, A: float | None = None,
                      tol: float | None = None) -> list[InequalityRow]:
    """Both sides of the testable lower-bound inequalities on ``f``.

    Rows: ``vortex_core`` (W on B_eps vs sigma^4/eps^2), ``annulus``
    (energy on B_R minus B_eps vs sigma |mu(B_eps)| ln(R/eps)), ``appendix_tv``
    (|D beta| on the same annulus vs |mu(B_eps)| ln(R/eps)) per atom whose
    neighbourhood fits in the grid, and one ``est_elliptic`` row.
    """
    if tol is None or tol > 0:
        require_admissible(f, mu, tol)
    rows: list[InequalityRow] = []
    Wv = eval_W(f.values)
    h = f.spec.h
    for k, (x, y, g) in enumerate(mu.atoms):
        R = _atom_reach(f, mu, k)
        if r_out is not None:
            R = min(R, r_out)
        if R < mu.eps:
            continue
        core = float(h * h * Wv[disc_mask(f, (x, y), mu.eps)].sum())
        scale = mu.sigma ** 4 / mu.eps ** 2
        rows.append(InequalityRow("vortex_core", core, scale, core / scale, (x, y)))
        if R <= mu.eps * (1 + 1e-9):
            continue
        m = annulus_masks(f, (x, y), mu.eps, R)
        charge = mu.atom_mass
        lr = math.log(R / mu.eps)
        ann = energy_on_mask(EnergyKind.E1, f, mu.sigma, m).total
        rows.append(InequalityRow("annulus", ann, mu.sigma * charge * lr, ann / (mu.sigma * charge * lr), (x, y, R)))
        tv = total_variation_on_mask(f, m)
        rows.append(InequalityRow("appendix_tv", tv, charge * lr, tv / (charge * lr), (x, y, R)))
    d = f.spec.domain
    if A is None:
        A = 0.1 * min(d.x1 - d.x0, d.y1 - d.y0)
    if inner is None:
        inner = Rect(d.x0 + 2 * A, d.x1 - 2 * A, d.y0 + 2 * A, d.y1 - 2 * A)
    rows.append(_est_elliptic(f, inner, A))
    return rows


def appendix_tv_ratio(f: VectorField2D, center, sigma: float, r1: float, r2: float) -> float:
    """TV of f on B_r2 minus B_r1, divided by sigma ln(r2/r1)."""
    if not 0 < r1 < r2:
        raise ParameterError("need 0 < r1 < r2")
    return total_variation_on_mask(f, annulus_masks(f, center, r1, r2)) / (sigma * math.log(r2 / r1))


# ---------------------------------------------------------------------------
# serialisation

def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def records_to_csv(records, include_skipped: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in records:
        if r.skipped is None or include_skipped:
            w.writerow([_fmt(getattr(r, k)) for k in CSV_FIELDS])
    return buf.getvalue()


def records_to_json(records, include_skipped: bool = False) -> str:
    # 17 significant digits round-trip every double exactly
    items = []
    for r in records:
        if r.skipped is None or include_skipped:
            items.append("{" + ", ".join(f'"{k}": {_json_value(getattr(r, k))}' for k in CSV_FIELDS) + "}")
    return "[" + ",\n ".join(items) + "]\n"


def _json_value(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g") if math.isfinite(v) else "null"
    return json.dumps(v)


def records_from_json(text: str) -> list[SweepRecord]:
    out = []
    for d in json.loads(text):
        d = {k: (math.nan if v is None else v) for k, v in d.items()}
        out.append(SweepRecord(**d))
    return out


def emit(records, format: str, path, include_skipped: bool = False) -> None:
    if format == "csv":
        text = records_to_csv(records, include_skipped)
    elif format == "json":
        text = records_to_json(records, include_skipped)
    else:
        raise ParameterError(f"format must be csv or json, got {format!r}")
    try:
        Path(path).write_text(text)
    except OSError as e:
        raise DataError(f"cannot write {path}: {e.strerror}") from e
