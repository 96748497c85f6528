"""Decay fitting, learnable reconstruction, intercept estimates, feasible regions, SP bounds."""

from __future__ import annotations

import math
import zlib
from decimal import ROUND_HALF_UP, Decimal
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.ndimage import binary_dilation
from scipy.optimize import curve_fit, minimize

from .cbsim import CBDataset, OrbitInfo
from .channel import wht, wht_lambda_to_p
from .graph import (
    PatternGraph,
    cut_space,
    is_learnable,
    learnable_basis_report,
)
from .pauli import PauliOp, cnot, index_label

__all__ = [
    "DecayFit",
    "fit_decay",
    "fit_all",
    "LearnableEstimates",
    "IncompleteCoverageError",
    "reconstruct_learnable",
    "InterceptEstimate",
    "intercept_estimate",
    "FeasibleRegion",
    "EmptyRegionError",
    "feasible_region",
    "default_coordinates",
    "SPBound",
    "sp_lower_bound",
    "sp_bound_from_ratio",
    "ErrorEstimates",
    "reconstruct_errors",
    "unlearnable_error_directions",
]

DEFAULT_BOOTSTRAP = 200


# Decay fitting


@dataclass(frozen=True, eq=False)
class DecayFit:
    key: str
    rate: float
    amplitude: float
    rate_se: float
    amplitude_se: float
    x: np.ndarray = field(repr=False)
    means: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    orbit: OrbitInfo | None = field(default=None, repr=False)
    fittable: bool = True
    used: int = 0

    @property
    def log_rate_se(self) -> float:
        return self.rate_se / self.rate if self.rate > 0 else math.inf

    def to_json(self) -> dict:
        return {
            "key": self.key,
            "rate": self.rate,
            "rate_se": self.rate_se,
            "amplitude": self.amplitude,
            "amplitude_se": self.amplitude_se,
            "fittable": self.fittable,
            "depths_used": self.used,
            "terms": [list(t) for t in self.orbit.terms] if self.orbit else [],
        }


def _wls_line(x, y, w):
    """Weighted least squares for y = b0 + b1 x; returns (b0, b1)."""
    sw = np.sqrt(w)
    a = np.stack([sw, sw * x], axis=1)
    beta, *_ = np.linalg.lstsq(a, sw * y, rcond=None)
    return beta


def _log_fit(x, table, method="wls"):
    """Fit from per-depth circuit samples; returns (amplitude, rate, used) or None."""
    means = np.array([t.mean() for t in table])
    ok = means > 0
    if ok.sum() < 2 or len(np.unique(x[ok])) < 2:
        return None
    xs, ms = x[ok], means[ok]
    var = np.array([t.var(ddof=1) / len(t) if len(t) > 1 else 0.0 for t in table])[ok]
    if np.all(var <= 0):
        w = np.ones_like(ms)
    else:
        floor = np.min(var[var > 0])
        w = ms**2 / np.maximum(var, floor)
    b0, b1 = _wls_line(xs, np.log(ms), w)
    amp, rate = float(np.exp(b0)), float(np.exp(b1))
    if method == "nls":
        sigma = None if np.all(var <= 0) else np.sqrt(np.maximum(var, np.min(var[var > 0])))
        try:
            (amp, rate), _ = curve_fit(lambda t, a, f: a * f**t, xs, ms, p0=(amp, rate),
                                       sigma=sigma, maxfev=2000)
        except RuntimeError:
            pass
    return float(amp), float(rate), int(ok.sum())


def _x_values(depths, orbit: OrbitInfo | None) -> np.ndarray:
    d = np.asarray(depths, dtype=float)
    if orbit is None:
        return d
    return (d - orbit.depth_offset) / orbit.depth_unit


def _bootstrap_rng(seed: int, key: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(key.encode()), 7])


def fit_decay(ds: CBDataset, key: str, bootstrap: int = DEFAULT_BOOTSTRAP, seed: int = 0,
              method: str = "wls") -> DecayFit:
    """Exponential fit A * f^x of circuit-averaged means; bootstrap over circuits for errors."""
    if method not in ("wls", "nls"):
        raise ValueError(f"unknown fit method {method!r}")
    by_depth = ds.means_by_depth(key)
    if not by_depth:
        raise KeyError(f"dataset has no records for {key!r}; available: {ds.keys()}")
    orbit = ds.orbits.get(key)
    x = _x_values(list(by_depth), orbit)
    table = list(by_depth.values())
    means = np.array([t.mean() for t in table])
    res = _log_fit(x, table, method)
    if res is None:
        nan = float("nan")
        return DecayFit(key, nan, nan, nan, nan, x, means, np.full_like(means, nan), orbit,
                        fittable=False, used=int((means > 0).sum()))
    amp, rate, used = res
    resid = means - amp * rate**x
    rates, amps = [], []
    rng = _bootstrap_rng(seed, key)
    for _ in range(bootstrap):
        sample = [t[rng.integers(len(t), size=len(t))] for t in table]
        r = _log_fit(x, sample, method)
        if r is not None:
            amps.append(r[0])
            rates.append(r[1])
    rate_se = float(np.std(rates, ddof=1)) if len(rates) > 1 else 0.0
    amp_se = float(np.std(amps, ddof=1)) if len(amps) > 1 else 0.0
    return DecayFit(key, rate, amp, rate_se, amp_se, x, means, resid, orbit, True, used)


def fit_all(ds: CBDataset, bootstrap: int = DEFAULT_BOOTSTRAP, seed: int = 0,
            method: str = "wls", protocols: Sequence[str] = ("standard", "interleaved", "cycle")
            ) -> list[DecayFit]:
    return [fit_decay(ds, k, bootstrap, seed, method) for k in ds.keys()
            if k.split(":")[0] in protocols]


# Learnable reconstruction


class IncompleteCoverageError(ValueError):
    def __init__(self, missing: list[str], estimates: LearnableEstimates):
        self.missing = missing
        self.estimates = estimates
        super().__init__(
            f"fits leave {len(missing)} learnable direction(s) undetermined: {', '.join(missing)}"
        )


def _fit_functional(g: PatternGraph, fit: DecayFit) -> np.ndarray:
    if fit.orbit is None:
        raise ValueError(f"fit {fit.key} carries no orbit description")
    v = np.zeros(g.num_edges)
    for gate, lab, c in fit.orbit.terms:
        v[g.edge_index(gate, lab)] += c
    return v


@dataclass(frozen=True, eq=False)
class LearnableEstimates:
    graph: PatternGraph = field(repr=False)
    log_fidelities: np.ndarray = field(repr=False)  # min-norm point, lies in the cycle space
    covariance: np.ndarray = field(repr=False)
    basis_names: tuple[str, ...]
    basis_vectors: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)  # basis functionals of log fidelities
    stderr: np.ndarray = field(repr=False)
    missing: tuple[str, ...] = ()
    chi2: float = 0.0
    dof: int = 0
    residuals: np.ndarray = field(default=None, repr=False)

    @property
    def complete(self) -> bool:
        return not self.missing

    @property
    def fidelity_values(self) -> np.ndarray:
        """exp of each basis functional: a fidelity or a product of fidelities."""
        return np.exp(self.values)

    @property
    def fidelity_stderr(self) -> np.ndarray:
        return np.exp(self.values) * self.stderr

    def estimate(self, f: np.ndarray) -> tuple[float, float]:
        """Value and standard error of any learnable functional."""
        if not is_learnable(self.graph, f, tol=1e-7).learnable:
            raise ValueError("functional is not learnable")
        return float(f @ self.log_fidelities), float(np.sqrt(max(f @ self.covariance @ f, 0.0)))

    def default_eps(self) -> float:
        """Largest standard error among the learnable fidelities and products."""
        nontrivial = np.any(self.basis_vectors[:, self._non_identity], axis=1)
        errs = self.fidelity_stderr[nontrivial]
        return float(np.max(errs)) if len(errs) else 0.0

    @property
    def _non_identity(self) -> np.ndarray:
        return (np.arange(self.graph.num_edges) % 4**self.graph.n) != 0

    def to_json(self) -> dict:
        return {
            "basis": [
                {"functional": nm, "log_value": float(v), "log_se": float(s),
                 "value": float(np.exp(v)), "se": float(np.exp(v) * s)}
                for nm, v, s in zip(self.basis_names, self.values, self.stderr)
            ],
            "missing": list(self.missing),
            "chi2": self.chi2,
            "dof": self.dof,
        }


def reconstruct_learnable(fits: Sequence[DecayFit], g: PatternGraph,
                          allow_partial: bool = False) -> LearnableEstimates:
    """Generalized least squares for log fidelities from decay rates; identity fidelities are 1."""
    fits = [f for f in fits if f.fittable and f.rate > 0]
    size = 4**g.n
    ne = g.num_edges
    ident = np.arange(ne) % size == 0
    free = ~ident
    if fits:
        v = np.array([_fit_functional(g, f) for f in fits])
        y = np.log([f.rate for f in fits])
        se = np.array([f.log_rate_se for f in fits])
    else:
        v, y, se = np.zeros((0, ne)), np.zeros(0), np.zeros(0)
    if len(se) and np.all(se <= 0):
        w = np.ones_like(se)
        se_used = np.zeros_like(se)
    elif len(se):
        floor = np.min(se[se > 0]) * 1e-3
        se_used = np.maximum(se, floor)
        w = 1.0 / se_used**2
    else:
        w, se_used = se, se
    vf = v[:, free]
    sw = np.sqrt(w)[:, None]
    a = sw * vf
    pinv = np.linalg.pinv(a, rcond=1e-10) if len(a) else np.zeros((free.sum(), 0))
    m = pinv * np.sqrt(w)[None, :]
    lf = m @ y
    l_hat = np.zeros(ne)
    l_hat[free] = lf
    cov = np.zeros((ne, ne))
    cov[np.ix_(free, free)] = m @ np.diag(se_used**2) @ m.T
    resid = y - v @ l_hat
    rank = np.linalg.matrix_rank(a, tol=1e-9 * max(1.0, np.abs(a).max(initial=0))) if len(a) else 0
    chi2 = float(np.sum(w * resid**2)) if np.any(se_used > 0) else float(np.sum(resid**2))

    report = learnable_basis_report(g)
    names = tuple(b.text("l", len(g.gates) > 1) for b in report.basis)
    basis = report.cycle_vectors
    # directions of the cycle space not reached by the measured functionals
    rows = np.vstack([v, np.eye(ne)[ident]]) if len(v) else np.eye(ne)[ident]
    q, s, _ = np.linalg.svd(rows.T, full_matrices=False)
    q = q[:, s > 1e-9 * s.max()]
    missing = []
    proj = basis - (basis @ q) @ q.T
    span = np.zeros((0, ne))
    for nm, r in zip(names, proj):
        r = r - (r @ span.T) @ span if len(span) else r
        if np.linalg.norm(r) > 1e-7:
            missing.append(nm)
            span = np.vstack([span, r / np.linalg.norm(r)])
    values = basis @ l_hat
    stderr = np.sqrt(np.maximum(np.einsum("ie,ef,if->i", basis, cov, basis), 0.0))
    est = LearnableEstimates(g, l_hat, cov, names, basis, values, stderr, tuple(missing),
                             chi2, int(len(y) - rank), resid)
    if missing and not allow_partial:
        raise IncompleteCoverageError(missing, est)
    return est


# Intercept CB


@dataclass(frozen=True)
class InterceptEstimate:
    pauli: str
    value: float
    se: float
    direct: float
    direct_se: float
    rate_a: float
    rate_b: float
    rates_compatible: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _intercept_point(xa, ta, xb, tb):
    """Shared-slope log-linear fit of both families; returns exp(c_a - c_b)."""
    ma = np.array([t.mean() for t in ta])
    mb = np.array([t.mean() for t in tb])
    oka, okb = ma > 0, mb > 0
    if oka.sum() < 1 or okb.sum() < 1 or oka.sum() + okb.sum() < 3:
        return None

    def wts(table, m, ok):
        var = np.array([t.var(ddof=1) / len(t) if len(t) > 1 else 0.0 for t in table])[ok]
        return var, m[ok]

    va, ma_ = wts(ta, ma, oka)
    vb, mb_ = wts(tb, mb, okb)
    var = np.concatenate([va, vb])
    ms = np.concatenate([ma_, mb_])
    if np.all(var <= 0):
        w = np.ones_like(ms)
    else:
        w = ms**2 / np.maximum(var, np.min(var[var > 0]))
    x = np.concatenate([xa[oka], xb[okb]])
    fam = np.concatenate([np.ones(oka.sum()), np.zeros(okb.sum())])
    design = np.stack([fam, 1 - fam, x], axis=1)
    sw = np.sqrt(w)
    beta, *_ = np.linalg.lstsq(design * sw[:, None], sw * np.log(ms), rcond=None)
    return float(np.exp(beta[0] - beta[1]))


def intercept_estimate(ds: CBDataset, pauli: str | None = None,
                       bootstrap: int = DEFAULT_BOOTSTRAP, seed: int = 0
                       ) -> dict[str, InterceptEstimate]:
    """Estimate lambda_a * lambda^S_a / lambda^S_b for each Pauli a with both families present."""
    labels = sorted({r.pauli for r in ds.records if r.protocol == "intercept"})
    if pauli is not None:
        labels = [pauli]
    out = {}
    for lab in labels:
        ka, kb = f"intercept:{lab}:a", f"intercept:{lab}:b"
        da, db = ds.means_by_depth(ka), ds.means_by_depth(kb)
        if not da or not db:
            raise ValueError(f"intercept data for {lab} needs both depth families")
        xa = _x_values(list(da), ds.orbits.get(ka))
        xb = _x_values(list(db), ds.orbits.get(kb))
        ta, tb = list(da.values()), list(db.values())
        val = _intercept_point(xa, ta, xb, tb)
        if val is None:
            raise ValueError(f"intercept data for {lab} has too few positive means")
        fa = fit_decay(ds, ka, bootstrap, seed)
        fb = fit_decay(ds, kb, bootstrap, seed)
        rng = _bootstrap_rng(seed, ka + "|ratio")
        boots, direct_boots = [], []
        a0, b0 = ta[0], tb[0]
        for _ in range(bootstrap):
            sa = [t[rng.integers(len(t), size=len(t))] for t in ta]
            sb = [t[rng.integers(len(t), size=len(t))] for t in tb]
            r = _intercept_point(xa, sa, xb, sb)
            if r is not None:
                boots.append(r)
            if sb[0].mean() != 0:
                direct_boots.append(sa[0].mean() / sb[0].mean())
        se = float(np.std(boots, ddof=1)) if len(boots) > 1 else 0.0
        direct = float(a0.mean() / b0.mean()) if b0.mean() != 0 else float("nan")
        dse = float(np.std(direct_boots, ddof=1)) if len(direct_boots) > 1 else 0.0
        comp = True
        if fa.fittable and fb.fittable:
            s = math.hypot(fa.rate_se, fb.rate_se)
            comp = abs(fa.rate - fb.rate) <= 3 * s if s > 0 else abs(fa.rate - fb.rate) < 1e-9
        out[lab] = InterceptEstimate(lab, val, se, direct, dse, fa.rate, fb.rate, comp)
    return out


# Feasible region


class EmptyRegionError(ValueError):
    def __init__(self, min_eps: float, eps: float):
        self.min_eps = min_eps
        self.eps = eps
        super().__init__(f"feasible region is empty at eps={eps:.3g}; "
                         f"smallest eps giving a nonempty region is {min_eps:.3g}")


def unlearnable_error_directions(g: PatternGraph, tol: float = 1e-9) -> np.ndarray:
    """Mask over edges: error rate p_a^G whose first-order log functional has a cut component."""
    size = 4**g.n
    out = np.zeros(g.num_edges, dtype=bool)
    for e in range(g.num_edges):
        gi, a = divmod(e, size)
        f = np.zeros(g.num_edges)
        row = np.zeros(size)
        row[a] = 1.0
        f[gi * size:(gi + 1) * size] = wht(row) / size
        out[e] = not is_learnable(g, f, tol).learnable
    return out


def default_coordinates(g: PatternGraph) -> list[tuple[str, str]] | None:
    """(lambda_XX, lambda_ZZ) for a lone CNOT; None (cut-basis coordinates) otherwise."""
    if len(g.gates) == 1 and g.n == 2 and g.gates[0].same_action(cnot()):
        name = g.gates[0].name
        return [(name, "XX"), (name, "ZZ")]
    return None


@dataclass(frozen=True, eq=False)
class FeasibleRegion:
    coords: tuple[str, ...]
    in_fidelity_coords: bool
    axes: tuple[np.ndarray, ...] = field(repr=False)
    mask: np.ndarray = field(repr=False)
    box: tuple[tuple[float, float], ...]
    eps: float
    is_rectangle: bool
    fidelity_intervals: Mapping[str, tuple[float, float]] = field(repr=False)
    error_intervals: Mapping[str, tuple[float, float]] = field(repr=False)
    constrained: tuple[str, ...] = field(repr=False)
    min_eps: float = 0.0
    box_fill: float = 1.0
    _ctx: dict = field(default_factory=dict, repr=False)

    def contains(self, point: Sequence[float], eps: float | None = None) -> bool:
        """Exact constraint check at a point given in region coordinates."""
        eps = self.eps if eps is None else eps
        viol = self._ctx["violation"](np.atleast_2d(np.asarray(point, dtype=float)))
        return bool(viol[0] <= eps)

    def interval(self, gate: str, label: str) -> tuple[float, float]:
        return self.fidelity_intervals[f"{gate}:{label}"]

    def boundary(self) -> np.ndarray:
        """Grid points on the edge of the feasible mask, as coordinate rows."""
        m = self.mask
        inner = m & ~binary_dilation(~m, border_value=1)
        edge = m & ~inner
        idx = np.argwhere(edge)
        return np.stack([self.axes[k][idx[:, k]] for k in range(len(self.axes))], axis=1)

    def to_json(self) -> dict:
        return {
            "coords": list(self.coords),
            "fidelity_coords": self.in_fidelity_coords,
            "eps": self.eps,
            "box": [list(b) for b in self.box],
            "rectangle": self.is_rectangle,
            "box_fill": self.box_fill,
            "feasible_points": int(self.mask.sum()),
            "grid": [len(a) for a in self.axes],
            "fidelity_intervals": {k: list(v) for k, v in self.fidelity_intervals.items()},
            "error_intervals": {k: list(v) for k, v in self.error_intervals.items()},
            "constrained_error_rates": list(self.constrained),
        }


def _box_fill(mask: np.ndarray) -> float:
    """Fraction of the mask's bounding box that is feasible."""
    if not mask.any():
        return 0.0
    idx = np.argwhere(mask)
    sl = tuple(slice(a, b + 1) for a, b in zip(idx.min(axis=0), idx.max(axis=0)))
    return float(mask[sl].mean())


def _is_rectangle(mask: np.ndarray) -> bool:
    """True when the mask equals the product of its projections up to one grid cell."""
    if not mask.any():
        return False
    hull = np.ones_like(mask)
    for ax in range(mask.ndim):
        other = tuple(k for k in range(mask.ndim) if k != ax)
        anyax = mask.any(axis=other) if other else mask
        shape = [1] * mask.ndim
        shape[ax] = -1
        hull = hull & anyax.reshape(shape)
    return bool(np.all(~hull | binary_dilation(mask, iterations=1)))


def feasible_region(est: LearnableEstimates, g: PatternGraph | None = None,
                    eps: float | None = None, coords: Sequence[tuple[str, str]] | None = None,
                    grid: int = 401, coarse: int = 101, refine_tol: float = 1e-5,
                    span: float = 0.5) -> FeasibleRegion:
    """Gauge parameters for which every unlearnable-direction error rate is >= -eps.

    Coordinates are fidelities (lambda_XX, lambda_ZZ for CNOT) when available, else the
    cut-basis parameters t with log lambda = log lambda_hat + sum_p t_p v_p.
    """
    g = est.graph if g is None else g
    eps = est.default_eps() if eps is None else float(eps)
    cut = cut_space(g).vectors
    d = cut.shape[0]
    if d == 0:
        raise ValueError("gate set has no unlearnable degrees of freedom")
    if d > 2:
        raise ValueError(f"grid scan supports at most 2 gauge dimensions, gate set has {d}")
    size = 4**g.n
    ng = len(g.gates)
    l_hat = est.log_fidelities
    constrained = unlearnable_error_directions(g)
    if coords is None:
        coords = default_coordinates(g) if d == 2 else None
    if coords is not None:
        cidx = [g.edge_index(gt, lab) for gt, lab in coords]
        amat = cut[:, cidx].T  # d x d: log coord = l_hat + amat t
        if abs(np.linalg.det(amat)) < 1e-9:
            raise ValueError(f"coordinates {coords} do not parameterize the gauge")
        ainv = np.linalg.inv(amat)
        names = tuple(f"lambda_{lab}^{gt}" if ng > 1 else f"lambda_{lab}" for gt, lab in coords)

        def to_t(u):
            return (np.log(np.maximum(u, 1e-300)) - l_hat[cidx]) @ ainv.T

        def from_t(t):
            return np.exp(l_hat[cidx] + t @ amat.T)
    else:
        names = tuple(f"t{k}" for k in range(d))

        def to_t(u):
            return u

        def from_t(t):
            return t

    def logs(u):
        return l_hat[None, :] + to_t(u) @ cut

    def error_rates(u):
        lam = np.exp(logs(u)).reshape(len(u), ng, size)
        return wht_lambda_to_p(lam).reshape(len(u), ng * size)

    def violation(u):
        p = error_rates(u)[:, constrained]
        out = np.max(-p, axis=1)
        return np.where(np.all(np.isfinite(u), axis=1), out, np.inf)

    # find the least-violating point
    starts = [np.zeros(d)] + [np.eye(d)[k] * s for k in range(d) for s in (-0.05, 0.05)]
    best = None
    for t0 in starts:
        r = minimize(lambda t: float(violation(from_t(t[None, :])[None, :].reshape(1, d))[0]),
                     t0, method="Nelder-Mead",
                     options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        if best is None or r.fun < best.fun:
            best = r
    min_eps = max(float(best.fun), 0.0)
    center = from_t(best.x[None, :])[0]
    if best.fun > eps:
        raise EmptyRegionError(min_eps, eps)

    def feasible(u):
        return violation(u) <= eps

    def edge_along(k, direction, start):
        """Bisection for the boundary from a feasible start along coordinate k."""
        step = max(abs(start[k]) * 1e-3, 1e-6)
        inside = start.copy()
        outside = start.copy()
        for _ in range(200):
            outside[k] = inside[k] + direction * step
            if not feasible(outside[None, :])[0]:
                break
            inside[k] = outside[k]
            step *= 2
        else:
            return inside[k]
        lo, hi = inside[k], outside[k]
        while abs(hi - lo) > refine_tol * 1e-2:
            mid = 0.5 * (lo + hi)
            probe = start.copy()
            probe[k] = mid
            if feasible(probe[None, :])[0]:
                lo = mid
            else:
                hi = mid
        return lo

    lo = np.array([edge_along(k, -1, center) for k in range(d)])
    hi = np.array([edge_along(k, +1, center) for k in range(d)])
    width = np.maximum(hi - lo, 1e-9)
    lo_box, hi_box = lo - span * width, hi + span * width

    def scan(lo_b, hi_b, npts):
        axes = tuple(np.linspace(lo_b[k], hi_b[k], npts) for k in range(d))
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
        return axes, mesh, feasible(mesh).reshape((npts,) * d)

    for _ in range(6):
        axes, mesh, mask = scan(lo_box, hi_box, coarse)
        touches = [mask.take(0, axis=k).any() or mask.take(-1, axis=k).any() for k in range(d)]
        if not any(touches):
            break
        w = hi_box - lo_box
        lo_box, hi_box = lo_box - w, hi_box + w
    idx = np.argwhere(mask)
    cell = (hi_box - lo_box) / (coarse - 1)
    flo = np.array([axes[k][idx[:, k].min()] for k in range(d)]) - cell
    fhi = np.array([axes[k][idx[:, k].max()] for k in range(d)]) + cell
    axes, mesh, mask = scan(flo, fhi, grid)
    pts = mesh[mask.reshape(-1)]

    # refine the box edges row by row
    box = []
    step = (fhi - flo) / (grid - 1)
    extra = []
    for k in range(d):
        lows, highs = [], []
        # one bisection per grid line parallel to axis k
        other = [j for j in range(d) if j != k]
        if other:
            j = other[0]
            for val in np.unique(pts[:, j]):
                line = pts[pts[:, j] == val]
                a = line[np.argmin(line[:, k])].copy()
                b = line[np.argmax(line[:, k])].copy()
                lows.append(_bisect_edge(feasible, a, k, -step[k], refine_tol))
                highs.append(_bisect_edge(feasible, b, k, +step[k], refine_tol))
        else:
            lows.append(_bisect_edge(feasible, pts[np.argmin(pts[:, k])].copy(), k, -step[k], refine_tol))
            highs.append(_bisect_edge(feasible, pts[np.argmax(pts[:, k])].copy(), k, step[k], refine_tol))
        lo_pt = min(lows, key=lambda p: p[k])
        hi_pt = max(highs, key=lambda p: p[k])
        extra += [lo_pt, hi_pt]
        box.append((float(lo_pt[k]), float(hi_pt[k])))
    allpts = np.vstack([pts, np.array(extra)])
    lam_all = np.exp(logs(allpts))
    p_all = error_rates(allpts)
    fid_int, err_int = {}, {}
    for e in range(g.num_edges):
        gi, a = divmod(e, size)
        key = f"{g.gates[gi].name}:{index_label(a, g.n)}"
        fid_int[key] = (float(lam_all[:, e].min()), float(lam_all[:, e].max()))
        err_int[key] = (float(p_all[:, e].min()), float(p_all[:, e].max()))
    cons = tuple(f"{g.gates[e // size].name}:{index_label(e % size, g.n)}"
                 for e in np.flatnonzero(constrained))
    ctx = {"violation": violation, "to_t": to_t, "from_t": from_t, "error_rates": error_rates,
           "logs": logs, "center": center, "size": size}
    return FeasibleRegion(names, coords is not None, axes, mask, tuple(box), eps,
                          _is_rectangle(mask), fid_int, err_int, cons, min_eps,
                          _box_fill(mask), ctx)


def _bisect_edge(feasible, start: np.ndarray, k: int, step: float, tol: float) -> np.ndarray:
    inside = start.copy()
    outside = start.copy()
    outside[k] = inside[k] + step
    n = 0
    while feasible(outside[None, :])[0]:
        inside[k] = outside[k]
        outside[k] += step
        n += 1
        if n > 1000:
            return inside
    while abs(outside[k] - inside[k]) > tol:
        mid = inside.copy()
        mid[k] = 0.5 * (inside[k] + outside[k])
        if feasible(mid[None, :])[0]:
            inside = mid
        else:
            outside[k] = mid[k]
    return inside


# State-preparation bound


@dataclass(frozen=True)
class SPBound:
    pair: tuple[str, str]
    lo: float
    hi: float
    lo_se: float
    hi_se: float
    flip_rate_lower: float | None
    flip_rate_se: float | None
    qubit: int | None
    note: str = ""

    @property
    def nontrivial(self) -> bool:
        return self.flip_rate_lower is not None

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["pair"] = list(self.pair)
        return d

    def summary(self, digits: int = 2) -> str:
        """Bound as "x% +- s%" rounded half-up to ``digits`` significant figures."""
        if not self.nontrivial:
            return self.note
        return (f"{_sig_percent(self.flip_rate_lower, digits)}% +- "
                f"{_sig_percent(self.flip_rate_se, digits)}%")


def _sig_percent(x: float, digits: int) -> str:
    # repr-level rounding first so 0.605 stays 0.605 rather than 0.60499...
    d = Decimal(repr(round(100 * x, 12)))
    if d == 0:
        return "0"
    q = Decimal(1).scaleb(d.adjusted() - digits + 1)
    return str(d.quantize(q, rounding=ROUND_HALF_UP))


def sp_bound_from_ratio(lo: float, hi: float, pair: tuple[str, str], lo_se: float = 0.0,
                        hi_se: float = 0.0) -> SPBound:
    """Bit-flip rate bound from bounds on lambda^S_a / lambda^S_b.

    Under independent state-prep bit flips the ratio is 1 - 2 eps_j when a covers
    exactly one more qubit j than b, and 1 / (1 - 2 eps_j) in the reverse case.
    """
    if lo > hi:
        raise ValueError(f"ratio bounds out of order: {lo} > {hi}")
    pa = PauliOp.from_label(pair[0]).pattern
    pb = PauliOp.from_label(pair[1]).pattern
    extra_a, extra_b = pa & ~pb, pb & ~pa
    if lo <= 1 <= hi:
        return SPBound(tuple(pair), lo, hi, lo_se, hi_se, None, None, None,
                       "ratio interval contains 1: no nontrivial bound")
    if extra_b == 0 and extra_a and (extra_a & (extra_a - 1)) == 0 and hi < 1:
        j = extra_a.bit_length() - 1
        return SPBound(tuple(pair), lo, hi, lo_se, hi_se, (1 - hi) / 2, hi_se / 2, j)
    if extra_a == 0 and extra_b and (extra_b & (extra_b - 1)) == 0 and lo > 1:
        j = extra_b.bit_length() - 1
        return SPBound(tuple(pair), lo, hi, lo_se, hi_se, (1 - 1 / lo) / 2,
                       lo_se / (2 * lo**2), j)
    return SPBound(tuple(pair), lo, hi, lo_se, hi_se, None, None, None,
                   "ratio is inconsistent with state-prep bit flips on one extra qubit")


def sp_lower_bound(icb: InterceptEstimate | tuple[float, float] | float,
                   region: FeasibleRegion | tuple[float, float, float, float] | None = None,
                   pair: tuple[str, str] = ("ZZ", "IZ"), gate: str | None = None,
                   se: float = 0.0) -> SPBound:
    """Bound lambda^S_a / lambda^S_b between icb / lambda_max and icb / lambda_min.

    ``region`` is a FeasibleRegion (uses the interval of lambda_a for ``gate``) or an explicit
    (lambda_min, lambda_max, se_min, se_max) tuple. ``pair`` is (a, b) in the ratio's order.
    A bare float ``icb`` with no region is taken as the ratio's upper bound, with error ``se``.
    """
    if region is None:
        if not isinstance(icb, (int, float)):
            raise ValueError("a region is needed unless the ratio bound is given directly")
        return sp_bound_from_ratio(float(icb), float(icb), pair, se, se)
    val, val_se = (icb.value, icb.se) if isinstance(icb, InterceptEstimate) else icb
    if isinstance(region, FeasibleRegion):
        if gate is None:
            gate = next(iter(region.fidelity_intervals)).split(":")[0]
        lab = icb.pauli if isinstance(icb, InterceptEstimate) else pair[0]
        lmin, lmax = region.fidelity_intervals[f"{gate}:{lab}"]
        smin = smax = 0.0
    else:
        lmin, lmax, smin, smax = region
    lo, hi = val / lmax, val / lmin
    lo_se = lo * math.hypot(val_se / val, smax / lmax)
    hi_se = hi * math.hypot(val_se / val, smin / lmin)
    return sp_bound_from_ratio(lo, hi, pair, lo_se, hi_se)


# Error rates


@dataclass(frozen=True, eq=False)
class ErrorEstimates:
    exact: np.ndarray = field(repr=False)
    first_order: np.ndarray = field(repr=False)
    intervals: np.ndarray | None = field(default=None, repr=False)

    @property
    def gap(self) -> float:
        return float(np.max(np.abs(self.exact - self.first_order)))


def reconstruct_errors(source, n: int | None = None) -> ErrorEstimates:
    """Error rates from a full fidelity vector (per gate block) or intervals over a region."""
    if isinstance(source, FeasibleRegion):
        ctx = source._ctx
        axes = source.axes
        mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(axes))
        pts = mesh[source.mask.reshape(-1)]
        p = ctx["error_rates"](pts)
        logs = ctx["logs"](pts)
        size = ctx["size"]
        nb = p.shape[1] // size
        first = (wht(logs.reshape(len(pts), nb, size)) / size).reshape(len(pts), -1)
        first[:, ::size] += 1.0
        centre = ctx["error_rates"](ctx["center"][None, :])[0]
        centre_first = first[np.argmin(np.abs(p - centre).sum(axis=1))]
        return ErrorEstimates(centre, centre_first, np.stack([p.min(0), p.max(0)], axis=1))
    lam = np.asarray(source, dtype=float)
    size = 4 ** (n if n is not None else _size_exp(lam.shape[-1]))
    blocks = lam.reshape(-1, size)
    exact = wht_lambda_to_p(blocks)
    first = wht(np.log(blocks)) / size
    first[:, 0] += 1.0
    return ErrorEstimates(exact.reshape(lam.shape), first.reshape(lam.shape))


def _size_exp(length: int) -> int:
    n = 0
    while 4**n < length:
        n += 1
    if 4**n != length:
        raise ValueError(f"length {length} is not a power of 4")
    return n
