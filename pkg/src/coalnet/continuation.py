"""Brute-force numerical oracle for equilibrium branches near the origin.

At every parameter value on a geometric grid (both signs) a batched Newton
iteration is started from a grid of small seeds; the converged equilibria are
deduplicated, linked across consecutive parameter values, and their per-cell
growth is fitted as a power of ``|lam|``.  Nothing here uses the feedforward
structure, so the results serve as an independent check on the branch theory.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment

from .errors import InputError, LinkWarning, NumericalError
from .linalg import numeric_rank
from .system import AdmissibleSystem


@dataclass(frozen=True)
class OracleConfig:
    lambda_min: float = 1e-6
    lambda_max: float = 1e-2
    n_lambda: int = 24
    newton_tol: float = 1e-12
    max_iter: int = 40
    dedup: float = 1e-8
    basin_radius: float = 0.5
    seed_delta: float = 1e-3
    kappa: float = 2.0
    max_seeds: int = 40000
    full_grid_every: int = 6  # full seed grid on every k-th parameter value, predictors elsewhere
    zero_floor: float = 1e-13  # |x| below this counts as zero when fitting
    min_fit_points: int = 8
    rng_seed: int = 0

    def __post_init__(self):
        positive = ("lambda_min", "lambda_max", "newton_tol", "dedup", "basin_radius", "seed_delta", "kappa")
        for name in positive:
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if self.lambda_min >= self.lambda_max:
            raise InputError("lambda_min must be below lambda_max")
        for name in ("n_lambda", "max_iter", "max_seeds", "full_grid_every", "min_fit_points"):
            if getattr(self, name) < 1:
                raise InputError(f"{name} must be at least 1")
        if self.n_lambda < self.min_fit_points:
            raise InputError("n_lambda is smaller than min_fit_points; exponents could not be fitted")

    def grid(self, side: int) -> np.ndarray:
        return side * np.geomspace(self.lambda_min, self.lambda_max, self.n_lambda)


def seed_amplitudes(lam: float, cfg: OracleConfig) -> np.ndarray:
    """Per-cell trial amplitudes: zero, a fixed offset, and the scales
    ``|lam|^(1/2)`` and ``|lam|^(1/4)`` of the branches we expect to meet."""
    a = abs(lam)
    base = [cfg.seed_delta, cfg.kappa * np.sqrt(a), cfg.kappa * a**0.25]
    return np.array([0.0] + [s * sign for s in base for sign in (1, -1)])


def _seed_grid(n: int, lam: float, cfg: OracleConfig) -> np.ndarray:
    amps = seed_amplitudes(lam, cfg)
    total = len(amps) ** n
    if total <= cfg.max_seeds:
        return np.array(list(itertools.product(amps, repeat=n)))
    rng = np.random.default_rng(cfg.rng_seed)
    seeds = amps[rng.integers(0, len(amps), size=(cfg.max_seeds, n))]
    axes = np.array([a * e for a in amps for e in np.eye(n)])
    return np.vstack([axes, seeds])


def newton(system: AdmissibleSystem, X0: np.ndarray, lam: float, cfg: OracleConfig) -> tuple[np.ndarray, np.ndarray]:
    """Batched Newton iteration.  Returns final points and a convergence mask.

    A point has converged when its step is negligible relative to its size, or
    when the step stops shrinking (rounding floor) with a small residual.
    """
    X = np.array(X0, dtype=float, copy=True)
    active = np.ones(len(X), dtype=bool)
    done = np.zeros(len(X), dtype=bool)
    prev = np.full(len(X), np.inf)
    for _ in range(cfg.max_iter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        x = X[idx]
        F = system.F(x, lam)
        J = system.jacobian(x, lam)
        ok = np.isfinite(F).all(axis=1) & np.isfinite(J).all(axis=(1, 2))
        step = np.full_like(x, np.nan)
        sel = np.flatnonzero(ok)
        if sel.size:
            try:
                step[sel] = np.linalg.solve(J[sel], F[sel][..., None])[..., 0]
            except np.linalg.LinAlgError:
                sel = sel[np.abs(np.linalg.det(J[sel])) > 1e-300]
                if sel.size:
                    step[sel] = np.linalg.solve(J[sel], F[sel][..., None])[..., 0]
        x_new = x - step
        size = np.max(np.abs(step), axis=1)
        scale = np.max(np.abs(x_new), axis=1)
        resid = np.max(np.abs(F), axis=1)
        bad = ~np.isfinite(size) | (scale > 4 * cfg.basin_radius)
        small = size <= 1e-10 * scale + 1e-18
        stalled = (size >= 0.5 * prev[idx]) & (resid < cfg.newton_tol) & (size <= 1e-8 * scale + 1e-20)
        conv = ~bad & (small | stalled)
        X[idx] = np.where(bad[:, None], X[idx], x_new)
        prev[idx] = size
        active[idx[bad | conv]] = False
        done[idx[conv]] = True
    res = np.max(np.abs(system.F(X, lam)), axis=1) if len(X) else np.zeros(0)
    done &= res < cfg.newton_tol
    return X, done


def dedupe(points: np.ndarray, cfg: OracleConfig) -> np.ndarray:
    """Merge points closer than ``dedup * (1 + |x|)`` in the sup norm."""
    if len(points) == 0:
        return points
    # cheap pre-pass: identical points up to rounding
    points = np.unique(np.round(points, 15), axis=0)
    out: list[np.ndarray] = []
    for p in sorted(points, key=lambda q: np.max(np.abs(q))):
        if all(np.max(np.abs(p - q)) > cfg.dedup * (1 + np.max(np.abs(q))) for q in out):
            out.append(p)
    return np.array(out)


def solve_equilibria(system: AdmissibleSystem, lam: float, config: OracleConfig | None = None,
                     extra_seeds: np.ndarray | None = None, full_grid: bool = True) -> np.ndarray:
    """All distinct equilibria found within the basin radius at ``lam``.

    With ``full_grid=False`` only the origin, single-cell seeds and
    ``extra_seeds`` are tried.
    """
    cfg = config or OracleConfig()
    if full_grid:
        seeds = _seed_grid(system.n, lam, cfg)
    else:
        amps = seed_amplitudes(lam, cfg)
        seeds = np.array([a * e for a in amps for e in np.eye(system.n)])
    if extra_seeds is not None and len(extra_seeds):
        seeds = np.vstack([seeds, extra_seeds])
    X, ok = newton(system, seeds, lam, cfg)
    X = X[ok]
    X = X[np.max(np.abs(X), axis=1) <= cfg.basin_radius] if len(X) else X
    X[np.abs(X) < 1e-300] = 0.0
    return dedupe(X, cfg) if len(X) else np.zeros((0, system.n))


# fitting


def fit_growth_exponent(lams, values, cfg: OracleConfig | None = None) -> tuple[float, float]:
    """Slope of ``log|x|`` against ``log|lam|`` and its 95% half-width.

    Returns ``(0.0, 0.0)``, the zero sentinel, when fewer than
    ``min_fit_points`` samples are distinguishable from zero.
    """
    cfg = cfg or OracleConfig()
    lams = np.abs(np.asarray(lams, dtype=float))
    vals = np.abs(np.asarray(values, dtype=float))
    keep = vals > cfg.zero_floor
    if keep.sum() < cfg.min_fit_points:
        return 0.0, 0.0
    res = stats.linregress(np.log(lams[keep]), np.log(vals[keep]))
    half = stats.t.ppf(0.975, keep.sum() - 2) * res.stderr
    return float(res.slope), float(half)


@dataclass
class NumericalBranch:
    """One branch traced on one side of ``lam = 0``."""

    lam: np.ndarray
    x: np.ndarray  # samples x cells
    exponents: np.ndarray = field(default=None)
    halfwidths: np.ndarray = field(default=None)

    @property
    def side(self) -> int:
        return int(np.sign(self.lam[0]))

    @property
    def trivial(self) -> bool:
        return bool(np.all(np.abs(self.x) <= 1e-14))

    def fit(self, cfg: OracleConfig) -> "NumericalBranch":
        fits = [fit_growth_exponent(self.lam, self.x[:, d], cfg) for d in range(self.x.shape[1])]
        self.exponents = np.array([f[0] for f in fits])
        self.halfwidths = np.array([f[1] for f in fits])
        return self

    def limit_slope(self) -> np.ndarray:
        """``x / lam`` at the smallest ``|lam|``; the tangent of a smooth branch."""
        k = np.argmin(np.abs(self.lam))
        return self.x[k] / self.lam[k]


@dataclass
class LinkedBranch:
    """A branch as a function of ``lam``: one or two one-sided pieces."""

    pieces: list[NumericalBranch]

    @property
    def domain(self) -> str:
        sides = {p.side for p in self.pieces}
        if sides == {1, -1}:
            return "both"
        return "positive-only" if sides == {1} else "negative-only"

    @property
    def trivial(self) -> bool:
        return all(p.trivial for p in self.pieces)

    @property
    def exponents(self) -> np.ndarray:
        """Per-cell exponents; for two pieces the cellwise minimum of nonzero fits."""
        ex = np.array([p.exponents for p in self.pieces])
        out = np.zeros(ex.shape[1])
        for d in range(ex.shape[1]):
            nz = ex[:, d][ex[:, d] != 0]
            out[d] = nz.min() if nz.size else 0.0
        return out

    def piece(self, side: int) -> NumericalBranch | None:
        for p in self.pieces:
            if p.side == side:
                return p
        return None

    def max_residual(self, system: AdmissibleSystem) -> float:
        return max(float(np.max(np.abs(system.F(p.x[k], p.lam[k]))))
                   for p in self.pieces for k in range(len(p.lam)))


@dataclass
class OracleResult:
    branches: list[LinkedBranch]
    config: OracleConfig
    discarded: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.branches)

    @property
    def nontrivial(self) -> list[LinkedBranch]:
        return [b for b in self.branches if not b.trivial]

    def equilibria_at(self, side: int, index: int = 0) -> np.ndarray:
        """Points of all pieces on one side at a given grid index."""
        pts = []
        for b in self.branches:
            p = b.piece(side)
            if p is not None and len(p.lam) > index:
                pts.append(p.x[index])
        return np.array(pts)


def _predict(prev: np.ndarray, last: np.ndarray) -> np.ndarray:
    """Power-law extrapolation per coordinate on a geometric grid."""
    pred = last.copy()
    ok = (np.abs(prev) > 1e-300) & (np.sign(prev) == np.sign(last))
    pred[ok] = last[ok] * (last[ok] / prev[ok])
    return pred


def _candidates(track: dict, lams: np.ndarray, k: int) -> np.ndarray:
    """Predicted positions of a track at ``lams[k]``.

    With one point only, the growth law is unknown, so the usual exponents are
    all tried.
    """
    pts = track["pts"]
    if len(pts) > 1:
        return _predict(pts[-2], pts[-1])[None, :]
    r = lams[k] / lams[track["idx"][-1]]
    return np.array([pts[-1] * r**a for a in (1.0, 0.5, 0.25)])


def _trace_side(system: AdmissibleSystem, side: int, cfg: OracleConfig, notes: list[str]) -> list[NumericalBranch]:
    lams = cfg.grid(side)
    tracks: list[dict] = []  # {"idx": [...], "pts": [...], "alive": bool}
    for k, lam in enumerate(lams):
        cands = [_candidates(t, lams, k) for t in tracks if t["alive"]]
        extra = np.vstack(cands) if cands else None
        full = k % cfg.full_grid_every == 0 or k == len(lams) - 1
        E = solve_equilibria(system, lam, cfg, extra, full_grid=full)
        alive = [t for t in tracks if t["alive"]]
        if alive and len(E):
            C = np.empty((len(alive), len(E)))
            for r, P in enumerate(cands):
                scale = 1e-12 + np.maximum(np.max(np.abs(P), axis=1)[:, None], np.max(np.abs(E), axis=1)[None, :])
                C[r] = (np.max(np.abs(P[:, None, :] - E[None, :, :]), axis=2) / scale).min(axis=0)
            rows, cols = linear_sum_assignment(C)
            used = set()
            for r, c in zip(rows, cols):
                if C[r, c] > 0.5:
                    continue
                others = np.delete(C[r], c)
                if others.size and others.min() < 2 * C[r, c] and C[r, c] > 1e-3:
                    msg = f"ambiguous link at lam={lam:.3e} (cost {C[r, c]:.2e} vs {others.min():.2e})"
                    notes.append(msg)
                    warnings.warn(msg, LinkWarning, stacklevel=3)
                alive[r]["pts"].append(E[c])
                alive[r]["idx"].append(k)
                used.add(c)
            for r, t in enumerate(alive):
                if t["idx"][-1] != k:
                    t["alive"] = False
            new = [E[c] for c in range(len(E)) if c not in used]
        else:
            for t in alive:
                t["alive"] = False
            new = list(E)
        for p in new:
            tracks.append({"idx": [k], "pts": [p], "alive": True})
    out = []
    for t in tracks:
        idx = np.array(t["idx"])
        out.append(NumericalBranch(lams[idx], np.array(t["pts"])).fit(cfg))
    return out


def _from_origin(b: NumericalBranch, cfg: OracleConfig) -> bool:
    """Keep branches seen from the smallest ``|lam|`` on, shrinking towards zero."""
    if abs(b.lam[0]) > cfg.lambda_min * 1.0001 or len(b.lam) < cfg.min_fit_points:
        return False
    if b.trivial:
        return True
    norms = np.max(np.abs(b.x), axis=1)
    slope, _ = fit_growth_exponent(b.lam, norms, cfg)
    return slope > 0.1


def link_sides(pos: list[NumericalBranch], neg: list[NumericalBranch], rtol: float = 1e-3) -> list[LinkedBranch]:
    """Join pieces that continue each other smoothly through ``lam = 0``.

    Two pieces are joined when both are tangent to the same line ``x = a lam``
    (every nonzero cell grows linearly) or both are identically zero.
    """
    def smooth(b):
        ex = b.exponents[b.exponents != 0]
        return b.trivial or bool(np.all(np.abs(ex - 1) < 0.1))

    P = [b for b in pos if smooth(b)]
    N = [b for b in neg if smooth(b)]
    pairs = []
    if P and N:
        C = np.full((len(P), len(N)), np.inf)
        for i, p in enumerate(P):
            for j, q in enumerate(N):
                if p.trivial != q.trivial:
                    continue
                if p.trivial:
                    C[i, j] = 0.0
                    continue
                a, b = p.limit_slope(), q.limit_slope()
                C[i, j] = np.max(np.abs(a - b)) / (1 + np.max(np.abs(a)))
        finite = np.where(np.isfinite(C), C, 1e9)
        rows, cols = linear_sum_assignment(finite)
        pairs = [(P[r], N[c]) for r, c in zip(rows, cols) if C[r, c] <= rtol]
    paired = {id(x) for pr in pairs for x in pr}
    out = [LinkedBranch([p, q]) for p, q in pairs]
    out += [LinkedBranch([b]) for b in pos + neg if id(b) not in paired]
    return out


def trace_branches(system: AdmissibleSystem, config: OracleConfig | None = None) -> OracleResult:
    """Trace every equilibrium branch through the origin on both sides."""
    cfg = config or OracleConfig()
    notes: list[str] = []
    sides = {}
    discarded = 0
    for side in (1, -1):
        raw = _trace_side(system, side, cfg, notes)
        kept = [b for b in raw if _from_origin(b, cfg)]
        discarded += len(raw) - len(kept)
        sides[side] = kept
    branches = link_sides(sides[1], sides[-1])
    if not branches:
        raise NumericalError("no branch through the origin was found (not even the trivial one)")
    branches.sort(key=lambda b: (not b.trivial, b.domain, tuple(np.round(b.exponents, 2))))
    return OracleResult(branches, cfg, discarded, notes)


def numerical_jordan_check(L, mu, rtol: float = 1e-9) -> tuple[int, int]:
    """Float ``(m_a, m_g)`` of ``mu``: rank deficiency of ``L - mu`` and of its
    powers once the rank stops dropping."""
    A = np.asarray(L, dtype=complex) - complex(mu) * np.eye(len(L))
    n = len(A)
    m_g = n - numeric_rank(A, rtol)
    P, r = A, n - m_g
    while True:
        P = P @ A
        r_next = numeric_rank(P, rtol)
        if r_next == r:
            return n - r, m_g
        r = r_next


def branch_rows(result: OracleResult):
    """Rows ``(branch id, lam, x_1..x_n)`` for CSV output."""
    for i, b in enumerate(result.branches):
        for p in sorted(b.pieces, key=lambda q: q.side):
            for lam, x in zip(p.lam, p.x):
                yield (i, lam, *x)
