"""Compare analytic branch predictions with the numerical oracle.

Each oracle branch is attributed to the seed it restricts to (the first
component's coordinates for seeds of the first component, the second's
otherwise), then predicted and observed branches of the same seed are paired
by domain, triviality and per-cell exponents.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .branches import BOTH, BranchSeed, CaseTag, PredictedBranch, PredictionReport, predict
from .continuation import LinkedBranch, OracleConfig, OracleResult, trace_branches
from .errors import NumericalError
from .network import Coalescence
from .system import DiffusiveJet, realize_polynomial_system

AGREE, DISAGREE, UNPREDICTED = "agree", "disagree", "not predicted"


@dataclass(frozen=True)
class MatchRow:
    seed: int | None  # index into the prediction report; None if unattributed
    case: str
    predicted: PredictedBranch | None
    observed: LinkedBranch | None
    verdict: str
    reason: str = ""

    @property
    def observed_exponents(self) -> tuple:
        return tuple(float(e) for e in self.observed.exponents) if self.observed is not None else ()


@dataclass
class Verification:
    report: PredictionReport
    oracle: OracleResult
    rows: list[MatchRow]
    exponent_tol: float
    seconds: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(r.verdict != DISAGREE for r in self.rows)

    @property
    def disagreements(self) -> list[MatchRow]:
        return [r for r in self.rows if r.verdict == DISAGREE]

    def observed_count(self, side: int, nontrivial: bool = True) -> int:
        want = "positive-only" if side > 0 else "negative-only"
        return sum(1 for b in self.oracle.branches
                   if b.domain in (BOTH, want) and not (nontrivial and b.trivial))


def _restriction(coal: Coalescence, seed: BranchSeed, x: np.ndarray) -> np.ndarray:
    n1 = coal.n1
    return x[:n1] if seed.component == "first" else x[n1 - 1:]


def attribute(coal: Coalescence, seeds: list[BranchSeed], branch: LinkedBranch, tol: float = 1e-7) -> int | None:
    """Index of the seed an oracle branch restricts to, or ``None``."""
    piece = min(branch.pieces, key=lambda p: np.min(np.abs(p.lam)))
    k = int(np.argmin(np.abs(piece.lam)))
    lam, x = piece.lam[k], piece.x[k]
    best, best_err = None, np.inf
    for i, seed in enumerate(seeds):
        if not seed.covers(np.sign(lam)):
            continue
        part = _restriction(coal, seed, x)
        try:
            ref = seed.evaluate(lam)
        except NumericalError:
            continue
        err = np.max(np.abs(part - ref)) / (1e-300 + max(np.max(np.abs(ref)), np.max(np.abs(part)), abs(lam)))
        if err < best_err:
            best, best_err = i, err
    return best if best_err <= tol else None


def _fits(pred: PredictedBranch, obs: LinkedBranch, tol: float) -> tuple[bool, str]:
    if pred.trivial != obs.trivial:
        return False, "triviality differs"
    if pred.domain != obs.domain:
        return False, f"domain {pred.domain} vs {obs.domain}"
    ex = np.array([float(e) for e in pred.exponents])
    gap = np.abs(ex - obs.exponents)
    if np.any(gap > tol):
        cells = [int(i) + 1 for i in np.flatnonzero(gap > tol)]
        return False, f"exponents differ at cells {cells}"
    return True, ""


def compare(report: PredictionReport, oracle: OracleResult, exponent_tol: float = 0.05) -> list[MatchRow]:
    """Pair predictions with oracle branches; one row per branch on either side."""
    coal = report.coal
    seeds = [p.seed for p in report.predictions]
    groups: dict = {}
    rows: list[MatchRow] = []
    for b in oracle.branches:
        i = attribute(coal, seeds, b)
        if i is None:
            rows.append(MatchRow(None, "", None, b, DISAGREE, "branch restricts to no known seed"))
        else:
            groups.setdefault(i, []).append(b)
    for i, pred in enumerate(report.predictions):
        observed = groups.get(i, [])
        case = str(pred.case_tag)
        if pred.case_tag is CaseTag.DEGENERATE:
            rows.extend(MatchRow(i, case, None, b, UNPREDICTED, pred.note) for b in observed)
            continue
        predicted = list(pred.branches)
        C = np.ones((len(predicted), len(observed)))
        reasons = {}
        for r, p in enumerate(predicted):
            for c, o in enumerate(observed):
                good, why = _fits(p, o, exponent_tol)
                C[r, c] = 0.0 if good else 1.0
                reasons[r, c] = why
        used_r, used_c = set(), set()
        if predicted and observed:
            rr, cc = linear_sum_assignment(C)
            for r, c in zip(rr, cc):
                if C[r, c] == 0.0:
                    rows.append(MatchRow(i, case, predicted[r], observed[c], AGREE))
                    used_r.add(r)
                    used_c.add(c)
        left_obs = [c for c in range(len(observed)) if c not in used_c]
        for r in range(len(predicted)):
            if r in used_r:
                continue
            if left_obs:
                c = left_obs.pop(0)
                rows.append(MatchRow(i, case, predicted[r], observed[c], DISAGREE, reasons[r, c]))
            else:
                rows.append(MatchRow(i, case, predicted[r], None, DISAGREE, "no oracle branch"))
        rows.extend(MatchRow(i, case, None, observed[c], DISAGREE, "oracle branch not predicted")
                    for c in left_obs)
    return rows


def verify(coal: Coalescence, jet: DiffusiveJet, config: OracleConfig | None = None,
           exponent_tol: float = 0.05) -> Verification:
    """Predict, run the oracle on the coalescence, and compare."""
    config = config or OracleConfig()
    t0 = time.perf_counter()
    report = predict(coal, jet, config)
    t1 = time.perf_counter()
    oracle = trace_branches(realize_polynomial_system(coal.network, jet), config)
    t2 = time.perf_counter()
    rows = compare(report, oracle, exponent_tol)
    return Verification(report, oracle, rows, exponent_tol, {"predict": t1 - t0, "oracle": t2 - t1})
