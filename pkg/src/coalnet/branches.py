"""Extension of component equilibrium branches to a feedforward coalescence.

Given a branch ``b(lam)`` of the first component (the *seed*), the second
component's non-merge cells must solve

    Phi(t, lam) = F_tail(b_c(lam), t, lam) = 0,      t in R^(n2 - 1),

whose linearization at the origin is ``J = h_1 (L_tail - mu I)``.  This module
decides which local picture applies and computes it exactly.

Two independent routes are used and cross-checked:

* a bordered power-series solve in a kernel coordinate ``s`` (valid when the
  merge-cell forcing is not in the image of ``J``), giving ``lam(s)`` and
  ``t(s)`` order by order;
* a Lyapunov-Schmidt expansion of the scalar bifurcation function
  ``psi(y, lam)`` with ``t = y v + W(y, lam)``, from which ``lam = Lambda(y)``
  is solved.

Closed forms for ``H``, ``psi_ylam`` and ``psi_yyy`` are evaluated separately
and must agree with the expansion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import factorial

import numpy as np
import sympy as sp

from . import linalg as la
from .continuation import OracleConfig, newton, trace_branches
from .errors import (ConsistencyError, GenericityError, NumericalError, PreconditionError,
                     RankError)
from .network import Coalescence, Network, adjacency, laplacian
from .spectral import reduced_laplacians
from .system import LAM, AdmissibleSystem, DiffusiveJet, realize_polynomial_system

Y = sp.Symbol("y")
S = sp.Symbol("s")

BOTH, POSITIVE, NEGATIVE = "both", "positive-only", "negative-only"


class CaseTag(str, Enum):
    ONLY_IN_FIRST = "OnlyInFirst"
    ONLY_IN_SECOND = "OnlyInSecond"
    SQRT = "SqrtCase"
    LINEAR = "LinearCase"
    QUARTER_ROOT = "QuarterRootCase"
    PITCHFORK = "PitchforkLSCase"
    DEGENERATE = "DegenerateUnclassified"

    def __str__(self) -> str:
        return self.value


def _domain_of(sign) -> str:
    return POSITIVE if sign > 0 else NEGATIVE


def _is_zero(x) -> bool:
    x = sp.sympify(x)
    if x.is_number:
        return sp.nsimplify(x) == 0 if not x.is_Rational else x == 0
    return sp.simplify(x) == 0


def _sign(x) -> int:
    x = sp.simplify(x)
    if not x.is_number:
        raise PreconditionError(f"sign of {x} is undetermined for a symbolic jet")
    return int(sp.sign(x))


def _quarter(x: float) -> Fraction:
    """Nearest value in {0, 1/4, 1/2, 1} (fitted exponents are reported this way)."""
    return min((Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1)), key=lambda q: abs(float(q) - x))


# seeds ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BranchSeed:
    """An equilibrium branch of one component network.

    ``series`` holds exact Taylor coefficients ``a_1, a_2, ...`` of
    ``b(lam) = sum a_k lam^k`` when the branch is a regular curve in ``lam``;
    it is empty for other branches, which are then known from samples only.
    Coordinates follow the component in coalescence order (merge cell last for
    the first component, first for the second).
    """

    component: str
    series: tuple = ()
    exponents: tuple = ()
    domain: str = BOTH
    system: AdmissibleSystem | None = None
    lam: np.ndarray | None = None
    x: np.ndarray | None = None
    trivial: bool = False
    note: str = ""

    @property
    def n(self) -> int:
        if self.series:
            return self.series[0].rows
        return self.x.shape[1]

    @property
    def merge_index(self) -> int:
        return self.n - 1 if self.component == "first" else 0

    @property
    def slope(self) -> sp.Matrix | None:
        return self.series[0] if self.series else None

    @property
    def slope_c(self):
        """``b_c'(0)``: derivative of the merge-cell coordinate."""
        if not self.series:
            return None
        return self.series[0][self.merge_index]

    def c_series(self, order: int) -> list:
        """Merge-cell Taylor coefficients ``c_1..c_order`` (zero beyond the known ones)."""
        if self.trivial:
            return [sp.Integer(0)] * order
        if len(self.series) < order:
            raise GenericityError(f"seed known to order {len(self.series)}, {order} needed")
        return [a[self.merge_index] for a in self.series[:order]]

    def covers(self, side: int) -> bool:
        return self.domain == BOTH or self.domain == (POSITIVE if side > 0 else NEGATIVE)

    def evaluate(self, lam: float) -> np.ndarray:
        """State of the seed branch at ``lam``, polished by Newton on its network."""
        if self.trivial:
            return np.zeros(self.n)
        if not self.covers(np.sign(lam)):
            raise NumericalError(f"seed branch does not exist at lam={lam:g}")
        if self.series:
            x0 = np.array([float(sum(a[i] * lam ** (k + 1) for k, a in enumerate(self.series)))
                           for i in range(self.n)])
        else:
            x0 = self._interpolate(lam)
        if self.system is None:
            return x0
        cfg = OracleConfig()
        X, ok = newton(self.system, x0[None, :], lam, cfg)
        if not ok[0]:
            raise NumericalError(f"Newton failed to polish the seed at lam={lam:g}")
        return X[0]

    def _interpolate(self, lam: float) -> np.ndarray:
        mask = np.sign(self.lam) == np.sign(lam)
        ls, xs = np.abs(self.lam[mask]), self.x[mask]
        order = np.argsort(ls)
        ls, xs = ls[order], xs[order]
        k = np.searchsorted(ls, abs(lam))
        k = min(max(k, 1), len(ls) - 1)
        out = np.zeros(xs.shape[1])
        for i in range(xs.shape[1]):
            a, b = xs[k - 1, i], xs[k, i]
            if a == 0 or b == 0 or np.sign(a) != np.sign(b):
                out[i] = a + (b - a) * (abs(lam) - ls[k - 1]) / (ls[k] - ls[k - 1])
            else:
                p = np.log(b / a) / np.log(ls[k] / ls[k - 1])
                out[i] = a * (abs(lam) / ls[k - 1]) ** p
        return out


def _series_coeff(exprs, subs: dict, var, k: int) -> sp.Matrix:
    return sp.Matrix([sp.expand(sp.expand(e.xreplace(subs)).coeff(var, k)) for e in exprs])


def _jacobian_at_origin(exprs, xs) -> sp.Matrix:
    zero = {x: 0 for x in xs} | {LAM: 0}
    return sp.Matrix([[sp.diff(e, x).subs(zero) for x in xs] for e in exprs])


def regular_series(system: AdmissibleSystem, a1, order: int) -> tuple:
    """Taylor coefficients ``a_1..a_order`` of the branch with tangent ``a1``.

    At each order the kernel part of the previous coefficient is fixed by the
    solvability condition of the next one.

    Raises:
        ConsistencyError: ``a1`` is not the tangent of a branch.
        GenericityError: the solvability conditions do not fix the kernel part.
    """
    xs, exprs = system.symbolic_field()
    J = _jacobian_at_origin(exprs, xs)
    K = la.nullspace(J)
    U = la.left_nullspace(J)
    a1 = sp.Matrix(a1)
    if any(not _is_zero(e) for e in J * a1):
        raise ConsistencyError("seed tangent is not in the kernel of the Jacobian")
    coeffs = [a1]
    pending: list = []
    for k in range(2, order + 2):
        subs = {x: sum(c[i] * LAM ** (j + 1) for j, c in enumerate(coeffs)) for i, x in enumerate(xs)}
        r = _series_coeff(exprs, subs, LAM, k)
        cond = [sp.expand((u.T * r)[0]) for u in U]
        if pending:
            sol = sp.solve(cond, pending, dict=True)
            if len(sol) != 1 or set(sol[0]) != set(pending):
                raise GenericityError("solvability conditions do not determine the branch")
            coeffs[-1] = coeffs[-1].subs(sol[0]).applyfunc(sp.simplify)
            r = r.subs(sol[0])
        elif any(not _is_zero(c) for c in cond):
            raise ConsistencyError("seed tangent fails the second-order solvability condition")
        if k > order:
            break
        p = la.solve_particular(J, -r.applyfunc(sp.simplify))
        if p is None:
            raise ConsistencyError(f"order {k} of the seed series is not solvable")
        pending = list(sp.symbols(f"theta_{k}_0:{len(K)}"))
        coeffs.append(p + sum((t * kv for t, kv in zip(pending, K)), sp.zeros(len(xs), 1)))
    return tuple(coeffs[:order])


def transcritical_tangents(system: AdmissibleSystem) -> list[sp.Matrix]:
    """Tangents of the regular (transcritical) branches through the origin.

    With ``K`` a kernel basis and ``U`` a cokernel basis of the Jacobian, a
    tangent ``K alpha`` must satisfy
    ``U^T (D2F(K alpha, K alpha) / 2 + F_xlam K alpha) = 0``.
    Only isolated nonzero real solutions are returned.
    """
    xs, exprs = system.symbolic_field()
    J = _jacobian_at_origin(exprs, xs)
    K = la.nullspace(J)
    U = la.left_nullspace(J)
    if not K:
        return []
    alpha = sp.symbols(f"alpha0:{len(K)}")
    a1 = sum((a * kv for a, kv in zip(alpha, K)), sp.zeros(len(xs), 1))
    subs = {x: a1[i] * LAM for i, x in enumerate(xs)}
    r = _series_coeff(exprs, subs, LAM, 2)
    eqs = [sp.expand((u.T * r)[0]) for u in U]
    if all(e == 0 for e in eqs):
        return []
    sols = sp.solve(eqs, alpha, dict=True)
    out = []
    for sol in sols:
        if set(sol) != set(alpha):
            continue  # a continuum of solutions: no isolated tangent
        vec = a1.subs(sol).applyfunc(sp.simplify)
        if all(_is_zero(e) for e in vec):
            continue
        if any(not (sp.im(e) == 0) for e in vec):
            continue
        out.append(vec)
    return out


def scalar_reduction_slope(jet: DiffusiveJet, mu):
    """``b'(0)`` for a branch ``x = b 1_S`` on a cell set ``S`` closed under outputs."""
    return sp.simplify(-2 * (jet.g_xlam + mu * jet.h_1lam) / (jet.g_xx + mu * jet.h_11))


def _closed_support(net: Network, v) -> bool:
    """True if ``v`` is a 0/1 vector whose support sends no edge outside it."""
    if any(e not in (0, 1) for e in v):
        return False
    support = {i + 1 for i, e in enumerate(v) if e == 1}
    return not any(s in support and t not in support for (s, t) in net.weights)


def _fit_slope(branch) -> np.ndarray:
    piece = branch.piece(1) or branch.piece(-1)
    return piece.limit_slope()


def n1_branch_seeds(net1: Network, jet: DiffusiveJet, config: OracleConfig | None = None,
                    order: int = 4, component: str = "first") -> list[BranchSeed]:
    """Seeds of one component: every branch the oracle finds, made exact where possible.

    Regular branches are matched against the closed-form transcritical tangents
    and carry their exact Taylor series; others keep their samples.

    Raises:
        PreconditionError: the critical eigenvalue is not in the component spectrum.
        ConsistencyError: the oracle misses a closed-form branch.
    """
    if not jet.is_numeric():
        raise PreconditionError("seeds need a numeric jet")
    mu = jet.critical_eigenvalue
    t = sp.Symbol("t")
    if sp.Matrix(laplacian(net1)).charpoly(t).as_expr().subs(t, mu) != 0:
        raise PreconditionError(f"mu = {mu} is not an eigenvalue of the component Laplacian")
    system = realize_polynomial_system(net1, jet)
    tangents = transcritical_tangents(system)
    oracle = trace_branches(system, config)
    cfg = oracle.config
    seeds: list[BranchSeed] = []
    matched = [False] * len(tangents)
    for br in oracle.branches:
        if br.trivial:
            zero = sp.zeros(net1.n_cells, 1)
            seeds.append(BranchSeed(component, (zero,) * order, (Fraction(0),) * net1.n_cells, BOTH,
                                    system, trivial=True))
            continue
        ex = br.exponents
        lam, x = _samples(br)
        regular = all(abs(e - 1) < 0.1 or e == 0 for e in ex)
        if regular and br.domain == BOTH:
            fit = _fit_slope(br)
            for k, tg in enumerate(tangents):
                tv = np.array([float(e) for e in tg], dtype=float)
                if np.max(np.abs(tv - fit)) <= 1e-3 * (1 + np.max(np.abs(tv))):
                    matched[k] = True
                    series = regular_series(system, tg, order)
                    exps = tuple(_series_exponent(series, i) for i in range(net1.n_cells))
                    seeds.append(BranchSeed(component, series, exps, BOTH, system, lam, x))
                    break
            else:
                seeds.append(BranchSeed(component, (), tuple(_quarter(e) for e in ex), br.domain, system,
                                        lam, x, note="regular branch without an exact tangent"))
        else:
            seeds.append(BranchSeed(component, (), tuple(_quarter(e) for e in ex), br.domain, system, lam, x))
    if not all(matched):
        missing = [list(tangents[k]) for k in range(len(tangents)) if not matched[k]]
        raise ConsistencyError(f"oracle missed closed-form branches with tangents {missing}")
    return seeds


def _samples(br) -> tuple[np.ndarray, np.ndarray]:
    lam = np.concatenate([p.lam for p in br.pieces])
    x = np.vstack([p.x for p in br.pieces])
    return lam, x


def _series_exponent(series, i: int) -> Fraction:
    for k, a in enumerate(series):
        if not _is_zero(a[i]):
            return Fraction(k + 1)
    return Fraction(0)


def closed_form_seeds(net1: Network, jet: DiffusiveJet, order: int = 2) -> list[BranchSeed]:
    """Trivial seed plus one seed per closed-form transcritical tangent (symbolic jets allowed)."""
    system = realize_polynomial_system(net1, jet)
    n = net1.n_cells
    seeds = [BranchSeed("first", (sp.zeros(n, 1),) * order, (Fraction(0),) * n, BOTH, system, trivial=True)]
    for tg in transcritical_tangents(system):
        series = regular_series(system, tg, order)
        seeds.append(BranchSeed("first", series, tuple(_series_exponent(series, i) for i in range(n)),
                                BOTH, system))
    return seeds


# tail problem ------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TailProblem:
    """The second component's non-merge equations with the merge cell as forcing."""

    coal: Coalescence
    jet: DiffusiveJet
    mu: object
    system: AdmissibleSystem
    n1: int
    ts: tuple  # tail state symbols
    xc: sp.Symbol
    exprs: tuple  # tail equations in ts, xc, LAM
    M: sp.Matrix  # L_tail - mu I
    L_c: sp.Matrix
    L_tail: sp.Matrix

    @property
    def m(self) -> int:
        return len(self.ts)

    @property
    def J(self) -> sp.Matrix:
        return self.jet.h_1 * self.M

    def kernel(self) -> list[sp.Matrix]:
        return la.nullspace(self.M)

    def rational_v(self) -> tuple[sp.Matrix, sp.Matrix]:
        """Kernel and cokernel vectors (first nonzero entry of ``v`` is 1; ``<v*, v> >= 0``)."""
        K = self.kernel()
        if len(K) != 1:
            raise RankError(f"kernel of L_tail - mu I has dimension {len(K)}, expected 1")
        v = la.normalize_first(K[0])
        vs = la.normalize_first(la.left_nullspace(self.M)[0])
        if (vs.T * v)[0] < 0:
            vs = -vs
        return v, vs

    def forced(self, c_series) -> list:
        """Tail equations with ``x_c = sum c_k lam^k`` substituted."""
        xc_expr = sum(c * LAM ** (k + 1) for k, c in enumerate(c_series))
        return [e.xreplace({self.xc: xc_expr}) for e in self.exprs]


def tail_problem(coal: Coalescence, jet: DiffusiveJet) -> TailProblem:
    coal.require_ffcn()
    if jet.g_x is None:
        raise PreconditionError("the jet has no g_x; set the critical eigenvalue first")
    mu = jet.critical_eigenvalue
    blocks = reduced_laplacians(coal)
    system = realize_polynomial_system(coal.network, jet)
    xs, F = system.symbolic_field()
    n1 = coal.n1
    M = sp.Matrix(blocks.L_tail) - mu * sp.eye(coal.n2 - 1)
    return TailProblem(coal, jet, mu, system, n1, tuple(xs[n1:]), xs[n1 - 1], tuple(F[n1:]), M,
                       sp.Matrix(blocks.L_c), sp.Matrix(blocks.L_tail))


# H vector -----------------------------------------------------------------------


@dataclass(frozen=True)
class HVector:
    v: sp.Matrix
    H: sp.Matrix
    H_structural: sp.Matrix


def compute_H(coal: Coalescence, jet: DiffusiveJet, mu=None, v=None) -> HVector:
    """Second derivative of the tail equations along the kernel vector, two ways.

    The Hessian form sums ``v^T Hess(f_j) v``; the structural form is
    ``(g_xx + mu h_11) v*v + h_22 (W' v^2 - (W' v)*v)`` with ``W'`` the
    off-diagonal adjacency among the non-merge cells of the second component.

    Raises:
        RankError: the kernel of ``L_tail - mu I`` is not one-dimensional.
        ConsistencyError: the two forms differ.
    """
    if mu is not None:
        jet = jet.at_eigenvalue(mu)
    prob = tail_problem(coal, jet)
    mu = prob.mu
    if v is None:
        v, _ = prob.rational_v()
    else:
        v = sp.Matrix(v)
        if len(prob.kernel()) != 1:
            raise RankError("kernel of L_tail - mu I is not one-dimensional")
        if any(not _is_zero(e) for e in prob.M * v):
            raise ConsistencyError("v is not in the kernel of L_tail - mu I")
    T = prob.system.tensors
    tail = range(prob.n1, prob.n1 + prob.m)
    full = sp.zeros(prob.system.n, 1)
    for k, i in enumerate(tail):
        full[i] = v[k]
    H = sp.Matrix([T.hess(i, full, full) for i in tail])
    W2 = sp.Matrix(adjacency(coal.second_ordered()))[1:, 1:]
    for i in range(W2.rows):
        W2[i, i] = 0
    vv = v.multiply_elementwise(v)
    Hs = (jet.g_xx + mu * jet.h_11) * vv + jet.h_22 * (W2 * vv - (W2 * v).multiply_elementwise(v))
    H, Hs = H.applyfunc(sp.expand), Hs.applyfunc(sp.expand)
    if any(not _is_zero(a - b) for a, b in zip(H, Hs)):
        raise ConsistencyError(f"Hessian form {list(H)} and structural form {list(Hs)} of H disagree")
    return HVector(v, H, Hs)


# route A: bordered series in a kernel coordinate --------------------------------


@dataclass(frozen=True)
class KernelSeries:
    """``t(s) = sum x_k s^k``, ``lam(s) = sum ell_k s^k`` with ``t_d = s``."""

    d: int
    ell: tuple
    x: tuple
    m: int | None

    def exponents(self) -> tuple:
        """Growth exponent per tail cell: (first nonzero order of ``t_j``) / m."""
        out = []
        for j in range(len(self.x[0])):
            k = next((k for k, xk in enumerate(self.x) if not _is_zero(xk[j])), None)
            out.append(Fraction(0) if k is None or self.m is None else Fraction(k + 1, self.m))
        return tuple(out)


def kernel_series(prob: TailProblem, c_series, max_order: int = 8) -> KernelSeries:
    """Solve the forced tail equations as power series in the kernel coordinate.

    Each order solves the bordered system ``[J (others) | h_1 c_1 L_c]``, which
    is nonsingular exactly when ``c_1 L_c`` is outside ``Im J``.  Stops at
    twice the first nonzero order of ``lam(s)``.

    Raises:
        PreconditionError: the bordered system is singular.
    """
    v, _ = prob.rational_v()
    d = next(i for i, e in enumerate(v) if e != 0)
    c1 = c_series[0]
    others = [j for j in range(prob.m) if j != d]
    B = prob.J[:, others].row_join(prob.jet.h_1 * c1 * prob.L_c)
    if _is_zero(B.det()):
        raise PreconditionError("merge-cell forcing lies in the image of the tail Jacobian")
    Binv = B.inv()
    eqs = prob.forced(list(c_series) + [0] * max(0, max_order - len(c_series)))
    xs: list[sp.Matrix] = []
    ell: list = []
    m = None
    for k in range(1, max_order + 1):
        t_expr = [sum(xk[j] * S ** (i + 1) for i, xk in enumerate(xs)) + (S if (k == 1 and j == d) else 0)
                  for j in range(prob.m)]
        lam_expr = sum(e * S ** (i + 1) for i, e in enumerate(ell))
        subs = {t: t_expr[j] for j, t in enumerate(prob.ts)} | {LAM: lam_expr}
        r = _series_coeff(eqs, subs, S, k)
        z = (-Binv * r).applyfunc(sp.simplify)
        xk = sp.zeros(prob.m, 1)
        if k == 1:
            xk[d] = 1
        for i, j in enumerate(others):
            xk[j] = z[i]
        xs.append(xk)
        ell.append(z[-1])
        if m is None and not _is_zero(z[-1]):
            m = k
        if m is not None and k >= 2 * m:
            break
        if m is None and k >= 4:
            break
    return KernelSeries(d, tuple(ell), tuple(xs), m)


# route B: Lyapunov-Schmidt expansion ---------------------------------------------


@dataclass(frozen=True)
class LSExpansion:
    """Taylor data of ``psi(y, lam) = <v*, Phi(y v + W(y, lam), lam)>``.

    Stored with the rational vectors of :meth:`TailProblem.rational_v`;
    :meth:`derivative` converts to unit ``v`` and ``v*``.
    """

    v: sp.Matrix
    v_star: sp.Matrix
    psi: dict  # (a, b) -> coefficient of y^a lam^b
    W: dict  # (a, b) -> vector coefficient
    degree: int

    @property
    def v_norm(self):
        return sp.sqrt((self.v.T * self.v)[0])

    @property
    def v_star_norm(self):
        return sp.sqrt((self.v_star.T * self.v_star)[0])

    def derivative(self, a: int, b: int):
        """``d^(a+b) psi / dy^a dlam^b`` at 0 for unit ``v`` and ``v*``."""
        c = self.psi.get((a, b), 0)
        return sp.simplify(factorial(a) * factorial(b) * c / (self.v_star_norm * self.v_norm ** a))


def ls_expansion(prob: TailProblem, c_series, degree: int = 4) -> LSExpansion:
    """Exact expansion of ``psi`` and ``W`` up to total degree ``degree``.

    ``W`` takes values in the orthogonal complement of ``v``; the range
    equations are projected orthogonally to ``v*``.
    """
    v, vs = prob.rational_v()
    comp = la.nullspace(v.T)
    Q = sp.eye(prob.m) - vs * vs.T / (vs.T * vs)[0]
    eqs = prob.forced(list(c_series) + [0] * max(0, degree - len(c_series)))
    W: dict = {}
    psi: dict = {}
    J = prob.J
    for d in range(1, degree + 1):
        t_expr = [Y * v[j] + sum(w[j] * Y ** a * LAM ** b for (a, b), w in W.items()) for j in range(prob.m)]
        subs = {t: t_expr[j] for j, t in enumerate(prob.ts)}
        polys = [sp.Poly(sp.expand(e.xreplace(subs)), Y, LAM) for e in eqs]
        for a in range(d, -1, -1):
            b = d - a
            r = sp.Matrix([p.coeff_monomial(Y ** a * LAM ** b) for p in polys])
            psi[(a, b)] = sp.simplify((vs.T * r)[0])
            if (a, b) == (1, 0):
                continue
            rhs = -(Q * r)
            if all(_is_zero(e) for e in rhs):
                W[(a, b)] = sp.zeros(prob.m, 1)
            else:
                W[(a, b)] = la.solve_in_subspace(J, rhs, comp) if comp else sp.zeros(prob.m, 1)
    return LSExpansion(v, vs, psi, W, degree)


def _solve_lambda(coeffs: dict, order: int) -> list:
    """Series ``Lambda(y) = sum L_k y^k`` with ``f(y, Lambda(y)) = 0``, given ``f_lam != 0``.

    ``coeffs[(a, b)]`` are the Taylor coefficients of ``f`` and ``f(0, 0) = 0``.
    """
    f_lam = coeffs.get((0, 1), 0)
    L: list = []
    for k in range(1, order + 1):
        lam_expr = sum(c * Y ** (i + 1) for i, c in enumerate(L))
        total = sum(c * Y ** a * lam_expr ** b for (a, b), c in coeffs.items() if c != 0 and a + b <= order)
        rk = sp.expand(total).coeff(Y, k)
        L.append(sp.simplify(-rk / f_lam))
    return L


# closed forms (second route) ---------------------------------------------------------


def _tail_tensors(prob: TailProblem):
    T = prob.system.tensors
    tail = list(range(prob.n1, prob.n1 + prob.m))
    return T, tail


def _pad(prob: TailProblem, w) -> sp.Matrix:
    full = sp.zeros(prob.system.n, 1)
    for k in range(prob.m):
        full[prob.n1 + k] = w[k]
    return full


def psi_ylam_closed_form(prob: TailProblem, c1, v=None, vs=None):
    """``<v*, D2 Phi(v, W_lam) + c_1 D_xc D_t Phi v + Phi_tlam v>`` (rational ``v``, ``v*``)."""
    if v is None:
        v, vs = prob.rational_v()
    T, tail = _tail_tensors(prob)
    forcing = prob.jet.h_1 * c1 * prob.L_c
    comp = la.nullspace(v.T)
    W_lam = la.solve_in_subspace(prob.J, -forcing, comp) if not all(_is_zero(e) for e in forcing) else sp.zeros(prob.m, 1)
    vf, wf = _pad(prob, v), _pad(prob, W_lam)
    ec = sp.zeros(prob.system.n, 1)
    ec[prob.n1 - 1] = 1
    term = sp.Matrix([T.hess(i, vf, wf) + c1 * T.hess(i, vf, ec) for i in tail])
    term += sp.Matrix([sum(T.DxLam[i, j] * vf[j] for j in tail) for i in tail])
    return sp.simplify((vs.T * term)[0])


def psi_yyy_closed_form(prob: TailProblem, v=None, vs=None):
    """``<v*, D3 Phi(v,v,v) + 3 D2 Phi(v, W_yy)>`` with ``J W_yy = -Q H`` (rational ``v``, ``v*``)."""
    if v is None:
        v, vs = prob.rational_v()
    T, tail = _tail_tensors(prob)
    vf = _pad(prob, v)
    H = sp.Matrix([T.hess(i, vf, vf) for i in tail])
    Q = sp.eye(prob.m) - vs * vs.T / (vs.T * vs)[0]
    comp = la.nullspace(v.T)
    rhs = -(Q * H)
    W_yy = la.solve_in_subspace(prob.J, rhs, comp) if not all(_is_zero(e) for e in rhs) else sp.zeros(prob.m, 1)
    wf = _pad(prob, W_yy)
    term = sp.Matrix([T.third(i, vf, vf, vf) + 3 * T.hess(i, vf, wf) for i in tail])
    return sp.simplify((vs.T * term)[0])


# predictions -------------------------------------------------------------------------


@dataclass(frozen=True)
class PredictedBranch:
    exponents: tuple
    domain: str
    trivial: bool = False
    role: str = "bifurcating"  # or "seed-extension"


@dataclass(frozen=True)
class BranchPrediction:
    case_tag: CaseTag
    branch_count: int | None
    growth_exponent_per_cell: tuple | None
    lambda_domain: str | None
    ls_coefficients: dict = field(default_factory=dict)
    derivatives: dict = field(default_factory=dict)
    branches: tuple = ()
    seed: BranchSeed | None = None
    note: str = ""

    def count_on_side(self, side: int, nontrivial: bool = True) -> int:
        want = POSITIVE if side > 0 else NEGATIVE
        return sum(1 for b in self.branches if (b.domain in (BOTH, want)) and not (nontrivial and b.trivial))


def _char_multiplicity(A: sp.Matrix, mu) -> int:
    t = sp.Symbol("t")
    p = sp.Poly(A.charpoly(t).as_expr(), t)
    m = 0
    while p.degree() > 0 and sp.simplify(p.eval(mu)) == 0:
        p = sp.quo(p, sp.Poly(t - mu, t))
        m += 1
    return m


@dataclass(frozen=True)
class _Context:
    prob: TailProblem
    in_first: bool
    in_second: bool
    tail_multiplicity: int
    kernel_dim: int


def _context(coal: Coalescence, jet: DiffusiveJet) -> _Context:
    if not coal.is_ffcn:
        raise PreconditionError("not a feedforward coalescence")
    if jet.g_x is None:
        raise PreconditionError("the jet has no g_x")
    prob = tail_problem(coal, jet)
    mu = prob.mu
    L1 = sp.Matrix(laplacian(coal.first_ordered()))
    in_first = _char_multiplicity(L1, mu) > 0
    mult = _char_multiplicity(prob.L_tail, mu) if prob.m else 0
    if not in_first and mult == 0:
        raise PreconditionError(f"mu = {mu} is not an eigenvalue of the coalescence Laplacian")
    return _Context(prob, in_first, mult > 0, mult, len(prob.kernel()) if prob.m else 0)


def classify_case(coal: Coalescence, jet: DiffusiveJet, seed: BranchSeed) -> CaseTag:
    """Decision tree over spectra, coupling and the quadratic term ``H``."""
    ctx = _context(coal, jet)
    return _classify(ctx, seed)


def _classify(ctx: _Context, seed: BranchSeed) -> CaseTag:
    prob = ctx.prob
    if ctx.in_first and not ctx.in_second:
        return CaseTag.ONLY_IN_FIRST
    if ctx.in_second and not ctx.in_first:
        return CaseTag.ONLY_IN_SECOND
    if seed.component != "first":
        raise PreconditionError("seeds of the second component only extend when mu is not in the first")
    if not seed.trivial and not seed.series:
        return CaseTag.DEGENERATE  # no tangent: the seed does not grow linearly
    if ctx.kernel_dim != 1:
        return CaseTag.DEGENERATE
    v, _ = prob.rational_v()
    forcing = seed.slope_c * prob.L_c if not seed.trivial else sp.zeros(prob.m, 1)
    H = compute_H(prob.coal, prob.jet).H
    H_in = la.in_image(prob.M, H)
    if not la.in_image(prob.M, forcing):
        return CaseTag.QUARTER_ROOT if H_in else CaseTag.SQRT
    if ctx.tail_multiplicity == 1:
        return CaseTag.PITCHFORK if H_in else CaseTag.LINEAR
    return CaseTag.DEGENERATE


def _seed_exponents_full(seed: BranchSeed, n1: int) -> list:
    if seed.trivial:
        return [Fraction(0)] * n1
    return list(seed.exponents)


def _tail_line_exponents(exprs_by_order: list, m: int) -> list:
    out = []
    for j in range(m):
        k = next((k for k, vec in enumerate(exprs_by_order) if not _is_zero(vec[j])), None)
        out.append(Fraction(0) if k is None else Fraction(k + 1))
    return out


def _psi_series_solve(psi: dict, unknown_first: bool, lead, order: int) -> list:
    """Series along a zero curve of ``psi`` through the origin.

    With ``unknown_first`` the curve is ``y = sum r_k lam^k`` (``r_1 = lead``);
    otherwise it is ``lam = sum L_k y^k`` with ``L_1 = 0`` and ``L_2 = lead``.
    Higher coefficients are fixed order by order, which needs the derivative
    of the leading equation to be nonzero.
    """
    R = sp.Symbol("R")
    coeffs = [lead] if unknown_first else [sp.Integer(0), lead]
    indep, dep = (LAM, Y) if unknown_first else (Y, LAM)
    while len(coeffs) < order:
        k = len(coeffs) + 1
        curve = sum(c * indep ** (i + 1) for i, c in enumerate(coeffs)) + R * indep ** k
        subs = {dep: curve}
        total = sum(c * Y ** a * LAM ** b for (a, b), c in psi.items() if c != 0)
        eq = sp.expand(sp.expand(total.xreplace(subs)).coeff(indep, k + 1))
        a = eq.coeff(R, 1)
        if _is_zero(a):
            raise GenericityError("zero curve of the bifurcation function is not regular")
        coeffs.append(sp.simplify(-eq.subs(R, 0) / a))
    return coeffs


def _tail_along(exp: LSExpansion, y_expr, lam_expr, var, order: int, m: int) -> list:
    """Exponents of ``t = y v + W(y, lam)`` along a curve parametrized by ``var``; ``lam ~ var^m``."""
    out = []
    for j in range(len(exp.v)):
        e = y_expr * exp.v[j] + sum(w[j] * y_expr ** a * lam_expr ** b for (a, b), w in exp.W.items())
        e = sp.expand(e)
        k = next((k for k in range(1, order + 1) if not _is_zero(e.coeff(var, k))), None)
        out.append(Fraction(0) if k is None else Fraction(k, m))
    return out


def _linear_pitchfork(ctx: _Context, seed: BranchSeed, tag: CaseTag) -> BranchPrediction:
    prob = ctx.prob
    n1 = prob.n1
    degree = 4
    c = seed.c_series(degree)
    exp = ls_expansion(prob, c, degree)
    v, vs = exp.v, exp.v_star
    # closed forms must agree with the expansion
    H = compute_H(prob.coal, prob.jet).H
    checks = {
        "psi_yy": (sp.simplify((vs.T * H)[0]), 2 * exp.psi.get((2, 0), 0)),
        "psi_ylam": (psi_ylam_closed_form(prob, c[0], v, vs), exp.psi.get((1, 1), 0)),
        "psi_yyy": (psi_yyy_closed_form(prob, v, vs), 6 * exp.psi.get((3, 0), 0)),
    }
    for name, (a, b) in checks.items():
        if not _is_zero(a - b):
            raise ConsistencyError(f"{name}: closed form {a} differs from the expansion {b}")
    if not _is_zero(exp.psi.get((0, 1), 0)):
        raise ConsistencyError("psi_lam does not vanish although the forcing is in the image")
    p = lambda a, b: exp.psi.get((a, b), 0)  # noqa: E731
    ls = {
        "psi_yy": exp.derivative(2, 0),
        "psi_ylam": exp.derivative(1, 1),
        "psi_lamlam": exp.derivative(0, 2),
        "psi_yyy": exp.derivative(3, 0),
        "psi_yylam": exp.derivative(2, 1),
        "psi_ylamlam": exp.derivative(1, 2),
    }
    derivs = {"W_lam": exp.W.get((0, 1), sp.zeros(prob.m, 1))}
    seed_ex = _seed_exponents_full(seed, n1)
    pure = any(not _is_zero(p(0, b)) for b in range(2, degree + 1))
    if tag is CaseTag.LINEAR and _is_zero(p(2, 0)):
        tag = CaseTag.PITCHFORK

    def degenerate(note: str) -> BranchPrediction:
        return BranchPrediction(CaseTag.DEGENERATE, None, None, None, ls, derivs, (), seed, note)

    def line(r1) -> PredictedBranch:
        along_seed = not pure and _is_zero(r1)
        rs = [0, 0] if along_seed else _psi_series_solve(exp.psi, True, r1, 2)
        y_expr = sum(r * LAM ** (i + 1) for i, r in enumerate(rs))
        ex = tuple(seed_ex + _tail_along(exp, y_expr, LAM, LAM, 2, 1))
        trivial = along_seed and seed.trivial
        return PredictedBranch(ex, seed.domain, trivial=trivial,
                               role="seed-extension" if along_seed else "bifurcating")

    r = sp.Symbol("r")
    if tag is CaseTag.LINEAR:
        disc = sp.simplify(p(1, 1) ** 2 - 4 * p(2, 0) * p(0, 2))
        ls["discriminant"] = disc
        if _is_zero(disc):
            return degenerate("the quadratic part of psi has a double line")
        if _sign(disc) < 0:
            return degenerate("the quadratic part of psi is definite: no real extension")
        roots = sp.solve(p(2, 0) * r ** 2 + p(1, 1) * r + p(0, 2), r)
        branches = tuple(sorted((line(x) for x in roots), key=lambda b: b.role != "seed-extension"))
        slopes = [sp.simplify(x * exp.v_norm) for x in roots if not _is_zero(x)]
        if len(slopes) == 1:
            ls["Lambda_1"] = sp.simplify(1 / slopes[0])
        new = next((b for b in branches if b.role == "bifurcating"), branches[-1])
        return BranchPrediction(tag, 2, new.exponents, seed.domain, ls, derivs, branches, seed)
    # pitchfork: psi_yy = 0
    if not _is_zero(p(1, 1)):
        base = line(-p(0, 2) / p(1, 1))
        Ls = _psi_series_solve(exp.psi, False, -p(3, 0) / p(1, 1), 3)
        if _is_zero(Ls[1]):
            return degenerate("psi_yyy vanishes")
        ls["Lambda_2"] = sp.simplify(2 * Ls[1] / exp.v_norm ** 2)
        dom = _domain_of(_sign(Ls[1]))
        if seed.domain not in (BOTH, dom):
            return degenerate("bifurcating pair lies outside the seed's domain")
        lam_expr = sum(x * Y ** (i + 1) for i, x in enumerate(Ls))
        ex = tuple(seed_ex + _tail_along(exp, Y, lam_expr, Y, 4, 2))
        new = PredictedBranch(ex, dom)
        return BranchPrediction(tag, 3, ex, dom, ls, derivs, (base, new, new), seed)
    if pure:
        return degenerate("psi_ylam vanishes and psi(0, lam) does not")
    # psi = y f(y, lam); leading part of f is q20 y^2 + q11 y lam + q02 lam^2
    q20, q11, q02 = p(3, 0), p(2, 1), p(1, 2)
    disc = sp.simplify(q11 ** 2 - 4 * q20 * q02)
    ls["discriminant"] = disc
    if _is_zero(q20) or _is_zero(q02) or _sign(disc) <= 0 or seed.domain != BOTH:
        return degenerate("psi_ylam vanishes and the cubic part has no transversal pair of lines")
    f = {(a - 1, b): cval for (a, b), cval in exp.psi.items() if a >= 1}
    branches = [line(0)]
    for root in sp.solve(q20 * r ** 2 + q11 * r + q02, r):
        # lines y ~ root * lam of f = 0; solve at the level of f
        rs = [root]
        R = sp.Symbol("R")
        y_expr = root * LAM + R * LAM ** 2
        total = sum(cv * Y ** a * LAM ** b for (a, b), cv in f.items() if cv != 0)
        eq = sp.expand(sp.expand(total.xreplace({Y: y_expr})).coeff(LAM, 3))
        a = eq.coeff(R, 1)
        if _is_zero(a):
            return degenerate("bifurcating lines are not regular")
        rs.append(sp.simplify(-eq.subs(R, 0) / a))
        y_expr = sum(x * LAM ** (i + 1) for i, x in enumerate(rs))
        ex = tuple(seed_ex + _tail_along(exp, y_expr, LAM, LAM, 2, 1))
        branches.append(PredictedBranch(ex, BOTH))
    return BranchPrediction(tag, 3, branches[1].exponents, BOTH, ls, derivs, tuple(branches), seed,
                            "psi_ylam vanishes; the pair bifurcates along two lines")


def _sqrt_quarter(ctx: _Context, seed: BranchSeed, tag: CaseTag) -> BranchPrediction:
    prob = ctx.prob
    n1 = prob.n1
    c = seed.c_series(4)
    ks = kernel_series(prob, c, max_order=8)
    derivs = {
        "z2_lam": 2 * ks.ell[1] if len(ks.ell) > 1 else None,
        "z2_x": 2 * ks.x[1] if len(ks.x) > 1 else None,
        "z3_lam": 6 * ks.ell[2] if len(ks.ell) > 2 else None,
        "z4_lam": 24 * ks.ell[3] if len(ks.ell) > 3 else None,
        "kernel_cell": prob.n1 + 1 + ks.d,
    }
    seed_ex = _seed_exponents_full(seed, n1)
    # second route: leading coefficient of Lambda from psi
    exp = ls_expansion(prob, c, 4)
    f_lam = exp.psi.get((0, 1), 0)
    if _is_zero(f_lam):
        raise ConsistencyError("psi_lam vanishes although the forcing is outside the image")
    L = _solve_lambda(exp.psi, 4)
    ls = {"psi_lam": exp.derivative(0, 1), "psi_yy": exp.derivative(2, 0)}
    m_psi = next((k + 1 for k, e in enumerate(L) if not _is_zero(e)), None)
    if m_psi != ks.m:
        raise ConsistencyError(f"growth orders disagree: kernel series {ks.m}, reduction {m_psi}")
    if ks.m is not None:
        vd = exp.v[ks.d]
        if not _is_zero(ks.ell[ks.m - 1] - L[ks.m - 1] / vd ** ks.m):
            raise ConsistencyError("leading coefficients of lam along the branch disagree")
    if ks.m == 2:
        tag = CaseTag.SQRT
    elif ks.m == 4 and prob.m == 2:
        tag = CaseTag.QUARTER_ROOT
        zero_checks = [ks.ell[0], ks.ell[1], ks.ell[2]]
        if any(not _is_zero(e) for e in zero_checks):
            raise ConsistencyError("lower lam-derivatives do not vanish in the quarter-root case")
    else:
        return BranchPrediction(CaseTag.DEGENERATE, None, None, None, ls, derivs, (), seed,
                                f"lam grows like s^{ks.m}" if ks.m else "lam(s) vanishes to order 4")
    side = _sign(ks.ell[ks.m - 1])
    dom = _domain_of(side)
    if seed.domain not in (BOTH, dom):
        return BranchPrediction(CaseTag.DEGENERATE, None, None, None, ls, derivs, (), seed,
                                "bifurcating pair lies outside the seed's domain")
    ex = tuple(seed_ex + list(ks.exponents()))
    new = PredictedBranch(ex, dom)
    return BranchPrediction(tag, 2, ex, dom, ls, derivs, (new, new), seed)


def sqrt_case_prediction(coal: Coalescence, jet: DiffusiveJet, seed: BranchSeed) -> BranchPrediction:
    ctx = _context(coal, jet)
    tag = _classify(ctx, seed)
    if tag is not CaseTag.SQRT:
        raise PreconditionError(f"seed is in case {tag}, not SqrtCase")
    return _sqrt_quarter(ctx, seed, tag)


def quarter_root_prediction(coal: Coalescence, jet: DiffusiveJet, seed: BranchSeed) -> BranchPrediction:
    ctx = _context(coal, jet)
    tag = _classify(ctx, seed)
    if tag is not CaseTag.QUARTER_ROOT:
        raise PreconditionError(f"seed is in case {tag}, not QuarterRootCase")
    if ctx.prob.m != 2:
        return BranchPrediction(CaseTag.DEGENERATE, None, None, None, seed=seed,
                                note="quarter-root analysis is implemented for two-cell tails only")
    return _sqrt_quarter(ctx, seed, tag)


def linear_case_prediction(coal: Coalescence, jet: DiffusiveJet, seed: BranchSeed) -> BranchPrediction:
    ctx = _context(coal, jet)
    tag = _classify(ctx, seed)
    if tag is not CaseTag.LINEAR:
        raise PreconditionError(f"seed is in case {tag}, not LinearCase")
    return _linear_pitchfork(ctx, seed, tag)


def ls_pitchfork_prediction(coal: Coalescence, jet: DiffusiveJet, seed: BranchSeed) -> BranchPrediction:
    ctx = _context(coal, jet)
    tag = _classify(ctx, seed)
    if tag is not CaseTag.PITCHFORK:
        raise PreconditionError(f"seed is in case {tag}, not PitchforkLSCase")
    return _linear_pitchfork(ctx, seed, tag)


# one-component extension ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExtendedBranch:
    """A seed extended to the whole coalescence; call with ``lam`` for the state."""

    coal: Coalescence
    seed: BranchSeed
    prob: TailProblem
    tail_series: tuple = ()

    def __call__(self, lam: float) -> np.ndarray:
        n1, m = self.prob.n1, self.prob.m
        if self.seed.component == "second":
            s = self.seed.evaluate(lam)
            if abs(s[0]) > 1e-12 * (1 + np.max(np.abs(s))):
                raise PreconditionError("the merging cell does not bifurcate in the second component")
            return np.concatenate([np.zeros(n1 - 1), s])
        first = self.seed.evaluate(lam)
        if self.seed.trivial:
            return np.zeros(n1 + m)
        t0 = np.array([float(sum(w[j] * lam ** (k + 1) for k, w in enumerate(self.tail_series)))
                       for j in range(m)]) if self.tail_series else np.zeros(m)
        x = np.concatenate([first, t0])
        system = self.prob.system
        for _ in range(50):
            F = system.F(x, lam)[n1:]
            J = system.jacobian(x, lam)[n1:, n1:]
            step = np.linalg.solve(J, F)
            x[n1:] -= step
            if np.max(np.abs(step)) <= 1e-14 * (1 + np.max(np.abs(x))):
                break
        else:
            raise NumericalError(f"Newton on the tail did not converge at lam={lam:g}")
        if np.max(np.abs(system.F(x, lam))) > 1e-10:
            raise NumericalError(f"extension residual too large at lam={lam:g}")
        return x


def one_component_extension(coal: Coalescence, jet: DiffusiveJet, seed: BranchSeed) -> ExtendedBranch:
    """The unique extension of a seed when only one component carries the eigenvalue."""
    ctx = _context(coal, jet)
    tag = _classify(ctx, seed)
    prob = ctx.prob
    if tag is CaseTag.ONLY_IN_SECOND:
        if seed.component != "second":
            raise PreconditionError("OnlyInSecond extends seeds of the second component")
        if seed.series and not _is_zero(seed.slope_c):
            raise PreconditionError("the merging cell does not bifurcate in the second component")
        if seed.x is not None and np.max(np.abs(seed.x[:, 0])) > 1e-9:
            raise PreconditionError("the merging cell does not bifurcate in the second component")
        return ExtendedBranch(coal, seed, prob)
    if tag is not CaseTag.ONLY_IN_FIRST:
        raise PreconditionError(f"seed is in case {tag}; the extension is not unique")
    tail: tuple = ()
    if seed.series and not seed.trivial:
        tail = _tail_series_regular(prob, seed.c_series(len(seed.series)), len(seed.series))
    return ExtendedBranch(coal, seed, prob, tail)


def _tail_series_regular(prob: TailProblem, c_series, order: int) -> tuple:
    """``t(lam)`` solving the forced tail equations when ``J`` is invertible."""
    eqs = prob.forced(c_series)
    Jinv = prob.J.inv()
    ws: list[sp.Matrix] = []
    for k in range(1, order + 1):
        subs = {t: sum(w[j] * LAM ** (i + 1) for i, w in enumerate(ws)) for j, t in enumerate(prob.ts)}
        r = _series_coeff(eqs, subs, LAM, k)
        ws.append((-Jinv * r).applyfunc(sp.simplify))
    return tuple(ws)


def _one_component_prediction(ctx: _Context, seed: BranchSeed, tag: CaseTag) -> BranchPrediction:
    prob = ctx.prob
    n1, m = prob.n1, prob.m
    if tag is CaseTag.ONLY_IN_SECOND:
        ex = tuple([Fraction(0)] * (n1 - 1) + list(seed.exponents))
        if seed.exponents and seed.exponents[0] != 0:
            raise PreconditionError("the merging cell does not bifurcate in the second component")
        b = PredictedBranch(ex, seed.domain, trivial=seed.trivial, role="seed-extension")
        return BranchPrediction(tag, 1, ex, seed.domain, branches=(b,), seed=seed)
    if seed.trivial:
        ex = tuple([Fraction(0)] * (n1 + m))
        b = PredictedBranch(ex, BOTH, trivial=True, role="seed-extension")
        return BranchPrediction(tag, 1, ex, BOTH, branches=(b,), seed=seed)
    if seed.series:
        ws = _tail_series_regular(prob, seed.c_series(len(seed.series)), len(seed.series))
        tail = _tail_line_exponents(list(ws), m)
        derivs = {"W_lam": ws[0]}
    else:
        # the tail follows the merge cell through J^{-1} L_c at leading order
        resp = prob.J.inv() * prob.L_c
        ec = seed.exponents[n1 - 1]
        tail = [ec if not _is_zero(r) else Fraction(0) for r in resp]
        derivs = {}
    ex = tuple(list(seed.exponents) + tail)
    b = PredictedBranch(ex, seed.domain, role="seed-extension")
    return BranchPrediction(tag, 1, ex, seed.domain, derivatives=derivs, branches=(b,), seed=seed)


def predict_seed(coal: Coalescence, jet: DiffusiveJet, seed: BranchSeed, ctx: _Context | None = None) -> BranchPrediction:
    """Dispatch a seed to the prediction for its case."""
    ctx = ctx or _context(coal, jet)
    tag = _classify(ctx, seed)
    if tag in (CaseTag.ONLY_IN_FIRST, CaseTag.ONLY_IN_SECOND):
        return _one_component_prediction(ctx, seed, tag)
    if tag in (CaseTag.SQRT, CaseTag.QUARTER_ROOT):
        if tag is CaseTag.QUARTER_ROOT and ctx.prob.m != 2:
            return BranchPrediction(CaseTag.DEGENERATE, None, None, None, seed=seed,
                                    note="quarter-root analysis is implemented for two-cell tails only")
        return _sqrt_quarter(ctx, seed, tag)
    if tag in (CaseTag.LINEAR, CaseTag.PITCHFORK):
        return _linear_pitchfork(ctx, seed, tag)
    reason = "seed grows nonlinearly (b_c'(0) undefined): nondegeneracy violated" if not (seed.trivial or seed.series) else (
        f"kernel dimension {ctx.kernel_dim}, tail multiplicity {ctx.tail_multiplicity}")
    return BranchPrediction(CaseTag.DEGENERATE, None, None, None, seed=seed, note=reason)


@dataclass(frozen=True)
class PredictionReport:
    coal: Coalescence
    jet: DiffusiveJet
    mu: object
    predictions: tuple

    @property
    def complete(self) -> bool:
        return all(p.branch_count is not None for p in self.predictions)

    @property
    def branches(self) -> list[PredictedBranch]:
        return [b for p in self.predictions for b in p.branches]

    def count_on_side(self, side: int, nontrivial: bool = True) -> int:
        return sum(p.count_on_side(side, nontrivial) for p in self.predictions)

    def predicted_sides(self) -> set[str]:
        return {b.domain for b in self.branches if b.domain != BOTH}


def predict(coal: Coalescence, jet: DiffusiveJet, config: OracleConfig | None = None) -> PredictionReport:
    """Seeds from the component carrying the eigenvalue, each extended by its case."""
    ctx = _context(coal, jet)
    if ctx.in_first:
        seeds = n1_branch_seeds(coal.first_ordered(), jet, config)
    else:
        seeds = n1_branch_seeds(coal.second_ordered(), jet, config, component="second")
    preds = tuple(predict_seed(coal, jet, s, ctx) for s in seeds)
    return PredictionReport(coal, jet, ctx.prob.mu, preds)
