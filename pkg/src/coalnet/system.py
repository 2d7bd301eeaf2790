"""Admissible diffusive systems on a network.

Each cell obeys ``x_i' = g(x_i, lam) + sum_j w_ij h(x_i, x_j, lam)`` with
``g(0, lam) = 0`` and ``h(x, x, lam) = 0``.  A :class:`DiffusiveJet` fixes the
Taylor coefficients that the branch analysis needs; from it we build an
explicit polynomial pair ``(g, h)`` and evaluate the vector field with numpy.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from fractions import Fraction
from functools import cached_property
from itertools import permutations, product

import numpy as np
import sympy as sp

from .errors import GenericityError, JetError
from .network import Network, adjacency, laplacian
from . import linalg as la

X, Y, LAM = sp.symbols("x y lam")

JET_FIELDS = ("g_x", "g_xx", "g_xxx", "g_xlam", "h_1", "h_11", "h_12", "h_111", "h_122", "h_1lam")
# accepted spellings in jet files
JET_ALIASES = {"g_xλ": "g_xlam", "h_1λ": "h_1lam", "g_xl": "g_xlam", "h_1l": "h_1lam"}


def _num(value):
    if value is None:
        return None
    if isinstance(value, sp.Basic):
        return value
    if isinstance(value, float):
        return sp.Rational(repr(value))
    return sp.sympify(value, rational=True)


@dataclass(frozen=True)
class DiffusiveJet:
    """Taylor coefficients of ``g`` and ``h`` at the origin.

    ``h_22`` is not stored: the diffusive identity
    ``h_11 + 2 h_12 + h_22 = 0`` determines it.  ``g_x`` may be left ``None``
    and fixed later from a critical eigenvalue with :meth:`at_eigenvalue`.
    Entries are sympy numbers or symbols.
    """

    g_xx: object
    g_xxx: object
    g_xlam: object
    h_1: object
    h_11: object
    h_12: object
    h_111: object
    h_122: object
    h_1lam: object
    g_x: object = None

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, _num(getattr(self, f.name)))

    @classmethod
    def create(cls, h_22=None, **values) -> "DiffusiveJet":
        """Validated constructor; a supplied ``h_22`` must satisfy the diffusive identity."""
        unknown = set(values) - set(JET_FIELDS)
        if unknown:
            raise JetError(f"unknown jet entries: {sorted(unknown)}")
        missing = set(JET_FIELDS) - {"g_x"} - set(values)
        if missing:
            raise JetError(f"missing jet entries: {sorted(missing)}")
        try:
            jet = cls(**values)
        except (TypeError, sp.SympifyError) as exc:
            raise JetError(str(exc)) from None
        if h_22 is not None and sp.simplify(_num(h_22) - jet.h_22) != 0:
            raise JetError(f"h_22 = {h_22} violates h_11 + 2 h_12 + h_22 = 0 (expected {jet.h_22})")
        return jet

    @classmethod
    def default(cls, mu=None) -> "DiffusiveJet":
        """The reference jet used throughout the tests and examples."""
        R = sp.Rational
        jet = cls(g_xx=1, g_xxx=-1, g_xlam=1, h_1=1, h_11=R(1, 2), h_12=R(-1, 2),
                  h_111=R(1, 4), h_122=R(1, 5), h_1lam=R(1, 3))
        return jet if mu is None else jet.at_eigenvalue(mu)

    @classmethod
    def symbolic(cls, mu=None) -> "DiffusiveJet":
        names = [n for n in JET_FIELDS if n != "g_x"]
        syms = dict(zip(names, sp.symbols(" ".join(names))))
        jet = cls(**syms)
        return jet if mu is None else jet.at_eigenvalue(mu)

    @property
    def h_22(self):
        return sp.expand(-self.h_11 - 2 * self.h_12)

    @property
    def h_2(self):
        return -self.h_1

    def at_eigenvalue(self, mu) -> "DiffusiveJet":
        """Set ``g_x`` so that ``g_x + mu h_1 = 0``."""
        return replace(self, g_x=sp.expand(-_num(mu) * self.h_1))

    @property
    def critical_eigenvalue(self):
        if self.g_x is None:
            raise JetError("g_x is not set")
        if self.h_1 == 0:
            raise JetError("h_1 = 0: no eigenvalue is singled out by g_x + mu h_1 = 0")
        return sp.simplify(-self.g_x / self.h_1)

    def as_dict(self) -> dict:
        d = {name: getattr(self, name) for name in JET_FIELDS}
        d["h_22"] = self.h_22
        return d

    def is_numeric(self) -> bool:
        return all(v is None or v.is_number for v in (getattr(self, f) for f in JET_FIELDS))


def realize_polynomials(jet: DiffusiveJet) -> tuple[sp.Expr, sp.Expr]:
    """Explicit ``g(x, lam)`` and ``h(x, y, lam)`` with the given jet.

    ``h = (x - y) q(x, y, lam)``, so ``h(x, x, lam) = 0`` holds identically.
    The free third-order direction (the ``x y`` term of ``q``) is set to zero.
    """
    if jet.g_x is None:
        raise JetError("g_x is not set; call at_eigenvalue first")
    g = jet.g_x * X + jet.g_xx * X**2 / 2 + jet.g_xxx * X**3 / 6 + jet.g_xlam * X * LAM
    p = jet.h_11 / 2
    r = jet.h_12 + jet.h_11 / 2
    s = jet.h_111 / 6
    u = jet.h_122 / 2
    q = jet.h_1 + jet.h_1lam * LAM + p * X + r * Y + s * X**2 + u * Y**2
    return sp.expand(g), sp.expand((X - Y) * q)


@dataclass(frozen=True, eq=False)
class AdmissibleSystem:
    network: Network
    g: sp.Expr  # in x, lam
    h: sp.Expr  # in x, y, lam

    def __post_init__(self):
        if sp.expand(self.h.subs(Y, X)) != 0:
            raise JetError("h(x, x, lam) is not identically zero")
        if sp.expand(self.g.subs(X, 0)) != 0:
            raise JetError("g(0, lam) is not identically zero; the origin is not an equilibrium")

    @cached_property
    def W(self) -> np.ndarray:
        return la.to_numpy(adjacency(self.network))

    @cached_property
    def _edges(self):
        # self-loops drop out: h(x, x) = 0 and h_x(x, x) + h_y(x, x) = 0
        e = [(t - 1, s - 1, float(w)) for (s, t), w in self.network.weights.items() if s != t]
        I = np.array([a for a, _, _ in e], dtype=int)
        J = np.array([b for _, b, _ in e], dtype=int)
        w = np.array([c for _, _, c in e], dtype=float)
        S = np.zeros((len(e), self.n))
        S[np.arange(len(e)), I] = 1.0
        return I, J, w, S

    @cached_property
    def _terms(self):
        def terms(expr, gens):
            P = sp.Poly(expr, *gens)
            return [(float(c), m) for m, c in P.terms()]

        xy = (X, Y, LAM)
        return {
            "g": terms(self.g, (X, LAM)),
            "gx": terms(sp.diff(self.g, X), (X, LAM)),
            "h": terms(self.h, xy),
            "hx": terms(sp.diff(self.h, X), xy),
            "hy": terms(sp.diff(self.h, Y), xy),
        }

    @staticmethod
    def _eval(terms, args, lam):
        cache = {}

        def power(k, p):
            if p == 1:
                return args[k]
            if (k, p) not in cache:
                cache[(k, p)] = power(k, p - 1) * args[k]
            return cache[(k, p)]

        out = 0.0
        for c, monom in terms:
            val = c * lam ** monom[-1]
            for k, p in enumerate(monom[:-1]):
                if p:
                    val = val * power(k, p)
            out = out + val
        return out * np.ones_like(args[0])

    @property
    def n(self) -> int:
        return self.network.n_cells

    def F(self, x, lam):
        """Vector field, batched over leading axes of ``x``."""
        T = self._terms
        I, J, w, S = self._edges
        x = np.asarray(x, dtype=float)
        out = self._eval(T["g"], (x,), lam)
        if len(w):
            out = out + (w * self._eval(T["h"], (x[..., I], x[..., J]), lam)) @ S
        return out

    def jacobian(self, x, lam):
        T = self._terms
        I, J, w, S = self._edges
        x = np.asarray(x, dtype=float)
        diag = self._eval(T["gx"], (x,), lam)
        jac = np.zeros(x.shape + (self.n,))
        if len(w):
            xi, xj = x[..., I], x[..., J]
            diag = diag + (w * self._eval(T["hx"], (xi, xj), lam)) @ S
            jac[..., I, J] = w * self._eval(T["hy"], (xi, xj), lam)
        idx = np.arange(self.n)
        jac[..., idx, idx] += diag
        return jac

    def F_exact(self, x, lam) -> sp.Matrix:
        x = [sp.nsimplify(v) if isinstance(v, float) else sp.sympify(v) for v in x]
        lam = sp.nsimplify(lam) if isinstance(lam, float) else sp.sympify(lam)
        Wm = adjacency(self.network)
        out = []
        for i in range(self.n):
            val = self.g.subs({X: x[i], LAM: lam})
            for j in range(self.n):
                if Wm[i, j] != 0:
                    val += Wm[i, j] * self.h.subs({X: x[i], Y: x[j], LAM: lam})
            out.append(sp.expand(val))
        return sp.Matrix(out)

    def symbolic_field(self):
        xs = sp.symbols(f"x1:{self.n + 1}")
        Wm = adjacency(self.network)
        F = []
        for i in range(self.n):
            val = self.g.subs({X: xs[i]}, simultaneous=True)
            for j in range(self.n):
                if Wm[i, j] != 0:
                    val += Wm[i, j] * self.h.subs({X: xs[i], Y: xs[j]}, simultaneous=True)
            F.append(sp.expand(val))
        return xs, F

    @cached_property
    def tensors(self) -> "TaylorTensors":
        return taylor_tensors(self)

    def restrict(self, network: Network) -> "AdmissibleSystem":
        return AdmissibleSystem(network, self.g, self.h)


def realize_polynomial_system(network: Network, jet: DiffusiveJet) -> AdmissibleSystem:
    g, h = realize_polynomials(jet)
    return AdmissibleSystem(network, g, h)


def _rational(v) -> sp.Rational:
    if isinstance(v, Fraction):
        return sp.Rational(v.numerator, v.denominator)
    return sp.Rational(int(v)) if isinstance(v, (int, np.integer)) else v


def evaluate_F(system: AdmissibleSystem, x, lam):
    """Exact evaluation for rational input, numpy evaluation otherwise."""
    values = list(np.ravel(np.asarray(x, dtype=object))) if not isinstance(x, sp.Matrix) else list(x)
    exact = (int, np.integer, Fraction, sp.Rational)
    if all(isinstance(v, exact) for v in values + [lam]):
        return system.F_exact([_rational(v) for v in values], _rational(lam))
    return system.F(np.asarray(x, dtype=float), float(lam))


def extract_jet(system: AdmissibleSystem) -> DiffusiveJet:
    """Read the jet back off the polynomials by differentiation at the origin."""
    at0 = {X: 0, Y: 0, LAM: 0}
    g, h = system.g, system.h

    def d(expr, *vars_):
        return sp.diff(expr, *vars_).subs(at0)

    return DiffusiveJet(
        g_x=d(g, X), g_xx=d(g, X, X), g_xxx=d(g, X, X, X), g_xlam=d(g, X, LAM),
        h_1=d(h, X), h_11=d(h, X, X), h_12=d(h, X, Y), h_111=d(h, X, X, X),
        h_122=d(h, X, Y, Y), h_1lam=d(h, X, LAM),
    )


def jacobian_origin(network: Network, jet: DiffusiveJet) -> sp.Matrix:
    """``g_x I + h_1 L``, the linearization at the trivial equilibrium."""
    if jet.g_x is None:
        raise JetError("g_x is not set")
    n = network.n_cells
    return sp.Matrix(jet.g_x * sp.eye(n) + jet.h_1 * laplacian(network))


def bifurcation_eigenvalue(network: Network, jet: DiffusiveJet):
    """The Laplacian eigenvalue ``mu`` with ``g_x + mu h_1 = 0``, or ``None``.

    With ``h_1 != 0`` at most one eigenvalue can be critical.  With
    ``h_1 = 0`` none is unless ``g_x = 0``, in which case all are, and that is a
    ``GenericityError`` once the spectrum has two distinct points.
    """
    if jet.g_x is None:
        raise JetError("g_x is not set")
    if jet.h_1 == 0:
        if jet.g_x != 0:
            return None
        values = set(sp.Matrix(laplacian(network)).eigenvals())
        if len(values) > 1:
            raise GenericityError("h_1 = g_x = 0: every eigenvalue satisfies the bifurcation condition")
        return values.pop()
    t = sp.Symbol("t")
    cp = sp.Matrix(laplacian(network)).charpoly(t).as_expr()
    mu = sp.simplify(-jet.g_x / jet.h_1)
    return mu if sp.simplify(cp.subs(t, mu)) == 0 else None


@dataclass(frozen=True)
class TaylorTensors:
    """Derivatives of the vector field at ``x = 0, lam = 0``.

    ``D2[i][j][k] = d2 F_i / dx_j dx_k`` and so on; ``DxLam[i][j] = d2 F_i / dx_j dlam``.
    """

    n: int
    D2: sp.MutableDenseNDimArray
    D3: sp.MutableDenseNDimArray
    DxLam: sp.Matrix

    def hess(self, i: int, a, b):
        return sp.expand(sum(self.D2[i, j, k] * a[j] * b[k] for j in range(self.n) for k in range(self.n)
                             if self.D2[i, j, k] != 0 and a[j] != 0 and b[k] != 0))

    def third(self, i: int, a, b, c):
        return sp.expand(sum(self.D3[i, j, k, l] * a[j] * b[k] * c[l]
                             for j, k, l in product(range(self.n), repeat=3)
                             if self.D3[i, j, k, l] != 0 and a[j] != 0 and b[k] != 0 and c[l] != 0))


def taylor_tensors(system: AdmissibleSystem) -> TaylorTensors:
    """Second and third derivative tensors from the polynomial coefficients."""
    xs, F = system.symbolic_field()
    n = len(xs)
    gens = list(xs) + [LAM]
    D2 = sp.MutableDenseNDimArray.zeros(n, n, n)
    D3 = sp.MutableDenseNDimArray.zeros(n, n, n, n)
    DxLam = sp.zeros(n, n)
    for i, Fi in enumerate(F):
        for monom, coeff in sp.Poly(Fi, *gens).terms():
            powers, lam_pow = monom[:n], monom[n]
            deg = sum(powers)
            idx = [j for j, p in enumerate(powers) for _ in range(p)]
            mult = sp.prod(sp.factorial(p) for p in powers)
            if lam_pow == 0 and deg == 2:
                for perm in set(permutations(idx)):
                    D2[(i,) + perm] = coeff * mult
            elif lam_pow == 0 and deg == 3:
                for perm in set(permutations(idx)):
                    D3[(i,) + perm] = coeff * mult
            elif lam_pow == 1 and deg == 1:
                DxLam[i, idx[0]] = coeff
    return TaylorTensors(n, D2, D3, DxLam)
