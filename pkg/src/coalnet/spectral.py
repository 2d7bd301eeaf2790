"""Spectral structure of network Laplacians and of feedforward coalescences.

Eigenvalues are exact rationals whenever the characteristic polynomial has
rational roots.  Roots of irreducible factors of degree > 1 are handled in
floating point, but their multiplicities stay exact: ``m_a`` is the exponent
of the factor and ``m_g`` is ``nullity(f(L)) / deg f``.

Jordan chains are stored bottom-up: ``chain[0]`` is an eigenvector and
``(L - mu) chain[k] == chain[k - 1]``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp
from sympy import QQ

from . import linalg as la
from .errors import ClusteringWarning, InputError, NumericalError, PreconditionError
from .network import Coalescence, SequentialCoalescence, laplacian

_x = sp.Symbol("x")


@dataclass
class EigenData:
    value: object  # sympy Rational when exact, else complex/float
    exact: bool
    m_a: int
    m_g: int
    chains: list = field(default_factory=list)
    factor: sp.Poly | None = None

    @property
    def semisimple(self) -> bool:
        return self.m_a == self.m_g

    @property
    def eigenvectors(self) -> list:
        return [c[0] for c in self.chains]

    @property
    def generalized_basis(self) -> list:
        return [v for c in self.chains for v in c]

    @property
    def chain_lengths(self) -> list[int]:
        return sorted((len(c) for c in self.chains), reverse=True)

    def numeric_value(self) -> complex:
        return complex(self.value)


@dataclass
class SpectralStructure:
    size: int
    eigenvalues: list[EigenData]
    exact: bool
    tol: float = la.RANK_RTOL
    warnings: list[str] = field(default_factory=list)

    def find(self, mu, tol: float | None = None) -> EigenData | None:
        tol = self.tol if tol is None else tol
        for e in self.eigenvalues:
            if e.exact and _is_exact(mu):
                if e.value == sp.nsimplify(mu):
                    return e
            elif abs(e.numeric_value() - complex(mu)) <= 10 * tol * max(1.0, abs(complex(mu))):
                return e
        return None

    def m_a(self, mu) -> int:
        e = self.find(mu)
        return 0 if e is None else e.m_a

    def values(self) -> list:
        return [e.value for e in self.eigenvalues]


def _is_exact(mu) -> bool:
    return isinstance(mu, (int, sp.Rational)) or (hasattr(mu, "denominator") and not isinstance(mu, float))


def _as_matrix(L) -> sp.Matrix:
    M = sp.Matrix(L)
    if M.rows != M.cols:
        raise InputError(f"matrix must be square, got {M.rows}x{M.cols}")
    if not la.is_rational(M):
        M = M.applyfunc(lambda v: sp.nsimplify(v, rational=True))
    return M


class _ExactOps:
    def __init__(self, N):
        self.N = sp.Matrix(N)

    def kernel_of_power(self, j):
        return la.nullspace(la.matrix_power(self.N, j))

    def apply(self, v):
        return self.N * v

    def independent(self, vecs):
        return la.independent(vecs)

    def normalize(self, chain):
        for x in chain[0]:
            if x != 0:
                return [v / x for v in chain]
        return chain


class _FloatOps:
    def __init__(self, N: np.ndarray, rtol: float):
        self.N = N
        self.rtol = rtol

    def kernel_of_power(self, j):
        K = la.numeric_nullspace(np.linalg.matrix_power(self.N, j), self.rtol)
        return [K[:, i] for i in range(K.shape[1])]

    def apply(self, v):
        return self.N @ v

    def independent(self, vecs):
        return la.numeric_rank(np.column_stack(vecs), 1e3 * self.rtol) == len(vecs)

    def normalize(self, chain):
        v0 = chain[0]
        big = np.abs(v0) > 1e-8 * np.max(np.abs(v0))
        x = v0[np.argmax(big)]
        out = [v / x for v in chain]
        if all(np.all(np.abs(v.imag) < 1e-12) for v in out):
            out = [v.real for v in out]
        return out


def _jordan_chains(ops, m_a: int) -> list[list]:
    kernels = [[]]
    j = 0
    while len(kernels[-1]) < m_a:
        j += 1
        if j > m_a:
            raise PreconditionError("generalized eigenspace dimension does not match multiplicity")
        kernels.append(ops.kernel_of_power(j))
    chains: list[list] = []
    for level in range(j, 0, -1):
        basis = list(kernels[level - 1]) + [c[level - 1] for c in chains if len(c) >= level]
        for cand in kernels[level]:
            if ops.independent(basis + [cand]):
                chain = [cand]
                for _ in range(level - 1):
                    chain.insert(0, ops.apply(chain[0]))
                chains.append(chain)
                basis.append(cand)
    chains.sort(key=len, reverse=True)
    return [ops.normalize(c) for c in chains]


def eigen_structure(L, exact: bool | None = None, tol: float = la.RANK_RTOL) -> SpectralStructure:
    """Eigenvalues with algebraic/geometric multiplicities and Jordan chains.

    ``exact=True`` insists on rational eigenvalues and raises
    ``PreconditionError`` otherwise; ``exact=False`` uses floating point only;
    ``None`` is exact where possible.
    """
    M = _as_matrix(L)
    n = M.rows
    if n == 0:
        raise InputError("empty matrix")
    if exact is False:
        return _float_structure(la.to_numpy(M), tol)
    coeffs = la.dm(M).charpoly()
    poly = sp.Poly([QQ.to_sympy(c) for c in coeffs], _x, domain=QQ)
    _, factors = poly.factor_list()
    eigs: list[EigenData] = []
    notes: list[str] = []
    I = sp.eye(n)
    for f, e in factors:
        if f.degree() == 1:
            mu = -f.nth(0) / f.nth(1)
            N = M - mu * I
            m_g = n - la.rank(N)
            chains = _jordan_chains(_ExactOps(N), e)
            eigs.append(EigenData(sp.Rational(mu), True, e, m_g, chains, f.monic()))
            continue
        if exact:
            raise PreconditionError(f"eigenvalues are roots of {f.as_expr()}; no exact rational path")
        fA = sp.zeros(n, n)
        for (k,), c in f.terms():
            fA += c * la.matrix_power(M, k)
        nullity = n - la.rank(fA)
        m_g = nullity // f.degree()
        A = la.to_numpy(M).astype(complex)
        for r in f.nroots(n=30):
            mu = complex(r)
            if abs(mu.imag) < 1e-14:
                mu = complex(mu.real, 0.0)
            chains = _jordan_chains(_FloatOps(A - mu * np.eye(n), tol), e)
            val = mu.real if mu.imag == 0 else mu
            eigs.append(EigenData(val, False, e, m_g, chains, f.monic()))
    eigs.sort(key=lambda d: (complex(d.value).real, complex(d.value).imag))
    numeric = [d for d in eigs if not d.exact]
    for a in numeric:
        for b in eigs:
            if a is b:
                continue
            gap = abs(a.numeric_value() - b.numeric_value())
            if gap < 10 * tol * max(1.0, abs(a.numeric_value())):
                msg = f"eigenvalues {a.value} and {b.value} are within {gap:.2e}"
                notes.append(msg)
                warnings.warn(msg, ClusteringWarning, stacklevel=2)
    return SpectralStructure(n, eigs, exact=not numeric, tol=tol, warnings=notes)


def _float_structure(A: np.ndarray, tol: float) -> SpectralStructure:
    n = A.shape[0]
    ev = np.linalg.eigvals(A)
    radius = np.sqrt(tol)
    clusters: list[list[complex]] = []
    for lam in sorted(ev, key=lambda z: (z.real, z.imag)):
        for c in clusters:
            if abs(np.mean(c) - lam) <= radius * max(1.0, abs(lam)):
                c.append(lam)
                break
        else:
            clusters.append([lam])
    eigs, notes = [], []
    centers = [complex(np.mean(c)) for c in clusters]
    for c, mu in zip(clusters, centers):
        if abs(mu.imag) < radius:
            mu = complex(mu.real, 0.0)
        N = A.astype(complex) - mu * np.eye(n)
        m_g = n - la.numeric_rank(N, radius)
        chains = _jordan_chains(_FloatOps(N, radius), len(c))
        eigs.append(EigenData(mu.real if mu.imag == 0 else mu, False, len(c), m_g, chains))
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            gap = abs(centers[i] - centers[j])
            if gap < 10 * radius * max(1.0, abs(centers[i])):
                msg = f"eigenvalue clusters {centers[i]:.6g} and {centers[j]:.6g} are within {gap:.2e}"
                notes.append(msg)
                warnings.warn(msg, ClusteringWarning, stacklevel=3)
    return SpectralStructure(n, eigs, exact=False, tol=radius, warnings=notes)


# feedforward coalescences


@dataclass(frozen=True)
class ReducedBlocks:
    """Laplacian blocks of a feedforward coalescence.

    ``L1`` has the merge cell last, ``L2`` has it first.  ``L_bar`` drops the
    merge-cell row of ``L2``, ``L_tail`` also drops its column, and ``L_c`` is
    the merge-cell column of ``L_bar``.
    """

    L: sp.ImmutableMatrix
    L1: sp.ImmutableMatrix
    L2: sp.ImmutableMatrix
    L_bar: sp.ImmutableMatrix
    L_tail: sp.ImmutableMatrix
    L_c: sp.ImmutableMatrix


def reduced_laplacians(coal: Coalescence) -> ReducedBlocks:
    coal.require_ffcn()
    L1 = laplacian(coal.first_ordered())
    L2 = laplacian(coal.second_ordered())
    L_bar = L2[1:, :]
    return ReducedBlocks(
        laplacian(coal.network),
        L1,
        L2,
        sp.ImmutableMatrix(L_bar),
        sp.ImmutableMatrix(L_bar[:, 1:]),
        sp.ImmutableMatrix(L_bar[:, 0]),
    )


@dataclass(frozen=True)
class CouplingVerdict:
    mu: object
    holds: bool
    exact: bool
    is_tail_eigenvalue: bool
    column: object = None  # L_c
    particular_solution: object = None  # w with (L_tail - mu I) w = -L_c, when it exists


def coupling_condition(coal: Coalescence, mu, tol: float = la.RANK_RTOL) -> CouplingVerdict:
    """Is the merge-cell column ``L_c`` in ``Im(L_tail - mu I)``?"""
    blocks = reduced_laplacians(coal)
    m = blocks.L_tail.rows
    if m == 0:
        return CouplingVerdict(mu, True, True, False, blocks.L_c, sp.zeros(0, 1))
    if _is_exact(mu):
        mu = sp.nsimplify(mu)
        M = blocks.L_tail - mu * sp.eye(m)
        holds = la.in_image(M, blocks.L_c)
        w = la.solve_particular(M, -blocks.L_c) if holds else None
        return CouplingVerdict(mu, holds, True, la.rank(M) < m, blocks.L_c, w)
    M = la.to_numpy(blocks.L_tail).astype(complex) - complex(mu) * np.eye(m)
    b = la.to_numpy(blocks.L_c).astype(complex)
    holds = la.numeric_in_image(M, b, tol)
    w = None
    if holds:
        w = np.linalg.lstsq(M, -b.reshape(-1), rcond=None)[0]
        if np.linalg.norm(M @ w + b.reshape(-1)) > 1e3 * tol * max(1.0, np.linalg.norm(b)):
            raise NumericalError("least-squares particular solution fails its residual check")
    return CouplingVerdict(mu, holds, False, la.numeric_rank(M, tol) < m, b, w)


@dataclass(frozen=True)
class UnionRow:
    mu: object
    m_a: int
    m_a_first: int
    m_a_second: int
    m_g: int
    m_g_first: int
    m_g_second: int
    multiplicity_ok: bool
    semisimple: bool
    semisimple_first: bool
    semisimple_second: bool
    coupling: bool
    semisimplicity_ok: bool | None  # None when the theory makes no prediction


@dataclass(frozen=True)
class UnionReport:
    rows: tuple[UnionRow, ...]
    missing: tuple  # eigenvalues of a component absent from the coalescence

    @property
    def ok(self) -> bool:
        return not self.missing and all(r.multiplicity_ok and r.semisimplicity_ok is not False for r in self.rows)


def _match(S: SpectralStructure, e: EigenData) -> EigenData | None:
    for d in S.eigenvalues:
        if d.exact and e.exact:
            if d.value == e.value:
                return d
        elif d.factor is not None and e.factor is not None and not d.exact and not e.exact:
            if d.factor == e.factor and abs(d.numeric_value() - e.numeric_value()) < 1e-6 * max(1, abs(e.numeric_value())):
                return d
        elif abs(d.numeric_value() - e.numeric_value()) < 1e-6 * max(1, abs(e.numeric_value())):
            return d
    return None


def spectrum_union_check(coal: Coalescence, exact: bool | None = None, tol: float = la.RANK_RTOL) -> UnionReport:
    """Check spec(L) = spec(L1) U spec(L2), the multiplicity identity and semisimplicity."""
    blocks = reduced_laplacians(coal)
    S = eigen_structure(blocks.L, exact, tol)
    S1 = eigen_structure(blocks.L1, exact, tol)
    S2 = eigen_structure(blocks.L2, exact, tol)
    rows = []
    for e in S.eigenvalues:
        e1, e2 = _match(S1, e), _match(S2, e)
        ma1, ma2 = (e1.m_a if e1 else 0), (e2.m_a if e2 else 0)
        mg1, mg2 = (e1.m_g if e1 else 0), (e2.m_g if e2 else 0)
        is_zero = e.numeric_value() == 0 if e.exact else False
        expected = ma1 + ma2 - (1 if is_zero else 0)
        ss1 = e1.semisimple if e1 else True
        ss2 = e2.semisimple if e2 else True
        mu = e.value if e.exact else e.numeric_value()
        coupling = coupling_condition(coal, mu, tol).holds
        if coupling:
            predicted = ss1 and ss2
        elif e1 is not None and any(_nonzero(v[-1]) for v in e1.eigenvectors):
            predicted = False
        else:
            predicted = None
        ss_ok = None if predicted is None else (predicted == e.semisimple)
        rows.append(UnionRow(e.value, e.m_a, ma1, ma2, e.m_g, mg1, mg2, e.m_a == expected,
                             e.semisimple, ss1, ss2, coupling, ss_ok))
    missing = tuple(d.value for T in (S1, S2) for d in T.eigenvalues if _match(S, d) is None)
    return UnionReport(tuple(rows), missing)


def _nonzero(x) -> bool:
    if isinstance(x, sp.Basic):
        return x != 0
    return abs(x) > 1e-8


@dataclass(frozen=True)
class LiftResult:
    vector: sp.Matrix
    is_eigenvector: bool
    power: int  # (L - mu)^power annihilates the lifted vector


def lift_eigenvector(coal: Coalescence, mu, v1) -> LiftResult:
    """Extend a (generalized) eigenvector of the first component to the coalescence.

    ``v1`` is indexed by the first component's own cell numbering.  The result
    is indexed by the coalesced network.  If the merge-cell column allows it the
    result is an eigenvector; otherwise the image/kernel splitting of powers of
    ``L_tail - mu I`` produces a generalized eigenvector.
    """
    blocks = reduced_laplacians(coal)
    mu = sp.nsimplify(mu)
    n1, m = coal.n1, blocks.L_tail.rows
    order = [i for i in range(1, n1 + 1) if i != coal.merge_1] + [coal.merge_1]
    v = la.col(v1)
    if v.rows != n1:
        raise InputError(f"vector has {v.rows} entries, first component has {n1} cells")
    v = sp.Matrix([v[i - 1] for i in order])
    if all(x == 0 for x in v):
        raise InputError("zero vector")
    N1 = blocks.L1 - mu * sp.eye(n1)
    k1 = 0
    P = sp.Matrix(v)
    while any(x != 0 for x in P):
        k1 += 1
        if k1 > n1:
            raise PreconditionError(f"vector is not a generalized eigenvector for {mu}")
        P = N1 * P
    M = blocks.L_tail - mu * sp.eye(m)
    c = v[-1]
    if m == 0:
        return LiftResult(_to_network_order(coal, v, sp.zeros(0, 1)), k1 == 1, k1)
    if mu == 0 and len(set(v)) == 1:
        w = sp.Matrix([v[0]] * m)
        return LiftResult(_to_network_order(coal, v, w), True, 1)
    if k1 == 1:
        w = la.solve_particular(M, -c * blocks.L_c)
        if w is not None:
            return LiftResult(_to_network_order(coal, v, w), True, 1)
    k = max(k1, 1)
    while True:
        Mk = la.matrix_power(M, k)
        im = la.rank(Mk)
        ker = len(la.nullspace(Mk))
        basis = _column_basis(Mk) + la.nullspace(Mk)
        if im + ker == m and la.independent(basis):
            break
        k += 1
    full = blocks.L - mu * sp.eye(blocks.L.rows)
    A_k = la.matrix_power(full, k)[n1:, :n1]
    u = A_k * v
    im_basis = _column_basis(Mk)
    ker_basis = la.nullspace(Mk)
    if im_basis or ker_basis:
        coeffs = sp.Matrix.hstack(*(im_basis + ker_basis)).LUsolve(u)
        w_I = sp.zeros(m, 1)
        for i, b in enumerate(im_basis):
            w_I += coeffs[i] * b
    else:
        w_I = u
    w = la.solve_particular(Mk, -w_I)
    x = _to_network_order(coal, v, w)
    power, P = 0, sp.Matrix(x)
    while any(e != 0 for e in P):
        power += 1
        P = full * P
    return LiftResult(x, power == 1, power)


def _column_basis(M) -> list[sp.Matrix]:
    M = sp.Matrix(M)
    if M.cols == 0:
        return []
    _, pivots = la.dm(M).rref()
    return [M[:, p] for p in pivots]


def _to_network_order(coal: Coalescence, v_ordered, w) -> sp.Matrix:
    """Concatenate (first part with merge cell last, tail) in coalesced numbering."""
    return sp.Matrix(list(v_ordered) + list(w))


def zero_eigenspace_basis(coal: Coalescence) -> list[sp.Matrix]:
    """Basis of ker L: lifted kernel vectors of the first component, then
    kernel vectors of the second component vanishing on the merge cell, padded."""
    blocks = reduced_laplacians(coal)
    n1 = coal.n1
    out = []
    order = [i for i in range(1, n1 + 1) if i != coal.merge_1] + [coal.merge_1]
    inverse = {old: k for k, old in enumerate(order)}
    for u in la.nullspace(blocks.L1):
        u = la.normalize_first(u)
        original = [u[inverse[i]] for i in range(1, n1 + 1)]
        out.append(lift_eigenvector(coal, 0, original).vector)
    for u in _vanishing_on(la.nullspace(blocks.L2), 0):
        out.append(sp.Matrix([0] * (n1 - 1) + list(u)))
    return out


@dataclass(frozen=True)
class ProvenanceVector:
    vector: sp.Matrix
    component: int  # 1-based index of the component it originates from
    is_eigenvector: bool


@dataclass(frozen=True)
class EigenReport:
    mu: object
    m_a: int
    m_g: int
    semisimple: bool
    chains: list
    basis: tuple[ProvenanceVector, ...]


@dataclass(frozen=True)
class FFCNReport:
    network_size: int
    eigenvalues: tuple[EigenReport, ...]


def _as_sequence(obj) -> SequentialCoalescence:
    from .network import ChainLink, sequential_coalesce

    if isinstance(obj, SequentialCoalescence):
        return obj
    if isinstance(obj, Coalescence):
        return sequential_coalesce([ChainLink(obj.first, None, obj.merge_1), ChainLink(obj.second, obj.merge_2, None)])
    raise InputError("expected a Coalescence or SequentialCoalescence")


def ffcn_spectral_report(obj, exact: bool | None = None) -> FFCNReport:
    """Spectral structure of an r-fold feedforward coalescence with the
    component of origin of every generalized eigenvector.

    For component ``i`` the generalized eigenvectors of its Laplacian (those
    vanishing on the incoming merge cell when ``i > 1``) are zero-padded and
    lifted forward through the later components.
    """
    seq = _as_sequence(obj)
    if not seq.is_ffcn:
        raise PreconditionError("some pairwise coalescence is not feedforward")
    L = laplacian(seq.network)
    S = eigen_structure(L, exact)
    if not S.exact:
        raise PreconditionError("provenance report needs rational eigenvalues")
    n = seq.network.n_cells
    reports = []
    for e in S.eigenvalues:
        mu = e.value
        basis: list[ProvenanceVector] = []
        for i, link in enumerate(seq.components):
            Si = eigen_structure(laplacian(link.network), exact=True).find(mu)
            if Si is None:
                continue
            vecs = Si.generalized_basis
            if i > 0:
                vecs = _vanishing_on(vecs, link.merge_in - 1)
            for vec in vecs:
                x = _pad_and_lift(seq, i, vec, mu)
                if la.independent([b.vector for b in basis] + [x]):
                    eig = all(t == 0 for t in (L - mu * sp.eye(n)) * x)
                    basis.append(ProvenanceVector(x, i + 1, eig))
        if len(basis) != e.m_a:
            raise PreconditionError(f"provenance basis for {mu} has {len(basis)} vectors, expected {e.m_a}")
        reports.append(EigenReport(mu, e.m_a, e.m_g, e.semisimple, e.chains, tuple(basis)))
    return FFCNReport(n, tuple(reports))


def _vanishing_on(vecs, idx: int) -> list:
    """Basis of the subspace of span(vecs) whose coordinate ``idx`` is zero."""
    if not vecs:
        return []
    B = sp.Matrix.hstack(*vecs)
    coeffs = la.nullspace(B[idx, :])
    return [la.normalize_first(B * a) for a in coeffs]


def _pad_and_lift(seq: SequentialCoalescence, i: int, vec, mu) -> sp.Matrix:
    """Place a component-``i`` vector in the partial network where that
    component first appears, then lift it through the remaining steps."""
    partial = _partial_networks(seq)
    x = sp.zeros(partial[i].n_cells, 1)
    for old, new in _partial_maps(seq)[i].items():
        x[new - 1] = vec[old - 1]
    for step in seq.steps[i:]:
        x = lift_eigenvector(step, mu, list(x)).vector
    return x


def _partial_networks(seq: SequentialCoalescence):
    from .network import coalesce

    nets = [seq.components[0].network]
    for step in seq.steps:
        nets.append(coalesce(step.first, step.merge_1, step.second, step.merge_2)[0])
    return nets


def _partial_maps(seq: SequentialCoalescence) -> list[dict]:
    """Cell maps of each component into the partial network where it first appears."""
    from .network import coalesce

    maps = [{i: i for i in range(1, seq.components[0].network.n_cells + 1)}]
    for step in seq.steps:
        _, cmap = coalesce(step.first, step.merge_1, step.second, step.merge_2)
        maps.append(dict(cmap.second))
    return maps
