"""Weighted coupled-cell networks and their coalescence.

Cells are numbered from 1.  An edge ``(s, t, w)`` means cell ``s`` feeds
cell ``t`` with weight ``w``; in the adjacency matrix this is the entry
``W[t, s]``.  Weights are exact rationals.  Zero weights (including
duplicates that cancel) are treated as absent edges.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np
import sympy as sp

from .errors import CellIndexError, ConnectivityError, InputError, PreconditionError


def to_fraction(value) -> Fraction:
    """Convert an int, Fraction, decimal string or float to an exact Fraction.

    Floats go through their shortest repr, so ``0.1`` becomes ``1/10``.
    """
    if isinstance(value, bool):
        raise InputError(f"invalid weight {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, sp.Rational):
        return Fraction(int(value.p), int(value.q))
    if isinstance(value, float):
        if not np.isfinite(value):
            raise InputError(f"non-finite weight {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            raise InputError(f"invalid weight {value!r}") from None
    raise InputError(f"invalid weight {value!r}")


@dataclass(frozen=True)
class Network:
    n_cells: int
    weights: dict  # (source, target) -> Fraction, nonzero only
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(i) for i in range(1, self.n_cells + 1)))

    @property
    def edges(self) -> list[tuple[int, int, Fraction]]:
        return [(s, t, w) for (s, t), w in sorted(self.weights.items())]

    def check_cell(self, i: int) -> None:
        if not isinstance(i, (int, np.integer)) or not 1 <= i <= self.n_cells:
            raise CellIndexError(f"cell {i} not in 1..{self.n_cells}")

    def adjacency(self) -> sp.ImmutableMatrix:
        return adjacency(self)

    def laplacian(self) -> sp.ImmutableMatrix:
        return laplacian(self)

    def relabel(self, order: Sequence[int]) -> "Network":
        """Return the same network with cell ``order[k]`` renumbered as ``k + 1``."""
        if sorted(order) != list(range(1, self.n_cells + 1)):
            raise InputError("order must be a permutation of the cells")
        new = {old: k + 1 for k, old in enumerate(order)}
        weights = {(new[s], new[t]): w for (s, t), w in self.weights.items()}
        labels = tuple(self.labels[old - 1] for old in order)
        return Network(self.n_cells, weights, labels)


def build_network(n_cells: int, edges: Iterable, labels: Sequence[str] | None = None) -> Network:
    """Build a validated network from ``(source, target, weight)`` triples.

    Raises:
        CellIndexError: an endpoint is outside ``1..n_cells``.
        ConnectivityError: the underlying undirected graph is disconnected.
    """
    if not isinstance(n_cells, (int, np.integer)) or n_cells < 1:
        raise InputError(f"n_cells must be a positive integer, got {n_cells!r}")
    n_cells = int(n_cells)
    weights: dict = {}
    for edge in edges:
        try:
            s, t, w = edge
        except (TypeError, ValueError):
            raise InputError(f"edge {edge!r} is not a (source, target, weight) triple") from None
        for cell in (s, t):
            if isinstance(cell, bool) or not isinstance(cell, (int, np.integer)) or not 1 <= cell <= n_cells:
                raise CellIndexError(f"edge {edge!r}: cell {cell!r} not in 1..{n_cells}")
        key = (int(s), int(t))
        weights[key] = weights.get(key, Fraction(0)) + to_fraction(w)
    weights = {k: w for k, w in weights.items() if w != 0}
    if labels is not None:
        labels = tuple(str(x) for x in labels)
        if len(labels) != n_cells:
            raise InputError(f"{len(labels)} labels for {n_cells} cells")
    net = Network(n_cells, weights, labels or ())
    _check_connected(net)
    return net


def _check_connected(net: Network) -> None:
    parent = list(range(net.n_cells + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for s, t in net.weights:
        parent[find(s)] = find(t)
    roots = {find(i) for i in range(1, net.n_cells + 1)}
    if len(roots) > 1:
        raise ConnectivityError(f"network splits into {len(roots)} disconnected pieces")


def adjacency(net: Network) -> sp.ImmutableMatrix:
    """Weighted adjacency matrix, ``W[i, j]`` = weight of the edge j -> i."""
    W = sp.zeros(net.n_cells, net.n_cells)
    for (s, t), w in net.weights.items():
        W[t - 1, s - 1] = sp.Rational(w.numerator, w.denominator)
    return sp.ImmutableMatrix(W)


def valency(net: Network, i: int) -> Fraction:
    """Sum of the weights of all edges entering cell ``i`` (self-loops included)."""
    net.check_cell(i)
    return sum((w for (s, t), w in net.weights.items() if t == i), Fraction(0))


def laplacian(net: Network) -> sp.ImmutableMatrix:
    """``D - W`` with ``D`` the diagonal valency matrix; every row sums to zero."""
    W = adjacency(net)
    row_sums = [sum(W.row(i)) for i in range(net.n_cells)]
    return sp.ImmutableMatrix(sp.diag(*row_sums) - W)


def is_regular(net: Network) -> bool:
    vals = {valency(net, i) for i in range(1, net.n_cells + 1)}
    return len(vals) == 1


def as_float(M) -> np.ndarray:
    return np.array(sp.Matrix(M).evalf(), dtype=float)


@dataclass(frozen=True)
class CellMap:
    """Where the cells of the two components land in a coalesced network."""

    first: dict  # old cell of the first component -> new cell
    second: dict
    merge_cell: int


def coalesce(first: Network, merge_1: int, second: Network, merge_2: int) -> tuple[Network, CellMap]:
    """Identify cell ``merge_1`` of ``first`` with cell ``merge_2`` of ``second``.

    The result lists the other cells of ``first`` (original order), then the
    merged cell, then the other cells of ``second``.  Self-loop weights on the
    two identified cells add up.
    """
    first.check_cell(merge_1)
    second.check_cell(merge_2)
    n1, n2 = first.n_cells, second.n_cells
    map1, k = {}, 1
    for i in range(1, n1 + 1):
        if i != merge_1:
            map1[i] = k
            k += 1
    c = n1
    map1[merge_1] = c
    map2, k = {merge_2: c}, c + 1
    for i in range(1, n2 + 1):
        if i != merge_2:
            map2[i] = k
            k += 1
    weights: dict = {}
    for net, m in ((first, map1), (second, map2)):
        for (s, t), w in net.weights.items():
            key = (m[s], m[t])
            weights[key] = weights.get(key, Fraction(0)) + w
    weights = {key: w for key, w in weights.items() if w != 0}
    labels = [""] * (n1 + n2 - 1)
    for net, m in ((first, map1), (second, map2)):
        for old, new in m.items():
            labels[new - 1] = net.labels[old - 1]
    l1, l2 = first.labels[merge_1 - 1], second.labels[merge_2 - 1]
    labels[c - 1] = l1 if l1 == l2 else f"{l1}|{l2}"
    if len(set(labels)) != len(labels):
        labels = [str(i) for i in range(1, n1 + n2)]
    net = Network(n1 + n2 - 1, weights, tuple(labels))
    return net, CellMap(map1, map2, c)


def is_ffcn(second: Network, merge_2: int) -> bool:
    """True if the merge cell receives no edge from another cell of ``second``.

    A self-loop on the merge cell is allowed.
    """
    second.check_cell(merge_2)
    return not any(t == merge_2 and s != merge_2 for (s, t) in second.weights)


@dataclass(frozen=True)
class Coalescence:
    """A two-component coalescence ``first o second`` with its merge cells."""

    first: Network
    merge_1: int
    second: Network
    merge_2: int

    def __post_init__(self):
        self.first.check_cell(self.merge_1)
        self.second.check_cell(self.merge_2)

    @property
    def network(self) -> Network:
        return coalesce(self.first, self.merge_1, self.second, self.merge_2)[0]

    @property
    def cell_map(self) -> CellMap:
        return coalesce(self.first, self.merge_1, self.second, self.merge_2)[1]

    @property
    def is_ffcn(self) -> bool:
        return is_ffcn(self.second, self.merge_2)

    @property
    def n1(self) -> int:
        return self.first.n_cells

    @property
    def n2(self) -> int:
        return self.second.n_cells

    def first_ordered(self) -> Network:
        """``first`` renumbered so that the merge cell is last."""
        order = [i for i in range(1, self.n1 + 1) if i != self.merge_1] + [self.merge_1]
        return self.first.relabel(order)

    def second_ordered(self) -> Network:
        """``second`` renumbered so that the merge cell is first."""
        order = [self.merge_2] + [i for i in range(1, self.n2 + 1) if i != self.merge_2]
        return self.second.relabel(order)

    def require_ffcn(self) -> None:
        if not self.is_ffcn:
            raise PreconditionError("merge cell receives inputs in the second component; not feedforward")


@dataclass(frozen=True)
class ChainLink:
    """One component of a sequential coalescence.

    ``merge_in`` is glued to the previous component, ``merge_out`` to the next.
    """

    network: Network
    merge_in: int | None = None
    merge_out: int | None = None


@dataclass(frozen=True)
class SequentialCoalescence:
    network: Network
    components: tuple[ChainLink, ...]
    cell_maps: tuple[dict, ...]  # per component: old cell -> cell of the final network
    steps: tuple[Coalescence, ...]  # the pairwise coalescences, in order

    @property
    def is_ffcn(self) -> bool:
        return all(step.is_ffcn for step in self.steps)


def sequential_coalesce(components: Sequence[ChainLink]) -> SequentialCoalescence:
    """Fold ``N1 o N2 o ... o Nr`` left to right.

    Step ``k`` glues the running network at the image of ``merge_out`` of
    component ``k - 1`` to ``merge_in`` of component ``k``.
    """
    if not components:
        raise InputError("need at least one component")
    for k, link in enumerate(components):
        if k > 0:
            if link.merge_in is None:
                raise InputError(f"component {k + 1} lacks merge_in")
            link.network.check_cell(link.merge_in)
        if k < len(components) - 1:
            if link.merge_out is None:
                raise InputError(f"component {k + 1} lacks merge_out")
            link.network.check_cell(link.merge_out)
        if 0 < k < len(components) - 1 and link.merge_in == link.merge_out:
            raise InputError(f"component {k + 1}: merge_in and merge_out must differ")
    current = components[0].network
    maps = [{i: i for i in range(1, current.n_cells + 1)}]
    steps = []
    for k in range(1, len(components)):
        prev_out = maps[k - 1][components[k - 1].merge_out]
        link = components[k]
        steps.append(Coalescence(current, prev_out, link.network, link.merge_in))
        current, cmap = coalesce(current, prev_out, link.network, link.merge_in)
        maps = [{old: cmap.first[new] for old, new in m.items()} for m in maps]
        maps.append(dict(cmap.second))
    return SequentialCoalescence(current, tuple(components), tuple(maps), tuple(steps))
