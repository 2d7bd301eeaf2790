import warnings

import numpy as np
import pytest
import sympy as sp
from hypothesis import HealthCheck, given, settings

from cache import example
from coalnet import (InputError, PreconditionError, build_network, coupling_condition, eigen_structure,
                     ffcn_spectral_report, laplacian, lift_eigenvector, reduced_laplacians,
                     spectrum_union_check, zero_eigenspace_basis)
from coalnet.errors import ClusteringWarning
from coalnet.network import ChainLink, Coalescence, sequential_coalesce
from strategies import ffcns, networks

RANDOM = settings(max_examples=200, deadline=None, suppress_health_check=list(HealthCheck))


def same_span(vectors, reference) -> bool:
    A = sp.Matrix.hstack(*[sp.Matrix(v) for v in vectors])
    B = sp.Matrix.hstack(*[sp.Matrix(v) for v in reference])
    return A.rank() == B.rank() == A.row_join(B).rank()


def in_span(vector, basis) -> bool:
    A = sp.Matrix.hstack(*[sp.Matrix(v) for v in basis])
    return A.rank() == A.row_join(sp.Matrix(vector)).rank()


def multiplicities(S):
    return {e.value: (e.m_a, e.m_g) for e in S.eigenvalues}


def check_chains(L, S):
    L = sp.Matrix(L)
    for e in S.eigenvalues:
        N = L - e.value * sp.eye(L.rows)
        for chain in e.chains:
            assert (N * chain[0]).is_zero_matrix
            for lower, upper in zip(chain, chain[1:]):
                assert N * upper == lower


# reduced blocks


def test_reduced_blocks_of_sqrt_growth():
    b = reduced_laplacians(example("sqrt_growth")[0])
    assert b.L_tail == sp.Matrix([[3, -2], [-1, 2]])
    assert b.L_c == sp.Matrix([-1, -1])
    assert b.L_bar == b.L_c.row_join(b.L_tail)


def test_reduced_blocks_of_double_zero():
    assert reduced_laplacians(example("double_zero")[0]).L_c == sp.Matrix([-1, 0])


def test_reduced_blocks_single_cell_second():
    first = example("sqrt_growth")[0].first
    b = reduced_laplacians(Coalescence(first, 3, build_network(1, []), 1))
    assert b.L_tail.shape == (0, 0) and b.L_c.shape == (0, 1)


def test_reduced_blocks_need_feedforward():
    with pytest.raises(PreconditionError):
        reduced_laplacians(example("loops_pair")[0])


# eigen structure


def test_triangle_spectrum():
    S = eigen_structure(laplacian(example("symmetric_triangle")[0].first))
    assert multiplicities(S) == {0: (1, 1), 3: (2, 2)}
    assert same_span(S.find(3).eigenvectors, [(1, 0, -1), (0, 1, -1)])


def test_sqrt_growth_chain():
    coal, _ = example("sqrt_growth")
    L = laplacian(coal.network)
    S = eigen_structure(L)
    e = S.find(1)
    assert (e.m_a, e.m_g) == (2, 1)
    chain = e.chains[0]
    assert same_span([chain[0]], [(0, 0, 0, 1, 1)])
    target = sp.Matrix([0, 1, 1, -1, -1])
    assert in_span(target, chain)
    image = (sp.Matrix(L) - sp.eye(5)) * target
    assert not image.is_zero_matrix and in_span(image, [chain[0]])
    check_chains(L, S)


def test_quarter_root_eigenvectors():
    coal, _ = example("quarter_root")
    L = laplacian(coal.network)
    S = eigen_structure(L)
    assert multiplicities(S) == {0: (1, 1), 1: (1, 1), 2: (3, 1)}
    assert same_span(S.find(1).eigenvectors, [(0, 1, 1, 2, 3)])
    G2 = S.find(2).generalized_basis
    assert same_span(G2, [(0, 0, 0, 0, 1), (0, 0, 0, -1, 1), (0, 0, 1, -3, 0)])
    check_chains(L, S)


def test_zero_matrix():
    S = eigen_structure(sp.zeros(3, 3))
    assert multiplicities(S) == {0: (3, 3)}


def test_irrational_eigenvalues_fall_back_to_floats():
    L = laplacian(build_network(3, [(1, 2, 1), (2, 3, 1), (3, 1, 2)]))
    S = eigen_structure(L)
    assert sum(e.m_a for e in S.eigenvalues) == 3
    ev = np.sort_complex(np.linalg.eigvals(np.array(L, dtype=float)))
    got = np.sort_complex(np.array([e.numeric_value() for e in S.eigenvalues]))
    assert np.allclose(ev, got)
    with pytest.raises(PreconditionError):
        eigen_structure(L, exact=True)


def test_float_path_matches_exact():
    coal, _ = example("quarter_root")
    S = eigen_structure(laplacian(coal.network), exact=False)
    got = {round(float(np.real(e.value)), 6): (e.m_a, e.m_g) for e in S.eigenvalues}
    assert got == {0.0: (1, 1), 1.0: (1, 1), 2.0: (3, 1)}
    A = np.array(laplacian(coal.network), dtype=float)
    for e in S.eigenvalues:
        N = A - e.value * np.eye(5)
        for chain in e.chains:
            assert np.max(np.abs(N @ chain[0])) < 1e-8
            for lo, hi in zip(chain, chain[1:]):
                assert np.max(np.abs(N @ hi - lo)) < 1e-8


def test_close_clusters_warn():
    with pytest.warns(ClusteringWarning):
        eigen_structure(np.diag([1.0, 1.0 + 1e-4, 3.0]), exact=False)


def test_non_square_rejected():
    with pytest.raises(InputError):
        eigen_structure(sp.zeros(2, 3))


# union of spectra


def test_union_for_triangle():
    report = spectrum_union_check(example("symmetric_triangle")[0])
    assert report.ok
    rows = {r.mu: r for r in report.rows}
    assert {mu: r.m_a for mu, r in rows.items()} == {0: 1, 1: 1, 3: 3}
    assert (rows[3].m_a_first, rows[3].m_a_second) == (2, 1)
    assert all(r.semisimple for r in report.rows)


def test_union_for_double_zero():
    report = spectrum_union_check(example("double_zero")[0])
    assert report.ok
    zero = next(r for r in report.rows if r.mu == 0)
    assert (zero.m_a, zero.m_a_first, zero.m_a_second) == (3, 2, 2)


def test_union_with_single_cell_second():
    first = example("sqrt_growth")[0].first
    coal = Coalescence(first, 3, build_network(1, []), 1)
    report = spectrum_union_check(coal)
    assert report.ok
    assert multiplicities(eigen_structure(laplacian(coal.network))) == multiplicities(
        eigen_structure(laplacian(first)))


def test_union_needs_feedforward():
    with pytest.raises(PreconditionError):
        spectrum_union_check(example("loops_pair")[0])


# coupling condition


@pytest.mark.parametrize("name, mu, column, holds", [
    ("symmetric_triangle", 3, (-1, -1), True),
    ("sqrt_growth", 1, (-1, -1), False),
    ("quarter_root", 1, (-2, -1), True),
    ("double_zero", 2, (-1, 0), False),
])
def test_coupling_verdicts(name, mu, column, holds):
    coal, _ = example(name)
    verdict = coupling_condition(coal, mu)
    assert verdict.exact
    assert tuple(verdict.column) == column
    assert verdict.holds is holds
    b = reduced_laplacians(coal)
    if holds:
        w = verdict.particular_solution
        assert (b.L_tail - mu * sp.eye(2)) * w == -b.L_c
    else:
        assert verdict.particular_solution is None


def test_coupling_float_path():
    coal, _ = example("symmetric_triangle")
    verdict = coupling_condition(coal, 3.0)
    assert verdict.holds and not verdict.exact
    b = reduced_laplacians(coal)
    M = np.array(b.L_tail, dtype=float) - 3.0 * np.eye(2)
    assert np.allclose(M @ verdict.particular_solution, -np.array(b.L_c, dtype=float).ravel())


# lifting


def test_lift_simple_eigenvector():
    res = lift_eigenvector(example("quarter_root")[0], 1, [0, 1, 1])
    assert res.is_eigenvector and list(res.vector) == [0, 1, 1, 2, 3]


def test_lift_to_generalized_eigenvector():
    coal, _ = example("quarter_root")
    res = lift_eigenvector(coal, 2, [0, 0, 1])
    assert not res.is_eigenvector and res.power == 3
    G2 = eigen_structure(laplacian(coal.network)).find(2).generalized_basis
    assert in_span(res.vector, G2)
    assert in_span([0, 0, 1, -3, 0], G2)


def test_lift_with_zero_merge_coordinate():
    res = lift_eigenvector(example("symmetric_triangle")[0], 3, [1, -1, 0])
    assert res.is_eigenvector and list(res.vector) == [1, -1, 0, 0, 0]


def test_lift_rejects_non_eigenvectors():
    coal, _ = example("quarter_root")
    with pytest.raises(PreconditionError):
        lift_eigenvector(coal, 1, [1, 0, 0])
    with pytest.raises(InputError):
        lift_eigenvector(coal, 1, [0, 1])


def test_lift_non_semisimple():
    coal, _ = example("sqrt_growth")
    res = lift_eigenvector(coal, 1, [0, 1, 1])
    assert res.power == 2


# zero eigenspace and provenance


def test_zero_eigenspace_of_double_zero():
    coal, _ = example("double_zero")
    basis = zero_eigenspace_basis(coal)
    assert len(basis) == 3
    assert same_span(basis, [(1, 1, 1, 1, 1), (0, 1, 2, 0, -2), (0, 0, 0, 1, 2)])
    assert list(lift_eigenvector(coal, 0, [1, 1, 1]).vector) == [1, 1, 1, 1, 1]
    assert list(lift_eigenvector(coal, 0, [0, 1, 2]).vector) == [0, 1, 2, 0, -2]


def test_zero_eigenspace_connected_components():
    basis = zero_eigenspace_basis(example("sqrt_growth")[0])
    assert [list(v) for v in basis] == [[1] * 5]


def test_provenance_for_triangle():
    report = ffcn_spectral_report(example("symmetric_triangle")[0])
    e3 = next(e for e in report.eigenvalues if e.mu == 3)
    assert e3.m_a == 3 and e3.semisimple
    assert sorted(b.component for b in e3.basis) == [1, 1, 2]
    assert same_span([b.vector for b in e3.basis], [(1, 0, -1, 0, 1), (0, 1, -1, 0, 1), (0, 0, 0, 1, -1)])


def test_provenance_with_single_cell_second():
    first = example("sqrt_growth")[0].first
    report = ffcn_spectral_report(Coalescence(first, 3, build_network(1, []), 1))
    S = eigen_structure(laplacian(first))
    assert {e.mu: (e.m_a, e.m_g) for e in report.eigenvalues} == multiplicities(S)
    assert all(b.component == 1 for e in report.eigenvalues for b in e.basis)


def test_provenance_of_a_chain():
    second = example("double_zero")[0].second
    seq = sequential_coalesce([ChainLink(second, None, 3), ChainLink(second, 1, 3), ChainLink(second, 1, None)])
    report = ffcn_spectral_report(seq)
    got = {e.mu: e.m_a for e in report.eigenvalues}
    # zero: 2 per component, minus one per merge; two: one per component
    assert got == {0: 4, 2: 3}
    L = laplacian(seq.network)
    assert len(sp.Matrix(L).nullspace()) == 4
    zero = next(e for e in report.eigenvalues if e.mu == 0)
    assert sorted(b.component for b in zero.basis) == [1, 1, 2, 3]


# random feedforward coalescences


@RANDOM
@given(ffcns(max_first=6, max_second=6, min_first=2, min_second=2))
def test_multiplicity_identities(coal):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClusteringWarning)
        report = spectrum_union_check(coal)
    assert not report.missing
    for row in report.rows:
        assert row.multiplicity_ok, row
        if row.coupling:
            assert row.semisimplicity_ok is not False, row
            assert row.m_g == row.m_g_first + row.m_g_second - (1 if row.mu == 0 else 0), row
        if row.semisimplicity_ok is not None:
            assert row.semisimplicity_ok, row


@settings(max_examples=100, deadline=None, suppress_health_check=list(HealthCheck))
@given(networks(max_cells=6, weights_positive=True))
def test_zero_is_semisimple_for_positive_weights(net):
    e = eigen_structure(laplacian(net)).find(0)
    assert e.m_a == e.m_g


def test_zero_can_be_defective_with_signed_weights():
    net = build_network(3, [(1, 2, 1), (3, 2, -1)])
    e = eigen_structure(laplacian(net)).find(0)
    assert (e.m_a, e.m_g) == (3, 2)


@settings(max_examples=60, deadline=None, suppress_health_check=list(HealthCheck))
@given(ffcns(max_first=4, max_second=4))
def test_chains_satisfy_jordan_relations(coal):
    L = laplacian(coal.network)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ClusteringWarning)
        S = eigen_structure(L)
    assert sum(e.m_a for e in S.eigenvalues) == L.rows
    for e in S.eigenvalues:
        assert len(e.chains) == e.m_g
        assert sum(len(c) for c in e.chains) == e.m_a
    exact = [e for e in S.eigenvalues if e.exact]
    check_chains(L, type(S)(S.size, exact, True))
    A = np.array(L, dtype=complex)
    for e in S.eigenvalues:
        if e.exact:
            continue
        N = A - e.numeric_value() * np.eye(L.rows)
        for chain in e.chains:
            assert np.max(np.abs(N @ np.asarray(chain[0], dtype=complex))) < 1e-8
