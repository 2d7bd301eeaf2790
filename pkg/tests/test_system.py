from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cache import example, jet
from coalnet import DiffusiveJet, GenericityError, JetError, build_network, laplacian, realize_polynomial_system
from coalnet.network import adjacency, as_float, coalesce
from coalnet.system import (LAM, X, Y, bifurcation_eigenvalue, evaluate_F, extract_jet, jacobian_origin,
                            realize_polynomials, taylor_tensors)
from strategies import networks

FAST = settings(max_examples=40, deadline=None, suppress_health_check=list(HealthCheck))
ZERO = dict(g_xx=0, g_xxx=0, g_xlam=0, h_11=0, h_12=0, h_111=0, h_122=0, h_1lam=0)

fractions = st.fractions(min_value=-3, max_value=3, max_denominator=7)


@st.composite
def jets(draw):
    values = {name: sp.Rational(str(draw(fractions))) for name in
              ("g_x", "g_xx", "g_xxx", "g_xlam", "h_11", "h_12", "h_111", "h_122", "h_1lam")}
    values["h_1"] = sp.Rational(str(draw(fractions.filter(lambda f: f != 0))))
    return DiffusiveJet.create(**values)


def test_default_jet_values():
    j = jet(3)
    assert j.g_x == -3
    assert j.h_22 == sp.Rational(1, 2)
    assert j.critical_eigenvalue == 3


def test_inconsistent_h22_rejected():
    with pytest.raises(JetError):
        DiffusiveJet.create(h_1=1, h_22=1, **ZERO)
    assert DiffusiveJet.create(h_1=1, h_22=0, **ZERO).h_22 == 0


def test_missing_or_unknown_entries():
    with pytest.raises(JetError):
        DiffusiveJet.create(h_1=1)
    with pytest.raises(JetError):
        DiffusiveJet.create(h_1=1, h_3=1, **ZERO)


def test_linear_jet_gives_shifted_laplacian():
    net = example("sqrt_growth")[0].network
    j = DiffusiveJet.create(g_x=-1, h_1=1, **ZERO)
    assert jacobian_origin(net, j) == -sp.eye(5) + laplacian(net)
    sysm = realize_polynomial_system(net, j)
    x = np.linspace(-0.3, 0.4, 5)
    A = -np.eye(5) + as_float(laplacian(net))
    assert np.allclose(sysm.F(x, 0.7), A @ x)


def test_round_trip_default_jet():
    j = jet(3)
    assert extract_jet(realize_polynomial_system(build_network(1, []), j)) == j


def test_h_vanishes_on_the_diagonal():
    _, h = realize_polynomials(jet(3))
    assert sp.expand(h.subs(Y, X)) == 0
    rng = np.random.default_rng(1)
    for a, lam in rng.integers(-50, 50, size=(200, 2)):
        point = {X: sp.Rational(int(a), 17), Y: sp.Rational(int(a), 17), LAM: sp.Rational(int(lam), 13)}
        assert h.subs(point) == 0


def test_realization_is_a_polynomial_in_the_right_variables():
    g, h = realize_polynomials(jet(1))
    assert g.free_symbols <= {X, LAM}
    assert h.free_symbols <= {X, Y, LAM}
    assert g.subs(X, 0) == 0


def test_synchrony_gives_equal_components():
    sysm = realize_polynomial_system(example("symmetric_triangle")[0].network, jet(3))
    F = evaluate_F(sysm, [sp.Rational(1, 3)] * 5, sp.Rational(1, 10))
    g = realize_polynomials(jet(3))[0].subs({X: sp.Rational(1, 3), LAM: sp.Rational(1, 10)})
    assert list(F) == [g] * 5


def test_origin_is_an_equilibrium():
    sysm = realize_polynomial_system(example("signed_linear")[0].network, jet(3))
    assert evaluate_F(sysm, [0] * 4, 5).is_zero_matrix
    assert np.all(evaluate_F(sysm, np.zeros(4), 0.3) == 0)


def test_exact_and_float_evaluation_agree():
    sysm = realize_polynomial_system(example("quarter_root")[0].network, jet(2))
    x = [sp.Rational(k, 7) for k in (1, -2, 3, 0, -1)]
    exact = evaluate_F(sysm, x, sp.Rational(1, 5))
    approx = evaluate_F(sysm, np.array([float(v) for v in x]), 0.2)
    assert np.allclose(np.array(exact, dtype=float).ravel(), approx, rtol=1e-13, atol=1e-15)


def test_coalescence_decomposes():
    coal, _ = example("loops_pair")
    net, cmap = coalesce(coal.first, coal.merge_1, coal.second, coal.merge_2)
    j = jet(1)
    full = realize_polynomial_system(net, j)
    s1 = realize_polynomial_system(coal.first, j)
    s2 = realize_polynomial_system(coal.second, j)
    g = sp.lambdify((X, LAM), realize_polynomials(j)[0])
    rng = np.random.default_rng(7)
    c = cmap.merge_cell - 1
    for _ in range(100):
        x = rng.uniform(-1, 1, 3)
        lam = rng.uniform(-1, 1)
        F = full.F(x, lam)
        x1 = np.array([x[cmap.first[i] - 1] for i in (1, 2)])
        x2 = np.array([x[cmap.second[i] - 1] for i in (1, 2)])
        F1, F2 = s1.F(x1, lam), s2.F(x2, lam)
        expected = np.zeros(3)
        for i in (1, 2):
            expected[cmap.first[i] - 1] += F1[i - 1]
            expected[cmap.second[i] - 1] += F2[i - 1]
        expected[c] -= g(x[c], lam)
        assert np.allclose(F, expected, atol=1e-13)


def test_jacobian_for_triangle():
    first = example("symmetric_triangle")[0].first
    j = DiffusiveJet.create(g_x=3, h_1=-1, **ZERO)
    J = jacobian_origin(first, j)
    assert J == 3 * sp.eye(3) - laplacian(first)
    assert sorted(J.eigenvals(multiple=True)) == [0, 0, 3]


def test_jacobian_without_coupling():
    first = example("symmetric_triangle")[0].first
    j = DiffusiveJet.create(g_x=2, h_1=0, **ZERO)
    assert jacobian_origin(first, j) == 2 * sp.eye(3)
    assert bifurcation_eigenvalue(first, j) is None


def test_general_jacobian_reduces_to_diffusive_form():
    net = example("signed_linear")[0].network
    j = jet(3)
    W = adjacency(net)
    D = sp.diag(*[sum(W.row(i)) for i in range(W.rows)])
    general = j.g_x * sp.eye(4) + j.h_1 * D + j.h_2 * W
    assert general == jacobian_origin(net, j)
    J = realize_polynomial_system(net, j).jacobian(np.zeros(4), 0.0)
    assert np.allclose(J, as_float(general))


def test_bifurcation_eigenvalues():
    net6 = example("symmetric_triangle")[0].network
    assert bifurcation_eigenvalue(net6, jet(3)) == 3
    assert bifurcation_eigenvalue(net6, jet(5)) is None
    assert bifurcation_eigenvalue(example("quarter_root")[0].network, jet(2)) == 2


def test_all_eigenvalues_critical():
    j = DiffusiveJet.create(g_x=0, h_1=0, **ZERO)
    assert bifurcation_eigenvalue(build_network(1, []), j) == 0
    with pytest.raises(GenericityError):
        bifurcation_eigenvalue(example("sqrt_growth")[0].network, j)
    with pytest.raises(JetError):
        j.critical_eigenvalue


def test_hessian_of_tail_cell():
    coal, _ = example("sqrt_growth")
    sj = DiffusiveJet.symbolic(1)
    T = taylor_tensors(realize_polynomial_system(coal.second_ordered(), sj))
    H = sp.Matrix(3, 3, lambda a, b: T.D2[1, a, b])
    g_xx, h_11, h_12, h_22 = sj.g_xx, sj.h_11, sj.h_12, sj.h_22
    expected = sp.Matrix([[h_22, h_12, 0], [h_12, g_xx + 3 * h_11, 2 * h_12], [0, 2 * h_12, 2 * h_22]])
    assert (H - expected).applyfunc(sp.expand).is_zero_matrix


def test_linear_jet_has_zero_tensors():
    net = example("quarter_root")[0].network
    T = taylor_tensors(realize_polynomial_system(net, DiffusiveJet.create(g_x=-1, h_1=1, **ZERO)))
    assert not any(sp.flatten(T.D2.tolist())) and not any(sp.flatten(T.D3.tolist()))


def test_hessian_against_finite_differences():
    net = example("signed_linear")[0].network
    sysm = realize_polynomial_system(net, jet(3))
    T = sysm.tensors
    rng = np.random.default_rng(3)
    h = 1e-4
    for _ in range(5):
        v = rng.uniform(-1, 1, 4)
        fd = (sysm.jacobian(h * v, 0.0) - sysm.jacobian(-h * v, 0.0)) @ v / (2 * h)
        exact = np.array([float(T.hess(i, list(v), list(v))) for i in range(4)])
        assert np.allclose(fd, exact, rtol=1e-6)


def test_taylor_tensors_are_symmetric():
    T = realize_polynomial_system(example("sqrt_growth")[0].network, jet(1)).tensors
    for i in range(T.n):
        for a in range(T.n):
            for b in range(T.n):
                assert T.D2[i, a, b] == T.D2[i, b, a]
                for c in range(T.n):
                    assert T.D3[i, a, b, c] == T.D3[i, c, a, b] == T.D3[i, b, c, a]


@FAST
@given(networks(max_cells=5), jets(), st.floats(-0.5, 0.5), st.floats(-0.5, 0.5))
def test_full_synchrony_is_invariant(net, j, z, lam):
    F = realize_polynomial_system(net, j).F(np.full(net.n_cells, z), lam)
    assert np.allclose(F, F[0], rtol=0, atol=1e-14)


@FAST
@given(networks(max_cells=5), jets())
def test_jacobian_matches_finite_differences(net, j):
    sysm = realize_polynomial_system(net, j)
    n, h = net.n_cells, 1e-6
    fd = np.column_stack([(sysm.F(h * e, 0.0) - sysm.F(-h * e, 0.0)) / (2 * h) for e in np.eye(n)])
    J = as_float(jacobian_origin(net, j))
    assert np.allclose(fd, J, rtol=1e-6, atol=1e-6 * (1 + np.abs(J).max()))


@FAST
@given(networks(max_cells=5), jets())
def test_affine_spectral_map(net, j):
    # det(t - g_x - h_1 L) = h_1^n det((t - g_x)/h_1 - L), multiplicities included
    t = sp.Symbol("t")
    n = net.n_cells
    lhs = jacobian_origin(net, j).charpoly(t).as_expr()
    rhs = j.h_1 ** n * sp.Matrix(laplacian(net)).charpoly(t).as_expr().subs(t, (t - j.g_x) / j.h_1)
    assert sp.expand(lhs - rhs) == 0


@FAST
@given(jets())
def test_jet_round_trip(j):
    assert extract_jet(realize_polynomial_system(build_network(1, []), j)) == j


def test_float_entries_parse_exactly():
    j = DiffusiveJet.create(g_x=0.5, h_1=Fraction(1, 3), **ZERO)
    assert j.g_x == sp.Rational(1, 2) and j.h_1 == sp.Rational(1, 3)
