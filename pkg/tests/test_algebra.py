import itertools
import math

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from barcode_coords import algebra
from barcode_coords.algebra import (
    GeneratorIndex,
    PowerSumIndex,
    allowed_pairs,
    basis_monomials,
    check_derivation_condition,
    check_free_generation,
    count_generators_in_degree,
    eval_generator,
    eval_orbit_sum,
    eval_power_sum,
    generators_up_to,
    hilbert_coefficients,
    phi_index,
    to_xi_eta,
)

endpoint = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


@st.composite
def intervals(draw):
    a, b = draw(endpoint), draw(endpoint)
    return (min(a, b), max(a, b))


barcodes = st.lists(intervals(), max_size=10)


# --- oracles ------------------------------------------------------------------


def orbit_sum_bruteforce(bc, m):
    """Sum over distinct arrangements of m's pairs (padded by (0,0)) over the intervals."""
    n = len(bc)
    if len(m) > n:
        return 0.0
    padded = list(m) + [(0, 0)] * (n - len(m))
    total = 0.0
    for arr in set(itertools.permutations(padded)):
        term = 1.0
        for (x, y), (a, b) in zip(bc, arr):
            term *= (x + y) ** a * (y - x) ** b
        total += term
    return total


def euler_transform_series(max_degree):
    """Coefficients of prod (1 - t^k)^(-k) from c_n = (1/n) sum_k sigma_2(k) c_{n-k}."""
    c = [sympy.Integer(1)]
    for n in range(1, max_degree + 1):
        c.append(sum(sympy.divisor_sigma(k, 2) * c[n - k] for k in range(1, n + 1)) / n)
    return [int(v) for v in c]


def symbolic_rank(max_degree, point):
    n = len(point) // 2
    xs = sympy.symbols(f"x0:{n}")
    ys = sympy.symbols(f"y0:{n}")
    gens = []
    for g in generators_up_to(max_degree):
        gens.append(sum(xs[i] ** (g.a + 1) * ys[i] ** g.b - xs[i] ** g.a * ys[i] ** (g.b + 1) for i in range(n)))
    variables = [v for pair in zip(xs, ys) for v in pair]
    J = sympy.Matrix(gens).jacobian(variables)
    subs = {v: sympy.Rational(p).limit_denominator(10**6) for v, p in zip(variables, point)}
    return J.subs(subs).rank()


# --- examples -------------------------------------------------------------------


def test_to_xi_eta_examples():
    assert to_xi_eta((0, 0)) == algebra.XiEta(0, 0)
    assert to_xi_eta((1, 3)) == algebra.XiEta(4, 2)
    assert to_xi_eta((-2, -2)) == algebra.XiEta(-4, 0)


def test_power_sum_examples():
    assert eval_power_sum([], (1, 0)) == 0
    assert eval_power_sum([(1, 3), (2, 2)], (1, 0)) == 3
    assert eval_power_sum([(2, 3)], (0, 2)) == 9
    assert eval_power_sum([(0, 3)], (0, 1)) == 3  # 0**0 == 1


def test_power_sum_index_rejects_zero():
    with pytest.raises(ValueError):
        PowerSumIndex(0, 0)
    with pytest.raises(ValueError):
        GeneratorIndex(-1, 0)


def test_generator_examples():
    assert eval_generator([(1, 3)], (0, 0)) == -2
    assert eval_generator([(1, 3), (2, 2)], (0, 0)) == -2
    assert eval_generator([], (2, 1)) == 0
    # p_{2,0} - p_{1,1} on (1,3): 1 - 3
    assert eval_generator([(1, 3)], (1, 0)) == -2


def test_orbit_sum_examples():
    assert eval_orbit_sum([(0, 1)], [(0, 1)]) == 1
    assert eval_orbit_sum([(0, 1), (0, 2)], [(0, 1), (0, 1)]) == 2
    assert eval_orbit_sum([(1, 3)], [(1, 1)]) == 8
    assert eval_orbit_sum([(1, 3)], [(0, 1), (0, 1)]) == 0  # more pairs than bars
    assert eval_orbit_sum([(1, 3)], []) == 1


def test_basis_examples():
    assert basis_monomials(0) == [()]
    assert basis_monomials(1) == [((0, 1),)]
    got = basis_monomials(3)
    want = [((0, 3),), ((1, 2),), ((2, 1),), ((0, 2), (0, 1)), ((1, 1), (0, 1)), ((0, 1), (0, 1), (0, 1))]
    assert sorted(got) == sorted(want)
    assert len(got) == 6


def test_basis_canonical_order():
    for d in range(1, 7):
        ms = basis_monomials(d)
        keys = [[(-(a + b), a) for a, b in m] for m in ms]
        assert keys == sorted(keys)
        for k in keys:
            assert k == sorted(k)


def test_basis_pairs_are_allowed():
    for d in range(8):
        for m in basis_monomials(d):
            assert sum(a + b for a, b in m) == d
            assert all(b > 0 for a, b in m)  # a > 0 implies b > 0, and (a, 0) is excluded


def test_basis_matches_independent_enumeration():
    # enumerate multisets over all (a, b) with a+b <= d, filter afterwards
    for d in range(7):
        pool = [(a, b) for a in range(d + 1) for b in range(d + 1) if 0 < a + b <= d]
        found = set()
        for r in range(d + 1):
            for combo in itertools.combinations_with_replacement(pool, r):
                if sum(a + b for a, b in combo) == d and all(a == 0 or b > 0 for a, b in combo):
                    found.add(tuple(sorted(combo)))
        got = {tuple(sorted(m)) for m in basis_monomials(d)}
        assert got == found


def test_phi_order():
    # (x - y, y) exponents (1,0),(1,1),(2,0),(1,2),(2,1),(3,0) are (xi, eta) pairs (0,1),(1,1),(0,2),...
    seq = [(0, 1), (1, 1), (0, 2), (2, 1), (1, 2), (0, 3)]
    assert [phi_index(p) for p in seq] == list(range(6))
    with pytest.raises(ValueError):
        phi_index((1, 0))
    for d in range(6):
        assert len(basis_monomials(d, key=phi_index)) == len(basis_monomials(d))


def test_hilbert_examples():
    assert hilbert_coefficients(0) == [1]
    assert hilbert_coefficients(5) == [1, 1, 3, 6, 13, 24]
    assert hilbert_coefficients(8)[8] == 160


def test_hilbert_matches_euler_transform():
    assert hilbert_coefficients(10) == euler_transform_series(10)


def test_hilbert_matches_basis_counts():
    coeffs = hilbert_coefficients(10)
    assert [len(basis_monomials(k)) for k in range(11)] == coeffs


def test_count_generators():
    assert count_generators_in_degree(1) == (1, [GeneratorIndex(0, 0)])
    n, gens = count_generators_in_degree(3)
    assert n == 3 and set(gens) == {GeneratorIndex(2, 0), GeneratorIndex(1, 1), GeneratorIndex(0, 2)}
    assert count_generators_in_degree(5)[0] == 5
    assert all(g.degree == 5 for g in count_generators_in_degree(5)[1])
    with pytest.raises(ValueError):
        count_generators_in_degree(0)


def test_allowed_pairs():
    assert allowed_pairs(0) == []
    assert allowed_pairs(2) == [(0, 2), (1, 1)]


# --- derivation condition and free generation -----------------------------------------


def test_derivation_examples():
    assert check_derivation_condition(lambda bc: eval_generator(bc, (0, 0)), n=2)
    res = check_derivation_condition(lambda bc: eval_power_sum(bc, (1, 0)), n=1)
    assert not res
    i, point, residual = res.failure
    assert i == 0 and abs(residual - 1.0) < 1e-6
    assert check_derivation_condition(lambda bc: 1.0, n=3)


def test_derivation_rejects_bad_args():
    with pytest.raises(ValueError):
        check_derivation_condition(lambda bc: 0.0, n=0)


def test_products_of_generators_pass_derivation():
    gens = generators_up_to(3)
    rng = np.random.default_rng(5)
    for _ in range(5):
        g1, g2 = (gens[i] for i in rng.integers(0, len(gens), size=2))
        f = lambda bc, g1=g1, g2=g2: eval_generator(bc, g1) * eval_generator(bc, g2)
        assert check_derivation_condition(f, n=2, trials=20)


def test_orbit_sums_pass_derivation():
    # orbit sums of allowed monomials lie in the invariant ring
    for m in basis_monomials(3):
        f = lambda bc, m=m: eval_orbit_sum(bc, m)
        assert check_derivation_condition(f, n=3, trials=10)


def test_forbidden_orbit_sum_fails_derivation():
    assert not check_derivation_condition(lambda bc: eval_orbit_sum(bc, [(1, 0)]), n=2, trials=5)


@pytest.mark.parametrize("max_degree,n,rank", [(1, 1, 1), (2, 2, 3), (3, 4, 6)])
def test_free_generation_examples(max_degree, n, rank):
    rep = check_free_generation(max_degree, n)
    assert rep.rank == rank == rep.n_generators
    assert rep.full_rank


@pytest.mark.parametrize("max_degree,n", [(2, 2), (3, 4)])
def test_free_generation_matches_symbolic_rank(max_degree, n):
    rep = check_free_generation(max_degree, n)
    assert symbolic_rank(max_degree, rep.point) == rep.rank


def test_free_generation_underdetermined():
    with pytest.raises(ValueError):
        check_free_generation(3, 2)


def test_generators_with_few_bars_are_dependent():
    # with a single bar only 2 of the 3 degree-<=2 generators can be independent
    gens = generators_up_to(2)
    J = algebra.generator_jacobian(gens, np.array([0.3, 1.1]))
    assert np.linalg.matrix_rank(J, tol=1e-8) == 2


# --- properties -------------------------------------------------------------------------


@given(barcodes, st.integers(0, 4), st.integers(0, 4), endpoint, st.integers(0, 10))
def test_zero_bar_invariance_exact(bc, a, b, c, pos):
    padded = bc[:pos] + [(c, c)] + bc[pos:]
    assert eval_generator(padded, (a, b)) == eval_generator(bc, (a, b))


@given(barcodes, st.integers(0, 3), st.integers(0, 3), st.randoms(use_true_random=False))
def test_permutation_invariance(bc, a, b, rnd):
    shuffled = list(bc)
    rnd.shuffle(shuffled)
    ref = eval_generator(bc, (a, b))
    assert math.isclose(eval_generator(shuffled, (a, b)), ref, rel_tol=1e-12, abs_tol=1e-9)
    if (a, b) != (0, 0):
        ref = eval_power_sum(bc, (a, b))
        assert math.isclose(eval_power_sum(shuffled, (a, b)), ref, rel_tol=1e-12, abs_tol=1e-9)


@given(endpoint)
def test_diagonal_eta_vanishes(c):
    assert to_xi_eta((c, c)).eta == 0


@given(barcodes)
def test_generator_is_power_sum_difference(bc):
    for a, b in [(0, 0), (1, 0), (0, 1), (2, 1)]:
        want = eval_power_sum(bc, (a + 1, b)) - eval_power_sum(bc, (a, b + 1))
        assert math.isclose(eval_generator(bc, (a, b)), want, rel_tol=1e-9, abs_tol=1e-6)


@given(st.lists(intervals(), min_size=1, max_size=5), st.integers(1, 4), st.data())
def test_orbit_sum_matches_bruteforce(bc, degree, data):
    m = data.draw(st.sampled_from(basis_monomials(degree)))
    got = eval_orbit_sum(bc, m)
    want = orbit_sum_bruteforce(bc, m)
    assert math.isclose(got, want, rel_tol=1e-10, abs_tol=1e-9 * max(1.0, abs(want)))


@given(barcodes, st.integers(1, 3), st.data(), endpoint)
def test_orbit_sum_zero_bar_invariance(bc, degree, data, c):
    m = data.draw(st.sampled_from(basis_monomials(degree)))
    got = eval_orbit_sum(bc + [(c, c)], m)
    want = eval_orbit_sum(bc, m)
    assert math.isclose(got, want, rel_tol=1e-9, abs_tol=1e-6)


def test_hilbert_report_json_shape():
    rep = algebra.hilbert_report(3)
    assert rep["coefficients"] == {"0": 1, "1": 1, "2": 3, "3": 6}
    assert rep["basis"]["1"] == [[[0, 1]]]
