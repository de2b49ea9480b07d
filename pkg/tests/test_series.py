import numpy as np
import pytest

from spseries import (
    LogisticParams,
    QuadraticSystem,
    TruncationSpec,
    analyze,
    as_quadratic_system,
    build_coefficients,
    closed_form,
    coefficients_csv,
    convolution_S,
    enumerate_indices,
    evaluate,
    evaluate_derivative,
    next_coefficient,
    residual_spectrum,
    scale_free_parameters,
)
from spseries.errors import (
    EvaluationOverflowError,
    MissingCoefficientError,
    TruncationBudgetError,
)

SQRT2 = np.sqrt(2.0)

# Published coefficient table for the integer 2x2 example at per-index cap 3
# (unit free parameters, alpha_1 components, rounded to hundredths);
# PAPER_ALPHA1[n1][n2] is the entry at multi-index (n1, n2).
PAPER_ALPHA1 = np.array([
    [1.00, 1.00, 0.93, 0.85],
    [1.00, 2.00, 2.82, 3.46],
    [-0.08, 1.28, 3.51, 6.27],
    [-0.64, -0.56, 1.33, 5.58],
])


@pytest.fixture
def tensor_2x2_int(system_2x2_int):
    spec = analyze(system_2x2_int)
    return spec, build_coefficients(system_2x2_int, spec, TruncationSpec.per_index(3))


def test_enumerate_per_index_tiny():
    assert enumerate_indices(TruncationSpec.per_index(1), 2) == [
        (0, 0), (0, 1), (1, 0), (1, 1)]


def test_enumerate_per_index_cap3():
    idxs = enumerate_indices(TruncationSpec.per_index(3), 2)
    assert len(idxs) == 16
    degrees = [sum(n) for n in idxs]
    assert degrees == sorted(degrees)


def test_enumerate_total_degree():
    idxs = enumerate_indices(TruncationSpec.total_degree(2), 3)
    assert len(idxs) == 10
    assert idxs[0] == (0, 0, 0)
    assert all(sum(n) <= 2 for n in idxs)


def test_enumerate_budget_gate():
    with pytest.raises(TruncationBudgetError):
        enumerate_indices(TruncationSpec.per_index(100), 6)


def test_convolution_empty_at_first_order(tensor_2x2_int):
    _, coeffs = tensor_2x2_int
    np.testing.assert_array_equal(convolution_S(coeffs, (1, 0)), np.zeros((2, 2)))


def test_convolution_hand_value(tensor_2x2_int):
    # interior of (1,1) is {(1,0), (0,1)} with alpha^{10} = (1, -sqrt2),
    # alpha^{01} = (1, sqrt2): S11 = 2, S12 = 0, S22 = -4
    _, coeffs = tensor_2x2_int
    S = convolution_S(coeffs, (1, 1))
    np.testing.assert_allclose(S, [[2.0, 0.0], [0.0, -4.0]], atol=1e-12)


def test_convolution_exactly_symmetric(tensor_2x2_int):
    _, coeffs = tensor_2x2_int
    for n in [(2, 1), (3, 3), (2, 2)]:
        S = convolution_S(coeffs, n)
        np.testing.assert_array_equal(S, S.T)


def test_convolution_missing_prerequisite(tensor_2x2_int):
    _, coeffs = tensor_2x2_int
    with pytest.raises(MissingCoefficientError):
        convolution_S(coeffs, (5, 0))


def test_next_coefficient_hand_solve(system_2x2_int, tensor_2x2_int):
    # ((lam1+lam2) I - J) alpha = diag(A S^{11}) becomes
    # [[-2, 1], [2, -2]] alpha = (-4, 4), so alpha = (2, 0)
    spec, coeffs = tensor_2x2_int
    oracle = np.linalg.solve([[-2.0, 1.0], [2.0, -2.0]], [-4.0, 4.0])
    got = next_coefficient(spec, system_2x2_int.A, coeffs, (1, 1))
    np.testing.assert_allclose(got, oracle, atol=1e-12)
    np.testing.assert_allclose(got, [2.0, 0.0], atol=1e-10)


def test_next_coefficient_second_order(system_2x2_int, tensor_2x2_int):
    # hand solve of ((2 lam1) I - J) alpha = (sqrt2-2, sqrt2-2)
    spec, coeffs = tensor_2x2_int
    shift = 2.0 * (-2.0 + SQRT2)
    oracle = np.linalg.solve(
        shift * np.eye(2) - np.array([[-2.0, -1.0], [-2.0, -2.0]]),
        [SQRT2 - 2.0, SQRT2 - 2.0])
    got = next_coefficient(spec, system_2x2_int.A, coeffs, (2, 0))
    np.testing.assert_allclose(got, oracle, atol=1e-12)
    assert got[0] == pytest.approx(-0.08, abs=0.01)


def test_build_reproduces_published_matrix(tensor_2x2_int):
    _, coeffs = tensor_2x2_int
    for n1 in range(4):
        for n2 in range(4):
            assert coeffs[(n1, n2)][0] == pytest.approx(
                PAPER_ALPHA1[n1][n2], abs=0.01), (n1, n2)


def test_build_cap_zero_is_equilibrium(system_2x2_int):
    spec = analyze(system_2x2_int)
    coeffs = build_coefficients(system_2x2_int, spec, TruncationSpec.per_index(0))
    assert list(coeffs) == [(0, 0)]
    np.testing.assert_allclose(coeffs[(0, 0)], spec.c, atol=1e-14)


def test_build_decoupled_structure(decoupled_pair):
    """A diagonal system is two independent logistic equations: mixed
    indices vanish and pure rows follow the geometric law."""
    spec = analyze(decoupled_pair, check_resonance=False)
    coeffs = build_coefficients(decoupled_pair, spec, TruncationSpec.per_index(5))
    for n in coeffs:
        if n[0] > 0 and n[1] > 0:
            np.testing.assert_allclose(coeffs[n], 0.0, atol=1e-12)
    for k in range(1, 6):
        np.testing.assert_allclose(coeffs[(k, 0)], [1.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(coeffs[(0, k)], [0.0, 1.0], atol=1e-12)


def test_anchor_fallback_on_decoupled(decoupled_pair):
    spec = analyze(decoupled_pair, check_resonance=False)
    coeffs = build_coefficients(decoupled_pair, spec, TruncationSpec.per_index(2))
    assert coeffs.anchors == (0, 1)


def test_shell_order_independence(system_2x2_close):
    """Entries of equal degree are mutually independent: recomputing any
    entry from the finished tensor reproduces the built value."""
    spec = analyze(system_2x2_close)
    coeffs = build_coefficients(system_2x2_close, spec, TruncationSpec.per_index(4))
    for n in coeffs:
        if sum(n) < 2:
            continue
        again = next_coefficient(spec, system_2x2_close.A, coeffs, n)
        np.testing.assert_allclose(again, coeffs[n], rtol=1e-12, atol=1e-14)


def test_monomial_scaling_law(system_2x2_int):
    spec = analyze(system_2x2_int)
    unit = build_coefficients(system_2x2_int, spec, TruncationSpec.per_index(4))
    direct = build_coefficients(system_2x2_int, spec, TruncationSpec.per_index(4),
                                free_params=[2.0, 3.0])
    scaled = scale_free_parameters(unit, [2.0, 3.0])
    for n in unit:
        np.testing.assert_allclose(scaled[n], direct[n], rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(scaled[n], unit[n] * 2.0 ** n[0] * 3.0 ** n[1],
                                   rtol=1e-12, atol=1e-13)


def test_scaling_identity_and_origin(tensor_2x2_int):
    _, coeffs = tensor_2x2_int
    same = scale_free_parameters(coeffs, [1.0, 1.0])
    np.testing.assert_array_equal(same[(2, 1)], coeffs[(2, 1)])
    moved = scale_free_parameters(coeffs, [2.0, 3.0])
    np.testing.assert_array_equal(moved[(0, 0)], coeffs[(0, 0)])
    assert moved[(1, 1)][0] == pytest.approx(2.0 * 2.0 * 3.0, rel=1e-12)


def test_first_order_ratio_formula(system_2x2_close):
    """Second-variable first-order entries relate to the anchored ones by
    a21 c2 / (lam_i - a22 c2), the row-two kernel identity."""
    spec = analyze(system_2x2_close)
    coeffs = build_coefficients(system_2x2_close, spec, TruncationSpec.per_index(1))
    a, c = system_2x2_close.A, spec.c
    for i, e_i in enumerate([(1, 0), (0, 1)]):
        ratio = a[1, 0] * c[1] / (spec.lam[i] - a[1, 1] * c[1])
        assert coeffs[e_i][1] == pytest.approx(ratio * coeffs[e_i][0], rel=1e-10)


def test_evaluate_long_time_limit(tensor_2x2_int):
    spec, coeffs = tensor_2x2_int
    np.testing.assert_allclose(evaluate(coeffs, spec.lam, 50.0), [1.0, 2.0],
                               atol=1e-10)


def test_evaluate_at_zero_is_coefficient_sum(tensor_2x2_int):
    spec, coeffs = tensor_2x2_int
    total = np.sum(coeffs.coefficient_matrix(), axis=0)
    np.testing.assert_allclose(evaluate(coeffs, spec.lam, 0.0), total, rtol=1e-14)


def test_evaluate_matches_logistic_closed_form():
    params = LogisticParams(r=1.0, k=1.0, x0=0.75)
    system = as_quadratic_system(params)
    spec = analyze(system)
    coeffs = build_coefficients(system, spec, TruncationSpec.total_degree(30))
    fitted = scale_free_parameters(coeffs, [-1.0 / 3.0])
    t = np.linspace(0.0, 10.0, 201)
    series_vals = evaluate(fitted, spec.lam, t)[:, 0]
    np.testing.assert_allclose(series_vals, closed_form(params, t), atol=1e-8)


def test_evaluate_overflow_guard(tensor_2x2_int):
    spec, coeffs = tensor_2x2_int
    with pytest.raises(EvaluationOverflowError):
        evaluate(coeffs, spec.lam, -100.0)
    # derivative takes the same guard
    with pytest.raises(EvaluationOverflowError):
        evaluate_derivative(coeffs, spec.lam, -100.0)


def test_evaluate_derivative_matches_difference(tensor_2x2_int):
    spec, coeffs = tensor_2x2_int
    h = 1e-6
    t = 1.25
    central = (evaluate(coeffs, spec.lam, t + h) - evaluate(coeffs, spec.lam, t - h)) / (2 * h)
    np.testing.assert_allclose(evaluate_derivative(coeffs, spec.lam, t), central,
                               rtol=1e-8)


@pytest.mark.parametrize("fixture,cap", [
    ("system_2x2_int", 2), ("system_2x2_int", 3), ("system_2x2_int", 4),
    ("system_2x2_close", 2), ("system_2x2_close", 3), ("system_2x2_close", 4),
])
def test_residual_property(fixture, cap, request):
    system = request.getfixturevalue(fixture)
    spec = analyze(system)
    coeffs = build_coefficients(system, spec, TruncationSpec.per_index(cap))
    res = residual_spectrum(system, coeffs, spec.lam)
    for n, vec in res.items():
        if coeffs.truncation.admits(n):
            assert np.linalg.norm(vec) <= 1e-9, n


def test_residual_equilibrium_only(system_2x2_int):
    spec = analyze(system_2x2_int)
    coeffs = build_coefficients(system_2x2_int, spec, TruncationSpec.per_index(0))
    res = residual_spectrum(system_2x2_int, coeffs, spec.lam)
    for vec in res.values():
        np.testing.assert_allclose(vec, 0.0, atol=1e-12)


def test_residual_dropped_term_formula(system_2x2_int, tensor_2x2_int):
    """Just past the truncation the residual is exactly the negated dropped
    convolution term."""
    spec, coeffs = tensor_2x2_int
    res = residual_spectrum(system_2x2_int, coeffs, spec.lam)
    S = convolution_S(coeffs, (4, 0))
    dropped = -np.diag(system_2x2_int.A @ S)
    np.testing.assert_allclose(res[(4, 0)], dropped, rtol=1e-12, atol=1e-12)
    assert np.linalg.norm(res[(4, 0)]) > 1e-6


def test_relabeling_equivariance_of_tensor(system_2x2_close):
    """Swapping the variables permutes multi-index components and vector
    components together, up to the anchor rescaling of the free parameters."""
    perm = [1, 0]
    swapped = QuadraticSystem(A=system_2x2_close.A[np.ix_(perm, perm)],
                              b=system_2x2_close.b[perm])
    spec = analyze(system_2x2_close)
    spec_s = analyze(swapped)
    coeffs = build_coefficients(system_2x2_close, spec, TruncationSpec.per_index(3))
    coeffs_s = build_coefficients(swapped, spec_s, TruncationSpec.per_index(3))
    # the swapped build re-anchors each mode; undo that scale explicitly
    basis = [(1, 0), (0, 1)]
    rescale = [coeffs[e][perm][coeffs_s.anchors[i]] for i, e in enumerate(basis)]
    matched = scale_free_parameters(coeffs_s, rescale)
    for n in coeffs:
        np.testing.assert_allclose(matched[(n[1], n[0])], coeffs[n][perm],
                                    rtol=1e-9, atol=1e-12)


def test_csv_export_shape(tensor_2x2_int):
    _, coeffs = tensor_2x2_int
    text = coefficients_csv(coeffs)
    lines = text.strip().split("\n")
    assert lines[0] == "n1,n2,alpha1,alpha2"
    assert len(lines) == 17
    first = lines[1].split(",")
    assert first[:2] == ["0", "0"]
    assert float(first[2]) == 1.0
