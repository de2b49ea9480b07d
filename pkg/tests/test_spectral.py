import numpy as np
import pytest

from spseries import (
    QuadraticSystem,
    analyze,
    equilibrium,
    kernel_direction,
    linearization,
    resonance_check,
    spectrum,
)
from spseries.errors import (
    ComplexSpectrumError,
    DegenerateSpectrumError,
    ResonanceError,
    UnstableSpectrumError,
)

SQRT2 = np.sqrt(2.0)


def test_equilibrium_examples(system_2x2_int, system_2x2_close):
    np.testing.assert_allclose(equilibrium(system_2x2_int), [1.0, 2.0], atol=1e-12)
    np.testing.assert_allclose(equilibrium(system_2x2_close), [2.0, 1.5], atol=1e-10)


def test_equilibrium_negated_identity():
    system = QuadraticSystem(A=-np.eye(2), b=[1.0, 2.0])
    np.testing.assert_allclose(equilibrium(system), [1.0, 2.0], atol=1e-14)


def test_linearization_row_scaling(system_2x2_int, system_2x2_close):
    J = linearization(system_2x2_int, np.array([1.0, 2.0]))
    np.testing.assert_allclose(J, [[-2.0, -1.0], [-2.0, -2.0]], atol=1e-14)
    J = linearization(system_2x2_close, np.array([2.0, 1.5]))
    np.testing.assert_allclose(J, [[-2.0, -0.6], [-0.15, -1.5]], atol=1e-14)
    assert np.all(linearization(system_2x2_int, np.zeros(2)) == 0.0)


def test_spectrum_closed_form_2x2():
    lam = spectrum(np.array([[-2.0, -1.0], [-2.0, -2.0]]))
    np.testing.assert_allclose(lam, [-2.0 + SQRT2, -2.0 - SQRT2], atol=1e-10)


def test_spectrum_close_pair():
    lam = spectrum(np.array([[-2.0, -0.6], [-0.15, -1.5]]))
    # independent oracle: LAPACK on the same matrix
    expected = sorted(np.linalg.eigvals([[-2.0, -0.6], [-0.15, -1.5]]), key=abs)
    np.testing.assert_allclose(lam, expected, atol=1e-12)
    np.testing.assert_allclose(lam, [-1.359, -2.140], atol=1e-3)


def test_spectrum_rejects_rotation():
    with pytest.raises(ComplexSpectrumError):
        spectrum(np.array([[0.0, -1.0], [1.0, 0.0]]))


def test_spectrum_rejects_nonnegative():
    with pytest.raises(UnstableSpectrumError):
        spectrum(np.array([[1.0, 0.0], [0.0, -1.0]]))


def test_spectrum_rejects_repeated():
    with pytest.raises(DegenerateSpectrumError):
        spectrum(-np.eye(2))


def test_spectrum_3x3_real_case(system_3x3):
    c = equilibrium(system_3x3)
    lam = spectrum(linearization(system_3x3, c))
    assert lam.shape == (3,)
    assert np.all(lam < 0)
    assert np.all(np.diff(np.abs(lam)) > 0)


def test_resonance_detects_integer_relation():
    hits = resonance_check(np.array([-1.0, -2.0]), lattice_bound=3)
    assert (2, -1) in hits
    assert (-2, 1) in hits


def brute_force_resonances(lam, bound, tol):
    hits = []
    for z1 in range(-bound, bound + 1):
        for z2 in range(-bound, bound + 1):
            if (z1, z2) == (0, 0):
                continue
            if abs(z1 * lam[0] + z2 * lam[1]) < tol * abs(lam[0]):
                hits.append((z1, z2))
    return hits


def test_resonance_examples_clear():
    lam_a = np.array([-2.0 + SQRT2, -2.0 - SQRT2])
    assert resonance_check(lam_a, 20, 1e-9) == brute_force_resonances(lam_a, 20, 1e-9) == []
    lam_b = np.array([-1.359, -2.140])  # rounded values: the scan uses a tight tol
    assert resonance_check(lam_b, 20, 1e-6) == brute_force_resonances(lam_b, 20, 1e-6) == []


def test_kernel_direction_diagonal():
    v = kernel_direction(np.diag([-1.0, -2.0]), -1.0)
    np.testing.assert_allclose(v, [1.0, 0.0], atol=1e-14)


def test_kernel_direction_example():
    # hand solve: (lam1 + 2) v1 - v2 * 1 = 0 gives v ~ (1, -sqrt(2)); the
    # sign convention flips it so the largest-magnitude component is positive
    J = np.array([[-2.0, -1.0], [-2.0, -2.0]])
    v = kernel_direction(J, -2.0 + SQRT2)
    np.testing.assert_allclose(v, np.array([-1.0, SQRT2]) / np.sqrt(3.0), atol=1e-12)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-14)


def test_kernel_direction_multiplicity_error():
    with pytest.raises(DegenerateSpectrumError):
        kernel_direction(-np.eye(2), -1.0)


@pytest.mark.parametrize("fixture", ["system_2x2_int", "system_2x2_close", "system_3x3"])
def test_eigenpair_residual_property(fixture, request):
    system = request.getfixturevalue(fixture)
    spec = analyze(system)
    norm_J = np.linalg.norm(spec.J, 2)
    for lam_i, v in zip(spec.lam, spec.kernels):
        assert np.linalg.norm(spec.J @ v - lam_i * v) <= 1e-10 * norm_J
        assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)


def test_relabeling_equivariance(system_3x3):
    """Permuting the variables permutes the equilibrium and leaves the
    spectrum unchanged as a set."""
    perm = [2, 0, 1]
    A = system_3x3.A[np.ix_(perm, perm)]
    b = system_3x3.b[perm]
    permuted = QuadraticSystem(A=A, b=b)
    c = equilibrium(system_3x3)
    np.testing.assert_allclose(equilibrium(permuted), c[perm], atol=1e-12)
    lam = spectrum(linearization(system_3x3, c))
    lam_p = spectrum(linearization(permuted, c[perm]))
    np.testing.assert_allclose(np.sort(lam_p), np.sort(lam), atol=1e-10)


def test_analyze_flags_resonant_system():
    # c = (1, 2) makes diag(c)A = diag(-1, -2), which is lattice-resonant
    system = QuadraticSystem(A=[[-1.0, 0.0], [0.0, -1.0]], b=[1.0, 2.0])
    with pytest.raises(ResonanceError):
        analyze(system)
