import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from omsense import steadystate as ss
from omsense.dynamics import MeanFieldState, derivatives
from omsense.errors import NoPhysicalSolutionError, UsageError

PI = math.pi


def x_oracle(d, k, phi):
    """Eliminate the second cavity directly: A = -2 Im X, B = |X|^2."""
    X = (-0.5j * d + 0.5 * (k + 1)) - np.exp(2j * phi) / (2 * (1j * d + k + 1))
    return -2 * X.imag, abs(X) ** 2


@given(d=st.floats(-2, 2), k=st.floats(0, 0.5), phi=st.floats(-3.1, 3.1))
def test_coefficients_match_elimination(d, k, phi):
    a, b = ss.reduced_coefficients(d, k, phi)
    ao, bo = x_oracle(d, k, phi)
    assert a == pytest.approx(ao, abs=1e-12)
    assert b == pytest.approx(bo, abs=1e-12)
    assert b >= -1e-15


def test_resonant_single_root(base):
    c = ss.coefficients(base)
    assert c.A == 0.0
    roots = ss.solve_intensity(c)
    assert len(roots) == 1
    assert roots[0].beta == pytest.approx(5622525466.691479, rel=1e-10)
    assert roots[0].branch == "single" and roots[0].stable


def test_three_roots_frozen(strong):
    c = ss.coefficients(strong.with_(phi=-0.012 * PI))
    roots = ss.solve_intensity(c)
    np.testing.assert_allclose([r.beta for r in roots],
                               [151188593.06399357, 3415125779.183161, 4786624808.051439], rtol=1e-9)
    assert [r.stable for r in roots] == [True, False, True]
    assert [r.branch for r in roots] == ["lower", "middle", "upper"]


def test_turning_points_bracket_middle_root(strong):
    c = ss.coefficients(strong.with_(phi=-0.012 * PI))
    lo, hi = ss.turning_points(c)
    assert lo == pytest.approx(1409508741.814859, rel=1e-9)
    assert hi == pytest.approx(4159117378.3842025, rel=1e-9)
    roots = [r.beta for r in ss.solve_intensity(c)]
    assert roots[0] < lo < roots[1] < hi < roots[2]
    I_lo, I_hi = ss.fold_intensities(c)
    assert I_lo < c.I < I_hi


def test_turning_points_absent_on_resonance(base):
    assert ss.turning_points(ss.coefficients(base)) is None


def test_turning_points_need_kerr(base):
    with pytest.raises(UsageError):
        ss.turning_points(ss.coefficients(base.with_(g=0.0)))


def test_linear_response(base):
    c = ss.coefficients(base.with_(g=0.0, phi=-0.02))
    roots = ss.solve_intensity(c)
    assert len(roots) == 1
    assert roots[0].beta == pytest.approx(c.I / c.B, rel=1e-14)


def test_zero_drive_gives_vacuum(base):
    roots = ss.solve_intensity(ss.coefficients(base.with_(P_in=0.0)))
    assert [r.beta for r in roots] == [0.0]


def test_undriven_linear_with_degenerate_B():
    # B = 0 at d = 0, k = 0, phi = 0
    from omsense.params import paper_params

    p = paper_params(kappa=0.0, I_drive=1.0, g=0.0)
    with pytest.raises(NoPhysicalSolutionError):
        ss.solve_intensity(ss.coefficients(p))


@given(
    d=st.floats(-0.2, 0.2),
    phi=st.floats(-0.03 * PI, 0.01 * PI),
    gscale=st.sampled_from([1.0, 3.0]),
)
def test_reconstructed_states_are_fixed_points(d, phi, gscale):
    from omsense.params import paper_params

    p = paper_params(g=2 * PI * gscale)
    p = p.with_(delta=d * p.Gamma, phi=phi)
    for r in ss.solve_intensity(ss.coefficients(p)):
        s = MeanFieldState(r.alpha1, r.alpha2, r.q, r.p)
        f = derivatives(s, p)
        assert abs(f.alpha1) < 1e-8 * p.Gamma * abs(r.alpha1)
        assert abs(f.alpha2) < 1e-8 * p.Gamma * abs(r.alpha1)
        assert abs(f.p) < 1e-8 * p.Gamma * abs(r.q)
        assert abs(r.alpha1) ** 2 == pytest.approx(r.beta, rel=1e-10)


def test_region_map_classes(strong):
    G = strong.Gamma
    res = ss.bistable_region_map(strong, np.linspace(-0.03, 0.01, 81) * PI,
                                 np.linspace(-0.2, 0.2, 81) * G)
    cls = res.values["class"]
    assert cls.shape == (81, 81)
    assert set(np.unique(cls)) <= {ss.MONOSTABLE, ss.NECESSARY, ss.BISTABLE}
    assert np.any(cls == ss.BISTABLE)
    # three roots need the drive-independent conditions
    nec = (res.values["A_over_Gamma"] < 0) & (res.values["A_over_Gamma"] ** 2
                                              > 3 * res.values["B_over_Gamma2"])
    assert np.all(nec[cls == ss.BISTABLE])
    assert not np.any(cls[res.phi >= 0] == ss.BISTABLE)


def test_fold_locations_frozen(base, strong):
    f2 = ss.fold_locations(strong, "phi", -0.04 * PI, 0.01 * PI)
    assert [(a, b) for _, a, b in f2] == [(1, 3), (3, 1)]
    np.testing.assert_allclose([v / PI for v, _, _ in f2],
                               [-0.01892747120568494, -0.007270598912399784], rtol=1e-8)
    f1 = ss.fold_locations(base, "phi", -0.04 * PI, 0.01 * PI)
    np.testing.assert_allclose([v / PI for v, _, _ in f1],
                               [-0.008607977131964586, -0.003426899804980531], rtol=1e-8)


def test_fold_locations_validate(base):
    with pytest.raises(UsageError):
        ss.fold_locations(base, "kappa", 0, 1)
