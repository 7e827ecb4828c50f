import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from omsense import dynamics as dyn
from omsense import steadystate as ss
from omsense.errors import DivergenceError, SettleError, SweepError, UsageError
from omsense.params import at_stiffness, paper_params

PI = math.pi


def fd_jacobian(s, p):
    y = s.to_vector()
    J = np.zeros((6, 6))
    for k in range(6):
        # the RHS is at most quadratic, so central differences only suffer roundoff
        h = 1e-4 * max(abs(y[k]), 1e3)
        e = np.zeros(6)
        e[k] = h
        fp = dyn.derivatives(dyn.MeanFieldState.from_vector(y + e), p).to_vector()
        fm = dyn.derivatives(dyn.MeanFieldState.from_vector(y - e), p).to_vector()
        J[:, k] = (fp - fm) / (2 * h)
    return J


def test_zero_state_only_drives_first_mode(base):
    f = dyn.derivatives(dyn.MeanFieldState.vacuum(), base)
    assert f.alpha1 == pytest.approx(base.Omega)
    assert f.alpha2 == 0 and f.q == 0 and f.p == 0


def test_single_mode_decay(base):
    p = base.with_(g=0.0, P_in=0.0, delta=0.1 * base.Gamma)
    f = dyn.derivatives(dyn.MeanFieldState(1 + 0j, 0j, 0.0, 0.0), p)
    assert f.alpha1 == pytest.approx(0.5j * p.delta - 0.5 * (p.kappa + p.Gamma))


def test_state_vector_round_trip():
    s = dyn.MeanFieldState(1 - 2j, 3j, -4.0, 5.0)
    assert dyn.MeanFieldState.from_vector(s.to_vector()) == s
    assert s.beta == pytest.approx(5.0)
    with pytest.raises(UsageError):
        dyn.MeanFieldState(complex(float("nan"), 0), 0j, 0.0, 0.0)


@given(
    y=st.lists(st.floats(-1e5, 1e5), min_size=6, max_size=6),
    phi=st.floats(-0.1, 0.1),
    d=st.floats(-0.3, 0.3),
)
def test_jacobian_matches_finite_differences(y, phi, d):
    p = at_stiffness(paper_params(g=2 * PI * 3), 50.0).with_(phi=phi)
    p = p.with_(delta=d * p.Gamma)
    s = dyn.MeanFieldState.from_vector(np.array(y))
    J = dyn.jacobian(s, p)
    Jf = fd_jacobian(s, p)
    assert np.max(np.abs(J - Jf)) <= 1e-6 * np.max(np.abs(J))


def test_jacobian_block_structure_without_coupling(base):
    J = dyn.jacobian(dyn.MeanFieldState(1 + 1j, 2j, 3.0, 4.0), base.with_(g=0.0))
    assert np.all(J[0:4, 4:6] == 0)
    assert np.all(J[4:6, 0:4] == 0)


def test_linear_case_matches_matrix_exponential(base):
    p = at_stiffness(base, 10.0).with_(g=0.0, phi=-0.05, delta=0.03 * base.Gamma)
    s0 = dyn.MeanFieldState(1e3 + 2e3j, -5e2j, 1.0, -2.0)
    t_end = 40.0 / p.Gamma
    J = dyn.jacobian(s0, p)
    b = dyn.derivatives(dyn.MeanFieldState.vacuum(), p).to_vector()
    M = np.zeros((7, 7))
    M[:6, :6] = J
    M[:6, 6] = b
    y_exact = (expm(M * t_end) @ np.append(s0.to_vector(), 1.0))[:6]
    tr = dyn.integrate(s0, p, t_end, tol=1e-11)
    scale = np.max(np.abs(y_exact[:4]))
    assert np.max(np.abs(tr.states[-1][:4] - y_exact[:4])) < 1e-8 * scale
    assert np.max(np.abs(tr.states[-1][4:] - y_exact[4:])) < 1e-8 * max(1.0, np.max(np.abs(y_exact[4:])))


def test_tolerance_halving_converges(soft_strong):
    p = soft_strong.with_(phi=-0.012 * PI)
    t_end = 200.0 / p.Gamma
    a = dyn.integrate(dyn.MeanFieldState.vacuum(), p, t_end, tol=1e-8).final
    b = dyn.integrate(dyn.MeanFieldState.vacuum(), p, t_end, tol=5e-9).final
    rel = np.linalg.norm(a.to_vector() - b.to_vector()) / np.linalg.norm(b.to_vector())
    assert rel < 1e-8


def test_integrate_samples(soft_strong):
    tr = dyn.integrate(dyn.MeanFieldState.vacuum(), soft_strong, 10.0 / soft_strong.Gamma,
                       n_samples=11)
    assert tr.t.shape == (11,) and tr.states.shape == (11, 6)
    assert tr.beta[0] == 0.0


def test_divergence_is_reported(soft_strong):
    with pytest.raises(DivergenceError) as info:
        dyn.integrate(dyn.MeanFieldState.vacuum(), soft_strong, 100.0 / soft_strong.Gamma,
                      max_norm=1e-3)
    assert info.value.last_state is not None
    assert info.value.t > 0


def test_integrate_validates(soft_strong):
    with pytest.raises(UsageError):
        dyn.integrate(dyn.MeanFieldState.vacuum(), soft_strong, 1.0, tol=0.0)


def overdamped(p, ratio=50.0):
    return at_stiffness(p, ratio, gamma_m_ratio=100.0)


def test_settle_monostable_from_rest(base):
    p = overdamped(base)
    end = dyn.settle(dyn.MeanFieldState.vacuum(), p)
    (root,) = ss.solve_intensity(ss.coefficients(p))
    assert end.beta == pytest.approx(root.beta, rel=1e-8)


def test_settle_from_rest_picks_lower_branch(strong):
    p = overdamped(strong.with_(phi=-0.012 * PI))
    end = dyn.settle(dyn.MeanFieldState.vacuum(), p)
    roots = ss.solve_intensity(ss.coefficients(p))
    assert end.beta == pytest.approx(roots[0].beta, rel=1e-8)


def test_settle_undriven_decays_to_zero(base):
    p = overdamped(base).with_(P_in=0.0)
    end = dyn.settle(dyn.MeanFieldState(1e3 + 0j, 1e2j, 10.0, 0.0), p)
    assert end.norm < 1e-6


def test_settle_cutoff_raises(soft_strong):
    # default mechanical damping: the resonant root is unstable to backaction
    with pytest.raises(SettleError):
        dyn.settle(dyn.MeanFieldState.vacuum(), soft_strong, max_periods=20)


@pytest.mark.parametrize("which", [0, 2])
def test_stable_roots_attract(strong, which):
    p = overdamped(strong.with_(phi=-0.012 * PI))
    roots = dyn.steady_states(p)
    start = dyn.MeanFieldState.from_vector(roots[which].to_vector() * 1.01)
    end = dyn.settle(start, p)
    assert end.beta == pytest.approx(roots[which].beta, rel=1e-6)


def test_middle_root_repels(strong):
    p = overdamped(strong.with_(phi=-0.012 * PI))
    roots = dyn.steady_states(p)
    mid = roots[1]
    for sign in (+1, -1):
        start = dyn.MeanFieldState.from_vector(mid.to_vector() * (1 + sign * 1e-4))
        end = dyn.settle(start, p)
        assert min(abs(end.beta - roots[0].beta) / roots[0].beta,
                   abs(end.beta - roots[2].beta) / roots[2].beta) < 1e-6


def test_linear_stability_branches(strong):
    p = overdamped(strong.with_(phi=-0.012 * PI))
    reports = [dyn.linear_stability(s, p) for s in dyn.steady_states(p)]
    assert [r.stable for r in reports] == [True, False, True]
    assert reports[1].eigenvalues.shape == (6,)


def test_linear_stability_rejects_non_fixed_point(base):
    with pytest.raises(UsageError):
        dyn.linear_stability(dyn.MeanFieldState(1 + 0j, 0j, 0.0, 0.0), base)


def test_linear_case_is_stable(base):
    p = base.with_(g=0.0)
    (s,) = dyn.steady_states(p)
    assert dyn.linear_stability(s, p).stable


def test_marginal_at_turning_point(strong):
    p = overdamped(strong.with_(phi=-0.012 * PI))
    c = ss.coefficients(p)
    lo, hi = ss.turning_points(c)
    # move the drive so the lower turning point is an exact steady state
    I_hi = float(ss.intensity_cubic(lo, c))
    q = p.with_(I_drive=I_hi)
    a1, a2 = ss.field_amplitudes(q, lo)
    s = dyn.MeanFieldState(a1, a2, -q.g * lo / q.omega_m, 0.0)
    rep = dyn.linear_stability(s, q)
    assert abs(rep.max_real) < 1e-6 * q.Gamma


def test_split_legs():
    np.testing.assert_array_equal(dyn.split_legs([0, 1, 2, 1, 0, 1]), [0, 0, 0, 1, 1, 2])
    with pytest.raises(UsageError):
        dyn.split_legs([0, 1, 1])


def test_hysteresis_monostable_window_has_no_loop(base):
    p = overdamped(base)
    fwd = np.linspace(0.0, 0.01 * PI, 6)
    tr = dyn.hysteresis_sweep(p, "phi", np.concatenate([fwd, fwd[-2::-1]]))
    np.testing.assert_allclose(tr.beta[:6], tr.beta[5:][::-1], rtol=1e-8)
    assert not tr.jump.any()
    assert tr.loop_area == pytest.approx(0.0, abs=1e-9 * tr.beta.max() * 0.01 * PI)


def test_hysteresis_reports_failing_step(soft_strong):
    with pytest.raises(SweepError) as info:
        dyn.hysteresis_sweep(soft_strong, "phi", [0.0, -0.001], max_periods=5)
    assert info.value.step == 0


def test_hysteresis_rejects_axis(base):
    with pytest.raises(UsageError):
        dyn.hysteresis_sweep(base, "kappa", [0.0, 1.0])
