import math

import pytest

from omsense.errors import DomainError, UnsupportedConfigurationError
from omsense.params import (
    HBAR,
    NanosphereParams,
    PhysicalParams,
    at_stiffness,
    drive_intensity,
    emitter_count,
    inflate,
    kerr_coefficient,
    nanosphere_coupling,
    paper_params,
    reduce,
    wavelength_to_angular_frequency,
    zero_point_motion,
)

TWO_PI = 2 * math.pi


def test_operating_point_values(base):
    assert base.Gamma == pytest.approx(TWO_PI * 1e8)
    assert base.kappa == pytest.approx(2e-3 * base.Gamma)
    assert base.chi == pytest.approx(6.283185307179586e-4, rel=1e-14)
    assert base.omega_d == pytest.approx(1215259075683131.0, rel=1e-14)
    assert base.intensity == pytest.approx(7.903143577580575e22, rel=1e-12)
    assert base.gamma_m == pytest.approx(1e-2 * base.omega_m)


def test_drive_intensity_formula():
    w = wavelength_to_angular_frequency(1550e-9)
    assert drive_intensity(1e-3, 2.0, w) == pytest.approx(1e-3 * 2.0 / (HBAR * w))
    assert drive_intensity(0.0, 2.0, w) == 0.0


@pytest.mark.parametrize("args", [(-1.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, -2.0)])
def test_drive_intensity_domain(args):
    with pytest.raises(DomainError):
        drive_intensity(*args)


def test_kerr_needs_positive_omega_m():
    assert kerr_coefficient(3.0, 9.0) == 1.0
    with pytest.raises(DomainError):
        kerr_coefficient(1.0, 0.0)


def test_unequal_decay_rejected(base):
    p = base.with_(kappa2=2 * base.kappa1)
    with pytest.raises(UnsupportedConfigurationError):
        p.kappa


@pytest.mark.parametrize("field,value", [("Gamma", 0.0), ("phi", math.pi), ("g", -1.0),
                                          ("P_in", -1e-3), ("I_drive", -1.0)])
def test_invalid_fields(base, field, value):
    with pytest.raises(DomainError):
        base.with_(**{field: value})


def test_lossless_cavity_has_no_drive_unless_given(base):
    assert base.with_(kappa=0.0).intensity == 0.0
    assert base.with_(kappa=0.0, I_drive=5.0).intensity == 5.0


def test_reduce_inflate_round_trip(base):
    q = base.with_(delta=-0.03 * base.Gamma, phi=-0.01)
    r = reduce(q)
    back = inflate(r, q.Gamma)
    assert back["delta"] == pytest.approx(q.delta, rel=1e-15)
    assert back["kappa"] == pytest.approx(q.kappa, rel=1e-15)
    assert back["chi"] == pytest.approx(q.chi, rel=1e-15)
    assert back["I"] == pytest.approx(q.intensity, rel=1e-15)
    assert r.drive_t == pytest.approx(q.intensity * q.chi / q.Gamma**3, rel=1e-14)


def test_at_stiffness_keeps_chi(base):
    q = at_stiffness(base, 50.0, 2.0)
    assert q.Gamma / q.omega_m == pytest.approx(50.0)
    assert q.chi == pytest.approx(base.chi, rel=1e-14)
    assert q.gamma_m == pytest.approx(2.0 * q.omega_m)


def test_nanosphere_coupling_linear_in_N_and_sign():
    kw = dict(p_e=0.0, Omega_c=TWO_PI * 1e7, Delta_c=TWO_PI * 1e9, gamma_c=1e7, q_zpf=3e-11)
    g1 = nanosphere_coupling(NanosphereParams(N=10, **kw))
    g2 = nanosphere_coupling(NanosphereParams(N=20, **kw))
    assert g2 == pytest.approx(2 * g1)
    assert g1 > 0
    inverted = nanosphere_coupling(NanosphereParams(N=10, **{**kw, "p_e": 1.0}))
    assert inverted == pytest.approx(-g1)
    assert nanosphere_coupling(NanosphereParams(N=10, **{**kw, "p_e": 0.5})) == 0.0


def test_nanosphere_validation():
    with pytest.raises(DomainError):
        NanosphereParams(N=0, p_e=0.0, Omega_c=1.0, Delta_c=1.0, gamma_c=1.0, q_zpf=1.0)
    with pytest.raises(DomainError):
        NanosphereParams(N=1, p_e=1.5, Omega_c=1.0, Delta_c=1.0, gamma_c=1.0, q_zpf=1.0)
    with pytest.raises(DomainError):
        NanosphereParams(N=1, p_e=0.5, Omega_c=1.0, Delta_c=0.0, gamma_c=1.0, q_zpf=1.0)


def test_emitter_count_and_zpf():
    assert emitter_count(1e26, 36e-9) == round(1e26 * 4 / 3 * math.pi * (36e-9) ** 3)
    assert zero_point_motion(1.0, 2.0) == pytest.approx(math.sqrt(HBAR / 4.0))


def test_paper_params_override():
    p = paper_params(kappa=0.01 * TWO_PI * 1e8, phi=-0.1)
    assert p.kappa1 == p.kappa2 == pytest.approx(0.01 * TWO_PI * 1e8)
    assert isinstance(p, PhysicalParams)
