import math

import numpy as np
import pytest

from winterdyn import (
    AccuracyError,
    DomainError,
    TimeSeries,
    WaveField,
    cavity_norm,
    direct_field,
    exponential_field,
    integrand_p,
    pole_table,
    pole_wavefunction,
    psi_direct,
    psi_exponential,
    psi_power_asym,
    psi_power_quad,
)

SQ = math.sqrt(2.0 / math.pi)


@pytest.fixture(scope="module")
def table02():
    return pole_table(0.2, 24, tol=1e-12)


@pytest.fixture(scope="module")
def table01():
    return pole_table(0.1, 24, tol=1e-12)


# ---------------------------------------------------------------------------
# integrand
# ---------------------------------------------------------------------------

def test_integrand_removable_singularity():
    at = integrand_p(1, 1.0, math.pi / 2, 0.1)
    above = integrand_p(1, 1.0 + 1e-6, math.pi / 2, 0.1)
    below = integrand_p(1, 1.0 - 1e-6, math.pi / 2, 0.1)
    assert abs(at - 0.5 * (above + below)) < 1e-8
    assert np.isfinite(at.real) and np.isfinite(at.imag)


def test_integrand_zero_at_origin_wall():
    assert integrand_p(1, 0.5, 0.0, 0.1) == 0.0


def test_integrand_small_k_coefficient():
    # leading k^2 coefficient is g^2/(1+g)^2 * (-1)^(l+1) pi x / l
    l, g, x = 2, 0.3, 1.1
    expected = g**2 / (1 + g) ** 2 * (-math.pi * x / 2)
    vals = [complex(integrand_p(l, k, x, g)) / k**2 for k in (1e-3, 5e-4)]
    richardson = (4 * vals[1] - vals[0]) / 3  # kill the k^2 correction
    assert abs(richardson - expected) / abs(expected) < 1e-5


# ---------------------------------------------------------------------------
# direct quadrature
# ---------------------------------------------------------------------------

def test_psi_direct_initial_condition():
    v = psi_direct(1, math.pi / 2, 0.0, 0.2, tol=1e-6)
    assert abs(v - SQ) < 1e-6
    v2 = psi_direct(2, math.pi / 4, 0.0, 0.1, tol=1e-6)
    assert abs(v2 - SQ) < 1e-6


def test_direct_caps_time():
    with pytest.raises(DomainError):
        psi_direct(1, 1.0, 51.0, 0.2)


def test_direct_reports_accuracy_failure():
    # tiny-t chirp with an impossible tolerance must fail loudly, best attached
    with pytest.raises(AccuracyError) as exc:
        direct_field(1, [2.0], 0.001, 0.1, tol=1e-14)
    assert exc.value.best is not None
    assert exc.value.estimate > 1e-14


def test_decomposition_identity_pointwise(table02):
    x = math.pi / 2
    d = psi_direct(1, x, 5.0, 0.2, tol=1e-7)
    e = psi_exponential(1, x, 5.0, 0.2, table02)
    p = psi_power_quad(1, x, 5.0, 0.2, tol=1e-8)
    assert abs(d - (e + p)) < 1e-6


# ---------------------------------------------------------------------------
# exponential part
# ---------------------------------------------------------------------------

def test_time_factor_unity_at_zero(table02):
    # E^(n)(0) = 1: pole wavefunction at t=0 is just the sine profile
    k = table02[1].k
    v = pole_wavefunction(1, 0.7, 0.0, 0.2, table02)
    assert abs(v - SQ * np.sin(k * 0.7)) < 1e-15


def test_pole_wavefunction_free_limit():
    t = pole_table(1e-6, 3, tol=1e-8)
    v = pole_wavefunction(2, 0.9, 1.5, 1e-6, t)
    expected = SQ * math.sin(2 * 0.9) * np.exp(-1j * 4 * 1.5)
    assert abs(v - expected) < 1e-4


def test_pole_wavefunction_grows_toward_barrier(table02):
    # Im k < 0 tilts |sin(kx)| upward from the wall to the barrier
    xs = np.linspace(0.3, math.pi, 12)
    mags = np.abs(pole_wavefunction(1, xs, 2.0, 0.2, table02))
    envelope = mags / np.abs(np.sin(table02[1].k.real * xs))
    assert np.all(np.diff(envelope) > 0)


def test_exponential_decay_rate(table02):
    # log-norm slope approaches -Gamma_1 once higher poles have died
    x = np.linspace(0, math.pi, 129)
    ts = np.array([20.0, 25.0, 30.0, 35.0])
    norms = [
        cavity_norm(exponential_field(1, x, t, 0.2, table02)) for t in ts
    ]
    slope = np.polyfit(ts, np.log(norms), 1)[0]
    assert abs(-slope - table02[1].gamma) / table02[1].gamma < 0.03


def test_l2_dominated_by_first_pole(table01):
    # the n=1 weight is -(4/3) g at leading order and decays slowest
    from winterdyn.evolution import _pole_weights

    w = _pole_weights(2, table01)
    assert abs(w[0] - (-4.0 / 3.0) * 0.1) < 5 * 0.1**2
    w_half = _pole_weights(2, pole_table(0.05, 4))
    ratio = abs(w[0] - (-4.0 / 3.0) * 0.1) / abs(w_half[0] - (-4.0 / 3.0) * 0.05)
    assert 3.0 < ratio < 5.0  # first-order weight is off by O(g^2)

    x = np.linspace(0, math.pi, 129)
    full = exponential_field(2, x, 50.0, 0.1, table01).values
    k1 = table01[1].k
    first = w[0] * SQ * np.sin(k1 * x) * np.exp(-1j * k1 * k1 * 50.0)
    # residue: the n=2 term still carries e^{-Gamma_2 t/2} ~ 5e-6 at t=50
    assert np.max(np.abs(full - first)) / np.max(np.abs(full)) < 1e-3


def test_exponential_warns_at_t_zero(table02):
    with pytest.warns(UserWarning, match="1/n"):
        psi_exponential(1, 1.0, 0.0, 0.2, table02)


def test_exponential_tail_tolerance(table02):
    with pytest.raises(AccuracyError):
        exponential_field(1, [1.0], 1.0, 0.2, table02, tol=1e-30)


def test_exponential_table_mismatch(table02):
    with pytest.raises(ValueError):
        psi_exponential(1, 1.0, 1.0, 0.1, table02)


# ---------------------------------------------------------------------------
# power part
# ---------------------------------------------------------------------------

def test_power_matches_direct_minus_exponential(table02):
    x, t = math.pi / 2, 2.0
    d = psi_direct(1, x, t, 0.2, tol=1e-7)
    e = psi_exponential(1, x, t, 0.2, table02)
    p = psi_power_quad(1, x, t, 0.2, tol=1e-9)
    assert abs(p - (d - e)) < 1e-6


def test_power_frozen_amplitude():
    # leading amplitude (1/sqrtute2) g^2/(1+g)^2 x / t^(3/2) at x=pi, t=1e4
    v = abs(psi_power_quad(1, math.pi, 1e4, 0.2, tol=1e-12))
    assert v == pytest.approx(6.170622e-08, rel=1e-3)


def test_power_vanishes_with_coupling():
    for x, t in [(1.0, 3.0), (2.5, 0.5)]:
        assert abs(psi_power_quad(1, x, t, 1e-4, tol=1e-12)) < 1e-7


def test_power_marginal_point_raises():
    with pytest.raises(AccuracyError) as exc:
        psi_power_quad(1, math.pi, 0.0, 0.2, tol=1e-8)
    assert exc.value.best is not None


def test_power_converges_at_t_zero_inside():
    v = psi_power_quad(1, math.pi / 2, 0.0, 0.2, tol=1e-8)
    assert np.isfinite(v.real)


def test_asymptotic_against_quadrature():
    q = psi_power_quad(1, math.pi / 2, 1e3, 0.2, tol=1e-12)
    a = psi_power_asym(1, math.pi / 2, 1e3, 0.2)
    assert abs(q - a) / abs(q) < 0.01


def test_asymptotic_zero_at_wall():
    assert psi_power_asym(1, 0.0, 100.0, 0.2) == 0.0


def test_asymptotic_exponent_independent_of_l_g():
    for (l, g) in [(1, 0.1), (2, 0.3)]:
        r = abs(psi_power_asym(l, 1.0, 4e4, g)) / abs(psi_power_asym(l, 1.0, 1e4, g))
        assert r == pytest.approx(4.0**-1.5, rel=1e-3)


# ---------------------------------------------------------------------------
# norms and containers
# ---------------------------------------------------------------------------

def test_cavity_norm_initial_unity():
    x = np.linspace(0, math.pi, 129)
    fld = direct_field(1, x, 0.0, 0.2, tol=1e-5)
    assert cavity_norm(fld) == pytest.approx(1.0, abs=1e-5)


def test_cavity_norm_zero_field():
    x = np.linspace(0, math.pi, 65)
    fld = WaveField(x_grid=x, t=0.0, values=np.zeros(65, dtype=complex), part="total")
    assert cavity_norm(fld) == 0.0


def test_cavity_norm_grid_guards():
    x = np.linspace(0, math.pi, 21)
    fld = WaveField(x_grid=x, t=0.0, values=np.zeros(21, dtype=complex), part="total")
    with pytest.raises(DomainError):
        cavity_norm(fld)
    x2 = np.linspace(0, 3.0, 65)
    fld2 = WaveField(x_grid=x2, t=0.0, values=np.zeros(65, dtype=complex), part="total")
    with pytest.raises(DomainError):
        cavity_norm(fld2)


def test_wavefield_validation():
    with pytest.raises(ValueError):
        WaveField(
            x_grid=np.array([0.0, 0.0, 1.0]),
            t=0.0,
            values=np.zeros(3, dtype=complex),
            part="total",
        )
    with pytest.raises(ValueError):
        WaveField(
            x_grid=np.array([0.0, 1.0]),
            t=0.0,
            values=np.zeros(2, dtype=complex),
            part="bogus",
        )


def test_timeseries_csv_shape():
    ts = TimeSeries(t_grid=np.array([1.0, 2.0]), norms=np.array([0.5, 0.25]))
    lines = ts.to_csv().strip().split("\n")
    assert lines[0] == "t,norm"
    assert len(lines) == 3


def test_wavefield_csv_shape():
    fld = WaveField(
        x_grid=np.array([0.0, 1.0]),
        t=0.0,
        values=np.array([0j, 1 + 2j]),
        part="power",
    )
    lines = fld.to_csv().strip().split("\n")
    assert lines[0] == "x_or_t,re,im"
    assert lines[2].startswith("1.0,1.0,2.0")


def test_decomposition_identity_grid_l2(table01):
    # companion combo to the acceptance run (which does l=1, g=0.2)
    x = np.linspace(0, math.pi, 65)
    from winterdyn import direct_field, exponential_field, power_field

    d = direct_field(2, x, 5.0, 0.1, tol=2e-6).values
    e = exponential_field(2, x, 5.0, 0.1, table01).values
    p = power_field(2, x, 5.0, 0.1, tol=1e-7).values
    assert np.max(np.abs(d - (e + p))) < 1e-5
