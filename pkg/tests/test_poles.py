import math

import pytest

from winterdyn import (
    DomainError,
    PoleTable,
    find_pole,
    freq_pert,
    pole_seed,
    pole_table,
    width_pert,
)
from winterdyn.poles import (
    exact_relation_residual,
    conjugate_zero_residual,
    sqrt_relation_residual,
)


def test_seed_free_limit():
    assert pole_seed(1, 0.0) == 1.0
    assert pole_seed(7, 0.0) == 7.0


def test_seed_frozen_values():
    # term-by-term substitution of the quartic expansion
    s = pole_seed(1, 0.1)
    assert s.real == pytest.approx(0.92215947, abs=1e-7)
    assert s.imag == pytest.approx(-0.02199115, abs=1e-7)
    s2 = pole_seed(2, 0.01)
    assert s2.real == pytest.approx(1.98030328, abs=1e-7)
    assert s2.imag == pytest.approx(-0.00121894, abs=1e-7)


def test_width_pert_values():
    assert width_pert(1, 0.1, 2) == pytest.approx(4 * math.pi * 0.01)
    assert width_pert(2, 0.1, 2) == pytest.approx(32 * math.pi * 0.01)
    assert width_pert(1, 0.0, 2) == 0.0
    assert width_pert(1, 0.0, 3) == 0.0
    assert width_pert(1, 0.1, 3) == pytest.approx(4 * math.pi * 0.01 * 0.6)


def test_freq_pert_values():
    assert freq_pert(1, 0.1, 2) == pytest.approx(0.83)
    assert freq_pert(2, 0.0, 1) == 4.0
    assert freq_pert(1, 0.05, 1) == pytest.approx(0.9)


def test_find_pole_free_limit():
    for g in (1e-4, 1e-5):
        k = find_pole(1, g).k
        assert abs(k - 1.0) < 3 * g
    # below, the root falls between representable doubles; loosen tol
    k = find_pole(1, 1e-7, tol=1e-8).k
    assert abs(k - 1.0) < 3e-7


def test_find_pole_residual_and_octant():
    p = find_pole(1, 0.1, tol=1e-12)
    assert p.residual < 1e-12
    assert p.k.imag < 0 and p.k.real > abs(p.k.imag)
    assert abs(p.k - pole_seed(1, 0.1)) < 0.01  # O(g^4) away (coefficient ~ 60)


def test_exact_relation_at_pole():
    p = find_pole(3, 0.1, tol=1e-12)
    assert exact_relation_residual(p, 0.1) < 1e-10


def test_sqrt_relation_and_conjugate_zero():
    for (n, g) in [(1, 0.1), (2, 0.2), (4, 0.05)]:
        p = find_pole(n, g, tol=1e-12)
        assert sqrt_relation_residual(p, g) < 1e-11
        assert conjugate_zero_residual(p, g) < 1e-11


def test_seed_gap_scales_as_g4():
    gaps = [abs(find_pole(1, g).k - pole_seed(1, g)) for g in (0.04, 0.02, 0.01)]
    r1, r2 = gaps[0] / gaps[1], gaps[1] / gaps[2]
    assert 12.0 < r1 < 20.0
    assert 12.0 < r2 < 20.0


def test_width_freq_extraction_matches_pert_orders():
    # omega - n^2(1-2g) = O(g^2) and gamma - 4 pi n^3 g^2 = O(g^3)
    n = 2
    om_gap = []
    ga_gap = []
    for g in (0.04, 0.02):
        p = find_pole(n, g)
        om_gap.append(abs(p.omega - freq_pert(n, g, 1)))
        ga_gap.append(abs(p.gamma - width_pert(n, g, 2)))
    assert 3.0 < om_gap[0] / om_gap[1] < 5.0
    assert 6.0 < ga_gap[0] / ga_gap[1] < 10.0


def test_invalid_inputs():
    with pytest.raises(DomainError):
        find_pole(0, 0.1)
    with pytest.raises(DomainError):
        find_pole(1, -0.1)
    with pytest.raises(DomainError):
        find_pole(1, 0.0)
    with pytest.raises(ValueError):
        find_pole(1, 0.1, tol=-1)


def test_pole_table_monotone_and_residuals():
    t = pole_table(0.1, 5, tol=1e-12)
    re = [p.k.real for p in t.poles]
    assert all(b > a for a, b in zip(re, re[1:]))
    assert all(p.residual < 1e-12 for p in t.poles)


def test_pole_table_small_g_first_order():
    t = pole_table(0.01, 10)
    assert not t.warnings  # width bound only bites for n > ~78 at g = 0.01
    for p in t.poles:
        # third-order term (4 pi^2 n^3/3) g^3 grows past 2e-3 around n = 6
        gap = abs(p.k.real - p.n * (1 - 0.01))
        assert gap < 2e-3 if p.n <= 5 else gap / p.k.real < 2e-3


def test_pole_table_octant_at_moderate_g():
    with pytest.warns(UserWarning):
        t = pole_table(0.2, 3)
    for p in t.poles:
        assert p.k.imag < 0 and p.k.real > abs(p.k.imag)


def test_pole_table_parallel_env(monkeypatch):
    monkeypatch.setenv("WINTER_THREADS", "2")
    with pytest.warns(UserWarning):
        a = pole_table(0.15, 9)
    monkeypatch.setenv("WINTER_THREADS", "1")
    with pytest.warns(UserWarning):
        b = pole_table(0.15, 9)
    assert all(pa.k == pb.k for pa, pb in zip(a.poles, b.poles))


def test_json_round_trip():
    t = pole_table(0.1, 4)
    back = PoleTable.from_json(t.to_json())
    assert back.g == t.g
    for p, q in zip(t.poles, back.poles):
        assert abs(p.k - q.k) < 1e-15
        assert p.omega == pytest.approx(q.omega)


def test_deep_continuation_g_half():
    # continuation from small g keeps the branch all the way to g = 0.5
    for n in (1, 10):
        p = find_pole(n, 0.5, tol=1e-12)
        assert p.residual < 1e-12
        assert p.k.imag < 0 and p.k.real > abs(p.k.imag)
