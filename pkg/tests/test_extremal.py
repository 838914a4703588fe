import numpy as np
import pytest

from critrace.errors import DomainError, UnavailableError
from critrace.extremal import (BubbleParams, bubble_gradient_norm, bubble_integral_table, bubble_value,
                               entry_condition, gradient_energy, normalized_profile, rescale_bubble,
                               trace_constant, trace_constant_closed_form, trace_energy)


def test_bubble_value_examples():
    assert bubble_value(BubbleParams(5, 2.5), 0.0, 0.0) == 1.0
    assert bubble_value(BubbleParams(3, 2.0), 0.0, 1.0) == pytest.approx(0.5)
    assert bubble_value(BubbleParams(4, 2.0), np.sqrt(3), 0.0) == pytest.approx(0.25)


def test_gradient_norm_examples():
    P = BubbleParams(6, 1.7)
    assert bubble_gradient_norm(P, 0.0, 0.0) == pytest.approx(P.beta)
    assert bubble_gradient_norm(BubbleParams(3, 2.0), 0.0, 1.0) == pytest.approx(0.25)


@pytest.mark.parametrize("N,p", [(3, 2.0), (5, 1.6), (9, 1.5)])
def test_gradient_norm_by_finite_differences(N, p, rng):
    P = BubbleParams(N, p)
    h = 1e-6
    for rho, t in rng.uniform(0, 3, (20, 2)):
        drho = (bubble_value(P, rho + h, t) - bubble_value(P, rho - h, t)) / (2 * h)
        dt = (bubble_value(P, rho, t + h) - bubble_value(P, rho, t - h)) / (2 * h)
        assert np.hypot(drho, dt) == pytest.approx(bubble_gradient_norm(P, rho, t), rel=1e-6)


def test_rescaling(rng):
    P = BubbleParams(5, 2.0)
    v1 = rescale_bubble(P, 1.0)
    pts = rng.uniform(0, 2, (50, 2))
    assert np.array_equal(v1(pts[:, 0], pts[:, 1]), bubble_value(P, pts[:, 0], pts[:, 1]))
    v = rescale_bubble(P, 0.3)
    h = 1e-7
    for rho, t in pts[:20]:
        drho = (v(rho + h, t) - v(rho - h, t)) / (2 * h)
        dt = (v(rho, t + h) - v(rho, t - h)) / (2 * h)
        assert np.hypot(drho, dt) == pytest.approx(v.gradient_norm(rho, t), rel=1e-6)
        assert v.gradient_norm(rho, t) == pytest.approx(bubble_gradient_norm(P, rho, t, 0.3), rel=1e-12)


def test_energy_is_scale_invariant():
    P = BubbleParams(5, 2.0)
    g = [gradient_energy(P, epsilon=e).value for e in (0.1, 0.5, 1.0)]
    s = [trace_energy(P, epsilon=e).value for e in (0.1, 1.0)]
    assert max(g) / min(g) - 1 < 1e-6
    assert s[0] / s[1] - 1 < 1e-6


@pytest.mark.parametrize("N,p", [(3, 2.0), (4, 2.0), (5, 3.0), (5, 2.0), (6, 2.0), (7, 3.0), (9, 1.5)])
def test_trace_constant_routes(N, p, oracles):
    quad = trace_constant(N, p)
    closed = trace_constant_closed_form(N, p)
    assert quad == pytest.approx(closed, rel=1e-8)
    assert closed == pytest.approx(oracles["K_closed"][f"{N},{p}"], rel=1e-13)


def test_trace_constant_positive_on_random_pairs(rng):
    for _ in range(20):
        N = int(rng.integers(3, 12))
        p = rng.uniform(1.2, N - 0.2)
        k = trace_constant_closed_form(N, p)
        assert np.isfinite(k) and k > 0


def test_normalized_profile():
    prof = normalized_profile(5, 2.0)
    assert prof.C > 0
    assert prof.deviation < 1e-6
    doubled = normalized_profile(5, 2.0, amplitude=2.0)
    assert doubled.C * 2 == pytest.approx(prof.C, rel=1e-12)


def test_table_against_riemann_oracle(oracles):
    for key, vals in oracles["table_riemann"].items():
        N, p = key.split(",")
        table = bubble_integral_table(BubbleParams(int(N), float(p)))
        for name, v in vals.items():
            assert table[name] == pytest.approx(v, rel=1e-4), name


@pytest.mark.parametrize("N,p", [(5, 2.0), (6, 2.0), (9, 1.5)])
def test_table_identities(N, p):
    P = BubbleParams(N, p)
    t = bubble_integral_table(P)
    K = trace_constant_closed_form(N, p)
    assert t["G0"] ** (1 / p) / t["S0"] ** (1 / P.p_star) == pytest.approx(1 / K, rel=1e-8)
    assert t["G0"] == pytest.approx(P.beta ** (p - 1) * t["S0"], rel=1e-10)
    assert t["Gty"] == pytest.approx((p - 1) / p * t["G1"], rel=1e-10)
    for name, e in t.entries.items():
        if e.available and not name.endswith("L"):
            assert e.value > 0, name
    assert t["Gty"] <= t["G1"] and t["Gyr"] <= t["G0"]


@pytest.mark.parametrize("N,p", [(5, 2.0), (6, 2.0), (7, 3.0)])
def test_case_two_inequality(N, p):
    t = bubble_integral_table(BubbleParams(N, p), names=["G1", "Gty"])
    assert p < N - 1
    assert -t["G1"] / p + t["Gty"] / (N - 1) < 0


def test_unavailable_entries():
    P = BubbleParams(5, 3.0)
    t = bubble_integral_table(P, names=["G0", "Vp", "G2"])
    assert not t.get("Vp").available
    with pytest.raises(UnavailableError):
        t["Vp"]
    ok, cond = entry_condition("G2", P)
    assert not ok and "p <" in cond
    assert t.to_dict()["entries"][1]["available"] is False


def test_bad_parameters():
    with pytest.raises(DomainError):
        BubbleParams(4, 4.0)
    with pytest.raises(DomainError):
        BubbleParams(4, 1.0)
