import numpy as np
import pytest

from critrace.energy import (FieldBundle, argmax_coefficient, critical_level_model, energy_curve,
                             f_coefficients, functional_value, monotonicity_gap, mountain_pass_check,
                             profile_moments, rayleigh_trace_bound, theorem42_verdict)
from critrace.errors import HypothesisError, PreconditionError
from critrace.fields import ProblemConfig
from critrace.luxemburg import SampledField


def square(n=40):
    return SampledField.midpoint([0.0, 0.0], [1.0, 1.0], [n, n])


def edge(n=40):
    return SampledField.midpoint([0.0], [1.0], [n])


def test_functional_value_examples():
    sq = square()
    assert functional_value(sq, [sq, sq], 2.0, 1.0, 2.0, edge()) == 0.0
    x, y = sq.mesh()
    u = sq.with_values(np.sin(x) * y)
    gx, gy = sq.with_values(np.cos(x) * y), sq.with_values(np.sin(x))
    direct = np.sum(sq.weights * (gx.values ** 2 + gy.values ** 2)) / 2
    assert functional_value(u, [gx, gy], 2.0, 0.0, 2.0, None) == pytest.approx(direct)
    # u = x: grad energy 1/2, trace on the edge x = 1 gives 1/2
    u = sq.with_values(x)
    one = sq.with_values(1.0)
    bnd = edge().with_values(1.0)
    assert functional_value(u, [one, sq], 2.0, 0.0, 2.0, bnd) == pytest.approx(0.0, abs=1e-14)


def test_f0_shape():
    c = ProblemConfig.simple(9, 1.5)
    fc = f_coefficients(c)
    mom = profile_moments(9, 1.5)
    p, ps = 1.5, c.p_star
    assert float(fc["f0"](1.0)) == pytest.approx((1 / p - 1 / ps) * mom.level, rel=1e-14)
    assert float(fc["f0"](0.0)) == 0.0
    assert float(fc["f0"].derivative(1.0)) == pytest.approx(0.0, abs=1e-12 * mom.level)
    assert float(fc["f0"].derivative(1.0, 2)) == pytest.approx((p - ps) * mom.level, rel=1e-12)
    assert critical_level_model(c) == pytest.approx(float(fc["f0"](1.0)), rel=1e-14)


def test_critical_level_positive_and_decreasing_in_k():
    for N, p in [(5, 2.0), (9, 1.5), (10, 2.0), (6, 1.3)]:
        c = ProblemConfig.simple(N, p)
        assert critical_level_model(c) > 0
    # at fixed (N, p) the level is a negative power of K
    c = ProblemConfig.simple(9, 1.5)
    mom = profile_moments(9, 1.5)
    expo = -1.5 * c.p_star / (c.p_star - 1.5)
    assert expo < 0
    assert critical_level_model(c) == pytest.approx((1 / 1.5 - 1 / c.p_star) * mom.K ** expo, rel=1e-12)


def test_energy_curve_flat_constant():
    c = ProblemConfig.simple(9, 1.5)
    curve = energy_curve(c, 1e-2)
    assert float(curve.value(0.0)[0]) == 0.0
    assert curve.max_value == pytest.approx(critical_level_model(c), rel=1e-2)
    assert curve.s_max == pytest.approx(1.0, abs=1e-3)


def test_energy_curve_csv(tmp_path):
    curve = energy_curve(ProblemConfig.simple(9, 1.5), 1e-2)
    curve.to_csv(tmp_path / "c.csv")
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0] == "s,F" and len(rows) == 65
    assert curve.to_dict()["s_max"] == curve.s_max


def test_verdict_case1():
    v = theorem42_verdict(ProblemConfig.simple(9, 1.5, dtp=0.1))
    assert v.case == 1 and v.passed and v.value < 0
    d = v.to_dict()
    assert d["model_level_label"] == "MODEL" and d["assumptions"]


def test_verdict_case1_monotone_in_dtp():
    values = [theorem42_verdict(ProblemConfig.simple(9, 1.5, dtp=d)).value for d in (0.05, 0.1, 0.2, 0.4)]
    assert np.all(np.diff(values) < 0)
    assert np.allclose(np.diff(values) / np.diff([0.05, 0.1, 0.2, 0.4]), values[0] / 0.05, rtol=1e-12)


def test_verdict_case2():
    v = theorem42_verdict(ProblemConfig.simple(6, 2.0, psi_hessian=np.eye(5)))
    assert v.case == 2 and v.passed
    assert v.to_dict()["sufficient_condition"]["p < N-1"]


def test_verdict_case3():
    v = theorem42_verdict(ProblemConfig.simple(9, 1.5, h0=-1.0))
    assert v.case == 3 and v.passed
    v = theorem42_verdict(ProblemConfig.simple(9, 1.5, h0=1.0))
    assert v.case is None and not v.passed


def test_verdict_case4_and_degenerate():
    v = theorem42_verdict(ProblemConfig.simple(10, 2.0, dttp=1.0))
    assert v.case == 4 and v.passed
    v = theorem42_verdict(ProblemConfig.simple(10, 2.0, lap_r=-1.0))
    assert v.case == 4 and v.passed
    none = theorem42_verdict(ProblemConfig.simple(10, 2.0))
    assert none.case is None and not none.passed and none.value == 0.0
    assert none.to_dict()["case"] == "none"


def test_verdict_negative_curvature_is_none():
    v = theorem42_verdict(ProblemConfig.simple(9, 1.5, psi_hessian=-np.eye(8)))
    assert v.case is None


def test_verdict_hypothesis_errors():
    with pytest.raises(HypothesisError, match="energy_bound"):
        theorem42_verdict(ProblemConfig.simple(5, 2.0, psi_hessian=np.eye(4)))
    with pytest.raises(HypothesisError, match="p_normal_derivative"):
        theorem42_verdict(ProblemConfig.simple(9, 1.5, dtp=-0.1))


def test_argmax_coefficient_sign():
    assert argmax_coefficient(ProblemConfig.simple(9, 1.5, dtp=0.1)) < 0


def mp_bundle(boundary_value=1.0, scale=1.0):
    sq = square(20)
    one = sq.with_values(scale)
    return FieldBundle(one, (sq, sq), 2.0, 1.0, edge(20).with_values(scale * boundary_value), 3.0)


def test_mountain_pass_geometry():
    res = mountain_pass_check(mp_bundle())
    assert res.small_sphere_positive and res.large_s_negative
    res2 = mountain_pass_check(mp_bundle(scale=2.0))
    assert (res2.small_sphere_positive, res2.large_s_negative) == (True, True)
    no_trace = mountain_pass_check(mp_bundle(boundary_value=0.0))
    assert no_trace.small_sphere_positive and not no_trace.large_s_negative
    sq = square(10)
    with pytest.raises(PreconditionError):
        mountain_pass_check(FieldBundle(sq.with_values(1.0), (sq,), 3.0, 1.0, edge(10).with_values(1.0), 2.0))


def test_monotonicity_gap(rng):
    x = rng.standard_normal((1000, 3))
    y = rng.standard_normal((1000, 3))
    assert np.all(monotonicity_gap(x, x, 3.0) == 0)
    assert np.allclose(monotonicity_gap(x, y, 2.0), np.sum((x - y) ** 2, axis=1), rtol=1e-14)
    for p in (1.5, 3.0, 4.0):
        assert monotonicity_gap(x, y, p).min() >= -1e-12


def test_rayleigh_bound():
    c = ProblemConfig.simple(9, 1.5)
    vals = [rayleigh_trace_bound(c, e) for e in (1e-1, 1e-2, 1e-3)]
    assert min(vals) > 0
    assert rayleigh_trace_bound(c, 1e-2, amplitude=2.0) == pytest.approx(vals[1], rel=1e-10)
    target = 1 / profile_moments(9, 1.5).K
    gaps = [abs(v - target) for v in vals]
    assert gaps[-1] < gaps[0]
