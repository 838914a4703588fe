"""Acceptance criteria 1-10; each test records one PASS/FAIL line.

Run under pytest (lines appear in the terminal summary) or directly with
``python tests/test_acceptance.py``.
"""
import time

import numpy as np
import pytest

from critrace.energy import argmax_law, monotonicity_gap, theorem42_verdict
from critrace.expansions import cached_table, coeff_gradient_tangential, verify_expansion
from critrace.extremal import BubbleParams, bubble_integral_table, normalized_profile, trace_constant, \
    trace_constant_closed_form
from critrace.fermi import GeometrySpec, GraphPolynomial, expansion_residual_check
from critrace.fields import ProblemConfig, TaylorModel
from critrace.luxemburg import (SampledField, brezis_lieb_defect, holder_check, luxemburg_norm, modular,
                                norm_relations, translating_bump)
from critrace.quadrature import sphere_moment, sphere_moment_exact

RESULTS = {}


def record(k, ok, detail):
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    assert ok, line


def _random_field(rng):
    dim = int(rng.integers(1, 3))
    cells = [int(rng.integers(4, 30)) for _ in range(dim)]
    box = SampledField.midpoint([0.0] * dim, list(rng.uniform(0.5, 3.0, dim)), cells)
    vals = rng.standard_normal(box.shape) * 10 ** rng.uniform(-3, 3)
    vals[rng.random(box.shape) < 0.2] = 0.0
    lo, hi = sorted(rng.uniform(1.0, 6.0, 2))
    return box.with_values(vals), box.with_values(rng.uniform(lo, hi + 1e-9, box.shape))


def test_criterion_1_luxemburg_relations():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    bad, worst_unit, above, below = [], 0.0, 0, 0
    for i in range(200):
        u, p = _random_field(rng)
        rel = norm_relations(u, p)
        worst_unit = max(worst_unit, rel.get("unit_modular_deviation", 0.0))
        above += rel["norm"] > 1
        below += rel["norm"] < 1
        n = rel["norm"]
        c = rng.uniform(-50, 50)
        homog = abs(luxemburg_norm(u * c, p) - abs(c) * n) <= 1e-9 * abs(c) * n
        v = u.with_values(rng.standard_normal(u.shape) * 10 ** rng.uniform(-3, 3))
        s = luxemburg_norm(u.with_values(u.values + v.values), p)
        tri = s <= n + luxemburg_norm(v, p) + 1e-9 * max(1.0, s)
        if not (rel["unit_modular"] and rel["sign_agreement"] and rel["power_bounds"] and homog and tri):
            bad.append(i)
    dt = time.perf_counter() - t0
    record(1, not bad and dt < 30,
           f"200 fields ({above} with norm>1, {below} with norm<1), violations={len(bad)}, "
           f"max |rho(u/|u|)-1|={worst_unit:.1e}, {dt:.1f}s")


def test_criterion_2_holder():
    rng = np.random.default_rng(2)
    box = SampledField.midpoint([0.0], [2.0], [64])
    x = box.mesh()[0]
    profiles = {"constant": np.full(box.shape, 3.0), "ramp": 1.5 + 1.25 * x, "oscillating": 2 + np.sin(5 * x) ** 2}
    violations, worst = 0, 0.0
    for name, pv in profiles.items():
        p = box.with_values(pv)
        q = box.with_values(pv / (pv - 1))
        for _ in range(100):
            f = box.with_values(rng.standard_normal(64) * 10 ** rng.uniform(-2, 2))
            g = box.with_values(rng.standard_normal(64) * 10 ** rng.uniform(-2, 2))
            res = holder_check(f, g, p, q)
            violations += not res.satisfied
            worst = max(worst, res.lhs / res.rhs)
    record(2, violations == 0, f"300 pairs over 3 profiles, violations={violations}, max lhs/rhs={worst:.3f}")


def test_criterion_3_brezis_lieb():
    box = SampledField.midpoint([0.0, 0.0], [10.0, 1.0], [100, 100])
    x, y = box.mesh()
    f = box.with_values(np.exp(-x ** 2) * (1 + y))
    p = box.with_values(2.0 + 0.5 * np.cos(x) * y)
    seq = translating_bump(f, np.linspace(0.0, 9.0, 19), width=0.5)
    d = np.abs(brezis_lieb_defect(seq, f, p))
    rho = modular(f, p)
    n0 = None
    for k in range(len(d)):
        tail = d[k:]
        if np.all(tail < 1e-3 * rho) and np.all(np.diff(tail) <= 1e-15):
            n0 = k
            break
    record(3, n0 is not None and n0 < len(d) - 3,
           f"10^4 cells, n0={n0}, |d_n|/rho(f) at n0={d[n0] / rho if n0 is not None else float('nan'):.1e}, "
           f"final={d[-1] / rho:.1e}")


def test_criterion_4_normalization():
    worst_id, worst_k = 0.0, 0.0
    for N, p in [(5, 2.0), (6, 2.0), (7, 3.0)]:
        worst_id = max(worst_id, normalized_profile(N, p).deviation)
        worst_k = max(worst_k, abs(trace_constant(N, p) / trace_constant_closed_form(N, p) - 1))
    record(4, worst_id <= 1e-6 and worst_k <= 1e-8,
           f"max identity deviation={worst_id:.1e} (tol 1e-6), K quadrature vs Beta route={worst_k:.1e} (tol 1e-8)")


CRIT5 = {
    "a": ProblemConfig.simple(9, 1.5, dtp=0.1, lap_r=-1.0),
    "b": ProblemConfig.simple(9, 1.5, psi_hessian=np.eye(8), lap_r=-1.0),
    "c": ProblemConfig.simple(9, 1.5, dtf=1.0, lap_r=-1.0),
}


def test_criterion_5_expansions():
    t0 = time.perf_counter()
    parts, ok = [], True
    for key, config in CRIT5.items():
        for kind in ("gradient", "boundary"):
            rep = verify_expansion(config, kind)
            ok &= rep.passed
            devs = ",".join(f"{c.name}{'*' if c.closed_form == 0 else ''}={c.rel_dev:.1e}"
                            for c in rep.comparisons if c.compared)
            parts.append(f"({key},{kind}: {devs}; cond={rep.fit.condition:.1e})")
    dt = time.perf_counter() - t0
    record(5, ok and dt < 300, f"{dt:.0f}s " + " ".join(parts)
           + " [* closed form is 0: deviation in units of 1e-3*|leading|, limit 1]")


def test_criterion_6_convention():
    # stated adopted convention: H = tr/(N-1); rejected alternative: trace
    rep = verify_expansion(CRIT5["b"], "gradient", convention="average")
    d2 = rep.comparison("D2")
    alt = rep.alternatives["trace"]["rel_dev"]
    record(6, d2.rel_dev <= 2e-2 and alt > 0.2,
           f"fitted eps coefficient {d2.fitted:.5g}; averaged-H D2 {d2.closed_form:.5g} "
           f"(dev {d2.rel_dev:.2f}); trace-H D2 {rep.alternatives['trace']['D2']:.5g} (dev {alt:.1e}); "
           f"the fit pins the trace normalization, which the package uses by default")


def test_criterion_7_verdicts():
    fixtures = {
        1: ProblemConfig.simple(9, 1.5, dtp=0.1),
        2: ProblemConfig.simple(6, 2.0, psi_hessian=np.eye(5)),
        3: ProblemConfig.simple(9, 1.5, h0=-1.0),
    }
    cases = {k: theorem42_verdict(c) for k, c in fixtures.items()}
    cases_ok = all(v.case == k and v.passed and v.value < 0 for k, v in cases.items())
    ineq = {}
    for N, p in [(5, 2.0), (6, 2.0), (7, 3.0)]:
        t = bubble_integral_table(BubbleParams(N, p), names=["G1"])
        ineq[(N, p)] = (-1 / p + 1 / (N - 1)) * t["G1"]
    ineq_ok = all(v < 0 for v in ineq.values())
    none = theorem42_verdict(ProblemConfig.simple(10, 2.0))
    law = argmax_law(fixtures[1])
    ok = cases_ok and ineq_ok and none.case is None and law.sign_consistent and law.rel_error <= 0.1
    vals = ", ".join(f"f{k}(1)={v.value:.3g}" for k, v in cases.items())
    record(7, ok, f"{vals}; case-2 inequality max={max(ineq.values()):.3g}; degenerate -> "
                  f"{none.to_dict()['case']}; argmax a={law.a_closed:.4g} fit={law.a_fit:.4g} "
                  f"(rel {law.rel_error:.1e}), sign law {'ok' if law.sign_consistent else 'violated'}")


def test_criterion_8_geometry():
    h = np.diag([1.5, -0.4, 0.8])
    h[0, 1] = h[1, 0] = 0.3
    terms = [(list(a), c) for a, c in GraphPolynomial.quadratic(h).terms] + [([1, 1, 1], 2.0), ([0, 3, 0], -0.7)]
    specs = {"paraboloid N=3": GeometrySpec(np.eye(2)),
             "anisotropic+cubic N=4": GeometrySpec(h, psi=GraphPolynomial(terms, 3))}
    parts, ok = [], True
    for name, spec in specs.items():
        rep = expansion_residual_check(spec)
        ok &= rep.jacobian_order >= 1.9 and rep.metric_order >= 1.9 and rep.nu_unit_error <= 1e-12
        parts.append(f"{name}: J {rep.jacobian_order:.2f}, metric {rep.metric_order:.2f}, nu {rep.nu_unit_error:.0e}")
    record(8, ok, "; ".join(parts))


def test_criterion_9_monotonicity():
    rng = np.random.default_rng(9)
    n = 10 ** 4
    dims = rng.integers(1, 6, n)
    worst = np.inf
    for d in np.unique(dims):
        k = int(np.sum(dims == d))
        x = rng.standard_normal((k, d)) * 10 ** rng.uniform(-2, 2, (k, 1))
        y = rng.standard_normal((k, d)) * 10 ** rng.uniform(-2, 2, (k, 1))
        p = rng.uniform(1.05, 6.0, (k, 1))
        worst = min(worst, float(monotonicity_gap(x, y, p).min()))
    record(9, worst >= -1e-12, f"10^4 triples, min gap={worst:.3g}")


def test_criterion_10_sphere_moments():
    rng = np.random.default_rng(10)
    worst_mc = 0.0
    for m in (3, 5, 8):
        y = rng.standard_normal((10 ** 6, m))
        y /= np.linalg.norm(y, axis=1, keepdims=True)
        for exps in ([4], [2, 2], [2]):
            mc = float(np.mean(np.prod(y[:, :len(exps)] ** np.array(exps), axis=1)))
            worst_mc = max(worst_mc, abs(mc / sphere_moment(exps, m) - 1))
    ident = max(abs(sphere_moment([4], m) - 3 * sphere_moment([2, 2], m)) for m in range(2, 20))
    exact = all(sphere_moment_exact([4], m) == 3 * sphere_moment_exact([2, 2], m) for m in range(2, 20))
    N = 9
    c = ProblemConfig.simple(N, 1.5, lap_p=0.8, dttp=0.3)
    B = coeff_gradient_tangential(c, np.diag(np.linspace(0.2, 1.0, N - 1)), TaylorModel.constant(1.0, N),
                                  cached_table(N, 1.5))
    vanish = abs(B["B4_quartic_residual"]) / abs(B["B4"])
    record(10, worst_mc <= 1e-2 and ident <= 1e-14 and exact and vanish <= 1e-12,
           f"MC max rel dev={worst_mc:.1e}, identity error={ident:.1e}, B4 quartic term/B4={vanish:.1e}")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
