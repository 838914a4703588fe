"""The energy functional along the concentrating family s * z_eps and the
sign test for the energy-level comparison at a critical boundary point.

F(u) = int (|grad u|^p + h |u|^p) / p dx - int |u|^r / r dS.
"""
import csv
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import GridMismatchError, HypothesisError, PreconditionError
from .expansions import FULL_BASIS, boundary_samples, cached_table, fit_expansion, volume_samples
from .fermi import curvature_data
from .fields import ZERO_TOL, validate_config
from .luxemburg import SampledField, luxemburg_norm, sobolev_norm


def _values(x, like):
    if isinstance(x, SampledField):
        if x.shape != like.shape:
            raise GridMismatchError("fields live on different grids")
        return x.values
    return np.full(like.shape, float(x))


def functional_value(u, grad_u, p, h, r, boundary_u):
    """Grid quadrature of F; ``boundary_u`` carries the surface weights."""
    comps = [grad_u] if isinstance(grad_u, SampledField) else list(grad_u)
    for c in comps:
        if c.shape != u.shape:
            raise GridMismatchError("gradient components must share the grid of u")
    pv, hv = _values(p, u), _values(h, u)
    g = np.sqrt(sum(c.values ** 2 for c in comps))
    vol = np.sum(u.weights * (g ** pv + hv * np.abs(u.values) ** pv) / pv)
    if boundary_u is None:
        return float(vol)
    rv = _values(r, boundary_u)
    bnd = np.sum(boundary_u.weights * np.abs(boundary_u.values) ** rv / rv)
    return float(vol - bnd)


@dataclass(frozen=True)
class PowerSum:
    """sum_k c_k s^(e_k)."""
    terms: tuple

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        return sum((c * s ** e for c, e in self.terms), np.zeros_like(s))

    def derivative(self, s, order=1):
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for c, e in self.terms:
            k = c
            for j in range(order):
                k = k * (e - j)
            out = out + k * s ** (e - order)
        return out


@dataclass(frozen=True)
class ProfileMoments:
    """Constants of the normalized profile Z = C V."""
    C: float
    K: float
    level: float         # K^(-p p_*/(p_* - p)) = int |grad Z|^p = int Z^p_*


def profile_moments(N, p, table=None):
    table = table or cached_table(N, p)
    ps = table.params.p_star
    s0, g0 = table["S0"], table["G0"]
    K = s0 ** (1 / ps) / g0 ** (1 / p)
    C = K ** (-p / (ps - p)) * s0 ** (-1 / ps)
    return ProfileMoments(C, K, K ** (-p * ps / (ps - p)))


@dataclass(frozen=True)
class FCoefficients:
    f: dict
    unavailable: dict
    moments: ProfileMoments

    def __getitem__(self, name):
        return self.f[name]


def f_coefficients(config, table=None, convention="trace"):
    """Coefficient functions f0..f4 of the expansion of F(s z_eps)."""
    N, p = config.N, config.p0
    table = table or cached_table(N, p)
    ps = config.p_star
    mom = profile_moments(N, p, table)
    Cp, Cs = mom.C ** p, mom.C ** ps
    P = config.p
    curv = curvature_data(config.geometry, convention)
    out = {"f0": PowerSum(((mom.level / p, p), (-mom.level / ps, ps)))}
    missing = {}

    def entry(name):
        e = table.get(name)
        if not e.available:
            raise KeyError(e.condition)
        return e.value

    try:
        out["f1"] = PowerSum(((-(N / p) / p * P.dt * Cp * entry("G1"), p),))
        out["f2"] = PowerSum(((-curv.H / p * Cp * entry("G1") + curv.hbar * Cp * entry("Gty"), p),))
    except KeyError as exc:
        missing["f1"] = missing["f2"] = str(exc)
    try:
        out["f3"] = PowerSum(((config.h.value / p * Cp * entry("Vp"), p),))
    except KeyError as exc:
        missing["f3"] = str(exc)
    try:
        grad_part = -(N / (2 * p * p)) * Cp * (P.dtt * entry("G2") + P.laplacian_y / (N - 1) * entry("Gy"))
        trace_part = config.r.laplacian_y / (2 * ps * ps) * Cs * entry("Sy")
        out["f4"] = PowerSum(((grad_part, p), (trace_part, ps)))
    except KeyError as exc:
        missing["f4"] = str(exc)
    return FCoefficients(out, missing, mom)


def critical_level_model(config, table=None):
    """MODEL value (1/p - 1/p_*) K^(-p p_*/(p_* - p)) of the critical level."""
    mom = profile_moments(config.N, config.p0, table)
    return (1 / config.p0 - 1 / config.p_star) * mom.level


def argmax_coefficient(config, table=None):
    """a = -f1'(1) / f0''(1) in s_eps = 1 + a eps ln eps + O(eps)."""
    fc = f_coefficients(config, table)
    return float(-fc["f1"].derivative(1.0) / fc["f0"].derivative(1.0, 2))


@dataclass(frozen=True)
class EnergyCurve:
    epsilon: float
    s: np.ndarray
    values: np.ndarray
    s_max: float
    max_value: float
    model: object = field(repr=False, default=None)

    def value(self, s):
        return self.model(s)

    def to_dict(self):
        return {"epsilon": self.epsilon, "s": self.s.tolist(), "F": self.values.tolist(),
                "s_max": self.s_max, "max_value": self.max_value}

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "F"])
            for a, b in zip(self.s, self.values):
                w.writerow([repr(float(a)), repr(float(b))])


class _Curve:
    """F(s z_eps) as sum_i A_i s^a_i - sum_j B_j s^b_j over quadrature nodes."""

    def __init__(self, config, epsilon, order, table):
        mom = profile_moments(config.N, config.p0, table)
        C = mom.C
        vol = volume_samples(config, epsilon, order)
        bnd = boundary_samples(config, epsilon, order)
        w, pv = vol.weights.ravel(), vol.p.ravel()
        a = w * (C * vol.grad.ravel()) ** pv / pv + w * vol.h.ravel() * (C * vol.v.ravel()) ** pv / pv
        b = bnd.weights * (C * bnd.v) ** bnd.r / bnd.r
        self.coef = np.concatenate([a, -b])
        self.expo = np.concatenate([pv, bnd.r])

    def __call__(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=float))
        with np.errstate(divide="ignore"):
            ls = np.log(s)
        powers = np.where(s[:, None] > 0, np.exp(np.outer(ls, self.expo)), 0.0)
        return powers @ self.coef

    def slope(self, s):
        """s * dF/ds."""
        return float(np.exp(np.log(s) * self.expo) @ (self.coef * self.expo))


def energy_curve(config, epsilon, order=24, s_grid=None, table=None):
    model = _Curve(config, epsilon, order, table or cached_table(config.N, config.p0))
    s = np.asarray(s_grid if s_grid is not None else config.s_grid, dtype=float)
    vals = model(s)
    k = int(np.argmax(vals))
    lo, hi = s[max(k - 1, 0)], s[min(k + 1, s.size - 1)]
    if 0 < k < s.size - 1 and model.slope(lo) > 0 > model.slope(hi):
        s_max = brentq(model.slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    else:
        s_max = minimize_scalar(lambda x: -model(x)[0], bounds=(lo, hi), method="bounded",
                                options={"xatol": 1e-10}).x
    best = float(model(s_max)[0])
    return EnergyCurve(float(epsilon), s, vals, float(s_max), max(best, float(vals.max())), model)


@dataclass(frozen=True)
class ArgmaxLaw:
    a_closed: float
    a_fit: float
    eps: tuple
    s_max: tuple
    sign_consistent: bool
    fit: object

    @property
    def rel_error(self):
        return abs(self.a_fit - self.a_closed) / abs(self.a_closed)


def argmax_law(config, eps_grid=None, order=24, table=None):
    """Fit s_eps - 1 on the eps grid and compare with a = -f1'(1)/f0''(1).

    The leading displacement a eps ln eps has the sign of -a, since
    eps ln eps < 0.
    """
    eps = np.asarray(eps_grid if eps_grid is not None else config.epsilon_grid, dtype=float)
    s_max = np.array([energy_curve(config, e, order, table=table).s_max for e in eps])
    a = argmax_coefficient(config, table)
    fit = fit_expansion(eps, s_max - 1.0, FULL_BASIS[1:])
    signs = bool(np.all(np.sign(s_max - 1.0) == np.sign(a * eps * np.log(eps))))
    return ArgmaxLaw(a, fit.coefficients["elne"], tuple(eps), tuple(s_max), signs, fit)


@dataclass(frozen=True)
class Verdict:
    case: int | None
    quantity: str | None
    value: float | None
    passed: bool
    model_level: float
    diagnostics: tuple
    assumptions: tuple = ("the localized trace constant is attained at the origin (user assertion)",)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {"case": self.case if self.case is not None else "none", "quantity": self.quantity,
                "value": self.value, "passed": self.passed, "model_level": self.model_level,
                "model_level_label": "MODEL", "diagnostics": list(self.diagnostics),
                "assumptions": list(self.assumptions), **self.extra}


_REQUIRED = ("exponent_range", "criticality", "energy_bound", "p_tangential_gradient",
             "p_normal_derivative", "p_tangential_hessian", "r_gradient", "r_tangential_hessian",
             "r_normal_components")


def theorem42_verdict(config, table=None, convention="trace"):
    """Select the applicable case and test the sign of its f_i(1)."""
    report = validate_config(config)
    for name in _REQUIRED:
        if not report[name].passed:
            raise HypothesisError(f"{name}: {report[name].message}")
    N, p = config.N, config.p0
    table = table or cached_table(N, p)
    level = critical_level_model(config, table)
    curv = curvature_data(config.geometry, convention)
    diag = []
    extra = {}
    dtp, H, h0 = config.p.dt, curv.H, config.h.value
    if dtp > ZERO_TOL:
        case, q = 1, "f1"
    elif H > ZERO_TOL:
        case, q = 2, "f2"
        extra["sufficient_condition"] = {"p < N-1": bool(p < N - 1)}
    elif H < -ZERO_TOL:
        return Verdict(None, None, None, False, level, ("d_t p(0) = 0 and H < 0: no case applies",))
    elif p < 2:
        if not h0 < 0:
            return Verdict(None, None, None, False, level, (f"1 < p < 2 but h(0) = {h0:g} is not negative",))
        case, q = 3, "f3"
    else:
        full = validate_config(config, case4=True)
        for name in ("p_hessian_psd", "boundary_expansion_bound"):
            if not full[name].passed:
                raise HypothesisError(f"{name}: {full[name].message}")
        case, q = 4, "f4"
    fc = f_coefficients(config, table, convention)
    if q not in fc.f:
        raise HypothesisError(f"{q} unavailable: requires {fc.unavailable[q]}")
    value = float(fc[q](1.0))
    scale = abs(level) * 1e-14
    if abs(value) <= scale:
        diag.append(f"{q}(1) = 0: the strict inequality fails, inconclusive")
        return Verdict(None, f"{q}(1)", value, False, level, tuple(diag), extra=extra)
    if value > 0:
        diag.append(f"{q}(1) > 0")
    return Verdict(case, f"{q}(1)", value, value < 0, level, tuple(diag), extra=extra)


@dataclass(frozen=True)
class FieldBundle:
    u: SampledField
    grad: tuple
    p: object
    h: object
    boundary_u: SampledField | None
    r: object


@dataclass(frozen=True)
class MountainPassResult:
    small_sphere_positive: bool
    large_s_negative: bool
    small_s: tuple
    witness_s: float | None


def _bundle_energy(b, s):
    return functional_value(b.u * s, [g * s for g in b.grad], b.p, b.h, b.r,
                            None if b.boundary_u is None else b.boundary_u * s)


def mountain_pass_check(bundle, n_large=200, growth=1e6):
    p_max = float(np.max(_values(bundle.p, bundle.u)))
    like = bundle.boundary_u if bundle.boundary_u is not None else bundle.u
    r_min = float(np.min(_values(bundle.r, like)))
    if not r_min > p_max:
        raise PreconditionError(f"need min r > max p, got {r_min:g} <= {p_max:g}")
    norm = sobolev_norm(bundle.u, list(bundle.grad), bundle.p)
    if norm == 0:
        raise PreconditionError("v must not vanish")
    small = tuple(float(n / norm) for n in np.logspace(-3, -1, 5))
    small_ok = all(_bundle_energy(bundle, s) > 0 for s in small)
    ss = np.geomspace(1.0 / norm, growth / norm, n_large)
    vals = np.array([_bundle_energy(bundle, s) for s in ss])
    neg = np.nonzero(vals < 0)[0]
    witness = None
    large_ok = False
    if neg.size:
        k = neg[0]
        large_ok = bool(np.all(np.diff(vals[k:]) < 0))
        witness = float(ss[k])
    return MountainPassResult(bool(small_ok), large_ok, small, witness)


def monotonicity_gap(x, y, p):
    """(|x|^(p-2) x - |y|^(p-2) y) . (x - y), batched over leading axes."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)

    def flux(z):
        n = np.linalg.norm(z, axis=-1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(n > 0, n ** (p - 2), 0.0)
        return scale * z

    return np.sum((flux(x) - flux(y)) * (x - y), axis=-1)


def rayleigh_trace_bound(config, epsilon, order=24, table=None, amplitude=1.0):
    """||z_eps||_{W^{1,p(x)}} / ||z_eps||_{L^{r(x)}(boundary)}: an upper bound
    for the localized trace constant on the support of z_eps."""
    mom = profile_moments(config.N, config.p0, table)
    c = amplitude * mom.C
    vol = volume_samples(config, epsilon, order)
    bnd = boundary_samples(config, epsilon, order)
    u = SampledField(vol.axes, c * vol.v, vol.weights)
    g = SampledField(vol.axes, c * vol.grad, vol.weights)
    pf = SampledField(vol.axes, vol.p, vol.weights)
    ub = SampledField((bnd.rho,), c * bnd.v, bnd.weights)
    rf = SampledField((bnd.rho,), bnd.r, bnd.weights)
    return sobolev_norm(u, [g], pf) / luxemburg_norm(ub, rf)


def save_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj.to_dict() if hasattr(obj, "to_dict") else obj, fh, indent=2)
