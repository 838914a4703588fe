"""The trace bubble V = r^-beta with r^2 = (1 + t)^2 + |y|^2, its rescalings,
the sharp trace constant and the table of bubble moments."""
import json
from dataclasses import dataclass
from math import exp, log, pi

import numpy as np
from scipy.special import gammaln

from .errors import DomainError, UnavailableError
from .quadrature import QuadratureSpec, RadialKernel, boundary_integral, halfspace_integral

TABLE_SPEC = QuadratureSpec(rtol=1e-12, max_depth=10)


@dataclass(frozen=True)
class BubbleParams:
    N: int
    p: float

    def __post_init__(self):
        if not 1 < self.p < self.N:
            raise DomainError(f"need 1 < p < N, got p={self.p}, N={self.N}")

    @property
    def beta(self):
        return (self.N - self.p) / (self.p - 1)

    @property
    def p_star(self):
        return (self.N - 1) * self.p / (self.N - self.p)

    @property
    def gamma(self):
        """Decay rate of |grad V|^p in r."""
        return self.p * (self.N - 1) / (self.p - 1)

    @property
    def grad_power(self):
        return (self.N - 1) / (self.p - 1)


def bubble_value(params, rho, t):
    return ((1.0 + t) ** 2 + rho ** 2) ** (-params.beta / 2)


def bubble_gradient_norm(params, rho, t, epsilon=1.0):
    b = params.beta
    return b * epsilon ** (b / params.p) * ((epsilon + t) ** 2 + rho ** 2) ** (-params.grad_power / 2)


def bubble_gradient(params, rho, t):
    """(dV/drho, dV/dt)."""
    r2 = (1.0 + t) ** 2 + rho ** 2
    c = -params.beta * r2 ** (-params.beta / 2 - 1)
    return c * rho, c * (1.0 + t)


class RescaledBubble:
    """V_eps(y, t) = eps^(-(N-p)/p) V(y/eps, t/eps)."""

    def __init__(self, params, epsilon):
        self.params = params
        self.epsilon = float(epsilon)
        self.amplitude = self.epsilon ** (-(params.N - params.p) / params.p)

    def __call__(self, rho, t):
        e = self.epsilon
        return self.amplitude * bubble_value(self.params, rho / e, t / e)

    def gradient(self, rho, t):
        e = self.epsilon
        gr, gt = bubble_gradient(self.params, rho / e, t / e)
        return self.amplitude / e * gr, self.amplitude / e * gt

    def gradient_norm(self, rho, t):
        gr, gt = self.gradient(rho, t)
        return np.hypot(gr, gt)


def rescale_bubble(params, epsilon):
    return RescaledBubble(params, epsilon)


def gradient_energy(params, spec=None, epsilon=1.0):
    """Integral of |grad V_eps|^p over the half-space."""
    v = rescale_bubble(params, epsilon)
    kernel = RadialKernel(lambda rho, t: v.gradient_norm(rho, t) ** params.p,
                          decay=params.gamma, scale=epsilon)
    return halfspace_integral(kernel, params.N, spec or TABLE_SPEC)


def trace_energy(params, spec=None, epsilon=1.0):
    """Integral of V_eps(y, 0)^p_* over the boundary."""
    v = rescale_bubble(params, epsilon)
    kernel = RadialKernel(lambda rho: v(rho, 0.0) ** params.p_star, decay=params.gamma, scale=epsilon)
    return boundary_integral(kernel, params.N, spec or TABLE_SPEC)


def trace_constant(N, p, spec=None):
    """K with K^-1 = ||grad V||_p / ||V(., 0)||_{p_*}, by quadrature."""
    params = BubbleParams(N, p)
    g = gradient_energy(params, spec).value
    s = trace_energy(params, spec).value
    return s ** (1 / params.p_star) / g ** (1 / p)


def _log_trace_moment(N, p):
    """log of the boundary integral S0 via a Beta-function reduction."""
    params = BubbleParams(N, p)
    g = params.gamma
    return (N - 1) / 2 * log(pi) + gammaln((g - N + 1) / 2) - gammaln(g / 2)


def trace_constant_closed_form(N, p):
    """Same constant from S0 = pi^((N-1)/2) G((g-N+1)/2)/G(g/2), G0 = beta^(p-1) S0."""
    params = BubbleParams(N, p)
    log_s = _log_trace_moment(N, p)
    log_g = (p - 1) * log(params.beta) + log_s
    return exp(log_s / params.p_star - log_g / p)


@dataclass(frozen=True)
class ProfileNormalization:
    C: float
    gradient_integral: float
    trace_integral: float
    target: float
    K: float

    @property
    def deviation(self):
        """Largest relative disagreement among the three equal quantities."""
        vals = (self.gradient_integral, self.trace_integral, self.target)
        return max(abs(a - b) / abs(self.target) for a in vals for b in vals)


def normalized_profile(N, p, spec=None, amplitude=1.0):
    """Constant C such that Z = C * (amplitude * V) has equal gradient and
    trace integrals, both equal to K^(-p p_*/(p_* - p))."""
    params = BubbleParams(N, p)
    ps = params.p_star
    g = gradient_energy(params, spec).value * amplitude ** p
    s = trace_energy(params, spec).value * amplitude ** ps
    K = s ** (1 / ps) / g ** (1 / p)
    C = K ** (-p / (ps - p)) * s ** (-1 / ps)
    return ProfileNormalization(C, C ** p * g, C ** ps * s, K ** (-p * ps / (ps - p)), K)


@dataclass(frozen=True)
class _Entry:
    kind: str            # "grad", "value" or "trace"
    weight: object       # weight(rho, t, r2) or weight(rho) for the trace
    order: int           # polynomial growth of the weight
    log: bool = False


def _ln_grad(params, r2):
    return log(params.beta) - 0.5 * params.grad_power * np.log(r2)


ENTRIES = {
    "G0": _Entry("grad", lambda rho, t, r2: 1.0, 0),
    "G1": _Entry("grad", lambda rho, t, r2: t, 1),
    "G2": _Entry("grad", lambda rho, t, r2: t * t, 2),
    "Gy": _Entry("grad", lambda rho, t, r2: rho * rho, 2),
    "Gyr": _Entry("grad", lambda rho, t, r2: rho * rho / r2, 0),
    "Gty": _Entry("grad", lambda rho, t, r2: t * rho * rho / r2, 1),
    "Gt2y": _Entry("grad", lambda rho, t, r2: t * t * rho * rho / r2, 2),
    "Gy4r": _Entry("grad", lambda rho, t, r2: rho ** 4 / r2, 2),
    "G1L": _Entry("grad", lambda rho, t, r2: t, 1, True),
    "G2L": _Entry("grad", lambda rho, t, r2: t * t, 2, True),
    "GtyL": _Entry("grad", lambda rho, t, r2: t * rho * rho / r2, 1, True),
    "Gt2yL": _Entry("grad", lambda rho, t, r2: t * t * rho * rho / r2, 2, True),
    "Vp": _Entry("value", lambda rho, t, r2: 1.0, 0),
    "S0": _Entry("trace", lambda rho: 1.0, 0),
    "Sy": _Entry("trace", lambda rho: rho * rho, 2),
}


def entry_condition(name, params):
    """(holds, description) of the integrability condition of an entry."""
    e = ENTRIES[name]
    N, p = params.N, params.p
    if e.kind == "value":
        return p * p < N, "p < sqrt(N)"
    d = N if e.kind == "grad" else N - 1
    k = e.order
    if d + k <= N - 1:
        return True, "p < N"
    bound = (d + k) / (d + k - N + 1)
    label = f"p < (N+{d + k - N})/{d + k - N + 1}" if d + k > N else "p < N"
    return p < bound, label


@dataclass(frozen=True)
class TableEntry:
    name: str
    value: float
    error: float
    available: bool
    condition: str

    def to_dict(self):
        return {"name": self.name, "value": self.value, "error": self.error,
                "available": self.available, "condition": self.condition}


@dataclass(frozen=True)
class BubbleIntegralTable:
    params: BubbleParams
    entries: dict

    def __getitem__(self, name):
        e = self.entries[name]
        if not e.available:
            raise UnavailableError(f"{name} diverges: requires {e.condition}")
        return e.value

    def get(self, name):
        return self.entries[name]

    def __contains__(self, name):
        return name in self.entries

    def to_dict(self):
        return {"N": self.params.N, "p": self.params.p,
                "entries": [e.to_dict() for e in self.entries.values()]}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _entry_integral(name, params, spec):
    e = ENTRIES[name]
    p, N = params.p, params.N
    if e.kind == "trace":
        kernel = RadialKernel(lambda rho: e.weight(rho) * bubble_value(params, rho, 0.0) ** params.p_star,
                              decay=params.gamma - e.order)
        return boundary_integral(kernel, N, spec)

    def func(rho, t):
        r2 = (1.0 + t) ** 2 + rho ** 2
        w = e.weight(rho, t, r2)
        if e.kind == "value":
            return w * r2 ** (-params.beta * p / 2)
        g = params.beta ** p * r2 ** (-params.gamma / 2)
        if e.log:
            g = g * _ln_grad(params, r2)
        return w * g

    decay = params.beta * p if e.kind == "value" else params.gamma - e.order
    return halfspace_integral(RadialKernel(func, decay=decay, log=e.log), N, spec)


def bubble_integral_table(params, spec=None, names=None):
    """Moments of |grad V|^p, V^p and V(., 0)^p_* with availability flags."""
    spec = spec or TABLE_SPEC
    out = {}
    for name in names or ENTRIES:
        ok, cond = entry_condition(name, params)
        if not ok:
            out[name] = TableEntry(name, float("nan"), float("nan"), False, cond)
            continue
        val, err = _entry_integral(name, params, spec)
        out[name] = TableEntry(name, val, err, True, cond)
    return BubbleIntegralTable(params, out)
