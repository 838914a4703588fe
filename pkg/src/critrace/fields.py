"""Problem data: second-order Taylor models in Fermi coordinates and checks.

Coordinates are x = (y_1, ..., y_{N-1}, t) with t the inward normal distance.
"""
import json
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .errors import DomainError, InputError
from .fermi import GeometrySpec

CRITICALITY_TOL = 1e-10
ZERO_TOL = 1e-12


def critical_trace_exponent(p_value, N):
    """p_* = (N - 1) p / (N - p)."""
    if not 1 < p_value < N:
        raise DomainError(f"need 1 < p < N, got p={p_value}, N={N}")
    return (N - 1) * p_value / (N - p_value)


@dataclass(frozen=True, eq=False)
class TaylorModel:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray

    def __post_init__(self):
        g = np.array(self.gradient, dtype=float).ravel()
        h = np.array(self.hessian, dtype=float, ndmin=2)
        if h.shape != (g.size, g.size):
            raise InputError(f"hessian shape {h.shape} does not match gradient length {g.size}")
        if np.linalg.norm(h - h.T) > 1e-12 * max(np.linalg.norm(h), 1e-300):
            raise InputError("hessian must be symmetric")
        g.setflags(write=False)
        h.setflags(write=False)
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "gradient", g)
        object.__setattr__(self, "hessian", h)

    @classmethod
    def constant(cls, value, N):
        return cls(value, np.zeros(N), np.zeros((N, N)))

    @classmethod
    def coordinate(cls, N, index=-1):
        """The coordinate function x_index (default t)."""
        g = np.zeros(N)
        g[index] = 1.0
        return cls(0.0, g, np.zeros((N, N)))

    @property
    def N(self):
        return self.gradient.size

    @property
    def dt(self):
        return float(self.gradient[-1])

    @property
    def dtt(self):
        return float(self.hessian[-1, -1])

    @property
    def grad_y(self):
        return self.gradient[:-1]

    @property
    def hess_y(self):
        return self.hessian[:-1, :-1]

    @property
    def mixed(self):
        return self.hessian[:-1, -1]

    @property
    def laplacian_y(self):
        return float(np.trace(self.hess_y))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.value + x @ self.gradient + 0.5 * np.einsum("...i,ij,...j->...", x, self.hessian, x)

    def radial(self, rho, t):
        """Angular average over |y| = rho of the model at height t."""
        m = self.N - 1
        return (self.value + self.dt * t
                + 0.5 * (self.dtt * t * t + self.laplacian_y / m * rho * rho))

    def is_radial(self, tol=ZERO_TOL):
        """True when the model depends on y only through |y|."""
        m = self.N - 1
        iso = self.hess_y - self.laplacian_y / m * np.eye(m)
        return (np.abs(self.grad_y).max(initial=0) <= tol and np.abs(self.mixed).max(initial=0) <= tol
                and np.abs(iso).max(initial=0) <= tol)

    def __add__(self, other):
        if isinstance(other, TaylorModel):
            return TaylorModel(self.value + other.value, self.gradient + other.gradient,
                               self.hessian + other.hessian)
        return TaylorModel(self.value + other, self.gradient, self.hessian)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __mul__(self, other):
        if isinstance(other, TaylorModel):
            g = self.value * other.gradient + other.value * self.gradient
            cross = np.outer(self.gradient, other.gradient)
            h = self.value * other.hessian + other.value * self.hessian + cross + cross.T
            return TaylorModel(self.value * other.value, g, h)
        return TaylorModel(self.value * other, self.gradient * other, self.hessian * other)

    __rmul__ = __mul__

    def to_dict(self):
        return {"value": self.value, "grad": self.gradient.tolist(), "hess": self.hessian.tolist()}

    @classmethod
    def from_dict(cls, data, N):
        if isinstance(data, (int, float)):
            return cls.constant(data, N)
        g = data.get("grad", [0.0] * N)
        h = data.get("hess", [[0.0] * N] * N)
        if len(g) != N:
            raise InputError(f"gradient must have length N={N}")
        return cls(data["value"], g, h)


def _default_eps():
    return tuple(np.logspace(-3, -1, 8).tolist())


def _default_s():
    s = np.logspace(-2, np.log10(4.0), 63)
    return tuple(np.unique(np.append(s, 1.0)).tolist())


@dataclass(frozen=True, eq=False)
class ProblemConfig:
    N: int
    p: TaylorModel
    r: TaylorModel
    h: TaylorModel
    f: TaylorModel
    geometry: GeometrySpec
    epsilon_grid: tuple = field(default_factory=_default_eps)
    s_grid: tuple = field(default_factory=_default_s)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 3:
            raise InputError("N must be an integer >= 3")
        object.__setattr__(self, "N", int(self.N))
        for name in ("p", "r", "h", "f"):
            if getattr(self, name).N != self.N:
                raise InputError(f"{name} model must live in dimension N={self.N}")
        if self.geometry.N != self.N:
            raise InputError("geometry dimension does not match N")
        if not 1 < self.p.value < self.N:
            raise DomainError(f"need 1 < p(0) < N, got {self.p.value}")
        eps = tuple(float(e) for e in self.epsilon_grid)
        s = tuple(float(v) for v in self.s_grid)
        if not eps or any(not 0 < e < 1 for e in eps) or list(eps) != sorted(set(eps)):
            raise InputError("epsilon_grid must be strictly increasing inside (0, 1)")
        if not s or any(v <= 0 for v in s) or list(s) != sorted(set(s)) or 1.0 not in s:
            raise InputError("s_grid must be strictly increasing, positive and contain 1")
        object.__setattr__(self, "epsilon_grid", eps)
        object.__setattr__(self, "s_grid", s)

    @classmethod
    def simple(cls, N, p, *, dtp=0.0, dttp=0.0, lap_p=0.0, dtf=0.0, lap_r=0.0, h0=0.0,
               psi_hessian=None, **kw):
        """Build a y-radial config from a handful of Taylor coefficients."""
        m = N - 1
        ph = np.zeros((N, N))
        ph[:m, :m] = lap_p / m * np.eye(m)
        ph[-1, -1] = dttp
        pg = np.zeros(N)
        pg[-1] = dtp
        rh = np.zeros((N, N))
        rh[:m, :m] = lap_r / m * np.eye(m)
        fg = np.zeros(N)
        fg[-1] = dtf
        geometry = GeometrySpec(np.zeros((m, m)) if psi_hessian is None else psi_hessian)
        return cls(N, TaylorModel(p, pg, ph), TaylorModel(critical_trace_exponent(p, N), np.zeros(N), rh),
                   TaylorModel.constant(h0, N), TaylorModel(1.0, fg, np.zeros((N, N))), geometry, **kw)

    @property
    def p0(self):
        return self.p.value

    @property
    def p_star(self):
        return critical_trace_exponent(self.p.value, self.N)

    def to_dict(self):
        return {
            "N": self.N,
            "p": self.p.to_dict(),
            "r": self.r.to_dict(),
            "h": self.h.to_dict(),
            "f": self.f.to_dict(),
            "geometry": self.geometry.to_dict(),
            "epsilon_grid": list(self.epsilon_grid),
            "s_grid": list(self.s_grid),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            N = int(data["N"])
            kw = {}
            if "epsilon_grid" in data:
                kw["epsilon_grid"] = data["epsilon_grid"]
            if "s_grid" in data:
                kw["s_grid"] = data["s_grid"]
            geo = data.get("geometry") or {"psi_hessian": np.zeros((N - 1, N - 1)).tolist()}
            f = data.get("f", 1.0)
            h = data.get("h", 0.0)
            return cls(N, TaylorModel.from_dict(data["p"], N), TaylorModel.from_dict(data["r"], N),
                       TaylorModel.from_dict(h, N), TaylorModel.from_dict(f, N),
                       GeometrySpec.from_dict(geo), **kw)
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed configuration: {exc!r}") from exc

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    message: str


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    @property
    def ok(self):
        return all(c.passed for c in self.checks)

    def failed(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"ok": self.ok, "checks": [c.__dict__ for c in self.checks]}


def theorem_bound(N):
    return min(sqrt(N), N * N / (3 * N - 2))


def validate_config(config, case4=False):
    """Check every standing hypothesis; failures become report entries."""
    N, p, r = config.N, config.p, config.r
    p0 = p.value
    checks = []

    def add(name, ok, msg):
        checks.append(Check(name, bool(ok), msg))

    add("exponent_range", 1 < p0 < N, f"1 < p(0)={p0:g} < N={N}")
    ps = critical_trace_exponent(p0, N)
    add("criticality", abs(r.value - ps) <= CRITICALITY_TOL,
        f"|r(0) - p_*(0)| = {abs(r.value - ps):.3e} (p_* = {ps:.12g})")
    bound = theorem_bound(N)
    add("energy_bound", p0 < bound, f"p(0)={p0:g} < min(sqrt(N), N^2/(3N-2)) = {bound:.6g}")
    add("boundary_expansion_bound", p0 < (N - 1) / 2, f"p(0)={p0:g} < (N-1)/2 = {(N - 1) / 2:g}")
    gy = float(np.abs(p.grad_y).max(initial=0))
    add("p_tangential_gradient", gy <= ZERO_TOL, f"max |grad_y p(0)| = {gy:.3e}")
    add("p_normal_derivative", p.dt >= 0, f"d_t p(0) = {p.dt:g} >= 0")
    hy = np.linalg.eigvalsh(p.hess_y).min() if N > 1 else 0.0
    add("p_tangential_hessian", hy >= -ZERO_TOL, f"min eig D2_y p(0) = {hy:.3e}")
    rg = float(np.abs(r.gradient).max())
    add("r_gradient", rg <= ZERO_TOL, f"max |grad r(0)| = {rg:.3e}")
    rmax = float(np.linalg.eigvalsh(r.hess_y).max())
    add("r_tangential_hessian", rmax <= ZERO_TOL, f"max eig D2_y r(0) = {rmax:.3e}")
    rn = float(max(abs(r.gradient[-1]), np.abs(r.hessian[-1]).max()))
    add("r_normal_components", rn <= ZERO_TOL, f"normal data of r must vanish, max = {rn:.3e}")
    if case4:
        pmin = float(np.linalg.eigvalsh(p.hessian).min())
        add("p_hessian_psd", pmin >= -ZERO_TOL, f"min eig D2 p(0) = {pmin:.3e}")
    delta = config.geometry.delta
    add("epsilon_range", max(config.epsilon_grid) <= delta / 2,
        f"max epsilon {max(config.epsilon_grid):g} <= delta/2 = {delta / 2:g}")
    return ValidationReport(tuple(checks))
