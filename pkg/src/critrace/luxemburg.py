"""Modulars and Luxemburg norms of sampled fields with variable exponents."""
import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import ConvergenceError, ExponentError, GridMismatchError, InputError

MAX_BRACKET_STEPS = 400


@dataclass(frozen=True, eq=False)
class SampledField:
    """Values on a rectangular grid together with cell measure weights."""
    axes: tuple
    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        axes = tuple(np.array(a, dtype=float).ravel() for a in self.axes)
        shape = tuple(a.size for a in axes)
        values = np.asarray(self.values, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if values.shape != shape or weights.shape != shape:
            raise InputError(f"values {values.shape} and weights {weights.shape} must match grid {shape}")
        if any(np.any(np.diff(a) <= 0) for a in axes):
            raise InputError("grid axes must be strictly increasing")
        if np.any(weights < 0) or not weights.sum() > 0:
            raise InputError("weights must be nonnegative with positive total")
        for a in axes + (values, weights):
            a.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @property
    def shape(self):
        return self.values.shape

    @property
    def measure(self):
        return float(self.weights.sum())

    def mesh(self):
        return np.meshgrid(*self.axes, indexing="ij")

    def with_values(self, values):
        values = np.broadcast_to(np.asarray(values, dtype=float), self.shape)
        return SampledField(self.axes, values, self.weights)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def same_grid(self, other):
        return (self.shape == other.shape and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
                and np.array_equal(self.weights, other.weights))

    @classmethod
    def midpoint(cls, lower, upper, cells, func=None):
        """Cell-centred grid on the box [lower, upper] with equal cell weights."""
        lower, upper = np.atleast_1d(lower).astype(float), np.atleast_1d(upper).astype(float)
        cells = np.broadcast_to(np.atleast_1d(cells), lower.shape)
        axes = [lo + (np.arange(n) + 0.5) * (hi - lo) / n for lo, hi, n in zip(lower, upper, cells)]
        cell = np.prod((upper - lower) / cells)
        shape = tuple(int(n) for n in cells)
        weights = np.full(shape, cell)
        grid = np.meshgrid(*axes, indexing="ij")
        values = np.zeros(shape) if func is None else np.broadcast_to(func(*grid), shape)
        return cls(tuple(axes), values, weights)

    def to_dict(self):
        return {"axes": [a.tolist() for a in self.axes], "values": self.values.tolist(),
                "weights": self.weights.tolist()}

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(tuple(data["axes"]), np.array(data["values"], dtype=float),
                       np.array(data["weights"], dtype=float))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed sampled field: {exc!r}") from exc

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_csv(self, path):
        d = len(self.axes)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{k}" for k in range(d)] + ["value", "weight"])
            for idx in np.ndindex(self.shape):
                w.writerow([repr(float(self.axes[k][idx[k]])) for k in range(d)]
                           + [repr(float(self.values[idx])), repr(float(self.weights[idx]))])

    @classmethod
    def from_csv(cls, path):
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], np.array(rows[1:], dtype=float)
        d = len(header) - 2
        axes = tuple(np.unique(body[:, k]) for k in range(d))
        shape = tuple(a.size for a in axes)
        if body.shape[0] != int(np.prod(shape)):
            raise InputError("CSV rows do not form a rectangular grid")
        order = np.lexsort(tuple(body[:, k] for k in reversed(range(d))))
        body = body[order]
        return cls(axes, body[:, d].reshape(shape), body[:, d + 1].reshape(shape))


def _check(*fields):
    first = fields[0]
    for f in fields[1:]:
        if not (first.shape == f.shape and all(np.array_equal(a, b) for a, b in zip(first.axes, f.axes))):
            raise GridMismatchError("fields live on different grids")


def _exponent(p, like):
    """Exponent samples; accepts a SampledField or a number."""
    if isinstance(p, SampledField):
        _check(like, p)
        arr = p.values
    elif np.ndim(p) == 0:
        arr = np.full(like.shape, float(p))
    else:
        arr = np.asarray(p, dtype=float)
        if arr.shape != like.shape:
            raise GridMismatchError("exponent samples do not match the field grid")
    return arr


def _magnitude(components):
    if isinstance(components, SampledField):
        return np.abs(components.values)
    return np.sqrt(sum(c.values ** 2 for c in components))


def modular(u, p):
    """Sum of weights * |u|^p."""
    pv = _exponent(p, u)
    if np.any(pv < 1):
        raise ExponentError("exponent samples must be >= 1")
    return float(np.sum(u.weights * np.abs(u.values) ** pv))


def _terms(parts):
    """Flatten (|u|, p, w) triples to log-space arrays over nonzero cells."""
    la, pv, lw = [], [], []
    for mag, exps, w in parts:
        keep = (mag > 0) & (w > 0)
        la.append(np.log(mag[keep]))
        pv.append(exps[keep])
        lw.append(np.log(w[keep]))
    return np.concatenate(la), np.concatenate(pv), np.concatenate(lw)


def _norm(parts, measure):
    log_a, pv, log_w = _terms(parts)
    if log_a.size == 0:
        return 0.0
    if np.any(pv < 1):
        raise ExponentError("exponent samples must be >= 1")

    def phi(s):
        return logsumexp(log_w + pv * (log_a - s))

    s = float(log_a.max() + np.log(measure) / pv.min())
    step = np.log(2.0)
    lo = hi = s
    for _ in range(MAX_BRACKET_STEPS):
        if phi(lo) > 0:
            break
        lo -= step
    for _ in range(MAX_BRACKET_STEPS):
        if phi(hi) < 0:
            break
        hi += step
    if not (phi(lo) > 0 > phi(hi)):
        if phi(lo) == 0:
            return float(np.exp(lo))
        if phi(hi) == 0:
            return float(np.exp(hi))
        raise ConvergenceError("could not bracket the Luxemburg norm")
    root, info = brentq(phi, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500,
                        full_output=True, disp=False)
    if not info.converged or not np.isfinite(root):
        raise ConvergenceError(f"norm root-finding did not converge: {info.flag}")
    return float(np.exp(root))


def luxemburg_norm(u, p):
    """inf{lam > 0 : modular(u / lam) <= 1}."""
    pv = _exponent(p, u)
    return _norm([(np.abs(u.values), pv, u.weights)], u.measure)


def sobolev_norm(u, grad_u, p):
    """Luxemburg norm for the modular of |u|^p + |grad u|^p."""
    comps = [grad_u] if isinstance(grad_u, SampledField) else list(grad_u)
    _check(u, *comps)
    pv = _exponent(p, u)
    return _norm([(np.abs(u.values), pv, u.weights), (_magnitude(comps), pv, u.weights)], u.measure)


def sobolev_modular(u, grad_u, p):
    comps = [grad_u] if isinstance(grad_u, SampledField) else list(grad_u)
    _check(u, *comps)
    pv = _exponent(p, u)
    return float(np.sum(u.weights * (np.abs(u.values) ** pv + _magnitude(comps) ** pv)))


def coercive_modular(u, grad_u, p, h):
    """Sum of weights * (|grad u|^p + h |u|^p); may be negative."""
    comps = [grad_u] if isinstance(grad_u, SampledField) else list(grad_u)
    _check(u, *comps)
    pv = _exponent(p, u)
    hv = _exponent(h, u)
    return float(np.sum(u.weights * (_magnitude(comps) ** pv + hv * np.abs(u.values) ** pv)))


@dataclass(frozen=True)
class HolderResult:
    lhs: float
    rhs: float
    satisfied: bool


def holder_check(f, g, p, q):
    """Compare ||fg||_s with ((s/p)^+ + (s/q)^+) ||f||_p ||g||_q."""
    _check(f, g)
    pv, qv = _exponent(p, f), _exponent(q, f)
    s = 1.0 / (1.0 / pv + 1.0 / qv)
    if np.any(s < 1 - 1e-12):
        raise ExponentError("1/s = 1/p + 1/q requires s >= 1 everywhere")
    s = np.maximum(s, 1.0)
    lhs = _norm([(np.abs(f.values * g.values), s, f.weights)], f.measure)
    const = float(np.max(s / pv) + np.max(s / qv))
    rhs = const * luxemburg_norm(f, pv) * luxemburg_norm(g, qv)
    return HolderResult(lhs, rhs, lhs <= rhs + 1e-10)


def brezis_lieb_defect(f_seq, f, p):
    """d_n = rho(f_n) - rho(f - f_n) - rho(f) for each member of f_seq."""
    rho_f = modular(f, p)
    out = []
    for fn in f_seq:
        _check(f, fn)
        out.append(modular(fn, p) - modular(f.with_values(f.values - fn.values), p) - rho_f)
    return out


def translating_bump(f, centers, width=0.1, height=1.0, axis=0):
    """f + height * b((x - c) / width) for a C^2 compact bump b and each centre c."""
    x = f.mesh()[axis]
    seq = []
    for c in centers:
        z = np.clip(1.0 - ((x - c) / width) ** 2, 0.0, None)
        seq.append(f.with_values(f.values + height * z ** 3))
    return seq


def norm_relations(u, p):
    """Executable modular/norm relations for a single field."""
    pv = _exponent(p, u)
    norm = luxemburg_norm(u, pv)
    rho = modular(u, pv)
    pmin, pmax = float(pv.min()), float(pv.max())
    out = {"norm": norm, "modular": rho, "p_min": pmin, "p_max": pmax}
    if norm == 0:
        out.update(unit_modular=True, sign_agreement=rho == 0, power_bounds=True)
        return out

    def le(a, b):
        return a <= b + 1e-9 * max(1.0, abs(b))

    out["unit_modular_deviation"] = abs(modular(u * (1.0 / norm), pv) - 1.0)
    out["unit_modular"] = out["unit_modular_deviation"] <= 1e-8
    gap = norm - 1.0
    out["sign_agreement"] = abs(gap) < 1e-12 or np.sign(gap) == np.sign(rho - 1.0)
    if norm > 1:
        out["power_bounds"] = le(norm ** pmin, rho) and le(rho, norm ** pmax)
    else:
        out["power_bounds"] = le(norm ** pmax, rho) and le(rho, norm ** pmin)
    return out


def scaling_comovement(u, p, factors):
    """Norms and modulars along u * c for increasing c move together."""
    factors = sorted(factors)
    norms = [luxemburg_norm(u * c, p) for c in factors]
    mods = [modular(u * c, p) for c in factors]
    return bool(np.all(np.diff(norms) > 0) and np.all(np.diff(mods) > 0)), norms, mods


def coercivity_probe(p, h, n_samples=64, modes=3, seed=0):
    """Minimum of J(u) over random trigonometric fields of unit Sobolev norm.

    ``p`` and ``h`` are SampledFields on the box grid; u is a random
    combination of cos(k pi x) products with its exact gradient.
    """
    _check(p, h)
    rng = np.random.default_rng(seed)
    grid = p.mesh()
    lo = [a[0] for a in p.axes]
    span = [a[-1] - a[0] if a.size > 1 else 1.0 for a in p.axes]
    best = np.inf
    for _ in range(n_samples):
        u = np.zeros(p.shape)
        grads = [np.zeros(p.shape) for _ in grid]
        for _ in range(modes):
            ks = rng.integers(0, 4, len(grid))
            c = rng.standard_normal()
            parts = [np.cos(np.pi * k * (x - a) / L) for k, x, a, L in zip(ks, grid, lo, span)]
            u += c * np.prod(parts, axis=0)
            for d in range(len(grid)):
                dpart = -np.pi * ks[d] / span[d] * np.sin(np.pi * ks[d] * (grid[d] - lo[d]) / span[d])
                others = [parts[j] for j in range(len(grid)) if j != d]
                grads[d] += c * dpart * np.prod(others, axis=0) if others else c * dpart
        uf = p.with_values(u)
        gf = [p.with_values(g) for g in grads]
        lam = sobolev_norm(uf, gf, p)
        if lam == 0:
            continue
        best = min(best, coercive_modular(uf * (1 / lam), [g * (1 / lam) for g in gf], p, h))
    return float(best)
