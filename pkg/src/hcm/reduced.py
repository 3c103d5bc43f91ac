"""One-dimensional hub maps g(y) = sigma y + beta * hbar(y) and their attractors.

hbar(y) is the average of h(y, x) over the neighbour coordinate x; for a
Fourier table only the terms whose neighbour basis function is the constant
survive, so hbar is exact.  With sigma = 2 and the sine preset,
g is T_beta(z) = 2z - beta sin(2 pi z).
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from hcm.coupling import TWO_PI, CouplingSpec, basis, basis_deriv, basis_deriv2
from hcm.torus import SplitMix64, append_digits, circle_dist, derive_key, signed_circle_diff, wrap

EXPANDING = "Expanding"
PERIODIC = "PeriodicAttractor"
UNRESOLVED = "Unresolved"


@dataclass(frozen=True)
class MeanField:
    """hbar(y) = sum c * b_k(y) over (k, c) pairs."""

    terms: tuple

    def __call__(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros_like(y)
        for k, c in self.terms:
            out = out + c * basis(k, y)
        return out

    def deriv(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros_like(y)
        for k, c in self.terms:
            out = out + c * basis_deriv(k, y)
        return out

    def deriv2(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros_like(y)
        for k, c in self.terms:
            out = out + c * basis_deriv2(k, y)
        return out

    @property
    def deriv_lipschitz(self) -> float:
        """Upper bound on |hbar''|."""
        return float(sum(abs(c) * (TWO_PI * abs(k)) ** 2 for k, c in self.terms))

    @property
    def is_zero(self) -> bool:
        return all(c == 0 for _, c in self.terms)


def mean_field_integral(h: CouplingSpec) -> MeanField:
    if h.kind in ("sine", "huygens"):
        return MeanField(((-1, -1.0),))
    acc: dict[int, float] = {}
    for s1, s2, c in h.terms:
        if s1 == 0:
            acc[int(s2)] = acc.get(int(s2), 0.0) + c
    return MeanField(tuple(sorted((k, c) for k, c in acc.items() if c != 0)))


@dataclass(frozen=True)
class ReducedMap:
    sigma: int
    beta: float
    mean_field: MeanField

    def lift(self, y):
        y = np.asarray(y, dtype=np.float64)
        out = self.sigma * y + self.beta * self.mean_field(y)
        return float(out) if out.ndim == 0 else out

    def __call__(self, y):
        return wrap(self.lift(y))

    def deriv(self, y):
        d = self.sigma + self.beta * self.mean_field.deriv(y)
        d = np.asarray(d, dtype=np.float64)
        return float(d) if d.ndim == 0 else d

    @property
    def deriv_lipschitz(self) -> float:
        return abs(self.beta) * self.mean_field.deriv_lipschitz

    def iterate(self, y: float, n: int) -> float:
        for _ in range(n):
            y = self(y)
        return y

    def orbit(self, y: float, n: int) -> np.ndarray:
        out = np.empty(n)
        for i in range(n):
            out[i] = y
            y = self(y)
        return out


def make_reduced(sigma: int, alpha: float, kappa: float, h: CouplingSpec) -> ReducedMap:
    if not 0 < kappa <= 1:
        raise ValueError("kappa must lie in (0, 1]")
    return ReducedMap(int(sigma), float(alpha) * float(kappa), mean_field_integral(h))


def tent_family(beta: float, sigma: int = 2) -> ReducedMap:
    """T_beta(z) = sigma z - beta sin(2 pi z)."""
    return ReducedMap(sigma, float(beta), MeanField(((-1, -1.0),)))


@dataclass
class AttractorReport:
    regime: str
    orbit: list = field(default_factory=list)
    period: int = 0
    multiplier: float = float("nan")
    min_abs_derivative: float = float("nan")
    attractors: list = field(default_factory=list)  # every (orbit, multiplier) found


def certify_expanding(g: ReducedMap, n_grid: int = 10_000) -> tuple[bool, float]:
    """(certified, lower bound on min |g'|) from a grid plus Lipschitz slack."""
    grid = np.arange(n_grid) / n_grid
    m = float(np.min(np.abs(g.deriv(grid))))
    bound = m - g.deriv_lipschitz * 0.5 / n_grid
    return bound > 1.0, bound


def critical_points(g: ReducedMap, n_grid: int = 10_000, iters: int = 80) -> list[float]:
    grid = np.arange(n_grid + 1) / n_grid
    d = g.deriv(grid)
    out = []
    for i in np.nonzero(np.sign(d[:-1]) != np.sign(d[1:]))[0]:
        a, b = grid[i], grid[i + 1]
        da = d[i]
        for _ in range(iters):
            m = 0.5 * (a + b)
            dm = g.deriv(m)
            if (dm > 0) == (da > 0):
                a, da = m, dm
            else:
                b = m
        out.append(wrap(0.5 * (a + b)))
    return out


def _return_map(g: ReducedMap, z: float, p: int) -> tuple[float, float]:
    """(signed g^p(z) - z on the circle, derivative of g^p at z)."""
    y, dprod = z, 1.0
    for _ in range(p):
        dprod *= g.deriv(y)
        y = g(y)
    return float(signed_circle_diff(y, z)), dprod


def find_orbit(g: ReducedMap, z0: float, tol: float = 1e-10, max_period: int = 8, burn_in: int = 2000):
    """Attracting periodic orbit reached from z0, as (orbit, multiplier) or None.

    The orbit starts at the refined image of g^burn_in(z0).
    """
    z = float(g.iterate(float(z0), burn_in))
    return _refine_orbit(g, z, tol, max_period)


def _refine_orbit(g: ReducedMap, z: float, tol: float, max_period: int):
    for p in range(1, max_period + 1):
        r, _ = _return_map(g, z, p)
        if abs(r) > 1e-3:
            continue
        w = z
        for _ in range(60):
            r, dp = _return_map(g, w, p)
            if abs(r) < tol * 1e-2 or dp == 1.0:
                break
            w = wrap(w - r / (dp - 1.0))
        r, mult = _return_map(g, w, p)
        if abs(r) >= tol or not abs(mult) < 1.0 - 1e-6:
            continue
        # confirm over three cycles
        if circle_dist(g.iterate(w, 3 * p), w) > 10 * tol:
            continue
        orb = [w]
        for _ in range(p - 1):
            orb.append(g(orb[-1]))
        return orb, mult
    return None


def _same_orbit(a, b, tol=1e-7) -> bool:
    if len(a) != len(b):
        return False
    return all(min(circle_dist(x, y) for y in b) < tol for x in a)


def classify(g: ReducedMap, tol: float = 1e-10, max_period: int = 8, burn_in: int = 2000) -> AttractorReport:
    if not tol > 0:
        raise ValueError("tol must be positive")
    ok, bound = certify_expanding(g)
    if ok:
        return AttractorReport(EXPANDING, min_abs_derivative=bound)
    seeds = critical_points(g) + [wrap(0.0137 + k / 16 + 1e-3 * math.sqrt(2)) for k in range(16)]
    ends = g.iterate(np.asarray(seeds, dtype=np.float64), burn_in)
    found = []
    for z in ends:
        res = _refine_orbit(g, float(z), tol, max_period)
        if res is None:
            continue
        if not any(_same_orbit(res[0], o) for o, _ in found):
            found.append(res)
    if not found:
        return AttractorReport(UNRESOLVED, min_abs_derivative=bound)
    orbit, mult = found[0]
    return AttractorReport(PERIODIC, orbit, len(orbit), mult, bound, found)


def regime_interval_check(beta: float) -> str:
    """Predicted regime of T_beta from the known interval structure."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    if beta < 1 / TWO_PI:
        return "Expanding"
    if 1 / TWO_PI < beta < 3 / TWO_PI:
        return "FixedPoint"
    if 3 / TWO_PI < beta <= 4 / TWO_PI:
        return "Period2"
    return "Unknown"


def bifurcation_scan(sigma: int, h: CouplingSpec, beta_grid, transient: int = 1000, keep: int = 1000, seed: int = 0):
    """List of (beta, kept samples) for g = sigma y + beta hbar(y)."""
    grid = list(beta_grid)
    if not grid:
        raise ValueError("empty beta grid")
    mf = mean_field_integral(h)
    key = derive_key(seed, 0xB1F)
    node = np.zeros(1, dtype=np.int64)
    z0 = SplitMix64(seed, 0xB1F0).random(1)[0]
    out = []
    for b in grid:
        g = ReducedMap(int(sigma), float(b), mf)
        refine = b == 0 or mf.is_zero
        z = np.array([z0])
        kept = np.empty(keep)
        for t in range(transient + keep):
            z = wrap(g.lift(z))
            if refine:
                z = append_digits(z, g.sigma, key, node, t)
            if t >= transient:
                kept[t - transient] = z[0]
        out.append((float(b), kept))
    return out


def write_bifurcation_csv(table, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["beta", "sample_index", "value"])
        for b, samples in table:
            for i, v in enumerate(samples.tolist()):
                w.writerow([f"{b:.17g}", i, f"{v:.17g}"])


def lyapunov_estimate(g: ReducedMap, n: int, z0: float | None = None, trace=None, seed: int = 0) -> float:
    """Mean of log|g'| along an orbit of g, or along a supplied trace."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if trace is not None:
        pts = np.asarray(trace, dtype=np.float64)[:n]
    else:
        z = SplitMix64(seed, 0x1A9).random(1)[0] if z0 is None else float(z0)
        pts = g.orbit(z, n)
    return float(np.mean(np.log(np.abs(g.deriv(pts)))))


@dataclass
class ShadowResult:
    holds: bool
    sup_dist: float
    first_violation_t: int | None
    phase: int
    mirrored: bool


def shadow_check(trace, report: AttractorReport, xi: float, t_start: int = 0) -> ShadowResult:
    """Does some phase of the orbit (or its mirror) stay within xi of the trace?"""
    if report.regime != PERIODIC:
        raise ValueError("shadow_check needs a periodic attractor")
    tr = np.asarray(trace, dtype=np.float64)[t_start:]
    p = report.period
    orbit = np.asarray(report.orbit, dtype=np.float64)
    cands = [(orbit, False)]
    mirror = wrap(-orbit)
    if not _same_orbit(list(orbit), list(mirror)):
        cands.append((mirror, True))
    best = None
    idx = np.arange(len(tr))
    for orb, mirrored in cands:
        for ph in range(p):
            d = circle_dist(tr, orb[(idx + ph) % p])
            sup = float(np.max(d)) if len(d) else 0.0
            if best is None or sup < best[0]:
                viol = np.nonzero(d > xi)[0]
                first = int(viol[0]) + t_start if len(viol) else None
                best = (sup, first, ph, mirrored)
    sup, first, ph, mirrored = best
    return ShadowResult(sup <= xi, sup, first, ph, mirrored)
