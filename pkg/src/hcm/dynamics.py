"""Coupled map dynamics on a network.

    z_i' = sigma z_i + (alpha / Delta) sum_n A_in h(z_i, z_n)   mod 1

updated synchronously from the previous state.  The truncated variant
clamps, for every hub, the low-neighbour empirical Fourier averages through
a cutoff before they enter the hub update.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

import numpy as np

from hcm import _kernels
from hcm.coupling import CouplingSpec, basis, basis_mean
from hcm.netgen import NetworkGraph, degree_profile
from hcm.reduced import mean_field_integral
from hcm.torus import (
    SplitMix64,
    append_digits,
    circle_dist,
    derive_key,
    sample_uniform,
    wrap,
    wrap_unchecked,
)


@dataclass(frozen=True)
class SystemConfig:
    sigma: int
    alpha: float
    graph: NetworkGraph
    coupling: CouplingSpec

    def __post_init__(self):
        if int(self.sigma) != self.sigma or self.sigma < 2:
            raise ValueError("sigma must be an integer >= 2")
        if not math.isfinite(self.alpha):
            raise ValueError("alpha must be finite")
        if self.alpha != 0 and degree_profile(self.graph).delta_max == 0:
            raise ValueError("Delta must be positive when alpha != 0")

    @cached_property
    def engine(self) -> "_Engine":
        return _Engine(self)


@dataclass(frozen=True)
class SimState:
    z: np.ndarray
    t: int = 0
    tail_key: Optional[int] = None
    """Key of the digit stream refilling uncoupled orbits (None: plain floating point)."""

    @classmethod
    def uniform(cls, n: int, seed: int, refine: bool = True) -> "SimState":
        z = sample_uniform(n, seed, 0x5747)
        return cls(z, 0, derive_key(seed, 0x7A11) if refine else None)


def cutoff(t, eps: float):
    """Odd C^1 clamp: identity on |t| <= eps, +-2 eps beyond 2 eps.

    On eps < |t| < 2 eps a cubic Hermite blend with end values (eps, 2 eps) and
    end slopes (1, 0); the derivative never exceeds 4/3.
    """
    if not eps > 0:
        raise ValueError("cutoff needs eps > 0")
    t = np.asarray(t, dtype=np.float64)
    u = np.abs(t)
    s = np.clip((u - eps) / eps, 0.0, 1.0)
    blend = eps * (1.0 + s + s * s - s**3)
    out = np.where(u <= eps, t, np.where(u >= 2 * eps, np.copysign(2 * eps, t), np.copysign(blend, t)))
    return float(out) if out.ndim == 0 else out


def cutoff_deriv(t, eps: float):
    t = np.asarray(t, dtype=np.float64)
    u = np.abs(t)
    s = (u - eps) / eps
    d = np.where(u <= eps, 1.0, np.where(u >= 2 * eps, 0.0, -3 * s * s + 2 * s + 1.0))
    return float(d) if d.ndim == 0 else d


class _Engine:
    """Precomputed index tables for one SystemConfig."""

    def __init__(self, cfg: SystemConfig):
        g = cfg.graph
        self.cfg = cfg
        self.N, self.L, self.M = g.n_nodes, g.n_low, g.n_hubs
        self.indptr = np.ascontiguousarray(g.indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(g.indices, dtype=np.int64)
        prof = degree_profile(g)
        self.delta = prof.delta_max
        self.kappa = np.asarray(prof.kappas, dtype=np.float64)
        self.sigma = int(cfg.sigma)
        self.alpha = float(cfg.alpha)
        self.scale = self.alpha / self.delta if self.delta else 0.0

        terms = cfg.coupling.terms
        ks = sorted({int(s) for t in terms for s in t[:2]})
        pos = {k: i for i, k in enumerate(ks)}
        self.basis_ks = ks
        self.nb_idx = np.array([pos[int(t[0])] for t in terms], dtype=np.int64)
        self.self_idx = np.array([pos[int(t[1])] for t in terms], dtype=np.int64)
        self.coef = np.array([t[2] for t in terms], dtype=np.float64)
        s1s = sorted({int(t[0]) for t in terms})
        self.s1_list = s1s
        self.s1_rows = np.array([pos[s] for s in s1s], dtype=np.int64)
        self.s1_freq = np.array([abs(s) for s in s1s], dtype=np.float64)
        self.s1_mean = np.array([basis_mean(s) for s in s1s])
        self.term_s1col = np.array([s1s.index(int(t[0])) for t in terms], dtype=np.int64)
        self.mean_field = mean_field_integral(cfg.coupling)

        self.all_rows = np.arange(self.N, dtype=np.int64)
        self.hub_rows = np.arange(self.L, self.N, dtype=np.int64)
        deg = g.in_degrees
        if self.alpha == 0:
            self.free_nodes = self.all_rows
        else:
            self.free_nodes = np.nonzero(deg == 0)[0].astype(np.int64)

    def basis_matrix(self, z: np.ndarray) -> np.ndarray:
        B = np.empty((len(z), len(self.basis_ks)))
        for r, k in enumerate(self.basis_ks):
            B[:, r] = basis(k, z)
        return B

    def coupling_sums(self, B, rows, lo=0, hi=None) -> np.ndarray:
        out = np.empty(len(rows))
        _kernels.coupling_sums(
            self.indptr, self.indices, B, self.nb_idx, self.self_idx, self.coef,
            rows, lo, self.N if hi is None else hi, out,
        )
        return out

    def low_deviations(self, B) -> np.ndarray:
        """(M, K): (1/Delta) sum_{low n} A_jn b_{s1}(z_n) - kappa_j mean(b_{s1})."""
        S = np.empty((self.M, len(self.s1_list)))
        _kernels.basis_sums(self.indptr, self.indices, B, self.s1_rows, self.hub_rows, 0, self.L, S)
        return S / self.delta - self.kappa[:, None] * self.s1_mean[None, :]

    def step(self, z: np.ndarray, t: int, tail_key, eps=None, want_xi: bool = False):
        """F(z) (or F_eps(z)); with ``want_xi`` also the hub fluctuations at z."""
        if self.alpha == 0:
            new = self.sigma * z
            xi = np.zeros(self.M)
        else:
            B = self.basis_matrix(z)
            acc = self.coupling_sums(B, self.all_rows)
            new = self.sigma * z + self.scale * acc
            if want_xi:
                y = z[self.L:]
                xi = self.alpha * (acc[self.L:] / self.delta - self.kappa * self.mean_field(y))
            if eps is not None and self.M:
                self._truncate_hubs(z, B, new, eps)
        new = wrap_unchecked(new)
        if tail_key is not None and len(self.free_nodes):
            new[self.free_nodes] = append_digits(
                new[self.free_nodes], self.sigma, tail_key, self.free_nodes, t
            )
        return (new, xi) if want_xi else new

    def _truncate_hubs(self, z, B, new, eps):
        dev = self.low_deviations(B)
        thresh = eps * self.s1_freq
        over = (self.s1_freq[None, :] > 0) & (np.abs(dev) > thresh[None, :])
        active = np.nonzero(over.any(axis=1))[0]
        if len(active) == 0:
            return
        dz = dev[active].copy()
        for k, f in enumerate(self.s1_freq):
            if f > 0:
                dz[:, k] = cutoff(dz[:, k], eps * f)
        hubs = self.hub_rows[active]
        y = z[hubs]
        xi = np.zeros(len(active))
        for t in range(len(self.coef)):
            xi += self.coef[t] * dz[:, self.term_s1col[t]] * B[hubs, self.self_idx[t]]
        hub_hub = self.coupling_sums(B, hubs, self.L, self.N)
        xi = self.alpha * xi + self.scale * hub_hub
        new[hubs] = self.sigma * y + self.alpha * self.kappa[active] * self.mean_field(y) + xi

    def xi(self, z: np.ndarray, hubs=None) -> np.ndarray:
        """Mean-field fluctuation of each hub (indices 0..M-1)."""
        hubs = np.arange(self.M) if hubs is None else np.asarray(hubs, dtype=np.int64)
        rows = self.hub_rows[hubs]
        B = self.basis_matrix(z)
        acc = self.coupling_sums(B, rows)
        return self.alpha * (acc / self.delta - self.kappa[hubs] * self.mean_field(z[rows]))


def _check(state: SimState, config: SystemConfig):
    if len(state.z) != config.graph.n_nodes:
        raise ValueError(f"state length {len(state.z)} != N = {config.graph.n_nodes}")


def step(state: SimState, config: SystemConfig) -> SimState:
    _check(state, config)
    z = config.engine.step(np.asarray(state.z, dtype=np.float64), state.t, state.tail_key)
    return SimState(z, state.t + 1, state.tail_key)


def step_truncated(state: SimState, config: SystemConfig, eps: float) -> SimState:
    if not eps > 0:
        raise ValueError("eps must be positive")
    _check(state, config)
    z = config.engine.step(np.asarray(state.z, dtype=np.float64), state.t, state.tail_key, eps)
    return SimState(z, state.t + 1, state.tail_key)


def step_star(state: SimState, config: SystemConfig) -> SimState:
    """Direct stepper for a star graph with the sine coupling.

    Hub: y' = sigma y + (alpha/L) sum_i (sin 2 pi x_i - sin 2 pi y); leaves: x' = sigma x.
    """
    g = config.graph
    if g.meta.get("generator") != "star" or config.coupling.kind != "sine":
        raise ValueError("step_star needs a star graph and the sine coupling")
    _check(state, config)
    z = np.asarray(state.z, dtype=np.float64)
    L = g.n_low
    s = np.sin(2.0 * math.pi * z)
    acc = np.zeros(len(z))
    if config.alpha != 0:
        acc[L] = np.cumsum(s[:L] - s[L])[-1]
    new = config.sigma * z + (config.alpha / L) * acc if config.alpha != 0 else config.sigma * z
    new = wrap_unchecked(new)
    if state.tail_key is not None:
        free = np.arange(len(z)) if config.alpha == 0 else np.arange(L)
        new[free] = append_digits(new[free], config.sigma, state.tail_key, free, state.t)
    return SimState(new, state.t + 1, state.tail_key)


@dataclass
class Trajectory:
    nodes: np.ndarray
    times: np.ndarray
    values: np.ndarray  # (len(nodes), len(times))

    def trace(self, node: int) -> np.ndarray:
        return self.values[int(np.nonzero(self.nodes == node)[0][0])]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "node", "value"])
            for ti, t in enumerate(self.times.tolist()):
                for ni, n in enumerate(self.nodes.tolist()):
                    w.writerow([t, n, f"{self.values[ni, ti]:.17g}"])

    @classmethod
    def read_csv(cls, path) -> "Trajectory":
        rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        times = np.unique(rows[:, 0]).astype(np.int64)
        nodes = np.unique(rows[:, 1]).astype(np.int64)
        vals = np.empty((len(nodes), len(times)))
        ti = np.searchsorted(times, rows[:, 0].astype(np.int64))
        ni = np.searchsorted(nodes, rows[:, 1].astype(np.int64))
        vals[ni, ti] = rows[:, 2]
        return cls(nodes, times, vals)


def simulate(
    config: SystemConfig,
    initial: SimState,
    T: int,
    record: Iterable[int] | None = None,
    stride: int = 1,
    truncated_eps: float | None = None,
) -> Trajectory:
    """Run T steps, recording ``record`` nodes at t = 0, stride, 2*stride, ..."""
    if T < 0 or stride < 1:
        raise ValueError("need T >= 0 and stride >= 1")
    _check(initial, config)
    nodes = np.arange(config.graph.n_nodes) if record is None else np.asarray(list(record), dtype=np.int64)
    eng = config.engine
    z = np.asarray(initial.z, dtype=np.float64).copy()
    t0 = initial.t
    times = [t0]
    cols = [z[nodes].copy()]
    for k in range(1, T + 1):
        z = eng.step(z, t0 + k - 1, initial.tail_key, truncated_eps)
        if k % stride == 0:
            times.append(t0 + k)
            cols.append(z[nodes].copy())
    return Trajectory(nodes, np.asarray(times), np.stack(cols, axis=1))


def write_state(state: SimState, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node", "value"])
        for i, v in enumerate(np.asarray(state.z).tolist()):
            w.writerow([i, f"{v:.17g}"])


def read_state(path, t: int = 0, tail_key=None) -> SimState:
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    z = np.empty(len(rows))
    z[rows[:, 0].astype(np.int64)] = rows[:, 1]
    return SimState(z, t, tail_key)


def sync_spread(z) -> float:
    """Largest pairwise circle distance, via sorted antipode search."""
    z = np.sort(np.asarray(z, dtype=np.float64))
    n = len(z)
    if n < 2:
        return 0.0
    target = wrap(z + 0.5)
    idx = np.searchsorted(z, target)
    best = 0.0
    for cand in (idx % n, (idx - 1) % n):
        best = max(best, float(np.max(circle_dist(z, z[cand]))))
    return best


@dataclass
class ProbeReport:
    spread: np.ndarray
    rate: float
    verdict: str  # attracting | repelling | inconclusive
    steps: int
    growth: np.ndarray = field(default_factory=lambda: np.zeros(0))


def sync_stability_probe(
    config: SystemConfig,
    perturb_size: float = 1e-3,
    T: int = 200,
    seed: int = 0,
    lower: float = 1e-8,
    upper: float = 0.1,
) -> ProbeReport:
    """Perturb a random point of the diagonal transversally and iterate F."""
    rng = SplitMix64(seed, 0x5A1C)
    n = config.graph.n_nodes
    c = rng.random(1)[0]
    u = 2.0 * rng.random(n) - 1.0
    u -= u.mean()
    u *= perturb_size / max(np.max(np.abs(u)), 1e-300)
    z = wrap(c + u)
    eng = config.engine
    spreads = [sync_spread(z)]
    verdict = "inconclusive"
    for t in range(T):
        z = eng.step(z, t, None)
        s = sync_spread(z)
        spreads.append(s)
        if s < lower:
            verdict = "attracting"
            break
        if s > upper:
            verdict = "repelling"
            break
    sp = np.asarray(spreads)
    good = sp > 0
    tt = np.arange(len(sp))[good]
    rate = float(np.polyfit(tt, np.log(sp[good]), 1)[0]) if good.sum() >= 2 else float("nan")
    growth = sp[1:] / np.where(sp[:-1] > 0, sp[:-1], np.nan)
    return ProbeReport(sp, rate, verdict, len(sp) - 1, growth)


def hub_coherence(a, b, max_shift: int):
    """(tau, sup_t dist(a(t), b(t + tau))) minimized over 0 <= tau <= max_shift."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) != len(b):
        raise ValueError("traces must have equal length")
    if max_shift < 0 or len(a) <= max_shift:
        raise ValueError("traces shorter than max_shift")
    best = (0, math.inf)
    for tau in range(max_shift + 1):
        d = float(np.max(circle_dist(a[: len(a) - tau], b[tau:])))
        if d < best[1]:
            best = (tau, d)
    return best
