"""Hub fluctuations around the mean field, bad-set tests and survival runs.

Hub indices ``j`` run over 0..M-1 and address node ``L + j``.
"""
from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from hcm import _kernels
from hcm.coupling import CouplingSpec, basis, basis_mean
from hcm.dynamics import SimState, SystemConfig
from hcm.netgen import NetworkGraph, degree_profile
from hcm.torus import SplitMix64, derive_key


def xi(state: SimState, j: int, config: SystemConfig) -> float:
    """alpha [ (1/Delta) sum_n A_jn h(y_j, z_n) - kappa_j hbar(y_j) ] for hub j."""
    g = config.graph
    if not 0 <= j < g.n_hubs:
        raise ValueError(f"hub index {j} out of range")
    if len(state.z) != g.n_nodes:
        raise ValueError("state length does not match graph")
    if config.alpha == 0:
        return 0.0
    return float(config.engine.xi(np.asarray(state.z, dtype=np.float64), [j])[0])


def xi_all(z, config: SystemConfig) -> np.ndarray:
    if config.alpha == 0:
        return np.zeros(config.graph.n_hubs)
    return config.engine.xi(np.asarray(z, dtype=np.float64))


@dataclass(frozen=True)
class BadSetQuery:
    eps: float
    s1: int
    hub: int

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.s1 == 0:
            raise ValueError("s1 must be nonzero")


def low_deviations(low_state, graph: NetworkGraph, s1_list) -> np.ndarray:
    """(M, K) table of (1/Delta) sum_{low i} A_ji b_s1(x_i) - kappa_j mean(b_s1)."""
    L, N, M = graph.n_low, graph.n_nodes, graph.n_hubs
    x = np.asarray(low_state, dtype=np.float64)
    if len(x) != L:
        raise ValueError(f"low state length {len(x)} != L = {L}")
    prof = degree_profile(graph)
    if prof.delta_max == 0:
        raise ValueError("Delta must be positive")
    s1_list = [int(s) for s in s1_list]
    z = np.zeros(N)
    z[:L] = x
    B = np.empty((N, len(s1_list)))
    for r, s in enumerate(s1_list):
        B[:, r] = basis(s, z)
    S = np.empty((M, len(s1_list)))
    _kernels.basis_sums(
        np.ascontiguousarray(graph.indptr, dtype=np.int64),
        np.ascontiguousarray(graph.indices, dtype=np.int64),
        B, np.arange(len(s1_list), dtype=np.int64),
        np.arange(L, N, dtype=np.int64), 0, L, S,
    )
    means = np.array([basis_mean(s) for s in s1_list])
    return S / prof.delta_max - np.asarray(prof.kappas)[:, None] * means[None, :]


def bad_set_member(low_state, q: BadSetQuery, graph: NetworkGraph, h: CouplingSpec) -> bool:
    if q.s1 not in h.neighbor_support:
        raise ValueError(f"s1={q.s1} is outside the coupling's neighbour support")
    if not 0 <= q.hub < graph.n_hubs:
        raise ValueError("hub index out of range")
    dev = low_deviations(low_state, graph, [q.s1])[q.hub, 0]
    return bool(abs(dev) > q.eps * abs(q.s1))


def in_Q(low_state, eps: float, graph: NetworkGraph, h: CouplingSpec) -> bool:
    """True iff no hub is in any bad set B_eps^(s1, j) for s1 in the support."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    support = h.neighbor_support
    if graph.n_hubs == 0 or not support:
        return True
    dev = low_deviations(low_state, graph, support)
    thresh = eps * np.abs(np.asarray(support, dtype=np.float64))
    return not bool(np.any(np.abs(dev) > thresh[None, :]))


def hoeffding_term_bound(delta: float, eps: float, kappa: float, s1: int) -> float:
    """min(1, 2 exp(-Delta eps^2 s1^2 / (2 kappa)))."""
    if not (delta > 0 and eps > 0 and 0 < kappa <= 1 and s1 != 0):
        raise ValueError("need Delta > 0, eps > 0, 0 < kappa <= 1, s1 != 0")
    return min(1.0, 2.0 * math.exp(-delta * eps**2 * s1**2 / (2.0 * kappa)))


def hoeffding_union_bound(delta: float, eps: float, M: int) -> float:
    """min(1, 4 M e^{-x} / (1 - e^{-x})) with x = Delta eps^2 / 2."""
    if M < 0:
        raise ValueError("M must be >= 0")
    if M == 0:
        return 0.0
    if not (delta > 0 and eps > 0):
        raise ValueError("need Delta > 0 and eps > 0")
    x = delta * eps**2 / 2.0
    q = math.exp(-x)
    if q >= 1.0:
        return 1.0
    return min(1.0, 4.0 * M * q / (1.0 - q))


def star_fluctuation_bound(L: int, eps: float, alpha: float) -> float:
    """P(|(alpha/L) sum sin 2 pi x_i| > eps) <= 2 exp(-L (eps/alpha)^2 / 2)."""
    if alpha == 0:
        return 0.0
    return min(1.0, 2.0 * math.exp(-L * (eps / alpha) ** 2 / 2.0))


@dataclass
class SurvivalResult:
    fraction: float
    first_hit: np.ndarray  # per trial, inf if no hit in [0, T]
    hub_first_hit: np.ndarray  # (trials, M)
    xi0: np.ndarray  # (trials, M) fluctuations of the initial states

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["trial", "first_hit_t", "survived"])
            for i, t in enumerate(self.first_hit.tolist()):
                surv = math.isinf(t)
                w.writerow([i, "inf" if surv else int(t), int(surv)])


def trial_state(n: int, seed: int, trial: int) -> SimState:
    """Uniform initial state owned by one trial, with its own digit stream."""
    z = SplitMix64(seed, 0x5E7).spawn(trial).random(n)
    return SimState(z, 0, derive_key(seed, 0x7A11, trial))


def _run_trial(config: SystemConfig, eps: float, T: int, seed: int, trial: int):
    eng = config.engine
    st = trial_state(config.graph.n_nodes, seed, trial)
    z, key = st.z, st.tail_key
    M = config.graph.n_hubs
    hub_hit = np.full(M, np.inf)
    xi0 = None
    for t in range(T + 1):
        if config.alpha == 0:
            xs = np.zeros(M)
            z = eng.step(z, t, key)
        else:
            z_next, xs = eng.step(z, t, key, want_xi=True)
            z = z_next
        if xi0 is None:
            xi0 = xs.copy()
        hit = (np.abs(xs) > eps) & np.isinf(hub_hit)
        hub_hit[hit] = t
        if np.all(np.isfinite(hub_hit)):
            break
    return (float(hub_hit.min()) if M else np.inf), hub_hit, xi0


def survival_experiment(
    config: SystemConfig, eps: float, T: int, n_trials: int, seed: int, threads: int = 1
) -> SurvivalResult:
    """Run F from uniform initial states; first t <= T with max_j |xi_j| > eps."""
    if T < 1 or n_trials < 1:
        raise ValueError("need T >= 1 and n_trials >= 1")
    if not eps > 0:
        raise ValueError("eps must be positive")
    config.engine  # build once before threads share it
    run = lambda i: _run_trial(config, eps, T, seed, i)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res = list(ex.map(run, range(n_trials)))
    else:
        res = [run(i) for i in range(n_trials)]
    first = np.array([r[0] for r in res])
    hubs = np.stack([r[1] for r in res]) if res else np.zeros((0, 0))
    xi0 = np.stack([r[2] for r in res])
    return SurvivalResult(float(np.mean(np.isinf(first))), first, hubs, xi0)


@dataclass
class FluctuationTrace:
    hubs: np.ndarray
    times: np.ndarray
    values: np.ndarray  # (len(hubs), len(times))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "hub", "xi"])
            for ti, t in enumerate(self.times.tolist()):
                for hi, j in enumerate(self.hubs.tolist()):
                    w.writerow([t, j, f"{self.values[hi, ti]:.17g}"])


def fluctuation_trace(config: SystemConfig, initial: SimState, T: int, hubs=None) -> FluctuationTrace:
    """xi_j(z(t)) for t = 0..T."""
    M = config.graph.n_hubs
    hubs = np.arange(M) if hubs is None else np.asarray(list(hubs), dtype=np.int64)
    if np.any((hubs < 0) | (hubs >= M)):
        raise ValueError("hub index out of range")
    eng = config.engine
    z = np.asarray(initial.z, dtype=np.float64)
    vals = np.zeros((len(hubs), T + 1))
    for k in range(T + 1):
        if config.alpha != 0:
            z_next, xs = eng.step(z, initial.t + k, initial.tail_key, want_xi=True)
            vals[:, k] = xs[hubs]
        else:
            z_next = eng.step(z, initial.t + k, initial.tail_key)
        z = z_next
    return FluctuationTrace(hubs, np.arange(initial.t, initial.t + T + 1), vals)
