"""Laplacian spectra and stability of the synchronized state.

Convention: L = D - A (positive semidefinite), eigenvalues
0 = lambda_1 <= lambda_2 <= ... <= lambda_N.  A transverse mode with Laplacian
eigenvalue lambda evolves, to first order, by

    v(t+1) = [sigma - (alpha lambda / Delta) * omega(s(t))] v(t),

where s(t) is the synchronized orbit and omega(s) = -h_1(s, s).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq
from scipy.sparse.linalg import lobpcg

from hcm import _kernels
from hcm.coupling import CouplingSpec
from hcm.netgen import NetworkGraph, bfs_eccentricities
from hcm.torus import append_digits, derive_key, sample_uniform, wrap

JACOBI_MAX_N = 300
DENSE_MAX_N = 4000


class EigenSolverError(RuntimeError):
    pass


def laplacian(g: NetworkGraph) -> np.ndarray:
    """Dense D - A of an undirected graph."""
    if g.directed:
        raise ValueError("laplacian needs an undirected graph")
    A = g.adjacency().toarray().astype(np.float64)
    return np.diag(A.sum(axis=1)) - A


def sparse_laplacian(g: NetworkGraph) -> sp.csr_matrix:
    if g.directed:
        raise ValueError("laplacian needs an undirected graph")
    A = g.adjacency().astype(np.float64)
    return (sp.diags(np.asarray(A.sum(axis=1)).ravel()) - A).tocsr()


@dataclass
class Spectrum:
    values: np.ndarray  # ascending
    vectors: Optional[np.ndarray] = None  # columns, when requested
    method: str = "jacobi"
    sweeps: int = 0

    @property
    def lambda2(self) -> float:
        return float(self.values[1]) if len(self.values) > 1 else 0.0

    @property
    def lambdaN(self) -> float:
        return float(self.values[-1]) if len(self.values) else 0.0


def jacobi_eigh(Lmat: np.ndarray, rel_tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi; raises EigenSolverError if the sweep cap is reached."""
    A = np.array(Lmat, dtype=np.float64, copy=True)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("square matrix required")
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(1.0, np.abs(A).max(initial=0))):
        raise ValueError("matrix is not symmetric")
    norm = float(np.linalg.norm(A))
    if A.shape[0] == 0:
        return np.zeros(0), np.zeros((0, 0)), 0
    d, V, sweeps, ok = _kernels.jacobi_eigh(A, rel_tol * max(norm, 1e-300), max_sweeps)
    if not ok:
        raise EigenSolverError(f"Jacobi did not converge in {max_sweeps} sweeps")
    order = np.argsort(d, kind="stable")
    return d[order], V[:, order], sweeps


def eig_extremes(Lmat: np.ndarray, method: str = "auto", vectors: bool = False) -> Spectrum:
    """Full ascending spectrum of a dense symmetric matrix.

    ``auto`` runs the in-repo Jacobi solver up to JACOBI_MAX_N and LAPACK above.
    """
    n = Lmat.shape[0]
    if method == "auto":
        method = "jacobi" if n <= JACOBI_MAX_N else "lapack"
    if method == "jacobi":
        d, V, sweeps = jacobi_eigh(Lmat)
        return Spectrum(d, V if vectors else None, "jacobi", sweeps)
    if method == "lapack":
        if vectors:
            d, V = np.linalg.eigh(Lmat)
            return Spectrum(d, V, "lapack")
        return Spectrum(np.linalg.eigvalsh(Lmat), None, "lapack")
    raise ValueError(f"unknown method {method!r}")


@dataclass
class SparseExtremes:
    """Rayleigh-quotient bounds: lambda2 <= lambda2_upper, lambdaN >= lambdaN_lower."""

    lambda2_upper: float
    lambdaN_lower: float
    iterations: int

    @property
    def ratio_lower(self) -> float:
        return self.lambdaN_lower / self.lambda2_upper if self.lambda2_upper > 0 else math.inf


def sparse_extremes(g: NetworkGraph, iters: int = 200, seed: int = 0) -> SparseExtremes:
    """LOBPCG estimates of lambda_N and of lambda_2 on the complement of 1.

    The reported numbers are Rayleigh quotients of the returned unit vectors,
    recomputed here: any unit vector bounds lambda_N from below, and any unit
    vector orthogonal to 1 bounds lambda_2 from above, so the ratio is a
    certified lower bound on lambda_N / lambda_2 whether or not LOBPCG has
    fully converged.
    """
    Ls = sparse_laplacian(g)
    n = Ls.shape[0]
    ones = np.ones((n, 1)) / math.sqrt(n)
    X = (sample_uniform(n, seed, 0x5BEC) - 0.5)[:, None]
    with warnings.catch_warnings():  # partial convergence still yields valid bounds
        warnings.simplefilter("ignore", UserWarning)
        _, V = lobpcg(Ls, X, largest=True, maxiter=iters, tol=1e-10)
        _, W = lobpcg(Ls, sample_uniform(n, seed, 0x5BED).reshape(n, 1) - 0.5, Y=ones, largest=False, maxiter=iters, tol=1e-10)
    v = V[:, 0] / np.linalg.norm(V[:, 0])
    lamN = float(v @ (Ls @ v))
    w = W[:, 0] - W[:, 0].mean()
    w /= np.linalg.norm(w)
    lam2 = float(w @ (Ls @ w))
    return SparseExtremes(lam2, lamN, iters)


def ring_eigs(n: int, k: int) -> np.ndarray:
    """Spectrum of the ring lattice, index order m = 0..N-1 (not sorted)."""
    if k < 0 or 2 * k >= n:
        raise ValueError("ring needs 2K < N")
    m = np.arange(1, n)
    dirichlet = np.sin((2 * k + 1) * np.pi * m / n) / np.sin(np.pi * m / n)
    return np.concatenate([[0.0], 2 * k + 1 - dirichlet])


def ring_ratio_asymptotic(n: int, k: int) -> float:
    return (3 * math.pi + 2) * n**2 / (2 * math.pi**3 * k**2)


@dataclass
class SpectralReport:
    lambda2: float
    lambdaN: float
    ratio: float
    threshold: float
    synchronizable: bool
    connected: bool
    alpha_interval: Optional[tuple] = None


def sync_report(spectrum: Spectrum, sigma: int, alpha_interval=None, zero_tol: float = 1e-9) -> SpectralReport:
    lam2, lamN = spectrum.lambda2, spectrum.lambdaN
    scale = max(1.0, abs(lamN))
    connected = lam2 > zero_tol * scale
    ratio = lamN / lam2 if connected else math.inf
    thr = (sigma + 1) / (sigma - 1)
    return SpectralReport(lam2, lamN, ratio, thr, bool(connected and ratio < thr), bool(connected), alpha_interval)


def _alpha_from_beta(b_lo: float, b_hi: float, lam2: float, lamN: float, delta: float):
    """alpha with alpha lambda_k / Delta inside (b_lo, b_hi) for all k >= 2."""
    if lam2 <= 0:
        return None
    if b_lo >= 0:
        lo, hi = b_lo * delta / lam2, b_hi * delta / lamN
    elif b_hi <= 0:
        lo, hi = b_lo * delta / lamN, b_hi * delta / lam2
    else:
        lo, hi = b_lo * delta / lamN, b_hi * delta / lamN
    return (lo, hi) if lo < hi else None


def alpha_interval(spectrum: Spectrum, sigma: int, dphi0: float, delta: float):
    """alpha with beta_c1 < (alpha/Delta) lambda_2 and (alpha/Delta) lambda_N < beta_c2."""
    if dphi0 == 0:
        raise ValueError("dphi0 must be nonzero")
    b1, b2 = (sigma - 1) / dphi0, (sigma + 1) / dphi0
    return _alpha_from_beta(min(b1, b2), max(b1, b2), spectrum.lambda2, spectrum.lambdaN, delta)


def reference_orbit(sigma: int, T: int, seed: int = 0) -> np.ndarray:
    """Typical orbit of s -> sigma s mod 1 (digits refilled below 2**-53)."""
    key = derive_key(seed, 0x0B17)
    node = np.zeros(1, dtype=np.int64)
    s = sample_uniform(1, seed, 0x0B16)
    out = np.empty(T)
    for t in range(T):
        out[t] = s[0]
        s = append_digits(wrap(sigma * s), sigma, key, node, t)
    return out


def omega_trace(h: CouplingSpec, sigma: int, T: int, seed: int = 0) -> np.ndarray:
    return np.asarray(h.omega(reference_orbit(sigma, T, seed)), dtype=np.float64)


def omega_samples(h: CouplingSpec, n: int = 1 << 16) -> np.ndarray:
    """omega on a midpoint grid: the Lebesgue average replaces the orbit average."""
    return np.asarray(h.omega((np.arange(n) + 0.5) / n), dtype=np.float64)


def dphi0_numeric(h: CouplingSpec, trace, step: float = 1e-5) -> float:
    """Orbit mean of the centred difference of h in the neighbour argument at (s, s)."""
    s = np.asarray(trace, dtype=np.float64)
    return float(np.mean((h.evaluate(s, s + step) - h.evaluate(s, s - step)) / (2 * step)))


def transverse_exponent(sigma: int, beta: float, omega) -> float:
    """Average of log|sigma - beta omega|: growth rate of a transverse mode."""
    w = np.abs(sigma - beta * np.asarray(omega, dtype=np.float64))
    with np.errstate(divide="ignore"):
        return float(np.mean(np.log(w)))


def beta_intervals_msf(sigma: int, omega, n_scan: int = 4001) -> list[tuple[float, float]]:
    """Maximal beta intervals on which the transverse exponent is negative."""
    omega = np.asarray(omega, dtype=np.float64)
    wmax = float(np.max(np.abs(omega)))
    if wmax == 0:
        return []
    bmax = 4.0 * (sigma + 1) / wmax
    grid = np.linspace(-bmax, bmax, n_scan)
    f = lambda b: transverse_exponent(sigma, b, omega)  # noqa: E731
    vals = np.array([f(b) for b in grid])
    neg = vals < 0
    out = []
    i = 0
    while i < len(grid):
        if not neg[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(grid) and neg[j + 1]:
            j += 1
        lo = brentq(f, grid[i - 1], grid[i], xtol=1e-14) if i > 0 else grid[0]
        hi = brentq(f, grid[j], grid[j + 1], xtol=1e-14) if j + 1 < len(grid) else grid[-1]
        out.append((float(lo), float(hi)))
        i = j + 1
    return out


def alpha_interval_msf(spectrum: Spectrum, sigma: int, omega, delta: float):
    """alpha placing every alpha lambda_k / Delta (k >= 2) in one stable beta interval."""
    best = None
    for b_lo, b_hi in beta_intervals_msf(sigma, omega):
        iv = _alpha_from_beta(b_lo, b_hi, spectrum.lambda2, spectrum.lambdaN, delta)
        if iv is not None and (best is None or iv[1] - iv[0] > best[1] - best[0]):
            best = iv
    return best


def coupling_alpha_interval(spectrum: Spectrum, sigma: int, h: CouplingSpec, delta: float):
    """Closed form for shift couplings; transverse-exponent route otherwise."""
    if h.is_pure_shift:
        return alpha_interval(spectrum, sigma, h.dphi0, delta)
    return alpha_interval_msf(spectrum, sigma, omega_samples(h), delta)


@dataclass
class AuditLine:
    name: str
    lhs: float
    rhs: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs


@dataclass
class BoundsAudit:
    diameter: float
    lines: list = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return all(x.holds for x in self.lines)

    def as_text(self) -> str:
        rows = [f"diameter={self.diameter:g}"]
        for x in self.lines:
            rows.append(f"{x.name}.lhs={x.lhs:.12g}")
            rows.append(f"{x.name}.rhs={x.rhs:.12g}")
            rows.append(f"{x.name}.holds={int(x.holds)}")
        return "\n".join(rows) + "\n"


def spectral_bounds_audit(g: NetworkGraph, spectrum: Spectrum, rtol: float = 1e-9) -> BoundsAudit:
    """Diameter, degree and spectral-extreme inequalities (each as lhs <= rhs)."""
    n = g.n_nodes
    D = float(bfs_eccentricities(g).max())
    if not math.isfinite(D):
        raise ValueError("graph is not connected")
    deg = g.in_degrees
    lam2, lamN = spectrum.lambda2, spectrum.lambdaN
    tol = rtol * max(1.0, lamN)
    checks = [
        ("lambda2_lower", 4.0 / (n * D), lam2),
        ("lambda2_upper", lam2, n * deg.min() / (n - 1)),
        ("lambdaN_lower", n * deg.max() / (n - 1), lamN),
        ("lambdaN_upper", lamN, 2.0 * deg.max()),
    ]
    return BoundsAudit(D, [AuditLine(nm, float(a), float(b), bool(a <= b + tol)) for nm, a, b in checks])


def er_concentration(n: int, p: float, eps_slack: float = 0.1) -> tuple[float, float]:
    """(Np - f, Np + f) with f = sqrt((3 + eps)(1 - p) p N log N)."""
    if not (0 < p <= 1) or p <= math.log(n) / n:
        raise ValueError("need log N / N < p <= 1")
    if eps_slack < 0:
        raise ValueError("eps_slack must be >= 0")
    f = math.sqrt((3 + eps_slack) * (1 - p) * p * n * math.log(n))
    return n * p - f, n * p + f


def nu_sup(sigma: int, beta: float, omega_trace) -> float:
    w = np.asarray(omega_trace, dtype=np.float64)
    if w.size == 0:
        raise ValueError("empty omega trace")
    return float(np.max(np.abs(sigma - beta * w)))


@dataclass
class ModeEvolution:
    abs_values: np.ndarray  # |z(t)|, t = 0..T
    factors: np.ndarray  # |sigma - beta omega(s(t))|
    rate: float  # fitted slope of log|z(t)|


def mode_evolution(sigma: int, beta: float, omega_trace, z0: float, T: int) -> ModeEvolution:
    if T < 1:
        raise ValueError("T must be >= 1")
    w = np.asarray(omega_trace, dtype=np.float64)
    if len(w) < T:
        raise ValueError("omega trace shorter than T")
    mult = sigma - beta * w[:T]
    # log-domain accumulation avoids overflow over long horizons
    with np.errstate(divide="ignore"):
        logs = np.concatenate([[math.log(abs(z0))], math.log(abs(z0)) + np.cumsum(np.log(np.abs(mult)))])
    absz = np.exp(logs)
    t = np.arange(T + 1)
    good = np.isfinite(logs)
    rate = float(np.polyfit(t[good], logs[good], 1)[0]) if good.sum() >= 2 else float("nan")
    return ModeEvolution(absz, np.abs(mult), rate)


def write_spectrum_csv(values, path) -> None:
    with open(path, "w") as fh:
        fh.write("index,lambda\n")
        for i, v in enumerate(np.asarray(values).tolist()):
            fh.write(f"{i},{v:.17g}\n")
