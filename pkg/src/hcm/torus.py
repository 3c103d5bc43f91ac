"""Circle/torus arithmetic, split norms and the in-repo random generator.

Coordinates on T = R/Z are doubles in [0, 1).  Random numbers come from a
counter-based SplitMix64 generator so that a (seed, stream, counter) triple
always yields the same 64-bit word, independently of call pattern or
platform:

    word(key, k) = mix(key + (k + 1) * 0x9E3779B97F4A7C15)      (mod 2**64)
    mix(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
             z = (z ^ (z >> 27)) * 0x94D049BB133111EB
             z =  z ^ (z >> 31)

A uniform double is (word >> 11) * 2**-53, i.e. an exact multiple of 2**-53.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1
TWO53 = 2.0**53
INV_TWO53 = 2.0**-53


class Norm(enum.Enum):
    INF = "inf"


INF = Norm.INF


def _mix(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _u64(x: int) -> np.ndarray:
    return np.array([int(x) & _MASK64], dtype=np.uint64)


def derive_key(seed: int, *path: int) -> int:
    """Key for the sub-stream addressed by ``path`` below ``seed``."""
    k = _mix(_u64(seed) + GOLDEN)
    for p in path:
        k = _mix(k ^ _mix(_u64(p) + GOLDEN + GOLDEN))
    return int(k[0])


def hash_words(key: int, a, b) -> np.ndarray:
    """Stateless 64-bit words indexed by two integer arrays (broadcast)."""
    a = np.asarray(a, dtype=np.uint64)
    b = np.asarray(b, dtype=np.uint64)
    h = _mix(_u64(key)[0] ^ (a * GOLDEN))
    return _mix(h + (b + np.uint64(1)) * GOLDEN)


class SplitMix64:
    """Counter-based SplitMix64 stream.

    ``SplitMix64(seed, *path)`` addresses an independent stream; ``spawn(i)``
    derives child streams, which is how per-trial generators are built.
    """

    def __init__(self, seed: int, *path: int):
        self.seed = int(seed)
        self.path = tuple(int(p) for p in path)
        self._key = np.uint64(derive_key(self.seed, *self.path))
        self._counter = 0

    def spawn(self, index: int) -> "SplitMix64":
        return SplitMix64(self.seed, *self.path, index)

    def words(self, n: int) -> np.ndarray:
        k = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        return _mix(self._key + k * GOLDEN)

    def random(self, n: int) -> np.ndarray:
        """``n`` doubles, uniform on the 2**-53 grid of [0, 1)."""
        return (self.words(n) >> np.uint64(11)).astype(np.float64) * INV_TWO53

    def integers(self, high: int, n: int) -> np.ndarray:
        """``n`` integers in [0, high) by scaling a 53-bit uniform."""
        if high <= 0:
            raise ValueError("high must be positive")
        return np.floor(self.random(n) * high).astype(np.int64)


CircleSampler = SplitMix64


def wrap(x):
    """Reduce ``x`` (scalar or array) to [0, 1)."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("wrap: non-finite input")
    r = arr - np.floor(arr)
    r = np.where(r >= 1.0, 0.0, r)
    if np.ndim(x) == 0:
        return float(r)
    return r


def wrap_unchecked(x: np.ndarray) -> np.ndarray:
    r = x - np.floor(x)
    r[r >= 1.0] = 0.0
    return r


def circle_dist(a, b):
    """Arc-length distance on T, in [0, 1/2]."""
    d = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    d = d - np.floor(d)
    r = np.minimum(d, 1.0 - d)
    if np.ndim(r) == 0:
        return float(r)
    return r


def signed_circle_diff(a, b):
    """Representative of a - b in [-1/2, 1/2)."""
    d = np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64)
    return d - np.floor(d + 0.5)


@dataclass(frozen=True)
class SplitVector:
    low: np.ndarray
    hub: np.ndarray

    @classmethod
    def from_full(cls, v, n_low: int) -> "SplitVector":
        v = np.asarray(v, dtype=np.float64)
        return cls(v[:n_low], v[n_low:])

    def check_shape(self, n_low: int, n_hubs: int) -> None:
        if len(self.low) != n_low or len(self.hub) != n_hubs:
            raise ValueError(
                f"split lengths ({len(self.low)}, {len(self.hub)}) != ({n_low}, {n_hubs})"
            )


def _block_norm(x: np.ndarray, p) -> float:
    x = np.abs(np.asarray(x, dtype=np.float64))
    if x.size == 0:
        return 0.0
    if p is INF:
        return float(x.max())
    if p == 1:
        return float(x.sum())
    return float(np.sum(x**p) ** (1.0 / p))


def split_p_norm(v: SplitVector, p) -> float:
    """||v||_p = ||low||_p + ||hub||_p; ``p`` is a real >= 1 or ``INF``."""
    if p is not INF:
        if isinstance(p, float) and math.isinf(p):
            p = INF
        elif p < 1:
            raise ValueError("p must be >= 1")
    return _block_norm(v.low, p) + _block_norm(v.hub, p)


def sample_uniform(n: int, seed: int, *path: int) -> np.ndarray:
    """``n`` independent uniform points of T (deterministic in the seed)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    return SplitMix64(seed, *path).random(n)


def append_digits(z: np.ndarray, sigma: int, key: int, nodes: np.ndarray, t: int) -> np.ndarray:
    """Refill the base-``sigma`` digit shifted out below 2**-53.

    For a point u * 2**-53 of the grid, ``sigma*u mod 2**53`` is the exact
    image under z -> sigma z mod 1 of the truncated point; the true orbit of a
    Lebesgue-typical point also carries the next digit of its expansion,
    which is drawn here from a stateless stream indexed by (node, t).
    Without this, floating-point orbits of z -> 2z collapse to 0 within
    ~55 steps.
    """
    u = np.rint(z * TWO53).astype(np.int64)
    words = hash_words(key, nodes, np.full(len(nodes), t, dtype=np.uint64))
    d = np.floor((words >> np.uint64(11)).astype(np.float64) * INV_TWO53 * sigma).astype(np.int64)
    u = (u + d) % (1 << 53)
    return u.astype(np.float64) * INV_TWO53
