"""Pairwise coupling functions h(x, y) on the 2-torus.

``x`` is the coordinate of the node receiving the interaction and ``y`` the
coordinate of its in-neighbour.  Every coupling is carried as a finite
Fourier table of ``(s1, s2, c)`` entries meaning

    h(x, y) = sum c * b_{s1}(y) * b_{s2}(x)

with the real trigonometric basis b_0 = 1, b_k = cos(2 pi k .),
b_{-k} = sin(2 pi k .).  ``s1`` always indexes the neighbour argument and
``s2`` the receiving node, which is the orientation used by the truncated
hub dynamics and the bad-set definitions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def basis(k: int, x):
    x = np.asarray(x, dtype=np.float64)
    if k == 0:
        return np.ones_like(x)
    if k > 0:
        return np.cos(TWO_PI * k * x)
    return np.sin(TWO_PI * (-k) * x)


def basis_deriv(k: int, x):
    x = np.asarray(x, dtype=np.float64)
    if k == 0:
        return np.zeros_like(x)
    if k > 0:
        return -TWO_PI * k * np.sin(TWO_PI * k * x)
    return TWO_PI * (-k) * np.cos(TWO_PI * (-k) * x)


def basis_deriv2(k: int, x):
    x = np.asarray(x, dtype=np.float64)
    if k == 0:
        return np.zeros_like(x)
    w = TWO_PI * abs(k)
    return -(w**2) * basis(k, x)


def basis_mean(k: int) -> float:
    return 1.0 if k == 0 else 0.0


@dataclass(frozen=True)
class CouplingSpec:
    kind: str
    terms: tuple
    shift: tuple = field(default=())

    def __post_init__(self):
        for s1, s2, c in self.terms:
            if not math.isfinite(c):
                raise ValueError("non-finite Fourier coefficient")
            if int(s1) != s1 or int(s2) != s2:
                raise ValueError("Fourier indices must be integers")

    # evaluation -------------------------------------------------------
    def __call__(self, x, y):
        return self.evaluate(x, y)

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "sine":
            out = -np.sin(TWO_PI * x) + np.sin(TWO_PI * y)
        elif self.kind == "huygens":
            out = np.sin(TWO_PI * (y - x)) + np.sin(TWO_PI * y) - np.sin(TWO_PI * x)
        elif self.kind == "shift":
            u = y - x
            out = sum(b * np.sin(TWO_PI * k * u) for k, b in self.shift) + 0.0 * u
        else:
            out = self.evaluate_table(x, y)
        return float(out) if out.ndim == 0 else out

    def evaluate_table(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        out = np.zeros(np.broadcast(x, y).shape)
        for s1, s2, c in self.terms:
            out = out + c * (basis(s1, y) * basis(s2, x))
        return out

    def d1(self, x, y):
        """Partial derivative in the receiving-node argument."""
        out = 0.0
        for s1, s2, c in self.terms:
            out = out + c * basis(s1, y) * basis_deriv(s2, x)
        return out

    def d2(self, x, y):
        """Partial derivative in the neighbour argument."""
        out = 0.0
        for s1, s2, c in self.terms:
            out = out + c * basis_deriv(s1, y) * basis(s2, x)
        return out

    # structure --------------------------------------------------------
    @property
    def neighbor_support(self) -> list[int]:
        """Distinct nonconstant neighbour-basis indices s1."""
        return sorted({int(s1) for s1, _, c in self.terms if s1 != 0 and c != 0})

    @property
    def max_abs(self) -> float:
        return float(sum(abs(c) for _, _, c in self.terms))

    def is_diffusive(self, n_grid: int = 64, tol: float = 1e-12) -> bool:
        g = (np.arange(n_grid) + 0.37) / n_grid
        x, y = np.meshgrid(g, g, indexing="ij")
        return bool(
            np.max(np.abs(self.evaluate_table(g, g))) < tol
            and np.max(np.abs(self.evaluate_table(x, y) + self.evaluate_table(y, x))) < tol
        )

    @property
    def dphi0(self) -> float | None:
        """phi'(0) of the shift part phi(y - x), when there is one."""
        if self.kind in ("shift", "huygens"):
            return float(sum(TWO_PI * k * b for k, b in self.shift))
        return None

    @property
    def is_pure_shift(self) -> bool:
        return self.kind == "shift"

    def omega(self, s):
        """Transverse rate omega(s) = -h_1(s, s) = h_2(s, s) for diffusive h.

        For a shift coupling phi(y - x) this is the constant phi'(0).
        """
        s = np.asarray(s, dtype=np.float64)
        return -np.asarray(self.d1(s, s), dtype=np.float64) + 0.0 * s


def sine_diffusive() -> CouplingSpec:
    """h(x, y) = -sin(2 pi x) + sin(2 pi y)."""
    return CouplingSpec("sine", ((-1, 0, 1.0), (0, -1, -1.0)))


def shift_diffusive(table) -> CouplingSpec:
    """h(x, y) = phi(y - x) with phi(u) = sum b_k sin(2 pi k u)."""
    table = tuple((int(k), float(b)) for k, b in table)
    if any(k <= 0 for k, _ in table):
        raise ValueError("shift table needs positive frequencies")
    terms = []
    for k, b in table:
        # sin(2pi k(y-x)) = sin(2pi k y) cos(2pi k x) - cos(2pi k y) sin(2pi k x)
        terms += [(-k, k, b), (k, -k, -b)]
    return CouplingSpec("shift", tuple(terms), table)


def huygens_diffusive() -> CouplingSpec:
    """h(x, y) = sin(2 pi (y - x)) + sin(2 pi y) - sin(2 pi x)."""
    terms = ((-1, 1, 1.0), (1, -1, -1.0), (-1, 0, 1.0), (0, -1, -1.0))
    return CouplingSpec("huygens", terms, ((1, 1.0),))


def fourier_table(terms) -> CouplingSpec:
    terms = tuple((int(s1), int(s2), float(c)) for s1, s2, c in terms)
    return CouplingSpec("fourier", terms)


def constant(c: float) -> CouplingSpec:
    return fourier_table([(0, 0, c)])


PRESETS = {
    "sine": sine_diffusive,
    "huygens": huygens_diffusive,
}


def coupling_from_config(spec) -> CouplingSpec:
    """Build from a preset name or a dict {"shift": [[k, b], ...]} / {"fourier": [[s1, s2, c], ...]}."""
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise ValueError(f"unknown coupling preset {spec!r}")
        return PRESETS[spec]()
    if isinstance(spec, dict) and len(spec) == 1:
        ((key, val),) = spec.items()
        if key == "shift":
            return shift_diffusive(val)
        if key == "fourier":
            return fourier_table(val)
    raise ValueError(f"bad coupling spec {spec!r}")


def coupling_eval(h: CouplingSpec, x, y):
    return h.evaluate(x, y)
