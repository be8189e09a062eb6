"""Core state types and first-order quantities of the planar n-vortex problem.

Conventions used throughout the package:

* positions are stored as an ``(n, 2)`` array; the flat phase vector ``z``
  is ``positions.ravel()`` = ``(x1, y1, x2, y2, ...)``;
* ``J = [[0, 1], [-1, 0]]`` and ``K = diag(J, ..., J)``;
* ``M = diag(G1, G1, ..., Gn, Gn)`` (circulations act as masses);
* vortex labels exposed to users (subsets, orderings, interior vertex) are
  1-based, matching the usual numbering of vortices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    BadSubset,
    CollisionError,
    DegenerateCirculation,
    NonNormalizable,
    ValidationError,
)

COLLISION_TOL = 1e-12
ZERO_CIRCULATION_TOL = 1e-14

J2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Circulations:
    """Vortex strengths ``Gamma_i``; every entry must be nonzero."""

    gamma: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.gamma, dtype=float).ravel()
        if g.size < 1:
            raise ValidationError("at least one circulation is required")
        if not np.all(np.isfinite(g)):
            raise ValidationError("circulations must be finite")
        if np.any(np.abs(g) < ZERO_CIRCULATION_TOL):
            raise ValidationError(f"every circulation must be nonzero, got {g.tolist()}")
        object.__setattr__(self, "gamma", _frozen(g))

    def __len__(self) -> int:
        return self.gamma.size

    def __eq__(self, other) -> bool:
        return isinstance(other, Circulations) and np.array_equal(self.gamma, other.gamma)

    def __hash__(self) -> int:
        return hash(self.gamma.tobytes())

    @property
    def n(self) -> int:
        return self.gamma.size

    @property
    def total(self) -> float:
        return float(self.gamma.sum())

    @property
    def momentum(self) -> float:
        """Total vortex angular momentum ``L = sum_{i<j} G_i G_j``."""
        g = self.gamma
        return float(np.triu(np.outer(g, g), 1).sum())

    @property
    def all_positive(self) -> bool:
        return bool(np.all(self.gamma > 0))

    def mass_diagonal(self) -> np.ndarray:
        """Diagonal of ``M`` (length 2n)."""
        return np.repeat(self.gamma, 2)


def as_circulations(circ) -> Circulations:
    return circ if isinstance(circ, Circulations) else Circulations(circ)


@dataclass(frozen=True, eq=False)
class VortexSystem:
    """Circulations plus planar positions; rejects collisions on construction."""

    circulations: Circulations
    positions: np.ndarray

    def __post_init__(self):
        circ = as_circulations(self.circulations)
        pos = np.array(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos.reshape(-1, 2)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValidationError(f"positions must have shape (n, 2), got {pos.shape}")
        if pos.shape[0] != circ.n:
            raise ValidationError(
                f"{circ.n} circulations but {pos.shape[0]} positions")
        if circ.n < 2:
            raise ValidationError("a vortex system needs at least two vortices")
        if not np.all(np.isfinite(pos)):
            raise ValidationError("positions must be finite")
        r = min_separation(pos)
        if r <= COLLISION_TOL:
            raise CollisionError(f"vortices collide (min r_ij = {r:.3e})")
        object.__setattr__(self, "circulations", circ)
        object.__setattr__(self, "positions", _frozen(pos))

    @classmethod
    def from_flat(cls, gamma, z) -> "VortexSystem":
        return cls(as_circulations(gamma), np.asarray(z, dtype=float).reshape(-1, 2))

    @property
    def n(self) -> int:
        return self.circulations.n

    @property
    def gamma(self) -> np.ndarray:
        return self.circulations.gamma

    @property
    def z(self) -> np.ndarray:
        return self.positions.ravel()

    def with_positions(self, positions) -> "VortexSystem":
        return VortexSystem(self.circulations, positions)

    def to_dict(self) -> dict:
        return {"circulations": self.gamma.tolist(), "positions": self.positions.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "VortexSystem":
        try:
            return cls(Circulations(data["circulations"]), data["positions"])
        except KeyError as exc:
            raise ValidationError(f"system JSON is missing field {exc}") from None


@dataclass(frozen=True)
class ScalarInvariants:
    total_circulation: float
    center: np.ndarray | None
    hamiltonian: float
    angular_impulse: float
    momentum: float
    omega: float

    @property
    def degenerate(self) -> bool:
        """True when the total circulation vanishes (center, I, omega undefined)."""
        return self.center is None

    def to_dict(self) -> dict:
        return {
            "total_circulation": self.total_circulation,
            "center": None if self.center is None else self.center.tolist(),
            "hamiltonian": self.hamiltonian,
            "angular_impulse": self.angular_impulse,
            "momentum": self.momentum,
            "omega": self.omega,
        }


# ----------------------------------------------------------------------------
# geometry helpers

def pair_differences(positions: np.ndarray) -> np.ndarray:
    """``d[i, j] = z_i - z_j`` with shape ``(n, n, 2)``."""
    return positions[:, None, :] - positions[None, :, :]


def squared_distances(positions: np.ndarray) -> np.ndarray:
    d = pair_differences(positions)
    return np.einsum("ijk,ijk->ij", d, d)


def min_separation(positions: np.ndarray) -> float:
    s = squared_distances(np.asarray(positions, dtype=float))
    n = s.shape[0]
    if n < 2:
        return math.inf
    iu = np.triu_indices(n, 1)
    return float(np.sqrt(s[iu].min()))


def translation_vectors(n: int) -> tuple[np.ndarray, np.ndarray]:
    """The vectors ``s = (1,0,1,0,...)`` and ``Ks = (0,-1,0,-1,...)``."""
    s = np.tile([1.0, 0.0], n)
    return s, apply_K(s)


def apply_K(v: np.ndarray) -> np.ndarray:
    """Multiply a flat 2n-vector (or the rows of a 2n x m matrix) by K."""
    v = np.asarray(v, dtype=float)
    out = np.empty_like(v)
    out[0::2] = v[1::2]
    out[1::2] = -v[0::2]
    return out


def K_matrix(n: int) -> np.ndarray:
    return np.kron(np.eye(n), J2)


def _require_total(circ: Circulations) -> float:
    total = circ.total
    if abs(total) < ZERO_CIRCULATION_TOL:
        raise DegenerateCirculation("total circulation is zero; center of vorticity undefined")
    return total


def center_of_vorticity(sys: VortexSystem) -> np.ndarray:
    total = _require_total(sys.circulations)
    return sys.gamma @ sys.positions / total


# ----------------------------------------------------------------------------
# scalar quantities

def hamiltonian(sys: VortexSystem) -> float:
    g = sys.gamma
    iu = np.triu_indices(sys.n, 1)
    s = squared_distances(sys.positions)[iu]
    return float(-0.5 * np.sum(g[iu[0]] * g[iu[1]] * np.log(s)))


def invariants(sys: VortexSystem) -> ScalarInvariants:
    """H, L always; center, I and omega become ``None``/NaN when sum(Gamma) = 0.

    With mixed signs ``I`` itself may vanish; omega is then NaN as well.
    """
    circ = sys.circulations
    L = circ.momentum
    H = hamiltonian(sys)
    total = circ.total
    if abs(total) < ZERO_CIRCULATION_TOL:
        return ScalarInvariants(total, None, H, math.nan, L, math.nan)
    c = sys.gamma @ sys.positions / total
    rel = sys.positions - c
    I = float(np.sum(sys.gamma * np.einsum("ij,ij->i", rel, rel)))
    return ScalarInvariants(total, c, H, I, L, L / I if I != 0.0 else math.nan)


def angular_impulse_mutual(sys: VortexSystem) -> float:
    """Angular impulse written through the mutual squared distances only."""
    total = _require_total(sys.circulations)
    g = sys.gamma
    iu = np.triu_indices(sys.n, 1)
    s = squared_distances(sys.positions)[iu]
    return float(np.sum(g[iu[0]] * g[iu[1]] * s) / total)


def gradient_H(sys: VortexSystem) -> np.ndarray:
    """Flat gradient of ``H = -sum G_i G_j ln r_ij``.

    ``dH/dz_i = sum_j G_i G_j (z_j - z_i) / r_ij^2``, so that
    ``grad H(z) . (z - c) = -L`` for every configuration.
    """
    return _gradient(sys.gamma, sys.positions).ravel()


def _gradient(g: np.ndarray, positions: np.ndarray) -> np.ndarray:
    d = pair_differences(positions)
    s = np.einsum("ijk,ijk->ij", d, d)
    np.fill_diagonal(s, np.inf)
    w = np.outer(g, g) / s
    return -np.einsum("ij,ijk->ik", w, d)


def re_residual(sys: VortexSystem, omega: float) -> float:
    """Euclidean norm of ``grad H + omega M (z - c)`` (zero at a relative equilibrium)."""
    c = center_of_vorticity(sys)
    rel = sys.positions - c
    res = _gradient(sys.gamma, sys.positions) + omega * sys.gamma[:, None] * rel
    return float(np.linalg.norm(res))


def normalize(sys: VortexSystem) -> VortexSystem:
    """Translate the center of vorticity to the origin, then scale to I = 1."""
    c = center_of_vorticity(sys)
    rel = sys.positions - c
    I = float(np.sum(sys.gamma * np.einsum("ij,ij->i", rel, rel)))
    if not I > 0:
        raise NonNormalizable(f"angular impulse about the center is {I:.6g} <= 0")
    return sys.with_positions(rel / math.sqrt(I))


def cluster_momentum(circ, subset: Iterable[int]) -> float:
    """``sum_{i<j in S} G_i G_j`` for a 1-based index subset ``S``."""
    circ = as_circulations(circ)
    idx = sorted(set(int(i) for i in subset))
    if len(idx) < 2:
        raise BadSubset("a cluster needs at least two vortices")
    if idx[0] < 1 or idx[-1] > circ.n:
        raise BadSubset(f"vortex labels must lie in 1..{circ.n}, got {idx}")
    g = [float(circ.gamma[i - 1]) for i in idx]
    return math.fsum(g[a] * g[b] for a in range(len(g)) for b in range(a + 1, len(g)))


def rotate(positions: np.ndarray, angle: float, center: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
    """Counter-clockwise rotation of every point by ``angle`` about ``center``."""
    c, s = math.cos(angle), math.sin(angle)
    R = np.array([[c, -s], [s, c]])
    ctr = np.asarray(center, dtype=float)
    return (np.asarray(positions) - ctr) @ R.T + ctr
