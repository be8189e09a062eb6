"""Second-derivative machinery: D^2 H, modified Hessian, stability matrix,
and the characteristic-polynomial coefficients c4, c6 of ``C = M^-1 D^2 H``.

For four vortices c4 is available by two independent routes: power traces
(Faddeev-LeVerrier) and a closed term-by-term sum over pair geometry
(``c4_appendix``).  The trace route is authoritative.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .model import VortexSystem, apply_K, pair_differences


@dataclass(frozen=True)
class PairGeometry:
    """Per-pair quantities, all ``(n, n)`` arrays (diagonals are zero)."""

    a: np.ndarray    # (y_i - y_j)^2 - (x_i - x_j)^2
    b: np.ndarray    # -2 (x_i - x_j)(y_i - y_j)
    s: np.ndarray    # r_ij^2
    tau: np.ndarray  # r_ij^-2


def pair_geometry(sys: VortexSystem) -> PairGeometry:
    d = pair_differences(sys.positions)
    dx, dy = d[..., 0], d[..., 1]
    s = dx * dx + dy * dy
    with np.errstate(divide="ignore"):
        tau = np.where(s > 0, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return PairGeometry(a=dy * dy - dx * dx, b=-2.0 * dx * dy, s=s, tau=tau)


def _blocks(sys: VortexSystem) -> np.ndarray:
    """Hessian blocks ``A[i, j]`` as an ``(n, n, 2, 2)`` array."""
    pg = pair_geometry(sys)
    g = sys.gamma
    w = np.outer(g, g) * pg.tau ** 2
    np.fill_diagonal(w, 0.0)
    A = np.empty((sys.n, sys.n, 2, 2))
    A[..., 0, 0] = w * pg.a
    A[..., 0, 1] = w * pg.b
    A[..., 1, 0] = w * pg.b
    A[..., 1, 1] = -w * pg.a
    idx = np.arange(sys.n)
    A[idx, idx] = -A.sum(axis=1)
    return A


def hessian_H(sys: VortexSystem) -> np.ndarray:
    """The symmetric ``2n x 2n`` matrix ``D^2 H``."""
    A = _blocks(sys)
    n = sys.n
    return A.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)


def _K_left(A: np.ndarray) -> np.ndarray:
    return apply_K(A)


def _K_right(A: np.ndarray) -> np.ndarray:
    # A K = -(K A^T)^T since K^T = -K
    return -apply_K(A.T).T


def anticommutator_residual(sys: VortexSystem) -> float:
    """Frobenius norm of ``D^2H K + K D^2H`` (vanishes identically)."""
    D = hessian_H(sys)
    return float(np.linalg.norm(_K_right(D) + _K_left(D)))


def scaled_hessian(sys: VortexSystem) -> np.ndarray:
    """``C = M^-1 D^2 H``."""
    return hessian_H(sys) / sys.circulations.mass_diagonal()[:, None]


def modified_hessian(sys: VortexSystem, multiplier: float) -> np.ndarray:
    """``M^-1 D^2 H + multiplier * Id``.

    The multiplier is ``L`` on the normalized space and ``omega = L / I`` for
    configurations kept in an unnormalized frame.
    """
    return scaled_hessian(sys) + multiplier * np.eye(2 * sys.n)


def stability_matrix(sys: VortexSystem, multiplier: float) -> np.ndarray:
    """``B = K (M^-1 D^2 H + multiplier * Id)``, the rotating-frame linearization."""
    return _K_left(modified_hessian(sys, multiplier))


def characteristic_coefficients(C: np.ndarray) -> np.ndarray:
    """Faddeev-LeVerrier: coefficients of ``det(mu I - C)``, highest degree first.

    Returns ``[1, c_{N-1}, ..., c_0]`` for an ``N x N`` matrix.
    """
    C = np.asarray(C, dtype=float)
    N = C.shape[0]
    coeffs = np.empty(N + 1)
    coeffs[0] = 1.0
    Mk = np.zeros_like(C)
    I = np.eye(N)
    for k in range(1, N + 1):
        Mk = C @ Mk + coeffs[k - 1] * I
        coeffs[k] = -np.trace(C @ Mk) / k
    return coeffs


def c4_c6_trace(sys: VortexSystem) -> tuple[float, float]:
    """c4 and c6 of ``R(mu) = mu^8 + c6 mu^6 + c4 mu^4 + c2 mu^2`` from power traces.

    Uses ``tr C = 0``: ``c6 = -tr(C^2)/2`` and ``c4 = tr(C^2)^2/8 - tr(C^4)/4``.
    """
    if sys.n != 4:
        raise DimensionError(f"c4/c6 are defined for four vortices, got n = {sys.n}")
    C = scaled_hessian(sys)
    C2 = C @ C
    t2 = np.trace(C2)
    t4 = np.sum(C2 * C2.T)
    return float(t2 * t2 / 8 - t4 / 4), float(-t2 / 2)


# ----------------------------------------------------------------------------
# closed-form c4 as a sum over pair geometry (four vortices)

F_WEIGHTS = {"F1": 1, "F2": 2, "F3": 2, "F4": 2, "F5": 4, "F6": 2, "F7": 4}
F_TERM_COUNTS = {"F1": 15, "F2": 4, "F3": 4, "F4": 12, "F5": 12, "F6": 24, "F7": 3}


@dataclass(frozen=True)
class AppendixTerms:
    values: dict        # F-name -> value
    term_counts: dict   # F-name -> number of distinct denominators
    c4: float
    trace_C2: float


class _Quad:
    """Index helpers over 1-based labels of a four-vortex system."""

    def __init__(self, sys: VortexSystem):
        pg = pair_geometry(sys)
        self.g = {i + 1: float(sys.gamma[i]) for i in range(4)}
        self._a, self._b, self._s = pg.a, pg.b, pg.s

    def a(self, i, j):
        return self._a[i - 1, j - 1]

    def b(self, i, j):
        return self._b[i - 1, j - 1]

    def s(self, i, j):
        return self._s[i - 1, j - 1]

    def G(self, i, j, k):
        return self.a(i, j) * self.a(i, k) + self.b(i, j) * self.b(i, k)

    def H(self, i, j, k):
        return self.a(i, j) * self.b(i, k) - self.a(i, k) * self.b(i, j)

    @staticmethod
    def rest(*idx):
        return [x for x in (1, 2, 3, 4) if x not in idx]


def _denominator_key(*pairs) -> frozenset:
    return frozenset((frozenset(p), pairs.count(p)) for p in pairs)


def c4_appendix_terms(sys: VortexSystem) -> AppendixTerms:
    """Evaluate F1..F7 term by term; ``c4 = F1 + 2F2 + 2F3 + 2F4 + 4F5 + 2F6 + 4F7``.

    Index sets follow the convention that i, j, k, l are always distinct, so
    ``l`` is whatever label is left over.  Distinct denominators are counted
    per F-term for auditing the transcription.
    """
    if sys.n != 4:
        raise DimensionError(f"c4_appendix needs four vortices, got n = {sys.n}")
    q = _Quad(sys)
    g, s, G, H, rest = q.g, q.s, q.G, q.H, q.rest
    pairs = list(itertools.combinations((1, 2, 3, 4), 2))
    r = float(np.prod([s(i, j) ** 2 for i, j in pairs]))
    F = dict.fromkeys(F_WEIGHTS, 0.0)
    dens = {k: set() for k in F_WEIGHTS}

    def P(i, j):
        return tuple(sorted((i, j)))

    for i in (1, 2, 3, 4):
        for j, k in itertools.combinations(rest(i), 2):
            F["F1"] += g[i] ** 2 * (g[i] + g[j] + g[k]) ** 2 / (s(i, j) ** 2 * s(i, k) ** 2)
            dens["F1"].add(_denominator_key(P(i, j), P(i, k)))
    for j in (2, 3, 4):
        k, l = rest(1, j)
        F["F1"] += (g[1] + g[j]) ** 2 * (g[k] + g[l]) ** 2 / (s(1, j) ** 2 * s(k, l) ** 2)
        dens["F1"].add(_denominator_key(P(1, j), P(k, l)))

    for i, j in pairs:
        for k in rest(i, j):
            F["F2"] += (g[i] * g[j] * (g[i] + g[j]) * (g[i] + g[j] + 2 * g[k]) * G(k, i, j)
                        / (s(i, j) ** 2 * s(i, k) ** 2 * s(j, k) ** 2))
            dens["F2"].add(_denominator_key(P(i, j), P(i, k), P(j, k)))

    for i in (1, 2, 3, 4):
        for j, k in itertools.combinations(rest(i), 2):
            (l,) = rest(i, j, k)
            F["F3"] += (g[i] ** 2 * g[j] * g[k] * G(i, j, k)
                        / (s(i, j) ** 2 * s(i, k) ** 2 * s(i, l) ** 2))
            dens["F3"].add(_denominator_key(P(i, j), P(i, k), P(i, l)))

    for i, j in pairs:
        for k in rest(i, j):
            (l,) = rest(i, j, k)
            num = (g[i] * g[k] * (g[i] + g[l]) ** 2 * G(j, i, k)
                   + g[j] * g[l] * (g[j] + g[k]) ** 2 * G(i, j, l))
            F["F4"] += num / (s(i, j) ** 2 * s(i, l) ** 2 * s(j, k) ** 2)
            dens["F4"].add(_denominator_key(P(i, j), P(i, l), P(j, k)))

    for i in (1, 2, 3, 4):
        for j, k in itertools.combinations(rest(i), 2):
            (l,) = rest(i, j, k)
            bracket = (g[k] ** 2 * G(j, l, k) * G(l, k, i)
                       + g[j] ** 2 * G(k, l, j) * G(l, j, i)
                       + g[j] * g[k] * (G(j, l, k) * G(l, k, i) - H(j, l, k) * H(l, k, i)))
            F["F5"] += s(i, j) ** 2 * s(i, k) ** 2 * g[i] * g[l] * bracket / r
            others = [p for p in pairs if p not in (P(i, j), P(i, k))]
            dens["F5"].add(_denominator_key(*others))

    for i, j in pairs:
        inner = 0.0
        for k in rest(i, j):
            (l,) = rest(i, j, k)
            inner += (g[k] * G(i, j, k) / s(i, k) ** 2
                      * (g[k] * G(j, i, k) / s(j, k) ** 2 + g[l] * G(j, i, l) / s(j, l) ** 2))
            inner += (g[k] * H(i, j, k) / s(i, k) ** 2
                      * (g[k] * H(j, i, k) / s(j, k) ** 2 + g[l] * H(j, i, l) / s(j, l) ** 2))
            dens["F6"].add(_denominator_key(P(i, j), P(i, j), P(i, k), P(j, k)))
            dens["F6"].add(_denominator_key(P(i, j), P(i, j), P(i, k), P(j, l)))
        F["F6"] += g[i] * g[j] / s(i, j) ** 4 * inner

    g1234 = g[1] * g[2] * g[3] * g[4]
    for j in (2, 3, 4):
        k, l = rest(1, j)
        bracket = (g[1] ** 2 * g[j] ** 2 * G(k, 1, j) * G(l, 1, j)
                   + g[k] ** 2 * g[l] ** 2 * G(1, k, l) * G(j, k, l)
                   - g1234 * (G(k, 1, j) * G(l, 1, j) + H(k, 1, j) * H(l, 1, j)))
        F["F7"] += s(1, j) ** 2 * s(k, l) ** 2 * bracket / r
        dens["F7"].add(_denominator_key(*[p for p in pairs if p not in (P(1, j), P(k, l))]))

    c4 = sum(F_WEIGHTS[name] * F[name] for name in F_WEIGHTS)
    return AppendixTerms(
        values={k: float(v) for k, v in F.items()},
        term_counts={k: len(v) for k, v in dens.items()},
        c4=float(c4),
        trace_C2=trace_C2_pairs(sys),
    )


def c4_appendix(sys: VortexSystem) -> float:
    return c4_appendix_terms(sys).c4


def trace_C2_pairs(sys: VortexSystem) -> float:
    """``tr(C^2)`` as an explicit double sum over pairs and pair-angles."""
    if sys.n != 4:
        raise DimensionError(f"trace formula is written for four vortices, got n = {sys.n}")
    q = _Quad(sys)
    g, s, G = q.g, q.s, q.G
    total = 2 * sum((g[i] + g[j]) ** 2 / s(i, j) ** 2
                    for i, j in itertools.combinations((1, 2, 3, 4), 2))
    for i in (1, 2, 3, 4):
        for j, k in itertools.combinations(q.rest(i), 2):
            total += 4 * g[j] * g[k] * G(i, j, k) / (s(i, j) ** 2 * s(i, k) ** 2)
    return float(total)
