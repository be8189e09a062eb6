"""Morse-theoretic bookkeeping: index/stability classification, the n = 4
nondegeneracy certificate, and the Morse-inequality audit."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadDimension, DimensionError, InternalInconsistency
from .hessian import c4_c6_trace
from .model import VortexSystem, invariants
from .spectral import SpectralReport

LINEARLY_STABLE = "LinearlyStable"
DEGENERATE = "Degenerate"
UNSTABLE = "Unstable"

CERTIFICATE_TOL = 1e-8


@dataclass(frozen=True)
class MorseClassification:
    index: int
    nullity: int
    stability: str
    real_pairs: int
    index_bound: int
    certificate: float | None = None

    @property
    def nondegenerate(self) -> bool:
        return self.nullity == 0

    @property
    def stability_class(self) -> str:
        """``LinearlyStable``, ``Degenerate`` or ``Unstable(k)`` with ``k`` the index."""
        return f"{UNSTABLE}({self.index})" if self.stability == UNSTABLE else self.stability

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "nullity": self.nullity,
            "stability": self.stability_class,
            "real_pairs": self.real_pairs,
            "index_bound": self.index_bound,
            "certificate": self.certificate,
        }


def classify(report: SpectralReport, certificate: float | None = None) -> MorseClassification:
    """Classify a relative equilibrium from its spectral report.

    The Morse index must equal the number of real stability pairs; a mismatch
    means one of the two eigen-routes is wrong and raises
    ``InternalInconsistency``.
    """
    real_pairs = report.real_pairs
    if report.morse_index != real_pairs:
        raise InternalInconsistency(
            f"Morse index {report.morse_index} but {real_pairs} real stability pairs")
    if report.morse_index > 0:
        stability = UNSTABLE
    elif report.nullity > 0:
        stability = DEGENERATE
    else:
        stability = LINEARLY_STABLE
    return MorseClassification(
        index=report.morse_index,
        nullity=report.nullity,
        stability=stability,
        real_pairs=real_pairs,
        index_bound=report.n - 2,
        certificate=certificate,
    )


def nondegeneracy_certificate(sys: VortexSystem) -> float:
    """``c4 + 2 omega^2 c6 + 3 omega^4`` for four vortices.

    At a relative equilibrium this equals ``(mu1^2 - w^2)(mu2^2 - w^2)`` over
    the two nontrivial pairs, so it vanishes exactly when the equilibrium is
    degenerate.
    """
    if sys.n != 4:
        raise DimensionError(f"the certificate is defined for n = 4, got n = {sys.n}")
    omega = invariants(sys).omega
    c4, c6 = c4_c6_trace(sys)
    return float(c4 + 2.0 * omega ** 2 * c6 + 3.0 * omega ** 4)


def certificate_threshold(sys: VortexSystem) -> float:
    omega = invariants(sys).omega
    _, c6 = c4_c6_trace(sys)
    return CERTIFICATE_TOL * max(1.0, omega ** 4, abs(c6) * omega ** 2)


def certificate_vanishes(sys: VortexSystem) -> bool:
    return abs(nondegeneracy_certificate(sys)) <= certificate_threshold(sys)


def poincare_polynomial(n: int) -> list[int]:
    """Coefficients (ascending) of ``prod_{k=2}^{n-1} (1 + k t)``; Betti numbers
    of the reduced configuration space."""
    if n < 3:
        raise BadDimension(f"n must be at least 3, got {n}")
    coeffs = [1]
    for k in range(2, n):
        nxt = [0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i] += c
            nxt[i + 1] += k * c
        coeffs = nxt
    return coeffs


@dataclass(frozen=True)
class MorseAudit:
    n: int
    gamma: list[int]
    betti: list[int]
    q_coefficients: list[int]
    remainder: int
    satisfied: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "gamma": list(self.gamma),
            "betti": list(self.betti),
            "q_coefficients": list(self.q_coefficients),
            "remainder": self.remainder,
            "satisfied": self.satisfied,
        }


def morse_audit(counts, n: int) -> MorseAudit:
    """Check ``sum gamma_k t^k - P(t) = (1 + t) Q(t)`` with ``Q`` nonnegative.

    ``counts[k]`` is the number of nondegenerate critical points of index
    ``k``; shorter vectors are padded with zeros up to degree ``2n - 4``.
    """
    betti = poincare_polynomial(n)
    length = 2 * n - 3
    counts = [int(c) for c in counts]
    if any(c < 0 for c in counts):
        raise BadDimension("critical point counts must be nonnegative")
    if len(counts) > length:
        if any(counts[length:]):
            raise BadDimension(f"index above {length - 1} is impossible for n = {n}")
        counts = counts[:length]
    counts = counts + [0] * (length - len(counts))
    diff = [c - (betti[k] if k < len(betti) else 0) for k, c in enumerate(counts)]
    # synthetic division of diff by (1 + t), ascending coefficients
    q = []
    carry = 0
    for k in range(length - 1):
        qk = diff[k] - carry
        q.append(qk)
        carry = qk
    remainder = diff[-1] - carry
    while len(q) > 1 and q[-1] == 0:
        q.pop()
    satisfied = remainder == 0 and all(c >= 0 for c in q)
    return MorseAudit(n=n, gamma=counts, betti=betti, q_coefficients=q,
                      remainder=int(remainder), satisfied=satisfied)


def index_counts(indices, n: int) -> list[int]:
    """Histogram of Morse indices as a length ``2n - 3`` vector."""
    out = np.zeros(2 * n - 3, dtype=int)
    for k in indices:
        out[int(k)] += 1
    return out.tolist()
