"""Eigen-analysis of relative equilibria.

Two independent routes to the stability spectrum are kept side by side:

* the modified Hessian ``M^-1 D^2 H + omega Id`` is brought to symmetric form
  by the congruence ``P = M^-1/2`` and diagonalized with a cyclic Jacobi
  solver; each nontrivial eigenvalue ``nu`` predicts the stability pair
  ``+-sqrt(nu (nu - 2 omega))``;
* the stability matrix ``B = K (M^-1 D^2 H + omega Id)`` is handed to a
  general (Hessenberg-QR) eigensolver.

The report records how far the two routes disagree.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import (
    NegativeCirculation,
    NoConvergence,
    NotRelativeEquilibrium,
    NotSymmetric,
    TrivialMatchFailure,
)
from .hessian import hessian_H, stability_matrix
from .model import (
    VortexSystem,
    apply_K,
    as_circulations,
    gradient_H,
    invariants,
    re_residual,
    translation_vectors,
)

ZERO_TOL = 1e-7
RESIDUAL_TOL = 1e-8


def mass_inner(v, w, circ) -> float:
    """``v^T M w``; warns when M is not positive definite."""
    circ = as_circulations(circ)
    if not circ.all_positive:
        warnings.warn("mass inner product is indefinite for mixed-sign circulations",
                      RuntimeWarning, stacklevel=2)
    return float(np.asarray(v, float) @ (circ.mass_diagonal() * np.asarray(w, float)))


def congruence_transform(matrix, circ) -> np.ndarray:
    """``P^T A P`` with ``P = diag(1/sqrt(G_1), 1/sqrt(G_1), ...)``; ``P^T M P = Id``."""
    circ = as_circulations(circ)
    if not circ.all_positive:
        raise NegativeCirculation("congruence by M^-1/2 needs all circulations positive")
    p = 1.0 / np.sqrt(circ.mass_diagonal())
    return np.asarray(matrix, float) * p[:, None] * p[None, :]


def symmetric_eigen(matrix, tol: float = 1e-10, max_sweeps: int = 60):
    """Cyclic Jacobi eigensolver for a small dense symmetric matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as orthonormal columns.
    """
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {A.shape}")
    N = A.shape[0]
    scale = np.linalg.norm(A)
    if np.linalg.norm(A - A.T) > tol * max(scale, 1e-300):
        raise NotSymmetric("matrix is not symmetric within tolerance")
    A = 0.5 * (A + A.T)
    V = np.eye(N)
    if N == 1 or scale == 0.0:
        return np.diag(A).copy(), V

    # rotations on entries already below roundoff of the whole matrix are skipped;
    # a sweep with no rotation means convergence
    skip = np.finfo(float).eps * scale / N
    for _ in range(max_sweeps):
        rotated = False
        for p in range(N - 1):
            for q in range(p + 1, N):
                apq = A[p, q]
                if abs(apq) <= skip:
                    continue
                rotated = True
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
        if not rotated:
            break
    else:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], V[:, order]


def general_eigen(matrix) -> np.ndarray:
    """Complex eigenvalues of a real square matrix, sorted by (real, imag)."""
    A = np.asarray(matrix, dtype=float)
    try:
        ev = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise NoConvergence(f"eigenvalue iteration failed: {exc}") from None
    return np.sort_complex(ev.astype(complex))


def _greedy_match(values: np.ndarray, targets) -> tuple[list[int], np.ndarray]:
    """Match each target to its nearest unused value; returns (indices, residuals)."""
    used: list[int] = []
    res = []
    for t in targets:
        d = np.abs(values - t)
        if used:
            d[used] = np.inf
        k = int(np.argmin(d))
        used.append(k)
        res.append(float(d[k]))
    return used, np.array(res)


def multiset_deviation(a, b) -> float:
    """Max distance under the optimal one-to-one matching of two equal-size multisets."""
    a = np.asarray(a, complex)
    b = np.asarray(b, complex)
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def predicted_stability_eigenvalues(nu_lower: np.ndarray, omega: float) -> np.ndarray:
    """``+-sqrt(nu (nu - 2 omega))`` for one representative of each pair."""
    out = []
    for nu in nu_lower:
        root = np.sqrt(complex(nu * (nu - 2.0 * omega)))
        out.extend([root, -root])
    return np.sort_complex(np.array(out, dtype=complex))


def real_pair_threshold(omega: float, tol_zero: float = ZERO_TOL) -> float:
    """Magnitude below which a stability eigenvalue counts as zero.

    A modified-Hessian eigenvalue at the zero threshold, ``|nu| = tau``,
    maps to ``|lambda| = sqrt(tau (2 omega + tau))``.
    """
    tau = tol_zero * max(1.0, abs(omega))
    return math.sqrt(tau * (2.0 * abs(omega) + tau))


def count_real_pairs(eigenvalues, omega: float, tol_zero: float = ZERO_TOL) -> int:
    thr = real_pair_threshold(omega, tol_zero)
    ev = np.asarray(eigenvalues, complex)
    n_real = int(np.sum((np.abs(ev.real) > thr) & (np.abs(ev.imag) <= thr)))
    return n_real // 2


@dataclass(frozen=True)
class TrivialMatch:
    target: complex
    matched: complex
    residual: float


@dataclass(frozen=True)
class SpectralReport:
    n: int
    multiplier: float
    tolerance: float
    trivial_eigenvalues: list          # TrivialMatch for {w, w, 2w, 0}
    trivial_stability: list            # TrivialMatch for {0, 0, iw, -iw}
    trivial_vector_residuals: list     # ||S u - rq u|| for s, Ks, z', Kz'
    nontrivial_nu: np.ndarray
    nontrivial_mu: np.ndarray
    pairing: np.ndarray                # partner 2w - nu, matched in the spectrum
    pairing_deviation: float
    stability_eigenvalues: np.ndarray  # direct route, trivial values removed
    stability_formula: np.ndarray      # from nu via +-sqrt(nu (nu - 2w))
    route_deviation: float
    morse_index: int
    nullity: int
    residual: float
    modes: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def positive_count(self) -> int:
        return len(self.nontrivial_nu) - self.morse_index - self.nullity

    @property
    def hessian_nullity(self) -> int:
        """Kernel dimension of the Hessian on the tangent space of the normalized
        sphere; this includes the rotation direction ``Kz``."""
        return self.nullity + 1

    @property
    def real_pairs(self) -> int:
        return count_real_pairs(self.stability_eigenvalues, self.multiplier,
                                self.tolerance / max(1.0, abs(self.multiplier)))

    def imaginary_pairs(self) -> np.ndarray:
        """``beta >= 0`` for every purely imaginary nontrivial pair ``+-i beta``."""
        thr = real_pair_threshold(self.multiplier, self.tolerance / max(1.0, abs(self.multiplier)))
        ev = self.stability_eigenvalues
        sel = (np.abs(ev.real) <= thr) & (ev.imag > thr)
        return np.sort(ev.imag[sel])

    def to_dict(self) -> dict:
        def cx(values):
            return [[float(v.real), float(v.imag)] for v in np.asarray(values, complex)]

        def tm(items):
            return [{"target": cx([t.target])[0], "matched": cx([t.matched])[0],
                     "residual": t.residual} for t in items]

        return {
            "n": self.n,
            "multiplier": self.multiplier,
            "tolerance": self.tolerance,
            "trivial_eigenvalues": tm(self.trivial_eigenvalues),
            "trivial_stability": tm(self.trivial_stability),
            "trivial_vector_residuals": list(self.trivial_vector_residuals),
            "nontrivial_nu": self.nontrivial_nu.tolist(),
            "nontrivial_mu": self.nontrivial_mu.tolist(),
            "pairing": self.pairing.tolist(),
            "pairing_deviation": self.pairing_deviation,
            "stability_eigenvalues": cx(self.stability_eigenvalues),
            "stability_formula": cx(self.stability_formula),
            "route_deviation": self.route_deviation,
            "morse_index": self.morse_index,
            "nullity": self.nullity,
            "hessian_nullity": self.hessian_nullity,
            "residual": self.residual,
        }


def _trivial_basis(sys: VortexSystem, center: np.ndarray) -> np.ndarray:
    """Columns ``s, Ks, z', Kz'`` (z' = z - c stacked)."""
    s, Ks = translation_vectors(sys.n)
    zp = (sys.positions - center).ravel()
    return np.column_stack([s, Ks, zp, apply_K(zp)])


def spectral_report(sys: VortexSystem, tol_residual: float = RESIDUAL_TOL,
                    tol_zero: float = ZERO_TOL) -> SpectralReport:
    """Full spectral analysis of a positive-circulation relative equilibrium.

    The multiplier is ``omega = L / I`` of the given frame (equal to ``L`` on
    the normalized space), so family members can be analyzed in place.
    """
    circ = sys.circulations
    if not circ.all_positive:
        raise NegativeCirculation("spectral analysis requires all circulations positive")
    inv = invariants(sys)
    omega = inv.omega
    scale = max(1.0, float(np.linalg.norm(gradient_H(sys))))
    residual = re_residual(sys, omega)
    if residual > tol_residual * scale:
        raise NotRelativeEquilibrium(
            f"residual {residual:.3e} exceeds {tol_residual:.1e} (scale {scale:.3g})")
    tol = tol_zero * max(1.0, abs(omega))
    N = 2 * sys.n

    # symmetric route: S = P^T D^2G P, similar to the modified Hessian
    S = congruence_transform(hessian_H(sys), circ) + omega * np.eye(N)
    S = 0.5 * (S + S.T)
    full, _ = symmetric_eigen(S)

    sqrt_m = np.sqrt(circ.mass_diagonal())
    T = _trivial_basis(sys, inv.center) * sqrt_m[:, None]
    T /= np.linalg.norm(T, axis=0)
    triv_res = []
    for k in range(4):
        u = T[:, k]
        rq = u @ S @ u
        triv_res.append(float(np.linalg.norm(S @ u - rq * u)))
    # orthonormal complement of the trivial directions
    Q_full, _ = np.linalg.qr(np.column_stack([T, np.eye(N)]))
    Q = Q_full[:, 4:N]
    Q -= T @ (T.T @ Q)
    Q, _ = np.linalg.qr(Q)
    nu, Y = symmetric_eigen(Q.T @ S @ Q)
    modes = (Q @ Y) / sqrt_m[:, None]   # M-orthonormal eigenvectors of the modified Hessian

    # value matching of the trivial spectrum against what remains of the full one
    remaining = full.copy()
    idx, _ = _greedy_match(remaining, nu)
    remaining = np.delete(remaining, idx)
    targets = [0.0, omega, omega, 2.0 * omega]
    idx, res = _greedy_match(remaining, targets)
    trivial = [TrivialMatch(complex(t), complex(remaining[i]), float(r))
               for t, i, r in zip(targets, idx, res)]
    bad = [t for t in trivial if t.residual > tol]
    if bad:
        raise TrivialMatchFailure(
            f"trivial eigenvalue(s) {[t.target.real for t in bad]} missed by "
            f"{[t.residual for t in bad]}")

    order = np.argsort(nu)
    nu = nu[order]
    modes = modes[:, order]
    partner_targets = 2.0 * omega - nu
    pidx, pres = _greedy_match(nu, partner_targets)
    pairing = nu[pidx]
    pairing_dev = float(pres.max()) if pres.size else 0.0

    # direct route on B
    B = stability_matrix(sys, omega)
    lam = general_eigen(B)
    stab_targets = [0.0, 0.0, 1j * omega, -1j * omega]
    sidx, sres = _greedy_match(lam, stab_targets)
    trivial_stab = [TrivialMatch(complex(t), complex(lam[i]), float(r))
                    for t, i, r in zip(stab_targets, sidx, sres)]
    # the zero pair sits on a Jordan block, so its perturbation is ~sqrt(eps)
    jordan_tol = max(tol, real_pair_threshold(omega, tol_zero))
    bad = [t for t in trivial_stab if t.residual > jordan_tol]
    if bad:
        raise TrivialMatchFailure(
            f"trivial stability eigenvalue(s) {[t.target for t in bad]} missed by "
            f"{[t.residual for t in bad]}")
    nontriv_lam = np.sort_complex(np.delete(lam, sidx))
    formula = predicted_stability_eigenvalues(nu[: len(nu) // 2], omega)
    route_dev = multiset_deviation(nontriv_lam, formula)

    return SpectralReport(
        n=sys.n,
        multiplier=float(omega),
        tolerance=float(tol),
        trivial_eigenvalues=trivial,
        trivial_stability=trivial_stab,
        trivial_vector_residuals=triv_res,
        nontrivial_nu=nu,
        nontrivial_mu=nu - omega,
        pairing=pairing,
        pairing_deviation=pairing_dev,
        stability_eigenvalues=nontriv_lam,
        stability_formula=formula,
        route_deviation=route_dev,
        morse_index=int(np.sum(nu < -tol)),
        nullity=int(np.sum(np.abs(nu) <= tol)),
        residual=residual,
        modes=modes,
    )
