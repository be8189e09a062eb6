"""Numerical search for critical points of H on the normalized configuration
space: Newton refinement, random-restart census, deduplication modulo
rotation, geometry tags and the collinear solver."""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguousGeometry,
    DriftToCollision,
    NegativeCirculation,
    NoConvergence,
    NotRelativeEquilibrium,
    NumericalError,
    ValidationError,
)
from .hessian import hessian_H
from .model import (
    Circulations,
    VortexSystem,
    _gradient,
    apply_K,
    as_circulations,
    invariants,
    min_separation,
    normalize,
    re_residual,
)
from .morse import MorseAudit, MorseClassification, classify, index_counts, morse_audit, nondegeneracy_certificate
from .spectral import RESIDUAL_TOL, ZERO_TOL, SpectralReport, spectral_report

REFINE_TOL = 1e-11
COLLISION_FLOOR = 1e-6
MAX_NEWTON = 100
CLASS_TOL = 1e-7
SAMPLE_SEPARATION = 0.05
DESCENT_STEPS = 20
DESCENT_STEP = 2e-3      # max per-vortex displacement of one descent step
POLISH_STEP = 1e-13      # polishing stops once a Newton step moves less than this
MAX_POLISH = 60

COLLINEAR = "Collinear"
CONVEX = "Convex"
CONCAVE = "Concave"


@dataclass(frozen=True)
class Geometry:
    kind: str
    interior: int | None = None   # 1-based label of the interior vortex

    def __str__(self) -> str:
        return f"{CONCAVE}({self.interior})" if self.kind == CONCAVE else self.kind


@dataclass(frozen=True)
class RelativeEquilibrium:
    system: VortexSystem
    omega: float
    residual: float
    spectral: SpectralReport
    classification: MorseClassification
    geometry: Geometry
    iterations: int = 0

    @property
    def index(self) -> int:
        return self.classification.index

    @property
    def hamiltonian(self) -> float:
        return invariants(self.system).hamiltonian

    def to_dict(self) -> dict:
        return {
            "system": self.system.to_dict(),
            "omega": self.omega,
            "residual": self.residual,
            "hamiltonian": self.hamiltonian,
            "geometry": str(self.geometry),
            "min_separation": min_separation(self.system.positions),
            "classification": self.classification.to_dict(),
            "spectral": self.spectral.to_dict(),
        }


# ----------------------------------------------------------------------------
# geometry

def _area(a, b, c) -> float:
    return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))


def classify_geometry(sys: VortexSystem, tol: float = 1e-8) -> Geometry:
    """Collinear / Convex / Concave(i) for four vortices (collinear for any n).

    Areas are compared against ``tol * I`` and edge distances against
    ``tol`` times the rms radius, so the tags are scale invariant.
    """
    p = sys.positions
    inv = invariants(sys)
    I = inv.angular_impulse
    if not math.isfinite(I) or I <= 0:
        c = p.mean(axis=0)
        I = float(np.sum((p - c) ** 2))
    n = sys.n
    max_area = max(abs(_area(p[i], p[j], p[k]))
                   for i, j, k in itertools.combinations(range(n), 3)) if n >= 3 else 0.0
    if max_area <= tol * I:
        return Geometry(COLLINEAR)
    if n == 3:
        return Geometry(CONVEX)
    if n != 4:
        raise ValidationError("convex/concave tags are defined for four vortices")
    length = tol * math.sqrt(I / np.sum(np.abs(sys.gamma)))
    interior = []
    for i in range(4):
        a, b, c = (p[j] for j in range(4) if j != i)
        orient = math.copysign(1.0, _area(a, b, c))
        dists = []
        for u, v in ((a, b), (b, c), (c, a)):
            edge = math.hypot(v[0] - u[0], v[1] - u[1])
            dists.append(orient * 2.0 * _area(u, v, p[i]) / edge)
        lo = min(dists)
        if lo > length:
            interior.append(i + 1)
        elif lo >= -length:
            raise AmbiguousGeometry(f"vortex {i + 1} lies on the hull boundary of the others")
    if interior:
        return Geometry(CONCAVE, interior[0])
    return Geometry(CONVEX)


# ----------------------------------------------------------------------------
# analysis of a known equilibrium

def analyze(sys: VortexSystem, tol: float = 1e-9, iterations: int = 0,
            tol_zero: float = ZERO_TOL) -> RelativeEquilibrium:
    """Normalize a relative equilibrium and attach its spectral data.

    ``tol`` bounds the residual at ``omega = L`` after normalization;
    ``tol_zero`` is the relative threshold for zero eigenvalues.
    """
    if not sys.circulations.all_positive:
        raise NegativeCirculation("analysis requires all circulations positive")
    norm = normalize(sys)
    L = norm.circulations.momentum
    residual = re_residual(norm, L)
    if residual > tol:
        raise NotRelativeEquilibrium(f"residual {residual:.3e} at omega = L exceeds {tol:.1e}")
    report = spectral_report(norm, tol_residual=max(tol, RESIDUAL_TOL), tol_zero=tol_zero)
    cert = nondegeneracy_certificate(norm) if norm.n == 4 else None
    cls = classify(report, cert)
    try:
        geom = classify_geometry(norm)
    except AmbiguousGeometry:
        geom = Geometry("Ambiguous")
    return RelativeEquilibrium(norm, L, residual, report, cls, geom, iterations)


# ----------------------------------------------------------------------------
# Newton refinement

def _project(g: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Center and rescale flat positions to c = 0, I = 1."""
    pos = z.reshape(-1, 2)
    pos = pos - g @ pos / g.sum()
    I = float(np.sum(g * np.einsum("ij,ij->i", pos, pos)))
    return (pos / math.sqrt(I)).ravel()


def _hessian_flat(g: np.ndarray, z: np.ndarray) -> np.ndarray:
    return hessian_H(VortexSystem(Circulations(g), z.reshape(-1, 2)))


def _descend(g: np.ndarray, z: np.ndarray, steps: int) -> np.ndarray:
    """A few projected negative-gradient steps of H on the normalized space."""
    md = np.repeat(g, 2)
    for _ in range(steps):
        pos = z.reshape(-1, 2)
        grad = _gradient(g, pos).ravel() / md
        # remove the radial component (scale) in the M metric
        grad -= (grad @ (md * z)) * z
        rmin = min_separation(pos)
        gmax = np.max(np.hypot(grad[0::2], grad[1::2]))
        if gmax == 0.0:
            break
        h = min(DESCENT_STEP, 0.1 * rmin) / gmax
        z = _project(g, z - h * grad)
    return z


def _newton(g: np.ndarray, z: np.ndarray, tol: float = REFINE_TOL,
            max_iter: int = MAX_NEWTON) -> tuple[np.ndarray, int, list[float]]:
    n = g.size
    N = 2 * n
    md = np.repeat(g, 2)
    L = float(np.triu(np.outer(g, g), 1).sum())
    s = np.tile([1.0, 0.0], n)
    Ks = apply_K(s)
    z = _project(g, z)
    eta = L
    history = []
    # once the residual is below tol, keep stepping while the steps still shrink:
    # nondegenerate points stop after one or two polishing steps, degenerate ones
    # (where Newton is only linearly convergent) are driven down to roundoff
    converged_at = None
    prev_move = math.inf
    polish = 0
    for it in range(max_iter + 1):
        pos = z.reshape(-1, 2)
        rmin = min_separation(pos)
        if rmin < COLLISION_FLOOR:
            raise DriftToCollision(f"min separation {rmin:.3e} during Newton")
        grad = _gradient(g, pos).ravel()
        F = grad + eta * md * z
        res = float(np.linalg.norm(F))
        history.append(res)
        if res <= tol and converged_at is None:
            converged_at = it
        if converged_at is not None and (polish >= MAX_POLISH or prev_move <= POLISH_STEP):
            return z, converged_at, history
        if it == max_iter:
            break
        Mz = md * z
        MKz = md * apply_K(z)
        A = np.zeros((N + 4, N + 4))
        A[:N, :N] = _hessian_flat(g, z) + eta * np.diag(md)
        cols = [Mz, md * s, md * Ks, MKz]
        for k, col in enumerate(cols):
            A[:N, N + k] = col
        A[N, :N] = 2.0 * Mz
        A[N + 1, :N] = md * s
        A[N + 2, :N] = md * Ks
        A[N + 3, :N] = MKz
        rhs = np.zeros(N + 4)
        rhs[:N] = -F
        rhs[N] = -(z @ Mz - 1.0)
        rhs[N + 1] = -(md * s) @ z
        rhs[N + 2] = -(md * Ks) @ z
        try:
            step = np.linalg.solve(A, rhs)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(A, rhs, rcond=None)[0]
        dz = step[:N]
        move = float(np.max(np.hypot(dz[0::2], dz[1::2])))
        limit = 0.25 * rmin
        if move > limit:
            dz = dz * (limit / move)
            step = step * (limit / move)
        if converged_at is not None:
            if move >= 0.9 * prev_move:
                return z, converged_at, history
            polish += 1
        prev_move = move
        z = _project(g, z + dz)
        eta = eta + step[N]
    if converged_at is not None:
        return z, converged_at, history
    raise NoConvergence(f"Newton did not reach {tol:.1e} in {max_iter} iterations "
                        f"(residual {history[-1]:.3e})")


def refine(start: VortexSystem, tol: float = REFINE_TOL, descent_steps: int = 0,
           max_iter: int = MAX_NEWTON) -> RelativeEquilibrium:
    """Newton-refine a starting configuration to a critical point of H on the
    normalized space (c = 0, I = 1); any critical point is accepted."""
    if not start.circulations.all_positive:
        raise NegativeCirculation("refinement requires all circulations positive")
    if min_separation(start.positions) < COLLISION_FLOOR:
        raise DriftToCollision("starting configuration is too close to a collision")
    g = start.gamma
    z = _project(g, start.z.copy())
    if descent_steps:
        z = _descend(g, z, descent_steps)
    z, iters, _ = _newton(g, z, tol, max_iter)
    sys = start.with_positions(z.reshape(-1, 2))
    return analyze(sys, tol=max(tol, 10 * REFINE_TOL), iterations=iters)


def newton_history(start: VortexSystem, tol: float = REFINE_TOL) -> list[float]:
    """Residual norms of the Newton iterates (used to check quadratic convergence)."""
    _, _, hist = _newton(start.gamma, start.z.copy(), tol)
    return hist


# ----------------------------------------------------------------------------
# deduplication

def distance_signature(sys: VortexSystem) -> np.ndarray:
    """Mutual distances sorted within groups of equal circulation pairs."""
    g = sys.gamma
    p = sys.positions
    items = []
    for i, j in itertools.combinations(range(sys.n), 2):
        a, b = sorted((g[i], g[j]))
        items.append((a, b, float(np.hypot(*(p[i] - p[j])))))
    items.sort()
    return np.array([d for _, _, d in items])


def _tag_key(sys: VortexSystem) -> tuple:
    g = sys.gamma
    return tuple(sorted(tuple(sorted((g[i], g[j]))) for i, j in itertools.combinations(range(sys.n), 2)))


def rotation_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max per-vertex distance after the best rotation of ``b`` onto ``a``
    (both centered at the origin)."""
    cross = np.sum(a[:, 1] * b[:, 0] - a[:, 0] * b[:, 1])
    dot = np.sum(a * b)
    th = math.atan2(cross, dot)
    c, s = math.cos(th), math.sin(th)
    rb = b @ np.array([[c, s], [-s, c]])
    return float(np.max(np.hypot(*(a - rb).T)))


def same_class(a: VortexSystem, b: VortexSystem, tol: float = CLASS_TOL) -> bool:
    if a.n != b.n or not np.array_equal(a.gamma, b.gamma):
        return False
    if np.max(np.abs(distance_signature(a) - distance_signature(b))) > tol:
        return False
    return rotation_distance(a.positions, b.positions) <= tol


def dedup(items, tol: float = CLASS_TOL) -> list[list[int]]:
    """Group normalized systems (or equilibria) into rotation classes.

    Returns lists of item indices; classes appear in order of first
    occurrence, so the result is independent of how items were produced.
    """
    systems = [getattr(x, "system", x) for x in items]
    reps: list[int] = []
    sigs: list[np.ndarray] = []
    classes: list[list[int]] = []
    for k, sys in enumerate(systems):
        sig = distance_signature(sys)
        for c, r in enumerate(reps):
            if (np.max(np.abs(sig - sigs[c])) <= tol
                    and rotation_distance(systems[r].positions, sys.positions) <= tol):
                classes[c].append(k)
                break
        else:
            reps.append(k)
            sigs.append(sig)
            classes.append([k])
    return classes


def reflect(sys: VortexSystem) -> VortexSystem:
    pos = sys.positions.copy()
    pos[:, 1] *= -1.0
    return sys.with_positions(pos)


# ----------------------------------------------------------------------------
# collinear solutions

def find_collinear(circ, ordering, tol: float = 1e-13, max_iter: int = 200) -> RelativeEquilibrium:
    """Collinear relative equilibrium with vortices in the given left-to-right
    order (1-based labels).

    On the line, critical points are minimizers of the strictly convex
    ``-sum G_i G_j ln(x_j - x_i) + (L/2) sum G_i x_i^2`` over the ordered cone,
    so damped Newton from an equispaced start converges to the unique one.
    """
    circ = as_circulations(circ)
    if not circ.all_positive:
        raise NegativeCirculation("collinear solver requires all circulations positive")
    n = circ.n
    order = [int(k) - 1 for k in ordering]
    if sorted(order) != list(range(n)):
        raise ValidationError(f"ordering must be a permutation of 1..{n}, got {list(ordering)}")
    g = circ.gamma[order]
    L = circ.momentum
    x = np.linspace(-1.0, 1.0, n)
    x -= g @ x / g.sum()
    x /= math.sqrt(g @ (x * x))

    def objective(x):
        d = x[None, :] - x[:, None]
        iu = np.triu_indices(n, 1)
        if np.any(d[iu] <= 0):
            return math.inf
        return float(-np.sum(np.outer(g, g)[iu] * np.log(d[iu])) + 0.5 * L * g @ (x * x))

    for it in range(max_iter):
        d = x[None, :] - x[:, None]           # d[i, j] = x_j - x_i
        np.fill_diagonal(d, np.inf)
        grad = np.sum(np.outer(g, g) / d, axis=1) + L * g * x
        if np.linalg.norm(grad) <= tol:
            break
        Hm = np.outer(g, g) / d ** 2
        Hm = -Hm
        np.fill_diagonal(Hm, 0.0)
        np.fill_diagonal(Hm, -Hm.sum(axis=1))
        Hm += np.diag(L * g)
        step = -np.linalg.solve(Hm, grad)
        f0 = objective(x)
        t = 1.0
        while t > 1e-12:
            cand = x + t * step
            if objective(cand) <= f0 + 1e-4 * t * grad @ step:
                break
            t *= 0.5
        x = x + t * step
    else:
        raise NoConvergence("collinear Newton did not converge")
    pos = np.zeros((n, 2))
    pos[order, 0] = x
    sys = VortexSystem(circ, pos)
    return analyze(sys, tol=1e-10, iterations=it)


# ----------------------------------------------------------------------------
# census

def sample_start(circ: Circulations, rng: np.random.Generator,
                 separation: float = SAMPLE_SEPARATION) -> VortexSystem:
    """I.i.d. uniform points in the unit disk, resampled until well separated."""
    n = circ.n
    while True:
        r = np.sqrt(rng.random(n))
        th = 2.0 * math.pi * rng.random(n)
        pos = np.column_stack([r * np.cos(th), r * np.sin(th)])
        if min_separation(pos) >= separation:
            return VortexSystem(circ, pos)


def _restart_task(args):
    gamma, seed, indices, descent_steps = args
    circ = Circulations(gamma)
    out = []
    for k in indices:
        rng = np.random.default_rng([seed, k])
        start = sample_start(circ, rng)
        g = circ.gamma
        try:
            z = _descend(g, _project(g, start.z.copy()), descent_steps)
            z, _, _ = _newton(g, z)
            out.append((k, z))
        except NumericalError:
            out.append((k, None))
    return out


@dataclass
class CensusClass:
    equilibrium: RelativeEquilibrium
    hits: int
    first_restart: int

    def to_dict(self) -> dict:
        d = self.equilibrium.to_dict()
        d.update({"hits": self.hits, "first_restart": self.first_restart})
        return d


@dataclass
class CensusReport:
    circulations: list
    restarts: int
    seed: int
    classes: list
    failures: int
    discovery: list                 # restart index at which each class first appeared
    rotation_reflection_count: int
    shape_groups: list
    tolerance: float = CLASS_TOL
    counts_by_geometry: dict = field(default_factory=dict)
    gamma: list = field(default_factory=list)
    audit: MorseAudit | None = None
    degenerate_classes: int = 0

    @property
    def count(self) -> int:
        return len(self.classes)

    @property
    def min_separation(self) -> float:
        return separation_report(self)

    def saturated(self, tail: float = 0.4) -> bool:
        """No new class found during the final ``tail`` fraction of restarts."""
        if not self.discovery:
            return False
        return max(self.discovery) < (1.0 - tail) * self.restarts

    def to_dict(self) -> dict:
        return {
            "circulations": self.circulations,
            "restarts": self.restarts,
            "seed": self.seed,
            "tolerance": self.tolerance,
            "count": self.count,
            "rotation_reflection_count": self.rotation_reflection_count,
            "counts_by_geometry": self.counts_by_geometry,
            "gamma": self.gamma,
            "degenerate_classes": self.degenerate_classes,
            "audit": None if self.audit is None else self.audit.to_dict(),
            "min_separation": self.min_separation if self.classes else None,
            "failures": self.failures,
            "discovery": self.discovery,
            "saturated": self.saturated(),
            "shape_groups": self.shape_groups,
            "classes": [c.to_dict() for c in self.classes],
        }

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["class", "index", "nullity", "geometry", "omega", "min_r", "hits",
                    "eigenvalues"])
        for k, c in enumerate(self.classes):
            eq = c.equilibrium
            ev = " ".join(f"{v.real:.10g}{v.imag:+.10g}j" for v in eq.spectral.stability_eigenvalues)
            w.writerow([k, eq.index, eq.classification.nullity, str(eq.geometry),
                        f"{eq.omega:.17g}", f"{min_separation(eq.system.positions):.17g}",
                        c.hits, ev])
        return buf.getvalue()


def census(circ, restarts: int, seed: int = 0, workers: int = 1,
           tol: float = CLASS_TOL, descent_steps: int = DESCENT_STEPS) -> CensusReport:
    """Random-restart enumeration of relative equilibria modulo rotation.

    Restart ``k`` draws from ``default_rng([seed, k])``, so the report does not
    depend on ``workers``; results are reduced in restart order.
    """
    circ = as_circulations(circ)
    if not circ.all_positive:
        raise NegativeCirculation("census requires all circulations positive")
    if restarts < 1:
        raise ValidationError("restarts must be at least 1")
    gamma = circ.gamma.tolist()
    if workers > 1:
        chunks = [list(range(k, restarts, workers)) for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(_restart_task, [(gamma, seed, ch, descent_steps) for ch in chunks])
            results = sorted(itertools.chain.from_iterable(parts), key=lambda t: t[0])
    else:
        results = _restart_task((gamma, seed, range(restarts), descent_steps))

    failures = sum(1 for _, z in results if z is None)
    found = [(k, VortexSystem(circ, z.reshape(-1, 2))) for k, z in results if z is not None]
    groups = dedup([s for _, s in found], tol)

    classes = []
    discovery = []
    for grp in groups:
        k0, sys = found[grp[0]]
        eq = analyze(sys, tol=10 * REFINE_TOL)
        classes.append(CensusClass(eq, len(grp), k0))
        discovery.append(k0)

    reps = [c.equilibrium.system for c in classes]
    # rotation + reflection classes: union classes whose mirror images coincide
    parent = list(range(len(reps)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a in range(len(reps)):
        ra = reflect(reps[a])
        for b in range(a + 1, len(reps)):
            if same_class(ra, reps[b], tol):
                parent[find(b)] = find(a)
    refl_count = len({find(a) for a in range(len(reps))})

    # shape groups: identical circulation-tagged distance multisets
    shapes: list[list[int]] = []
    sigs: list[np.ndarray] = []
    for k, sys in enumerate(reps):
        sig = distance_signature(sys)
        for grp, s0 in zip(shapes, sigs):
            if np.max(np.abs(sig - s0)) <= tol:
                grp.append(k)
                break
        else:
            shapes.append([k])
            sigs.append(sig)

    geometry_counts: dict = {}
    for c in classes:
        kind = c.equilibrium.geometry.kind
        geometry_counts[kind] = geometry_counts.get(kind, 0) + 1
    degenerate = sum(1 for c in classes if c.equilibrium.classification.nullity > 0)
    n = circ.n
    indices = [c.equilibrium.index for c in classes if c.equilibrium.classification.nullity == 0]
    gamma_vec = index_counts(indices, n)
    audit = morse_audit(gamma_vec, n) if degenerate == 0 else None

    return CensusReport(
        circulations=gamma,
        restarts=restarts,
        seed=seed,
        classes=classes,
        failures=failures,
        discovery=discovery,
        rotation_reflection_count=refl_count,
        shape_groups=shapes,
        tolerance=tol,
        counts_by_geometry=geometry_counts,
        gamma=gamma_vec,
        audit=audit,
        degenerate_classes=degenerate,
    )


def separation_report(report: CensusReport) -> float:
    """Smallest mutual distance over all normalized class representatives."""
    if not report.classes:
        return math.nan
    return min(min_separation(c.equilibrium.system.positions) for c in report.classes)


def match_class(report: CensusReport, sys: VortexSystem, tol: float = CLASS_TOL) -> list[int]:
    """Indices of census classes equivalent to ``sys`` (normalized first)."""
    norm = normalize(sys)
    return [k for k, c in enumerate(report.classes) if same_class(c.equilibrium.system, norm, tol)]
