"""Closed-form four-vortex families with circulations ``(1, 1, m, m)`` and
small reference configurations.

Kites and asymmetric solutions use the frame ``z1 = (1, 0)``, ``z2 = (-1, 0)``;
they are exact relative equilibria with the angular velocity returned in
``FamilyMember.omega`` and are not normalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CollisionAtBoundary,
    DimensionError,
    OutsideExistenceWindow,
    ValidationError,
)
from .model import Circulations, VortexSystem, invariants, squared_distances

KITE_PLUS = "KitePlus"
KITE_MINUS = "KiteMinus"
ASYMMETRIC = "Asymmetric"
RHOMBUS = "Rhombus"
EQUILATERAL_CENTER = "EquilateralCenter"
EQUILATERAL3 = "Equilateral3"
COLLINEAR3 = "Collinear3"

KITE_VARIANTS = ("base", "reflect", "swap", "swap-reflect")
ASYMMETRIC_VARIANTS = tuple(
    "-".join(p for p in (s12, s34, r) if p) or "base"
    for s12 in ("", "swap12") for s34 in ("", "swap34") for r in ("", "reflect")
)

_WINDOW_TOL = 1e-13


@dataclass(frozen=True)
class FamilyMember:
    system: VortexSystem
    family_tag: str
    variant: str
    omega: float
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "family": self.family_tag,
            "variant": self.variant,
            "omega": self.omega,
            "parameters": dict(self.parameters),
            "system": self.system.to_dict(),
        }


@dataclass(frozen=True)
class KiteParameters:
    m: float
    branch: str
    rho: float
    sigma_squared: float
    discriminant: float

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_squared)

    @property
    def roots(self) -> tuple[float, float]:
        """Roots of ``y^2 - sigma y + rho``, larger first."""
        s = self.sigma
        d = math.sqrt(max(self.discriminant, 0.0))
        return (s + d) / 2.0, (s - d) / 2.0

    @property
    def concave(self) -> bool:
        return self.rho > 0

    def rho_identity(self) -> float:
        m, r = self.m, self.rho
        return r * r * (m + 2) + r * (2 * m * m - 2 * m - 6) + 2 * m * m + m

    def sigma_identity(self) -> float:
        m, r = self.m, self.rho
        return self.sigma_squared * (2 * m + 1) + r * r - (8 * m + 6) * r - 3

    def to_dict(self) -> dict:
        return {"m": self.m, "branch": self.branch, "rho": self.rho,
                "sigma_squared": self.sigma_squared, "discriminant": self.discriminant}


def _branch(branch) -> str:
    b = str(branch).strip().lower()
    if b in ("plus", "+", "kiteplus"):
        return "plus"
    if b in ("minus", "-", "kiteminus"):
        return "minus"
    raise ValidationError(f"branch must be 'plus' or 'minus', got {branch!r}")


def _variant(variant, names) -> int:
    if isinstance(variant, (int, np.integer)):
        if 0 <= int(variant) < len(names):
            return int(variant)
    elif str(variant) in names:
        return names.index(str(variant))
    raise ValidationError(f"variant must be an index below {len(names)} or one of {names}")


def kite_parameters(m: float, branch="minus") -> KiteParameters:
    """Solve for ``rho`` and ``sigma^2``; existence is checked by sign tests."""
    m = float(m)
    b = _branch(branch)
    if not math.isfinite(m):
        raise ValidationError("m must be finite")
    radicand = (m * m - 1.0) * (m * m - 4.0 * m - 9.0)
    if radicand < -_WINDOW_TOL or abs(m + 2.0) < _WINDOW_TOL or abs(2.0 * m + 1.0) < _WINDOW_TOL:
        raise OutsideExistenceWindow(f"no kite for m = {m} (rho is not real)")
    root = math.sqrt(max(radicand, 0.0))
    sign = 1.0 if b == "plus" else -1.0
    rho = (-m * m + m + 3.0 + sign * root) / (m + 2.0)
    s2 = 2.0 * ((5 * m * m + 10 * m + 3) * rho + m * m + 2 * m + 3) / ((2 * m + 1) * (m + 2))
    if s2 <= 0.0:
        raise OutsideExistenceWindow(f"no {b} kite for m = {m} (sigma^2 = {s2:.6g} <= 0)")
    disc = s2 - 4.0 * rho
    scale = max(1.0, abs(s2), abs(rho))
    if abs(disc) <= 1e-12 * scale:
        raise CollisionAtBoundary(f"{b} kite at m = {m}: vortices 3 and 4 collide")
    if disc < 0.0:
        raise OutsideExistenceWindow(f"no {b} kite for m = {m} (sigma^2 - 4 rho < 0)")
    return KiteParameters(m, b, rho, s2, disc)


def kite_positions(params: KiteParameters, variant=0) -> np.ndarray:
    k = _variant(variant, KITE_VARIANTS)
    y3, y4 = params.roots
    if k in (2, 3):
        y3, y4 = y4, y3
    if k in (1, 3):
        y3, y4 = -y3, -y4
    return np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, y3], [0.0, y4]])


def kite_omega(m: float, y3: float, y4: float) -> float:
    return 0.5 + m / (y3 * y3 + 1.0) + m / (y4 * y4 + 1.0)


def kite(m: float, branch="minus", variant=0) -> FamilyMember:
    """Kite relative equilibrium with vortices 3, 4 on the symmetry axis.

    Existence windows (sign tests): minus branch for ``m < -2``,
    ``-2 < m < m~``, ``-1/2 < m < 0`` and ``0 < m <= 1``; plus branch for
    ``0 < m <= 1``. At ``m = 0`` the circulations of vortices 3 and 4 vanish,
    so only ``kite_parameters`` is available there.
    """
    params = kite_parameters(m, branch)
    if params.m == 0.0:
        raise OutsideExistenceWindow("m = 0 makes two circulations vanish")
    pos = kite_positions(params, variant)
    y3, y4 = pos[2, 1], pos[3, 1]
    sys = VortexSystem(Circulations([1.0, 1.0, params.m, params.m]), pos)
    tag = KITE_PLUS if params.branch == "plus" else KITE_MINUS
    return FamilyMember(
        system=sys,
        family_tag=tag,
        variant=KITE_VARIANTS[_variant(variant, KITE_VARIANTS)],
        omega=kite_omega(params.m, y3, y4),
        parameters={**params.to_dict(), "y3": float(y3), "y4": float(y4),
                    "concave": params.concave},
    )


def kite_equations(m: float, y3: float, y4: float, omega: float) -> np.ndarray:
    """Residuals of the three reduced kite equations and the two polynomial
    relations obtained by eliminating ``omega``.

    The polynomial relations are divided by ``(1 + y3^2)(1 + y4^2)`` and
    ``(1 + y3^2)^{3/2} (1 + y4^2)^{3/2}`` so that they are relative to the
    size of their terms when the kite is very elongated.
    """
    e1 = -0.5 - m / (y3 * y3 + 1) - m / (y4 * y4 + 1) + omega
    e2 = y3 / (y3 * y3 + 1) + y4 / (y4 * y4 + 1) - omega * (y3 + y4) / (2 * m + 2)
    e3 = -2 * y3 / (y3 * y3 + 1) - m / (y3 - y4) + omega * (m * (y3 - y4) + 2 * y3) / (2 * m + 2)
    q1 = (y3 * y3 + 1) * (y4 * y4 + 1) - 4 * (y3 * y4 + 1) + 2 * m * (y3 - y4) ** 2
    q2 = (2 * y3 * y4 * (y3 - y4) ** 2
          + m * (y3 ** 3 * y4 - 3 * y3 ** 2 * y4 ** 2 + y3 * y4 ** 3 - 2 * y3 * y4 - 1))
    w = (y3 * y3 + 1) * (y4 * y4 + 1)
    return np.array([e1, e2, e3, q1 / w, q2 / w ** 1.5])


def pitchfork_parameter() -> float:
    """The real root of ``5 m^3 + 7 m^2 + 3 m + 9`` (about -1.6804)."""
    f = lambda x: ((5 * x + 7) * x + 3) * x + 9
    df = lambda x: (15 * x + 14) * x + 3
    lo, hi = -2.0, -1.0          # f(-2) < 0 < f(-1); the cubic is increasing here
    x = -1.7
    for _ in range(100):
        fx = f(x)
        if fx < 0:
            lo = x
        else:
            hi = x
        step = fx / df(x)
        nxt = x - step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi)
        if abs(nxt - x) <= 1e-16 * max(1.0, abs(x)):
            x = nxt
            break
        x = nxt
    return x


def asymmetric_positions(m: float, variant=0) -> np.ndarray:
    """Positions of the asymmetric family; defined for ``-1 < m <= 1``."""
    m = float(m)
    if not -1.0 < m <= 1.0:
        raise OutsideExistenceWindow(f"asymmetric family requires -1 < m <= 1, got {m}")
    k = _variant(variant, ASYMMETRIC_VARIANTS)
    a = math.sqrt(3 * m + 5)
    p, q = math.sqrt(m + 1), math.sqrt(1 - m)
    w = math.sqrt(max(1 - m * m, 0.0))
    h = math.sqrt(3.0) / 2.0
    x3, y3 = 0.5 * a * (p - q), h * (m + 1 + w)
    x4, y4 = 0.5 * a * (p + q), -h * (m + 1 - w)
    pos = np.array([[1.0, 0.0], [-1.0, 0.0], [x3, y3], [x4, y4]])
    name = ASYMMETRIC_VARIANTS[k]
    if "swap12" in name:
        pos[[0, 1]] = pos[[1, 0]]
    if "swap34" in name:
        pos[[2, 3]] = pos[[3, 2]]
    if "reflect" in name:
        pos[:, 1] *= -1.0
    return pos


def asymmetric(m: float, variant=0) -> FamilyMember:
    """Asymmetric family with ``omega = 1/2`` for every ``m``.

    ``m = 1`` is accepted as the closing endpoint (equilateral triangle with
    vortex 1 at its center); ``m = 0`` is rejected because two circulations
    vanish.
    """
    pos = asymmetric_positions(m, variant)
    m = float(m)
    if m == 0.0:
        raise OutsideExistenceWindow("m = 0 makes two circulations vanish")
    sys = VortexSystem(Circulations([1.0, 1.0, m, m]), pos)
    base = asymmetric_positions(m, 0)
    return FamilyMember(
        system=sys,
        family_tag=ASYMMETRIC,
        variant=ASYMMETRIC_VARIANTS[_variant(variant, ASYMMETRIC_VARIANTS)],
        omega=0.5,
        parameters={"m": m, "x3": base[2, 0], "y3": base[2, 1],
                    "x4": base[3, 0], "y4": base[3, 1], "concave": m > 0},
    )


def rhombus(m: float) -> FamilyMember:
    """Rhombus ``(+-1, 0), (0, +-y)`` with ``y^4 + 3 (m - 1) y^2 - m = 0``."""
    m = float(m)
    if m == 0.0 or abs(1.0 + m) < _WINDOW_TOL:
        raise OutsideExistenceWindow(f"rhombus needs m != 0 and m != -1, got {m}")
    y2 = (3 * (1 - m) + math.sqrt(9 * (1 - m) ** 2 + 4 * m)) / 2.0
    if not y2 > 0:
        raise OutsideExistenceWindow(f"no rhombus for m = {m}")
    y = math.sqrt(y2)
    sys = VortexSystem(Circulations([1.0, 1.0, m, m]),
                       [[1.0, 0.0], [-1.0, 0.0], [0.0, y], [0.0, -y]])
    return FamilyMember(sys, RHOMBUS, "base", kite_omega(m, y, -y), {"m": m, "y": y})


def reference_configs(kind: str, gamma=None, ordering=(1, 2, 3), variant: str = "base") -> FamilyMember:
    """Small reference configurations.

    ``Equilateral3``: unit-side triangle, labels counter-clockwise (``variant
    = "reflect"`` gives the mirror image). ``Collinear3``: Newton-refined
    collinear triple in the given left-to-right ``ordering``.
    ``EquilateralCenter``: the degenerate ``m = 1`` kite.
    """
    if kind == EQUILATERAL3:
        g = Circulations([1.0, 1.0, 1.0] if gamma is None else gamma)
        if g.n != 3:
            raise DimensionError("Equilateral3 needs three circulations")
        pos = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
        if variant == "reflect":
            pos[:, 1] *= -1.0
        elif variant != "base":
            raise ValidationError(f"unknown variant {variant!r}")
        sys = VortexSystem(g, pos)
        return FamilyMember(sys, EQUILATERAL3, variant, invariants(sys).omega, {})
    if kind == COLLINEAR3:
        from .solver import find_collinear
        g = Circulations([1.0, 1.0, 1.0] if gamma is None else gamma)
        if g.n != 3:
            raise DimensionError("Collinear3 needs three circulations")
        eq = find_collinear(g, ordering)
        return FamilyMember(eq.system, COLLINEAR3, "-".join(map(str, ordering)),
                            eq.omega, {"ordering": list(ordering)})
    if kind == EQUILATERAL_CENTER:
        k = kite(1.0, "minus", 0)
        return FamilyMember(k.system, EQUILATERAL_CENTER, "base", k.omega, k.parameters)
    raise ValidationError(f"unknown reference configuration {kind!r}")


# ----------------------------------------------------------------------------
# Dziobek relations

@dataclass(frozen=True)
class DziobekResidual:
    """Relative residuals of the cross-multiplied four-vortex relations.

    ``degenerate[k]`` is set when both sides of relation ``k`` vanish
    identically (e.g. equal distances in a rhombus); the residual is then
    measured against the configuration scale instead.
    """

    values: np.ndarray
    degenerate: tuple

    @property
    def max(self) -> float:
        return float(np.max(self.values))


def oriented_areas(positions: np.ndarray) -> np.ndarray:
    """``Delta_i`` = oriented area of the triangle without vortex ``i`` with
    alternating sign, so that ``sum Delta_i = 0``."""
    def area(a, b, c):
        return 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))

    p = positions
    return np.array([-area(p[1], p[2], p[3]), area(p[0], p[2], p[3]),
                     -area(p[0], p[1], p[3]), area(p[0], p[1], p[2])])


def dziobek_residual(sys: VortexSystem) -> DziobekResidual:
    if sys.n != 4:
        raise DimensionError("Dziobek relations apply to four vortices")
    g = sys.gamma
    s = squared_distances(sys.positions)
    d = oriented_areas(sys.positions)
    S = lambda i, j: s[i - 1, j - 1]
    G = lambda i: g[i - 1]
    D = lambda i: d[i - 1]
    pairs = [
        (G(1) * D(2) * S(2, 3) * S(2, 4) * (S(1, 4) - S(1, 3)),
         G(2) * D(1) * S(1, 3) * S(1, 4) * (S(2, 4) - S(2, 3))),
        (G(1) * D(3) * S(2, 3) * S(3, 4) * (S(1, 4) - S(1, 2)),
         G(3) * D(1) * S(1, 2) * S(1, 4) * (S(3, 4) - S(2, 3))),
        (G(3) * D(4) * S(1, 4) * S(2, 4) * (S(2, 3) - S(1, 3)),
         G(4) * D(3) * S(1, 3) * S(2, 3) * (S(2, 4) - S(1, 4))),
        ((S(1, 3) - S(1, 2)) * (S(2, 3) - S(3, 4)) * (S(2, 4) - S(1, 4)),
         (S(1, 2) - S(1, 4)) * (S(2, 4) - S(3, 4)) * (S(1, 3) - S(2, 3))),
    ]
    smax = float(np.max(s))
    ref_area = max(float(np.max(np.abs(d))), 1e-300)
    refs = [smax ** 3 * float(np.max(np.abs(g))) * ref_area] * 3 + [smax ** 3]
    vals, flags = [], []
    for (a, b), ref in zip(pairs, refs):
        mag = abs(a) + abs(b)
        if mag <= 1e-10 * ref:
            vals.append(abs(a - b) / ref)
            flags.append(True)
        else:
            vals.append(abs(a - b) / mag)
            flags.append(False)
    return DziobekResidual(np.array(vals), tuple(flags))
