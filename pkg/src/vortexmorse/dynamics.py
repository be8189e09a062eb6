"""Time integration of the point-vortex equations and dynamical checks.

The flow is ``z' = K M^-1 grad H`` (vortex ``i`` moves with
``(1/G_i) J dH/dz_i``); with positive circulations a relative equilibrium
rotates counter-clockwise, ``z(t) = c + R(omega t)(z(0) - c)`` where ``R`` is
the usual counter-clockwise rotation matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import CollisionError, NoGrowthWindow, StepUnderflow, ValidationError
from .model import VortexSystem, _gradient, apply_K, invariants, min_separation, rotate

COLLISION_APPROACH = 1e-4


def vortex_rhs(gamma: np.ndarray):
    g = np.asarray(gamma, float)

    def rhs(t, z):
        grad = _gradient(g, z.reshape(-1, 2))
        out = np.empty_like(grad)
        out[:, 0] = grad[:, 1] / g
        out[:, 1] = -grad[:, 0] / g
        return out.ravel()

    return rhs


@dataclass
class Trajectory:
    gamma: np.ndarray
    times: np.ndarray
    states: np.ndarray          # (k, n, 2)
    drift_H: np.ndarray
    drift_I: np.ndarray
    drift_c: np.ndarray
    collision: bool = False
    message: str = ""

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    def write_csv(self, fh) -> None:
        n = self.states.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        header = ["t"] + [f"{a}{i}" for i in range(1, n + 1) for a in ("x", "y")]
        w.writerow(header + ["H", "I", "cx", "cy"])
        for t, pos in zip(self.times, self.states):
            inv = invariants(VortexSystem(self.gamma, pos))
            c = inv.center if inv.center is not None else (math.nan, math.nan)
            w.writerow([repr(float(t))] + [repr(float(v)) for v in pos.ravel()]
                       + [repr(inv.hamiltonian), repr(inv.angular_impulse),
                          repr(float(c[0])), repr(float(c[1]))])


def _monitor(gamma, times, states, collision=False, message="") -> Trajectory:
    inv0 = invariants(VortexSystem(gamma, states[0]))
    dH, dI, dc = [], [], []
    for pos in states:
        try:
            inv = invariants(VortexSystem(gamma, pos))
        except CollisionError:
            dH.append(math.inf), dI.append(math.inf), dc.append(math.inf)
            continue
        dH.append(abs(inv.hamiltonian - inv0.hamiltonian))
        if inv0.center is None:
            dI.append(math.nan)
            dc.append(math.nan)
        else:
            dI.append(abs(inv.angular_impulse - inv0.angular_impulse))
            dc.append(float(np.linalg.norm(inv.center - inv0.center)))
    return Trajectory(np.asarray(gamma, float), np.asarray(times, float), np.asarray(states),
                      np.array(dH), np.array(dI), np.array(dc), collision, message)


def integrate(sys: VortexSystem, t_final: float, method: str = "rk45", rtol: float = 1e-10,
              atol: float | None = None, step: float | None = None,
              samples: int = 201, t_eval=None) -> Trajectory:
    """Integrate the vortex equations up to ``t_final``.

    ``method="rk45"`` uses an adaptive Dormand-Prince pair with relative
    tolerance ``rtol`` and, unless given, absolute tolerance ``0.01 rtol``
    times the coordinate scale; ``method="rk4"`` uses classical fixed-step RK4 with
    step ``step``. Integration stops early, with ``collision=True``, once two
    vortices come closer than 1e-4.
    """
    if not t_final > 0:
        raise ValidationError("t_final must be positive")
    if min_separation(sys.positions) < COLLISION_APPROACH:
        raise CollisionError("initial configuration is within the collision-approach distance")
    rhs = vortex_rhs(sys.gamma)
    n = sys.n
    method = method.lower()
    if method == "rk4":
        if step is None or not step > 0:
            raise ValidationError("rk4 needs a positive step")
        return _rk4(sys, rhs, t_final, step)
    if method != "rk45":
        raise ValidationError(f"unknown method {method!r}; use 'rk45' or 'rk4'")

    def approach(t, z):
        return min_separation(z.reshape(-1, 2)) - COLLISION_APPROACH

    approach.terminal = True
    approach.direction = -1
    if t_eval is None:
        t_eval = np.linspace(0.0, t_final, max(int(samples), 2))
    scale = float(np.max(np.abs(sys.z))) or 1.0
    sol = solve_ivp(rhs, (0.0, t_final), sys.z, method="RK45", rtol=rtol,
                    atol=1e-2 * rtol * scale if atol is None else atol,
                    t_eval=t_eval, events=approach)
    if sol.status == -1:
        raise StepUnderflow(f"adaptive integration failed: {sol.message}")
    states = sol.y.T.reshape(-1, n, 2)
    times = sol.t
    collision = sol.status == 1
    if collision:
        times = np.append(times, sol.t_events[0][0])
        states = np.concatenate([states, sol.y_events[0][0].reshape(1, n, 2)])
    return _monitor(sys.gamma, times, states, collision,
                    "collision approach" if collision else sol.message)


def _rk4(sys: VortexSystem, rhs, t_final: float, step: float) -> Trajectory:
    nsteps = max(1, int(math.ceil(t_final / step - 1e-12)))
    h = t_final / nsteps
    z = sys.z.copy()
    times = [0.0]
    states = [z.copy()]
    collision = False
    for k in range(nsteps):
        t = k * h
        k1 = rhs(t, z)
        k2 = rhs(t + h / 2, z + h / 2 * k1)
        k3 = rhs(t + h / 2, z + h / 2 * k2)
        k4 = rhs(t + h, z + h * k3)
        z = z + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        times.append((k + 1) * h)
        states.append(z.copy())
        if min_separation(z.reshape(-1, 2)) < COLLISION_APPROACH:
            collision = True
            break
    return _monitor(sys.gamma, times, np.array(states).reshape(len(states), sys.n, 2),
                    collision, "collision approach" if collision else "completed")


def rigid_rotation_error(traj: Trajectory, omega: float) -> float:
    """Max distance between the trajectory and the rigid rotation of its
    initial state by angle ``omega t`` about the initial center of vorticity."""
    sys0 = VortexSystem(traj.gamma, traj.states[0])
    c = invariants(sys0).center
    err = 0.0
    for t, pos in zip(traj.times, traj.states):
        pred = rotate(traj.states[0], omega * t, c)
        err = max(err, float(np.max(np.hypot(*(pos - pred).T))))
    return err


# ----------------------------------------------------------------------------
# growth rates

def unstable_directions(eq) -> list[tuple[float, np.ndarray]]:
    """``(lambda, w)`` for each real pair: ``w`` is the eigenvector of the
    stability matrix for ``+lambda`` built inside ``span{v, Kv}`` from a
    modified-Hessian eigenvector ``v`` with ``nu < 0``."""
    rep = eq.spectral
    omega = rep.multiplier
    out = []
    for k, nu in enumerate(rep.nontrivial_nu):
        if nu < -rep.tolerance:
            lam = math.sqrt(nu * (nu - 2.0 * omega))
            v = rep.modes[:, k]
            w = -(2.0 * omega - nu) / lam * v + apply_K(v)
            out.append((lam, w / np.linalg.norm(w)))
    return out


@dataclass(frozen=True)
class GrowthFit:
    rate: float
    window: tuple
    points: int


def growth_fit(eq, direction=None, eps: float = 1e-7, horizon: float | None = None,
               rtol: float = 1e-12, samples: int = 4000) -> GrowthFit:
    """Least-squares slope of log deviation in the co-rotating frame.

    The deviation is measured after rotating the trajectory back by
    ``omega t``; only samples with deviation in ``[10 eps, 1e-2]`` enter the
    fit. ``direction`` defaults to the fastest unstable direction.
    """
    if not 1e-8 <= eps <= 1e-5:
        raise ValidationError("eps must lie in [1e-8, 1e-5]")
    sys = eq.system
    omega = eq.omega
    if direction is None:
        dirs = unstable_directions(eq)
        if not dirs:
            direction = eq.spectral.modes[:, 0] if eq.spectral.modes.shape[1] else None
            if direction is None:
                raise NoGrowthWindow("no nontrivial direction to perturb")
            lam_guess = None
        else:
            lam_guess, direction = max(dirs, key=lambda d: d[0])
    else:
        lam_guess = None
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    if horizon is None:
        horizon = 3.0 * math.log(1e-2 / eps) / lam_guess if lam_guess else 20.0 * 2.0 * math.pi / omega
    start = sys.with_positions(sys.positions + eps * d.reshape(-1, 2))
    traj = integrate(start, horizon, rtol=rtol, samples=samples)
    base = sys.positions
    c0 = invariants(sys).center
    dev = np.array([
        float(np.linalg.norm(rotate(pos, -omega * t, c0) - base))
        for t, pos in zip(traj.times, traj.states)
    ])
    sel = (dev >= 10.0 * eps) & (dev <= 1e-2)
    if not np.any(dev >= 10.0 * eps):
        raise NoGrowthWindow(f"deviation stayed below {10 * eps:.1e} up to t = {horizon:.4g}")
    # use the first contiguous stretch inside the window
    idx = np.flatnonzero(sel)
    if idx.size < 3:
        raise NoGrowthWindow("too few samples inside the fit window")
    breaks = np.flatnonzero(np.diff(idx) > 1)
    if breaks.size:
        idx = idx[: breaks[0] + 1]
    if idx.size < 3:
        raise NoGrowthWindow("too few contiguous samples inside the fit window")
    t = traj.times[idx]
    slope, _ = np.polyfit(t, np.log(dev[idx]), 1)
    return GrowthFit(float(slope), (float(t[0]), float(t[-1])), int(idx.size))


def growth_rate(eq, direction=None, eps: float = 1e-7, horizon: float | None = None,
                rtol: float = 1e-12) -> float:
    return growth_fit(eq, direction, eps, horizon, rtol).rate
