"""Command-line interface.

Every flag can also be set through an environment variable ``VORTEX_<FLAG>``
(upper case, dashes as underscores, e.g. ``VORTEX_SEED=7``); explicit flags
win. Exit status is 0 on success, 1 for invalid input and 2 for numerical
failure. Every artifact embeds the configuration that produced it.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys

import numpy as np

from . import families
from .dynamics import growth_fit, integrate, rigid_rotation_error, unstable_directions
from .errors import NumericalError, ValidationError, VortexError
from .model import VortexSystem, invariants
from .morse import nondegeneracy_certificate
from .serialize import dumps, to_jsonable
from .solver import CLASS_TOL, analyze, census
from .spectral import RESIDUAL_TOL, ZERO_TOL

ENV_PREFIX = "VORTEX_"

FAMILY_KINDS = ("kite", "asymmetric", "rhombus", "equilateral3", "collinear3", "equilateral-center")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v != ""]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` including both endpoints (within 1e-12)."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ValidationError(f"m-grid must be start:stop:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ValidationError(f"m-grid must be numeric, got {text!r}") from None
    if step <= 0 or stop < start:
        raise ValidationError("m-grid needs step > 0 and stop >= start")
    count = int(math.floor((stop - start) / step + 1e-12)) + 1
    values = [round(start + k * step, 12) for k in range(count)]
    if abs(start + count * step - stop) <= 1e-12:
        values.append(round(stop, 12))
    return values


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol-residual", type=float, default=RESIDUAL_TOL,
                   help="relative residual accepted as a relative equilibrium")
    p.add_argument("--tol-zero", type=float, default=ZERO_TOL,
                   help="relative threshold for zero eigenvalues")
    p.add_argument("--output", default="-", help="output file ('-' for stdout)")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _family_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--kind", choices=FAMILY_KINDS, default="kite")
    p.add_argument("--m", type=float, default=0.6)
    p.add_argument("--branch", choices=("plus", "minus"), default="minus")
    p.add_argument("--variant", default="0", help="variant index or label")
    p.add_argument("--gamma", default=None, help="circulations for three-vortex references")
    p.add_argument("--ordering", default="1,2,3", help="left-to-right order for collinear3")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vortexmorse", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("family", help="closed-form family member and its spectrum")
    _family_args(p)
    _common(p)

    p = sub.add_parser("analyze", help="spectral analysis of a given system")
    p.add_argument("--input", help="JSON file with 'circulations' and 'positions'")
    p.add_argument("--gamma", help="circulations (with --positions)")
    p.add_argument("--positions", help="flat x1,y1,x2,y2,... (with --gamma)")
    _common(p)

    p = sub.add_parser("census", help="random-restart enumeration of relative equilibria")
    p.add_argument("--gamma", default="1,1,0.6,0.6")
    p.add_argument("--restarts", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tol-class", type=float, default=CLASS_TOL)
    _common(p)

    p = sub.add_parser("audit", help="census and certificates over an m-grid")
    p.add_argument("--m-grid", default="0.1:0.9:0.1")
    p.add_argument("--restarts", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tol-class", type=float, default=CLASS_TOL)
    _common(p)

    p = sub.add_parser("simulate", help="integrate a family member or input system")
    _family_args(p)
    p.add_argument("--input", help="JSON system file (overrides --kind)")
    p.add_argument("--t-final", type=float, default=None, help="default: one period")
    p.add_argument("--method", choices=("rk45", "rk4"), default="rk45")
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--samples", type=int, default=201)
    _common(p)

    p = sub.add_parser("growth", help="measure perturbation growth rates")
    _family_args(p)
    p.add_argument("--eps", type=float, default=1e-7)
    p.add_argument("--horizon", type=float, default=None)
    _common(p)

    _apply_env(parser)
    return parser


def _apply_env(parser: argparse.ArgumentParser) -> None:
    """Replace defaults by ``VORTEX_*`` environment values."""
    subs = [parser]
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            subs.extend(action.choices.values())
    for p in subs:
        for action in p._actions:
            if not action.option_strings or action.dest == "help":
                continue
            key = ENV_PREFIX + action.dest.upper()
            if key in os.environ:
                raw = os.environ[key]
                try:
                    value = action.type(raw) if action.type else raw
                except ValueError:
                    raise ValidationError(f"{key}={raw!r} is not a valid value") from None
                if action.choices and value not in action.choices:
                    raise ValidationError(f"{key} must be one of {list(action.choices)}")
                action.default = value


# ----------------------------------------------------------------------------
# commands

def _variant(text):
    return int(text) if str(text).isdigit() else str(text)


def _member(args) -> families.FamilyMember:
    kind = args.kind
    if kind == "kite":
        return families.kite(args.m, args.branch, _variant(args.variant))
    if kind == "asymmetric":
        return families.asymmetric(args.m, _variant(args.variant))
    if kind == "rhombus":
        return families.rhombus(args.m)
    gamma = parse_floats(args.gamma) if args.gamma else None
    if kind == "equilateral3":
        return families.reference_configs(families.EQUILATERAL3, gamma=gamma,
                                          variant="base" if str(args.variant) in ("0", "base") else str(args.variant))
    if kind == "collinear3":
        order = [int(v) for v in parse_floats(args.ordering)]
        return families.reference_configs(families.COLLINEAR3, gamma=gamma, ordering=order)
    return families.reference_configs(families.EQUILATERAL_CENTER)


def _analyze(sys_, args):
    return analyze(sys_, tol=max(args.tol_residual, 1e-9), tol_zero=args.tol_zero)


def cmd_family(args) -> dict:
    member = _member(args)
    eq = _analyze(member.system, args)
    out = {"member": member.to_dict(), "equilibrium": eq.to_dict()}
    if member.system.n == 4:
        out["certificate"] = nondegeneracy_certificate(member.system)
    return out


def _load_system(args) -> VortexSystem:
    if getattr(args, "input", None):
        try:
            with open(args.input) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read system from {args.input}: {exc}") from None
        if "system" in data:
            data = data["system"]
        return VortexSystem.from_dict(data)
    if getattr(args, "gamma", None) and getattr(args, "positions", None):
        return VortexSystem.from_flat(parse_floats(args.gamma), parse_floats(args.positions))
    raise ValidationError("give --input FILE or both --gamma and --positions")


def cmd_analyze(args) -> dict:
    sys_ = _load_system(args)
    eq = _analyze(sys_, args)
    return {"equilibrium": eq.to_dict()}


def cmd_census(args):
    rep = census(parse_floats(args.gamma), args.restarts, args.seed,
                 workers=args.threads, tol=args.tol_class)
    if args.format == "csv":
        return rep.summary_csv()
    return {"census": rep.to_dict()}


def _pair_structure(eq) -> dict:
    rep = eq.spectral
    return {"real_pairs": rep.real_pairs, "imaginary_pairs": len(rep.imaginary_pairs()),
            "index": eq.index, "nullity": rep.nullity}


def cmd_audit(args) -> dict:
    grid = parse_grid(args.m_grid)
    if not all(0.0 < m <= 1.0 for m in grid):
        raise ValidationError("audit m-grid must lie in (0, 1], where both concave families exist")
    rows = []
    for m in grid:
        row: dict = {"m": m}
        rep = census([1.0, 1.0, m, m], args.restarts, args.seed,
                     workers=args.threads, tol=args.tol_class)
        concave = sorted({c.equilibrium.index for c in rep.classes
                          if c.equilibrium.geometry.kind == "Concave"})
        row.update({
            "count": rep.count,
            "gamma": rep.gamma,
            "counts_by_geometry": rep.counts_by_geometry,
            "audit": None if rep.audit is None else rep.audit.to_dict(),
            "concave_indices": concave,
            "min_separation": rep.min_separation,
            "saturated": rep.saturated(),
            "failures": rep.failures,
        })
        fams = {}
        for label, make in (("kite_plus", lambda: families.kite(m, "plus")),
                            ("kite_minus", lambda: families.kite(m, "minus")),
                            ("asymmetric", lambda: families.asymmetric(m))):
            try:
                member = make()
            except ValidationError as exc:
                fams[label] = {"error": str(exc)}
                continue
            eq = _analyze(member.system, args)
            fams[label] = {"certificate": nondegeneracy_certificate(member.system),
                           **_pair_structure(eq)}
        row["families"] = fams
        rows.append(row)
    return {"rows": rows}


def _simulation_system(args):
    if args.input:
        sys_ = _load_system(args)
        inv = invariants(sys_)
        return sys_, inv.omega
    member = _member(args)
    return member.system, member.omega


def cmd_simulate(args):
    sys_, omega = _simulation_system(args)
    t_final = args.t_final if args.t_final is not None else 2.0 * math.pi / omega
    traj = integrate(sys_, t_final, method=args.method, rtol=args.rtol, step=args.step,
                     samples=args.samples)
    if args.format == "csv":
        buf = io.StringIO()
        traj.write_csv(buf)
        return buf.getvalue()
    return {
        "t_final": t_final,
        "omega": omega,
        "collision": traj.collision,
        "rigid_rotation_error": rigid_rotation_error(traj, omega),
        "max_drift_H": float(np.max(traj.drift_H)),
        "max_drift_I": float(np.max(traj.drift_I)),
        "max_drift_c": float(np.max(traj.drift_c)),
        "final_positions": traj.final.tolist(),
    }


def cmd_growth(args) -> dict:
    member = _member(args)
    eq = _analyze(member.system, args)
    rows = []
    for lam, w in unstable_directions(eq):
        fit = growth_fit(eq, w, eps=args.eps, horizon=args.horizon)
        rows.append({"predicted": lam, "fitted": fit.rate,
                     "relative_error": abs(fit.rate - lam) / lam,
                     "window": list(fit.window), "points": fit.points})
    return {"member": member.to_dict(), "index": eq.index, "directions": rows}


COMMANDS = {
    "family": cmd_family,
    "analyze": cmd_analyze,
    "census": cmd_census,
    "audit": cmd_audit,
    "simulate": cmd_simulate,
    "growth": cmd_growth,
}


def _config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items())}


def _emit(args, result) -> None:
    config = _config(args)
    if isinstance(result, str):
        text = "# config: " + json.dumps(to_jsonable(config), sort_keys=True) + "\n" + result
    else:
        text = dumps({"config": config, **result})
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return 1
        if getattr(args, "restarts", 1) < 1:
            raise ValidationError("--restarts must be at least 1")
        seed = getattr(args, "seed", 0)
        if not 0 <= seed < 2 ** 64:
            raise ValidationError("--seed must be an unsigned 64-bit integer")
        if getattr(args, "threads", 1) < 1:
            raise ValidationError("--threads must be at least 1")
        if args.format == "csv" and args.command not in ("census", "simulate"):
            raise ValidationError("csv output is available for census and simulate only")
        result = COMMANDS[args.command](args)
        _emit(args, result)
        return 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except VortexError as exc:      # pragma: no cover - every error is one of the two kinds
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
