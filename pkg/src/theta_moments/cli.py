"""Command-line front end.

Every subcommand prints (or writes to --out) one JSON document carrying
``"schema": 1``, the resolved configuration and the result.  Counts are JSON
integers; reals are decimal strings with 17 significant digits so that the
output is byte-stable.  Exit codes: 0 success, 1 computation error, 2 usage
error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from fractions import Fraction

SCHEMA = 1
log = logging.getLogger("theta_moments")


class UsageError(ValueError):
    pass


def real(x) -> str:
    return "%.17g" % float(x)


def cplx(z) -> dict:
    z = complex(z)
    return {"re": real(z.real), "im": real(z.imag)}


# ---------------------------------------------------------------- argument grammar

def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--out", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--cache-dir", help="result cache directory (default: $THETA_MOMENT_CACHE, else no cache)")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="theta-moments", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        return p

    p = cmd("count", "lattice points of norm n in a u-ball")
    p.add_argument("--order", default="full")
    p.add_argument("--z", default="i")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)

    p = cmd("profile", "counts for n = 1..N on a grid of radii")
    p.add_argument("--order", default="full")
    p.add_argument("--z", default="i")
    p.add_argument("--N", type=int, required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--delta", type=float)
    g.add_argument("--delta-grid", help="a:b:steps, evenly spaced including both ends")

    p = cmd("kernel", "truncated kernel sum S(n; z, w)")
    p.add_argument("--order", default="full")
    p.add_argument("--z", default="i")
    p.add_argument("--w", default=None)
    p.add_argument("--m", type=int, default=12)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-10)

    p = cmd("hecke", "ratio S(n; z, w) / S(1; z, w) against a(n) / n^(m/2-1)")
    p.add_argument("--z", default="i")
    p.add_argument("--w", default=None)
    p.add_argument("--m", type=int, default=12)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-11)

    p = cmd("theta", "theta coefficients n^(m/2-1) S(n; z, w) for n <= N")
    p.add_argument("--z", default="i")
    p.add_argument("--w", default=None)
    p.add_argument("--m", type=int, default=12)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-11)

    p = cmd("weil-orbit", "orbit of 1_R under the local Weil representation")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--level", type=int, default=1)
    p.add_argument("--ramified", action="store_true")

    p = cmd("char-sum", "sum of psi(u N(alpha)/p) over F_{p^2}")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--u", type=int, default=None, help="default: every unit")

    p = cmd("global-orbit", "lattice classes of the global orbit")
    p.add_argument("--q", type=int, default=1)
    p.add_argument("--D-B", dest="D_B", type=int, default=1)

    p = cmd("quat-count", "norm-n elements of a division order in a u-ball")
    p.add_argument("--D-E", dest="D_E", type=int, default=-19)
    p.add_argument("--D-B", dest="D_B", type=int, default=6)
    p.add_argument("--lattice", choices=("simple", "different"), default="simple")
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--delta", type=float, required=True)

    p = cmd("moment-trend", "second moments at delta = 1/N and the fitted growth exponent")
    p.add_argument("--order", default="full")
    p.add_argument("--z", default="i")
    p.add_argument("--N", default="100,200,400", help="comma-separated horizons")

    p = cmd("report-bounds", "spectral lower and geometric upper bounds for the sup norm")
    p.add_argument("--z", default="i")
    p.add_argument("--m", default="12", help="weight or comma-separated weights")
    p.add_argument("--N", type=int, default=None)
    return parser


# ---------------------------------------------------------------- config resolution

def _point(text: str):
    from .halfplane import Point

    try:
        return Point.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _positive(name, v, allow_zero=False):
    if v is None:
        return v
    if (v < 0) if allow_zero else (v <= 0):
        raise UsageError(f"--{name} must be {'non-negative' if allow_zero else 'positive'}")
    if isinstance(v, float) and not math.isfinite(v):
        raise UsageError(f"--{name} must be finite")
    return v


def _delta_grid(text: str):
    try:
        a, b, steps = text.split(":")
        a, b, steps = float(a), float(b), int(steps)
    except ValueError as exc:
        raise UsageError("--delta-grid must look like a:b:steps") from exc
    if steps < 1 or a < 0 or b < a:
        raise UsageError("--delta-grid needs 0 <= a <= b and steps >= 1")
    if steps == 1:
        return [a]
    return [a + (b - a) * i / (steps - 1) for i in range(steps)]


def _int_list(text: str, name: str):
    try:
        vals = [int(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"--{name} must be comma-separated integers") from exc
    if not vals or any(v < 1 for v in vals):
        raise UsageError(f"--{name} values must be positive")
    return vals


def resolve_config(args: argparse.Namespace) -> dict:
    """Validated, canonical configuration embedded in every report."""
    c = {"command": args.command}
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    if hasattr(args, "order"):
        from .lattice import OrderSpec

        try:
            c["order"] = OrderSpec.parse(args.order).label()
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    for name in ("z", "w"):
        if hasattr(args, name):
            text = getattr(args, name)
            if text is None:
                text = args.z
            pt = _point(text)
            c[name] = [real(pt.x), real(pt.y)]
    if args.command in ("kernel", "hecke", "theta"):
        c["m"] = _positive("m", args.m)
        c["tol"] = real(_positive("tol", args.tol))
    for name in ("n", "p", "level", "q", "D_B", "N"):
        if hasattr(args, name) and not isinstance(getattr(args, name), str) and getattr(args, name) is not None:
            c[name] = _positive(name.replace("_", "-"), getattr(args, name), allow_zero=(name == "level"))
    if hasattr(args, "delta") and args.delta is not None:
        c["delta"] = real(_positive("delta", args.delta, allow_zero=True))
    if getattr(args, "delta_grid", None):
        c["delta_grid"] = [real(d) for d in _delta_grid(args.delta_grid)]
    if args.command == "weil-orbit":
        c["ramified"] = bool(args.ramified)
        if args.ramified and args.level != 1:
            raise UsageError("the ramified local order has level 1 (exponent of p)")
    if args.command in ("weil-orbit", "char-sum"):
        from .weil.local import is_prime

        if not is_prime(args.p):
            raise UsageError("--p must be prime")
    if args.command == "char-sum":
        if args.u is not None and args.u % args.p == 0:
            raise UsageError("--u must be a unit mod p")
        c["u"] = args.u
    if args.command == "quat-count":
        c.update({"D_E": args.D_E, "D_B": _positive("D-B", args.D_B), "lattice": args.lattice,
                  "lam": real(args.lam), "theta": real(args.theta)})
        if not args.lam >= 1:
            raise UsageError("--lam must be at least 1")
    if args.command == "moment-trend":
        c["N"] = _int_list(args.N, "N")
    if args.command == "report-bounds":
        c["m"] = _int_list(args.m, "m")
        if args.N is not None:
            c["N"] = _positive("N", args.N)
    return c


# ---------------------------------------------------------------- commands

def _pt(c, name):
    from .halfplane import Point

    x, y = c[name]
    return Point(float(x), float(y))


def _order(c):
    from .lattice import OrderSpec

    return OrderSpec.parse(c["order"])


def cmd_count(c, threads):
    from .halfplane import point_matrix
    from .lattice import CountQuery, count_norm_ball

    q = CountQuery(_order(c), point_matrix(_pt(c, "z")), c["n"], float(c["delta"]))
    return {"count": count_norm_ball(q)}


def cmd_profile(c, threads):
    from .halfplane import point_matrix
    from .lattice import count_profile, second_moment

    deltas = [float(d) for d in c.get("delta_grid", [c.get("delta")])]
    g = point_matrix(_pt(c, "z"))
    out, rows = [], []
    for d in deltas:
        prof = count_profile(_order(c), g, c["N"], d, threads=threads)
        out.append({"delta": real(d), "counts": list(map(int, prof.counts)),
                    "second_moment": int(round(second_moment(prof)))})
        rows += [[real(d), n + 1, int(k)] for n, k in enumerate(prof.counts)]
    return {"profiles": out, "_rows": (["delta", "n", "count"], rows)}


def cmd_kernel(c, threads):
    from .bergman import KernelSumParams, kernel_sum

    s = kernel_sum(c["n"], _pt(c, "z"), _pt(c, "w"), KernelSumParams(c["m"], float(c["tol"])), _order(c))
    return {"S": cplx(s)}


def cmd_hecke(c, threads):
    from .bergman import hecke_ratio, predicted_hecke_ratio, tau_over

    k = hecke_ratio(c["n"], c["m"], _pt(c, "z"), _pt(c, "w"), float(c["tol"]))
    pred = predicted_hecke_ratio(c["n"], c["m"])
    return {"kappa": real(k.real), "kappa_imag": real(k.imag), "tau_over": tau_over(c["n"], c["m"]),
            "predicted": real(pred), "rel_error": real(abs(k - float(pred)) / abs(float(pred))) if pred else None}


def cmd_theta(c, threads):
    from .bergman import theta_coefficient

    z, w = _pt(c, "z"), _pt(c, "w")
    coeffs = [theta_coefficient(n, z, w, c["m"], float(c["tol"])) for n in range(1, c["N"] + 1)]
    rows = [[n, real(v.real), real(v.imag)] for n, v in enumerate(coeffs, 1)]
    return {"coefficients": [cplx(v) for v in coeffs], "_rows": (["n", "re", "im"], rows)}


def cmd_weil_orbit(c, threads):
    from .weil import local_orbit, orbit_index, predicted_orbit
    from .weil.orbits import orbit_to_json

    p, n, ram = c["p"], c["level"], c["ramified"]
    if ram:
        n = 1
    orbit = local_orbit(p, n, ram)
    pred = predicted_orbit(p, n, ram)
    golden = json.loads(orbit_to_json(p, n, ram, orbit))
    return {"orbit_size": len(orbit), "predicted_size": len(pred), "index": orbit_index(p, n, ram),
            "matches_prediction": set(orbit) == set(pred), "model": golden["model"], "orbit": golden["orbit"]}


def cmd_char_sum(c, threads):
    from .weil import norm_character_sum

    p = c["p"]
    units = [c["u"]] if c["u"] is not None else list(range(1, p))
    rows, out = [], []
    for u in units:
        v = norm_character_sum(p, u)
        ok = v.scale == 0 and v.L == 0 and v.coeffs == (-p,)
        out.append({"u": u, "level": v.L, "scale": v.scale, "coeffs": list(v.coeffs), "equals_minus_p": ok})
        rows.append([u, " ".join(map(str, v.coeffs)), ok])
    return {"sums": out, "all_equal_minus_p": all(o["equals_minus_p"] for o in out),
            "_rows": (["u", "coeffs", "equals_minus_p"], rows)}


def cmd_global_orbit(c, threads):
    from .weil import global_orbit

    cat = global_orbit(c["q"], c["D_B"])
    d = cat.to_dict()
    rows = [[e["a"], e["multiplicity"], e["coefficient"], e["u_modulus"], e["t_modulus"]] for e in d["entries"]]
    d["_rows"] = (["a", "multiplicity", "coefficient", "u_modulus", "t_modulus"], rows)
    return d


def cmd_quat_count(c, threads):
    from .quaternion import CartanParams, DivisionOrderModel, ImagQuadField, count_quat

    model = DivisionOrderModel(ImagQuadField(c["D_E"]), c["D_B"], c["lattice"])
    return {"count": count_quat(model, CartanParams(float(c["lam"]), float(c["theta"])), c["n"], float(c["delta"]))}


def cmd_moment_trend(c, threads):
    import numpy as np

    from .halfplane import point_matrix
    from .lattice import count_profile, second_moment

    g = point_matrix(_pt(c, "z"))
    rows, moments = [], []
    for N in c["N"]:
        prof = count_profile(_order(c), g, N, 1.0 / N, threads=threads)
        mom = int(round(second_moment(prof)))
        moments.append(mom)
        rows.append({"N": N, "delta": real(1.0 / N), "second_moment": mom, "counts": list(map(int, prof.counts))})
    slope = None
    if len(c["N"]) >= 2:
        slope = real(np.polyfit(np.log(c["N"]), np.log(moments), 1)[0])
    return {"moments": rows, "fitted_exponent": slope,
            "_rows": (["N", "second_moment"], [[r["N"], r["second_moment"]] for r in rows])}


def cmd_report_bounds(c, threads):
    from .bergman import geometric_upper_bound_at, spectral_lower_bound

    z = _pt(c, "z")
    out, rows = [], []
    for m in c["m"]:
        lo = spectral_lower_bound(z, m)
        hi = geometric_upper_bound_at(z, m, N=c.get("N"))
        ok = math.isfinite(lo) and math.isfinite(hi) and lo > 0 and hi > 0
        if not ok:
            raise ArithmeticError(f"bounds at m={m} are not finite and positive")
        out.append({"m": m, "spectral_lower_bound": real(lo), "geometric_upper_bound": real(hi), "ratio": real(hi / lo)})
        rows.append([m, real(lo), real(hi), real(hi / lo)])
        log.info("m=%d lower=%.6g upper=%.6g ratio=%.6g", m, lo, hi, hi / lo)
    return {"bounds": out, "_rows": (["m", "spectral_lower_bound", "geometric_upper_bound", "ratio"], rows)}


COMMANDS = {
    "count": cmd_count, "profile": cmd_profile, "kernel": cmd_kernel, "hecke": cmd_hecke, "theta": cmd_theta,
    "weil-orbit": cmd_weil_orbit, "char-sum": cmd_char_sum, "global-orbit": cmd_global_orbit,
    "quat-count": cmd_quat_count, "moment-trend": cmd_moment_trend, "report-bounds": cmd_report_bounds,
}


# ---------------------------------------------------------------- output

def render(config: dict, result: dict, fmt: str) -> str:
    rows = result.pop("_rows", None)
    if fmt == "json":
        doc = {"schema": SCHEMA, "config": config}
        doc.update(result)
        return json.dumps(doc, indent=1, sort_keys=True, default=_jsonable) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if rows is not None:
        w.writerow(rows[0])
        w.writerows(rows[1])
    else:
        w.writerow(["key", "value"])
        for k in sorted(result):
            v = result[k]
            w.writerow([k, v if isinstance(v, (str, int)) else json.dumps(v, sort_keys=True, default=_jsonable)])
    return buf.getvalue()


def _jsonable(o):
    if isinstance(o, Fraction):
        return str(o)
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        config = resolve_config(args)
    except UsageError as exc:
        print(f"theta-moments: error: {exc}", file=sys.stderr)
        return 2

    from .cache import ENV_VAR, ResultCache

    cache_dir = args.cache_dir or os.environ.get(ENV_VAR)
    cache = ResultCache(cache_dir) if cache_dir else None
    key = cache.key("cli", args.command, {"config": config, "format": args.format}) if cache else None
    text = None
    if cache:
        hit = cache.lookup(key)
        if hit is not None:
            text = hit.value
    if text is None:
        try:
            result = COMMANDS[args.command](config, args.threads)
        except Exception as exc:  # computation errors carry their context to stderr
            print(f"theta-moments: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
        text = render(config, result, args.format)
        if cache:
            cache.store(key, text)
    if args.out:
        tmp = args.out + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(text)
        os.replace(tmp, args.out)
    else:
        sys.stdout.write(text)
    return 0


def main() -> None:
    logging.basicConfig(level=os.environ.get("THETA_MOMENTS_LOG", "WARNING"))
    sys.exit(run())


if __name__ == "__main__":
    main()
