"""Command-line front end: regcoord <command> SYSTEM_FILE [options]."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .approx import (
    InfeasibleScaleError, fit_neighborhood, ledger, local_expansion, scaling_check,
    signature_bound, signature_violations, stability_check, tau, type_signature,
)
from .cover import (
    InsufficientDataError, analyze_point, assemble_lambda, epsilon_certificate, grid_points,
    greedy_cover, origin_half_widths, stratify,
)
from .polycore import (
    GaussRat, InvalidInputError, NotRegularError, ParseError, contact_order, epsilon_prediction,
    format_system, multiplicities, normalize, parse_curve, parse_system,
)
from .psh import (
    build_weights, derivative_windows, fd_complex_hessian, polydisc_samples, verify_hessian_G,
    verify_hessian_g, verify_partial_bounds,
)

SCHEMA = 1
EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_INTERNAL, EXIT_NOT_REGULAR = 0, 1, 2, 3, 4
LN10 = math.log(10)


class CheckFailed(Exception):
    """Raised after the report is written when a strict-mode check failed."""


# ---------------------------------------------------------------------------
# rendering

def log_real(lx: float) -> dict:
    """A positive real given by its natural log, as decimal and log strings."""
    if lx == -math.inf:
        return {"decimal": "0", "log": "-inf"}
    e10 = lx / LN10
    exp = math.floor(e10)
    mant = round(10 ** (e10 - exp), 10)
    if mant >= 10:
        mant, exp = mant / 10, exp + 1
    return {"decimal": f"{mant:.10f}e{exp:+d}", "log": f"{lx:.12g}"}


def real(x: float) -> dict:
    return log_real(math.log(x)) if x > 0 else {"decimal": f"{x:.12g}", "log": None}


def num(x: float) -> str:
    return f"{x:.12g}"


def frac(q: Fraction) -> str:
    return str(Fraction(q))


def write_json(obj: dict, path: str | None) -> None:
    text = json.dumps({"schema": SCHEMA, **obj}, indent=2, sort_keys=True)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def write_csv(path: str | None, header: list[str], rows: list[list]) -> None:
    if not path:
        return
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


# ---------------------------------------------------------------------------
# argument parsing helpers

def parse_log_value(text: str, name: str) -> float:
    """Natural log of a positive value given as a float or as ln:<log>."""
    try:
        if text.startswith("ln:"):
            return float(text[3:])
        v = float(text)
    except ValueError:
        raise InvalidInputError(f"{name} must be a number or ln:<value>, got {text!r}") from None
    if not v > 0:
        raise InvalidInputError(f"{name} must be positive")
    return math.log(v)


def parse_scalar(tok: str):
    tok = tok.strip()
    try:
        return Fraction(tok)
    except ValueError:
        pass
    try:
        z = complex(tok.replace("i", "j"))
    except ValueError:
        raise InvalidInputError(f"cannot read coordinate {tok!r}") from None
    return GaussRat(Fraction(z.real), Fraction(z.imag))


def parse_point(text: str | None, n: int) -> tuple:
    if text is None:
        return (Fraction(0),) * n
    coords = tuple(parse_scalar(t) for t in text.split(","))
    if len(coords) != n:
        raise InvalidInputError(f"point has {len(coords)} coordinates, expected {n}")
    return coords


def point_json(p) -> list[str]:
    out = []
    for x in p:
        z = complex(x) if not isinstance(x, GaussRat) else complex(x)
        out.append(f"{z.real:.12g}{z.imag:+.12g}i")
    return out


def load_system(args):
    text = Path(args.system).read_text()
    raw = parse_system(text, U_radius=args.radius)
    sys_ = normalize(raw)
    if args.auto_radius:
        sys_ = fit_neighborhood(sys_)
    return sys_


class Context:
    """System, ledger and scale shared by the analysis commands."""

    def __init__(self, args):
        self.args = args
        self.sys = load_system(args)
        if args.mu is None:
            probe = ledger(self.sys, log_mu=1.0)
            self.log_mu = probe.glob.log_mu
        else:
            self.log_mu = parse_log_value(args.mu, "mu")
            if self.log_mu <= 0:
                raise InvalidInputError("mu must exceed 1")
        self.led = ledger(self.sys, log_mu=self.log_mu)
        self.strict = args.strict
        if args.delta is None:
            if not self.strict:
                raise InvalidInputError("relaxed mode needs --delta")
            self.log_delta = self.led.log_delta_tilde - 1
        else:
            self.log_delta = parse_log_value(args.delta, "delta")

    def header(self) -> dict:
        return {
            "system": format_system(self.sys).splitlines(),
            "ms": list(self.sys.ms),
            "normalization_scale": frac(self.sys.normalization_scale),
            "U_radius": num(self.sys.U_radius),
            "mu": log_real(self.log_mu),
            "delta": log_real(self.log_delta),
            "strict_mode": self.strict,
        }


def approx_json(ap) -> dict:
    return {
        "tau": [log_real(x) for x in ap.log_tau],
        "sigma": [log_real(x) for x in ap.log_sigma],
        "J": list(ap.J),
        "K": [list(k) for k in ap.K],
        "signature": type_signature(ap).to_json(),
        "strict_mode": ap.strict_mode,
    }


def ledger_json(led) -> dict:
    g = led.glob
    out = {
        "B": [real(b) for b in led.B],
        "C": [real(c) for c in led.C],
        "M_mu": [log_real(x) for x in led.log_M],
        "Delta": [log_real(x) for x in led.log_Delta],
        "delta_mu": log_real(led.log_delta_mu),
        "delta_prime": log_real(led.log_delta_prime),
        "A": [frac(a) for a in led.A],
        "Delta_prime": [log_real(x) for x in led.log_Delta_prime],
        "delta_tilde": log_real(led.log_delta_tilde),
        "N": led.N,
        "a": frac(led.a),
        "d_s": [frac(d) for d in led.d_s],
        "d": frac(led.d),
        "a_s_range": [log_real(led.log_a_lo), log_real(led.log_a_hi)],
        "notes": list(led.notes),
    }
    if g is not None:
        out["globals"] = {
            "M": num(g.M), "mu_1": log_real(g.log_mu1), "D": log_real(g.log_D),
            "eta": log_real(g.log_eta), "mu": log_real(g.log_mu), "c": log_real(g.log_c),
            "d_strip": log_real(g.log_d_strip),
        }
    return out


def hreport_json(rep) -> dict:
    return {"region": rep.region, "samples": rep.sample_count, "min_margin": num(rep.min_margin),
            "passed": rep.passed}


# ---------------------------------------------------------------------------
# commands

def cmd_analyze(args) -> int:
    sys_ = load_system(args)
    eps = epsilon_prediction(sys_)
    log_mu = parse_log_value(args.mu, "mu") if args.mu else None
    led = ledger(sys_, log_mu=log_mu if log_mu is not None else 1.0)
    if log_mu is None:
        led = ledger(sys_, log_mu=led.glob.log_mu)
    write_json({
        "command": "analyze",
        "system": format_system(sys_).splitlines(),
        "multiplicities": list(multiplicities(sys_)),
        "m_I": eps.multiplicity,
        "epsilon": frac(eps.epsilon),
        "normalization_scale": frac(sys_.normalization_scale),
        "U_radius": num(sys_.U_radius),
        "mu": log_real(led.log_mu),
        "ledger": ledger_json(led),
    }, args.json)
    return EXIT_OK


def cmd_tau(args) -> int:
    ctx = Context(args)
    p = parse_point(args.point, ctx.sys.n)
    ap = tau(local_expansion(ctx.sys, p), ctx.sys, ctx.led, log_mu=ctx.log_mu,
             log_delta=ctx.log_delta, strict=ctx.strict)
    write_json({"command": "tau", **ctx.header(), "point": point_json(p), "approx": approx_json(ap)},
               args.json)
    return EXIT_OK


def _grid_records(ctx, resolution: int):
    r0 = analyze_point(ctx.sys, ctx.led, (0,) * ctx.sys.n, ctx.log_mu, ctx.log_delta, ctx.strict)
    hw = origin_half_widths(r0)
    pts = grid_points(ctx.sys.n, hw, resolution)
    recs = [analyze_point(ctx.sys, ctx.led, p, ctx.log_mu, ctx.log_delta, ctx.strict) for p in pts]
    return hw, recs


def cmd_types(args) -> int:
    ctx = Context(args)
    hw, recs = _grid_records(ctx, args.grid)
    sigs = {}
    bad = []
    for r in recs:
        key = json.dumps(r.signature.to_json())
        sigs[key] = sigs.get(key, 0) + 1
        if ctx.strict:
            bad.extend(f"{point_json(r.p)}: {msg}" for msg in signature_violations(r.approx, ctx.sys.ms))
    bound = signature_bound(ctx.sys.ms)
    passed = not bad and (not ctx.strict or len(sigs) <= bound)
    write_csv(args.csv, ["re_z1", "im_z1", "re_z2", "im_z2", "signature"],
              [_coord_cols(r.p) + [json.dumps(r.signature.to_json())] for r in recs])
    write_json({
        "command": "types", **ctx.header(),
        "grid": {"resolution": args.grid, "half_widths": [num(h) for h in hw]},
        "signatures": [{"signature": json.loads(k), "count": v} for k, v in sorted(sigs.items())],
        "signature_count": len(sigs),
        "signature_bound": bound,
        "violations": bad,
        "passed": passed,
    }, args.json)
    return _exit(passed, ctx.strict)


def _coord_cols(p) -> list[str]:
    z = [complex(x) for x in p] + [0j] * max(0, 2 - len(p))
    return [num(z[0].real), num(z[0].imag), num(z[1].real), num(z[1].imag)]


def cmd_scaling(args) -> int:
    ctx = Context(args)
    p = parse_point(args.point, ctx.sys.n)
    exp = local_expansion(ctx.sys, p)
    a_values = [float(Fraction(a)) for a in args.a.split(",")]
    reps = [scaling_check(exp, ctx.sys, ctx.led, ctx.log_mu, ctx.log_delta, a, strict=ctx.strict)
            for a in a_values]
    passed = all(r.passed for r in reps)
    write_json({
        "command": "scaling", **ctx.header(), "point": point_json(p),
        "checks": [{"a": num(r.a), "margins": [num(m) for m in r.margins], "passed": r.passed} for r in reps],
        "passed": passed,
    }, args.json)
    return _exit(passed, ctx.strict)


def cmd_stability(args) -> int:
    ctx = Context(args)
    p = parse_point(args.point, ctx.sys.n)
    q = parse_point(args.point2, ctx.sys.n)
    rep = stability_check(ctx.sys, ctx.led, ctx.log_mu, ctx.log_delta, p, q, strict=ctx.strict)
    write_json({
        "command": "stability", **ctx.header(), "point": point_json(p), "point2": point_json(q),
        "comparable": rep.comparable, "overlapping": rep.overlapping, "same_types": rep.same_types,
        "reason": rep.reason,
        "log_ratios": [num(x) for x in rep.log_ratios],
        "Q": [log_real(x) for x in rep.log_Q],
        "coefficient_margins": [num(x) for x in rep.coefficient_margins],
        "passed": rep.passed,
    }, args.json)
    # pairs that are not comparable are a reported outcome, not a failure
    return _exit(rep.passed or not rep.comparable, ctx.strict)


def _cover_all(ctx, resolution: int):
    hw, recs = _grid_records(ctx, resolution)
    strata = stratify(recs)
    return hw, recs, [greedy_cover(s) for s in strata]


def cover_json(rep) -> dict:
    return {
        "signature": rep.signature.to_json(),
        "members": rep.member_count,
        "centers": len(rep.centers),
        "covered_fraction": num(rep.covered_fraction),
        "max_overlap": rep.max_overlap,
        "overlap_bound": str(rep.overlap_bound),
        "rho": [num(r) for r in rep.rho],
        "ratios_within_Q": rep.ratios_within_Q,
        "passed": rep.passed,
    }


def _box_rows(covers) -> list[list]:
    rows = []
    for k, rep in enumerate(covers):
        for c in rep.centers:
            rows.append([k] + _coord_cols(c.p) + [num(x) for x in c.hat] + [""] * (2 - len(c.hat)))
    return rows


BOX_HEADER = ["stratum", "re_z1", "im_z1", "re_z2", "im_z2", "radius_1", "radius_2"]


def cmd_cover(args) -> int:
    ctx = Context(args)
    hw, recs, covers = _cover_all(ctx, args.grid)
    passed = all(c.passed for c in covers)
    write_csv(args.csv, BOX_HEADER, _box_rows(covers))
    write_json({
        "command": "cover", **ctx.header(),
        "grid": {"resolution": args.grid, "half_widths": [num(h) for h in hw]},
        "strata": [cover_json(c) for c in covers],
        "cross_stratum_factor": len(covers),
        "passed": passed,
    }, args.json)
    return _exit(passed, True)


def cmd_contact(args) -> int:
    sys_ = load_system(args)
    if not args.curve:
        raise InvalidInputError("contact needs --curve FILE")
    curve = parse_curve(Path(args.curve).read_text(), sys_.n)
    T = contact_order(sys_, curve)
    eps = epsilon_prediction(sys_).epsilon
    consistent = T != math.inf and eps <= Fraction(1, int(T))
    write_json({
        "command": "contact",
        "system": format_system(sys_).splitlines(),
        "contact_order": "inf" if T == math.inf else int(T),
        "epsilon": frac(eps),
        "sharp": T != math.inf and eps == Fraction(1, int(T)),
        "consistent": consistent,
    }, args.json)
    return EXIT_OK


def _ladder(ctx, spec: str | None) -> list[float]:
    count, factor = 6, 2.0
    if spec:
        head, _, tail = spec.partition(":")
        count = int(head)
        factor = float(tail) if tail else 2.0
        if factor <= 1:
            raise InvalidInputError("ladder factor must exceed 1")
    return [ctx.log_delta - k * math.log(factor) for k in range(count)]


def cmd_verify(args) -> int:
    ctx = Context(args)
    sys_, led = ctx.sys, ctx.led
    p = parse_point(args.point, sys_.n)
    exp = local_expansion(sys_, p)
    ap = tau(exp, sys_, led, log_mu=ctx.log_mu, log_delta=ctx.log_delta, strict=ctx.strict)
    win = derivative_windows(exp, ap, led)
    eta = led.glob.eta
    delta = math.exp(ctx.log_delta)
    n = args.samples

    partial = verify_partial_bounds(exp, ap, led, win, led.glob.log_D, n, args.seed)
    G, _, g = build_weights(exp, ap, win, eta, delta)
    hG = verify_hessian_G(G, n, args.seed)
    u, _ = polydisc_samples(G.radii, min(100, n), args.seed + 50)
    fd = max(float(np.max(np.abs(fd_complex_hessian(G.gradient, z, 1e-5 * G.radii) - G.hessian(z)))
                   / np.max(np.abs(G.hessian(z)))) for z in u)
    hg = verify_hessian_g(g, [math.exp(w.log_a_s) for w in win], n, args.seed)

    hw, recs, covers = _cover_all(ctx, args.grid)
    _, lam = assemble_lambda(covers, eta, delta, recs, n, args.seed)

    try:
        cert = epsilon_certificate(sys_, led, _ladder(ctx, args.delta_ladder), ctx.log_mu,
                                   points=[p], strict=ctx.strict)
        cert_json = {
            "log_deltas": [num(x) for x in cert.log_deltas],
            "t_delta": [log_real(x) for x in cert.log_t],
            "slope": num(cert.slope), "epsilon": frac(cert.epsilon),
            "slope_ok": cert.slope_ok, "slope_matches": cert.slope_matches,
            "failed_rungs": [{"log_delta": num(ld), "error": msg} for ld, msg in cert.failed_rungs],
        }
        cert_ok = cert.slope_ok
    except InsufficientDataError as err:
        cert_json, cert_ok = {"error": str(err)}, False

    checks = {
        "partial_bounds": partial.passed,
        "hessian_G": hG.passed,
        "fd_G": fd < 1e-6,
        **{f"g_{k}": r.passed for k, r in hg.items()},
        "cover": all(c.passed for c in covers),
        "lambda": lam.passed,
        "certificate": cert_ok,
    }
    passed = all(checks.values())
    rows = [[i, num(hG.margins[i]), num(hg["strip_floor"].margins[i]), num(hg["psh"].margins[i]),
             num(hg["range"].margins[i])] for i in range(n)]
    write_csv(args.csv, ["sample", "G_margin", "g_strip_margin", "g_psh_margin", "g_range_margin"], rows)
    write_json({
        "command": "verify", **ctx.header(), "point": point_json(p),
        "approx": approx_json(ap),
        "windows": [{"s": w.s, "k": w.k, "steps": w.steps, "a_s": log_real(w.log_a_s)} for w in win],
        "partial_bounds": {
            "samples": partial.sample_count,
            "diag_margins": [num(x) for x in partial.diag_margins],
            "mixed_margins": [num(x) for x in partial.mixed_margins],
            "annulus_margins": [num(x) for x in partial.annulus_margins],
            "passed": partial.passed,
        },
        "hessian_G": {**hreport_json(hG), "fd_max_rel": num(fd)},
        "hessian_g": {k: hreport_json(r) for k, r in hg.items()},
        "assembled_C": num(hg["strip_floor"].extra["C"]),
        "cover": {"grid": args.grid, "strata": [cover_json(c) for c in covers]},
        "lambda": {
            "centers": lam.centers, "total_bound": str(lam.total_bound), "t_delta": real(lam.t_delta),
            "floor": real(lam.floor), "strip_min_margin": num(lam.strip_min_margin),
            "max_value": num(lam.max_value), "min_value": num(lam.min_value),
            "support_max_outside": num(lam.support_max_outside), "passed": lam.passed,
        },
        "certificate": cert_json,
        "checks": checks,
        "certified": ctx.strict and passed,
        "passed": passed,
    }, args.json)
    return _exit(passed, ctx.strict)


def _exit(passed: bool, strict: bool) -> int:
    """Relaxed-mode results are advisory, so only strict failures set the exit code."""
    return EXIT_OK if passed or not strict else EXIT_CHECK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="regcoord", description=__doc__)
    ap.add_argument("--version", action="version", version=f"regcoord {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, scale=True):
        p.add_argument("system", help="system file, one polynomial per line")
        p.add_argument("--radius", type=float, default=1.0, help="U radius before fitting (default 1)")
        p.add_argument("--no-auto-radius", dest="auto_radius", action="store_false",
                       help="use --radius as given instead of shrinking it until leading terms stay >= 1")
        p.add_argument("--json", metavar="OUT", help="write the JSON report here instead of stdout")
        p.add_argument("--mu", help="mu as a number or ln:<log mu> (default: assembled global mu)")
        if scale:
            p.add_argument("--delta", help="delta as a number or ln:<log delta>")
            mode = p.add_mutually_exclusive_group()
            mode.add_argument("--strict", dest="strict", action="store_true", default=True)
            mode.add_argument("--relaxed", dest="strict", action="store_false")
            p.add_argument("--seed", type=int, default=0)
        return p

    p = common(sub.add_parser("analyze", help="multiplicities, epsilon and the constants ledger"), scale=False)
    p.set_defaults(func=cmd_analyze)

    p = common(sub.add_parser("tau", help="approximate system at a point"))
    p.add_argument("--point", help="comma-separated coordinates, e.g. 0,1/4 or 0.1+0.2i,0")
    p.set_defaults(func=cmd_tau)

    p = common(sub.add_parser("types", help="type signatures over a grid"))
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--csv", metavar="OUT")
    p.set_defaults(func=cmd_types)

    p = common(sub.add_parser("scaling", help="tau scaling law under delta -> a delta"))
    p.add_argument("--point")
    p.add_argument("--a", default="1/2,1/10", help="comma-separated factors in (0, 1)")
    p.set_defaults(func=cmd_scaling)

    p = common(sub.add_parser("stability", help="compare tau at two nearby points"))
    p.add_argument("--point")
    p.add_argument("--point2", required=True)
    p.set_defaults(func=cmd_stability)

    p = common(sub.add_parser("cover", help="stratify a grid and run the greedy cover"))
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--csv", metavar="OUT", help="per-centre boxes")
    p.set_defaults(func=cmd_cover)

    p = common(sub.add_parser("verify", help="full pipeline: bounds, Hessians, cover, lambda, certificate"))
    p.add_argument("--point")
    p.add_argument("--grid", type=int, default=21)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--delta-ladder", metavar="K[:F]", help="K rungs delta, delta/F, ... (default 6:2)")
    p.add_argument("--csv", metavar="OUT", help="per-sample margins")
    p.set_defaults(func=cmd_verify)

    p = common(sub.add_parser("contact", help="order of contact of a curve"), scale=False)
    p.add_argument("--curve", required=True, help="curve file in w, n + 1 lines")
    p.set_defaults(func=cmd_contact)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "grid", 3) < 1 or getattr(args, "samples", 1) < 1:
        print("error: --grid and --samples must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except NotRegularError as err:
        print(f"error: not regular: {err}", file=sys.stderr)
        return EXIT_NOT_REGULAR
    except ParseError as err:
        print(f"error: parse: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (InvalidInputError, InfeasibleScaleError, InsufficientDataError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as err:
        # double-precision limits of the assembled constants (e.g. eta beyond 1e308)
        print(f"error: {err}", file=sys.stderr)
        return EXIT_INPUT
    except (AssertionError, RuntimeError) as err:
        print(f"internal error: {err}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
