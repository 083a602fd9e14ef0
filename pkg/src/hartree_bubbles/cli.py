"""Command-line verification harness.

Each subcommand calls one library operation and prints a JSON (or CSV)
report.  Exit status: 0 when every check passes, 1 when one fails, 2 for
usage or domain errors.
"""
from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import ball_kernels, extremal, riesz, special_constants
from .errors import HartreeError
from .parameters import ProblemParams, classify
from .radial_ops import algebraic_profile, superharmonic_chain
from .report import VerificationReport, bound_check, make_check

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _point(text: str | None, n: int) -> np.ndarray:
    if text is None:
        return np.zeros(n)
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError:
        raise HartreeError(f"cannot parse point {text!r}") from None
    if len(values) == 1 and n > 1:
        values = values + [0.0] * (n - 1)
    if len(values) != n:
        raise HartreeError(f"point {text!r} does not have {n} coordinates")
    return np.array(values)


def _params(args) -> ProblemParams:
    if args.s is not None:
        return ProblemParams.from_order(args.n, args.s, args.sigma, args.p, args.q)
    if args.m is None or args.alpha is None:
        raise HartreeError("give either --s or both --m and --alpha")
    return ProblemParams(args.n, args.m, args.alpha, args.sigma, args.p, args.q)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_constants(args, rep: VerificationReport) -> None:
    params = _params(args)
    values = special_constants.constants_report(params)
    rep.extras.update(values)
    rep.extras["criticality"] = classify(params).as_dict()
    C = values["bubble_C"]
    closure = (C ** (values["p_crit"] + values["q_crit"] - 1) * values["riesz_2s"]
               * values["I_sigma_half"] * values["I_gap_half"])
    rep.add(make_check("bubble_C_closure", closure, 1.0, args.tol or 1e-12))


def cmd_verify_identity(args, rep):
    gamma = 1.0 if args.gamma is None else args.gamma
    radii = np.array([0.0, 0.5, 1.0, 3.0, 10.0])
    u = algebraic_profile(1.0, args.n - gamma)
    res = riesz.riesz_potential(u, 2 * gamma, args.n, radii)
    exact = special_constants.bubble_integral(gamma, args.n) * (1 + radii ** 2) ** (-gamma)
    for r, v, e in zip(radii, res.values, exact):
        rep.add(make_check(f"convolution(r={r:g})", v, e, args.tol or 1e-6))


def cmd_verify_composition(args, rep):
    a1 = 1.0 if args.alpha is None else args.alpha
    a2 = a1 if args.alpha2 is None else args.alpha2
    radii = np.array([0.5, 1.0, 2.0])
    lhs, rhs = riesz.composition_values(args.n, a1, a2, radii)
    for r, left, right in zip(radii, lhs, rhs):
        rep.add(make_check(f"composition(r={r:g})", left, right, args.tol or 1e-4))


def cmd_verify_bubble(args, rep):
    params = _params(args)
    b = extremal.Bubble.standard(params, mu=args.mu, x0=tuple(_point(args.center, params.n)))
    residual = extremal.ie_residual(b, params)
    rep.extras["exponent_regime"] = classify(params).exponent_regime
    rep.add(make_check("integral_equation_residual", residual, 0.0, args.tol or 1e-3))


def cmd_verify_energy(args, rep):
    s = 1.0 if args.s is None else args.s
    out = riesz.verify_energy_identity(args.n, s, args.sigma)
    rep.extras.update(out)
    tol = args.tol or 1e-3
    rep.add(make_check("gradient_vs_hartree_energy", out["grad_energy"], out["hartree_energy"], tol))
    rep.add(make_check("S_from_gradient", out["S_from_gradient"], out["S_sharp"], tol))
    rep.add(make_check("S_from_norm", out["S_from_norm"], out["S_sharp"], tol))


def cmd_verify_representation(args, rep):
    alpha = 1.0 if args.alpha is None else args.alpha
    ball = ball_kernels.BallSpec(args.radius, args.n, alpha)
    u = algebraic_profile(1.0, 1.0)
    x = _point(args.center, args.n)
    out = ball_kernels.verify_representation(u, ball, x)
    rep.extras.update(out)
    rep.add(make_check("representation", out["value"], out["exact"], args.tol or 1e-3))


def cmd_verify_poisson_mass(args, rep):
    alpha = 1.0 if args.alpha is None else args.alpha
    ball = ball_kernels.BallSpec(args.radius, args.n, alpha)
    x = _point(args.center, args.n)
    mass = ball_kernels.poisson_mass(x, ball)
    rep.add(make_check("poisson_mass", mass, 1.0, args.tol or 1e-5))


def cmd_moving_spheres(args, rep):
    params = _params(args)
    b = extremal.Bubble.standard(params, mu=args.mu)
    x0 = _point(args.center, params.n)
    trace = [] if args.trace else None
    lam = extremal.critical_scale(b, x0, b.nu, trace=trace,
                                  directions=extremal.planar_directions(x0, params.n))
    expected = math.sqrt(1.0 + (args.mu * np.linalg.norm(x0)) ** 2) / args.mu
    rep.extras["critical_scale"] = lam
    rep.add(make_check("critical_scale", lam, expected, args.tol or 1e-5))
    points = extremal.ball_samples(x0, lam, extremal.fibonacci_directions(params.n),
                                   np.linspace(0.05, 0.95, 19))
    state = extremal.moving_sphere_gap(b, x0, lam, points, b.nu)
    rep.add(make_check("gap_at_critical_scale", float(np.max(np.abs(state.omega))), 0.0, 1e-8))
    if trace is not None:
        extremal.write_trace_csv(trace, args.trace)


def cmd_superharmonic(args, rep):
    params = _params(args)
    u = riesz.bubble_profile(params)
    radii = np.geomspace(0.05, 20.0, args.samples or 24)
    radii = np.concatenate([[0.0], radii])
    tol = args.tol or 1e-6
    for stage in superharmonic_chain(u, params, radii, tol=tol):
        rep.extras[f"minimum(order={stage.order:g})"] = stage.minimum
        rep.add(bound_check(f"min(order={stage.order:g})", stage.minimum, 0.0, tol))
        rep.add(make_check(f"noise(order={stage.order:g})", float(np.max(stage.noise)), 0.0, tol))


def cmd_kernels(args, rep):
    s = 1.0 if args.s is None else args.s
    out = ball_kernels.verify_reflection_kernels(_point(args.center, args.n), args.radius, s,
                                                 args.sigma, args.samples or 200, args.seed)
    rep.extras.update(out)
    rep.add(make_check("reflection_identity", out["identity_max_rel_error"], 0.0, args.tol or 1e-10))
    rep.add(bound_check("min_K1", out["min_K1"], 0.0, 0.0))
    rep.add(bound_check("min_K2", out["min_K2"], 0.0, 0.0))


VERIFY = {
    "identity": cmd_verify_identity,
    "composition": cmd_verify_composition,
    "bubble": cmd_verify_bubble,
    "energy": cmd_verify_energy,
    "representation": cmd_verify_representation,
    "poisson-mass": cmd_verify_poisson_mass,
}

COMMANDS = {
    "constants": cmd_constants,
    "moving-spheres": cmd_moving_spheres,
    "superharmonic": cmd_superharmonic,
    "kernels": cmd_kernels,
}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=3, help="dimension")
    p.add_argument("--m", type=int, help="integer part of the order")
    p.add_argument("--alpha", type=float, help="fractional part 2(s - m), in (0, 2]")
    p.add_argument("--alpha2", type=float, help="second Riesz order for 'verify composition'")
    p.add_argument("--s", type=float, help="total order s = m + alpha/2")
    p.add_argument("--sigma", type=float, default=2.0, help="Riesz weight exponent")
    p.add_argument("--gamma", type=float, help="exponent for 'verify identity'")
    p.add_argument("--p", type=float, help="inner power (default: critical)")
    p.add_argument("--q", type=float, help="outer power (default: critical)")
    p.add_argument("--mu", type=float, default=1.0, help="bubble scale")
    p.add_argument("--center", help="comma-separated point (x0 or x)")
    p.add_argument("--radius", type=float, default=2.0, help="ball or sphere radius")
    p.add_argument("--tol", type=float, help="check tolerance (command-specific default)")
    p.add_argument("--samples", type=int, help="number of sampled points")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for sampled checks")
    p.add_argument("--trace", help="CSV path for the moving-spheres trace")
    p.add_argument("--output", help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hartree-bubbles",
                                     description="Numerical verification of Hartree bubble identities.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _common(sub.add_parser(name))
    verify = sub.add_parser("verify")
    vsub = verify.add_subparsers(dest="check", required=True)
    for name in VERIFY:
        _common(vsub.add_parser(name))
    return parser


def run(argv=None) -> tuple[int, VerificationReport | None]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    if args.command == "verify":
        name, fn = f"verify {args.check}", VERIFY[args.check]
    else:
        name, fn = args.command, COMMANDS[args.command]
    echo = {k: v for k, v in vars(args).items()
            if v is not None and k not in ("command", "check", "output", "format", "trace")}
    rep = VerificationReport(name, echo)
    try:
        with rep:
            fn(args, rep)
    except HartreeError as exc:
        print(f"hartree-bubbles: error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    text = rep.to_json() if args.format == "json" else rep.to_csv()
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text + ("\n" if not text.endswith("\n") else ""))
    else:
        sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))
    return (EXIT_PASS if rep.passed else EXIT_FAIL), rep


def main(argv=None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
