"""Command-line front end.

Every subcommand writes its table (CSV) or report (JSON) to ``--out``
(stdout by default) and prints a one-line ``key=value`` summary to stderr.
Failures print ``error category=<config|numerical|io> message=...`` to stderr
and exit with status 2, 3 or 4 respectively.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import json
import sys

import numpy as np

from . import bifurcation, frenet, geometry, trajectory
from .errors import DomainError, FractrajError, RejectionError
from .mittag_leffler import ml_series
from .systems import (
    ComplexPair,
    ComplexPairPlusReal,
    DistinctReal,
    GeneralSystem,
    Jordan2,
    system_to_dict,
)

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

# options whose values may start with '-' (negative numbers, matrix lists)
_VALUE_OPTIONS = {"--matrix", "--x0", "--lams", "--z", "--a", "--b", "--lam"}

FORMS = ("distinct-real", "complex-pair", "jordan", "complex-pair-plus-real")


class ConfigError(Exception):
    pass


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x != ""]
    except ValueError:
        raise ConfigError(f"cannot parse {what} {text!r} as comma-separated numbers") from None


def build_system(args):
    """System from ``--matrix`` or ``--form`` and its parameters."""
    if args.matrix is not None:
        vals = _floats(args.matrix, "--matrix")
        d = {4: 2, 9: 3}.get(len(vals))
        if d is None:
            raise ConfigError(f"--matrix needs 4 or 9 entries, got {len(vals)}")
        return GeneralSystem(np.array(vals).reshape(d, d))
    form = args.form
    if form is None:
        raise ConfigError("give either --matrix or --form")

    def need(name):
        v = getattr(args, name)
        if v is None:
            raise ConfigError(f"--form {form} needs --{name}")
        return v

    if form == "distinct-real":
        return DistinctReal(tuple(_floats(need("lams"), "--lams")))
    if form == "complex-pair":
        return ComplexPair(need("a"), need("b"))
    if form == "jordan":
        return Jordan2(need("lam"))
    return ComplexPairPlusReal(need("a"), need("b"), need("lam"))


def _x0(args, dim: int) -> np.ndarray:
    x0 = np.array(_floats(args.x0, "--x0")) if args.x0 is not None else np.ones(dim)
    if x0.size != dim:
        raise ConfigError(f"--x0 has {x0.size} entries, system is {dim}-dimensional")
    return x0


def _grid(args) -> np.ndarray:
    return trajectory.time_grid(args.t_max, args.n, args.t_min, args.spacing)


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _write_rows(path, header, rows) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) if isinstance(v, (float, np.floating, int, np.integer)) else v for v in row])
    with _output(path) as fh:
        fh.write(buf.getvalue())


def _write_json(path, doc) -> None:
    with _output(path) as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_traj(path, traj, fmt) -> None:
    if fmt == "json":
        with _output(path) as fh:
            fh.write(trajectory.to_json(traj) + "\n")
    else:
        _write_rows(
            path,
            ["t"] + [f"x{i + 1}" for i in range(traj.dim)],
            ([t, *row] for t, row in zip(traj.times, traj.states)),
        )


def _summary(**items) -> None:
    parts = [f"{k}={_fmt(v) if isinstance(v, float) else v}" for k, v in items.items()]
    print(" ".join(parts), file=sys.stderr)


# ---------------------------------------------------------------------------
# subcommands


def cmd_ml(args) -> None:
    try:
        z = complex(args.z.replace(" ", ""))
    except ValueError:
        raise ConfigError(f"cannot parse --z {args.z!r} as a complex number") from None
    res = ml_series(args.alpha, args.beta, z)
    _write_rows(
        args.out,
        ["alpha", "beta", "z_re", "z_im", "value_re", "value_im", "terms", "tail_bound"],
        [[args.alpha, args.beta, z.real, z.imag, res.value.real, res.value.imag, res.terms_used, res.tail_bound]],
    )
    _summary(value_re=res.value.real, value_im=res.value.imag, terms=res.terms_used)


def cmd_traj(args) -> None:
    system = build_system(args)
    traj = trajectory.solve(system, args.alpha, _x0(args, system.dim), _grid(args))
    _write_traj(args.out, traj, args.format)
    _summary(points=len(traj), t_end=float(traj.times[-1]))


def cmd_restart(args) -> None:
    system = build_system(args)
    x0 = _x0(args, system.dim)
    grid = _grid(args)
    X = trajectory.solve(system, args.alpha, x0, grid)
    Y = trajectory.restart(system, args.alpha, x0, args.t1, grid)
    T = trajectory.restart_matrix(system, args.alpha, args.t1)
    residual = trajectory.verify_linear_relation(X, Y, T)
    _write_traj(args.out, Y, args.format)
    _summary(points=len(Y), t1=float(args.t1), residual=residual)


def cmd_transform(args) -> None:
    system = build_system(args)
    f = trajectory.restart_transform(system, args.alpha, args.t1, strict=args.strict)
    doc = {
        "system": system_to_dict(system),
        "alpha": args.alpha,
        "t1": args.t1,
        "T": f.T.tolist(),
        "U": f.U.tolist(),
        "V": f.V.tolist(),
        "theta": f.theta,
        "theta_unsigned": abs(f.theta),
        "signs": f.signs.tolist(),
        "reflection": f.reflection,
        "basis": None if f.basis is None else f.basis.tolist(),
    }
    _write_json(args.out, doc)
    _summary(theta=f.theta, reflection=f.reflection)


def cmd_frenet(args) -> None:
    system = build_system(args)
    x0 = _x0(args, system.dim)
    rows = []
    for t in _grid(args):
        fr = frenet.frenet_at(system, args.alpha, x0, t, restart_t1=args.t1 if args.restarted else None)
        rows.append([t, fr.nu, *fr.tangent, *fr.normal, fr.kappa])
    _write_rows(args.out, ["t", "nu", "Tx", "Ty", "Nx", "Ny", "kappa"], rows)
    items = {"points": len(rows)}
    if args.t1 is not None:
        t_rel = args.relations_at if args.relations_at is not None else float(args.t_max)
        rep = frenet.restart_frenet_relations(system, args.alpha, x0, args.t1, t_rel)
        if args.report:
            _write_json(
                args.report,
                {
                    "case": rep.case,
                    "t": t_rel,
                    "t1": args.t1,
                    "max_gap": rep.max_gap,
                    "relations": [
                        {
                            "name": r.name,
                            "lhs": r.lhs.tolist(),
                            "rhs": r.rhs.tolist(),
                            "gap": r.gap,
                            "superseded": r.superseded,
                            "note": r.note,
                        }
                        for r in rep.relations
                    ],
                },
            )
        items["max_relation_gap"] = rep.max_gap
    _summary(**items)


def cmd_intersect(args) -> None:
    system = build_system(args)
    x0 = _x0(args, system.dim)
    grid = _grid(args)
    if args.t1 is not None:
        traj = trajectory.restart(system, args.alpha, x0, args.t1, grid)
    else:
        traj = trajectory.solve(system, args.alpha, x0, grid)
    rows = []
    for c in geometry.self_intersections(traj):
        m = geometry.loop_metrics(traj, c)
        rows.append([c.t_early, c.t_late, *c.point, m.duration, m.arc_length, m.mean_speed])
    _write_rows(args.out, ["t_early", "t_late", "px", "py", "duration", "arc_length", "mean_speed"], rows)
    _summary(crossings=len(rows))


def cmd_bifurcate(args) -> None:
    w = args.workers
    if args.what == "profile":
        a = 0.983469 if args.a is None else args.a
        b = 0.181075 if args.b is None else args.b
        p = bifurcation.theta_profile(
            a, b, args.t1, (args.alpha_min, args.alpha_max), args.n, mask=args.mask, workers=w
        )
        _write_rows(args.out, ["alpha", "theta"], zip(p.alphas, p.thetas))
        if args.report:
            _write_json(args.report, {"maxima": [{"alpha": x, "theta": y} for x, y in p.maxima]})
        _summary(points=len(p.alphas), maxima=";".join(_fmt(x) for x, _ in p.maxima) or "none")
    elif args.what == "surface":
        a = 1.0 if args.a is None else args.a
        alphas = np.linspace(args.alpha_min, args.alpha_max, args.n)
        bs = np.linspace(args.b_min, args.b_max, args.n_b)
        s = bifurcation.theta_surface(alphas, bs, a, args.t1, mask=args.mask, workers=w)
        _write_rows(args.out, ["alpha", "b", "theta"], s.rows())
        _summary(nodes=int(s.theta.size), masked=int(np.isnan(s.theta).sum()))
    else:
        a = 1.0 if args.a is None else args.a
        alphas = np.linspace(args.alpha_min, args.alpha_max, args.n)
        f = bifurcation.argmax_line_fit(alphas, (args.b_min, args.b_max), a, args.t1, args.n_b, mask=args.mask, workers=w)
        _write_json(
            args.out,
            {
                "slope": f.slope,
                "intercept": f.intercept,
                "rms": f.rms,
                "points": f.points.tolist(),
                "excluded": list(f.excluded),
            },
        )
        _summary(slope=f.slope, intercept=f.intercept, rms=f.rms)


# ---------------------------------------------------------------------------
# parser


def _add_system(p) -> None:
    g = p.add_argument_group("system")
    g.add_argument("--matrix", help='row-major entries, e.g. "-2,4,-4,-2"')
    g.add_argument("--form", choices=FORMS, help="named canonical form")
    g.add_argument("--a", type=float, help="real part of the complex pair")
    g.add_argument("--b", type=float, help="imaginary part of the complex pair")
    g.add_argument("--lam", type=float, help="real eigenvalue (jordan, complex-pair-plus-real)")
    g.add_argument("--lams", help='distinct real eigenvalues, e.g. "-1,-2"')
    p.add_argument("--alpha", type=float, required=True, help="order in (0, 1]")
    p.add_argument("--x0", help="initial state, comma-separated (default all ones)")


def _add_grid(p, t_max: float = 10.0, n: int = 2000) -> None:
    g = p.add_argument_group("time grid")
    g.add_argument("--t-min", type=float, default=trajectory.T_MIN)
    g.add_argument("--t-max", type=float, default=t_max)
    g.add_argument("--n", type=int, default=n)
    g.add_argument("--spacing", choices=("uniform", "log"), default="uniform")


def _add_out(p, formats: bool = False) -> None:
    p.add_argument("--out", default="-", help="output file (default stdout)")
    if formats:
        p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fractraj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ml", help="evaluate E_{alpha,beta}(z)")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--z", required=True, help='complex argument, e.g. "-1+2j"')
    _add_out(p)
    p.set_defaults(func=cmd_ml)

    p = sub.add_parser("traj", help="sample a solution trajectory")
    _add_system(p)
    _add_grid(p)
    _add_out(p, formats=True)
    p.set_defaults(func=cmd_traj)

    p = sub.add_parser("restart", help="restarted trajectory and the Y = T X residual")
    _add_system(p)
    _add_grid(p)
    p.add_argument("--t1", type=float, required=True)
    _add_out(p, formats=True)
    p.set_defaults(func=cmd_restart)

    p = sub.add_parser("transform", help="restart map T and its scaling/rotation split")
    _add_system(p)
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--strict", action="store_true", help="fail on negative real scaling factors")
    _add_out(p)
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("frenet", help="Frenet frame table and restart relations")
    _add_system(p)
    _add_grid(p, n=200)
    p.add_argument("--t1", type=float, help="restart time for the relation report")
    p.add_argument("--restarted", action="store_true", help="tabulate the restarted curve instead")
    p.add_argument("--relations-at", type=float, help="time at which relations are evaluated (default t-max)")
    p.add_argument("--report", help="JSON file for the relation report")
    _add_out(p)
    p.set_defaults(func=cmd_frenet)

    p = sub.add_parser("intersect", help="self-intersections and loop metrics")
    _add_system(p)
    _add_grid(p, t_max=50.0, n=800)
    p.add_argument("--t1", type=float, help="analyse the trajectory restarted from X(t1)")
    _add_out(p)
    p.set_defaults(func=cmd_intersect)

    p = sub.add_parser("bifurcate", help="rotation-angle scans")
    p.add_argument("what", choices=("profile", "surface", "fit"))
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float, help="frequency for the profile")
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--alpha-min", type=float)
    p.add_argument("--alpha-max", type=float)
    p.add_argument("--n", type=int, help="alpha points")
    p.add_argument("--b-min", type=float, default=0.0)
    p.add_argument("--b-max", type=float, default=3.0)
    p.add_argument("--n-b", type=int, default=200)
    p.add_argument("--mask", type=float, default=bifurcation.MASK_ABS_E)
    p.add_argument("--workers", type=int, help=f"process count (default ${bifurcation.WORKERS_ENV} or 1)")
    p.add_argument("--report", help="JSON file for profile maxima")
    _add_out(p)
    p.set_defaults(func=cmd_bifurcate)
    return parser


_BIFURCATE_DEFAULTS = {
    "profile": {"alpha_min": 0.001, "alpha_max": 1.0, "n": 400},
    "surface": {"alpha_min": 0.01, "alpha_max": 1.0, "n": 200},
    "fit": {"alpha_min": 0.05, "alpha_max": 0.95, "n": 19},
}


def _join_values(argv: list[str]) -> list[str]:
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_OPTIONS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _fail(category: str, code: int, message: str) -> int:
    print(f"error category={category} message={json.dumps(str(message))}", file=sys.stderr)
    return code


def main(argv: list[str] | None = None) -> int:
    argv = _join_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "bifurcate":
        for k, v in _BIFURCATE_DEFAULTS[args.what].items():
            if getattr(args, k) is None:
                setattr(args, k, v)
    try:
        args.func(args)
    except (ConfigError, RejectionError, DomainError) as exc:
        return _fail("config", EXIT_CONFIG, exc)
    except OSError as exc:
        return _fail("io", EXIT_IO, exc)
    except (FractrajError, ArithmeticError) as exc:
        return _fail("numerical", EXIT_NUMERICAL, exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
