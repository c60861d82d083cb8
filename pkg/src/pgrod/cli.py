"""Command-line driver: ``pgrod {quarter-circle,cantilever,heavy-top,run}``.

Exit codes: 0 success, 2 configuration error, 3 Newton non-convergence,
4 numerical singularity or integrator failure.
"""

import argparse
import sys

from . import config as cfg
from . import experiments
from .errors import AngleAtPi, ConfigError, NoConvergence, NotSkewSymmetric, StepSizeUnderflow, TangentSingular

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NO_CONVERGENCE = 3
EXIT_SINGULAR = 4

RUNNERS = {
    "quarter_circle": experiments.run_quarter_circle,
    "cantilever": experiments.run_cantilever,
    "heavy_top": experiments.run_heavy_top,
    "generic": experiments.run_generic,
}


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage already; keep that as the config code
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="pgrod", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, with_element=True):
        p.add_argument("--out", default="out", help="output directory (default: out)")
        if with_element:
            p.add_argument("--kind", choices=cfg.KINDS, default="se3")
            p.add_argument("--order", type=int, choices=(1, 2), default=1)
            p.add_argument("--integration", choices=("full", "reduced"), default="reduced")

    p = sub.add_parser("quarter-circle", help="strain fields of the quarter-circle nodal data")
    p.add_argument("--out", default="out")
    p.add_argument("--kind", choices=cfg.KINDS, action="append", help="repeatable; default all kinds")
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--nodes", type=int, default=None, help="number of nodes N (default p + 1)")

    p = sub.add_parser("cantilever", help="locking and convergence study of the cantilever")
    common(p)
    p.add_argument("--nel", type=int, action="append", help="repeatable; default sweep 4 8 16 32 64")
    p.add_argument("--rho", type=float, default=1e2, help="slenderness L/w (default 1e2)")
    p.add_argument("--reference", metavar="PATH", help="directory caching reference solutions")
    p.add_argument("--paper-reference", action="store_true", help="use 512/256 element references")
    p.add_argument("--reference-nel", type=int, help="override the reference mesh size")
    p.add_argument("--load-steps", type=int, default=50)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the sweep")
    p.add_argument("--no-plateau-guard", action="store_true")

    p = sub.add_parser("heavy-top", help="flexible heavy top over one precession period")
    common(p, with_element=False)
    p.add_argument("--stiffness-factor", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-8, help="atol = rtol of the integrator")
    p.add_argument("--fixed-step", type=float, metavar="DT", help="classical RK4 with step DT")
    p.add_argument("--samples", type=int, default=201)

    p = sub.add_parser("run", help="run an experiment described by a JSON config")
    p.add_argument("config", help="path to the JSON configuration")
    p.add_argument("--out", default=None, help="override the output directory of the config")
    return parser


def config_from_args(args):
    """Translate command-line arguments to a validated configuration."""
    if args.command == "run":
        config = cfg.load(args.config)
        if args.out is not None:
            config = {**config, "out": args.out}
    elif args.command == "quarter-circle":
        config = {"experiment": "quarter_circle", "order": args.order, "out": args.out}
        if args.kind:
            config["kinds"] = args.kind
        if args.nodes is not None:
            config["n_nodes"] = args.nodes
    elif args.command == "cantilever":
        config = {
            "experiment": "cantilever",
            "kind": args.kind,
            "order": args.order,
            "integration": args.integration,
            "rho": args.rho,
            "n_load_steps": args.load_steps,
            "jobs": args.jobs,
            "plateau_guard": not args.no_plateau_guard,
            "out": args.out,
        }
        if args.nel:
            config["n_el"] = args.nel
        ref = {"paper_size": args.paper_reference}
        if args.reference:
            ref["cache_dir"] = args.reference
        if args.reference_nel:
            ref["n_el"] = args.reference_nel
        config["reference"] = ref
    else:
        config = {
            "experiment": "heavy_top",
            "stiffness_factor": args.stiffness_factor,
            "atol": args.tol,
            "rtol": args.tol,
            "n_samples": args.samples,
            "out": args.out,
        }
        if args.fixed_step is not None:
            config["fixed_step"] = args.fixed_step
    return cfg.validate(config)


def _summary(experiment, result):
    if experiment == "cantilever":
        _, report = result
        lines = [f"{'n_el':>6} {'nodes':>6} {'dofs':>6} {'e_theta':>12} {'time/s':>8}"]
        lines += [f"{r.n_el:6d} {r.n_nodes:6d} {r.n_dof:6d} {r.e_theta:12.4e} {r.runtime:8.2f}" for r in report.rows]
        lines.append(f"slope {report.slope:.3f} (all rows {report.slope_all:.3f})")
        return "\n".join(lines)
    if experiment == "heavy_top":
        return (
            f"max tip deviation from rigid top {result.max_deviation:.3e} m, "
            f"energy drift {result.energy_drift:.3e}, steps {result.n_accepted} (+{result.n_rejected} rejected)"
        )
    if experiment == "quarter_circle":
        return "wrote strains for " + ", ".join(result)
    return "done"


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args)
        result = RUNNERS[config["experiment"]](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NoConvergence as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    except (AngleAtPi, TangentSingular, NotSkewSymmetric, StepSizeUnderflow) as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except ValueError as exc:
        # invalid combinations that pass the schema, e.g. mismatched q0 length
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(_summary(config["experiment"], result))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
