import argparse

from . import config


def _common(sub):
    sub.add_argument(
        "--config", "-c", default=config.DEFAULT_RECIPE,
        help="config file, or the name of a recipe in %s" % config.RECIPES_DIR,
    )
    sub.add_argument("--out", "-o", default=None, help="output directory (overrides the config)")
    sub.add_argument("--nh", type=int, default=None, help="harmonic truncation N_h (overrides the config)")
    sub.add_argument(
        "--workers", "-w", type=int, default=None,
        help="worker processes (default: $%s, else all CPUs)" % config.WORKERS_ENV,
    )
    sub.add_argument("--profile", help="enable profiling", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Near-field dynamical Casimir effect: fluxes, gap modes and nonclassicality",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    simulate = verbs.add_parser(
        "simulate", help="run flux sweeps", formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    _common(simulate)
    simulate.add_argument(
        "--sweep", "-s", action="append", default=None,
        help="name of a sweep in the config (repeatable, default: all)",
    )
    simulate.add_argument(
        "--check-convergence", action="store_true",
        help="re-run each point with N_h+1 and record the relative change",
    )

    dispersion = verbs.add_parser(
        "dispersion", help="gap surface-mode dispersion", formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    _common(dispersion)

    indicator = verbs.add_parser(
        "indicator", help="nonclassicality indicator grids", formatter_class=argparse.ArgumentDefaultsHelpFormatter
    )
    _common(indicator)

    plotdata = verbs.add_parser(
        "plotdata", help="project a result CSV to a figure data file",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    plotdata.add_argument("--csv", required=True, help="result CSV written by another verb")
    plotdata.add_argument("--figure", "-f", required=True, help="figure name, e.g. fig1d")
    plotdata.add_argument("--out", "-o", default=None, help="output .dat path (default: next to the CSV)")
    plotdata.add_argument("--profile", help="enable profiling", action="store_true")
    return parser


def parse_args(argv=None):
    return build_parser().parse_args(argv)
