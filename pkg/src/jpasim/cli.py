"""Command-line entry point.

Verbs: simulate, analyze, graph, calibrate, reproduce. Exit codes:
0 success, 2 invalid configuration, 3 runtime failure.
"""

import argparse
import json
import sys

import numpy as np

from . import __version__
from .calibration import fit_resonance, pump_phase_corrections, reflection_response
from .errors import ConfigInvalid, JpasimError
from .runner import (
    load_config,
    run_analysis,
    run_graph,
    run_scenario,
    validate_config,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

REPRODUCE_IDS = {
    "tripartite-entanglement": {
        "scenario": "tripartite", "pump_amplitude": 0.1,
        "delta_phi": -np.pi / 2, "n_trajectories": 200, "seed": 20260823,
    },
    "tripartite-symmetric": {
        "scenario": "tripartite", "pump_amplitude": 0.1,
        "n_trajectories": 200, "seed": 20260824,
    },
    "quadripartite-entanglement": {
        "scenario": "quadripartite", "pump_amplitude": 0.1,
        "n_trajectories": 40, "seed": 20260825, "two_vs_two": True,
    },
}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="jpasim",
        description="Multi-tone parametric cavity simulator and "
                    "entanglement analysis toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("simulate", help="run a scenario end to end")
    p.add_argument("--config", required=True, help="YAML scenario config")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the seed")

    p = sub.add_parser("analyze", help="entanglement report for a covariance")
    p.add_argument("--covariance", required=True, help="covariance CSV path")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--two-vs-two", action="store_true",
                   help="include two-vs-two PPT splits (4 modes)")

    p = sub.add_parser("graph", help="analytic interaction-graph artifacts")
    p.add_argument("--config", required=True, help="YAML scenario config")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("calibrate", help="fit a reflection sweep")
    p.add_argument("--config", required=True, help="YAML scenario config")
    p.add_argument("--out", required=True, help="calibration JSON path")

    p = sub.add_parser("reproduce", help="re-run a named reference result")
    p.add_argument("--id", required=True, choices=sorted(REPRODUCE_IDS),
                   help="reference result identifier")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _override_seed(config, seed):
    if seed is None:
        return config
    raw = config.as_dict()
    raw["seed"] = seed
    raw = {k: v for k, v in raw.items() if v is not None}
    return validate_config(raw)


def _cmd_simulate(args):
    config = _override_seed(load_config(args.config), args.seed)
    report = run_scenario(config, args.out)
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def _cmd_analyze(args):
    two = True if args.two_vs_two else None
    report = run_analysis(args.covariance, args.out, two_vs_two=two)
    json.dump(report, sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def _cmd_graph(args):
    config = load_config(args.config)
    run_graph(config, args.out)
    return EXIT_OK


def _cmd_calibrate(args):
    config = load_config(args.config)
    params, pumps, layout, _ = config.bundle()
    span = 10.0 * params.total_rate
    omegas = params.omega_r + np.linspace(-span, span, 801)
    fit = fit_resonance(omegas, reflection_response(omegas, params))
    out = {
        "omega_r_hz": fit.omega_r / (2 * np.pi),
        "kappa_hz": fit.kappa / (2 * np.pi),
        "gamma_hz": fit.gamma / (2 * np.pi),
        "residual_norm": fit.residual_norm,
        "pump_phase_corrections_rad": list(pump_phase_corrections(params, pumps)),
    }
    with open(args.out, "w") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    json.dump(out, sys.stdout, indent=2, sort_keys=True)
    print()
    return EXIT_OK


def _cmd_reproduce(args):
    raw = dict(REPRODUCE_IDS[args.id])
    config = validate_config(raw)
    run_scenario(config, args.out)
    return EXIT_OK


def main(argv=None):
    args = _build_parser().parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "analyze": _cmd_analyze,
        "graph": _cmd_graph,
        "calibrate": _cmd_calibrate,
        "reproduce": _cmd_reproduce,
    }
    try:
        return handlers[args.verb](args)
    except ConfigInvalid as exc:
        for msg in exc.messages:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except (JpasimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
