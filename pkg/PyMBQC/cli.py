"""Command-line entry point: pymbqc {verify,sweep,csign-search,tomography}."""

import argparse
import sys
import warnings

from .Errors import ConfigError, DenseSizeError, MBQCError
from .Experiment import (BACKENDS, ExperimentConfig, run_csign_search,
                         run_sweep, run_tomography, run_verify)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RESOURCE = 3


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="paper-suite",
                        help="JSON config file or builtin name (default: paper-suite)")
    common.add_argument("--out", default=None, help="Output directory")
    common.add_argument("--backend", choices=BACKENDS, default=None,
                        help="Simulation backend for the checks")
    common.add_argument("--seed", type=int, default=None, help="Seed of every random draw")
    common.add_argument("--jobs", type=int, default=None, help="Worker processes for sweeps")

    parser = argparse.ArgumentParser(
        prog="pymbqc",
        description="Correlation-function checks of measurement-based gate plans.",
    )
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("verify", parents=[common],
                        help="Compare post- and pre-measurement correlators for every plan")
    commands.add_parser("sweep", parents=[common],
                        help="Correlations and fidelity along a parameter sweep")
    search = commands.add_parser("csign-search", parents=[common],
                                 help="Search CSIGN plaquette geometries")
    search.add_argument("--budget", type=int, default=None, help="Vertex budget of the search")
    commands.add_parser("tomography", parents=[common],
                        help="Tomographic resource densities and gate fidelities")
    return parser


def _load_config(args):
    config = ExperimentConfig.load(args.config)
    return config.override(
        out=args.out, backend=args.backend, seed=args.seed, jobs=args.jobs,
        budget=getattr(args, "budget", None),
    )


def _verify(config):
    report, passed = run_verify(config)
    failures = report[~report["passed"]]
    print(f"[verify] {len(report)} checks, max |delta| = {report['delta'].max():.3e}")
    if not passed:
        for _, row in failures.head(20).iterrows():
            print(f"  - {row['check']} {row['plan']} A={row['A']} B={row['B']}: "
                  f"post={row['post']:.12f} pre={row['pre']:.12f}")
        print(f"[verify] FAIL ({len(failures)} failures)")
        return EXIT_CHECK_FAILED
    print("[verify] OK")
    return EXIT_OK


def _sweep(config):
    table = run_sweep(config)
    print(f"[sweep] {len(table)} points written to {config.outputs['directory']}")
    return EXIT_OK


def _csign_search(config):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        geometry, check = run_csign_search(config)
    if geometry is None:
        for warning in caught:
            print(f"[csign-search] {warning.message}")
        if check is not None:
            for line in check.transcript:
                print(f"  {line}")
        print(f"[csign-search] FAIL (no geometry within {config.budget} vertices)")
        return EXIT_CHECK_FAILED
    for line in check.transcript:
        print(f"  {line}")
    print(f"[csign-search] OK (reading: {check.variant})")
    return EXIT_OK


def _tomography(config):
    table = run_tomography(config)
    for _, row in table.iterrows():
        print(f"  {row['plan']} {row['input']}: fidelity={row['fidelity']:.9f}")
    return EXIT_OK


COMMANDS = {
    "verify": _verify,
    "sweep": _sweep,
    "csign-search": _csign_search,
    "tomography": _tomography,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        return COMMANDS[args.command](config)
    except ConfigError as error:
        print(f"[error] {error}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as error:
        print(f"[error] config not found: {error.filename}", file=sys.stderr)
        return EXIT_CONFIG
    except (DenseSizeError, MemoryError) as error:
        print(f"[error] resource limit: {error}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as error:
        print(f"[error] cannot write results: {error}", file=sys.stderr)
        return EXIT_RESOURCE
    except MBQCError as error:
        print(f"[error] {error}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
