from gi.repository import GLib

import argparse
import logging
import sys
from typing import Optional, Sequence

import outflare.const as const
from outflare.certificate import CertificateError
from outflare.config_manager import ConfigError, load_config
from outflare.experiments import EXPERIMENTS, ExitStatus, RunOptions, run_experiment
from outflare.spectra import PowerIterationError

SUBCOMMAND_HELP = {
    "validate": "Verify every automorphism in the file",
    "orbit": "List the conjugacy classes Phi^k(w)",
    "pf": "Perron-Frobenius data of the transition matrices",
    "train-track": "Check the rose maps for illegal turns",
    "eigencurrent": "Approximate the attracting current",
    "basin": "Check that seed currents share one attractor",
    "height-shift": "Residuals of the height shift law",
    "tree-ns": "Convergence of T.phi^k on a probe set",
    "flare-cert": "Check the 3 out of 4 flare condition on a ball and write a certificate",
    "verify-cert": "Replay a flare certificate",
    "atoroidal-search": "Search for a periodic conjugacy class",
    "rank1-search": "Search for a periodic primitive class",
    "stretch-sign": "Stretch estimate of phi^m w phi^n",
    "pingpong": "Ping-pong containment of seed currents",
    "hyperbolic-cert": "Bounded hyperbolicity criterion on a ball",
}


def build_parser() -> argparse.ArgumentParser:
    """Command line parser with one subcommand per experiment kind, plus ``run``."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="Experiment file")
    common.add_argument("--out", metavar="PATH", help="CSV output, overrides the file's output")
    common.add_argument("--threads", type=int, default=1, help="Worker processes")
    common.add_argument("--seed", type=int, default=0, help="Seed for sampled probe sets")
    common.add_argument("--debug", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="outflare", description="Experiments on free group automorphisms"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {const.VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    subparsers.add_parser(
        "run", parents=[common], help="Run the experiment kind named in the file"
    )
    for name in EXPERIMENTS:
        subparsers.add_parser(name, parents=[common], help=SUBCOMMAND_HELP.get(name))
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns 0 on pass, 1 on fail or witness found, 2 on usage errors."""
    args = build_parser().parse_args(argv)

    loglevel = logging.INFO
    if const.IS_DEVEL or args.debug:
        loglevel = logging.DEBUG
    logging.basicConfig(
        format="%(asctime)s | %(module)s | %(levelname)s | %(message)s",
        datefmt="%H:%M:%S",
        level=loglevel,
    )
    if args.threads < 1:
        logging.error(f"Thread count must be at least 1, got {args.threads}")
        return ExitStatus.USAGE

    kind = None if args.command == "run" else args.command
    options = RunOptions(output=args.out, threads=args.threads, seed=args.seed)
    try:
        config = load_config(args.config)
        outcome = run_experiment(config, kind, options)
    except (ConfigError, CertificateError) as e:
        logging.error(str(e))
        return ExitStatus.USAGE
    except ValueError as e:
        logging.error(f"Invalid experiment: {e}")
        return ExitStatus.USAGE
    except (GLib.Error, OSError) as e:
        logging.error(f"Failed to write output: {e}")
        return ExitStatus.USAGE
    except PowerIterationError as e:
        logging.error(f"Stretch estimate failed: {e}")
        return ExitStatus.FAIL

    print(f"{outcome.kind}: {outcome.message}")
    for artifact in outcome.artifacts:
        print(f"  wrote {artifact}")
    return int(outcome.status)


if __name__ == "__main__":
    sys.exit(main())
