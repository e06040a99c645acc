"""Command-line entry point: python main.py <command> [options]"""
import argparse
import sys
from typing import Dict, List, Optional, Type

from loguru import logger

from commands.base_command import EXIT_INPUT_ERROR, BaseCommand
from commands.certify_command import CertifyCommand, DecomposeCheckCommand, HessianCheckCommand
from commands.identities_command import IdentitiesCommand
from commands.minimize_command import MinimizeCommand, ProbeUniquenessCommand
from utils.config import load_config
from utils.errors import ConfigError, InputError, SvdConvergenceError

COMMANDS: Dict[str, Type[BaseCommand]] = {
    command.name: command
    for command in (
        CertifyCommand,
        DecomposeCheckCommand,
        HessianCheckCommand,
        IdentitiesCommand,
        MinimizeCommand,
        ProbeUniquenessCommand,
    )
}


class CliArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with 1; exit status 2 is reserved for non-polyconvex verdicts"""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT_ERROR, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration JSON (default: config/config.json)")
    common.add_argument("--out", help="result JSON path (default: <reports_dir>/results/<command>_<timestamp>.json)")
    common.add_argument("--seed", type=int, help="seed for every random stream (default from config)")
    common.add_argument("--tol", type=float, help="singular-value spread tolerance for the certificate")

    wells = argparse.ArgumentParser(add_help=False)
    wells.add_argument("--wells", help="DoubleWell JSON with X1 and X2")
    wells.add_argument("--samples", type=int, help="number of random samples")

    dirichlet = argparse.ArgumentParser(add_help=False)
    dirichlet.add_argument("--mesh-m", type=int, help="unit-square subdivisions per side")
    dirichlet.add_argument("--boundary-affine", help='affine boundary data as JSON, e.g. [[1,0],[0,1]] or {"M": ..., "c": [0,0]}')
    dirichlet.add_argument("--boundary-csv", help="nodal boundary data, CSV node_index,x,y,y1,y2")
    dirichlet.add_argument("--grad-tol", type=float, help="gradient tolerance per interior node")
    dirichlet.add_argument("--max-iters", type=int, help="descent iteration cap")

    parser = CliArgumentParser(prog="polywell", description="Polyconvexity certificates and Dirichlet solves for double-well energies")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliArgumentParser)

    subparsers.add_parser("certify", parents=[common, wells], help="decide polyconvexity and emit a certificate")
    subparsers.add_parser("decompose-check", parents=[common, wells], help="check the convex + null-Lagrangian split")
    subparsers.add_parser("hessian-check", parents=[common, wells], help="check rank-one curvature against finite differences")
    subparsers.add_parser("identities", parents=[common], help="run the algebraic identity suite")

    minimize = subparsers.add_parser("minimize", parents=[common, wells, dirichlet], help="solve the Dirichlet problem through I_C")
    minimize.add_argument("--history", help="convergence history CSV path")

    probe = subparsers.add_parser("probe-uniqueness", parents=[common, wells, dirichlet], help="compare minimizers from random starts")
    probe.add_argument("--starts", type=int, help="number of starts (default 5)")
    return parser


def configure_logging(level: str):
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format="{time:HH:mm:ss} | {level: <8} | {name}:{function} - {message}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        configure_logging(config.get("logging", {}).get("level", "INFO"))
        command = COMMANDS[args.command](config, args)
        return command.run()
    except (InputError, ConfigError, SvdConvergenceError) as e:
        logger.error(f"{args.command}: {str(e)}")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
