import argparse
import json
from dataclasses import replace
from typing import Any, Dict, Optional

from loguru import logger

from core.certify import CertifyOptions
from core.energy import DoubleWell
from core.oracles import FiniteDifferenceSteps
from utils.errors import DimensionMismatchError, InputError, MatrixValidationError
from utils.result_storage import ResultStorage

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NOT_POLYCONVEX = 2
EXIT_NO_CONVERGENCE = 3
EXIT_CHECK_FAILED = 4


class BaseCommand:
    """Shared plumbing for CLI subcommands: input loading, options and output"""

    name = "base"

    def __init__(self, config: Dict[str, Any], args: argparse.Namespace):
        self.config = config
        self.args = args
        self.logger = logger
        self.storage = ResultStorage(config.get("output", {}).get("reports_dir", "reports"))

    @property
    def seed(self) -> int:
        seed = getattr(self.args, "seed", None)
        return int(self.config.get("seed", 0) if seed is None else seed)

    def certify_options(self) -> CertifyOptions:
        opts = CertifyOptions.from_config(self.config)
        tol = getattr(self.args, "tol", None)
        return opts if tol is None else replace(opts, tol=tol)

    def fd_steps(self) -> FiniteDifferenceSteps:
        return FiniteDifferenceSteps.from_config(self.config)

    def load_json(self, path: Optional[str], what: str) -> Any:
        """Read a JSON input file, turning I/O and parse failures into InputError"""
        if not path:
            raise InputError(f"--{what} is required for '{self.name}'")
        try:
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        except FileNotFoundError as e:
            self.logger.error(f"{what} file not found: {path}")
            raise InputError(f"{what} file not found: {path}") from e
        except json.JSONDecodeError as e:
            self.logger.error(f"{what} file {path} is not valid JSON: {str(e)}")
            raise InputError(f"{what} file {path} is not valid JSON: {e}") from e

    def load_wells(self) -> DoubleWell:
        data = self.load_json(getattr(self.args, "wells", None), "wells")
        try:
            dw = DoubleWell.from_json(data)
        except (MatrixValidationError, DimensionMismatchError) as e:
            self.logger.error(f"Invalid wells in {self.args.wells}: {str(e)}")
            raise InputError(f"invalid wells in {self.args.wells}: {e}") from e
        self.logger.info(f"Loaded {dw.n}x{dw.n} wells from {self.args.wells}")
        return dw

    def write_output(self, payload: Dict[str, Any]) -> str:
        return self.storage.store_result(self.name, payload, path=getattr(self.args, "out", None))

    def run(self) -> int:
        raise NotImplementedError
