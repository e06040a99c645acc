import csv
import json
import os
from datetime import datetime
from typing import Any, Dict, Iterable, Optional, Sequence

import numpy as np
from loguru import logger

from utils.errors import InputError

FIELD_CSV_HEADER = ["node_index", "x", "y", "y1", "y2"]
HISTORY_CSV_HEADER = ["iter", "I_C", "grad_norm", "step"]


class ResultStorage:
    def __init__(self, base_dir: str = "reports"):
        self.base_dir = base_dir
        self.results_dir = os.path.join(self.base_dir, "results")

    def _ensure_directories(self):
        """Ensure the default results directory exists"""
        os.makedirs(self.results_dir, exist_ok=True)

    @staticmethod
    def _ensure_parent(path: str):
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)

    def default_path(self, name: str) -> str:
        """<reports>/results/<name>_<timestamp>.json, creating the directory"""
        self._ensure_directories()
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        return os.path.join(self.results_dir, f"{name}_{timestamp}.json")

    def store_result(self, name: str, payload: Dict[str, Any], path: Optional[str] = None) -> str:
        """
        Write a result as JSON with a top-level timestamp.

        Args:
            name: Result kind, used in the default file name
            payload: JSON-serializable result
            path: Explicit output path; defaults to <reports>/results/<name>_<timestamp>.json

        Returns:
            The path written
        """
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        if path is None:
            path = self.default_path(name)
        else:
            self._ensure_parent(path)

        data = {"timestamp": timestamp, **payload}
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=2, allow_nan=False)

        logger.info(f"Stored {name} result in {path}")
        return path

    def store_field_csv(self, path: str, nodes: np.ndarray, values: np.ndarray) -> str:
        """Write one row per node: node_index,x,y,y1,y2"""
        self._ensure_parent(path)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(FIELD_CSV_HEADER)
            for k, (x, y) in enumerate(nodes):
                writer.writerow([k, repr(float(x)), repr(float(y)), repr(float(values[k, 0])), repr(float(values[k, 1]))])
        logger.info(f"Stored field dump in {path}")
        return path

    def store_history_csv(self, path: str, history: Iterable[Sequence[float]]) -> str:
        """Write the convergence history: iter,I_C,grad_norm,step"""
        self._ensure_parent(path)
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(HISTORY_CSV_HEADER)
            for it, energy, grad_norm, step in history:
                writer.writerow([int(it), repr(float(energy)), repr(float(grad_norm)), repr(float(step))])
        logger.info(f"Stored convergence history in {path}")
        return path


def field_csv_path(json_path: str) -> str:
    """Companion CSV path for a result JSON: result.json -> result_field.csv"""
    root, _ = os.path.splitext(json_path)
    return f"{root}_field.csv"


def read_field_csv(path: str, num_nodes: int) -> np.ndarray:
    """Read nodal values (y1, y2) from a field dump; rows may come in any order"""
    try:
        with open(path, "r", encoding="utf-8", newline="") as f:
            rows = list(csv.DictReader(f))
    except FileNotFoundError as e:
        raise InputError(f"boundary CSV not found: {path}") from e

    values = np.full((num_nodes, 2), np.nan)
    for line, row in enumerate(rows, start=2):
        try:
            k = int(row["node_index"])
            values[k] = (float(row["y1"]), float(row["y2"]))
        except KeyError as e:
            raise InputError(f"{path}: missing column {e}") from e
        except (TypeError, ValueError, IndexError) as e:
            raise InputError(f"{path}:{line}: bad row ({e})") from e
    if np.isnan(values).any():
        raise InputError(f"{path}: expected values for all {num_nodes} nodes")
    return values
