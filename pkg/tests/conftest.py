import json
import os

import pytest
from loguru import logger

from utils.config import PROJECT_ROOT, load_config
from utils.result_storage import ResultStorage

# Load test data
with open(os.path.join(PROJECT_ROOT, "data", "wells.json")) as f:
    wells_data = json.load(f)


@pytest.fixture(scope="session")
def config():
    """Project configuration with environment overrides applied"""
    return load_config()


@pytest.fixture(scope="session", params=wells_data["cases"], ids=lambda c: c["id"])
def well_case(request):
    """Each named case from data/wells.json"""
    return request.param


@pytest.fixture(scope="function")
def result_storage(tmp_path):
    """Result storage rooted in a per-test directory"""
    return ResultStorage(str(tmp_path / "reports"))


@pytest.fixture(scope="function")
def wells_file(tmp_path):
    """Write a case's wells to a JSON file and return the path"""
    def write(case_id: str) -> str:
        case = next(c for c in wells_data["cases"] if c["id"] == case_id)
        path = tmp_path / f"{case_id}.json"
        path.write_text(json.dumps(case["wells"]), encoding="utf-8")
        logger.debug(f"Wrote wells for {case_id} to {path}")
        return str(path)
    return write


@pytest.fixture(scope="function")
def caplog_loguru(mocker):
    """Capture loguru output of a CLI run; the CLI's own sink setup is bypassed"""
    mocker.patch("main.configure_logging")
    messages = []
    handler_id = logger.add(messages.append, level="DEBUG", format="{level} {message}")

    class Captured:
        @property
        def text(self) -> str:
            return "".join(str(m) for m in messages)

    yield Captured()
    logger.remove(handler_id)
