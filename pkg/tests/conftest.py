import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ftbn.compiler import compile_tree  # noqa: E402
from ftbn.ft_model import PLC_MISSION_TIME, bundled_model_path, plc_case_study, plc_published_priors  # noqa: E402
from ftbn.reliability import probability_table  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def plc_tree():
    return plc_case_study()


@pytest.fixture(scope="session")
def plc_priors(plc_tree):
    return plc_published_priors(plc_tree)


@pytest.fixture(scope="session")
def plc_net(plc_tree, plc_priors):
    bn, _ = compile_tree(plc_tree, plc_priors)
    return bn


@pytest.fixture(scope="session")
def plc_rate_net(plc_tree):
    bn, _ = compile_tree(plc_tree, probability_table(plc_tree.primaries, PLC_MISSION_TIME))
    return bn


@pytest.fixture(scope="session")
def models_dir():
    return Path(str(bundled_model_path("plc.ft"))).parent


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
