import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nhols import build_graph, build_triangle_tensor  # noqa: E402

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def frozen():
    return json.loads((DATA / "oracle_values.json").read_text())


def tensor_from_case(case):
    return build_triangle_tensor(case["triples"], case["n"])


def graph_from_case(case):
    return build_graph(case["edges"], n=case["n"])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
