from pathlib import Path

import pytest

from frontdoor.probtab import Cbn

from helpers import fig1_graph, model_a_cpts

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def g_fd():
    return fig1_graph()


@pytest.fixture
def model_a(g_fd) -> Cbn:
    return Cbn(g_fd, {n: 2 for n in "UXZY"}, model_a_cpts())
