from pathlib import Path

import numpy as np
import pytest

from plirls.config.config import Config
from plirls.core.problem import AffineTerm, BlockTerms, ProblemSpec, RowTerms, SmoothTerm
from plirls.core.prox import l1_term

CONFIGS_DIR = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def reload_config():
    """Reload the Config singleton after the test so environment changes do not leak."""
    yield Config.reload_config
    Config.reload_config()


@pytest.fixture
def small_lsq_data(rng):
    A = rng.standard_normal((6, 4)) / np.sqrt(6)
    b = rng.standard_normal(6)
    return A, b


@pytest.fixture
def block_spec(rng):
    """Two 2-row terms plus one 1-row term on R^3, with f = 0.3 ||.||_1 and a least-squares s."""
    terms = [
        AffineTerm.dense(rng.standard_normal((2, 3)), rng.standard_normal(2)),
        AffineTerm.dense(rng.standard_normal((2, 3)), rng.standard_normal(2)),
        AffineTerm.dense(rng.standard_normal((1, 3)), rng.standard_normal(1)),
    ]
    s = SmoothTerm.least_squares(rng.standard_normal((4, 3)), rng.standard_normal(4), lam=0.5)
    return ProblemSpec(f=l1_term(0.3), s=s, terms=BlockTerms(terms), epsilon=0.2)


@pytest.fixture
def row_spec(small_lsq_data):
    A, b = small_lsq_data
    return ProblemSpec(f=l1_term(0.1), s=SmoothTerm.zero(), terms=RowTerms(A, b), epsilon=0.3)


@pytest.fixture(params=["demo.json", "multiblock_demo.json"])
def demo_config_path(request):
    return CONFIGS_DIR / request.param
