from pathlib import Path

import numpy as np
import pytest

from hpcdetect.synth import generate_traces, make_default_roster

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def small_corpus():
    """14 apps x 200 samples; quick stand-in for the full corpus."""
    return generate_traces(make_default_roster(), 200, seed=5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
