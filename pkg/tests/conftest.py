import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from meltseries import SeriesRecord, TimeSeries  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def make_record(values, label="blk0", block=0, layer=0) -> SeriesRecord:
    return SeriesRecord(TimeSeries(np.asarray(values, dtype=float)),
                        label, block, layer)


def random_series(rng, n: int) -> TimeSeries:
    return TimeSeries(rng.normal(size=n))
