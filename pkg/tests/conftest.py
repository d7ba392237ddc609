import logging
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cubesynth import Dataset

# The duplicate-slot warning fires on every desk-scale draw (m far above
# 2^p); keep test output readable.
logging.getLogger("cubesynth.conditioning").setLevel(logging.ERROR)
logging.getLogger("cubesynth.pipeline").setLevel(logging.ERROR)


def rand_dataset(n: int, p: int, seed: int) -> Dataset:
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    return Dataset(gen.integers(0, 2, size=(n, p), dtype=np.int8) * 2 - 1)


@pytest.fixture
def dataset_factory():
    return rand_dataset
