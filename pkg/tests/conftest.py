import os
import sys

import hypothesis
import numpy as np
import pytest

ROOT = os.path.join(os.path.dirname(__file__), '..')
sys.path.insert(0, ROOT)
sys.path.insert(0, os.path.join(ROOT, 'src'))

hypothesis.settings.register_profile("default", deadline=None)
hypothesis.settings.register_profile("fast", max_examples=20, deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

from foiwatch.models.box import BoundingBox  # noqa: E402
from foiwatch.models.frame import Detection  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "benchmark: wall-clock latency checks (deselect with -m 'not benchmark')")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def unit(i: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=np.float32)
    v[i] = 1.0
    return v


def detection(box, embedding, confidence: float = 0.9, **kwargs) -> Detection:
    return Detection(box=BoundingBox.from_list(box), confidence=confidence,
                     embedding=np.asarray(embedding, dtype=np.float32), **kwargs)


@pytest.fixture
def log_messages():
    """Records loguru messages at WARNING and above"""
    from loguru import logger

    messages = []
    handler_id = logger.add(lambda message: messages.append(message.record['message']), level='WARNING')
    yield messages
    logger.remove(handler_id)
