import numpy as np
import pytest

from coplanar.conf import app_settings
from coplanar.conf import settings as global_settings


@pytest.fixture
def settings():
    """
    Process-wide settings source, restored after the test.
    """
    saved = global_settings.as_dict()
    app_settings.reset()
    yield global_settings
    global_settings.configure(saved)
    app_settings.reset()


@pytest.fixture
def rng():
    return np.random.default_rng(7)
