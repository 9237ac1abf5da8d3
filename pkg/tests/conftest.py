import numpy as np
import pytest

from b92qkd.b92model import ProtocolParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def params02():
    """alpha^2 = 0.2 with gamma = beta."""
    return ProtocolParams.from_alpha2(0.2)


def param_settings(n=24, seed=11):
    """Spread of (alpha, gamma) settings, half with gamma = beta and half random gamma."""
    r = np.random.default_rng(seed)
    out = []
    for k in range(n):
        a2 = float(r.uniform(0.02, 0.48))
        if k % 2:
            out.append(ProtocolParams.from_alpha2(a2, gamma=float(r.uniform(0.2, 1.0))))
        else:
            out.append(ProtocolParams.from_alpha2(a2))
    return out
