from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"
CONFIGS = Path(__file__).parent.parent / "configs"


def central_diff(f, params: dict, h: float = 1e-6) -> dict:
    """Independent finite-difference oracle: perturbs copies, never the caller's arrays."""
    out = {}
    for name, P in params.items():
        g = np.zeros(P.shape)
        for idx in np.ndindex(P.shape):
            up = {k: v.copy() for k, v in params.items()}
            dn = {k: v.copy() for k, v in params.items()}
            up[name][idx] += h
            dn[name][idx] -= h
            g[idx] = (f(up) - f(dn)) / (2 * h)
        out[name] = g
    return out


def rel_err(a, b, floor=1e-8) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    scale = max(np.max(np.abs(a), initial=0), np.max(np.abs(b), initial=0), floor)
    return float(np.max(np.abs(a - b), initial=0) / scale)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
