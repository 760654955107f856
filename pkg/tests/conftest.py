from pathlib import Path

import numpy as np
import pytest

from spi.store import ActivationRecord

FIXTURE_DIR = Path(__file__).parent / "fixtures" / "spac"


def matrix_with_singular_values(values, rows=None, seed=0, scale=1.0):
    """Matrix whose singular values are exactly ``values`` (orthogonal factors)."""
    values = np.asarray(values, dtype=np.float64)
    cols = values.size
    rows = rows or cols
    rng = np.random.default_rng(seed)
    q1, _ = np.linalg.qr(rng.standard_normal((rows, cols)))
    q2, _ = np.linalg.qr(rng.standard_normal((cols, cols)))
    return scale * (q1 * values) @ q2.T


def make_record(
    matrix,
    model_id="m",
    component="cross_attn",
    layer_index=0,
    sample_id="s0",
    condition="clean",
):
    return ActivationRecord(
        model_id=model_id,
        component=component,
        layer_index=layer_index,
        sample_id=sample_id,
        condition=condition,
        matrix=np.asarray(matrix),
    )


@pytest.fixture
def fixture_dir():
    assert FIXTURE_DIR.is_dir(), "run scripts/make_fixtures.py first"
    return FIXTURE_DIR
