import numpy as np
import pytest

from gradscores.features import GradientFeatureSet, materialize


def random_set(rng, n, m, d, length_low=2, length_high=200, teacher_id="t"):
    """Arbitrary valid feature set from a numpy Generator (test-side only)."""
    return GradientFeatureSet(
        teacher_id=teacher_id,
        n=n,
        m=m,
        d=d,
        lengths=rng.integers(length_low, length_high, size=n * m).astype(np.uint32),
        raw_rows=rng.standard_normal((n * m, d)).astype(np.float32),
        projection_seed=int(rng.integers(0, 2**63)),
        source_dim=int(d * 7),
    )


def random_proc(rng, n, m, d, **kw):
    return materialize(random_set(rng, n, m, d, **kw))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
