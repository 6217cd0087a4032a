"""Shared hypothesis strategies."""

import numpy as np
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vectors(n):
    return arrays(np.float64, (n,), elements=finite)


def matrices(m, n):
    return arrays(np.float64, (m, n), elements=finite)


seeds = st.integers(0, 2**32 - 1)
gammas = st.sampled_from([0.1, 0.5, 1.0, 2.0, 7.0])
