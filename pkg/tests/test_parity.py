"""Bit-exact agreement between the compiled and interpreted kernels.

Every kernel consumes counter-mode randomness keyed by (key_lo, key_hi,
trial), so equal inputs must give equal outputs across backends and
across thread counts, down to the last bit.
"""

import numpy as np
import pytest

from fewpatch._backend import backend_name, load_backend

try:
    cython = load_backend("cython")
except ImportError:
    cython = None
pure = load_backend("pure-python")

pytestmark = pytest.mark.skipif(
    cython is None, reason="compiled backend not built"
)

KEYS = [(0, 0), (0xDEADBEEF, 0x12345678), (2**32 - 1, 2**32 - 1)]


def pairs(name):
    return getattr(cython, name), getattr(pure, name)


def assert_same(a, b):
    a = a if isinstance(a, tuple) else (a,)
    b = b if isinstance(b, tuple) else (b,)
    assert len(a) == len(b)
    for left, right in zip(a, b):
        left = np.asarray(left)
        right = np.asarray(right)
        assert left.shape == right.shape
        np.testing.assert_array_equal(left, right)


class TestBackendSelection:
    def test_compiled_backend_is_active(self):
        assert backend_name() == "cython"

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            load_backend("fortran")


class TestSamplerParity:
    @pytest.mark.parametrize("key_lo,key_hi", KEYS)
    @pytest.mark.parametrize("n", [1, 3, 17])
    def test_ball_sample(self, key_lo, key_hi, n):
        cy, pp = pairs("ball_sample")
        center = np.linspace(-1.0, 1.0, n)
        for rexp, fold in [(0.0, 0), (2.5, 0), (0.0, 1)]:
            c = np.zeros(n) if fold else center
            assert_same(
                cy(key_lo, key_hi, 7, 25, n, c, 1.5, rexp, fold),
                pp(key_lo, key_hi, 7, 25, n, c, 1.5, rexp, fold),
            )

    @pytest.mark.parametrize("key_lo,key_hi", KEYS)
    def test_sphere_sample(self, key_lo, key_hi):
        cy, pp = pairs("sphere_sample")
        assert_same(cy(key_lo, key_hi, 3, 40, 5), pp(key_lo, key_hi, 3, 40, 5))

    @pytest.mark.parametrize("key_lo,key_hi", KEYS)
    def test_uniform_sample(self, key_lo, key_hi):
        cy, pp = pairs("uniform_sample")
        assert_same(cy(key_lo, key_hi, 11, 100), pp(key_lo, key_hi, 11, 100))


class TestRunParity:
    def test_quasi_orth_run(self):
        cy, pp = pairs("quasi_orth_run")
        args = (42, 99, 200, 8, 5, np.zeros(8), 1.0, 0.0, 0.5, 0.1)
        assert_same(cy(*args), pp(*args))

    def test_centering_run(self):
        cy, pp = pairs("centering_run")
        args = (42, 99, 200, 6, 4, np.zeros(6), 1.0, 1.5)
        assert_same(cy(*args), pp(*args))

    def test_learn_few_run(self):
        cy, pp = pairs("learn_few_run")
        args = (42, 99, 150, 10, 5, 64, 1.0, 0.0, 0.0)
        assert_same(cy(*args), pp(*args))

    def test_learn_from_few_run(self):
        cy, pp = pairs("learn_from_few_run")
        center = np.r_[2.0, np.zeros(11)]
        args = (42, 99, 150, 12, 5, 64, 64, center, 1.0, 0.0, 0.0, 0.6633, 0.6)
        assert_same(cy(*args), pp(*args))


class TestThreadInvariance:
    @pytest.mark.parametrize("backend", ["cython", "pure-python"])
    def test_quasi_orth_threads(self, backend):
        impl = load_backend(backend)
        args = (5, 6, 300, 8, 4, np.zeros(8), 1.0, 0.0, 0.4, 0.2)
        assert_same(
            impl.quasi_orth_run(*args, threads=1),
            impl.quasi_orth_run(*args, threads=4),
        )

    @pytest.mark.parametrize("backend", ["cython", "pure-python"])
    def test_learn_from_few_threads(self, backend):
        impl = load_backend(backend)
        center = np.r_[2.0, np.zeros(9)]
        args = (5, 6, 120, 10, 4, 32, 32, center, 1.0, 0.0, 0.0, 0.6633, 0.6)
        assert_same(
            impl.learn_from_few_run(*args, threads=1),
            impl.learn_from_few_run(*args, threads=3),
        )

    def test_ball_sample_threads(self):
        impl = load_backend("cython")
        center = np.zeros(7)
        assert_same(
            impl.ball_sample(9, 9, 0, 64, 7, center, 1.0, 0.0, 0, threads=1),
            impl.ball_sample(9, 9, 0, 64, 7, center, 1.0, 0.0, 0, threads=4),
        )
