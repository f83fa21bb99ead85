import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pressbox import kernels

from .oracles import brute_lcs_len

int_arrays = st.lists(st.integers(0, 12), min_size=0, max_size=40)

HAS_NUMBA = "numba" in kernels.available_backends()


def as_arr(values):
    return np.asarray(values, dtype=np.int64)


class TestNumpyKernels:
    @settings(max_examples=150, deadline=None)
    @given(int_arrays, int_arrays)
    def test_lcs_matches_brute_force(self, a, b):
        assert kernels.lcs_length_numpy(as_arr(a), as_arr(b)) == brute_lcs_len(a, b)

    @settings(max_examples=150, deadline=None)
    @given(int_arrays, int_arrays)
    def test_clipped_overlap_matches_counter(self, a, b):
        from collections import Counter

        expected = sum((Counter(a) & Counter(b)).values())
        got = kernels.clipped_overlap_numpy(as_arr(sorted(a)), as_arr(sorted(b)))
        assert got == expected

    @settings(max_examples=100, deadline=None)
    @given(int_arrays, int_arrays)
    def test_cosine_matches_dense(self, a, b):
        got = kernels.sparse_cosine_numpy(as_arr(sorted(a)), as_arr(sorted(b)))
        if not a or not b:
            assert got == 0.0
            return
        dims = 13
        va = np.bincount(a, minlength=dims).astype(float)
        vb = np.bincount(b, minlength=dims).astype(float)
        denom = np.sqrt((va**2).sum() * (vb**2).sum())
        expected = float(va @ vb / denom) if denom else 0.0
        assert got == pytest.approx(expected, abs=1e-12)

    def test_identity_cosine_is_exactly_one(self):
        arr = as_arr(sorted([3, 3, 5, 9, 9, 9]))
        assert kernels.sparse_cosine_numpy(arr, arr) == 1.0


@pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
class TestBackendAgreement:
    @settings(max_examples=100, deadline=None)
    @given(int_arrays, int_arrays)
    def test_lcs_backends_agree(self, a, b):
        assert kernels.lcs_length_numba(as_arr(a), as_arr(b)) == kernels.lcs_length_numpy(
            as_arr(a), as_arr(b)
        )

    @settings(max_examples=100, deadline=None)
    @given(int_arrays, int_arrays)
    def test_overlap_backends_agree(self, a, b):
        sa, sb = as_arr(sorted(a)), as_arr(sorted(b))
        assert kernels.clipped_overlap_numba(sa, sb) == kernels.clipped_overlap_numpy(sa, sb)

    @settings(max_examples=100, deadline=None)
    @given(int_arrays, int_arrays)
    def test_cosine_backends_agree(self, a, b):
        sa, sb = as_arr(sorted(a)), as_arr(sorted(b))
        got_nb = kernels.sparse_cosine_numba(sa, sb)
        got_np = kernels.sparse_cosine_numpy(sa, sb)
        assert got_nb == pytest.approx(got_np, abs=1e-12)

    def test_identity_cosine_numba_exactly_one(self):
        arr = as_arr(sorted([1, 1, 2, 7]))
        assert kernels.sparse_cosine_numba(arr, arr) == 1.0


class TestBackendSelection:
    def _backend_of(self, env_value):
        env = dict(os.environ)
        if env_value is None:
            env.pop("PRESSBOX_BACKEND", None)
        else:
            env["PRESSBOX_BACKEND"] = env_value
        out = subprocess.run(
            [sys.executable, "-c", "from pressbox import kernels; print(kernels.BACKEND)"],
            capture_output=True,
            text=True,
            env=env,
        )
        assert out.returncode == 0, out.stderr
        return out.stdout.strip()

    def test_numpy_flag_forces_fallback(self):
        assert self._backend_of("numpy") == "numpy"

    @pytest.mark.skipif(not HAS_NUMBA, reason="numba not installed")
    def test_default_prefers_numba(self):
        assert self._backend_of(None) == "numba"

    def test_invalid_flag_rejected(self):
        env = dict(os.environ, PRESSBOX_BACKEND="cuda")
        out = subprocess.run(
            [sys.executable, "-c", "import pressbox.kernels"],
            capture_output=True,
            text=True,
            env=env,
        )
        assert out.returncode != 0

    def test_scoring_results_identical_across_backends(self):
        script = (
            "from pressbox.scoring import rouge_l, rouge_n, HashedNgramScorer\n"
            "print(repr(rouge_l(list('abxcyd'), list('abcd')).f1))\n"
            "print(repr(rouge_n(list('abxcyd'), list('abcd'), 2).f1))\n"
            "print(repr(HashedNgramScorer().score('主队前锋破门', '前锋破门得分')))\n"
        )
        outputs = {}
        for backend in ("numpy", "numba") if HAS_NUMBA else ("numpy",):
            env = dict(os.environ, PRESSBOX_BACKEND=backend)
            out = subprocess.run(
                [sys.executable, "-c", script], capture_output=True, text=True, env=env
            )
            assert out.returncode == 0, out.stderr
            outputs[backend] = out.stdout
        assert len(set(outputs.values())) == 1
