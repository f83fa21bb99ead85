"""Hot numeric kernels with a numba fast path and a pure-numpy fallback.

Pseudo-labeling scores every (news sentence, candidate commentary) pair,
so longest-common-subsequence length, clipped n-gram overlap and hashed
count-vector cosine dominate runtime.  Each kernel exists twice:

* ``*_numpy`` -- vectorized numpy, always available;
* ``*_numba`` -- ``@njit`` compiled, present when numba imports.

The module-level names (``lcs_length`` etc.) resolve once at import from
the ``PRESSBOX_BACKEND`` env var: ``numba`` (default when available) or
``numpy``.  ``benchmarks/bench_kernels.py`` times both paths side by side.

All kernels take ``int64`` arrays.  Callers encode tokens / n-grams /
hashed feature indices to integers first; the kernels never see strings.
"""

from __future__ import annotations

import math
import os

import numpy as np

_ENV_VAR = "PRESSBOX_BACKEND"


def _requested_backend() -> str:
    value = os.environ.get(_ENV_VAR, "").strip().lower()
    if value in ("", "auto"):
        return "auto"
    if value not in ("numba", "numpy"):
        raise ValueError(f"{_ENV_VAR} must be 'numba' or 'numpy', got {value!r}")
    return value


# ---------------------------------------------------------------------------
# numpy fallbacks


def lcs_length_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """LCS length via the row-accumulate form of the classic DP.

    For row i: c[j+1] = max(prev[j+1], prev[j] + match(i,j)), then the row
    is the running maximum of c, which is equivalent to the textbook
    three-way recurrence.
    """
    if a.shape[0] == 0 or b.shape[0] == 0:
        return 0
    prev = np.zeros(b.shape[0] + 1, dtype=np.int64)
    cand = np.empty(b.shape[0] + 1, dtype=np.int64)
    for x in a:
        cand[0] = 0
        np.maximum(prev[1:], prev[:-1] + (b == x), out=cand[1:])
        prev = np.maximum.accumulate(cand)
        cand = np.empty_like(prev)
    return int(prev[-1])


def clipped_overlap_numpy(a_sorted: np.ndarray, b_sorted: np.ndarray) -> int:
    """Sum over shared values of min(multiplicity in a, multiplicity in b)."""
    if a_sorted.shape[0] == 0 or b_sorted.shape[0] == 0:
        return 0
    ua, ca = np.unique(a_sorted, return_counts=True)
    ub, cb = np.unique(b_sorted, return_counts=True)
    _, ia, ib = np.intersect1d(ua, ub, assume_unique=True, return_indices=True)
    return int(np.minimum(ca[ia], cb[ib]).sum())


def sparse_cosine_numpy(a_sorted: np.ndarray, b_sorted: np.ndarray) -> float:
    """Cosine between the count vectors encoded by two sorted index arrays."""
    if a_sorted.shape[0] == 0 or b_sorted.shape[0] == 0:
        return 0.0
    ua, ca = np.unique(a_sorted, return_counts=True)
    ub, cb = np.unique(b_sorted, return_counts=True)
    _, ia, ib = np.intersect1d(ua, ub, assume_unique=True, return_indices=True)
    dot = float((ca[ia].astype(np.float64) * cb[ib].astype(np.float64)).sum())
    sq_a = float((ca.astype(np.float64) ** 2).sum())
    sq_b = float((cb.astype(np.float64) ** 2).sum())
    if sq_a == 0.0 or sq_b == 0.0:
        return 0.0
    # sqrt of the product keeps identical vectors at exactly 1.0
    return dot / math.sqrt(sq_a * sq_b)


# ---------------------------------------------------------------------------
# numba fast path

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised via PRESSBOX_BACKEND=numpy
    njit = None
    _HAVE_NUMBA = False

if _HAVE_NUMBA:

    @njit(cache=True)
    def _lcs_length_nb(a, b):  # pragma: no cover - compiled
        n = a.shape[0]
        m = b.shape[0]
        if n == 0 or m == 0:
            return 0
        prev = np.zeros(m + 1, dtype=np.int64)
        cur = np.zeros(m + 1, dtype=np.int64)
        for i in range(n):
            for j in range(m):
                best = prev[j + 1]
                if cur[j] > best:
                    best = cur[j]
                if a[i] == b[j] and prev[j] + 1 > best:
                    best = prev[j] + 1
                cur[j + 1] = best
            prev, cur = cur, prev
        return prev[m]

    @njit(cache=True)
    def _clipped_overlap_nb(a, b):  # pragma: no cover - compiled
        na = a.shape[0]
        nb = b.shape[0]
        i = 0
        j = 0
        total = 0
        while i < na and j < nb:
            if a[i] < b[j]:
                i += 1
            elif a[i] > b[j]:
                j += 1
            else:
                v = a[i]
                run_a = 0
                while i < na and a[i] == v:
                    run_a += 1
                    i += 1
                run_b = 0
                while j < nb and b[j] == v:
                    run_b += 1
                    j += 1
                total += min(run_a, run_b)
        return total

    @njit(cache=True)
    def _sparse_cosine_nb(a, b):  # pragma: no cover - compiled
        na = a.shape[0]
        nb = b.shape[0]
        if na == 0 or nb == 0:
            return 0.0
        dot = 0.0
        sq_a = 0.0
        sq_b = 0.0
        i = 0
        j = 0
        while i < na and j < nb:
            if a[i] < b[j]:
                v = a[i]
                run = 0.0
                while i < na and a[i] == v:
                    run += 1.0
                    i += 1
                sq_a += run * run
            elif a[i] > b[j]:
                v = b[j]
                run = 0.0
                while j < nb and b[j] == v:
                    run += 1.0
                    j += 1
                sq_b += run * run
            else:
                v = a[i]
                run_a = 0.0
                while i < na and a[i] == v:
                    run_a += 1.0
                    i += 1
                run_b = 0.0
                while j < nb and b[j] == v:
                    run_b += 1.0
                    j += 1
                dot += run_a * run_b
                sq_a += run_a * run_a
                sq_b += run_b * run_b
        while i < na:
            v = a[i]
            run = 0.0
            while i < na and a[i] == v:
                run += 1.0
                i += 1
            sq_a += run * run
        while j < nb:
            v = b[j]
            run = 0.0
            while j < nb and b[j] == v:
                run += 1.0
                j += 1
            sq_b += run * run
        if sq_a == 0.0 or sq_b == 0.0:
            return 0.0
        return dot / math.sqrt(sq_a * sq_b)

    def lcs_length_numba(a: np.ndarray, b: np.ndarray) -> int:
        return int(_lcs_length_nb(a, b))

    def clipped_overlap_numba(a_sorted: np.ndarray, b_sorted: np.ndarray) -> int:
        return int(_clipped_overlap_nb(a_sorted, b_sorted))

    def sparse_cosine_numba(a_sorted: np.ndarray, b_sorted: np.ndarray) -> float:
        return float(_sparse_cosine_nb(a_sorted, b_sorted))


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _HAVE_NUMBA else ("numpy",)


_requested = _requested_backend()
if _requested == "numba" and not _HAVE_NUMBA:
    raise RuntimeError(f"{_ENV_VAR}=numba but numba is not importable")

BACKEND = "numpy" if _requested == "numpy" or not _HAVE_NUMBA else "numba"

if BACKEND == "numba":
    lcs_length = lcs_length_numba
    clipped_overlap = clipped_overlap_numba
    sparse_cosine = sparse_cosine_numba
else:
    lcs_length = lcs_length_numpy
    clipped_overlap = clipped_overlap_numpy
    sparse_cosine = sparse_cosine_numpy


def warmup() -> None:
    """Force JIT compilation (or cache load) of the active kernels."""
    a = np.array([1, 2, 3], dtype=np.int64)
    b = np.array([2, 3, 4], dtype=np.int64)
    lcs_length(a, b)
    clipped_overlap(a, b)
    sparse_cosine(a, b)
