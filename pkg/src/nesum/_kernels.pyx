# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Must stay behaviourally identical to ``_kernels_py``."""

from libc.stdlib cimport malloc, free


def lcs_length(const long long[:] a, const long long[:] b):
    """Length of the longest common subsequence of two integer-coded sequences."""
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    cdef Py_ssize_t i, j
    cdef long long *prev
    cdef long long *cur
    cdef long long *tmp
    cdef long long result
    if n == 0 or m == 0:
        return 0
    if m > n:
        a, b = b, a
        n, m = m, n
    prev = <long long *> malloc((m + 1) * sizeof(long long))
    cur = <long long *> malloc((m + 1) * sizeof(long long))
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    with nogil:
        for j in range(m + 1):
            prev[j] = 0
        cur[0] = 0
        for i in range(n):
            for j in range(m):
                if a[i] == b[j]:
                    cur[j + 1] = prev[j] + 1
                elif prev[j + 1] >= cur[j]:
                    cur[j + 1] = prev[j + 1]
                else:
                    cur[j + 1] = cur[j]
            tmp = prev
            prev = cur
            cur = tmp
        result = prev[m]
    free(prev)
    free(cur)
    return result


def longest_common_run(const long long[:] a, const long long[:] b):
    """Length of the longest common contiguous run (substring) of two sequences."""
    cdef Py_ssize_t n = a.shape[0], m = b.shape[0]
    cdef Py_ssize_t i, j
    cdef long long *prev
    cdef long long *cur
    cdef long long *tmp
    cdef long long best = 0
    if n == 0 or m == 0:
        return 0
    prev = <long long *> malloc((m + 1) * sizeof(long long))
    cur = <long long *> malloc((m + 1) * sizeof(long long))
    if prev == NULL or cur == NULL:
        free(prev)
        free(cur)
        raise MemoryError()
    with nogil:
        for j in range(m + 1):
            prev[j] = 0
        cur[0] = 0
        for i in range(n):
            for j in range(m):
                if a[i] == b[j]:
                    cur[j + 1] = prev[j] + 1
                    if cur[j + 1] > best:
                        best = cur[j + 1]
                else:
                    cur[j + 1] = 0
            tmp = prev
            prev = cur
            cur = tmp
    free(prev)
    free(cur)
    return best
