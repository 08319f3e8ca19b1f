"""Pure-Python versions of the compiled kernels in ``_kernels.pyx``."""


def lcs_length(a, b):
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return 0
    if m > n:
        a, b = b, a
        n, m = m, n
    prev = [0] * (m + 1)
    for i in range(n):
        ai = a[i]
        cur = [0] * (m + 1)
        for j in range(m):
            if ai == b[j]:
                cur[j + 1] = prev[j] + 1
            else:
                left = cur[j]
                up = prev[j + 1]
                cur[j + 1] = up if up >= left else left
        prev = cur
    return prev[m]


def longest_common_run(a, b):
    n, m = len(a), len(b)
    best = 0
    prev = [0] * (m + 1)
    for i in range(n):
        ai = a[i]
        cur = [0] * (m + 1)
        for j in range(m):
            if ai == b[j]:
                v = prev[j] + 1
                cur[j + 1] = v
                if v > best:
                    best = v
        prev = cur
    return best
