"""Independent reference computations used by the tests.

Nothing here imports trigeval: the least-squares oracle is textbook
normal equations with Gaussian elimination in plain Python, and the t-CDF
oracle integrates the density with composite Simpson's rule.
"""

import math
import operator


def normal_equations_lstsq(columns, y):
    """Solve ``min ||X b - y||`` through ``X'X b = X'y``.

    ``columns`` holds the design columns (sequences of floats). Sums use
    ``math.fsum`` and elimination uses partial pivoting.
    """
    p = len(columns)
    xtx = [[math.fsum(map(operator.mul, columns[i], columns[j])) for j in range(p)]
           for i in range(p)]
    xty = [math.fsum(map(operator.mul, columns[i], y)) for i in range(p)]
    a = [xtx[i][:] + [xty[i]] for i in range(p)]
    for col in range(p):
        pivot = max(range(col, p), key=lambda k: abs(a[k][col]))
        if a[pivot][col] == 0:
            raise ZeroDivisionError("singular normal equations")
        a[col], a[pivot] = a[pivot], a[col]
        for k in range(col + 1, p):
            f = a[k][col] / a[col][col]
            for j in range(col, p + 1):
                a[k][j] -= f * a[col][j]
    b = [0.0] * p
    for i in reversed(range(p)):
        b[i] = (a[i][p] - sum(a[i][j] * b[j] for j in range(i + 1, p))) / a[i][i]
    return b


def ols_oracle(y, t, r=None):
    """Coefficients of the baseline (``r is None``) or trigger design."""
    t = [float(v) for v in t]
    ones = [1.0] * len(t)
    if r is None:
        cols = [ones, t]
    else:
        r = [float(v) for v in r]
        cols = [ones, r, [a * b for a, b in zip(t, r)]]
    return normal_equations_lstsq(cols, [float(v) for v in y])


def t_pdf(x, dof):
    c = math.lgamma((dof + 1) / 2) - math.lgamma(dof / 2) - 0.5 * math.log(dof * math.pi)
    return math.exp(c - (dof + 1) / 2 * math.log1p(x * x / dof))


def t_two_sided_p(t, dof, intervals=200_000):
    """``P(|T| > |t|)`` via Simpson integration of the density on ``[0, |t|]``."""
    x = abs(t)
    if x == 0:
        return 1.0
    h = x / intervals
    s = t_pdf(0.0, dof) + t_pdf(x, dof)
    s += 4 * math.fsum(t_pdf((2 * k - 1) * h, dof) for k in range(1, intervals // 2 + 1))
    s += 2 * math.fsum(t_pdf(2 * k * h, dof) for k in range(1, intervals // 2))
    return 1.0 - 2.0 * (s * h / 3.0)


def matmul(a, b):
    return [[math.fsum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]
