from fractions import Fraction
from itertools import permutations

import numpy as np


def cofactor_det(M):
    """Laplace expansion along the first row, exact on integers and Fractions."""
    n = len(M)
    if n == 1:
        return M[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in M[1:]]
        total += (-1) ** j * M[0][j] * cofactor_det(minor)
    return total


def cofactor_adjugate(M):
    """Transposed cofactor matrix by explicit minors."""
    M = [list(r) for r in M]
    n = len(M)
    if n == 1:
        return [[1]]
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(M) if k != i]
            adj[j][i] = (-1) ** (i + j) * cofactor_det(minor)
    return adj


def _perm_sign(p):
    sign, seen = 1, set()
    for i in range(len(p)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = p[j]
            length += 1
        sign *= (-1) ** (length - 1)
    return sign


def leibniz_char_poly(A):
    """Ascending coefficients of det(t I - A) by summing over all permutations."""
    A = np.asarray(A)
    n = A.shape[0]
    total = np.zeros(n + 1, dtype=A.dtype if np.iscomplexobj(A) else float)
    for p in permutations(range(n)):
        term = np.array([1.0], dtype=total.dtype)
        for i in range(n):
            entry = np.array([-A[i, p[i]], 1.0]) if i == p[i] else np.array([-A[i, p[i]]])
            term = np.convolve(term, entry)
        total[: len(term)] += _perm_sign(p) * term
    return total


def exact(M):
    return [[Fraction(int(x)) for x in row] for row in M]


# one line per acceptance criterion, echoed in the pytest terminal summary
ACCEPTANCE_LINES = []
