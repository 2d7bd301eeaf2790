"""Small linear-algebra toolkit with an exact rational path and a float path.

Exact routines take sympy matrices with rational entries and work over QQ
through ``DomainMatrix``.  Float routines take numpy arrays and decide rank
with a relative singular-value threshold.
"""

from __future__ import annotations

import numpy as np
import sympy as sp
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

RANK_RTOL = 1e-9


def is_rational(M) -> bool:
    return all(isinstance(x, sp.Rational) for x in sp.Matrix(M))


def dm(M) -> DomainMatrix:
    return DomainMatrix.from_Matrix(sp.Matrix(M)).convert_to(QQ)


def col(values) -> sp.Matrix:
    return sp.Matrix([sp.nsimplify(v) if isinstance(v, float) else sp.sympify(v) for v in values])


def rank(M) -> int:
    M = sp.Matrix(M)
    if M.rows == 0 or M.cols == 0:
        return 0
    if is_rational(M):
        return dm(M).rank()
    return M.rank(simplify=True)


def nullspace(M) -> list[sp.Matrix]:
    """Exact kernel basis from the reduced row echelon form."""
    M = sp.Matrix(M)
    if M.rows == 0:
        return [sp.eye(M.cols)[:, j] for j in range(M.cols)]
    if is_rational(M):
        rows = dm(M).nullspace().to_Matrix()
        return [rows.row(i).T for i in range(rows.rows)]
    return M.nullspace(simplify=True)


def left_nullspace(M) -> list[sp.Matrix]:
    return nullspace(sp.Matrix(M).T)


def in_image(M, b) -> bool:
    """Exact test ``b in Im(M)``; symbolic ``b`` is allowed when ``M`` is rational."""
    M, b = sp.Matrix(M), sp.Matrix(b)
    if M.cols == 0:
        return all(sp.simplify(x) == 0 for x in b)
    if is_rational(M) and is_rational(b):
        return rank(M) == rank(M.row_join(b))
    return all(sp.simplify((u.T * b)[0]) == 0 for u in left_nullspace(M))


def solve_particular(M, b, prefer_last: bool = True) -> sp.Matrix | None:
    """One exact solution of ``M x = b`` or ``None``.

    Free variables are set to zero.  With ``prefer_last`` the pivots are taken
    from the rightmost columns, so the leading coordinates stay free (zero).
    """
    M, b = sp.Matrix(M), sp.Matrix(b)
    n = M.cols
    perm = list(range(n - 1, -1, -1)) if prefer_last else list(range(n))
    Mp = M.extract(list(range(M.rows)), perm)
    aug = Mp.row_join(b)
    if is_rational(aug):
        R, pivots = dm(aug).rref()
        R = R.to_Matrix()
    else:
        R, pivots = aug.rref(simplify=True)
    if n in pivots:
        return None
    xp = sp.zeros(n, 1)
    for r, p in enumerate(pivots):
        xp[p] = R[r, n]
    x = sp.zeros(n, 1)
    for k, p in enumerate(perm):
        x[p] = xp[k]
    return x


def solve_in_subspace(M, b, basis) -> sp.Matrix:
    """Solve ``M x = b`` with ``x`` restricted to ``span(basis)``.

    ``M`` restricted to the subspace must be injective; ``b`` may be symbolic.
    Uses the normal equations, which are exact when ``b`` lies in the image.
    """
    B = sp.Matrix.hstack(*basis)
    MB = sp.Matrix(M) * B
    G = MB.T * MB
    a = G.LUsolve(MB.T * sp.Matrix(b))
    return (B * a).applyfunc(sp.simplify)


def matrix_power(M, k: int) -> sp.Matrix:
    M = sp.Matrix(M)
    if is_rational(M):
        return dm(M).pow(k).to_Matrix() if k > 0 else sp.eye(M.rows)
    return M**k


def independent(vectors) -> bool:
    if not vectors:
        return True
    return rank(sp.Matrix.hstack(*vectors)) == len(vectors)


def normalize_first(v: sp.Matrix) -> sp.Matrix:
    """Scale so that the first nonzero coordinate is 1."""
    for x in v:
        if x != 0:
            return v / x
    return v


# float path


def numeric_rank(A: np.ndarray, rtol: float = RANK_RTOL) -> int:
    A = np.atleast_2d(np.asarray(A))
    if A.size == 0:
        return 0
    s = np.linalg.svd(A, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > rtol * s[0]))


def numeric_nullspace(A: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal kernel basis as columns."""
    A = np.atleast_2d(np.asarray(A))
    _, s, vh = np.linalg.svd(A)
    r = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    return vh[r:].conj().T


def numeric_in_image(A: np.ndarray, b: np.ndarray, rtol: float = RANK_RTOL) -> bool:
    A = np.atleast_2d(np.asarray(A))
    b = np.asarray(b).reshape(-1, 1)
    if np.linalg.norm(b) == 0:
        return True
    scale = max(np.linalg.norm(A, 2), np.linalg.norm(b))
    u, s, _ = np.linalg.svd(A)
    r = int(np.sum(s > rtol * s[0])) if s.size and s[0] > 0 else 0
    resid = u[:, r:].conj().T @ b
    return bool(np.linalg.norm(resid) <= 1e2 * rtol * scale)


def to_numpy(M) -> np.ndarray:
    M = sp.Matrix(M)
    arr = np.array(M.evalf(), dtype=complex)
    if np.all(arr.imag == 0):
        return arr.real.astype(float)
    return arr
