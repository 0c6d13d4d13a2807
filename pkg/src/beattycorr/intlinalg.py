"""Exact integer and rational linear algebra.

Plain lists of Python ints / fractions.Fraction throughout; dimensions in
this package are tiny (<= ~20), so clarity beats asymptotics.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

IntMatrix = list[list[int]]


def identity(n: int) -> IntMatrix:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def mat_mul(A: IntMatrix, B: IntMatrix) -> IntMatrix:
    return [[sum(a * b for a, b in zip(row, col)) for col in zip(*B)] for row in A]


def mat_vec(A, v):
    return [sum(a * x for a, x in zip(row, v)) for row in A]


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, x, y) with g = gcd(a, b) >= 0 and a*x + b*y = g."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def hnf_with_transform(M: IntMatrix) -> tuple[IntMatrix, IntMatrix]:
    """Row Hermite normal form.  Returns (H, U) with U @ M = H, U unimodular,
    H upper echelon with positive pivots and reduced entries above them."""
    m = len(M)
    n = len(M[0]) if m else 0
    H = [list(map(int, row)) for row in M]
    U = identity(m)
    row = 0
    for col in range(n):
        piv = next((i for i in range(row, m) if H[i][col] != 0), None)
        if piv is None:
            continue
        H[row], H[piv] = H[piv], H[row]
        U[row], U[piv] = U[piv], U[row]
        for i in range(row + 1, m):
            if H[i][col] == 0:
                continue
            a, b = H[row][col], H[i][col]
            g, x, y = xgcd(a, b)
            p, q = a // g, b // g
            # [[x, y], [-q, p]] has determinant 1 and sends (a, b) to (g, 0)
            H[row], H[i] = (
                [x * hr + y * hi for hr, hi in zip(H[row], H[i])],
                [-q * hr + p * hi for hr, hi in zip(H[row], H[i])],
            )
            U[row], U[i] = (
                [x * ur + y * ui for ur, ui in zip(U[row], U[i])],
                [-q * ur + p * ui for ur, ui in zip(U[row], U[i])],
            )
        if H[row][col] < 0:
            H[row] = [-h for h in H[row]]
            U[row] = [-u for u in U[row]]
        for i in range(row):
            q = H[i][col] // H[row][col]
            if q:
                H[i] = [hi - q * hr for hi, hr in zip(H[i], H[row])]
                U[i] = [ui - q * ur for ui, ur in zip(U[i], U[row])]
        row += 1
        if row == m:
            break
    return H, U


def integer_kernel(M: IntMatrix) -> IntMatrix:
    """Basis of {k in Z^m : k @ M = 0} (a saturated lattice, possibly empty)."""
    H, U = hnf_with_transform(M)
    return [U[i] for i in range(len(M)) if all(h == 0 for h in H[i])]


def _swap_cols(A, i, j):
    for row in A:
        row[i], row[j] = row[j], row[i]


def snf_with_transforms(M: IntMatrix):
    """Smith normal form.  Returns (U, D, V, Vinv) with U @ M @ V = D diagonal,
    U and V unimodular, and Vinv = V^-1 maintained alongside."""
    m = len(M)
    n = len(M[0]) if m else 0
    D = [list(map(int, row)) for row in M]
    U = identity(m)
    V = identity(n)
    Vinv = identity(n)

    def row_combine(i, j, x, y, p, q):
        # rows i, j <- (x*i + y*j, -q*i + p*j), det 1
        D[i], D[j] = (
            [x * a + y * b for a, b in zip(D[i], D[j])],
            [-q * a + p * b for a, b in zip(D[i], D[j])],
        )
        U[i], U[j] = (
            [x * a + y * b for a, b in zip(U[i], U[j])],
            [-q * a + p * b for a, b in zip(U[i], U[j])],
        )

    def col_combine(i, j, x, y, p, q):
        # cols i, j <- (x*i + y*j, -q*i + p*j); Vinv gets the inverse op
        for row in D:
            row[i], row[j] = x * row[i] + y * row[j], -q * row[i] + p * row[j]
        for row in V:
            row[i], row[j] = x * row[i] + y * row[j], -q * row[i] + p * row[j]
        # inverse of [[x, -q], [y, p]] (acting on columns) is [[p, q], [-y, x]]
        Vinv[i], Vinv[j] = (
            [p * a + q * b for a, b in zip(Vinv[i], Vinv[j])],
            [-y * a + x * b for a, b in zip(Vinv[i], Vinv[j])],
        )

    t = 0
    while t < min(m, n):
        piv = next(
            ((i, j) for i in range(t, m) for j in range(t, n) if D[i][j] != 0), None
        )
        if piv is None:
            break
        i0, j0 = piv
        if i0 != t:
            D[t], D[i0] = D[i0], D[t]
            U[t], U[i0] = U[i0], U[t]
        if j0 != t:
            _swap_cols(D, t, j0)
            _swap_cols(V, t, j0)
            Vinv[t], Vinv[j0] = Vinv[j0], Vinv[t]
        while True:
            for i in range(t + 1, m):
                if D[i][t] != 0:
                    a, b = D[t][t], D[i][t]
                    g, x, y = xgcd(a, b)
                    row_combine(t, i, x, y, a // g, b // g)
            for j in range(t + 1, n):
                if D[t][j] != 0:
                    a, b = D[t][t], D[t][j]
                    g, x, y = xgcd(a, b)
                    col_combine(t, j, x, y, a // g, b // g)
            if all(D[i][t] == 0 for i in range(t + 1, m)) and all(
                D[t][j] == 0 for j in range(t + 1, n)
            ):
                break
        if D[t][t] < 0:
            D[t] = [-a for a in D[t]]
            U[t] = [-a for a in U[t]]
        t += 1
    # Divisibility chain is not needed by callers; diagonal form suffices.
    return U, D, V, Vinv


def saturation(B: IntMatrix, n: int) -> IntMatrix:
    """Basis of (Q-span of rows of B) intersected with Z^n."""
    if not B:
        return []
    U, D, V, Vinv = snf_with_transforms(B)
    r = sum(1 for i in range(min(len(B), n)) if D[i][i] != 0)
    return [Vinv[i] for i in range(r)]


def unimodular_with_last_rows(S: IntMatrix, n: int) -> IntMatrix:
    """Unimodular n x n matrix whose last len(S) rows span the same lattice
    as the rows of S.  S must be saturated (primitive)."""
    if not S:
        return identity(n)
    U, D, V, Vinv = snf_with_transforms(S)
    s = len(S)
    if any(abs(D[i][i]) != 1 for i in range(s)):
        raise ValueError("rows are not a saturated lattice basis")
    # First s rows of Vinv span lat(S); rotate them to the bottom.
    M = [Vinv[i] for i in range(s, n)] + [Vinv[i] for i in range(s)]
    return M


def solve_rational(A, b):
    """Solve A x = b exactly over Q (A square nonsingular).  Returns list of
    Fraction, or None if A is singular."""
    n = len(A)
    aug = [[Fraction(A[i][j]) for j in range(n)] + [Fraction(b[i])] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [a - f * c for a, c in zip(aug[r], aug[col])]
    return [aug[i][n] for i in range(n)]


def invert_unimodular(M: IntMatrix) -> IntMatrix:
    """Exact inverse of an integer matrix with determinant +-1."""
    n = len(M)
    cols = []
    for j in range(n):
        e = [1 if i == j else 0 for i in range(n)]
        x = solve_rational(M, e)
        if x is None:
            raise ValueError("matrix is singular")
        if any(f.denominator != 1 for f in x):
            raise ValueError("matrix is not unimodular")
        cols.append([int(f) for f in x])
    return [list(row) for row in zip(*cols)]


def in_lattice(v: list[int], basis: IntMatrix) -> bool:
    """Whether integer vector v lies in the lattice spanned by basis rows."""
    if all(x == 0 for x in v):
        return True
    if not basis:
        return False
    H, U = hnf_with_transform(basis)
    H = [row for row in H if any(row)]
    w = list(map(int, v))
    n = len(w)
    r = 0
    for col in range(n):
        if r < len(H) and H[r][col] != 0:
            if w[col] % H[r][col] != 0:
                return False
            q = w[col] // H[r][col]
            w = [a - q * b for a, b in zip(w, H[r])]
            r += 1
        elif w[col] != 0:
            return False
    return all(x == 0 for x in w)


def lattices_equal(A: IntMatrix, B: IntMatrix) -> bool:
    """Mutual membership of two lattice bases (rows)."""
    return all(in_lattice(v, B) for v in A) and all(in_lattice(v, A) for v in B)


def lll_reduce(basis: IntMatrix, delta: Fraction = Fraction(3, 4)) -> IntMatrix:
    """Lenstra-Lenstra-Lovasz reduction with exact rational Gram-Schmidt."""
    B = [list(map(int, row)) for row in basis]
    n = len(B)
    if n <= 1:
        return B

    def gram_schmidt():
        mu = [[Fraction(0)] * n for _ in range(n)]
        norms = [Fraction(0)] * n
        star = [[Fraction(0)] * len(B[0]) for _ in range(n)]
        for i in range(n):
            star[i] = [Fraction(x) for x in B[i]]
            for j in range(i):
                if norms[j] == 0:
                    continue
                mu[i][j] = Fraction(
                    sum(Fraction(a) * b for a, b in zip(B[i], star[j]))
                ) / norms[j]
                star[i] = [a - mu[i][j] * b for a, b in zip(star[i], star[j])]
            norms[i] = sum(a * a for a in star[i])
        return mu, norms

    mu, norms = gram_schmidt()
    k = 1
    while k < n:
        for j in range(k - 1, -1, -1):
            q = round(mu[k][j])
            if q:
                B[k] = [a - q * b for a, b in zip(B[k], B[j])]
                mu, norms = gram_schmidt()
        if norms[k] >= (delta - mu[k][k - 1] ** 2) * norms[k - 1]:
            k += 1
        else:
            B[k], B[k - 1] = B[k - 1], B[k]
            mu, norms = gram_schmidt()
            k = max(k - 1, 1)
    return B
