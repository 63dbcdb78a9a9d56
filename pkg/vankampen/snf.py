"""
Smith normal form over the integers and exact solvability of A x = v.

A certificate (U, D, V) satisfies D = U @ A @ V with U, V unimodular and D
diagonal, d_1 | d_2 | ... , d_i >= 0. Then A x = v has an integer solution
iff d_i | (U v)_i for i < rank and (U v)_i = 0 beyond the rank; the solution
is x = V z with z_i = (U v)_i / d_i. A failing index is the obstruction
witness.

All arithmetic uses Python ints inside numpy object arrays.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from vankampen.utils import SNF_HERMITE_ABOVE, InputError, PipelineError, load_json


class IntMatrix:
    """Sparse integer matrix: (row, col) -> nonzero value."""

    def __init__(self, rows: int, cols: int, entries: dict[tuple[int, int], int] | None = None):
        self.rows = rows
        self.cols = cols
        self.entries = {key: int(v) for key, v in (entries or {}).items() if v}

    @classmethod
    def from_entries(cls, rows: int, cols: int, triples) -> "IntMatrix":
        entries: dict[tuple[int, int], int] = {}
        for triple in triples:
            if len(triple) != 3 or not all(isinstance(x, int) and not isinstance(x, bool) for x in triple):
                raise InputError(f"Matrix entry must be [row, col, int], got {triple!r}")
            i, j, value = triple
            if not (0 <= i < rows and 0 <= j < cols):
                raise InputError(f"Entry ({i}, {j}) outside a {rows}x{cols} matrix")
            if (i, j) in entries:
                raise InputError(f"Duplicate entry ({i}, {j})")
            entries[(i, j)] = value
        return cls(rows, cols, entries)

    @classmethod
    def from_dense(cls, rows) -> "IntMatrix":
        rows = [list(row) for row in rows]
        width = len(rows[0]) if rows else 0
        if any(len(row) != width for row in rows):
            raise InputError("Ragged matrix")
        return cls(len(rows), width, {(i, j): int(x) for i, row in enumerate(rows) for j, x in enumerate(row)})

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    def to_dense(self) -> np.ndarray:
        M = np.zeros((self.rows, self.cols), dtype=object)
        for (i, j), value in self.entries.items():
            M[i, j] = value
        return M

    def matvec(self, x) -> list[int]:
        x = list(x)
        if len(x) != self.cols:
            raise InputError(f"Vector of length {len(x)} against {self.cols} columns")
        out = [0] * self.rows
        for (i, j), value in self.entries.items():
            out[i] += value * x[j]
        return out

    def column(self, j: int) -> dict[int, int]:
        return {i: v for (i, jj), v in self.entries.items() if jj == j}

    def to_json(self) -> dict:
        return {
            "rows": self.rows,
            "cols": self.cols,
            "entries": [[i, j, v] for (i, j), v in sorted(self.entries.items())],
        }

    def __eq__(self, other) -> bool:
        return isinstance(other, IntMatrix) and self.shape == other.shape and self.entries == other.entries

    def __repr__(self) -> str:
        return f"IntMatrix({self.rows}x{self.cols}, nnz={len(self.entries)})"


@dataclass
class SNFCertificate:
    A: IntMatrix
    U: np.ndarray
    D: np.ndarray
    V: np.ndarray

    @property
    def diagonal(self) -> list[int]:
        return [int(self.D[i, i]) for i in range(min(self.D.shape))]

    @property
    def rank(self) -> int:
        return sum(1 for x in self.diagonal if x != 0)

    @property
    def invariant_factors(self) -> list[int]:
        return [x for x in self.diagonal if x != 0]


class Solution(NamedTuple):
    x: list[int]


class Obstructed(NamedTuple):
    """(U v)[index] = residue is not divisible by divisor (0 beyond the rank)."""
    index: int
    residue: int
    divisor: int


SolveResult = Solution | Obstructed


# ═════════════════════════════════════════════════════════════════════════════
# Smith normal form
# ═════════════════════════════════════════════════════════════════════════════


def exgcd(a: int, b: int) -> tuple[int, int, int, int]:
    """
    Extended gcd as a 2x2 transform.

    Returns (m00, m01, m10, m11) of determinant 1 with M @ [a, b] = [gcd(a, b), 0].
    When a divides b, m01 is 0, so the line carrying a is only rescaled by its sign.
    """
    if a == 0 and b == 0:
        return 1, 0, 0, 1
    if a != 0 and b % a == 0:
        g, s, t = abs(a), (1 if a > 0 else -1), 0
    else:
        old_r, r = a, b
        old_s, s = 1, 0
        old_t, t = 0, 1
        while r:
            q = old_r // r
            old_r, r = r, old_r - q * r
            old_s, s = s, old_s - q * s
            old_t, t = t, old_t - q * t
        g, s, t = old_r, old_s, old_t
        if g < 0:
            g, s, t = -g, -s, -t
    return s, t, -(b // g), a // g


def _mix(P: dict[int, int], Q: dict[int, int], a: int, b: int, c: int, d: int) -> tuple[dict, dict]:
    """(a P + b Q, c P + d Q) on sparse vectors."""
    new_p, new_q = {}, {}
    for key in P.keys() | Q.keys():
        x, y = P.get(key, 0), Q.get(key, 0)
        if u := a * x + b * y:
            new_p[key] = u
        if w := c * x + d * y:
            new_q[key] = w
    return new_p, new_q


class _Elimination:
    """
    Working state of a sparse Smith reduction.

    M is kept as row dicts plus per-column row supports; U as row dicts and V
    as column dicts, so that U @ A @ V equals M after every operation.
    """

    def __init__(self, A: IntMatrix):
        self.R, self.S = A.shape
        self.M: list[dict[int, int]] = [{} for _ in range(self.R)]
        self.support: list[set[int]] = [set() for _ in range(self.S)]
        for (i, j), value in A.entries.items():
            self.M[i][j] = value
            self.support[j].add(i)
        self.U = [{i: 1} for i in range(self.R)]
        self.V = [{j: 1} for j in range(self.S)]

    # ── Elementary operations ─────────────────────────────────────────────

    def row_op(self, p: int, q: int, a: int, b: int, c: int, d: int) -> None:
        """(row p, row q) <- (a p + b q, c p + d q)."""
        touched = self.M[p].keys() | self.M[q].keys()
        self.M[p], self.M[q] = _mix(self.M[p], self.M[q], a, b, c, d)
        for j in touched:
            for i in (p, q):
                if j in self.M[i]:
                    self.support[j].add(i)
                else:
                    self.support[j].discard(i)
        self.U[p], self.U[q] = _mix(self.U[p], self.U[q], a, b, c, d)

    def col_op(self, p: int, q: int, a: int, b: int, c: int, d: int) -> None:
        """(col p, col q) <- (a p + b q, c p + d q)."""
        col_p = {i: self.M[i][p] for i in self.support[p]}
        col_q = {i: self.M[i][q] for i in self.support[q]}
        new_p, new_q = _mix(col_p, col_q, a, b, c, d)
        for i in col_p.keys() | col_q.keys():
            row = self.M[i]
            for j, new in ((p, new_p), (q, new_q)):
                if i in new:
                    row[j] = new[i]
                else:
                    row.pop(j, None)
        self.support[p], self.support[q] = set(new_p), set(new_q)
        self.V[p], self.V[q] = _mix(self.V[p], self.V[q], a, b, c, d)

    def negate_row(self, i: int) -> None:
        self.M[i] = {j: -v for j, v in self.M[i].items()}
        self.U[i] = {j: -v for j, v in self.U[i].items()}

    def _clear_in_column(self, i: int, q: int, j: int) -> None:
        if j in self.M[q]:
            self.row_op(i, q, *exgcd(self.M[i][j], self.M[q][j]))

    def _clear_in_row(self, i: int, j: int, q: int) -> None:
        if q in self.M[i]:
            self.col_op(j, q, *exgcd(self.M[i][j], self.M[i][q]))

    # ── Phases ────────────────────────────────────────────────────────────

    def hermite(self) -> None:
        """Row echelon form; entries above each pivot reduced into [0, pivot)."""
        used: list[int] = []
        for j in range(self.S):
            candidates = sorted(self.support[j] - set(used))
            if not candidates:
                continue
            i = min(candidates, key=lambda r: (abs(self.M[r][j]), r))
            for q in candidates:
                if q != i:
                    self._clear_in_column(i, q, j)
            if self.M[i][j] < 0:
                self.negate_row(i)
            pivot = self.M[i][j]
            for u in used:
                m = self.M[u].get(j, 0) // pivot
                if m:
                    self.row_op(u, i, 1, -m, 0, 1)
            used.append(i)

    def next_pivot(self, done: set[int]) -> tuple[int, int] | None:
        """Smallest |entry| among unfinished columns, ties by (col, row)."""
        best = None
        for j in range(self.S):
            if j in done or not self.support[j]:
                continue
            for i in self.support[j]:
                key = (abs(self.M[i][j]), j, i)
                if best is None or key < best:
                    best = key
            if best[0] == 1:
                break
        return None if best is None else (best[2], best[1])

    def settle(self, i: int, j: int) -> None:
        """Alternate column and row clearing until (i, j) is alone in both."""
        while not (self.support[j] == {i} and self.M[i].keys() == {j}):
            for q in sorted(self.support[j] - {i}):
                self._clear_in_column(i, q, j)
            for q in sorted(self.M[i].keys() - {j}):
                self._clear_in_row(i, j, q)

    def divisibility(self, pivots: list[tuple[int, int]]) -> None:
        """diag(a, b) -> diag(gcd, lcm) until each pivot divides the later ones."""
        for k in range(len(pivots)):
            i1, j1 = pivots[k]
            for i2, j2 in pivots[k + 1:]:
                a, b = self.M[i1][j1], self.M[i2][j2]
                if b % a == 0:
                    continue
                s, t, c, d = exgcd(a, b)
                g = s * a + t * b
                self.col_op(j1, j2, 1, 1, 0, 1)
                self.row_op(i1, i2, s, t, c, d)
                self.col_op(j1, j2, 1, 0, -(t * (b // g)), 1)

    def certificate(self, A: IntMatrix, pivots: list[tuple[int, int]]) -> "SNFCertificate":
        pivot_rows = {i for i, _ in pivots}
        pivot_cols = {j for _, j in pivots}
        row_order = [i for i, _ in pivots] + [i for i in range(self.R) if i not in pivot_rows]
        col_order = [j for _, j in pivots] + [j for j in range(self.S) if j not in pivot_cols]
        U = np.zeros((self.R, self.R), dtype=object)
        for new, old in enumerate(row_order):
            for c, value in self.U[old].items():
                U[new, c] = value
        V = np.zeros((self.S, self.S), dtype=object)
        for new, old in enumerate(col_order):
            for r, value in self.V[old].items():
                V[r, new] = value
        D = np.zeros((self.R, self.S), dtype=object)
        for k, (i, j) in enumerate(pivots):
            D[k, k] = self.M[i][j]
        return SNFCertificate(A, U, D, V)


def smith_normal_form(A: IntMatrix, *, hermite_above: int = SNF_HERMITE_ABOVE) -> SNFCertificate:
    """
    Certified Smith normal form of a sparse integer matrix.

    Pivots are taken from column supports (smallest |entry|) and cleared with
    extended-gcd transforms. Matrices with more than `hermite_above` rows or
    columns are first brought to Hermite form, with the entries above each
    echelon pivot reduced below that pivot.
    """
    work = _Elimination(A)
    if max(A.rows, A.cols) > hermite_above:
        work.hermite()
    pivots: list[tuple[int, int]] = []
    done: set[int] = set()
    while (pos := work.next_pivot(done)) is not None:
        i, j = pos
        work.settle(i, j)
        done.add(j)
        pivots.append((i, j))
    for i, j in pivots:
        if work.M[i][j] < 0:
            work.negate_row(i)
    work.divisibility(pivots)
    return work.certificate(A, pivots)


# ═════════════════════════════════════════════════════════════════════════════
# Solving and checking
# ═════════════════════════════════════════════════════════════════════════════

def _as_int_vector(v, length: int) -> list[int]:
    v = list(v)
    if len(v) != length:
        raise InputError(f"Vector of length {len(v)}, expected {length}")
    if not all(isinstance(x, (int, np.integer)) and not isinstance(x, bool) for x in v):
        raise InputError("Vector entries must be integers")
    return [int(x) for x in v]


def solve_with_certificate(cert: SNFCertificate, v) -> SolveResult:
    """
    Solve A x = v through U v = D z and x = V z.
    The first row where D cannot divide U v is returned as the witness.
    """
    R, S = cert.A.shape
    w = cert.U.dot(np.array(_as_int_vector(v, R), dtype=object)) if R else np.zeros(0, dtype=object)
    rank = cert.rank
    z = np.zeros(S, dtype=object)
    for i in range(rank):
        d = cert.D[i, i]
        if w[i] % d != 0:
            return Obstructed(i, int(w[i]), int(d))
        z[i] = w[i] // d
    for i in range(rank, R):
        if w[i] != 0:
            return Obstructed(i, int(w[i]), 0)
    x = cert.V.dot(z) if S else z
    return Solution([int(value) for value in x])


def verify(A: IntMatrix, x, v) -> bool:
    """A x == v, recomputed from the sparse entries."""
    x = _as_int_vector(x, A.cols)
    v = _as_int_vector(v, A.rows)
    return A.matvec(x) == v


def solve_integer(A: IntMatrix, v, cert: SNFCertificate | None = None) -> SolveResult:
    """Solution iff v lies in the integer column span of A, else the witness."""
    cert = cert or smith_normal_form(A)
    result = solve_with_certificate(cert, v)
    if isinstance(result, Solution) and not verify(A, result.x, v):
        raise PipelineError("Smith normal form produced a non-solution")
    return result


def check_witness(cert: SNFCertificate, v, witness: Obstructed) -> bool:
    """Re-derive an obstruction from U and D."""
    w = cert.U.dot(np.array(_as_int_vector(v, cert.A.rows), dtype=object))
    i = witness.index
    if w[i] != witness.residue:
        return False
    if i < cert.rank:
        return witness.divisor == cert.D[i, i] and w[i] % witness.divisor != 0
    return witness.divisor == 0 and w[i] != 0


def bareiss_det(M) -> int:
    """Exact integer determinant by fraction-free elimination."""
    A = [[int(x) for x in row] for row in M]
    n = len(A)
    if n == 0:
        return 1
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if A[i][k] != 0), None)
            if swap is None:
                return 0
            A[k], A[swap] = A[swap], A[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


def is_unimodular(M) -> bool:
    return abs(bareiss_det(M)) == 1


def certificate_product(cert: SNFCertificate) -> np.ndarray:
    """U @ A @ V, accumulated over the nonzero entries of A and U."""
    R, S = cert.A.shape
    AV = np.zeros((R, S), dtype=object)
    for (i, k), value in cert.A.entries.items():
        AV[i] += value * cert.V[k]
    out = np.zeros((R, S), dtype=object)
    for i in range(R):
        for k in np.flatnonzero(cert.U[i]):
            out[i] += cert.U[i, k] * AV[k]
    return out


def check_certificate(cert: SNFCertificate, *, unimodular: bool = True) -> bool:
    """
    D = U A V, D diagonal with a divisibility chain, U and V unimodular.

    The determinant check is cubic in the matrix size; pass unimodular=False
    to skip it on large certificates built from elementary transforms.
    """
    R, S = cert.A.shape
    if cert.D.shape != (R, S) or cert.U.shape != (R, R) or cert.V.shape != (S, S):
        return False
    if R and S and not (certificate_product(cert) == cert.D).all():
        return False
    rows, cols = np.nonzero(cert.D)
    if any(i != j for i, j in zip(rows, cols)):
        return False
    diag = cert.diagonal
    if any(x < 0 for x in diag):
        return False
    rank = cert.rank
    if any(x == 0 for x in diag[:rank]) or any(x != 0 for x in diag[rank:]):
        return False
    if any(diag[i + 1] % diag[i] != 0 for i in range(rank - 1)):
        return False
    return not unimodular or (is_unimodular(cert.U) and is_unimodular(cert.V))


# ═════════════════════════════════════════════════════════════════════════════
# File formats
# ═════════════════════════════════════════════════════════════════════════════

def load_matrix(path) -> IntMatrix:
    """{"rows": R, "cols": S, "entries": [[i, j, value], ...]}"""
    data = load_json(path)
    if not isinstance(data, dict) or not {"rows", "cols", "entries"} <= data.keys():
        raise InputError(f"{path}: expected keys 'rows', 'cols' and 'entries'")
    rows, cols = data["rows"], data["cols"]
    if not all(isinstance(x, int) and not isinstance(x, bool) and x >= 0 for x in (rows, cols)):
        raise InputError(f"{path}: rows and cols must be non-negative integers")
    if not isinstance(data["entries"], list):
        raise InputError(f"{path}: 'entries' must be a list")
    return IntMatrix.from_entries(rows, cols, [tuple(e) if isinstance(e, list) else () for e in data["entries"]])


def load_vector(path) -> list[int]:
    """A JSON list of integers, or {"values": [...]}."""
    data = load_json(path)
    if isinstance(data, dict):
        data = data.get("values")
    if not isinstance(data, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in data):
        raise InputError(f"{path}: expected a list of integers")
    return data
