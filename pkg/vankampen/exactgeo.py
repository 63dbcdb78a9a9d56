"""
Exact rational geometry for r-fold intersection signs.

Matrices are numpy object arrays of Fractions; nothing here ever rounds.
An affine simplex carries its points in vertex order and a +-1 orientation
relative to that order; its edge matrix B = [p_1 - p_0 | ... | p_m - p_0]
spans the linear part of its affine hull.

Four routes to the sign of a transverse r-fold point are provided and
cross-checked in the test suite:

* ``r_fold_sign``        epsilon_{d,m_1..m_r} * sign det [M_P | M_delta]
* ``sign_unraveled``     bases of the (r-1)-fold intersections compared
                         against each simplex by Gram determinants
* ``sign_inductive``     left fold of pairwise induced orientations
* ``sign_via_restriction`` the (r-1)-fold sign of sigma_1 ∩ sigma_j computed
                         inside sigma_1
"""

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import prod
from pathlib import Path
from typing import NamedTuple

import numpy as np

from vankampen.complex import Simplex, SimplicialComplex
from vankampen.delprod import permutation_sign
from vankampen.utils import (
    DEFAULT_BOX,
    MAX_RETRIES,
    DegeneracyError,
    InputError,
    RetryBudgetExceeded,
    format_point,
    load_json,
    parse_rational,
)

Point = tuple[Fraction, ...]


# ═════════════════════════════════════════════════════════════════════════════
# Exact matrix helpers
# ═════════════════════════════════════════════════════════════════════════════

def zeros(rows: int, cols: int) -> np.ndarray:
    """Exact zero matrix of Python ints."""
    M = np.empty((rows, cols), dtype=object)
    M.fill(Fraction(0))
    return M


def eye(n: int) -> np.ndarray:
    """Exact identity matrix of Python ints."""
    M = zeros(n, n)
    for i in range(n):
        M[i, i] = Fraction(1)
    return M


def to_matrix(rows, *, cols: int | None = None) -> np.ndarray:
    """Object matrix of Fractions from nested sequences or an array."""
    rows = [[Fraction(x) if not isinstance(x, np.integer) else Fraction(int(x)) for x in row]
            for row in rows]
    if not rows:
        return zeros(0, cols or 0)
    width = len(rows[0])
    if any(len(row) != width for row in rows):
        raise ValueError("Ragged matrix")
    M = zeros(len(rows), width)
    for i, row in enumerate(rows):
        for j, x in enumerate(row):
            M[i, j] = x
    return M


def _row_reduce(M: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form over Q and its pivot columns."""
    R = M.copy()
    n_rows, n_cols = R.shape
    pivots = []
    row = 0
    for col in range(n_cols):
        if row == n_rows:
            break
        pivot = next((i for i in range(row, n_rows) if R[i, col] != 0), None)
        if pivot is None:
            continue
        if pivot != row:
            R[[row, pivot]] = R[[pivot, row]]
        R[row] = R[row] / R[row, col]
        for i in range(n_rows):
            if i != row and R[i, col] != 0:
                R[i] = R[i] - R[i, col] * R[row]
        pivots.append(col)
        row += 1
    return R, pivots


def det(M) -> Fraction:
    """Exact determinant by Fraction elimination."""
    A = M.copy() if isinstance(M, np.ndarray) else to_matrix(M)
    n, m = A.shape
    if n != m:
        raise ValueError(f"Determinant of a non-square {n}x{m} matrix")
    result = Fraction(1)
    for col in range(n):
        pivot = next((i for i in range(col, n) if A[i, col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            A[[col, pivot]] = A[[pivot, col]]
            result = -result
        result *= A[col, col]
        for i in range(col + 1, n):
            if A[i, col] != 0:
                A[i, col:] = A[i, col:] - (A[i, col] / A[col, col]) * A[col, col:]
    return result


def det_sign(M) -> int:
    """Sign of the exact determinant: 1, -1 or 0."""
    value = det(M)
    return (value > 0) - (value < 0)


def rank(M: np.ndarray) -> int:
    """Rank over Q, by exact row reduction."""
    return len(_row_reduce(M)[1])


def nullspace(M: np.ndarray) -> np.ndarray:
    """Columns form a basis of {x : M x = 0}."""
    n_cols = M.shape[1]
    R, pivots = _row_reduce(M)
    free = [c for c in range(n_cols) if c not in pivots]
    N = zeros(n_cols, len(free))
    for k, f in enumerate(free):
        N[f, k] = Fraction(1)
        for row, p in enumerate(pivots):
            N[p, k] = -R[row, f]
    return N


def solve(M: np.ndarray, b) -> np.ndarray | None:
    """Unique solution of a square system, or None when M is singular."""
    n = M.shape[0]
    aug = np.hstack([M, np.array(list(b), dtype=object).reshape(n, 1)])
    R, pivots = _row_reduce(aug)
    if pivots != list(range(n)):
        return None
    return R[:, n]


# ═════════════════════════════════════════════════════════════════════════════
# Affine simplices, flats and chains
# ═════════════════════════════════════════════════════════════════════════════

def as_point(coords) -> Point:
    """Coerce a coordinate sequence to a tuple of Fractions."""
    return tuple(Fraction(x) for x in coords)


@dataclass(frozen=True)
class AffineSimplex:
    points: tuple[Point, ...]
    orientation: int = 1

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(as_point(p) for p in self.points))
        if self.orientation not in (1, -1):
            raise ValueError(f"Orientation must be +-1, got {self.orientation}")

    @property
    def dim(self) -> int:
        return len(self.points) - 1

    @property
    def ambient(self) -> int:
        return len(self.points[0])

    def edge_matrix(self) -> np.ndarray:
        d, m = self.ambient, self.dim
        B = zeros(d, m)
        base = self.points[0]
        for j in range(m):
            for i in range(d):
                B[i, j] = self.points[j + 1][i] - base[i]
        return B

    def reversed(self) -> "AffineSimplex":
        return AffineSimplex(self.points, -self.orientation)

    def facets(self) -> list[tuple[int, "AffineSimplex"]]:
        if self.dim < 1:
            raise ValueError("A 0-simplex has no facets")
        return [
            (self.orientation * (-1) ** i, AffineSimplex(self.points[:i] + self.points[i + 1:]))
            for i in range(len(self.points))
        ]


@dataclass(eq=False)
class OrientedFlat:
    """Linear subspace spanned by the columns of `basis`, oriented by basis * weight."""
    basis: np.ndarray
    weight: int = 1

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def of(cls, s: AffineSimplex) -> "OrientedFlat":
        return cls(s.edge_matrix(), s.orientation)


class Crossing(NamedTuple):
    point: Point
    barycentric: list[tuple[Fraction, ...]]


class AffineChain:
    """
    Integer combination of equal-dimensional affine simplices.

    Terms are stored under their sorted point tuple, so (-a)sigma and
    a(-sigma) are the same term.
    """

    def __init__(self, terms=()):
        self.terms: dict[tuple[Point, ...], int] = {}
        self.dim: int | None = None
        for coeff, s in terms:
            self.add(coeff, s)

    def add(self, coeff: int, s: AffineSimplex) -> None:
        if self.dim is None:
            self.dim = s.dim
        elif s.dim != self.dim:
            raise ValueError(f"Mixed dimensions in chain: {self.dim} and {s.dim}")
        order = sorted(range(len(s.points)), key=lambda i: s.points[i])
        key = tuple(s.points[i] for i in order)
        value = self.terms.get(key, 0) + coeff * s.orientation * permutation_sign(tuple(order))
        if value:
            self.terms[key] = value
        else:
            self.terms.pop(key, None)

    def __iter__(self):
        for key in sorted(self.terms):
            yield self.terms[key], AffineSimplex(key)

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, AffineChain) and self.terms == other.terms

    def scaled(self, factor: int) -> "AffineChain":
        return AffineChain((factor * c, s) for c, s in self)


@dataclass
class ExactAffineMap:
    """Vertex -> point of Q^d, extended linearly on every face."""
    d: int
    coords: dict[int, Point]

    def __post_init__(self):
        self.coords = {int(v): as_point(p) for v, p in self.coords.items()}
        for v, p in self.coords.items():
            if len(p) != self.d:
                raise InputError(f"Vertex {v} has {len(p)} coordinates, expected {self.d}")
        if len(set(self.coords.values())) != len(self.coords):
            raise DegeneracyError("Two vertices share an image point")

    def image(self, face: Simplex, orientation: int = 1) -> AffineSimplex:
        try:
            return AffineSimplex(tuple(self.coords[v] for v in face), orientation)
        except KeyError as err:
            raise InputError(f"Map has no image for vertex {err.args[0]}") from err

    def to_json(self) -> dict:
        return {"d": self.d, "coords": {str(v): format_point(p) for v, p in sorted(self.coords.items())}}


def load_map(path, K: SimplicialComplex | None = None) -> ExactAffineMap:
    """
    Read {"d": d, "coords": {vertex: [q, ...]}} into an ExactAffineMap.

    Anything malformed, including a d that is not a positive integer, raises
    InputError. When K is given, every vertex of K must have an image.
    """
    data = load_json(path)
    if not isinstance(data, dict) or "d" not in data or "coords" not in data:
        raise InputError(f"{path}: expected keys 'd' and 'coords'")
    d = data["d"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise InputError(f"{path}: dimension d must be a positive integer, got {d!r}")
    try:
        coords = {int(v): tuple(parse_rational(x) for x in p) for v, p in data["coords"].items()}
    except (TypeError, ValueError, AttributeError) as err:
        raise InputError(f"{path}: bad coordinates ({err})") from err
    f = ExactAffineMap(d, coords)
    if K is not None:
        missing = [v for v in range(K.vertex_count) if v not in f.coords]
        if missing:
            raise InputError(f"{path}: no image for vertices {missing}")
    return f


def save_map(f: ExactAffineMap, path) -> Path:
    """Write the map as exact rational strings."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(f.to_json(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


# ═════════════════════════════════════════════════════════════════════════════
# Sign conventions
# ═════════════════════════════════════════════════════════════════════════════

def epsilon(d: int, dims: list[int]) -> int:
    """(-1)^t with t = sum_i (r-i) d (d-m_i) + sum_{i<j} (d-m_i)(d-m_j)."""
    r = len(dims)
    if sum(dims) != d * (r - 1):
        raise ValueError(f"Dimensions {dims} do not sum to d(r-1) = {d * (r - 1)}")
    t = sum((r - i) * d * (d - m) for i, m in enumerate(dims, start=1))
    t += sum((d - dims[i]) * (d - dims[j]) for i in range(r) for j in range(i + 1, r))
    return -1 if t % 2 else 1


def epsilon_rk(r: int, k: int) -> int:
    """-1 exactly when k is odd and r = 2 mod 4."""
    if r < 2 or k < 1:
        raise ValueError(f"Need r >= 2 and k >= 1, got r={r}, k={k}")
    return -1 if k % 2 == 1 and r % 4 == 2 else 1


# ═════════════════════════════════════════════════════════════════════════════
# Generic maps
# ═════════════════════════════════════════════════════════════════════════════

def _draw_map(vertex_count: int, d: int, seed: int, box: int, nonce: int) -> ExactAffineMap:
    rng = np.random.default_rng([seed, nonce])
    raw = rng.integers(0, box, size=(vertex_count, d))
    return ExactAffineMap(d, {v: tuple(int(x) for x in raw[v]) for v in range(vertex_count)})


def sample_generic_map(
    K: SimplicialComplex,
    d: int,
    seed: int,
    box: int = DEFAULT_BOX,
    *,
    cells=(),
    max_retries: int = MAX_RETRIES,
) -> ExactAffineMap:
    """
    Seeded integer map in [0, box)^d, generic on every tuple in `cells`.

    A degenerate draw is replaced by the draw with the next nonce.
    """
    if d < 1:
        raise InputError(f"Target dimension must be positive, got {d}")
    if seed < 0:
        raise InputError(f"Seed must be non-negative, got {seed}")
    if box < K.vertex_count * d:
        raise InputError(f"Box {box} is smaller than |V|*d = {K.vertex_count * d}")
    cells = list(cells)
    for nonce in range(max_retries):
        try:
            f = _draw_map(K.vertex_count, d, seed, box, nonce)
            check_general_position(f, cells)
        except DegeneracyError as err:
            print(f"  Degenerate sample (attempt {nonce + 1}/{max_retries}): {err}")
            continue
        return f
    raise RetryBudgetExceeded(
        f"No generic map after {max_retries} attempts (box={box}); use a larger box"
    )


def check_general_position(f: ExactAffineMap, cells) -> None:
    """
    Raise DegeneracyError unless every consumed tuple is generic.

    Tuples of dimension d(r-1) with all factors of dimension <= d must meet
    transversally away from faces; every other tuple must have disjoint
    affine hulls.
    """
    for cell in cells:
        simplices = [f.image(face) for face in cell]
        dims = [s.dim for s in simplices]
        required = f.d * (len(cell) - 1)
        if sum(dims) == required and max(dims) <= f.d:
            intersection_point(simplices)
        elif sum(dims) <= required and hulls_meet(simplices):
            raise DegeneracyError(f"affine hulls of {cell} meet")


# ═════════════════════════════════════════════════════════════════════════════
# r-fold points
# ═════════════════════════════════════════════════════════════════════════════

def _hull_system(simplices: list[AffineSimplex]) -> tuple[np.ndarray, list[Fraction]]:
    """Rows y - B_i lambda_i = p_0^i for every i; unknowns (y, lambda_1, ...)."""
    d = simplices[0].ambient
    total = sum(s.dim for s in simplices)
    M = zeros(d * len(simplices), d + total)
    b: list[Fraction] = []
    col = d
    for i, s in enumerate(simplices):
        rows = slice(i * d, (i + 1) * d)
        M[rows, :d] = eye(d)
        M[rows, col:col + s.dim] = -s.edge_matrix()
        b.extend(s.points[0])
        col += s.dim
    return M, b


def hull_intersection_dim(simplices: list[AffineSimplex]) -> int:
    """
    Dimension of the common part of the affine hulls, -1 when empty.

    Assumes every simplex is non-degenerate, so y determines each lambda_i.
    """
    M, b = _hull_system(simplices)
    aug = np.hstack([M, np.array(b, dtype=object).reshape(len(b), 1)])
    rank_m = rank(M)
    if rank_m != rank(aug):
        return -1
    return M.shape[1] - rank_m


def hulls_meet(simplices: list[AffineSimplex]) -> bool:
    """True when the affine hulls have a common point."""
    M, b = _hull_system(simplices)
    aug = np.hstack([M, np.array(b, dtype=object).reshape(len(b), 1)])
    return rank(M) == rank(aug)


def intersection_point(simplices: list[AffineSimplex]) -> Crossing | None:
    """
    The common point of the open simplices, if any.

    Raises DegeneracyError when the hulls are not transverse or the common
    point of the hulls lies on the hull of a proper face.
    """
    d = simplices[0].ambient
    dims = [s.dim for s in simplices]
    if sum(dims) != d * (len(simplices) - 1):
        raise ValueError(f"Dimensions {dims} do not sum to d(r-1) for d={d}")
    M, b = _hull_system(simplices)
    sol = solve(M, b)
    if sol is None:
        raise DegeneracyError("affine hulls are not transverse")
    point = tuple(sol[:d])
    barycentric = []
    col = d
    for m in dims:
        lam = list(sol[col:col + m])
        barycentric.append((Fraction(1 - sum(lam)),) + tuple(lam))
        col += m
    coords = [c for bary in barycentric for c in bary]
    if any(c == 0 for c in coords):
        raise DegeneracyError("common point lies on a proper face")
    if all(c > 0 for c in coords):
        return Crossing(point, barycentric)
    return None


def _r_fold_det_sign(flats: list[OrientedFlat], d: int) -> int:
    """sign det [M_P | M_delta] times the flats' weights."""
    r = len(flats)
    total = sum(F.dim for F in flats)
    M = zeros(d * r, total + d)
    col = 0
    for i, F in enumerate(flats):
        rows = slice(i * d, (i + 1) * d)
        M[rows, col:col + F.dim] = F.basis
        M[rows, total:] = eye(d)
        col += F.dim
    s = det_sign(M)
    if s == 0:
        raise DegeneracyError("non-transverse r-fold intersection")
    return s * prod(F.weight for F in flats)


def flats_r_fold_sign(flats: list[OrientedFlat], d: int) -> int:
    """r_fold_sign on oriented flats instead of simplices."""
    return epsilon(d, [F.dim for F in flats]) * _r_fold_det_sign(flats, d)


def r_fold_sign(simplices: list[AffineSimplex]) -> int:
    """epsilon_{d,m_1..m_r} * sign det [M_P | M_delta] * orientations."""
    d = simplices[0].ambient
    return flats_r_fold_sign([OrientedFlat.of(s) for s in simplices], d)


def _linear_intersection(bases: list[np.ndarray], d: int) -> np.ndarray:
    normals = [nullspace(B.T).T for B in bases]
    C = np.vstack(normals) if normals else zeros(0, d)
    return nullspace(C)


def _complement(alpha: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Columns of B extending alpha to a basis of span(B), chosen greedily."""
    chosen = []
    current = alpha
    r0 = rank(current) if current.shape[1] else 0
    for j in range(B.shape[1]):
        trial = np.hstack([current, B[:, j:j + 1]])
        r1 = rank(trial)
        if r1 > r0:
            chosen.append(j)
            current, r0 = trial, r1
    return B[:, chosen]


def _orientation_sign(B: np.ndarray, C: np.ndarray) -> int:
    """Sign of the change of basis between two bases of one subspace."""
    return det_sign(B.T @ C)


def intersect_flats(F1: OrientedFlat, F2: OrientedFlat) -> OrientedFlat:
    """
    Induced orientation on F1 ∩ F2.

    With alpha a basis of the intersection and beta_i completing it to a
    basis of F_i, alpha is oriented so that [alpha|beta_i] orients F_i and
    [alpha|beta_1|beta_2] orients the ambient space.
    """
    d = F1.basis.shape[0]
    ell = F1.dim + F2.dim - d
    if ell < 0:
        raise ValueError(f"Flats of dimensions {F1.dim}, {F2.dim} cannot meet transversally in R^{d}")
    alpha = _linear_intersection([F1.basis, F2.basis], d)
    if alpha.shape[1] != ell:
        raise DegeneracyError("flats are not transverse")
    beta1 = _complement(alpha, F1.basis)
    beta2 = _complement(alpha, F2.basis)
    c1 = _orientation_sign(F1.basis, np.hstack([alpha, beta1]))
    c2 = _orientation_sign(F2.basis, np.hstack([alpha, beta2]))
    s = det_sign(np.hstack([alpha, beta1, beta2]))
    if 0 in (c1, c2, s):
        raise DegeneracyError("flats are not transverse")
    return OrientedFlat(alpha, F1.weight * F2.weight * c1 * c2 * s)


def oriented_intersection_basis(s1: AffineSimplex, s2: AffineSimplex) -> OrientedFlat:
    """Oriented basis of L(s1) ∩ L(s2); for a point (ell = 0) only the weight is meaningful."""
    return intersect_flats(OrientedFlat.of(s1), OrientedFlat.of(s2))


def sign_inductive(simplices: list[AffineSimplex]) -> int:
    """Intersect the flats one at a time; the last intersection is an oriented point."""
    flat = OrientedFlat.of(simplices[0])
    for s in simplices[1:]:
        flat = intersect_flats(flat, OrientedFlat.of(s))
    if flat.dim != 0:
        raise ValueError("Dimensions do not sum to d(r-1)")
    return flat.weight


def sign_unraveled(simplices: list[AffineSimplex]) -> int:
    """
    Sign from the bases gamma_i of the intersections of all but the i-th hull.

    eps = sign det [gamma_r | ... | gamma_1] and eps_i compares the i-th
    simplex's orientation with [gamma_r .. (gamma_i omitted) .. gamma_1];
    the sign is eps^(r-1) * prod eps_i.
    """
    d = simplices[0].ambient
    r = len(simplices)
    bases = [s.edge_matrix() for s in simplices]
    gammas = []
    for i in range(r):
        gamma = _linear_intersection([B for j, B in enumerate(bases) if j != i], d)
        if gamma.shape[1] != d - simplices[i].dim:
            raise DegeneracyError("non-transverse r-fold intersection")
        gammas.append(gamma)
    eps = det_sign(np.hstack(gammas[::-1]))
    if eps == 0:
        raise DegeneracyError("non-transverse r-fold intersection")
    result = eps ** (r - 1)
    for i, s in enumerate(simplices):
        others = [gammas[j] for j in reversed(range(r)) if j != i]
        C = np.hstack(others) if others else zeros(d, 0)
        e_i = _orientation_sign(bases[i], C)
        if e_i == 0:
            raise DegeneracyError("non-transverse r-fold intersection")
        result *= s.orientation * e_i
    return result


def _coordinates(B: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    """X with B X = vectors, for B of full column rank and vectors in span(B)."""
    m = B.shape[1]
    R, pivots = _row_reduce(np.hstack([B, vectors]))
    if pivots != list(range(m)):
        raise DegeneracyError("vectors are not in the span of the basis")
    return R[:m, m:]


def sign_via_restriction(simplices: list[AffineSimplex]) -> int:
    """
    The (r-1)-fold sign of sigma_1 ∩ sigma_j (j >= 2) inside sigma_1.

    Coordinates on L(sigma_1) come from its edge matrix; when sigma_1 is
    reversed, so is that ambient orientation, worth (-1)^(r-2).
    """
    first = simplices[0]
    B1 = first.edge_matrix()
    pieces = []
    for s in simplices[1:]:
        flat = intersect_flats(OrientedFlat.of(first), OrientedFlat.of(s))
        pieces.append(OrientedFlat(_coordinates(B1, flat.basis), flat.weight))
    return flats_r_fold_sign(pieces, first.dim) * first.orientation ** (len(simplices) - 2)


# ═════════════════════════════════════════════════════════════════════════════
# Chains
# ═════════════════════════════════════════════════════════════════════════════

def chain_boundary(c: AffineChain) -> AffineChain:
    """Signed facets of every term, with cancellations dropped."""
    out = AffineChain()
    for coeff, s in c:
        for sign, facet in s.facets():
            out.add(coeff * sign, facet)
    return out


def intersection_number(chains: list[AffineChain]) -> int:
    """Sum over common points of all cross terms of coefficients times signs."""
    total = 0
    for combo in product(*[list(c) for c in chains]):
        coeffs = [c for c, _ in combo]
        simplices = [s for _, s in combo]
        if intersection_point(simplices) is not None:
            total += prod(coeffs) * r_fold_sign(simplices)
    return total
