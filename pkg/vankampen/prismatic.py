"""
Prismatic maps and the prismatic obstruction.

Vertex layout: sigma^N has r(m+1) vertices v_{i,j} (1 <= i <= r, 0 <= j <= m)
with id j*r + (i-1); colour class C_j = {v_{1,j}, ..., v_{r,j}}. The prism is
sigma^m x int(sigma^k) inside Q^(m+k): base vertex u_0 at the origin and
u_j = e_j, heights in the last k coordinates. sigma^k for heights is embedded
the same way, so a height with barycentric weights (b_0, ..., b_k) is the
point (b_1, ..., b_k).

A cell of the configuration space X is a pair (J, perms): J an increasing
set of colours and perms[t] a permutation of the r rows for colour J[t].
It stands for the r colourful simplices tau_i with tau_i ∩ C_j = v_{perms_j(i), j}.
S_r acts on the right (pi_j -> pi_j o pi), which permutes the tau_i; a cell
keeps the orientation of its base face, so the only sign of the action is
the coefficient action (sign pi)^k.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from itertools import combinations, permutations, product
from math import comb, factorial, perm
from multiprocessing import Pool
from pathlib import Path
from typing import NamedTuple

import numpy as np

from vankampen.cocycle import EquivariantCochain, coboundary, to_vector
from vankampen.complex import Simplex, SimplicialComplex
from vankampen.delprod import Perm, compose, identity, invert, permutation_sign
from vankampen.exactgeo import (
    AffineSimplex,
    ExactAffineMap,
    as_point,
    check_general_position,
    det_sign,
    epsilon_rk,
    hull_intersection_dim,
    intersection_point,
    r_fold_sign,
    rank,
    zeros,
)
from vankampen.snf import IntMatrix, Obstructed, SNFCertificate, SolveResult, smith_normal_form, solve_integer
from vankampen.utils import (
    HEIGHT_GRID,
    MAX_MATRIX_DIM,
    MAX_RETRIES,
    MAX_TOP_ORBITS,
    PR3_SAMPLE,
    DegeneracyError,
    InputError,
    ResourceCapError,
    RetryBudgetExceeded,
    format_point,
    load_json,
    parse_rational,
)

Heights = dict[int, tuple[Fraction, ...]]


@dataclass(frozen=True)
class ColorScheme:
    r: int
    k: int

    def __post_init__(self):
        if self.r < 2 or self.k < 1:
            raise InputError(f"Need r >= 2 and k >= 1, got r={self.r}, k={self.k}")

    @property
    def m(self) -> int:
        return (self.r - 1) * self.k

    @property
    def N(self) -> int:
        return (self.r * self.k + 1) * (self.r - 1)

    @property
    def d(self) -> int:
        return self.m + self.k

    @property
    def vertex_count(self) -> int:
        return self.r * (self.m + 1)

    def vertex(self, i: int, j: int) -> int:
        """Id of v_{i,j} (i is 1-based)."""
        return j * self.r + (i - 1)

    def color(self, v: int) -> int:
        return v // self.r

    def row(self, v: int) -> int:
        return v % self.r + 1

    def color_class(self, j: int) -> list[int]:
        return [self.vertex(i, j) for i in range(1, self.r + 1)]


class PrismCell(NamedTuple):
    J: tuple[int, ...]
    perms: tuple[Perm, ...]

    @property
    def dim(self) -> int:
        return len(self.J) - 1


def describe_x_cell(cell: PrismCell) -> str:
    perms = "|".join("".join(str(x + 1) for x in p) for p in cell.perms)
    return f"J={list(cell.J)} pi={perms}"


# ═════════════════════════════════════════════════════════════════════════════
# Colourful complex and the configuration space X
# ═════════════════════════════════════════════════════════════════════════════

def build_colorful_complex(scheme: ColorScheme) -> SimplicialComplex:
    """Faces with at most one vertex per colour class."""
    faces = []
    for size in range(1, scheme.m + 2):
        for J in combinations(range(scheme.m + 1), size):
            for rows in product(range(scheme.r), repeat=size):
                faces.append(tuple(j * scheme.r + i for j, i in zip(J, rows)))
    return SimplicialComplex(scheme.vertex_count, faces)


def is_colorful(face: Simplex, scheme: ColorScheme) -> bool:
    """At most one vertex from each colour class."""
    colors = [scheme.color(v) for v in face]
    return len(set(colors)) == len(colors)


def cells_of_X(scheme: ColorScheme, q: int) -> list[PrismCell]:
    """Every q-cell of X, orbit representatives or not."""
    if not 0 <= q <= scheme.m:
        raise ValueError(f"Cell dimension {q} outside 0..{scheme.m}")
    perms = list(permutations(range(scheme.r)))
    return [
        PrismCell(J, choice)
        for J in combinations(range(scheme.m + 1), q + 1)
        for choice in product(perms, repeat=q + 1)
    ]


def x_orbit_reps(scheme: ColorScheme, q: int) -> list[PrismCell]:
    """Cells whose permutation at the smallest colour is the identity."""
    if not 0 <= q <= scheme.m:
        raise ValueError(f"Cell dimension {q} outside 0..{scheme.m}")
    perms = list(permutations(range(scheme.r)))
    first = identity(scheme.r)
    return [
        PrismCell(J, (first,) + rest)
        for J in combinations(range(scheme.m + 1), q + 1)
        for rest in product(perms, repeat=q)
    ]


def x_orbit_count(scheme: ColorScheme, q: int) -> int:
    """C(m+1, q+1) * (r!)^q, without enumerating."""
    return comb(scheme.m + 1, q + 1) * factorial(scheme.r) ** q


def phi_to_simplices(cell: PrismCell, scheme: ColorScheme) -> tuple[Simplex, ...]:
    """tau_i has vertex v_{perms_j(i), j} for each colour j in J."""
    return tuple(
        tuple(scheme.vertex(p[i] + 1, j) for j, p in zip(cell.J, cell.perms))
        for i in range(scheme.r)
    )


def simplices_to_phi(simplices, scheme: ColorScheme) -> PrismCell:
    """
    Inverse of phi_to_simplices; raises ValueError unless the simplices share
    a colour set and are pairwise disjoint.
    """
    if len(simplices) != scheme.r:
        raise ValueError(f"Expected {scheme.r} simplices, got {len(simplices)}")
    J = tuple(scheme.color(v) for v in simplices[0])
    rows: dict[int, list[int]] = {j: [] for j in J}
    for tau in simplices:
        if tuple(scheme.color(v) for v in tau) != J:
            raise ValueError(f"Simplices do not share the colour set {J}: {simplices}")
        for v in tau:
            rows[scheme.color(v)].append(scheme.row(v) - 1)
    perms = tuple(tuple(rows[j]) for j in J)
    if any(sorted(p) != list(range(scheme.r)) for p in perms):
        raise ValueError(f"Simplices are not pairwise disjoint: {simplices}")
    return PrismCell(J, perms)


def group_action_X(cell: PrismCell, pi: Perm) -> PrismCell:
    """Right action of pi on every colour's permutation."""
    return PrismCell(cell.J, tuple(compose(p, pi) for p in cell.perms))


def canonicalize_X(cell: PrismCell, k: int) -> tuple[PrismCell, int]:
    """Orbit rep (identity at min J) and twist (sign pi_{min J})^k."""
    g = cell.perms[0]
    rep = group_action_X(cell, invert(g))
    return rep, permutation_sign(g) ** (k % 2)


def x_boundary(cell: PrismCell) -> dict[PrismCell, int]:
    """Drop colour J[t] with sign (-1)^t."""
    if cell.dim < 1:
        raise ValueError(f"Boundary of a 0-cell is undefined: {cell}")
    return {
        PrismCell(cell.J[:t] + cell.J[t + 1:], cell.perms[:t] + cell.perms[t + 1:]): (-1) ** t
        for t in range(len(cell.J))
    }


# ═════════════════════════════════════════════════════════════════════════════
# Heights and prismatic maps
# ═════════════════════════════════════════════════════════════════════════════

def base_point(scheme: ColorScheme, j: int) -> tuple[Fraction, ...]:
    return tuple(Fraction(1) if t == j - 1 else Fraction(0) for t in range(scheme.m))


def prism_map(scheme: ColorScheme, heights: Heights) -> ExactAffineMap:
    """v_{i,j} -> (u_j, h(v_{i,j})) on sigma^N."""
    coords = {
        v: base_point(scheme, scheme.color(v)) + tuple(heights[v])
        for v in range(scheme.vertex_count)
    }
    return ExactAffineMap(scheme.d, coords)


def is_interior_height(h) -> bool:
    """Barycentric weights all positive: a point of the open k-simplex."""
    return all(x > 0 for x in h) and sum(h) < 1


def _draw_heights(scheme: ColorScheme, seed: int, nonce: int, grid: int) -> Heights:
    rng = np.random.default_rng([seed, nonce])
    weights = rng.integers(1, grid + 1, size=(scheme.vertex_count, scheme.k + 1))
    heights = {}
    for v in range(scheme.vertex_count):
        row = [int(w) for w in weights[v]]
        total = sum(row)
        heights[v] = tuple(Fraction(w, total) for w in row[1:])
    return heights


def sample_prismatic_heights(
    scheme: ColorScheme,
    seed: int,
    *,
    grid: int = HEIGHT_GRID,
    max_retries: int = MAX_RETRIES,
    top_reps: list[PrismCell] | None = None,
) -> Heights:
    """
    Seeded interior heights, generic on every top cell of X.

    Barycentric weights are integers in [1, grid], normalised; a draw whose
    prism map is degenerate on a top cell is replaced with the next nonce.
    """
    if seed < 0:
        raise InputError(f"Seed must be non-negative, got {seed}")
    if top_reps is None:
        top_reps = x_orbit_reps(scheme, scheme.m)
    tuples = [phi_to_simplices(rep, scheme) for rep in top_reps]
    for nonce in range(max_retries):
        heights = _draw_heights(scheme, seed, nonce, grid)
        try:
            check_general_position(prism_map(scheme, heights), tuples)
        except DegeneracyError as err:
            print(f"  Degenerate heights (attempt {nonce + 1}/{max_retries}): {err}")
            continue
        return heights
    raise RetryBudgetExceeded(f"No generic heights after {max_retries} attempts (grid={grid})")


def load_heights(path, scheme: ColorScheme) -> Heights:
    """{"r": r, "k": k, "heights": {"i,j": ["num/den", ...]}} with i 1-based."""
    data = load_json(path)
    if not isinstance(data, dict) or not {"r", "k", "heights"} <= data.keys():
        raise InputError(f"{path}: expected keys 'r', 'k' and 'heights'")
    if (data["r"], data["k"]) != (scheme.r, scheme.k):
        raise InputError(f"{path}: heights for r={data['r']}, k={data['k']}, expected r={scheme.r}, k={scheme.k}")
    if not isinstance(data["heights"], dict):
        raise InputError(f"{path}: 'heights' must map 'i,j' keys to points")
    heights: Heights = {}
    for key, value in data["heights"].items():
        try:
            i, j = (int(x) for x in key.split(","))
        except ValueError as err:
            raise InputError(f"{path}: bad vertex key {key!r}") from err
        if not (1 <= i <= scheme.r and 0 <= j <= scheme.m):
            raise InputError(f"{path}: vertex {key} outside the scheme")
        if not isinstance(value, list):
            raise InputError(f"{path}: height of {key} must be a list of rationals")
        h = tuple(parse_rational(x) for x in value)
        if len(h) != scheme.k or not is_interior_height(h):
            raise InputError(f"{path}: height of {key} is not an interior point of sigma^{scheme.k}")
        heights[scheme.vertex(i, j)] = h
    if len(heights) != scheme.vertex_count:
        raise InputError(f"{path}: {len(heights)} heights given, expected {scheme.vertex_count}")
    return heights


def save_heights(scheme: ColorScheme, heights: Heights, path) -> Path:
    payload = {
        "r": scheme.r,
        "k": scheme.k,
        "heights": {
            f"{scheme.row(v)},{scheme.color(v)}": format_point(h) for v, h in sorted(heights.items())
        },
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


@dataclass
class PrismaticMap:
    """
    PL map on the colourful complex: vertex images plus optional bends.

    A bend sends the barycentre of a top colourful simplex to the given
    point; that simplex is then mapped by the cone over its boundary.
    """
    scheme: ColorScheme
    images: dict[int, tuple[Fraction, ...]]
    bends: dict[Simplex, tuple[Fraction, ...]] = field(default_factory=dict)

    @classmethod
    def from_heights(cls, scheme: ColorScheme, heights: Heights) -> "PrismaticMap":
        return cls(scheme, {
            v: base_point(scheme, scheme.color(v)) + tuple(heights[v]) for v in range(scheme.vertex_count)
        })

    def with_bend(self, simplex: Simplex, point) -> "PrismaticMap":
        simplex = tuple(simplex)
        if len(simplex) != self.scheme.m + 1 or not is_colorful(simplex, self.scheme):
            raise InputError(f"Bends apply to top colourful simplices, got {simplex}")
        bends = dict(self.bends)
        bends[simplex] = as_point(point)
        return PrismaticMap(self.scheme, dict(self.images), bends)

    def pieces(self, simplex: Simplex) -> list[AffineSimplex]:
        """Affine pieces of the image of one colourful simplex."""
        points = [self.images[v] for v in simplex]
        if simplex not in self.bends:
            return [AffineSimplex(tuple(points))]
        apex = self.bends[simplex]
        return [AffineSimplex((apex,) + tuple(points[:t] + points[t + 1:])) for t in range(len(points))]


def _split(scheme: ColorScheme, point) -> tuple[tuple, tuple]:
    return tuple(point[:scheme.m]), tuple(point[scheme.m:])


def _over_open_face(scheme: ColorScheme, point, J) -> bool:
    """Base part of `point` lies in the open face spanned by u_j (j in J)."""
    base, height = _split(scheme, point)
    bary = [Fraction(1) - sum(base)] + list(base)
    inside = all((bary[j] > 0) == (j in J) and bary[j] >= 0 for j in range(scheme.m + 1))
    return inside and is_interior_height(height)


def _pr3_tuples(scheme: ColorScheme, q: int, s: int, rng: np.random.Generator):
    """Up to PR3_SAMPLE distinct tuples of s disjoint colourful q-simplices over one face."""
    total = comb(scheme.m + 1, q + 1) * perm(scheme.r, s) ** (q + 1) // factorial(s)
    budget = min(PR3_SAMPLE, total)
    seen = set()
    attempts = 0
    while len(seen) < budget and attempts < 20 * PR3_SAMPLE:
        attempts += 1
        J = tuple(sorted(int(x) for x in rng.choice(scheme.m + 1, size=q + 1, replace=False)))
        rows = [[int(x) for x in rng.choice(scheme.r, size=s, replace=False)] for _ in J]
        taus = tuple(tuple(scheme.vertex(rows[t][i] + 1, j) for t, j in enumerate(J)) for i in range(s))
        seen.add(tuple(sorted(taus)))
    return sorted(seen)


def check_prismatic(pmap: PrismaticMap, *, seed: int = 0) -> dict:
    """
    Report on (PR1), (PR2), (PR3) and (REG) for a map on the colourful complex.

    PR3 is checked on sampled tuples at the level of affine hulls: the hulls
    of s disjoint colourful q-simplices over one face meet in dimension
    q - (s-1)k, or not at all when that is negative.
    """
    scheme = pmap.scheme
    C = build_colorful_complex(scheme)
    failures: list[str] = []

    pr1 = True
    for face in sorted(C.faces):
        J = {scheme.color(v) for v in face}
        vertex_ok = all(_over_open_face(scheme, pmap.images[v], {scheme.color(v)}) for v in face)
        bend_ok = face not in pmap.bends or _over_open_face(scheme, pmap.bends[face], J)
        if not (vertex_ok and bend_ok):
            pr1 = False
            failures.append(f"PR1: image of {face} leaves the prism over its base face")

    pr2 = True
    for face in sorted(C.faces):
        if len(face) < 2:
            continue
        for piece in pmap.pieces(face):
            if rank(piece.edge_matrix()) != piece.dim:
                pr2 = False
                failures.append(f"PR2: {face} is not mapped injectively")
                break

    pr3 = True
    rng = np.random.default_rng(seed)
    for q in range(scheme.m + 1):
        for s in range(2, scheme.r + 1):
            expected = q - (s - 1) * scheme.k
            for taus in _pr3_tuples(scheme, q, s, rng):
                for combo in product(*[pmap.pieces(tau) for tau in taus]):
                    got = hull_intersection_dim(list(combo))
                    if got != max(expected, -1):
                        pr3 = False
                        failures.append(f"PR3: {taus} meet in dimension {got}, expected {max(expected, -1)}")
                        break

    reg = pr1 and all(
        tuple(pmap.images[v][:scheme.m]) == base_point(scheme, scheme.color(v))
        for v in range(scheme.vertex_count)
    ) and all(
        _split(scheme, point)[0] == _barycentre_base(scheme, face) for face, point in pmap.bends.items()
    )
    return {"PR1": pr1, "PR2": pr2, "PR3": pr3, "REG": reg, "failures": failures[:20]}


def _barycentre_base(scheme: ColorScheme, face: Simplex) -> tuple[Fraction, ...]:
    points = [base_point(scheme, scheme.color(v)) for v in face]
    return tuple(sum(p[t] for p in points) / len(points) for t in range(scheme.m))


# ═════════════════════════════════════════════════════════════════════════════
# Signs and the prismatic cocycle
# ═════════════════════════════════════════════════════════════════════════════

def epsilon_pris(r: int, k: int) -> int:
    """epsilon_{r,k} * (-1)^(k^2 (r-1) C(r+1,2) + k(r-1))."""
    exponent = k * k * (r - 1) * comb(r + 1, 2) + k * (r - 1)
    return epsilon_rk(r, k) * (-1) ** exponent


def _x_cell_value(rep: PrismCell, scheme: ColorScheme, f: ExactAffineMap) -> int:
    simplices = [f.image(tau) for tau in phi_to_simplices(rep, scheme)]
    if intersection_point(simplices) is None:
        return 0
    return epsilon_pris(scheme.r, scheme.k) * r_fold_sign(simplices)


def prismatic_cocycle(
    scheme: ColorScheme,
    heights: Heights,
    *,
    reps: list[PrismCell] | None = None,
    workers: int = 1,
) -> EquivariantCochain:
    """phi_f(tau) = epsilon_pris * f(tau_1) . ... . f(tau_r) on top-cell orbits of X."""
    f = prism_map(scheme, heights)
    if reps is None:
        reps = x_orbit_reps(scheme, scheme.m)
    evaluate = partial(_x_cell_value, scheme=scheme, f=f)
    if workers > 1 and len(reps) > 1:
        with Pool(workers) as p:
            values = p.map(evaluate, reps)
    else:
        values = [evaluate(rep) for rep in reps]
    return EquivariantCochain(scheme.m, scheme.k, dict(zip(reps, values)), partial(canonicalize_X, k=scheme.k))


def dual_sign(scheme: ColorScheme, heights: Heights, cell: PrismCell) -> int:
    """
    Sign of the height-function chain against the thin diagonal of (R^k)^r.

    Rows of block i are [A_i | I_k], where A_i has columns h(tau_i, j) - h(tau_i, 0).
    """
    if cell.dim != scheme.m:
        raise ValueError(f"Dual sign needs a top cell, got dimension {cell.dim}")
    m, k = scheme.m, scheme.k
    B = zeros(scheme.r * k, m + k)
    for i, tau in enumerate(phi_to_simplices(cell, scheme)):
        h0 = heights[tau[0]]
        for j in range(1, m + 1):
            hj = heights[tau[j]]
            for t in range(k):
                B[i * k + t, j - 1] = hj[t] - h0[t]
        for t in range(k):
            B[i * k + t, m + t] = Fraction(1)
    s = det_sign(B)
    if s == 0:
        raise DegeneracyError(f"height chain of {describe_x_cell(cell)} is not transverse to the diagonal")
    return s


def sign_relation(scheme: ColorScheme, heights: Heights, reps: list[PrismCell] | None = None) -> list[dict]:
    """Per populated top cell: epsilon_pris * r-fold sign against the dual sign."""
    f = prism_map(scheme, heights)
    eps = epsilon_pris(scheme.r, scheme.k)
    rows = []
    for rep in reps if reps is not None else x_orbit_reps(scheme, scheme.m):
        simplices = [f.image(tau) for tau in phi_to_simplices(rep, scheme)]
        if intersection_point(simplices) is None:
            continue
        direct = eps * r_fold_sign(simplices)
        dual = dual_sign(scheme, heights, rep)
        rows.append({"cell": describe_x_cell(rep), "direct": direct, "dual": dual, "agree": direct == dual})
    return rows


# ═════════════════════════════════════════════════════════════════════════════
# Obstruction
# ═════════════════════════════════════════════════════════════════════════════

def _incident_x_reps(eta: PrismCell, scheme: ColorScheme) -> set[PrismCell]:
    found = set()
    for j in range(scheme.m + 1):
        if j in eta.J:
            continue
        pos = sum(1 for x in eta.J if x < j)
        for p in permutations(range(scheme.r)):
            cell = PrismCell(eta.J[:pos] + (j,) + eta.J[pos:], eta.perms[:pos] + (p,) + eta.perms[pos:])
            found.add(canonicalize_X(cell, scheme.k)[0])
    return found


def x_elementary_coboundary(eta: PrismCell, scheme: ColorScheme) -> EquivariantCochain:
    canonical = partial(canonicalize_X, k=scheme.k)
    rep, twist = canonical(eta)
    psi = EquivariantCochain(eta.dim, scheme.k, {rep: twist}, canonical)
    return coboundary(psi, sorted(_incident_x_reps(eta, scheme)), boundary=x_boundary)


def x_coboundary_matrix(
    scheme: ColorScheme,
    top_reps: list[PrismCell],
    codim_reps: list[PrismCell],
) -> IntMatrix:
    """Column j is the coboundary of codim_reps[j], read against top_reps."""
    row_of = {rep: i for i, rep in enumerate(top_reps)}
    entries = {}
    for j, eta in enumerate(codim_reps):
        for rep, value in x_elementary_coboundary(eta, scheme).values.items():
            entries[(row_of[rep], j)] = value
    return IntMatrix(len(top_reps), len(codim_reps), entries)


@dataclass
class PrismaticResult:
    scheme: ColorScheme
    heights: Heights
    top_reps: list[PrismCell]
    codim_reps: list[PrismCell]
    matrix: IntMatrix
    vector: list[int]
    certificate: SNFCertificate
    result: SolveResult

    @property
    def verdict(self) -> str:
        return "NonVanishing" if isinstance(self.result, Obstructed) else "Vanishes"


def check_caps(scheme: ColorScheme, *, max_orbits: int = MAX_TOP_ORBITS, max_matrix_dim: int = MAX_MATRIX_DIM) -> None:
    """Refuse schemes whose orbit counts exceed the caps, before enumerating."""
    top = x_orbit_count(scheme, scheme.m)
    codim = x_orbit_count(scheme, scheme.m - 1) if scheme.m >= 1 else 0
    if top > max_orbits:
        raise ResourceCapError(f"X has {top:,} top-cell orbits (cap {max_orbits:,})")
    if max(top, codim) > max_matrix_dim:
        raise ResourceCapError(f"Coboundary matrix would be {top:,} x {codim:,} (cap {max_matrix_dim:,})")


def prismatic_obstruction(
    scheme: ColorScheme,
    seed: int,
    *,
    heights: Heights | None = None,
    workers: int = 1,
    max_orbits: int = MAX_TOP_ORBITS,
    max_matrix_dim: int = MAX_MATRIX_DIM,
) -> PrismaticResult:
    """
    Obstruction class of the prismatic cocycle for one choice of heights.

    Sampled heights are used unless heights are given; the class does not
    depend on that choice.
    """
    check_caps(scheme, max_orbits=max_orbits, max_matrix_dim=max_matrix_dim)
    top_reps = x_orbit_reps(scheme, scheme.m)
    codim_reps = x_orbit_reps(scheme, scheme.m - 1)
    if heights is None:
        heights = sample_prismatic_heights(scheme, seed, top_reps=top_reps)
    phi = prismatic_cocycle(scheme, heights, reps=top_reps, workers=workers)
    A = x_coboundary_matrix(scheme, top_reps, codim_reps)
    v = to_vector(phi, top_reps).values
    cert = smith_normal_form(A)
    return PrismaticResult(scheme, heights, top_reps, codim_reps, A, v, cert, solve_integer(A, v, cert))
