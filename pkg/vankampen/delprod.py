"""
Cells of the r-fold deleted product K^r_Delta and the S_r action on them.

A cell is an ordered tuple of r pairwise vertex-disjoint simplices, oriented
by the product of the factors' reference orientations in factor order.
Permutations are 0-based tuples: perm[i] is the (0-based) image of i, and
permuting a cell by perm puts factor perm[i] at position i.

The orbit representative of a cell is its lexicographically smallest
reordering, i.e. the factors sorted; since factors are disjoint this is the
ordering by smallest vertex.
"""

from itertools import combinations, permutations
from math import comb

from vankampen.complex import Simplex, SimplicialComplex

Cell = tuple[Simplex, ...]
Perm = tuple[int, ...]


# ═════════════════════════════════════════════════════════════════════════════
# Permutations
# ═════════════════════════════════════════════════════════════════════════════

def inversions(perm: Perm) -> list[tuple[int, int]]:
    """Pairs i < j with perm[i] > perm[j]."""
    n = len(perm)
    return [(i, j) for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j]]


def permutation_sign(perm: Perm) -> int:
    return -1 if len(inversions(perm)) % 2 else 1


def compose(p: Perm, q: Perm) -> Perm:
    """p after q."""
    return tuple(p[q[i]] for i in range(len(q)))


def invert(p: Perm) -> Perm:
    """Inverse permutation: invert(p)[p[i]] == i."""
    inv = [0] * len(p)
    for i, image in enumerate(p):
        inv[image] = i
    return tuple(inv)


def identity(r: int) -> Perm:
    """The identity of S_r."""
    return tuple(range(r))


def check_perm(perm: Perm, r: int) -> Perm:
    perm = tuple(perm)
    if sorted(perm) != list(range(r)):
        raise ValueError(f"Not a permutation of {r} elements: {perm}")
    return perm


# ═════════════════════════════════════════════════════════════════════════════
# Cells and the group action
# ═════════════════════════════════════════════════════════════════════════════

def cell_dims(cell: Cell) -> list[int]:
    return [len(face) - 1 for face in cell]


def cell_dim(cell: Cell) -> int:
    return sum(cell_dims(cell))


def is_cell(cell: Cell) -> bool:
    """At least two pairwise disjoint faces."""
    seen: set[int] = set()
    for face in cell:
        if seen.intersection(face):
            return False
        seen.update(face)
    return len(cell) >= 2


def permute(cell: Cell, perm: Perm) -> tuple[Cell, int]:
    """
    Reorder factors to (cell[perm[0]], ..., cell[perm[r-1]]).

    The sign is the orientation change of the product cell: each pair of
    factors whose relative order flips contributes (-1)^(m_a * m_b).
    """
    perm = check_perm(perm, len(cell))
    dims = cell_dims(cell)
    exponent = sum(dims[perm[i]] * dims[perm[j]] for i, j in inversions(perm))
    return tuple(cell[perm[i]] for i in range(len(cell))), (-1) ** exponent


def coefficient_action(perm: Perm, d: int) -> int:
    """(sign perm)^d."""
    return permutation_sign(perm) ** (d % 2)


def canonicalize(cell: Cell, d: int) -> tuple[Cell, int]:
    """Orbit representative and twist with value(cell) = twist * value(rep)."""
    perm = tuple(sorted(range(len(cell)), key=lambda i: cell[i]))
    rep, reorder_sign = permute(cell, perm)
    return rep, reorder_sign * coefficient_action(perm, d)


def cell_boundary(cell: Cell) -> dict[Cell, int]:
    """Leibniz boundary: factor i contributes (-1)^(m_1+...+m_{i-1}) times its facets."""
    if cell_dim(cell) < 1:
        raise ValueError(f"Boundary of a 0-cell is undefined: {cell}")
    out: dict[Cell, int] = {}
    offset = 0
    for i, face in enumerate(cell):
        m = len(face) - 1
        if m >= 1:
            for t in range(len(face)):
                facet = face[:t] + face[t + 1:]
                term = cell[:i] + (facet,) + cell[i + 1:]
                out[term] = out.get(term, 0) + (-1) ** (offset + t)
        offset += m
    return out


def boundary_of_cells(chain: dict[Cell, int]) -> dict[Cell, int]:
    """Boundary of a chain of ordered cells; zero coefficients are dropped."""
    out: dict[Cell, int] = {}
    for cell, coeff in chain.items():
        for term, sign in cell_boundary(cell).items():
            out[term] = out.get(term, 0) + coeff * sign
    return {c: v for c, v in out.items() if v != 0}


# ═════════════════════════════════════════════════════════════════════════════
# Enumeration
# ═════════════════════════════════════════════════════════════════════════════

def _mask(face: Simplex) -> int:
    bits = 0
    for v in face:
        bits |= 1 << v
    return bits


def _candidates(K: SimplicialComplex, faces_q: list[Simplex], used: int, lo: int, q: int):
    """q-faces avoiding `used` whose smallest vertex exceeds lo, in lex order."""
    avail = [v for v in range(lo + 1, K.vertex_count) if not (used >> v) & 1]
    if comb(len(avail), q + 1) <= len(faces_q):
        for combo in combinations(avail, q + 1):
            if combo in K.faces:
                yield combo
    else:
        for face in faces_q:
            if face[0] > lo and not (_mask(face) & used):
                yield face


def iter_orbit_reps(K: SimplicialComplex, r: int, dim: int):
    """Yield each orbit representative of dimension `dim` exactly once."""
    if r < 2:
        raise ValueError(f"r must be at least 2, got {r}")
    if dim < 0 or K.dim < 0:
        return
    top = K.dim
    by_dim = {q: K.faces_of_dim(q) for q in range(top + 1)}

    def extend(prefix: Cell, used: int, remaining: int, slots: int):
        lo = prefix[-1][0] if prefix else -1
        qs = [remaining] if slots == 1 else range(min(top, remaining) + 1)
        for q in qs:
            rest = remaining - q
            if q > top or rest > (slots - 1) * top:
                continue
            for face in _candidates(K, by_dim[q], used, lo, q):
                if slots == 1:
                    yield prefix + (face,)
                else:
                    yield from extend(prefix + (face,), used | _mask(face), rest, slots - 1)

    yield from extend((), 0, dim, r)


def orbit_reps(K: SimplicialComplex, r: int, dim: int) -> list[Cell]:
    """
    Orbit representatives of dimension `dim`, sorted.

    A representative lists its faces by increasing smallest vertex, so the
    S_r orbit of every cell of K^r_Delta contains exactly one of them.
    """
    return sorted(iter_orbit_reps(K, r, dim))


def enumerate_cells(K: SimplicialComplex, r: int, dim: int) -> list[Cell]:
    """Every ordered r-tuple of pairwise disjoint faces with dimension sum `dim`."""
    cells = []
    for rep in iter_orbit_reps(K, r, dim):
        for perm in permutations(range(r)):
            cells.append(permute(rep, perm)[0])
    return sorted(cells)


def has_cells(K: SimplicialComplex, r: int, dim: int) -> bool:
    """True when K^r_Delta has a cell of dimension `dim`."""
    return next(iter_orbit_reps(K, r, dim), None) is not None


def deleted_product_dim(K: SimplicialComplex, r: int) -> int:
    """dim K^r_Delta, or -1 when K has no r pairwise disjoint faces."""
    bound = min(r * K.dim, K.vertex_count - r)
    for dim in range(bound, -1, -1):
        if has_cells(K, r, dim):
            return dim
    return -1
