"""
Finite abstract simplicial complexes.

A simplex is a strictly increasing tuple of vertex ids; its reference
orientation is the increasing vertex order, and any other orientation is
carried as a +-1 sign. Formal signed sums are dicts simplex -> coefficient
with zero coefficients dropped.

Complex files are JSON objects:

    {"vertex_count": n, "maximal_simplices": [[ids...], ...]}
"""

import json
from itertools import combinations
from pathlib import Path
from typing import NamedTuple

from vankampen.utils import InputError, digest, load_json

Simplex = tuple[int, ...]


class OrientedSimplex(NamedTuple):
    simplex: Simplex
    sign: int = 1

    @property
    def dim(self) -> int:
        return len(self.simplex) - 1


class SimplicialComplex:
    """Downward-closed face set on vertices 0..vertex_count-1 (no empty face)."""

    def __init__(self, vertex_count: int, faces):
        self.vertex_count = vertex_count
        self.faces = frozenset(faces)
        by_dim: dict[int, list[Simplex]] = {}
        for face in self.faces:
            by_dim.setdefault(len(face) - 1, []).append(face)
        self._by_dim = {q: sorted(fs) for q, fs in by_dim.items()}
        self.dim = max(self._by_dim, default=-1)

    def __contains__(self, face) -> bool:
        return tuple(face) in self.faces

    def __len__(self) -> int:
        return len(self.faces)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SimplicialComplex)
            and self.vertex_count == other.vertex_count
            and self.faces == other.faces
        )

    def __hash__(self) -> int:
        return hash((self.vertex_count, self.faces))

    def __repr__(self) -> str:
        counts = ", ".join(f"{len(self._by_dim[q])}" for q in sorted(self._by_dim))
        return f"SimplicialComplex(vertices={self.vertex_count}, f=({counts}))"

    def faces_of_dim(self, q: int) -> list[Simplex]:
        return list(self._by_dim.get(q, []))

    def maximal_faces(self) -> list[Simplex]:
        maximal = []
        for face in sorted(self.faces):
            if not any(
                len(other) == len(face) + 1 and set(face) < set(other)
                for other in self._by_dim.get(len(face), [])
            ):
                maximal.append(face)
        return maximal

    def to_json(self) -> dict:
        return {
            "vertex_count": self.vertex_count,
            "maximal_simplices": [list(f) for f in self.maximal_faces()],
        }


# ═════════════════════════════════════════════════════════════════════════════
# Construction
# ═════════════════════════════════════════════════════════════════════════════

def _check_simplex(vertex_count: int, vertices) -> Simplex:
    ids = list(vertices)
    if not ids:
        raise InputError("Empty simplex in maximal simplex list")
    for v in ids:
        if isinstance(v, bool) or not isinstance(v, int):
            raise InputError(f"Vertex id must be an integer, got {v!r}")
        if v < 0 or v >= vertex_count:
            raise InputError(f"Vertex id {v} out of range 0..{vertex_count - 1}")
    if len(set(ids)) != len(ids):
        raise InputError(f"Duplicate vertex in simplex {ids}")
    return tuple(sorted(ids))


def from_maximal(vertex_count: int, maximal) -> SimplicialComplex:
    """Downward closure of the listed simplices; every vertex id is a face."""
    if isinstance(vertex_count, bool) or not isinstance(vertex_count, int) or vertex_count < 0:
        raise InputError(f"vertex_count must be a non-negative integer, got {vertex_count!r}")
    faces: set[Simplex] = {(v,) for v in range(vertex_count)}
    for simplex in maximal:
        top = _check_simplex(vertex_count, simplex)
        if top in faces:
            continue
        for size in range(1, len(top) + 1):
            faces.update(combinations(top, size))
    return SimplicialComplex(vertex_count, faces)


def full_simplex(n: int) -> SimplicialComplex:
    """sigma^n on vertices 0..n."""
    return from_maximal(n + 1, [list(range(n + 1))])


def skeleton(K: SimplicialComplex, q: int) -> SimplicialComplex:
    """Faces of dimension at most q."""
    return SimplicialComplex(K.vertex_count, [f for f in K.faces if len(f) <= q + 1])


def faces_of_dim(K: SimplicialComplex, q: int) -> list[Simplex]:
    """All q-faces in lexicographic order."""
    if q < 0:
        raise ValueError(f"Face dimension must be non-negative, got {q}")
    return K.faces_of_dim(q)


def load_complex(path) -> SimplicialComplex:
    """
    Read {"vertex_count": n, "maximal_simplices": [[...], ...]} and close it
    under taking faces. Bad shapes and out-of-range ids raise InputError.
    """
    data = load_json(path)
    if not isinstance(data, dict) or "vertex_count" not in data or "maximal_simplices" not in data:
        raise InputError(f"{path}: expected keys 'vertex_count' and 'maximal_simplices'")
    maximal = data["maximal_simplices"]
    if not isinstance(maximal, list) or not all(isinstance(s, list) for s in maximal):
        raise InputError(f"{path}: 'maximal_simplices' must be a list of id lists")
    return from_maximal(data["vertex_count"], maximal)


def save_complex(K: SimplicialComplex, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(K.to_json()) + "\n", encoding="utf-8")
    return path


def complex_digest(K: SimplicialComplex) -> str:
    """sha256 of the canonical maximal-simplex form, as recorded in reports."""
    return digest(K.to_json())


# ═════════════════════════════════════════════════════════════════════════════
# Boundaries
# ═════════════════════════════════════════════════════════════════════════════

def combinatorial_boundary(s: OrientedSimplex) -> dict[Simplex, int]:
    """Alternating sum of facets: facet i (vertex i dropped) carries (-1)^i."""
    if s.dim < 1:
        raise ValueError(f"Boundary of a vertex is undefined: {s.simplex}")
    out = {}
    for i in range(len(s.simplex)):
        facet = s.simplex[:i] + s.simplex[i + 1:]
        out[facet] = s.sign * (-1) ** i
    return out


def boundary_of_chain(chain: dict[Simplex, int]) -> dict[Simplex, int]:
    """Boundary of a simplicial chain, keyed by sorted facets."""
    out: dict[Simplex, int] = {}
    for simplex, coeff in chain.items():
        for facet, sign in combinatorial_boundary(OrientedSimplex(simplex)).items():
            out[facet] = out.get(facet, 0) + coeff * sign
    return {f: c for f, c in out.items() if c != 0}
