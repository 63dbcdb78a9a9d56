"""
Equivariant cochains on the deleted product.

A cochain stores one integer per orbit representative; its value on any
other cell is read through canonicalisation, value(c) = twist * value(rep).
The intersection-number cocycle of a generic map, the elementary
coboundaries and algebraic finger moves all live here.
"""

from dataclasses import dataclass
from functools import partial
from multiprocessing import Pool
from typing import Callable

import pandas as pd

from vankampen.complex import SimplicialComplex
from vankampen.delprod import Cell, canonicalize, cell_boundary, cell_dim, orbit_reps
from vankampen.exactgeo import (
    ExactAffineMap,
    epsilon,
    hulls_meet,
    intersection_point,
    r_fold_sign,
)
from vankampen.snf import IntMatrix
from vankampen.utils import DegeneracyError


class EquivariantCochain:
    """Sparse integer cochain of a fixed degree; absent reps are 0."""

    def __init__(
        self,
        degree: int,
        d: int,
        values: dict[Cell, int] | None = None,
        canonical: Callable[[Cell], tuple[Cell, int]] | None = None,
    ):
        self.degree = degree
        self.d = d
        self.values = {rep: v for rep, v in (values or {}).items() if v}
        self._canonical = canonical

    def canonical(self, cell: Cell) -> tuple[Cell, int]:
        if self._canonical is not None:
            return self._canonical(cell)
        return canonicalize(cell, self.d)

    def value(self, cell: Cell) -> int:
        rep, twist = self.canonical(cell)
        return twist * self.values.get(rep, 0)

    def support(self) -> list[Cell]:
        return sorted(self.values)

    def _check_compatible(self, other: "EquivariantCochain") -> None:
        if (self.degree, self.d) != (other.degree, other.d):
            raise ValueError(
                f"Cochains differ: degree/d {(self.degree, self.d)} vs {(other.degree, other.d)}"
            )

    def __add__(self, other: "EquivariantCochain") -> "EquivariantCochain":
        self._check_compatible(other)
        values = dict(self.values)
        for rep, v in other.values.items():
            values[rep] = values.get(rep, 0) + v
        return EquivariantCochain(self.degree, self.d, values, self._canonical)

    def __sub__(self, other: "EquivariantCochain") -> "EquivariantCochain":
        return self + other.scaled(-1)

    def scaled(self, factor: int) -> "EquivariantCochain":
        return EquivariantCochain(
            self.degree, self.d, {rep: factor * v for rep, v in self.values.items()}, self._canonical
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, EquivariantCochain)
            and (self.degree, self.d) == (other.degree, other.d)
            and self.values == other.values
        )

    def __repr__(self) -> str:
        return f"EquivariantCochain(degree={self.degree}, d={self.d}, support={len(self.values)})"


@dataclass
class CocycleVector:
    reps: list[Cell]
    values: list[int]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "rep": [" x ".join(str(list(face)) for face in rep) for rep in self.reps],
            "value": self.values,
        })


# ═════════════════════════════════════════════════════════════════════════════
# Intersection-number cocycle
# ═════════════════════════════════════════════════════════════════════════════

def cell_value(rep: Cell, f: ExactAffineMap) -> int:
    """epsilon times the signed count of common points of the image simplices."""
    simplices = [f.image(face) for face in rep]
    dims = [s.dim for s in simplices]
    if max(dims) > f.d:
        if hulls_meet(simplices):
            raise DegeneracyError(f"affine hulls of {rep} meet")
        return 0
    if intersection_point(simplices) is None:
        return 0
    return epsilon(f.d, dims) * r_fold_sign(simplices)


def intersection_cocycle(
    K: SimplicialComplex,
    r: int,
    d: int,
    f: ExactAffineMap,
    *,
    reps: list[Cell] | None = None,
    workers: int = 1,
) -> EquivariantCochain:
    """phi_f on every top-cell orbit (degree d(r-1))."""
    if f.d != d:
        raise ValueError(f"Map targets R^{f.d}, expected R^{d}")
    n = d * (r - 1)
    if reps is None:
        reps = orbit_reps(K, r, n)
    evaluate = partial(cell_value, f=f)
    if workers > 1 and len(reps) > 1:
        with Pool(workers) as p:
            values = p.map(evaluate, reps)
    else:
        values = [evaluate(rep) for rep in reps]
    return EquivariantCochain(n, d, dict(zip(reps, values)))


# ═════════════════════════════════════════════════════════════════════════════
# Coboundaries
# ═════════════════════════════════════════════════════════════════════════════

def indicator(eta: Cell, d: int) -> EquivariantCochain:
    """Equivariant cochain with value 1 on eta, 0 off its orbit."""
    rep, twist = canonicalize(eta, d)
    return EquivariantCochain(cell_dim(eta), d, {rep: twist})


def _incident_reps(eta: Cell, K: SimplicialComplex, d: int) -> set[Cell]:
    """Orbit reps of cells having eta as a facet factor-wise."""
    used = {v for face in eta for v in face}
    found = set()
    for i, face in enumerate(eta):
        for v in range(K.vertex_count):
            if v in used:
                continue
            bigger = tuple(sorted(face + (v,)))
            if bigger in K.faces:
                found.add(canonicalize(eta[:i] + (bigger,) + eta[i + 1:], d)[0])
    return found


def coboundary(psi: EquivariantCochain, top_reps, boundary=cell_boundary) -> EquivariantCochain:
    """(delta psi)(sigma) = psi(boundary sigma) on the given reps."""
    values = {}
    for rep in top_reps:
        total = sum(sign * psi.value(term) for term, sign in boundary(rep).items())
        if total:
            values[rep] = total
    return EquivariantCochain(psi.degree + 1, psi.d, values, psi._canonical)


def elementary_coboundary(eta: Cell, K: SimplicialComplex, r: int, d: int) -> EquivariantCochain:
    """Coboundary of the indicator of eta's orbit, on the top cells incident to it."""
    if len(eta) != r:
        raise ValueError(f"Cell {eta} has {len(eta)} factors, expected {r}")
    return coboundary(indicator(eta, d), sorted(_incident_reps(eta, K, d)))


def coboundary_matrix(
    K: SimplicialComplex,
    r: int,
    d: int,
    top_reps: list[Cell],
    codim_reps: list[Cell],
) -> IntMatrix:
    """Column j is elementary_coboundary(codim_reps[j]) read against top_reps."""
    row_of = {rep: i for i, rep in enumerate(top_reps)}
    entries = {}
    for j, eta in enumerate(codim_reps):
        for rep, value in elementary_coboundary(eta, K, r, d).values.items():
            if rep not in row_of:
                raise ValueError(f"Coboundary of {eta} reaches {rep}, which is not a listed top rep")
            entries[(row_of[rep], j)] = value
    return IntMatrix(len(top_reps), len(codim_reps), entries)


def finger_move(
    phi: EquivariantCochain,
    eta: Cell,
    eps: int,
    K: SimplicialComplex,
    r: int,
) -> EquivariantCochain:
    """phi + eps * delta(indicator of eta's orbit)."""
    if eps not in (1, -1):
        raise ValueError(f"Finger move sign must be +-1, got {eps}")
    if cell_dim(eta) + 1 != phi.degree:
        raise ValueError(f"Cell {eta} has dimension {cell_dim(eta)}, expected {phi.degree - 1}")
    return phi + elementary_coboundary(eta, K, r, phi.d).scaled(eps)


def to_vector(phi: EquivariantCochain, top_reps: list[Cell]) -> CocycleVector:
    """Values of phi in the order of top_reps; absent reps read as 0."""
    return CocycleVector(list(top_reps), [phi.values.get(rep, 0) for rep in top_reps])
