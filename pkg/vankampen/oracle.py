"""
Brute-force r-fold Tverberg points of an affine map.

Every unordered r-tuple of pairwise disjoint faces with dimension sum
d(r-1) is solved exactly; a hit is reported once, on the tuple with its
factors sorted, with the sign from the unravelled definition. Tuples are
independent of the cocycle code path, so the two cross-check each other.
"""

from functools import partial
from fractions import Fraction
from multiprocessing import Pool
from typing import NamedTuple

import numpy as np
import pandas as pd

from vankampen.cocycle import EquivariantCochain
from vankampen.complex import SimplicialComplex, full_simplex
from vankampen.delprod import Cell, iter_orbit_reps, orbit_reps
from vankampen.exactgeo import (
    ExactAffineMap,
    Point,
    check_general_position,
    epsilon,
    hulls_meet,
    intersection_point,
    sign_unraveled,
)
from vankampen.utils import (
    MAX_RETRIES,
    MAX_TUPLES,
    DegeneracyError,
    ResourceCapError,
    RetryBudgetExceeded,
    format_point,
)


class TverbergHit(NamedTuple):
    faces: Cell
    point: Point
    type: tuple[int, ...]
    sign: int


def type_label(dims) -> str:
    """Dimension type as a sorted label, e.g. {2,1,1}."""
    return "{" + ",".join(str(m) for m in sorted(dims, reverse=True)) + "}"


def _hit_at(faces: Cell, f: ExactAffineMap) -> TverbergHit | None:
    simplices = [f.image(face) for face in faces]
    dims = tuple(s.dim for s in simplices)
    if max(dims) > f.d:
        if hulls_meet(simplices):
            raise DegeneracyError(f"affine hulls of {faces} meet")
        return None
    crossing = intersection_point(simplices)
    if crossing is None:
        return None
    return TverbergHit(faces, crossing.point, tuple(sorted(dims, reverse=True)), sign_unraveled(simplices))


def candidate_tuples(
    K: SimplicialComplex,
    r: int,
    d: int,
    *,
    colors: dict[int, int] | None = None,
    max_tuples: int = MAX_TUPLES,
) -> list[Cell]:
    """
    Sorted tuples to test; with `colors`, tuples spanning different colour sets are dropped.

    The colour pruning is exact for maps whose images lie over the open base
    face of each simplex's colour set, since open faces are disjoint.
    """
    kept = []
    for examined, faces in enumerate(iter_orbit_reps(K, r, d * (r - 1)), start=1):
        if examined > max_tuples:
            raise ResourceCapError(f"More than {max_tuples:,} candidate tuples")
        if colors is not None:
            color_sets = {frozenset(colors[v] for v in face) for face in faces}
            if len(color_sets) > 1:
                continue
        kept.append(faces)
    return kept


def enumerate_tverberg(
    K: SimplicialComplex,
    r: int,
    d: int,
    f: ExactAffineMap,
    *,
    colors: dict[int, int] | None = None,
    max_tuples: int = MAX_TUPLES,
    workers: int = 1,
) -> list[TverbergHit]:
    """
    Brute-force scan for r-fold Tverberg points of f.

    Every candidate tuple of pairwise disjoint faces with dimension sum d(r-1)
    is intersected exactly. A hit carries the common point and its dimension
    type; its sign comes from sign_unraveled, independent of r_fold_sign.
    """
    if f.d != d:
        raise ValueError(f"Map targets R^{f.d}, expected R^{d}")
    tuples = candidate_tuples(K, r, d, colors=colors, max_tuples=max_tuples)
    check = partial(_hit_at, f=f)
    if workers > 1 and len(tuples) > 1:
        with Pool(workers) as p:
            results = p.map(check, tuples)
    else:
        results = [check(faces) for faces in tuples]
    hits = [hit for hit in results if hit is not None]
    print(f"  Checked {len(tuples):,} tuples, {len(hits):,} Tverberg points")
    return hits


def type_census(hits: list[TverbergHit]) -> pd.Series:
    """Hit count per dimension type, e.g. {"{2,2,2}": 5}."""
    labels = pd.Series([type_label(hit.type) for hit in hits], dtype=object)
    return labels.value_counts().sort_index()


def hits_frame(hits: list[TverbergHit]) -> pd.DataFrame:
    """One row per hit, formatted for the CSV table."""
    return pd.DataFrame(
        [
            {
                "faces": " ".join(str(list(face)) for face in hit.faces),
                "point": "(" + ", ".join(format_point(hit.point)) + ")",
                "type": type_label(hit.type),
                "sign": hit.sign,
            }
            for hit in hits
        ],
        columns=["faces", "point", "type", "sign"],
    )


def cross_validate(
    K: SimplicialComplex,
    r: int,
    d: int,
    f: ExactAffineMap,
    phi: EquivariantCochain,
    *,
    hits: list[TverbergHit] | None = None,
) -> bool:
    """epsilon times the signed hit count equals phi on every top-cell orbit."""
    if hits is None:
        hits = enumerate_tverberg(K, r, d, f)
    by_rep = {hit.faces: hit.sign for hit in hits}
    reps = orbit_reps(K, r, d * (r - 1))
    if set(phi.values) - set(reps):
        return False
    for rep in reps:
        expected = 0
        if rep in by_rep:
            expected = epsilon(d, [len(face) - 1 for face in rep]) * by_rep[rep]
        if phi.values.get(rep, 0) != expected:
            return False
    return True


def cluster_configuration(
    r: int,
    d: int,
    seed: int,
    *,
    scale: int = 10**6,
    spread: int = 100,
    max_retries: int = MAX_RETRIES,
) -> tuple[SimplicialComplex, ExactAffineMap]:
    """
    d+1 clusters of r-1 points near the vertices of a d-simplex, plus its barycentre.

    Cluster j holds vertices j(r-1) .. j(r-1)+r-2; the barycentre is the last
    vertex. Every Tverberg partition isolates the barycentre and takes one
    point per cluster in each of the other r-1 parts.
    """
    N = (d + 1) * (r - 1)
    K = full_simplex(N)
    corners = [tuple(scale if t == j - 1 else 0 for t in range(d)) for j in range(d + 1)]
    centre = tuple(Fraction(sum(c[t] for c in corners), d + 1) for t in range(d))
    reps = orbit_reps(K, r, d * (r - 1))
    for nonce in range(max_retries):
        rng = np.random.default_rng([seed, nonce])
        offsets = rng.integers(0, spread, size=(N, d))
        coords = {
            v: tuple(corners[v // (r - 1)][t] + int(offsets[v][t]) for t in range(d))
            for v in range(N)
        }
        coords[N] = centre
        try:
            f = ExactAffineMap(d, coords)
            check_general_position(f, reps)
        except DegeneracyError as err:
            print(f"  Degenerate cluster sample (attempt {nonce + 1}/{max_retries}): {err}")
            continue
        return K, f
    raise RetryBudgetExceeded(f"No generic cluster configuration after {max_retries} attempts")
