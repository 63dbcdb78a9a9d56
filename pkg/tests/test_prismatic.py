import random
from fractions import Fraction

import pytest

from vankampen.complex import full_simplex
from vankampen.exactgeo import intersection_point
from vankampen.oracle import enumerate_tverberg, type_census
from vankampen.prismatic import (
    ColorScheme,
    PrismaticMap,
    PrismCell,
    base_point,
    build_colorful_complex,
    canonicalize_X,
    cells_of_X,
    check_caps,
    check_prismatic,
    dual_sign,
    epsilon_pris,
    group_action_X,
    is_colorful,
    load_heights,
    phi_to_simplices,
    prism_map,
    prismatic_cocycle,
    prismatic_obstruction,
    sample_prismatic_heights,
    save_heights,
    sign_relation,
    simplices_to_phi,
    x_boundary,
    x_orbit_count,
    x_orbit_reps,
)
from vankampen.utils import DegeneracyError, InputError, ResourceCapError

ID2, SWAP = (0, 1), (1, 0)
HAND_HEIGHTS = {0: (Fraction(1, 4),), 1: (Fraction(3, 4),), 2: (Fraction(3, 4),), 3: (Fraction(1, 4),)}


def test_scheme_dimensions():
    s = ColorScheme(3, 1)
    assert (s.m, s.N, s.d, s.vertex_count) == (2, 8, 3, 9)
    assert s.color_class(1) == [3, 4, 5]
    assert (s.color(5), s.row(5)) == (1, 3)
    assert ColorScheme(2, 2).m == 2
    with pytest.raises(InputError):
        ColorScheme(1, 1)


def test_colorful_complex():
    s = ColorScheme(2, 1)
    C = build_colorful_complex(s)
    assert C.faces_of_dim(1) == [(0, 2), (0, 3), (1, 2), (1, 3)]
    assert C.dim == s.m
    assert all(is_colorful(face, s) for face in C.faces)


def test_cell_counts():
    assert len(cells_of_X(ColorScheme(2, 1), 1)) == 4
    s = ColorScheme(3, 1)
    assert len(cells_of_X(s, 2)) == 216
    assert len(x_orbit_reps(s, 2)) == x_orbit_count(s, 2) == 36
    assert len(cells_of_X(s, 1)) == 108
    assert len(x_orbit_reps(s, 1)) == x_orbit_count(s, 1) == 18


def test_phi_to_simplices_examples():
    s = ColorScheme(2, 1)
    assert phi_to_simplices(PrismCell((0,), (ID2,)), s) == ((0,), (1,))
    assert phi_to_simplices(PrismCell((0, 1), (ID2, SWAP)), s) == ((0, 3), (1, 2))


def test_phi_round_trip():
    rng = random.Random(1)
    for r, k in [(2, 1), (3, 1), (2, 2)]:
        s = ColorScheme(r, k)
        cells = [c for q in range(s.m + 1) for c in cells_of_X(s, q)]
        for cell in rng.sample(cells, min(len(cells), 60)):
            assert simplices_to_phi(phi_to_simplices(cell, s), s) == cell


def test_group_action_permutes_simplices():
    s = ColorScheme(3, 1)
    rng = random.Random(2)
    for cell in rng.sample(cells_of_X(s, 2), 30):
        pi = tuple(rng.sample(range(3), 3))
        moved = phi_to_simplices(group_action_X(cell, pi), s)
        original = phi_to_simplices(cell, s)
        assert moved == tuple(original[pi[i]] for i in range(3))
        rep, twist = canonicalize_X(cell, s.k)
        assert rep.perms[0] == (0, 1, 2)
        assert twist in (1, -1)


def test_x_boundary_squares_to_zero():
    s = ColorScheme(3, 1)
    for cell in cells_of_X(s, 2)[:20]:
        total = {}
        for face, sign in x_boundary(cell).items():
            for facet, inner in x_boundary(face).items():
                total[facet] = total.get(facet, 0) + sign * inner
        assert all(v == 0 for v in total.values())


def test_epsilon_pris():
    assert epsilon_pris(2, 1) == -1
    assert epsilon_pris(3, 1) == 1
    assert epsilon_pris(2, 2) == 1


def test_hand_heights_cross_once():
    s = ColorScheme(2, 1)
    f = prism_map(s, HAND_HEIGHTS)
    crossing = intersection_point([f.image(t) for t in phi_to_simplices(PrismCell((0, 1), (ID2, ID2)), s)])
    assert crossing.point == (Fraction(1, 2), Fraction(1, 2))
    with pytest.raises(DegeneracyError):
        intersection_point([f.image(t) for t in phi_to_simplices(PrismCell((0, 1), (ID2, SWAP)), s)])
    phi = prismatic_cocycle(s, HAND_HEIGHTS, reps=[PrismCell((0, 1), (ID2, ID2))])
    assert list(phi.values) == [PrismCell((0, 1), (ID2, ID2))]
    assert abs(phi.values[PrismCell((0, 1), (ID2, ID2))]) == 1


def test_sampled_heights(tmp_path):
    s = ColorScheme(3, 1)
    heights = sample_prismatic_heights(s, 12)
    assert heights == sample_prismatic_heights(s, 12)
    assert all(len(h) == 1 and 0 < h[0] < 1 for h in heights.values())
    path = save_heights(s, heights, tmp_path / "h.json")
    assert load_heights(path, s) == heights
    with pytest.raises(InputError):
        load_heights(path, ColorScheme(2, 1))


def test_bad_heights_file(tmp_path):
    path = tmp_path / "h.json"
    path.write_text('{"r": 2, "k": 1, "heights": {"1,0": ["1/2"], "2,0": ["3/2"], "1,1": ["1/3"], "2,1": ["2/3"]}}')
    with pytest.raises(InputError):
        load_heights(path, ColorScheme(2, 1))


@pytest.mark.parametrize("r, k", [(2, 1), (3, 1)])
def test_affine_sample_is_regular(r, k):
    s = ColorScheme(r, k)
    report = check_prismatic(PrismaticMap.from_heights(s, sample_prismatic_heights(s, 4)))
    assert report["PR1"] and report["PR2"] and report["PR3"] and report["REG"]
    assert report["failures"] == []


def test_repeated_heights_break_general_position():
    s = ColorScheme(2, 1)
    same = {0: (Fraction(1, 3),), 1: (Fraction(1, 3),), 2: (Fraction(2, 3),), 3: (Fraction(1, 5),)}
    report = check_prismatic(PrismaticMap.from_heights(s, same))
    assert report["PR1"]
    assert not report["PR3"]


def test_bent_map_is_prismatic_but_not_regular():
    s = ColorScheme(2, 1)
    heights = sample_prismatic_heights(s, 3)
    tau = (0, 2)
    shift = Fraction(1, 4 * (s.m + 1))
    apex = (Fraction(1, 2) + shift, (heights[0][0] + heights[2][0]) / 2)
    report = check_prismatic(PrismaticMap.from_heights(s, heights).with_bend(tau, apex))
    assert report["PR1"] and report["PR2"] and report["PR3"]
    assert not report["REG"]


def test_bends_only_on_top_colorful_simplices():
    s = ColorScheme(2, 1)
    pmap = PrismaticMap.from_heights(s, HAND_HEIGHTS)
    with pytest.raises(InputError):
        pmap.with_bend((0, 1), (Fraction(1, 2), Fraction(1, 2)))
    with pytest.raises(InputError):
        pmap.with_bend((0,), base_point(s, 0) + (Fraction(1, 2),))


@pytest.mark.parametrize("r, k, shape", [(2, 1, (2, 2)), (3, 1, (36, 18))])
def test_prismatic_obstruction_nonvanishing(r, k, shape):
    result = prismatic_obstruction(ColorScheme(r, k), seed=1)
    assert result.matrix.shape == shape
    assert result.verdict == "NonVanishing"


def test_orbit_caps():
    with pytest.raises(ResourceCapError):
        check_caps(ColorScheme(6, 1))
    with pytest.raises(ResourceCapError):
        prismatic_obstruction(ColorScheme(4, 1), seed=0)
    check_caps(ColorScheme(3, 1))


@pytest.mark.parametrize("r, k", [(2, 1), (2, 2), (3, 1)])
def test_sign_relation(r, k):
    s = ColorScheme(r, k)
    for seed in range(10):
        heights = sample_prismatic_heights(s, seed)
        rows = sign_relation(s, heights)
        assert rows
        assert all(row["agree"] for row in rows)


def test_dual_sign_needs_top_cell():
    s = ColorScheme(2, 1)
    with pytest.raises(ValueError):
        dual_sign(s, HAND_HEIGHTS, PrismCell((0,), (ID2,)))


@pytest.mark.parametrize("r, k, label", [(2, 1, "{1,1}"), (3, 1, "{2,2,2}")])
def test_prismatic_census(r, k, label):
    s = ColorScheme(r, k)
    f = prism_map(s, sample_prismatic_heights(s, 21))
    colors = {v: s.color(v) for v in range(s.vertex_count)}
    hits = enumerate_tverberg(full_simplex(s.N), r, s.d, f, colors=colors)
    census = type_census(hits)
    assert list(census.index) == [label]
    assert census[label] >= 1


@pytest.mark.parametrize("r, k, seed", [(2, 1, 21), (3, 1, 21), (2, 2, 5)])
def test_cocycle_matches_scan(r, k, seed):
    s = ColorScheme(r, k)
    heights = sample_prismatic_heights(s, seed)
    phi = prismatic_cocycle(s, heights)
    colors = {v: s.color(v) for v in range(s.vertex_count)}
    hits = enumerate_tverberg(full_simplex(s.N), r, s.d, prism_map(s, heights), colors=colors)
    assert hits

    hit_reps = set()
    for hit in hits:
        assert all(is_colorful(face, s) for face in hit.faces)
        cell = simplices_to_phi(hit.faces, s)
        assert phi.value(cell) == epsilon_pris(r, k) * hit.sign
        hit_reps.add(canonicalize_X(cell, k)[0])
    assert hit_reps == set(phi.values)
    for rep in x_orbit_reps(s, s.m):
        expected = [h for h in hits if set(h.faces) == set(phi_to_simplices(rep, s))]
        assert (rep in phi.values) == bool(expected)
