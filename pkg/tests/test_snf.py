import json
import random
from itertools import product
from math import gcd

import numpy as np
import pytest
from sympy import ZZ, Matrix
from sympy.matrices.normalforms import invariant_factors

from vankampen.snf import (
    IntMatrix,
    Obstructed,
    Solution,
    bareiss_det,
    check_certificate,
    check_witness,
    exgcd,
    is_unimodular,
    load_matrix,
    load_vector,
    smith_normal_form,
    solve_integer,
    solve_with_certificate,
    verify,
)
from vankampen.utils import InputError


def random_matrix(rng: random.Random, rows: int, cols: int, lo: int = -9, hi: int = 9) -> IntMatrix:
    return IntMatrix.from_dense([[rng.randint(lo, hi) for _ in range(cols)] for _ in range(rows)])


def test_diagonal_examples():
    assert smith_normal_form(IntMatrix.from_dense([[2, 0], [0, 3]])).invariant_factors == [1, 6]
    assert smith_normal_form(IntMatrix.from_dense([[2, 4], [6, 8]])).invariant_factors == [2, 4]


def test_zero_matrix():
    cert = smith_normal_form(IntMatrix(3, 2))
    assert cert.rank == 0
    assert (cert.D == 0).all()
    assert (cert.U == np.eye(3, dtype=object)).all()
    assert (cert.V == np.eye(2, dtype=object)).all()
    assert check_certificate(cert)


def test_solve_examples():
    result = solve_integer(IntMatrix.from_dense([[2]]), [1])
    assert result == Obstructed(0, result.residue, 2)
    assert result.residue % 2 == 1

    A = IntMatrix.from_dense([[4, 6]])
    result = solve_integer(A, [2])
    assert isinstance(result, Solution)
    assert verify(A, result.x, [2])


@pytest.mark.parametrize("a, b, c", list(product(range(-2, 3), repeat=3)))
def test_diagonal_system(a, b, c):
    A = IntMatrix.from_dense([[1, 0, 0], [0, 2, 0], [0, 0, 0]])
    result = solve_integer(A, [a, b, c])
    assert isinstance(result, Solution) == (b % 2 == 0 and c == 0)


def test_verify_examples():
    A = IntMatrix.from_dense([[4, 6]])
    assert verify(A, [2, -1], [2])
    assert not verify(A, [2, -1], [3])
    rng = random.Random(17)
    for _ in range(50):
        A = random_matrix(rng, rng.randint(1, 5), rng.randint(1, 5))
        x = [rng.randint(-5, 5) for _ in range(A.cols)]
        v = A.matvec(x)
        assert verify(A, x, v)
        v[rng.randrange(len(v))] += 1
        assert not verify(A, x, v)


def test_certificates_on_random_matrices():
    rng = random.Random(2024)
    for _ in range(500):
        A = random_matrix(rng, rng.randint(1, 30), rng.randint(1, 30))
        if rng.random() < 0.3:
            keep = {k: v for k, v in A.entries.items() if rng.random() < 0.3}
            A = IntMatrix(A.rows, A.cols, keep)
        assert check_certificate(smith_normal_form(A))


def test_invariant_factors_match_sympy():
    rng = random.Random(99)
    for _ in range(100):
        n = rng.randint(1, 7)
        A = random_matrix(rng, n, n, -5, 5)
        if rng.random() < 0.3:
            A.entries = {k: 2 * v for k, v in A.entries.items()}
        ours = smith_normal_form(A).invariant_factors
        theirs = [abs(int(x)) for x in invariant_factors(Matrix(A.to_dense().tolist()), domain=ZZ) if x != 0]
        assert ours == theirs


def test_solve_agrees_with_brute_force():
    """Any solution found in a box is seen by solve_integer; obstructions rule out the box."""
    rng = random.Random(7)
    for _ in range(200):
        A = random_matrix(rng, rng.randint(1, 4), rng.randint(1, 4), -3, 3)
        v = [rng.randint(-4, 4) for _ in range(A.rows)]
        boxed = any(A.matvec(x) == v for x in product(range(-3, 4), repeat=A.cols))
        result = solve_integer(A, v)
        if boxed:
            assert isinstance(result, Solution)
        if isinstance(result, Solution):
            assert verify(A, result.x, v)
        else:
            assert not boxed
            assert check_witness(smith_normal_form(A), v, result)


def test_batch_solves_share_a_certificate():
    rng = random.Random(8)
    A = random_matrix(rng, 6, 4)
    cert = smith_normal_form(A)
    for _ in range(20):
        x = [rng.randint(-3, 3) for _ in range(4)]
        result = solve_with_certificate(cert, A.matvec(x))
        assert isinstance(result, Solution)
        assert verify(A, result.x, A.matvec(x))


def test_witness_rechecks():
    A = IntMatrix.from_dense([[2, 4], [6, 8]])
    cert = smith_normal_form(A)
    result = solve_integer(A, [1, 0], cert)
    assert isinstance(result, Obstructed)
    assert check_witness(cert, [1, 0], result)
    forged = Obstructed(result.index, result.residue + 1, result.divisor)
    assert not check_witness(cert, [1, 0], forged)


def test_rank_deficient_witness():
    A = IntMatrix.from_dense([[1, 1], [1, 1]])
    cert = smith_normal_form(A)
    result = solve_integer(A, [1, 2], cert)
    assert isinstance(result, Obstructed)
    assert result.divisor == 0
    assert check_witness(cert, [1, 2], result)


def test_bareiss_matches_sympy():
    rng = random.Random(4)
    for _ in range(100):
        n = rng.randint(1, 7)
        rows = [[rng.randint(-9, 9) for _ in range(n)] for _ in range(n)]
        assert bareiss_det(rows) == int(Matrix(rows).det())
    assert is_unimodular([[2, 1], [1, 1]])
    assert not is_unimodular([[2, 0], [0, 1]])


def test_vector_shape_checked():
    A = IntMatrix.from_dense([[1, 2], [3, 4]])
    with pytest.raises(InputError):
        solve_integer(A, [1, 2, 3])
    with pytest.raises(InputError):
        solve_integer(A, [1.5, 2])


def test_matrix_files(tmp_path):
    path = tmp_path / "a.json"
    path.write_text(json.dumps({"rows": 2, "cols": 2, "entries": [[0, 0, 2], [1, 1, 3]]}))
    assert load_matrix(path) == IntMatrix.from_dense([[2, 0], [0, 3]])

    for entries in ([[0, 5, 1]], [[0, 0, 1], [0, 0, 2]], [[0, 0, 1.5]], [[0, 0]]):
        path.write_text(json.dumps({"rows": 2, "cols": 2, "entries": entries}))
        with pytest.raises(InputError):
            load_matrix(path)

    vec = tmp_path / "v.json"
    vec.write_text(json.dumps({"values": [1, -2]}))
    assert load_vector(vec) == [1, -2]
    vec.write_text(json.dumps([1, "2"]))
    with pytest.raises(InputError):
        load_vector(vec)


def test_exgcd_transform():
    rng = random.Random(31)
    pairs = [(0, 0), (0, 5), (-4, 0), (3, 9), (-3, 9), (6, 4)] + [
        (rng.randint(-60, 60), rng.randint(-60, 60)) for _ in range(300)
    ]
    for a, b in pairs:
        m00, m01, m10, m11 = exgcd(a, b)
        assert m00 * m11 - m01 * m10 == 1
        assert m00 * a + m01 * b == gcd(a, b)
        assert m10 * a + m11 * b == 0
        if a != 0 and b % a == 0:
            assert m01 == 0


def test_hermite_first_path():
    rng = random.Random(12)
    for _ in range(200):
        A = random_matrix(rng, rng.randint(1, 12), rng.randint(1, 12), -6, 6)
        if rng.random() < 0.5:
            A = IntMatrix(A.rows, A.cols, {k: v for k, v in A.entries.items() if rng.random() < 0.3})
        cert = smith_normal_form(A, hermite_above=0)
        assert check_certificate(cert)
        assert cert.invariant_factors == smith_normal_form(A).invariant_factors


def test_large_sparse_matrix():
    """260 scrambled copies of [[2, 4], [6, 8]]: invariant factors 2 (x260) then 4 (x260)."""
    rng = random.Random(5)
    n = 520
    rows, cols = list(range(n)), list(range(n))
    rng.shuffle(rows)
    rng.shuffle(cols)
    entries = {}
    for b in range(n // 2):
        for (di, dj), value in {(0, 0): 2, (0, 1): 4, (1, 0): 6, (1, 1): 8}.items():
            entries[(rows[2 * b + di], cols[2 * b + dj])] = value
    A = IntMatrix(n, n, entries)
    cert = smith_normal_form(A)
    assert cert.invariant_factors == [2] * 260 + [4] * 260
    assert check_certificate(cert, unimodular=False)

    x = [rng.randint(-3, 3) for _ in range(n)]
    result = solve_with_certificate(cert, A.matvec(x))
    assert isinstance(result, Solution)
    assert verify(A, result.x, A.matvec(x))
    assert isinstance(solve_with_certificate(cert, [1] + [0] * (n - 1)), Obstructed)
