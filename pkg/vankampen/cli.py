"""
Command-line pipelines for the r-fold Van Kampen obstruction.

Usage:
    python -m vankampen.cli obstruction   --complex FILE --r R --d D --seed S [--map FILE] [--box B]
    python -m vankampen.cli tverberg-scan --complex FILE --map FILE --r R
    python -m vankampen.cli prismatic     --r R --k K --seed S [--mode {obstruction,scan,signcheck}] [--heights FILE]
    python -m vankampen.cli snf           --matrix FILE [--vector FILE]

Every run writes a JSON report (default under data/reports/) and a CSV side
table next to it. Reports are byte-identical for identical inputs unless
--timing is given.

Exit codes: 0 report written, 2 precondition refused, 3 resource cap or
retry budget exhausted, 4 malformed input or degenerate user-supplied map.
"""

import argparse
import sys
import time
from pathlib import Path

from vankampen.cocycle import coboundary_matrix, intersection_cocycle, to_vector
from vankampen.complex import SimplicialComplex, complex_digest, full_simplex, load_complex
from vankampen.delprod import deleted_product_dim, has_cells, iter_orbit_reps
from vankampen.exactgeo import (
    ExactAffineMap,
    check_general_position,
    load_map,
    sample_generic_map,
)
from vankampen.oracle import enumerate_tverberg, hits_frame, type_census, type_label
from vankampen.prismatic import (
    ColorScheme,
    check_caps,
    describe_x_cell,
    load_heights,
    prism_map,
    prismatic_obstruction,
    sample_prismatic_heights,
    sign_relation,
    x_orbit_count,
    x_orbit_reps,
)
from vankampen.snf import (
    IntMatrix,
    Solution,
    SolveResult,
    SNFCertificate,
    check_certificate,
    check_witness,
    load_matrix,
    load_vector,
    smith_normal_form,
    solve_integer,
    verify,
)
from vankampen.utils import (
    DEFAULT_BOX,
    MAX_MATRIX_DIM,
    MAX_TOP_ORBITS,
    MAX_TUPLES,
    REPORT_DIR,
    InputError,
    PipelineError,
    PreconditionError,
    ResourceCapError,
    format_point,
    save_report,
    save_table,
)


# ═════════════════════════════════════════════════════════════════════════════
# Shared helpers
# ═════════════════════════════════════════════════════════════════════════════

def collect_reps(K: SimplicialComplex, r: int, dim: int, cap: int, what: str) -> list:
    """Sorted orbit reps, stopping as soon as the cap is passed."""
    reps = []
    for rep in iter_orbit_reps(K, r, dim):
        reps.append(rep)
        if len(reps) > cap:
            raise ResourceCapError(f"More than {cap:,} {what} orbits (raise --max-orbits to continue)")
    return sorted(reps)


def check_matrix_shape(rows: int, cols: int, cap: int) -> None:
    if max(rows, cols) > cap:
        raise ResourceCapError(f"Coboundary matrix {rows:,} x {cols:,} exceeds {cap:,} (raise --max-matrix-dim)")


def certificate_payload(A: IntMatrix, v: list[int], cert: SNFCertificate, result: SolveResult) -> dict:
    """Verdict plus its certificate, re-checked before it is reported."""
    if isinstance(result, Solution):
        if not verify(A, result.x, v):
            raise PipelineError("Solution failed exact verification")
        return {"verdict": "Vanishes", "certificate": {"x": result.x}}
    if not check_witness(cert, v, result):
        raise PipelineError("Obstruction witness failed to re-check")
    return {
        "verdict": "NonVanishing",
        "certificate": {
            "witness": {"index": result.index, "residue": result.residue, "divisor": result.divisor},
        },
    }


def matrix_payload(A: IntMatrix, cert: SNFCertificate) -> dict:
    return {
        "rows": A.rows,
        "cols": A.cols,
        "nonzeros": len(A.entries),
        "rank": cert.rank,
        "invariant_factors_above_1": [x for x in cert.invariant_factors if x > 1],
    }


def check_parameters(r: int, d: int | None = None) -> None:
    """r >= 2 and, when given, d >= 1; anything else is an input error (exit 4)."""
    if r < 2:
        raise InputError(f"r must be at least 2, got {r}")
    if d is not None and d < 1:
        raise InputError(f"d must be at least 1, got {d}")


def check_precondition(K: SimplicialComplex, r: int, d: int) -> None:
    """The obstruction lives in degree d(r-1), which must be the top dimension of K^r_Delta."""
    n = d * (r - 1)
    if not has_cells(K, r, n):
        dim = deleted_product_dim(K, r)
        raise PreconditionError(
            f"dim K^{r}_Delta = {dim} < d(r-1) = {n}: a generic map has no r-fold "
            f"Tverberg points, so the question is trivial"
        )
    if has_cells(K, r, n + 1):
        raise PreconditionError(
            f"dim K^{r}_Delta exceeds d(r-1) = {n}; the obstruction is only defined in the top degree"
        )


def applicability_flags(K: SimplicialComplex, r: int, d: int) -> dict:
    """Which classical conditions hold for (K, r, d); reported, never enforced."""
    codim_ok = d - K.dim >= 3
    equidimensional = (r - 1) * d == r * K.dim
    return {
        "codimension": d - K.dim,
        "codimension_at_least_3": codim_ok,
        "equidimensional": equidimensional,
        "map_existence_decided": codim_ok and equidimensional,
    }


# ═════════════════════════════════════════════════════════════════════════════
# Pipelines
# ═════════════════════════════════════════════════════════════════════════════

def run_obstruction(
    K: SimplicialComplex,
    r: int,
    d: int,
    seed: int,
    *,
    f: ExactAffineMap | None = None,
    box: int = DEFAULT_BOX,
    workers: int = 1,
    max_orbits: int = MAX_TOP_ORBITS,
    max_matrix_dim: int = MAX_MATRIX_DIM,
) -> tuple[dict, list[dict]]:
    """
    Decide whether the intersection cocycle of K in R^d is a coboundary.

    The map is sampled from `seed` unless `f` is given. Returns the report
    payload and the per-orbit table rows.
    """
    check_parameters(r, d)
    n = d * (r - 1)

    # ── Step 1 ────────────────────────────────────────────────────────────
    print(f"Step 1: Checking dim K^{r}_Delta = {n}")
    check_precondition(K, r, d)

    # ── Step 2 ────────────────────────────────────────────────────────────
    print("\nStep 2: Enumerating cell orbits")
    top_reps = collect_reps(K, r, n, max_orbits, "top-cell")
    codim_reps = collect_reps(K, r, n - 1, max_orbits, "codimension-1")
    check_matrix_shape(len(top_reps), len(codim_reps), max_matrix_dim)
    print(f"  {len(top_reps):,} top orbits, {len(codim_reps):,} codimension-1 orbits")

    # ── Step 3 ────────────────────────────────────────────────────────────
    print("\nStep 3: Generic map")
    if f is None:
        f = sample_generic_map(K, d, seed, box, cells=top_reps + codim_reps)
        source = "sampled"
    else:
        if f.d != d:
            raise InputError(f"Map targets R^{f.d}, expected R^{d}")
        check_general_position(f, top_reps + codim_reps)
        source = "file"

    # ── Step 4 ────────────────────────────────────────────────────────────
    print("\nStep 4: Intersection cocycle and coboundary matrix")
    phi = intersection_cocycle(K, r, d, f, reps=top_reps, workers=workers)
    vector = to_vector(phi, top_reps)
    A = coboundary_matrix(K, r, d, top_reps, codim_reps)
    print(f"  phi nonzero on {len(phi.values):,} orbits; A is {A.rows:,} x {A.cols:,}")

    # ── Step 5 ────────────────────────────────────────────────────────────
    print("\nStep 5: Smith normal form")
    cert = smith_normal_form(A)
    result = solve_integer(A, vector.values, cert)

    payload = {
        "command": "obstruction",
        "inputs": {
            "complex_sha256": complex_digest(K),
            "vertex_count": K.vertex_count,
            "dim": K.dim,
            "r": r,
            "d": d,
            "seed": seed,
            "box": box,
            "map_source": source,
        },
        "counts": {
            "top_orbits": len(top_reps),
            "codim_orbits": len(codim_reps),
            "phi_support": len(phi.values),
        },
        "matrix": matrix_payload(A, cert),
        "flags": applicability_flags(K, r, d),
        "map": f.to_json(),
    }
    payload.update(certificate_payload(A, vector.values, cert, result))
    return payload, vector.to_frame().to_dict("records")


def run_scan(
    K: SimplicialComplex,
    r: int,
    f: ExactAffineMap,
    *,
    colors: dict[int, int] | None = None,
    workers: int = 1,
    max_tuples: int = MAX_TUPLES,
) -> tuple[dict, list[dict]]:
    """Enumerate r-fold Tverberg points of f and their type census."""
    check_parameters(r)
    print(f"Step 1: Scanning r={r} tuples of K ({K.vertex_count} vertices) in R^{f.d}")
    hits = enumerate_tverberg(K, r, f.d, f, colors=colors, workers=workers, max_tuples=max_tuples)
    census = type_census(hits)
    payload = {
        "command": "tverberg-scan",
        "inputs": {"complex_sha256": complex_digest(K), "r": r, "d": f.d},
        "hit_count": len(hits),
        "census": {label: int(count) for label, count in census.items()},
        "hits": [
            {
                "faces": [list(face) for face in hit.faces],
                "point": format_point(hit.point),
                "type": type_label(hit.type),
                "sign": hit.sign,
            }
            for hit in hits
        ],
    }
    return payload, hits_frame(hits).to_dict("records")


def run_prismatic(
    r: int,
    k: int,
    seed: int,
    mode: str,
    *,
    heights_path=None,
    workers: int = 1,
    max_orbits: int = MAX_TOP_ORBITS,
    max_matrix_dim: int = MAX_MATRIX_DIM,
    max_tuples: int = MAX_TUPLES,
) -> tuple[dict, list[dict]]:
    scheme = ColorScheme(r, k)
    print(f"Step 1: Prismatic scheme r={r}, k={k} (m={scheme.m}, N={scheme.N}), mode={mode}")
    if mode == "obstruction":
        check_caps(scheme, max_orbits=max_orbits, max_matrix_dim=max_matrix_dim)
    elif x_orbit_count(scheme, scheme.m) > max_orbits:
        raise ResourceCapError(f"X has {x_orbit_count(scheme, scheme.m):,} top-cell orbits (cap {max_orbits:,})")
    top_reps = x_orbit_reps(scheme, scheme.m)

    print("\nStep 2: Heights")
    if heights_path is not None:
        heights = load_heights(heights_path, scheme)
        source = "file"
    else:
        heights = sample_prismatic_heights(scheme, seed, top_reps=top_reps)
        source = "sampled"

    payload = {
        "command": "prismatic",
        "inputs": {"r": r, "k": k, "m": scheme.m, "N": scheme.N, "seed": seed, "mode": mode, "heights_source": source},
        "flags": {"k_at_least_3": k >= 3, "map_existence_decided": k >= 3},
    }
    rows: list[dict] = []

    print(f"\nStep 3: {mode}")
    if mode == "obstruction":
        res = prismatic_obstruction(
            scheme, seed, heights=heights, workers=workers, max_orbits=max_orbits, max_matrix_dim=max_matrix_dim
        )
        payload["counts"] = {"top_orbits": len(res.top_reps), "codim_orbits": len(res.codim_reps)}
        payload["matrix"] = matrix_payload(res.matrix, res.certificate)
        payload.update(certificate_payload(res.matrix, res.vector, res.certificate, res.result))
        rows = [{"cell": describe_x_cell(rep), "value": value} for rep, value in zip(res.top_reps, res.vector)]
    elif mode == "scan":
        f = prism_map(scheme, heights)
        colors = {v: scheme.color(v) for v in range(scheme.vertex_count)}
        scan, rows = run_scan(full_simplex(scheme.N), r, f, colors=colors, workers=workers, max_tuples=max_tuples)
        expected = type_label([scheme.m] * r)
        payload["hit_count"] = scan["hit_count"]
        payload["census"] = scan["census"]
        payload["only_type_m"] = scan["hit_count"] > 0 and set(scan["census"]) == {expected}
    elif mode == "signcheck":
        rows = sign_relation(scheme, heights, top_reps)
        payload["populated_cells"] = len(rows)
        payload["all_agree"] = all(row["agree"] for row in rows)
    else:
        raise PipelineError(f"Unknown prismatic mode {mode!r}")
    return payload, rows


def run_snf(A: IntMatrix, v: list[int] | None = None) -> tuple[dict, list[dict]]:
    """Smith normal form of A, and the solve verdict when v is given."""
    print(f"Step 1: Smith normal form of a {A.rows} x {A.cols} matrix")
    cert = smith_normal_form(A)
    payload = {
        "command": "snf",
        "inputs": {"rows": A.rows, "cols": A.cols, "nonzeros": len(A.entries)},
        "rank": cert.rank,
        "invariant_factors": cert.invariant_factors,
        "certificate_ok": check_certificate(cert),
    }
    if v is not None:
        result = solve_integer(A, v, cert)
        payload.update(certificate_payload(A, v, cert, result))
        payload["verdict"] = "Solvable" if isinstance(result, Solution) else "Obstructed"
    rows = [{"index": i, "factor": x} for i, x in enumerate(cert.invariant_factors)]
    return payload, rows


# ═════════════════════════════════════════════════════════════════════════════
# Entry point
# ═════════════════════════════════════════════════════════════════════════════

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="vankampen", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", type=str, default=None, help="JSON report path")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--timing", action="store_true", help="record wall time in the report")

    p = sub.add_parser("obstruction", help="decide the r-fold obstruction of a complex")
    p.add_argument("--complex", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--map", default=None)
    p.add_argument("--box", type=int, default=DEFAULT_BOX)
    p.add_argument("--max-orbits", type=int, default=MAX_TOP_ORBITS)
    p.add_argument("--max-matrix-dim", type=int, default=MAX_MATRIX_DIM)
    common(p)

    p = sub.add_parser("tverberg-scan", help="enumerate r-fold Tverberg points of an affine map")
    p.add_argument("--complex", required=True)
    p.add_argument("--map", required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--max-tuples", type=int, default=MAX_TUPLES)
    common(p)

    p = sub.add_parser("prismatic", help="prismatic obstruction, census or sign check")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mode", choices=["obstruction", "scan", "signcheck"], default="obstruction")
    p.add_argument("--heights", default=None)
    p.add_argument("--max-orbits", type=int, default=MAX_TOP_ORBITS)
    p.add_argument("--max-matrix-dim", type=int, default=MAX_MATRIX_DIM)
    p.add_argument("--max-tuples", type=int, default=MAX_TUPLES)
    common(p)

    p = sub.add_parser("snf", help="Smith normal form and integer solvability")
    p.add_argument("--matrix", required=True)
    p.add_argument("--vector", default=None)
    common(p)
    return ap


def _dispatch(args) -> tuple[dict, list[dict], str]:
    if args.command == "obstruction":
        K = load_complex(args.complex)
        f = load_map(args.map, K) if args.map else None
        payload, rows = run_obstruction(
            K, args.r, args.d, args.seed, f=f, box=args.box, workers=args.workers,
            max_orbits=args.max_orbits, max_matrix_dim=args.max_matrix_dim,
        )
        name = f"obstruction_{Path(args.complex).stem}_r{args.r}_d{args.d}_seed{args.seed}"
    elif args.command == "tverberg-scan":
        K = load_complex(args.complex)
        f = load_map(args.map, K)
        payload, rows = run_scan(K, args.r, f, workers=args.workers, max_tuples=args.max_tuples)
        name = f"scan_{Path(args.complex).stem}_r{args.r}"
    elif args.command == "prismatic":
        payload, rows = run_prismatic(
            args.r, args.k, args.seed, args.mode, heights_path=args.heights, workers=args.workers,
            max_orbits=args.max_orbits, max_matrix_dim=args.max_matrix_dim, max_tuples=args.max_tuples,
        )
        name = f"prismatic_{args.mode}_r{args.r}_k{args.k}_seed{args.seed}"
    else:
        A = load_matrix(args.matrix)
        v = load_vector(args.vector) if args.vector else None
        payload, rows = run_snf(A, v)
        name = f"snf_{Path(args.matrix).stem}"
    return payload, rows, name


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        payload, rows, name = _dispatch(args)
    except PipelineError as err:
        print(f"\nError: {err}")
        return err.exit_code

    if args.timing:
        payload["timing_seconds"] = round(time.perf_counter() - start, 3)
    out = Path(args.out) if args.out else REPORT_DIR / f"{name}.json"
    print()
    save_report(payload, out)
    if rows:
        save_table(rows, out.with_suffix(".csv"))

    # ── Summary ───────────────────────────────────────────────────────────
    print(f"\n{'='*60}")
    print(f"  Command:           {payload['command']}")
    if "verdict" in payload:
        print(f"  Verdict:           {payload['verdict']}")
    if "matrix" in payload:
        print(f"  Matrix:            {payload['matrix']['rows']:,} x {payload['matrix']['cols']:,}")
    if "census" in payload:
        for label, count in payload["census"].items():
            print(f"  Type {label:<13}{count:,}")
    if "all_agree" in payload:
        print(f"  Sign relation:     {payload['populated_cells']} populated cells, all agree: {payload['all_agree']}")
    if "flags" in payload:
        print(f"  Map existence decided: {payload['flags']['map_existence_decided']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
