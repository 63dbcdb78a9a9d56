"""
Shared utilities for the obstruction pipeline.

Provides:
  - Paths and tunable knobs (resource caps, retry budget, sampling box)
  - Error types, each mapped to a CLI exit code
  - Exact rational parsing / formatting ("num/den" strings)
  - JSON loading and report / table output helpers
"""

import hashlib
import json
from fractions import Fraction
from pathlib import Path

import pandas as pd

DATA_DIR = Path(__file__).resolve().parent.parent / "data"
COMPLEX_DIR = DATA_DIR / "complexes"
REPORT_DIR = DATA_DIR / "reports"

# ── Tunable knobs ─────────────────────────────────────────────────────────────

MAX_RETRIES = 64                # resampling attempts for generic maps / heights
DEFAULT_BOX = 10**6             # integer coordinates are drawn from [0, box)
HEIGHT_GRID = 10**4             # barycentric weights of heights drawn from [1, grid]
PR3_SAMPLE = 400                # tuples checked per (face dim, multiplicity)

# ── Resource caps ─────────────────────────────────────────────────────────────

MAX_TOP_ORBITS = 20_000         # top-cell orbits before refusing
MAX_MATRIX_DIM = 5_000          # rows or columns of a coboundary matrix
MAX_TUPLES = 1_000_000          # candidate tuples examined by the oracle
SNF_HERMITE_ABOVE = 500         # rows or columns beyond which SNF row-reduces to Hermite form first


# ═════════════════════════════════════════════════════════════════════════════
# Errors
# ═════════════════════════════════════════════════════════════════════════════

class PipelineError(Exception):
    exit_code = 1


class PreconditionError(PipelineError):
    """The input is well formed but outside the pipeline's hypotheses."""
    exit_code = 2


class ResourceCapError(PipelineError):
    exit_code = 3


class RetryBudgetExceeded(ResourceCapError):
    """Every resampling attempt hit a degenerate configuration."""


class InputError(PipelineError, ValueError):
    exit_code = 4


class DegeneracyError(PipelineError):
    """General position is violated by a consumed tuple."""
    exit_code = 4


# ═════════════════════════════════════════════════════════════════════════════
# Rationals
# ═════════════════════════════════════════════════════════════════════════════

def parse_rational(value) -> Fraction:
    """Parse an int or a "num/den" string into an exact Fraction."""
    if isinstance(value, bool):
        raise InputError(f"Not a rational: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
    raise InputError(f"Not a rational: {value!r}")


def format_rational(q) -> str:
    return str(Fraction(q))


def format_point(point) -> list[str]:
    return [format_rational(x) for x in point]


# ═════════════════════════════════════════════════════════════════════════════
# File I/O
# ═════════════════════════════════════════════════════════════════════════════

def load_json(path) -> dict:
    """Parse a JSON file; a missing file or bad JSON raises InputError."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"File not found: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise InputError(f"Malformed JSON in {path}: {err}") from err


def canonical_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def digest(payload) -> str:
    """sha256 of the compact canonical JSON form of payload."""
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def save_report(payload: dict, path) -> Path:
    """Write a JSON report; identical payloads give identical bytes."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(payload), encoding="utf-8")
    print(f"Saved report → {path}")
    return path


def save_table(
    rows: list[dict],
    path,
    *,
    sort_by: list[str] | None = None,
    columns: list[str] | None = None,
) -> pd.DataFrame:
    """Save a list of records as CSV next to a report."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df = pd.DataFrame(rows, columns=columns)
    if sort_by and not df.empty:
        df = df.sort_values(sort_by).reset_index(drop=True)
    df.to_csv(path, index=False)
    print(f"Saved {len(df)} rows → {path}")
    return df
