"""Versioned CSV exports.

Every file starts with one ``# schema: <name>/<version>`` comment line
followed by the header row; readers should skip lines starting with ``#``.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

__all__ = ["SCHEMAS", "write_csv", "read_csv"]

SCHEMAS: dict[str, tuple[str, ...]] = {
    "three_mode/1": ("g0l", "Dl", "n_s0", "n_i1", "n_i2", "oracle_max_abs_diff"),
    "four_mode/1": ("g0l", "Dl", "n_b_s", "n_c_s", "n_b_i", "n_c_i", "ratio_b_over_c",
                    "oracle_max_abs_diff"),
    "fock_conditional/1": ("N", "k_i1", "k_i2", "p_exact", "p_float", "binomial_exact"),
    "fibonacci/1": ("g0z", "B", "C", "B_over_C", "B_recursion"),
    "fibonacci_integers/1": ("k", "adults_F", "newborns_N", "ratio"),
    "hot_spots/1": ("role", "kind", "q_x_rad_m", "q_y_rad_m", "Omega_rad_s", "lambda_nm",
                    "photons_per_mode"),
    "gain_sweep/1": ("g0l", "I_background", "I_hotspot", "realizations"),
    "compare/1": ("label", "analytic", "simulated", "abs_error", "rel_error", "target"),
}


def write_csv(path, schema: str, rows: Iterable[Sequence]) -> Path:
    if schema not in SCHEMAS:
        raise KeyError(f"unknown CSV schema {schema!r}")
    path = Path(path)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema: {schema}\n")
        w = csv.writer(fh)
        w.writerow(SCHEMAS[schema])
        for row in rows:
            w.writerow(row)
    return path


def read_csv(path) -> tuple[str | None, list[dict[str, str]]]:
    """Return ``(schema, rows)`` for a file written by :func:`write_csv`."""
    schema = None
    with open(path, newline="") as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                if line.startswith("# schema:"):
                    schema = line.split(":", 1)[1].strip()
                continue
            lines.append(line)
    return schema, list(csv.DictReader(lines))
