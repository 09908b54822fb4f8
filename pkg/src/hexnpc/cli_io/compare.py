"""Analytic vs simulated photon numbers, as a discrepancy table."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..coupled_modes import PHI
from ..errors import LabelMismatchError
from .exports import write_csv

__all__ = ["CompareRow", "CompareReport", "load_intensity_dump", "compare_report"]


@dataclass(frozen=True)
class CompareRow:
    label: str
    analytic: float
    simulated: float
    target: float | None = None

    @property
    def abs_error(self) -> float:
        return self.simulated - self.analytic

    @property
    def rel_error(self) -> float:
        if self.analytic == 0:
            return 0.0 if self.simulated == 0 else math.inf
        return self.abs_error / abs(self.analytic)


@dataclass
class CompareReport:
    rows: list[CompareRow]
    sources: tuple[str, str]
    meta: dict = field(default_factory=dict)

    @property
    def max_rel_error(self) -> float:
        return max(abs(r.rel_error) for r in self.rows)

    def row(self, label: str) -> CompareRow:
        return next(r for r in self.rows if r.label == label)

    def to_dict(self) -> dict:
        return {
            "schema": "compare_report/1",
            "sources": list(self.sources),
            "max_rel_error": self.max_rel_error,
            "rows": [{**asdict(r), "abs_error": r.abs_error, "rel_error": r.rel_error}
                     for r in self.rows],
            "meta": self.meta,
        }

    def to_text(self) -> str:
        lines = [f"{'label':<14}{'analytic':>16}{'simulated':>16}{'rel. error':>12}{'target':>12}"]
        for r in self.rows:
            tgt = "" if r.target is None else f"{r.target:.6g}"
            lines.append(f"{r.label:<14}{r.analytic:>16.8g}{r.simulated:>16.8g}"
                         f"{r.rel_error:>12.3e}{tgt:>12}")
        lines.append(f"max |rel. error| = {self.max_rel_error:.3e}")
        return "\n".join(lines)

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        j = out / "compare_report.json"
        j.write_text(json.dumps(self.to_dict(), indent=2))
        t = out / "compare_report.txt"
        t.write_text(self.to_text() + "\n")
        c = write_csv(out / "compare_report.csv", "compare/1",
                      ((r.label, r.analytic, r.simulated, r.abs_error, r.rel_error,
                        "" if r.target is None else r.target) for r in self.rows))
        return [j, t, c]


def load_intensity_dump(source) -> dict:
    """Mode labels and photon numbers from a state or mode-intensity dump."""
    doc = source if isinstance(source, dict) else json.loads(Path(source).read_text())
    if "intensities" not in doc or "mode_labels" not in doc:
        raise ValueError("dump has no 'mode_labels'/'intensities'")
    labels = list(doc["mode_labels"])
    ints = {k: float(v) for k, v in doc["intensities"].items()}
    if set(ints) != set(labels):
        raise LabelMismatchError(f"dump intensities {sorted(ints)} do not match labels {labels}")
    return {"labels": labels, "intensities": ints, "schema": doc.get("schema"),
            "source": doc.get("source")}


def compare_report(analytic, simulated) -> CompareReport:
    """Tabulate both dumps mode by mode.

    The labels of the two dumps must coincide exactly (order may differ).
    When both ``b_s`` and ``c_s`` are present an extra ``b_s/c_s`` row
    compares the measured intensity ratio with the golden-ratio target.
    """
    a, s = load_intensity_dump(analytic), load_intensity_dump(simulated)
    la, ls = set(a["labels"]), set(s["labels"])
    if la != ls:
        raise LabelMismatchError(
            f"mode labels differ: only in analytic {sorted(la - ls)}, "
            f"only in simulated {sorted(ls - la)}"
        )
    rows = [CompareRow(lab, a["intensities"][lab], s["intensities"][lab]) for lab in a["labels"]]
    for b, c in (("b_s", "c_s"), ("b_i", "c_i")):
        if b in la and c in la:
            rows.append(CompareRow(
                f"{b}/{c}",
                a["intensities"][b] / a["intensities"][c],
                s["intensities"][b] / s["intensities"][c],
                target=PHI**2,
            ))
    src = tuple(str(x) if not isinstance(x, dict) else "<dict>" for x in (analytic, simulated))
    return CompareReport(rows, src)
