"""Inter-annotator reliability over labeling sessions.

Krippendorff's alpha (nominal) via the coincidence-matrix formulation:

    alpha = 1 - Do/De

where Do is the observed disagreement (off-diagonal coincidence mass over
n pairable values) and De the disagreement expected by chance from the
value marginals. Labels are compared as whole path strings; there is no
partial credit for sharing a prefix. Units with fewer than two values are
excluded. Double precision throughout; tests hold results to 1e-12 against
an independent pair-enumeration oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .hierarchy import LabelPath


class AgreementError(Exception):
    pass


class NoPairableUnits(AgreementError):
    pass


@dataclass(frozen=True)
class ReliabilityData:
    """Unit x coder label table with missing cells simply absent."""

    units: tuple[str, ...]
    coders: tuple[str, ...]
    values: dict[tuple[str, str], str]  # (unit, coder) -> label

    def __post_init__(self):
        if len(self.coders) < 2:
            raise AgreementError("reliability data needs at least two coders")
        for (unit, coder) in self.values:
            if unit not in self.units or coder not in self.coders:
                raise AgreementError(f"value for unknown unit/coder: {(unit, coder)}")

    @classmethod
    def from_rows(cls, rows: dict[str, dict[str, str]]) -> "ReliabilityData":
        """rows: coder -> {unit: label}."""
        coders = tuple(rows)
        units: list[str] = []
        seen: set[str] = set()
        values: dict[tuple[str, str], str] = {}
        for coder, labels in rows.items():
            for unit, label in labels.items():
                if unit not in seen:
                    seen.add(unit)
                    units.append(unit)
                values[(unit, coder)] = label
        return cls(units=tuple(units), coders=coders, values=values)

    def unit_values(self, unit: str) -> list[str]:
        return [
            self.values[(unit, coder)] for coder in self.coders if (unit, coder) in self.values
        ]


def _label_sort_key(label: str):
    try:
        return (0, LabelPath.parse(label).segments)
    except ValueError:
        return (1, label)


@dataclass(frozen=True)
class CoincidenceMatrix:
    labels: tuple[str, ...]
    matrix: np.ndarray  # square, symmetric
    n_pairable: float  # total pairable values (matrix sum)

    def value(self, a: str, b: str) -> float:
        i, j = self.labels.index(a), self.labels.index(b)
        return float(self.matrix[i, j])

    def frequencies(self) -> dict[str, float]:
        return {label: float(s) for label, s in zip(self.labels, self.matrix.sum(axis=1))}


def coincidence_matrix(data: ReliabilityData) -> CoincidenceMatrix:
    """Pairable-value coincidences: within a unit holding m >= 2 values,
    every ordered value pair contributes 1/(m-1)."""
    pairable = [vals for unit in data.units if len(vals := data.unit_values(unit)) >= 2]
    if not pairable:
        raise NoPairableUnits("no unit carries two or more labels")
    labels = tuple(sorted({v for vals in pairable for v in vals}, key=_label_sort_key))
    index = {label: i for i, label in enumerate(labels)}
    matrix = np.zeros((len(labels), len(labels)))
    for vals in pairable:
        weight = 1.0 / (len(vals) - 1)
        for i, a in enumerate(vals):
            for j, b in enumerate(vals):
                if i != j:
                    matrix[index[a], index[b]] += weight
    return CoincidenceMatrix(labels=labels, matrix=matrix, n_pairable=float(matrix.sum()))


@dataclass(frozen=True)
class AlphaReport:
    alpha: float
    observed_disagreement: float
    expected_disagreement: float
    n_pairable: int
    coincidences: CoincidenceMatrix
    undefined: bool = False
    note: str = ""
    per_coder_counts: dict[str, dict[str, int]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "observed_disagreement": self.observed_disagreement,
            "expected_disagreement": self.expected_disagreement,
            "n_pairable": self.n_pairable,
            "undefined": self.undefined,
            "note": self.note,
            "labels": list(self.coincidences.labels),
            "per_coder_counts": self.per_coder_counts,
        }


def krippendorff_alpha_nominal(data: ReliabilityData) -> AlphaReport:
    """Nominal-difference alpha; De = 0 reports +1 flagged as undefined."""
    co = coincidence_matrix(data)
    n = co.n_pairable
    off_diagonal = float(co.matrix.sum() - np.trace(co.matrix))
    do = off_diagonal / n
    freq = co.matrix.sum(axis=1)
    de = float(n * n - np.dot(freq, freq)) / (n * (n - 1.0))
    counts = {
        coder: _label_counts(data, coder)
        for coder in data.coders
    }
    if de == 0.0:
        return AlphaReport(
            alpha=1.0,
            observed_disagreement=do,
            expected_disagreement=de,
            n_pairable=round(n),
            coincidences=co,
            undefined=True,
            note="expected disagreement is zero (a single label everywhere); "
            "alpha reported as +1 by convention",
            per_coder_counts=counts,
        )
    return AlphaReport(
        alpha=1.0 - do / de,
        observed_disagreement=do,
        expected_disagreement=de,
        n_pairable=round(n),
        coincidences=co,
        per_coder_counts=counts,
    )


def _label_counts(data: ReliabilityData, coder: str) -> dict[str, int]:
    counts: dict[str, int] = {}
    for unit in data.units:
        label = data.values.get((unit, coder))
        if label is not None:
            counts[label] = counts.get(label, 0) + 1
    return counts


def format_table(report: AlphaReport) -> str:
    """Aligned per-coder category counts with the alpha in the last column."""
    labels = list(report.coincidences.labels)
    headers = ["Coder"] + labels + ["Alpha"]
    rows: list[list[str]] = []
    coders = sorted(report.per_coder_counts)
    for i, coder in enumerate(coders):
        counts = report.per_coder_counts[coder]
        alpha_cell = f"{report.alpha:.4f}" if i == 0 else ""
        if report.undefined and i == 0:
            alpha_cell += " (undefined)"
        rows.append([coder] + [str(counts.get(label, 0)) for label in labels] + [alpha_cell])
    widths = [max(len(headers[c]), *(len(r[c]) for r in rows)) if rows else len(headers[c])
              for c in range(len(headers))]
    def fmt(cells):
        return "  ".join(cell.ljust(w) for cell, w in zip(cells, widths)).rstrip()
    lines = [fmt(headers), fmt(["-" * w for w in widths])]
    lines.extend(fmt(r) for r in rows)
    return "\n".join(lines) + "\n"
