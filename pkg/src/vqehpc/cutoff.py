"""Pick a Hamiltonian retention fraction on a small problem, then carry it to a large one.

Naming: ``retained_fraction`` is the share of terms kept; ``cutoff_ratio``
is ``1 - retained_fraction``, the share removed.  Reports carry both.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .pauli import QubitHamiltonian, retain_fraction, retained_count

# retained fractions scanned, as tenths to keep the arithmetic exact
_TENTHS = range(10, 0, -1)


class CutoffScanError(RuntimeError):
    def __init__(self, message: str, report: "CutoffScanReport"):
        super().__init__(message)
        self.report = report


class FractionNotRealizable(ValueError):
    pass


@dataclass(frozen=True)
class ScanRow:
    retained_fraction: float
    terms: int
    energy: float
    abs_error: float
    rel_error: float

    @property
    def cutoff_ratio(self) -> float:
        return round(1.0 - self.retained_fraction, 10)


@dataclass
class CutoffScanReport:
    rows: list[ScanRow] = field(default_factory=list)
    recommended_fraction: float | None = None
    recommended_th1: float | None = None

    @property
    def recommended_cutoff_ratio(self) -> float | None:
        if self.recommended_fraction is None:
            return None
        return round(1.0 - self.recommended_fraction, 10)


def error_report(e_cut: float, e_full: float) -> tuple[float, float]:
    """``(|e_cut - e_full|, |e_cut - e_full| / |e_full|)``."""
    diff = abs(e_cut - e_full)
    if e_full == 0:
        raise ZeroDivisionError("relative error undefined for a zero reference energy")
    return diff, diff / abs(e_full)


def cutoff_scan(
    h_small: QubitHamiltonian,
    vqe_runner: Callable[[QubitHamiltonian], float],
    delta_e: float,
    h_large: QubitHamiltonian | None = None,
) -> CutoffScanReport:
    """Scan retained fractions 1.0, 0.9, ..., 0.1 and stop at the first error >= ``delta_e``.

    The recommendation is the last fraction that stayed within ``delta_e``
    (one step above the failing one), or 0.1 when none fails.  ``h_small``
    must already be sorted.  With ``h_large`` the recommendation is also
    turned into a concrete threshold for it, rounding up to the end of a run
    of equal magnitudes when the exact count is not realizable.
    """
    if delta_e <= 0:
        raise ValueError("delta_e must be positive")
    report = CutoffScanReport()
    e_full = None
    recommended = 0.1
    for tenths in _TENTHS:
        ratio = tenths / 10
        h = retain_fraction(h_small, ratio)
        try:
            e = float(vqe_runner(h))
        except Exception as exc:
            raise CutoffScanError(f"VQE failed at retained fraction {ratio}: {exc}", report) from exc
        if e_full is None:
            e_full = e
        abs_err = abs(e - e_full)
        rel_err = abs_err / abs(e_full) if e_full else float("nan")
        report.rows.append(ScanRow(ratio, len(h), e, abs_err, rel_err))
        if abs_err >= delta_e:
            recommended = (tenths + 1) / 10
            break
    report.recommended_fraction = recommended
    if h_large is not None:
        report.recommended_th1 = threshold_for_fraction(h_large, recommended, round_up=True)
    return report


def threshold_for_fraction(h_large: QubitHamiltonian, retained_fraction: float, round_up: bool = False) -> float:
    """Th1 keeping exactly the leading ``round_half_up(N·fraction)`` terms of a sorted Hamiltonian.

    When that count splits a run of equal magnitudes the fraction cannot be
    hit exactly; ``round_up`` then keeps the whole run instead of raising.
    """
    if not 0.0 < retained_fraction <= 1.0:
        raise ValueError(f"fraction {retained_fraction} outside (0, 1]")
    n = len(h_large.terms)
    if retained_fraction == 1.0:
        return 0.0
    k = retained_count(n, retained_fraction)
    if k == 0:
        raise FractionNotRealizable(f"fraction {retained_fraction} of {n} terms keeps nothing")
    if k >= n:
        return 0.0
    hi, lo = abs(h_large.terms[k - 1].weight), abs(h_large.terms[k].weight)
    while round_up and hi == lo:
        k += 1
        if k >= n:
            return 0.0
        hi, lo = lo, abs(h_large.terms[k].weight)
    if hi == lo:
        raise FractionNotRealizable(
            f"fraction not realizable exactly: terms {k} and {k + 1} share |w| = {hi}"
        )
    return (hi + lo) / 2


REPORT_COLUMNS = ["retained_fraction", "cutoff_ratio", "terms", "energy", "abs_error", "rel_error"]


def write_report_csv(report: CutoffScanReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(REPORT_COLUMNS)
        for r in report.rows:
            w.writerow([f"{r.retained_fraction:.1f}", f"{r.cutoff_ratio:.1f}", r.terms,
                        repr(r.energy), repr(r.abs_error), repr(r.rel_error)])
