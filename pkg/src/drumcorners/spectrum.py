"""Spectrum container shared by the eigen-solvers and the trace fits."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError

CLOSED_FORM = "closed_form"
ROOT_FINDING = "root_finding"
FEM = "fem"


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Sorted eigenvalues; every eigenvalue ``<= cutoff`` is present.

    ``cutoff`` may be ``None`` when completeness is unknown (e.g. a spectrum
    read from a file), in which case the largest eigenvalue is used.
    """

    eigenvalues: np.ndarray
    cutoff: float | None = None
    source: str = CLOSED_FORM
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ev = np.sort(np.asarray(self.eigenvalues, dtype=float).ravel())
        if ev.size and ev[0] < -1e-9 * max(1.0, abs(ev[-1])):
            raise ValidationError("eigenvalues must be nonnegative")
        ev = np.maximum(ev, 0.0)
        object.__setattr__(self, "eigenvalues", ev)
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", float(ev[-1]) if ev.size else 0.0)

    def __len__(self):
        return self.eigenvalues.size

    def counting(self, lam) -> int:
        return int(np.searchsorted(self.eigenvalues, lam, side="right"))

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("lambda\n")
        for v in self.eigenvalues:
            buf.write(f"{float(v)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, source="file") -> "Spectrum":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:1] != ["lambda"]:
            raise ParseError("spectrum CSV needs a 'lambda' header")
        try:
            vals = [float(r[0]) for r in rows[1:] if r and r[0].strip()]
        except ValueError as exc:
            raise ParseError(f"bad eigenvalue: {exc}") from None
        if any(not math.isfinite(v) for v in vals):
            raise ParseError("non-finite eigenvalue")
        return cls(np.array(vals), None, source)
