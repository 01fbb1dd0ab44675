"""Report record shared by the LP and projection-based feasibility tests."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
INCONCLUSIVE = "inconclusive"
CERTIFIED_INFEASIBLE = "certified-infeasible"


@dataclass
class FeasibilityReport:
    """Outcome of a feasibility run.

    ``blocks`` holds witness matrices (separability) or branch tables
    (causal membership) when feasible. ``margin`` is the float-mode LP
    infeasibility measured by the phase-1 optimum, which equals the value
    of the dual (Farkas) certificate.
    """

    status: str
    residual: float = 0.0
    blocks: dict[str, np.ndarray] = field(default_factory=dict, repr=False)
    certificate: dict[str, Any] | None = None
    margin: float | None = None
    exact: bool = False
    iterations: int = 0
    history: list[float] = field(default_factory=list, repr=False)
    detail: dict[str, Any] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.status == FEASIBLE

    def __bool__(self):
        return self.feasible

    def to_dict(self, include_blocks: bool = True) -> dict:
        out: dict[str, Any] = {"status": self.status, "residual": float(self.residual),
                               "iterations": self.iterations, "exact": self.exact}
        if self.margin is not None:
            out["violated_margin"] = float(self.margin)
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.detail:
            out["detail"] = self.detail
        if include_blocks and self.blocks:
            out["witness"] = {k: _jsonable(v) for k, v in self.blocks.items()}
        return out


def _jsonable(a):
    a = np.asarray(a)
    if a.dtype == object:
        return [_jsonable(x) for x in a] if a.ndim else str(a.item())
    if np.iscomplexobj(a):
        return {"re": a.real.tolist(), "im": a.imag.tolist()}
    return a.tolist()


def fraction_str(v) -> str:
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
