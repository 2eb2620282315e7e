"""Error-transparency classification of collapse operators.

A jump J is transparent to the static interaction H0 when [H0, J] = J * H_A
for some operator H_A commuting with H0: the jump then commutes with the
evolution up to a pure phase factor on the carrier, so it never scrambles
the encoded state.
"""

from __future__ import annotations

import dataclasses
from typing import Optional, Sequence

import numpy as np

from ..device import JumpOp
from ..hilbert import Op


@dataclasses.dataclass(frozen=True)
class TransparencyReport:
    label: str
    classification: str  # "commutes" | "transparent" | "violation"
    h_a: Optional[np.ndarray]
    residual: float

    def describe(self) -> str:
        return f"{self.label}: {self.classification} (relative residual {self.residual:.2e})"


def check_error_transparency(h0: Op, jump_ops: Sequence[JumpOp],
                             tol: float = 1e-9) -> list[TransparencyReport]:
    """Classify each jump operator against [H0, J] = J H_A.

    H_A is recovered by least squares (pseudo-inverse); a jump is transparent
    when the factorization residual is below tol (relative to |[H0, J]|) and
    the recovered H_A commutes with H0.
    """
    h = h0.matrix
    scale = max(float(np.max(np.abs(h))), 1e-300)
    reports = []
    for jump in jump_ops:
        j = jump.op.matrix
        comm = h @ j - j @ h
        comm_norm = float(np.linalg.norm(comm))
        if comm_norm <= 1e-12 * scale * max(np.linalg.norm(j), 1.0):
            reports.append(TransparencyReport(jump.label, "commutes", None, 0.0))
            continue
        h_a = np.linalg.pinv(j) @ comm
        residual = float(np.linalg.norm(j @ h_a - comm) / comm_norm)
        h0_ha = float(np.linalg.norm(h @ h_a - h_a @ h) / (scale * max(np.linalg.norm(h_a), 1e-300)))
        if residual < tol and h0_ha < tol:
            reports.append(TransparencyReport(jump.label, "transparent", h_a, residual))
        else:
            reports.append(TransparencyReport(jump.label, "violation", h_a, residual))
    return reports
