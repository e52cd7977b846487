"""Verdict values shared by the certificate, the fast path and the recognizer."""

from __future__ import annotations

from dataclasses import dataclass, field

from .solver import AlphaSet

NOT_AFFINE = "NotAffineEquivalent"
CONDITIONAL = "AffineEquivalentConditional"
INCONCLUSIVE = "Inconclusive"

CONVEXITY_HYPOTHESIS = (
    "Both polyhedra are assumed strictly convex and closed; "
    "a development alone cannot certify this."
)


@dataclass(frozen=True)
class Verdict:
    kind: str
    alpha_intersection: AlphaSet = field(default_factory=lambda: AlphaSet((), False))
    evidence: tuple = ()
    stage: str = ""
    detail: dict = field(default_factory=dict, compare=False)
    timings: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in (NOT_AFFINE, CONDITIONAL, INCONCLUSIVE):
            raise ValueError(f"unknown verdict kind {self.kind!r}")

    @property
    def not_affine(self):
        return self.kind == NOT_AFFINE
