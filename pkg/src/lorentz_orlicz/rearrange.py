"""Nonincreasing rearrangement of weighted samples."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import accumulate

from .monotone import StepFunction


@dataclass(frozen=True)
class WeightedSamples:
    """Pairs ``(|value|, measure)``; absolute values are taken on ingestion."""

    entries: tuple = ()

    def __post_init__(self):
        clean = []
        for i, (v, m) in enumerate(self.entries):
            v, m = float(v), float(m)
            if not (math.isfinite(v) and math.isfinite(m)):
                raise ValueError(f"entry {i}: values and measures must be finite")
            if not m > 0.0:
                raise ValueError(f"entry {i}: measure must be positive, got {m!r}")
            clean.append((abs(v), m))
        object.__setattr__(self, "entries", tuple(clean))

    @classmethod
    def from_arrays(cls, values, measures):
        values, measures = list(values), list(measures)
        if len(values) != len(measures):
            raise ValueError("values and measures differ in length")
        return cls(tuple(zip(values, measures)))


def rearrange_samples(samples: WeightedSamples) -> StepFunction:
    """Sort by value (descending), merge exact ties, drop zeros.

    Breakpoints are cumulative measures summed in exact rational arithmetic
    and rounded once, so each breakpoint is the correctly rounded measure of
    the corresponding superlevel set.
    """
    merged: dict[float, Fraction] = {}
    for v, m in samples.entries:
        if v > 0.0:
            merged[v] = merged.get(v, Fraction(0)) + Fraction(m)
    values = sorted(merged, reverse=True)
    cums = accumulate(merged[v] for v in values)
    return StepFunction(tuple(float(c) for c in cums), tuple(values))


def rearrange_grid(values, cell_measure: float) -> StepFunction:
    """Rearrangement of samples on a uniform grid with cells of equal measure."""
    if not cell_measure > 0.0:
        raise ValueError(f"cell measure must be positive, got {cell_measure!r}")
    return rearrange_samples(WeightedSamples(tuple((v, cell_measure) for v in values)))
