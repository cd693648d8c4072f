"""Lorentz spaces L(p, r) as unions of Orlicz type classes, made computable."""

from .construct import ConstructionResult, ConvexifiedPsi, construct_psi, convexify
from .embedding import (
    DyadicDecomposition,
    EmbeddingReport,
    dyadic_decompose,
    dyadic_level,
    embedding_constant,
    level_constant,
    verify_embedding,
)
from .functionals import (
    ConstructedPsi,
    PiecewisePowerPsi,
    PsiPiece,
    calderon_condition,
    condition3_integral,
    lorentz_functional,
    orlicz_modular,
    power_psi,
    psi_power_integral,
    two_power_psi,
)
from .monotone import (
    Exponents,
    FunctionalValue,
    Interval,
    LinearPiece,
    NotMonotone,
    PowerPiece,
    PowerTail,
    RangeViolation,
    StepFunction,
    TailedDecreasingFunction,
    evaluate,
    integrate_power,
    invert,
    make_exponents,
)
from .rearrange import WeightedSamples, rearrange_grid, rearrange_samples

__version__ = "0.1.0"

__all__ = [
    "ConstructedPsi",
    "ConstructionResult",
    "ConvexifiedPsi",
    "DyadicDecomposition",
    "EmbeddingReport",
    "Exponents",
    "FunctionalValue",
    "Interval",
    "LinearPiece",
    "NotMonotone",
    "PiecewisePowerPsi",
    "PowerPiece",
    "PowerTail",
    "PsiPiece",
    "RangeViolation",
    "StepFunction",
    "TailedDecreasingFunction",
    "WeightedSamples",
    "calderon_condition",
    "condition3_integral",
    "construct_psi",
    "convexify",
    "dyadic_decompose",
    "dyadic_level",
    "embedding_constant",
    "evaluate",
    "integrate_power",
    "invert",
    "level_constant",
    "lorentz_functional",
    "make_exponents",
    "orlicz_modular",
    "power_psi",
    "psi_power_integral",
    "rearrange_grid",
    "rearrange_samples",
    "two_power_psi",
    "verify_embedding",
]
