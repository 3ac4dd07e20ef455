"""Cryptanalysis workbench for a lattice-based PIR scheme.

The package builds honest scheme instances (:mod:`pirbreak.pir`), reduces
q-ary lattices (:mod:`pirbreak.lattice`), runs the windowed attack
(:mod:`pirbreak.attack_lb`) and the binary-search attack
(:mod:`pirbreak.attack_fast`), and evaluates the accompanying bounds
(:mod:`pirbreak.analysis`).
"""

from .attack_fast import run_improved_attack
from .attack_lb import run_original_attack
from .errors import (
    AttackInconclusive,
    ExtractionError,
    GenerationFailure,
    InstanceTooLarge,
    NoEmbeddingVector,
    PirBreakError,
    PrecisionFailure,
    SingularMatrix,
)
from .pir import SchemeParams, derive_params, desk_params, paper_params
from .report import AttackReport

__version__ = "0.1.0"

__all__ = [
    "AttackInconclusive",
    "AttackReport",
    "ExtractionError",
    "GenerationFailure",
    "InstanceTooLarge",
    "NoEmbeddingVector",
    "PirBreakError",
    "PrecisionFailure",
    "SchemeParams",
    "SingularMatrix",
    "derive_params",
    "desk_params",
    "paper_params",
    "run_improved_attack",
    "run_original_attack",
]
