"""Maurer machines, basic thread algebra and strict load/store instruction set architectures."""

from .bignat import BigNat
from .bta import ThreadHandle, bisimilar, format_thread, linearize, parse_thread, project, residuals
from .execution import Computation, Executor, Status, apply_thread, computation
from .isa import IsaParams, LsIsa, build_isa, format_isa, parse_isa
from .machine import UNDEF, Element, MaurerMachine, Verdict
from .reduce import reduce_instruction_set, reduce_to_zero, verify_reduction_equivalence
from .tpfc import (
    ExtTransformation, TpfcParams, count_transformations, incompleteness_check,
    synthesize_complete, verify_membership,
)

__version__ = "0.1.0"
