"""Complex lattice reduction, flop accounting and lattice-reduction-aided MIMO detection."""

from .costs import CostModel, FlopTally
from .linalg import GsoState, RankError, gso, qr_decompose
from .reduction import (ConvergenceError, ReductionOutput, ReductionParams, clll_reduce,
                        is_clll_reduced, orthogonality_defect, reduce_batch, rlll_reduce)

__all__ = [
    "CostModel", "FlopTally", "GsoState", "RankError", "gso", "qr_decompose",
    "ConvergenceError", "ReductionOutput", "ReductionParams", "clll_reduce",
    "is_clll_reduced", "orthogonality_defect", "reduce_batch", "rlll_reduce",
]
__version__ = "0.1.0"
