"""Min-length least squares for strongly over- or under-determined systems,
preconditioned by a random normal projection."""

from ._parallel import get_workers, set_workers
from .gauss import GaussianSource, fill_gaussian
from .krylov import IterationStats, chebyshev, cs_loop_bound, lsqr
from .lab import Problem, ProblemSpec, gen_problem, measure_kappa, minlen_oracle
from .linop import (
    CSR,
    Adjoint,
    ColScaled,
    Dense,
    DimensionError,
    HCat,
    LinearOperator,
    PrecondComposed,
    VStack,
    aslinop,
    identity,
)
from .mmio import ParseError, read_matrix, read_vector, write_matrix, write_vector
from .precond import Preconditioner, SigmaBounds, default_alpha, factor_sketch, kappa_bound, sigma_bounds
from .sketch import SketchResult, sample_count, sketch
from .solver import SolveOptions, SolveReport, iteration_bound, solve, solve_with_sketch
from .tikhonov import RidgeSpec, solve_ridge, solve_ridge_path

__version__ = "0.1.0"
