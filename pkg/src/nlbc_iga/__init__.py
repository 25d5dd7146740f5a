"""Isogeometric Poisson solver with nonlocal boundary conditions on NURBS domains."""
from .assembly import (IMPOSITIONS, AssembledSystem, Discretization, MethodConfig, ProblemSpec,
                       build_system, dump_system, load_dump)
from .errors import (ConfigurationError, ConvergenceError, DomainError, NlbcError, NumericError,
                     OutOfDomainError, SingularSystemError)
from .functionals import Discrete, DiscreteField, Integral, Mollified, NonlocalFunctional, Zero
from .geometry import BoundarySpec, GeometryMap, build_quarter_ring, k_refine, pull_back
from .kernels import BACKEND
from .linsolve import SolveReport, solve_and_report
from .splines import KnotVector, NurbsBasis2D
from .study import CaseId, StudyResult, StudyRow, solve_case

__version__ = "0.1.0"

__all__ = [
    "AssembledSystem", "BACKEND", "BoundarySpec", "CaseId", "ConfigurationError", "ConvergenceError",
    "Discrete", "DiscreteField", "Discretization", "DomainError", "GeometryMap", "IMPOSITIONS",
    "Integral", "KnotVector", "MethodConfig", "Mollified", "NlbcError", "NonlocalFunctional",
    "NumericError", "NurbsBasis2D", "OutOfDomainError", "ProblemSpec", "SingularSystemError",
    "SolveReport", "StudyResult", "StudyRow", "Zero", "build_quarter_ring", "build_system",
    "dump_system", "k_refine", "load_dump", "pull_back", "solve_and_report", "solve_case",
    "__version__",
]
