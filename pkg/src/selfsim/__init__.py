"""Self-similar solutions of model degenerate PDEs.

Submodules
----------
hyperfun
    pFq, Psi2 and Kampe de Feriet series, parameter-shift derivatives and
    the double-integral form of 3F2.
families
    The six PDE families, their similarity variables and solution branches.
verify
    Finite-difference and reduced-equation residual checks.
cli
    ``selfsim`` command-line front-end.
"""

from .errors import ConvergenceError, DomainError
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "ConvergenceError", "DomainError", "__version__"]
