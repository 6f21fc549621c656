"""A small kernel for higher inductive types with a finite-set evaluator."""
from . import syntax_core, typechecker

__version__ = "0.1.0"
__all__ = ["syntax_core", "typechecker", "__version__"]
