"""Numerical toolkit for the weak symplectic form on the loop space of R^n.

Loops are sampled on a uniform periodic grid; the loop form
Omega(X, Y) = int omega_{gamma(t)}(X(t), Y(t)) dt is evaluated by the
periodic trapezoid rule.  Submodules:

``loopcore``  grids, tangent fields, quadrature, Fourier probes
``baseform``  2-forms on R^n and builtin catalog
``moser``     Moser/Darboux isotopies with variational Jacobians
``lift``      loop-space lifts of forms, isotopies, functions, J
``verify``    numerical certificates and convergence studies
``cli``       scenario runner
"""

from .errors import DegenerateFormError, DomainError, PartitionError
from .loopcore import FourierBasis, LoopGrid, TangentField, fourier_basis, quad_integral, sample_curve
from .baseform import AlmostComplexStructure, FormField, builtin_form
from .moser import FormFamily, IsotopyFlow, builtin_family, integrate_flow
from .lift import LiftedFunction, LiftedIsotopy, omega_loop
from .reports import VerificationReport

__version__ = "0.1.0"

__all__ = [
    "AlmostComplexStructure", "DegenerateFormError", "DomainError", "FormFamily", "FormField",
    "FourierBasis", "IsotopyFlow", "LiftedFunction", "LiftedIsotopy", "LoopGrid", "PartitionError",
    "TangentField", "VerificationReport", "builtin_family", "builtin_form", "fourier_basis",
    "integrate_flow", "omega_loop", "quad_integral", "sample_curve",
]
