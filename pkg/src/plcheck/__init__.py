"""Numerical checks for Poisson-Lie and Hamiltonian actions of SU(n).

Submodules
----------
cmatrix     dense complex kernels, factorizations, finite differences
lie_su      su(n) bases, Killing form, Cartan forms and parameters
dual_group  the dual group, the maps f, j, e and the dressing action
forms       the two-forms Omega, their primitive and residual checks
orbits      coadjoint and dressing orbits with their symplectic forms
gw_flow     the deformation flow between the two orbit structures
harness     seeded verification suites and reports
"""
__version__ = "0.1.0"

from .errors import PLCheckError  # noqa: E402,F401
from .lie_su import CartanForm, CoalgebraVector, PoissonParams  # noqa: E402,F401
