"""The form Omega, its calculus, and the moment condition on a dressing orbit."""
import numpy as np

from plcheck.forms import contraction_residual, ext_deriv_residual, omega1_eval, omega1_series, omega_eval
from plcheck.lie_su import PoissonParams, random_cartan_form, random_su
from plcheck.orbits import dressing_form_matrix, dressing_point, form_rank, moment_terms_poisson

rng = np.random.default_rng(1)
n = 3
params = PoissonParams.generic(0.7, random_cartan_form(rng, n))
a, X, Y, Z, eps = (random_su(rng, n) for _ in range(5))

# closed form against the commutator series
print("omega1 closed form:", omega1_eval(a, X, Y, params.t))
print("omega1 series     :", omega1_series(a, X, Y, params.t, kmax=80))

form = lambda b, U, V: omega_eval(b, U, V, params)  # noqa: E731
for step in (4e-2, 2e-2, 1e-2):
    print(f"|d Omega| at step {step:.0e}:", ext_deriv_residual(form, a, X, Y, Z, step))
print("contraction residual:", contraction_residual(a, eps, X, params))

# on the orbit through a, both sides of the moment condition
x = dressing_point(a, params)
lhs, rhs = moment_terms_poisson(x, eps, x.tangent_basis[0], params)
print(f"w(X, v_eps) = {lhs:.12f}   k(X, eps)/t = {rhs:.12f}")

W = dressing_form_matrix(x, x.tangent_basis, params)
rank, smin = form_rank(W)
print(f"form rank {rank} on a {len(x.tangent_basis)}-dimensional orbit, smallest singular value {smin:.3f}")
