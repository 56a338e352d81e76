"""Walk through the map e = f^-1 o j and the dressing action on SU(3)."""
import numpy as np

from plcheck.dual_group import dress, e_inverse, e_map, f_map, j_map
from plcheck.lie_su import PoissonParams, coadjoint_act, random_cartan_form, random_su, random_unitary

rng = np.random.default_rng(0)
n, t = 3, 0.5
u = random_cartan_form(rng, n)
params = PoissonParams.generic(t, u)

a = random_su(rng, n)
A = e_map(a, params)
print("unit upper factor N:\n", np.round(A.nilpotent, 4))
print("Cartan coordinates:", np.round(A.cartan_coord, 4))

# f(A) = A A^H lands on the positive matrix j(a) = exp(2 i t a)
print("|f(e(a)) - j(a)| =", np.linalg.norm(f_map(A) - j_map(a, t)))
print("|e^-1(e(a)) - a| =", np.linalg.norm(e_inverse(A, params).alpha - a))

# dressing by g matches the coadjoint action through e
g = random_unitary(rng, n)
Ag, g_prime = dress(g, A)
ref = e_map(coadjoint_act(g, a), params)
print("|g A - A^g g'| =", np.linalg.norm(g @ A.embedding - Ag.embedding @ g_prime))
print("|A^g - e(Ad*(g) a)| =", np.linalg.norm(Ag.embedding - ref.embedding))
