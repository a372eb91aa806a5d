"""Arithmetic of atom sets: coprime exponents, collisions, irrational atoms.

For atoms in a power curve y -> (y^a_j) a degree-l form vanishes on the
curve only if two monomials collide. Pairwise coprime exponents avoid
collisions; {1,2,4,8} does not. With rationally independent atoms the
multinomial identity can be inverted to recover all mixed moments.
"""
import math

import numpy as np

from forge.detset import coprime_certificate, phi_dimension_count, smallest_guaranteed_diagonal
from forge.exchangeable import exact_partial_sum_law, mixed_moments, recover_mixed_moments
from forge.simplexmap import AtomCloud, MixingMeasure

for l in range(1, 5):
    rep = coprime_certificate([2, 3, 5], l)
    print(f"{{2,3,5}} l={l}: {rep.verdict}, rank {rep.residuals['vandermonde_rank']}/{rep.residuals['basis_size']}")
rep = coprime_certificate([1, 2, 4, 8], 2)
print("{1,2,4,8} l=2:", rep.verdict, rep.witnesses)

# counting argument for the characteristic-function variety
for n in (15, 16):
    c = phi_dimension_count(n, n)
    print(f"N=l={n}: domain {c.dim_domain:,} codomain {c.dim_codomain:,} kernel forced: {c.kernel_guaranteed}")
print("smallest forced diagonal:", smallest_guaranteed_diagonal())

# recovery with atoms 1, sqrt2, sqrt3
atoms = [1.0, math.sqrt(2), math.sqrt(3)]
rng = np.random.default_rng(3)
th = MixingMeasure(atoms, AtomCloud(rng.dirichlet(np.ones(3), size=5), np.full(5, 0.2)))
laws = {n: exact_partial_sum_law(th, n) for n in range(1, 7)}
rec = recover_mixed_moments(laws, atoms, 6)
print("recovery error up to degree 6:", rec.max_abs_difference(mixed_moments(th, 6)))
