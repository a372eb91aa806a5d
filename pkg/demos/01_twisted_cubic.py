"""Which curves lie on a quadric?

A set of directions S determines the law of a bounded random vector from
its one-dimensional projections unless S sits inside the zero set of a
nonzero homogeneous polynomial. This walk-through looks for such
polynomials on a few curves.
"""
from fractions import Fraction

from forge.detset import CurveSpec, find_vanishing_polynomial, holdout_grid, sample_curve

# The moment curve y -> (1, y, y^2, y^3) is the twisted cubic.
curve = CurveSpec.moment_curve(4)
rep = find_vanishing_polynomial(curve, l_max=2, mode="exact")
print("moment curve:", rep.verdict, "degree", rep.degree)
print("  witness:", rep.witness)
print("  all kernel elements:", *rep.witnesses, sep="\n    ")

# exact check on fresh rational points
held = holdout_grid(curve, 2, n=10)
print("  values on held-out points:", [rep.witness(*row) for row in sample_curve(curve, held)])

# Laplace transforms of point masses at 0,1,2,3 are the same curve in y = exp(-s)
lap = find_vanishing_polynomial(CurveSpec.laplace_atoms([0, 1, 2, 3]), 2)
print("laplace atoms 0..3:", lap.verdict, lap.witness)

# irrational spacing breaks every low-degree relation
irr = find_vanishing_polynomial(CurveSpec.laplace_atoms([0, 1, 2 ** 0.5]), 3)
print("laplace atoms 0,1,sqrt2:", irr.verdict)
for k, r in irr.residuals.items():
    print(f"  degree {k}: kernel {r['kernel_dim']}, sigma_min/sigma_max {r.get('sigma_min_rel', float('nan')):.2e}")

# powers of 2 collide: 1*8 = 2*4
pw = find_vanishing_polynomial(CurveSpec.power_curve([1, 2, 4, 8]), 2, mode="exact")
print("power curve {1,2,4,8}:", pw.witness)
print("check at y = 3/2:", pw.witness(*[Fraction(3, 2) ** a for a in (1, 2, 4, 8)]))
