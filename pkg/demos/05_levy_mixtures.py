"""Mixtures of Lévy processes.

Brownian mixtures are separated by the joint transform of (drift,
variance), which the marginals at all times determine. Mixtures of
Poisson-type processes inherit the counterexample on {0,1,2,3} through the
bridge w -> sum_j w_j delta_{a_j}.
"""
import numpy as np

from forge.levymix import (
    LevyMixing,
    LisppSpec,
    bm_hybrid_transform,
    empirical_chf,
    hybrid_separation,
    mixture_marginal_chf,
    normal_mixture_Sn_chf,
    sample_marginal,
    simulate_path,
)

a = LevyMixing.bm([(0, 1), (0, 3)], [0.5, 0.5])
b = LevyMixing.bm([(0, 2)], [1.0])
print("hybrid transform separation:", hybrid_separation(a, b))
print("transform at u=0:", np.round(bm_hybrid_transform(a, [0.0], [0, 1, 2])[0].real, 4),
      np.round(bm_hybrid_transform(b, [0.0], [0, 1, 2])[0].real, 4))
print("S_2 chf at t=1:", normal_mixture_Sn_chf(a, 2, 1.0), normal_mixture_Sn_chf(b, 2, 1.0))

spec = LisppSpec((1.0, 2.0), (0.8, 0.3))
tr = spec.to_triple()
times, values, jumps = simulate_path(tr, 5.0, seed=1)
print(f"path: {len(jumps)} jumps, X_5 = {values[-1]:.3f}")

mix = LevyMixing.from_lispp([spec, LisppSpec((0.5,), (2.0,))], [0.4, 0.6])
xs = sample_marginal(mix, 1.0, 100_000, seed=2)
u = np.linspace(-3, 3, 7)
print("chf gap (simulated vs exact):", np.abs(empirical_chf(xs, u) - mixture_marginal_chf(mix, 1.0, u)).max())
