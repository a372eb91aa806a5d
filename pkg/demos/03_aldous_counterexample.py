"""Exchangeable sequences on {0,1,2,3} with equal partial sums but different mixing laws.

The Fourier pair for the twisted-cubic conic is atomized, mapped into the
order simplex and telescoped into probability vectors. The two resulting
mixing measures give identical laws for every partial sum S_n, yet their
weight laws differ at degree four. Takes under a minute.
"""
import time

from forge.pipelines import PipelineConfig, run_pipeline

t0 = time.perf_counter()
res = run_pipeline(PipelineConfig("counterexample-0123"))
print(f"status {res.status} in {time.perf_counter() - t0:.0f}s")
for c in res.checks:
    mark = "ok " if c["passed"] else "!! "
    print(f"  {mark}{c['name']}: {c['value']:.3e} ({c['relation']} {c['tolerance']:g})")

r = res.results
print("components:", r["components"])
print("TV between S_n laws:")
for n, v in r["tv_by_n"].items():
    print(f"  n={n:>2}: {v:.2e}")
mc = r["moment_comparison"]
print("largest mixed-moment gap by degree:")
for k, v in mc["max_gap_by_degree"].items():
    print(f"  degree {k:>2}: {v:.2e}")
print("first distinguishing degree:", mc["first_distinguishing_degree"], mc["distinguishing_moment"])
# gaps of degree <= 3 are forced to vanish by the p^2 factor, so the
# degree <= 2 check above cannot pass for this construction
