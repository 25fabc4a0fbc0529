"""
Linear scaling on chain nets
============================

A chain of n objects gets three rules per consecutive triple
(c = a + b and both inverses). Solving P1 = P2 = 10 for the last object
needs n - 2 of them. Time grows with n, and the log-log slope tells by how much.
"""

import sys

import numpy as np

from mivarnet import fit_scaling, generate_chain, run_benchmark, solve, standard_query

net = generate_chain(12)
result = solve(net, standard_query(12))
print(len(result.path), "rules fired after pruning")
print([result.bindings[f"P{i}"] for i in range(1, 13)])

# Pass a larger top size on the command line, e.g. 1e6 (takes a few seconds per repeat)
top = int(float(sys.argv[1])) if len(sys.argv) > 1 else 10**5
sizes = np.unique(np.logspace(3, np.log10(top), 5).astype(int))
records = run_benchmark(sizes, repeats=3, progress=lambda r: print(f"n={r.n_objects:>8} {r.solve_ms:9.2f} ms"))

fit = fit_scaling(records)
print(f"slope {fit.slope:.3f}, r2 {fit.r2:.4f}")

ms_per_object = np.array([r.solve_ms / r.n_objects for r in records])
print("ms per object:", np.round(ms_per_object * 1000, 2), "(x 1e-3)")
