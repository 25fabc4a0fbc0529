"""
Angles of a triangle
====================

Three rules, each computing one angle from the other two.
Ask for one angle, then ask a question the net cannot answer.
"""

from pathlib import Path

from mivarnet import MissingData, Query, load_net, solve

kb = Path(__file__).resolve().parent.parent / "tests" / "data" / "triangle.xml"
net, meta = load_net(kb)
print(net, meta)

# Two angles known, the third is one rule away
result = solve(net, Query({"P2": 60, "P3": 60}, {"P1"}))
print("path:", result.path.ids)
print("P1 =", result.bindings["P1"])
print(result.stats)

# With a single angle every rule still lacks an input
try:
    solve(net, Query({"P1": 10}, {"P3"}))
except MissingData as e:
    print("unreached:", sorted(e.unreached_targets))
    print("blocked rules:", sorted(e.frontier))
