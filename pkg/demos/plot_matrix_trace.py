"""
Watching the matrix fill in
===========================

The literal matrix procedure on a three-rule net: X marks rule inputs,
Y marks outputs, Z known values, W the target, and the last column holds
1 (ready) or 2 (fired).
"""

from pathlib import Path

from mivarnet import Query, load_net, render_trace, run_inference, trace_matrix

kb = Path(__file__).resolve().parent.parent / "tests" / "data" / "worked_example.xml"
net, _ = load_net(kb)
query = Query({"P1": 1, "P2": 2, "P3": 3}, {"P6"})

trace = trace_matrix(net, query)
print(render_trace(trace))

# The queue-based engine fires the same rules in the same order
assert run_inference(net, query).ids == trace.fired

# Snapshots are plain tuples, handy for inspecting a single cell
last = trace.snapshots[-1]
print("service row:", "".join(c.value for c in last.service_row))
