"""
Knowledge-base files and solution graphs
========================================

Round-trip a net through XML and TSV, then draw the rules that were
actually needed as a Graphviz DOT graph.
"""

import io
import tempfile
from pathlib import Path

from mivarnet import export_dot, generate_chain, parse_kb, prune_path, read_tsv, run_inference, standard_query, write_kb, write_tsv

net = generate_chain(6)

xml = write_kb(net)
print(xml.splitlines()[3])
again, meta = parse_kb(xml)
print("xml round trip:", again == net, meta)

buf = io.StringIO()
write_tsv(net, buf)
buf.seek(0)
print("tsv round trip:", read_tsv(buf) == net)

query = standard_query(6)
path = prune_path(net, run_inference(net, query), query)
dot = export_dot(net, path, query)

out = Path(tempfile.gettempdir()) / "chain6.dot"
out.write_text(dot)
print(dot)
print("render with: dot -Tpng", out)
