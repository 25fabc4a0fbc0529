"""Knowledge-base files: the XML object/rule format, a line-oriented TSV
sibling for very large generated nets, and DOT export of solution graphs.

XML shape (the container and its entries are both spelled ``parametr``)::

    <?xml version="1.0" encoding="UTF-8" ?>
    <root>
    <parametr>
    <parametr id="P1" value="0.0" description="..." />
    </parametr>
    <rules>
    <rule id="R1" resultId="P1" initId="P2,P3" value="180-P2-P3" description="..." />
    </rules>
    <metadata>
    <idParametr inc="33" />
    <idRule inc="161" />
    </metadata>
    </root>

``initId``, ``resultId`` and a rule's ``value`` are comma-separated; a rule
carries one expression per ``resultId`` entry. A parameter with no stored
value is written ``value=""``.
"""

from __future__ import annotations

import io
import math
import os
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable
from xml.sax.saxutils import quoteattr

from . import expr as _expr
from .errors import KbError, NetError, ParseError, SchemaError, XmlError
from .inference import Query, SolutionPath
from .net import IdTable, MivarNet, Parameter, Rule, build_net, check_rule

__all__ = [
    "KbMetadata",
    "parse_kb",
    "load_kb",
    "write_kb",
    "dump_kb",
    "read_tsv",
    "write_tsv",
    "load_net",
    "save_net",
    "export_dot",
    "TSV_HEADER",
]

TSV_HEADER = "#mivar-tsv 1"
XML_DECLARATION = '<?xml version="1.0" encoding="UTF-8" ?>'

_SUFFIX = re.compile(r"(\d+)$")


@dataclass(frozen=True)
class KbMetadata:
    """Next free numeric suffixes for parameter and rule ids."""

    next_param_inc: int = 0
    next_rule_inc: int = 0

    @staticmethod
    def max_suffix(ids: Iterable[str]) -> int:
        best = 0
        for ident in ids:
            m = _SUFFIX.search(ident)
            if m:
                best = max(best, int(m.group(1)))
        return best

    @classmethod
    def for_net(cls, net: MivarNet) -> KbMetadata:
        return cls(cls.max_suffix(net.param_ids), cls.max_suffix(net.rule_ids))

    def check(self, net: MivarNet) -> list[str]:
        problems = []
        if self.next_param_inc < self.max_suffix(net.param_ids):
            problems.append(f"idParametr inc={self.next_param_inc} is below the largest parameter id suffix")
        if self.next_rule_inc < self.max_suffix(net.rule_ids):
            problems.append(f"idRule inc={self.next_rule_inc} is below the largest rule id suffix")
        return problems


def _split_ids(text: str) -> tuple[str, ...]:
    return tuple(part.strip() for part in text.split(",")) if text.strip() else ()


def _parse_value(text: str, path: str) -> float | None:
    if not text.strip():
        return None
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(f"value {text!r} is not a number", path) from None
    if not math.isfinite(value):
        raise SchemaError(f"value {text!r} is not finite", path)
    return value


def _parse_exprs(text: str, path: str) -> tuple[_expr.Expr, ...]:
    out = []
    for part in text.split(","):
        try:
            out.append(_expr.parse(part))
        except ParseError as e:
            raise SchemaError(f"bad expression: {e}", path) from e
    return tuple(out)


def _attr(elem, name: str, path: str) -> str:
    value = elem.get(name)
    if value is None:
        raise SchemaError(f"missing attribute {name!r}", path)
    return value


def _int_attr(elem, name: str, path: str) -> int:
    text = _attr(elem, name, path)
    try:
        return int(text)
    except ValueError:
        raise SchemaError(f"attribute {name}={text!r} is not an integer", path) from None


def load_kb(source) -> tuple[MivarNet, KbMetadata]:
    """Read an XML knowledge base from a path or binary file object.

    Parsing is incremental: entries are discarded as soon as they are read,
    so memory stays proportional to the resulting net.
    """
    parameters: list[Parameter] = []
    rules: list[Rule] = []
    rule_paths: list[str] = []
    param_paths: list[str] = []
    meta = {}
    containers: set[str] = set()
    counts = {"parametr": 0, "rule": 0}

    stack: list[str] = []
    container_elem = None
    try:
        for event, elem in ET.iterparse(source, events=("start", "end")):
            tag = elem.tag
            if event == "start":
                stack.append(tag)
                if len(stack) == 1 and tag != "root":
                    raise SchemaError(f"root element must be 'root', found {tag!r}", "/" + tag)
                if len(stack) == 2:
                    container_elem = elem
                continue

            depth = len(stack)
            if depth == 3:
                parent = stack[1]
                if parent == "parametr" and tag == "parametr":
                    counts["parametr"] += 1
                    path = f"/root/parametr/parametr[{counts['parametr']}]"
                    pid = _attr(elem, "id", path).strip()
                    value = _parse_value(_attr(elem, "value", path), path)
                    parameters.append(Parameter(pid, _attr(elem, "description", path), value))
                    param_paths.append(path)
                elif parent == "rules" and tag == "rule":
                    counts["rule"] += 1
                    path = f"/root/rules/rule[{counts['rule']}]"
                    rid = _attr(elem, "id", path).strip()
                    outputs = _split_ids(_attr(elem, "resultId", path))
                    inputs = _split_ids(_attr(elem, "initId", path))
                    exprs = _parse_exprs(_attr(elem, "value", path), path)
                    rules.append(Rule(rid, inputs, outputs, exprs, _attr(elem, "description", path)))
                    rule_paths.append(path)
                elif parent == "metadata" and tag in ("idParametr", "idRule"):
                    meta[tag] = _int_attr(elem, "inc", f"/root/metadata/{tag}")
                if container_elem is not None:
                    container_elem.clear()
            elif depth == 2:
                containers.add(tag)
                elem.clear()
            stack.pop()
    except ET.ParseError as e:
        raise XmlError(f"malformed XML: {e}") from e

    for name in ("parametr", "rules", "metadata"):
        if name not in containers:
            raise SchemaError(f"missing element <{name}>", "/root")
    for name in ("idParametr", "idRule"):
        if name not in meta:
            raise SchemaError(f"missing element <{name}>", "/root/metadata")

    _check_entries(parameters, param_paths, rules, rule_paths)
    net = build_net(parameters, rules)
    metadata = KbMetadata(meta["idParametr"], meta["idRule"])
    problems = metadata.check(net)
    if problems:
        raise SchemaError(problems[0], "/root/metadata")
    return net, metadata


def _check_entries(parameters, param_paths, rules, rule_paths) -> None:
    """Re-run the net invariants entry by entry so errors carry a location."""
    pids = IdTable(p.id for p in parameters)
    seen = set()
    for p, path in zip(parameters, param_paths):
        if p.id in seen:
            raise SchemaError(f"duplicate parameter id {p.id}", path)
        seen.add(p.id)
    seen = set()
    for r, path in zip(rules, rule_paths):
        if r.id in seen:
            raise SchemaError(f"duplicate rule id {r.id}", path)
        seen.add(r.id)
        try:
            check_rule(r, pids)
        except NetError as e:
            raise SchemaError(str(e), path) from e


def parse_kb(text: str | bytes) -> tuple[MivarNet, KbMetadata]:
    """Parse an XML knowledge-base document held in memory."""
    if isinstance(text, str):
        text = text.encode("utf-8")
    return load_kb(io.BytesIO(text))


def _fmt_value(value: float | None) -> str:
    return "" if value is None else repr(float(value))


def write_kb(net: MivarNet, meta: KbMetadata | None = None, out: IO[str] | None = None) -> str | None:
    """Serialise ``net`` as XML.

    Returns the document text, or writes it to ``out`` and returns ``None``.
    """
    if out is None:
        buf = io.StringIO()
        write_kb(net, meta, buf)
        return buf.getvalue()
    meta = meta or KbMetadata.for_net(net)
    w = out.write
    w(XML_DECLARATION + "\n<root>\n<parametr>\n")
    for i in range(net.n):
        w(
            f"<parametr id={quoteattr(net.param_ids[i])} value={quoteattr(_fmt_value(net.param_values[i]))}"
            f" description={quoteattr(net.param_descriptions[i])} />\n"
        )
    w("</parametr>\n<rules>\n")
    pids = list(net.param_ids)
    for r in range(net.m):
        result = ",".join(pids[p] for p in net.outputs[r])
        init = ",".join(pids[p] for p in net.inputs[r])
        value = ",".join(_expr.to_text(e) for e in net.expressions[r])
        w(
            f"<rule id={quoteattr(net.rule_ids[r])} resultId={quoteattr(result)} initId={quoteattr(init)}"
            f" value={quoteattr(value)} description={quoteattr(net.rule_descriptions[r])} />\n"
        )
    w("</rules>\n<metadata>\n")
    w(f'<idParametr inc="{meta.next_param_inc}" />\n<idRule inc="{meta.next_rule_inc}" />\n')
    w("</metadata>\n</root>\n")
    return None


def dump_kb(net: MivarNet, path, meta: KbMetadata | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_kb(net, meta, fh)


# --- TSV ----------------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPE = re.compile(r"\\(.)")
_NEEDS_ESCAPE = re.compile(r"[\\\t\n\r]")


def _esc(text: str) -> str:
    if not text or not _NEEDS_ESCAPE.search(text):
        return text
    return "".join(_ESCAPES.get(c, c) for c in text)


def _unesc(text: str) -> str:
    if "\\" not in text:
        return text
    table = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}
    return _UNESCAPE.sub(lambda m: table.get(m.group(1), m.group(1)), text)


def write_tsv(net: MivarNet, out: IO[str]) -> None:
    """Write ``net`` in the one-entry-per-line TSV format."""
    w = out.write
    w(TSV_HEADER + "\n")
    pids = list(net.param_ids)
    values, pdesc = net.param_values, net.param_descriptions
    for i in range(net.n):
        w(f"P\t{pids[i]}\t{_fmt_value(values[i])}\t{_esc(pdesc[i])}\n")
    rids, rdesc, exprs = net.rule_ids, net.rule_descriptions, net.expressions
    ioff, itgt = net.inputs._off, net.inputs._tgt
    ooff, otgt = net.outputs._off, net.outputs._tgt
    to_text = _expr.to_text
    lines = []
    for r in range(net.m):
        init = ",".join([pids[itgt[k]] for k in range(ioff[r], ioff[r + 1])])
        result = ",".join([pids[otgt[k]] for k in range(ooff[r], ooff[r + 1])])
        value = ",".join([to_text(e) for e in exprs[r]])
        lines.append(f"R\t{rids[r]}\t{init}\t{result}\t{value}\t{_esc(rdesc[r])}\n")
        if len(lines) >= 65536:
            w("".join(lines))
            lines.clear()
    w("".join(lines))


def read_tsv(lines: Iterable[str]) -> MivarNet:
    """Read a TSV net from an iterable of lines (e.g. an open text file)."""
    it = iter(lines)
    header = next(it, "").rstrip("\r\n")
    if header != TSV_HEADER:
        raise SchemaError(f"expected header {TSV_HEADER!r}, found {header!r}", "line 1")
    parameters, rules, rule_lines = [], [], []
    for lineno, line in enumerate(it, start=2):
        line = line.rstrip("\r\n")
        if not line:
            continue
        fields = line.split("\t")
        where = f"line {lineno}"
        if fields[0] == "P":
            if len(fields) != 4:
                raise SchemaError(f"parameter line needs 4 fields, found {len(fields)}", where)
            parameters.append(Parameter(fields[1], _unesc(fields[3]), _parse_value(fields[2], where)))
        elif fields[0] == "R":
            if len(fields) != 6:
                raise SchemaError(f"rule line needs 6 fields, found {len(fields)}", where)
            exprs = _parse_exprs(fields[4], where)
            rules.append(Rule(fields[1], _split_ids(fields[2]), _split_ids(fields[3]), exprs, _unesc(fields[5])))
            rule_lines.append(where)
        elif not fields[0].startswith("#"):
            raise SchemaError(f"unknown record type {fields[0]!r}", where)
    _check_entries(parameters, ["tsv"] * len(parameters), rules, rule_lines)
    return build_net(parameters, rules)


# --- dispatch -----------------------------------------------------------------


def _detect_format(path: Path) -> str:
    suffix = path.suffix.lower()
    if suffix in (".tsv", ".txt"):
        return "tsv"
    if suffix == ".xml":
        return "xml"
    with open(path, "rb") as fh:
        head = fh.read(len(TSV_HEADER))
    return "tsv" if head == TSV_HEADER.encode() else "xml"


def load_net(path, format: str | None = None) -> tuple[MivarNet, KbMetadata]:
    """Load a net from an XML or TSV file, choosing the reader by extension."""
    path = Path(path)
    format = format or _detect_format(path)
    if format == "xml":
        return load_kb(os.fspath(path))
    if format == "tsv":
        with open(path, encoding="utf-8") as fh:
            net = read_tsv(fh)
        return net, KbMetadata.for_net(net)
    raise KbError(f"unknown format {format!r}")


def save_net(net: MivarNet, path, format: str | None = None, meta: KbMetadata | None = None) -> None:
    path = Path(path)
    format = format or ("tsv" if path.suffix.lower() == ".tsv" else "xml")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if format == "tsv":
            write_tsv(net, fh)
        elif format == "xml":
            write_kb(net, meta, fh)
        else:
            raise KbError(f"unknown format {format!r}")


# --- DOT ----------------------------------------------------------------------


def _dot_id(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(net: MivarNet, solution, query: Query) -> str:
    """Render the solution graph: pink ellipses for parameters, orange boxes
    for rules, GIVEN parameters ranked at the top and targets at the bottom."""
    order = solution.order if isinstance(solution, SolutionPath) else [net.rule_index(r) for r in solution]
    pids, rids = net.param_ids, net.rule_ids

    params = {net.param_index(p) for p in query.given} | {net.param_index(p) for p in query.find}
    edges = []
    for r in order:
        for p in net.inputs[r]:
            params.add(p)
            edges.append((f"p:{pids[p]}", f"r:{rids[r]}"))
        for p in net.outputs[r]:
            params.add(p)
            edges.append((f"r:{rids[r]}", f"p:{pids[p]}"))

    lines = ["digraph mivar {", "  rankdir=TB;", "  node [style=filled];"]
    for p in sorted(params):
        lines.append(f"  {_dot_id('p:' + pids[p])} [label={_dot_id(pids[p])}, shape=ellipse, fillcolor=pink];")
    for r in order:
        lines.append(f"  {_dot_id('r:' + rids[r])} [label={_dot_id(rids[r])}, shape=box, fillcolor=orange];")
    for a, b in edges:
        lines.append(f"  {_dot_id(a)} -> {_dot_id(b)};")
    given = [_dot_id("p:" + p) for p in sorted(query.given, key=net.param_index)]
    find = [_dot_id("p:" + p) for p in sorted(query.find, key=net.param_index)]
    if given:
        lines.append("  { rank=source; " + " ".join(g + ";" for g in given) + " }")
    if find:
        lines.append("  { rank=sink; " + " ".join(f + ";" for f in find) + " }")
    lines.append("}")
    return "\n".join(lines) + "\n"
