"""Literal matrix form of the inference loop, for small nets.

Rows are rules and columns parameters. Row ``m`` is the service row holding
``Z`` (known), ``W`` (required) and ``z`` (required, now derived); column
``n`` is the service column holding ``1`` (fireable) and ``2`` (fired). After
every launch the rule rows are rescanned top to bottom, which costs O(mn) per
wave; :func:`mivarnet.inference.run_inference` computes the same firing order
in linear time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .errors import TraceTooLarge
from .inference import Query, TieBreak, _param_indices, _relevance_mask
from .net import MivarNet

__all__ = ["CellMark", "MatrixView", "Trace", "trace_matrix", "render_trace", "DEFAULT_CELL_CAP"]

DEFAULT_CELL_CAP = 10**6


class CellMark(str, Enum):
    EMPTY = "."
    X = "X"
    Y = "Y"
    Z = "Z"
    W = "W"
    ZW = "z"
    FIREABLE = "1"
    FIRED = "2"


@dataclass(frozen=True)
class MatrixView:
    """An immutable (m+1) x (n+1) grid of marks."""

    rows: tuple[tuple[CellMark, ...], ...]
    label: str = ""

    @property
    def service_row(self) -> tuple[CellMark, ...]:
        return self.rows[-1][:-1]

    @property
    def service_column(self) -> tuple[CellMark, ...]:
        return tuple(row[-1] for row in self.rows[:-1])

    def cell(self, row: int, col: int) -> CellMark:
        return self.rows[row][col]


@dataclass
class Trace:
    snapshots: list[MatrixView] = field(default_factory=list)
    fired: list[str] = field(default_factory=list)
    success: bool = False
    row_labels: tuple[str, ...] = ()
    col_labels: tuple[str, ...] = ()


def trace_matrix(
    net: MivarNet,
    query: Query,
    policy: TieBreak = TieBreak.FIFO,
    *,
    restrict: bool = False,
    exhaust: bool = False,
    cell_cap: int = DEFAULT_CELL_CAP,
) -> Trace:
    """Run the matrix algorithm step by step, snapshotting every step."""
    n, m = net.n, net.m
    if m * n > cell_cap:
        raise TraceTooLarge(f"{m} x {n} matrix exceeds the {cell_cap}-cell trace cap")
    query.check(net)
    policy = TieBreak(policy)
    relevant = None
    if restrict:
        relevant = _relevance_mask(net, _param_indices(net, query.find), _param_indices(net, query.given))

    E = CellMark
    grid = [[E.EMPTY] * (n + 1) for _ in range(m + 1)]
    for r in range(m):
        for p in net.inputs[r]:
            grid[r][p] = E.X
        for p in net.outputs[r]:
            grid[r][p] = E.Y
    service = grid[m]
    for p in _param_indices(net, query.given):
        service[p] = E.Z
    required = 0
    for p in _param_indices(net, query.find):
        service[p] = E.W
        required += 1

    trace = Trace(row_labels=tuple(net.rule_ids) + ("",), col_labels=tuple(net.param_ids) + ("",))

    def snap(label):
        trace.snapshots.append(MatrixView(tuple(tuple(row) for row in grid), label))

    def scan():
        marked = []
        for r in range(m):
            row = grid[r]
            if row[n] is not E.EMPTY or (relevant is not None and not relevant[r]):
                continue
            if all(service[c] in (E.Z, E.ZW) for c in range(n) if row[c] is E.X):
                row[n] = E.FIREABLE
                marked.append(r)
        return marked

    snap("mark given Z and required W")
    pending: list[int] = []
    if required or exhaust:
        pending = scan()
        if pending:
            snap("mark fireable rules with 1")

    while pending and (required or exhaust):
        if policy is TieBreak.FIFO:
            r = pending.pop(0)
        elif policy is TieBreak.LIFO:
            r = pending.pop()
        else:
            r = min(pending)
            pending.remove(r)
        grid[r][n] = E.FIRED
        trace.fired.append(net.rule_ids[r])
        for c in range(n):
            if grid[r][c] is E.Y:
                if service[c] is E.W:
                    service[c] = E.ZW
                    required -= 1
                elif service[c] is E.EMPTY:
                    service[c] = E.Z
        snap(f"launch {net.rule_ids[r]}, mark it 2")
        if not required and not exhaust:
            break
        new = scan()
        if new:
            pending.extend(new)
            snap("mark fireable rules with 1")

    trace.success = required == 0
    return trace


def render_trace(trace: Trace) -> str:
    """Plain-text dump: one line per matrix row, one character per cell."""
    width = max((len(label) for label in trace.row_labels), default=0)
    width = max(width, 1)
    lines = []
    for i, view in enumerate(trace.snapshots):
        lines.append(f"# {i} {view.label}")
        for label, row in zip(trace.row_labels[:-1] + ("*",), view.rows):
            cells = "".join(c.value for c in row[:-1])
            lines.append(f"{label:<{width}} {cells} {row[-1].value}")
    lines.append(f"# fired: {' '.join(trace.fired) or '-'}")
    lines.append(f"# result: {'solved' if trace.success else 'missing data'}")
    return "\n".join(lines) + "\n"
