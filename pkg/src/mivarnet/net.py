"""Bipartite object/rule networks.

A :class:`MivarNet` holds two disjoint vertex classes, parameters and rules,
and the edges between them: a rule consumes its input parameters and
produces its output parameters. Edges are stored as compressed sparse rows
(:class:`Adjacency`) over dense integer indices so that nets with millions of
rules stay compact; :class:`Parameter` and :class:`Rule` objects are
materialised on access.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import expr as _expr
from .errors import (
    DuplicateId,
    DuplicateRef,
    EmptyIO,
    ExprCountMismatch,
    ExprVarNotDeclared,
    NetError,
    SelfLoop,
    UnknownParamRef,
)

__all__ = [
    "Parameter",
    "Rule",
    "Adjacency",
    "IdTable",
    "NumberedIds",
    "MivarNet",
    "Violation",
    "build_net",
    "check_rule",
    "validate_net",
]


@dataclass(frozen=True)
class Parameter:
    id: str
    description: str = ""
    value: float | None = None


@dataclass(frozen=True)
class Rule:
    """One production ``inputs => outputs`` with an expression per output.

    Expressions may be given as text; they are parsed on construction.
    """

    id: str
    inputs: tuple[str, ...]
    outputs: tuple[str, ...]
    expressions: tuple[_expr.Expr, ...] = ()
    description: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        exprs = tuple(_expr.parse(e) if isinstance(e, str) else e for e in self.expressions)
        object.__setattr__(self, "expressions", exprs)


class IdTable(Sequence):
    """Ordered text identifiers with O(1) reverse lookup.

    Duplicates are tolerated here (the first occurrence wins the lookup) and
    reported through :attr:`duplicates`; :func:`build_net` rejects them.
    """

    def __init__(self, ids: Iterable[str]):
        self._ids = list(ids)
        self._index: dict[str, int] = {}
        self.duplicates: list[str] = []
        for i, ident in enumerate(self._ids):
            if ident in self._index:
                self.duplicates.append(ident)
            else:
                self._index[ident] = i

    def __len__(self) -> int:
        return len(self._ids)

    def __getitem__(self, i):
        return self._ids[i]

    def __iter__(self):
        return iter(self._ids)

    def __contains__(self, ident) -> bool:
        return ident in self._index

    def index(self, ident: str) -> int:
        return self._index[ident]


class NumberedIds(Sequence):
    """The ids ``prefix1 .. prefix<count>`` without storing them."""

    duplicates: list[str] = []

    def __init__(self, prefix: str, count: int):
        self.prefix = prefix
        self.count = count

    def __len__(self) -> int:
        return self.count

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(self.count))]
        if i < 0:
            i += self.count
        if not 0 <= i < self.count:
            raise IndexError(i)
        return f"{self.prefix}{i + 1}"

    def __iter__(self):
        p = self.prefix
        return (f"{p}{k}" for k in range(1, self.count + 1))

    def __contains__(self, ident) -> bool:
        try:
            self.index(ident)
        except KeyError:
            return False
        return True

    def index(self, ident: str) -> int:
        if isinstance(ident, str) and ident.startswith(self.prefix):
            tail = ident[len(self.prefix):]
            if tail.isdigit() and tail[0] != "0":
                k = int(tail)
                if 1 <= k <= self.count:
                    return k - 1
        raise KeyError(ident)


class Adjacency:
    """Compressed sparse rows: row ``i`` holds ``targets[offsets[i]:offsets[i+1]]``."""

    __slots__ = ("offsets", "targets", "_off", "_tgt")

    def __init__(self, offsets, targets):
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.targets = np.asarray(targets, dtype=np.int64)
        if self.offsets.ndim != 1 or len(self.offsets) == 0 or self.offsets[0] != 0:
            raise ValueError("offsets must be a 1-d array starting at 0")
        if self.offsets[-1] != len(self.targets):
            raise ValueError("offsets do not cover targets")
        self.offsets.setflags(write=False)
        self.targets.setflags(write=False)
        # memoryviews index to plain ints, which keeps the engine's loops fast
        self._off = memoryview(self.offsets)
        self._tgt = memoryview(self.targets)

    @classmethod
    def from_lists(cls, rows: Iterable[Iterable[int]]) -> Adjacency:
        offsets = [0]
        targets: list[int] = []
        for row in rows:
            targets.extend(row)
            offsets.append(len(targets))
        return cls(offsets, targets)

    def __len__(self) -> int:
        return len(self.offsets) - 1

    def __getitem__(self, i: int) -> list[int]:
        return self._tgt[self._off[i]:self._off[i + 1]].tolist()

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Adjacency):
            return NotImplemented
        return np.array_equal(self.offsets, other.offsets) and np.array_equal(self.targets, other.targets)

    def __repr__(self) -> str:
        return f"Adjacency(rows={len(self)}, edges={len(self.targets)})"

    @property
    def n_edges(self) -> int:
        return len(self.targets)

    def row_lengths(self) -> np.ndarray:
        return np.diff(self.offsets)

    def inverse(self, n_rows: int) -> Adjacency:
        """Transpose into ``n_rows`` rows; each row lists sources in ascending order."""
        sources = np.repeat(np.arange(len(self), dtype=np.int64), self.row_lengths())
        order = np.argsort(self.targets, kind="stable")
        counts = np.bincount(self.targets, minlength=n_rows) if len(self.targets) else np.zeros(n_rows, np.int64)
        offsets = np.concatenate(([0], np.cumsum(counts)))
        return Adjacency(offsets, sources[order])


class MivarNet:
    """An immutable bipartite net of parameters and rules.

    Use :func:`build_net` to construct a validated net from
    :class:`Parameter` and :class:`Rule` lists. The constructor itself takes
    the raw indexed form and performs no checks, which lets tests and
    generators hand-build nets (see :func:`validate_net`).
    """

    def __init__(
        self,
        param_ids,
        rule_ids,
        inputs: Adjacency,
        outputs: Adjacency,
        expressions: Sequence,
        *,
        param_values: Sequence | None = None,
        param_descriptions: Sequence | None = None,
        rule_descriptions: Sequence | None = None,
        consumers: Adjacency | None = None,
        producers: Adjacency | None = None,
    ):
        self.param_ids = param_ids if isinstance(param_ids, (IdTable, NumberedIds)) else IdTable(param_ids)
        self.rule_ids = rule_ids if isinstance(rule_ids, (IdTable, NumberedIds)) else IdTable(rule_ids)
        n, m = len(self.param_ids), len(self.rule_ids)
        self.inputs = inputs
        self.outputs = outputs
        self.expressions = expressions
        self.param_values = param_values if param_values is not None else [None] * n
        self.param_descriptions = param_descriptions if param_descriptions is not None else [""] * n
        self.rule_descriptions = rule_descriptions if rule_descriptions is not None else [""] * m
        self.consumers = consumers if consumers is not None else inputs.inverse(n)
        self.producers = producers if producers is not None else outputs.inverse(n)

    @property
    def n(self) -> int:
        """Number of parameters."""
        return len(self.param_ids)

    @property
    def m(self) -> int:
        """Number of rules."""
        return len(self.rule_ids)

    def __repr__(self) -> str:
        return f"MivarNet(n={self.n}, m={self.m})"

    def param_index(self, ident) -> int:
        if isinstance(ident, (int, np.integer)):
            return int(ident)
        return self.param_ids.index(ident)

    def rule_index(self, ident) -> int:
        if isinstance(ident, (int, np.integer)):
            return int(ident)
        return self.rule_ids.index(ident)

    @property
    def parameters(self) -> Sequence[Parameter]:
        return _ParameterView(self)

    @property
    def rules(self) -> Sequence[Rule]:
        return _RuleView(self)

    def rule(self, ident) -> Rule:
        return self.rules[self.rule_index(ident)]

    def consumers_of(self, param) -> list[str]:
        ids = self.rule_ids
        return [ids[r] for r in self.consumers[self.param_index(param)]]

    def producers_of(self, param) -> list[str]:
        ids = self.rule_ids
        return [ids[r] for r in self.producers[self.param_index(param)]]

    def total_inputs(self) -> int:
        """Sum over rules of the number of inputs."""
        return self.inputs.n_edges

    def __eq__(self, other) -> bool:
        if not isinstance(other, MivarNet):
            return NotImplemented
        return (
            list(self.param_ids) == list(other.param_ids)
            and list(self.rule_ids) == list(other.rule_ids)
            and self.inputs == other.inputs
            and self.outputs == other.outputs
            and list(self.expressions) == list(other.expressions)
            and list(self.param_values) == list(other.param_values)
            and list(self.param_descriptions) == list(other.param_descriptions)
            and list(self.rule_descriptions) == list(other.rule_descriptions)
        )

    __hash__ = None


class _ParameterView(Sequence):
    def __init__(self, net: MivarNet):
        self._net = net

    def __len__(self):
        return self._net.n

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        net = self._net
        return Parameter(net.param_ids[i], net.param_descriptions[i], net.param_values[i])


class _RuleView(Sequence):
    def __init__(self, net: MivarNet):
        self._net = net

    def __len__(self):
        return self._net.m

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        net = self._net
        if i < 0:
            i += net.m
        pids = net.param_ids
        return Rule(
            net.rule_ids[i],
            tuple(pids[p] for p in net.inputs[i]),
            tuple(pids[p] for p in net.outputs[i]),
            tuple(net.expressions[i]),
            net.rule_descriptions[i],
        )


def check_rule(rule: Rule, param_ids) -> None:
    """Raise the :class:`NetError` for the first invariant ``rule`` breaks."""
    if not rule.inputs or not rule.outputs:
        raise EmptyIO(f"rule {rule.id} needs at least one input and one output")
    for label, ids in (("input", rule.inputs), ("output", rule.outputs)):
        if len(set(ids)) != len(ids):
            raise DuplicateRef(f"rule {rule.id} repeats an {label} parameter")
        for ident in ids:
            if ident not in param_ids:
                raise UnknownParamRef(f"rule {rule.id} references unknown parameter {ident}")
    both = set(rule.inputs) & set(rule.outputs)
    if both:
        raise SelfLoop(f"rule {rule.id} both consumes and produces {', '.join(sorted(both))}")
    if len(rule.expressions) != len(rule.outputs):
        raise ExprCountMismatch(
            f"rule {rule.id} has {len(rule.expressions)} expressions for {len(rule.outputs)} outputs"
        )
    declared = set(rule.inputs)
    for out, e in zip(rule.outputs, rule.expressions):
        extra = _expr.free_vars(e) - declared
        if extra:
            raise ExprVarNotDeclared(
                f"rule {rule.id}: expression for {out} uses undeclared {', '.join(sorted(extra))}"
            )


def build_net(parameters: Iterable[Parameter], rules: Iterable[Rule]) -> MivarNet:
    """Index ``parameters`` and ``rules`` into a validated :class:`MivarNet`.

    Dense indices follow declaration order. Raises a :class:`NetError`
    subclass on the first violated rule invariant.
    """
    parameters = list(parameters)
    rules = list(rules)

    pids = IdTable(p.id for p in parameters)
    if pids.duplicates:
        raise DuplicateId(f"duplicate parameter id {pids.duplicates[0]}")
    rids = IdTable(r.id for r in rules)
    if rids.duplicates:
        raise DuplicateId(f"duplicate rule id {rids.duplicates[0]}")

    for p in parameters:
        if p.value is not None and not math.isfinite(p.value):
            raise NetError(f"parameter {p.id} has non-finite stored value {p.value}")

    in_rows, out_rows = [], []
    for rule in rules:
        check_rule(rule, pids)
        in_rows.append([pids.index(i) for i in rule.inputs])
        out_rows.append([pids.index(o) for o in rule.outputs])

    return MivarNet(
        pids,
        rids,
        Adjacency.from_lists(in_rows),
        Adjacency.from_lists(out_rows),
        [r.expressions for r in rules],
        param_values=[p.value for p in parameters],
        param_descriptions=[p.description for p in parameters],
        rule_descriptions=[r.description for r in rules],
    )


@dataclass(frozen=True)
class Violation:
    kind: str
    entity: str
    detail: str = ""

    def __str__(self) -> str:
        return f"{self.kind}({self.entity}{', ' + self.detail if self.detail else ''})"


def validate_net(net: MivarNet) -> list[Violation]:
    """Return every invariant violation in ``net``; an empty list means valid."""
    out: list[Violation] = []
    n, m = net.n, net.m
    pids, rids = net.param_ids, net.rule_ids

    for ident in getattr(pids, "duplicates", []):
        out.append(Violation("DuplicateId", ident, "parameter"))
    for ident in getattr(rids, "duplicates", []):
        out.append(Violation("DuplicateId", ident, "rule"))
    for i, v in enumerate(net.param_values):
        if v is not None and not math.isfinite(v):
            out.append(Violation("NonFiniteValue", pids[i], repr(v)))

    if len(net.inputs) != m or len(net.outputs) != m or len(net.expressions) != m:
        out.append(Violation("IndexMismatch", "rules", "row count differs from rule count"))
        return out

    for r in range(m):
        rid = rids[r]
        ins, outs = net.inputs[r], net.outputs[r]
        if not ins or not outs:
            out.append(Violation("EmptyIO", rid))
        bad = [p for p in ins + outs if not 0 <= p < n]
        for p in bad:
            out.append(Violation("UnknownParamRef", rid, str(p)))
        if bad:
            continue
        if len(set(ins)) != len(ins) or len(set(outs)) != len(outs):
            out.append(Violation("DuplicateRef", rid))
        for p in sorted(set(ins) & set(outs)):
            out.append(Violation("SelfLoop", rid, pids[p]))
        exprs = net.expressions[r]
        if len(exprs) != len(outs):
            out.append(Violation("ExprCountMismatch", rid, f"{len(exprs)} != {len(outs)}"))
        declared = {pids[p] for p in ins}
        for e in exprs:
            for name in sorted(_expr.free_vars(e) - declared):
                out.append(Violation("ExprVarNotDeclared", rid, name))

    for label, forward, backward in (
        ("consumers", net.inputs, net.consumers),
        ("producers", net.outputs, net.producers),
    ):
        try:
            expected = forward.inverse(n)
        except ValueError:
            continue
        if not _same_rows(expected, backward, n):
            out.append(Violation("IndexMismatch", label))
    return out


def _same_rows(a: Adjacency, b: Adjacency, n_rows: int) -> bool:
    if len(a) != n_rows or len(b) != n_rows or a.n_edges != b.n_edges:
        return False
    if a == b:
        return True
    return all(sorted(a[i]) == sorted(b[i]) for i in range(n_rows))
