"""Forward-wave path construction over a :class:`~mivarnet.net.MivarNet`.

The engine keeps one unmet-input counter per rule and a queue of fireable
rules. Marking a parameter known decrements the counters of its consumers;
a rule whose counter reaches zero is queued once. Each parameter is marked
known at most once and each input edge is decremented at most once, so a
whole solve costs O(n + m + total inputs).

Firing during path construction is symbolic: outputs become *known*, no
arithmetic happens. Values are computed afterwards by :func:`evaluate_path`.
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from . import expr as _expr
from .errors import EvalError, MissingData, NotFireable, QueryError, UnknownId
from .net import MivarNet

__all__ = [
    "TieBreak",
    "Query",
    "OpCounter",
    "InferenceState",
    "SolutionPath",
    "Solution",
    "init_state",
    "find_fireable",
    "fire_rule",
    "run_inference",
    "prune_path",
    "backward_relevance",
    "evaluate_path",
    "solve",
]


class TieBreak(str, Enum):
    """Order in which simultaneously fireable rules are launched.

    Rules that become fireable at the same moment are always queued in
    declaration order; the policy decides how the queue is drained.
    """

    FIFO = "fifo"  # discovery order (default)
    LIFO = "lifo"  # most recent discovery first
    LOWEST_INDEX = "lowest-index"  # lowest declared rule first


@dataclass(frozen=True)
class Query:
    """GIVEN bindings and TO FIND targets.

    ``given`` may be a mapping of id to value or, for purely symbolic runs,
    an iterable of ids (their values are then ``None``).
    """

    given: Mapping[str, float | None]
    find: frozenset[str] = frozenset()

    def __post_init__(self):
        given = self.given
        if isinstance(given, Mapping):
            given = {k: (None if v is None else float(v)) for k, v in given.items()}
        else:
            given = dict.fromkeys(given)
        find = frozenset([self.find] if isinstance(self.find, str) else self.find)
        overlap = find & given.keys()
        if overlap:
            raise QueryError(f"parameters both given and required: {', '.join(sorted(overlap))}")
        object.__setattr__(self, "given", given)
        object.__setattr__(self, "find", find)

    def check(self, net: MivarNet) -> None:
        for ident in [*self.given, *self.find]:
            if ident not in net.param_ids:
                raise UnknownId(f"unknown parameter {ident}")


@dataclass
class OpCounter:
    """Elementary operations performed during one solve.

    ``known_marks`` counts parameters marked known, ``rule_marks`` counts
    rules marked fireable plus rules marked fired, ``counter_decrements``
    counts unmet-input counter updates.
    """

    known_marks: int = 0
    rule_marks: int = 0
    counter_decrements: int = 0

    @property
    def total(self) -> int:
        return self.known_marks + self.rule_marks + self.counter_decrements

    def bound_violations(self, net: MivarNet) -> list[str]:
        """Linear work bounds that this counter exceeds (empty when all hold)."""
        bad = []
        if self.known_marks > net.n:
            bad.append(f"known_marks {self.known_marks} > n {net.n}")
        if self.rule_marks > 2 * net.m:
            bad.append(f"rule_marks {self.rule_marks} > 2m {2 * net.m}")
        if self.counter_decrements > net.total_inputs():
            bad.append(f"counter_decrements {self.counter_decrements} > sum|inputs| {net.total_inputs()}")
        return bad


class _FifoQueue:
    def __init__(self):
        self._q = deque()

    def push_batch(self, rules):
        self._q.extend(rules)

    def pop(self):
        return self._q.popleft()

    def discard(self, rule):
        try:
            self._q.remove(rule)
        except ValueError:
            pass

    def __len__(self):
        return len(self._q)

    def __iter__(self):
        return iter(list(self._q))


class _LifoQueue(_FifoQueue):
    def pop(self):
        return self._q.pop()

    def __iter__(self):
        return iter(list(reversed(self._q)))


class _HeapQueue:
    def __init__(self):
        self._h = []

    def push_batch(self, rules):
        for r in rules:
            heapq.heappush(self._h, r)

    def pop(self):
        return heapq.heappop(self._h)

    def discard(self, rule):
        if rule in self._h:
            self._h.remove(rule)
            heapq.heapify(self._h)

    def __len__(self):
        return len(self._h)

    def __iter__(self):
        return iter(sorted(self._h))


_QUEUES = {TieBreak.FIFO: _FifoQueue, TieBreak.LIFO: _LifoQueue, TieBreak.LOWEST_INDEX: _HeapQueue}


@dataclass(eq=False)
class InferenceState:
    """Mutable state of one solve. Confined to a single thread."""

    net: MivarNet
    known: bytearray
    required: bytearray
    required_remaining: int
    unmet_inputs: list[int]
    fired: bytearray
    fireable: object
    events: OpCounter = field(default_factory=OpCounter)
    relevant: bytearray | None = None
    order: list[int] = field(default_factory=list)

    def known_ids(self) -> set[str]:
        ids = self.net.param_ids
        return {ids[p] for p, k in enumerate(self.known) if k}

    def unreached_ids(self) -> set[str]:
        ids = self.net.param_ids
        return {ids[p] for p, w in enumerate(self.required) if w}


def _param_indices(net: MivarNet, ids: Iterable[str]) -> list[int]:
    out = []
    for ident in ids:
        try:
            out.append(net.param_index(ident))
        except KeyError:
            raise UnknownId(f"unknown parameter {ident}") from None
    return out


def init_state(
    net: MivarNet,
    query: Query,
    policy: TieBreak = TieBreak.FIFO,
    relevant: bytearray | None = None,
) -> InferenceState:
    """Mark GIVEN known and TO FIND required, and queue the rules this enables.

    ``relevant`` optionally restricts which rules may ever be queued (see
    :func:`backward_relevance`).
    """
    n = net.n
    given = _param_indices(net, query.given)
    find = _param_indices(net, query.find)

    known = bytearray(n)
    required = bytearray(n)
    events = OpCounter()
    for p in given:
        known[p] = 1
    events.known_marks = len(given)
    for p in find:
        required[p] = 1

    unmet = net.inputs.row_lengths().tolist()
    coff, ctgt = net.consumers._off, net.consumers._tgt
    batch = []
    decrements = 0
    for p in given:
        for k in range(coff[p], coff[p + 1]):
            c = ctgt[k]
            unmet[c] -= 1
            decrements += 1
            if unmet[c] == 0 and (relevant is None or relevant[c]):
                batch.append(c)
    events.counter_decrements = decrements

    queue = _QUEUES[TieBreak(policy)]()
    batch.sort()
    queue.push_batch(batch)
    events.rule_marks = len(batch)

    return InferenceState(
        net=net,
        known=known,
        required=required,
        required_remaining=len(find),
        unmet_inputs=unmet,
        fired=bytearray(net.m),
        fireable=queue,
        events=events,
        relevant=relevant,
    )


def find_fireable(state: InferenceState) -> list[str]:
    """Queued rules in launch order, without consuming them."""
    ids = state.net.rule_ids
    return [ids[r] for r in state.fireable]


def _fire(state: InferenceState, r: int) -> list[int]:
    net = state.net
    known, required, unmet, fired = state.known, state.required, state.unmet_inputs, state.fired
    relevant = state.relevant
    ooff, otgt = net.outputs._off, net.outputs._tgt
    coff, ctgt = net.consumers._off, net.consumers._tgt

    fired[r] = 1
    state.order.append(r)
    newly = []
    for k in range(ooff[r], ooff[r + 1]):
        p = otgt[k]
        if not known[p]:
            known[p] = 1
            newly.append(p)
            if required[p]:
                required[p] = 0
                state.required_remaining -= 1

    batch = []
    decrements = 0
    for p in newly:
        for k in range(coff[p], coff[p + 1]):
            c = ctgt[k]
            left = unmet[c] - 1
            unmet[c] = left
            decrements += 1
            if left == 0 and (relevant is None or relevant[c]):
                batch.append(c)
    if batch:
        if len(batch) > 1:
            batch.sort()
        state.fireable.push_batch(batch)

    ev = state.events
    ev.known_marks += len(newly)
    ev.rule_marks += 1 + len(batch)
    ev.counter_decrements += decrements
    return newly


def fire_rule(state: InferenceState, net: MivarNet, rule) -> list[str]:
    """Launch ``rule``: mark it fired and its outputs known.

    Returns the ids of parameters that became known. Raises
    :class:`NotFireable` if the rule has unknown inputs or already fired.
    """
    r = net.rule_index(rule)
    if state.fired[r] or state.unmet_inputs[r] != 0:
        raise NotFireable(f"rule {net.rule_ids[r]} is not fireable")
    state.fireable.discard(r)
    ids = net.param_ids
    return [ids[p] for p in _fire(state, r)]


@dataclass(frozen=True, eq=False)
class SolutionPath:
    """Rules in the order they were launched (dense rule indices)."""

    net: MivarNet = field(repr=False)
    order: tuple[int, ...]
    state: InferenceState | None = field(default=None, repr=False)

    @property
    def ids(self) -> list[str]:
        rids = self.net.rule_ids
        return [rids[r] for r in self.order]

    @property
    def stats(self) -> OpCounter | None:
        return self.state.events if self.state is not None else None

    def __len__(self) -> int:
        return len(self.order)

    def __iter__(self):
        return iter(self.ids)

    def __eq__(self, other) -> bool:
        if isinstance(other, SolutionPath):
            return self.order == other.order
        return NotImplemented

    def __hash__(self):
        return hash(self.order)


def run_inference(
    net: MivarNet,
    query: Query,
    policy: TieBreak = TieBreak.FIFO,
    *,
    restrict: bool = False,
    exhaust: bool = False,
) -> SolutionPath:
    """Build a firing path from ``query.given`` to every ``query.find`` target.

    By default the run stops as soon as no target remains required. With
    ``exhaust=True`` it keeps firing until nothing is fireable. With
    ``restrict=True`` only rules returned by :func:`backward_relevance` may
    fire. Raises :class:`MissingData` when some target cannot be reached;
    the exception carries the final state as ``.state``.
    """
    query.check(net)
    relevant = None
    if restrict:
        relevant = _relevance_mask(net, _param_indices(net, query.find), _param_indices(net, query.given))
    state = init_state(net, query, policy, relevant)

    queue = state.fireable
    while queue and (exhaust or state.required_remaining):
        _fire(state, queue.pop())

    if state.required_remaining:
        unreached = [p for p, w in enumerate(state.required) if w]
        known = [p for p, k in enumerate(state.known) if k]
        frontier = _relevance_mask(net, unreached, known)
        rids, pids = net.rule_ids, net.param_ids
        err = MissingData(
            [pids[p] for p in unreached],
            [rids[r] for r, on in enumerate(frontier) if on and not state.fired[r]],
        )
        err.state = state
        raise err
    return SolutionPath(net, tuple(state.order), state)


def _relevance_mask(net: MivarNet, find: Iterable[int], stop_at: Iterable[int] = ()) -> bytearray:
    poff, ptgt = net.producers._off, net.producers._tgt
    ioff, itgt = net.inputs._off, net.inputs._tgt
    seen_param = bytearray(net.n)
    for p in stop_at:
        seen_param[p] = 1
    mask = bytearray(net.m)
    stack = []
    for p in find:
        if not seen_param[p]:
            seen_param[p] = 1
            stack.append(p)
    while stack:
        p = stack.pop()
        for k in range(poff[p], poff[p + 1]):
            r = ptgt[k]
            if mask[r]:
                continue
            mask[r] = 1
            for j in range(ioff[r], ioff[r + 1]):
                q = itgt[j]
                if not seen_param[q]:
                    seen_param[q] = 1
                    stack.append(q)
    return mask


def backward_relevance(net: MivarNet, find: Iterable[str], stop_at: Iterable[str] = ()) -> set[str]:
    """Rules reachable from ``find`` by walking producer edges backwards.

    From each target the wave moves to the rules producing it, then to those
    rules' inputs, and so on. Parameters in ``stop_at`` (typically the GIVEN
    set) are treated as already available and are not expanded.
    """
    mask = _relevance_mask(net, _param_indices(net, find), _param_indices(net, stop_at))
    rids = net.rule_ids
    return {rids[r] for r, on in enumerate(mask) if on}


def prune_path(net: MivarNet, path, query: Query) -> SolutionPath:
    """Drop fired rules whose outputs are never needed for the targets.

    Each needed parameter is attributed to the first rule in ``path`` that
    produced it; needs are then propagated backwards from the targets through
    the inputs of attributed rules. The result keeps the original order.
    """
    order = path.order if isinstance(path, SolutionPath) else tuple(net.rule_index(r) for r in path)
    given = set(_param_indices(net, query.given))
    ooff, otgt = net.outputs._off, net.outputs._tgt
    ioff, itgt = net.inputs._off, net.inputs._tgt

    provider: dict[int, int] = {}
    for pos, r in enumerate(order):
        for k in range(ooff[r], ooff[r + 1]):
            p = otgt[k]
            if p not in given and p not in provider:
                provider[p] = pos

    keep = bytearray(len(order))
    needed = set(given)
    stack = []
    for p in _param_indices(net, query.find):
        if p not in needed:
            needed.add(p)
            stack.append(p)
    while stack:
        p = stack.pop()
        pos = provider.get(p)
        if pos is None:
            raise QueryError(f"path does not derive {net.param_ids[p]}")
        if keep[pos]:
            continue
        keep[pos] = 1
        r = order[pos]
        for k in range(ioff[r], ioff[r + 1]):
            q = itgt[k]
            if q not in needed:
                needed.add(q)
                stack.append(q)

    kept = tuple(r for pos, r in enumerate(order) if keep[pos])
    state = path.state if isinstance(path, SolutionPath) else None
    return SolutionPath(net, kept, state)


def evaluate_path(net: MivarNet, path, given: Mapping[str, float]) -> dict[str, float]:
    """Execute ``path`` numerically and return all bindings.

    A parameter that is already bound is never overwritten. Failures raise an
    :class:`EvalError` subclass tagged with the rule and output ids.
    """
    order = path.order if isinstance(path, SolutionPath) else [net.rule_index(r) for r in path]
    bindings = {k: float(v) for k, v in given.items()}
    for k, v in bindings.items():
        if not math.isfinite(v):
            raise EvalError(f"given value for {k} is not finite")
    pids, rids = net.param_ids, net.rule_ids
    ooff, otgt = net.outputs._off, net.outputs._tgt
    for r in order:
        exprs = net.expressions[r]
        for j, k in enumerate(range(ooff[r], ooff[r + 1])):
            oid = pids[otgt[k]]
            if oid in bindings:
                continue
            try:
                bindings[oid] = _expr.evaluate(exprs[j], bindings)
            except EvalError as e:
                raise e.located(rids[r], oid) from e
    return bindings


@dataclass
class Solution:
    path: SolutionPath
    bindings: dict[str, float]
    stats: OpCounter
    raw_path: SolutionPath | None = None


def solve(
    net: MivarNet,
    query: Query,
    policy: TieBreak = TieBreak.FIFO,
    *,
    restrict: bool = False,
    evaluate: bool = True,
) -> Solution:
    """Construct, prune and (optionally) execute the algorithm for ``query``."""
    raw = run_inference(net, query, policy, restrict=restrict)
    path = prune_path(net, raw, query)
    if evaluate:
        missing = [k for k, v in query.given.items() if v is None]
        if missing:
            raise QueryError(f"no value given for {', '.join(sorted(missing))}")
        bindings = evaluate_path(net, path, query.given)
    else:
        bindings = dict(query.given)
    return Solution(path, bindings, raw.stats, raw)
