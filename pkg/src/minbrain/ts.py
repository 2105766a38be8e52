"""Transition systems, labelings, partitions, quotients and sufficiency.

States and edge labels are opaque hashable identifiers. Strings are the
norm (JSON interop); tuples and frozensets show up for histories and
set-valued filter states. Every ordering decision goes through
:func:`sort_key` so results are reproducible.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Any, Hashable, Iterable, Mapping, NamedTuple

from .errors import DomainMismatch

Ident = Hashable


def sort_key(value: Any) -> tuple:
    """Total order over the identifier shapes used in this package."""
    if value is None:
        return (0,)
    if isinstance(value, bool):
        return (1, int(value))
    if isinstance(value, int):
        return (1, value)
    if isinstance(value, str):
        return (2, value)
    if isinstance(value, tuple):
        return (3, tuple(sort_key(v) for v in value))
    if isinstance(value, frozenset):
        return (4, tuple(sorted(sort_key(v) for v in value)))
    return (5, repr(value))


def sorted_ids(values: Iterable[Any]) -> list:
    return sorted(values, key=sort_key)


@dataclass(frozen=True)
class TransitionSystem:
    """A triple of states, edge labels and a ternary transition relation."""

    states: frozenset
    labels: frozenset
    transitions: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "states", frozenset(self.states))
        object.__setattr__(self, "labels", frozenset(self.labels))
        object.__setattr__(
            self, "transitions", frozenset(tuple(t) for t in self.transitions)
        )
        for s, lam, t in self.transitions:
            if s not in self.states or t not in self.states:
                raise ValueError(f"transition {(s, lam, t)!r} references unknown state")
            if lam not in self.labels:
                raise ValueError(f"transition {(s, lam, t)!r} references unknown label")

    @classmethod
    def from_triples(cls, triples: Iterable[tuple], states=(), labels=()) -> TransitionSystem:
        triples = [tuple(t) for t in triples]
        all_states = set(states)
        all_labels = set(labels)
        for s, lam, t in triples:
            all_states.update((s, t))
            all_labels.add(lam)
        return cls(frozenset(all_states), frozenset(all_labels), frozenset(triples))

    @cached_property
    def successors(self) -> dict:
        """(state, label) -> frozenset of successor states (only present pairs)."""
        out = defaultdict(set)
        for s, lam, t in self.transitions:
            out[s, lam].add(t)
        return {k: frozenset(v) for k, v in out.items()}

    def post(self, state, label) -> frozenset:
        return self.successors.get((state, label), frozenset())

    def step(self, state, label):
        """Unique successor or ``None``; raises if the pair is branching."""
        succ = self.successors.get((state, label))
        if not succ:
            return None
        if len(succ) > 1:
            raise ValueError(f"{(state, label)!r} has {len(succ)} successors")
        (t,) = succ
        return t

    def reachable_from(self, roots: Iterable) -> frozenset:
        seen = set(roots)
        stack = list(seen)
        out = defaultdict(list)
        for s, _, t in self.transitions:
            out[s].append(t)
        while stack:
            s = stack.pop()
            for t in out[s]:
                if t not in seen:
                    seen.add(t)
                    stack.append(t)
        return frozenset(seen)

    def induced(self, keep: Iterable) -> TransitionSystem:
        keep = frozenset(keep)
        return TransitionSystem(
            keep,
            self.labels,
            frozenset(tr for tr in self.transitions if tr[0] in keep and tr[2] in keep),
        )


class Partition:
    """A set of pairwise disjoint, nonempty blocks covering a domain."""

    __slots__ = ("blocks", "_index")

    def __init__(self, blocks: Iterable[Iterable]):
        listed = [frozenset(b) for b in blocks]
        frozen = frozenset(listed)
        index = {}
        for block in listed:
            if not block:
                raise ValueError("empty block")
            for s in block:
                if s in index:
                    raise ValueError(f"state {s!r} appears in two blocks")
                index[s] = block
        self.blocks = frozen
        self._index = index

    @classmethod
    def from_labeling(cls, labeling: Mapping) -> Partition:
        groups = defaultdict(set)
        for s, lab in labeling.items():
            groups[lab].add(s)
        return cls(groups.values())

    @classmethod
    def discrete(cls, domain: Iterable) -> Partition:
        return cls([s] for s in domain)

    @classmethod
    def trivial(cls, domain: Iterable) -> Partition:
        domain = list(domain)
        return cls([domain] if domain else [])

    @property
    def domain(self) -> frozenset:
        return frozenset(self._index)

    def block_of(self, state) -> frozenset:
        return self._index[state]

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.sorted_blocks())

    def __eq__(self, other):
        return isinstance(other, Partition) and self.blocks == other.blocks

    def __hash__(self):
        return hash(self.blocks)

    def __repr__(self):
        return f"Partition({[sorted_ids(b) for b in self.sorted_blocks()]!r})"

    def sorted_blocks(self) -> list[list]:
        blocks = [sorted_ids(b) for b in self.blocks]
        return sorted(blocks, key=lambda b: sort_key(b[0]))

    def canonical_labeling(self) -> dict:
        """Each state mapped to the least member of its block."""
        return {s: b[0] for b in self.sorted_blocks() for s in b}


@dataclass(frozen=True)
class StateRelabeledTS:
    """A transition system with a total state labeling and optional root."""

    system: TransitionSystem
    labeling: Mapping
    initial: Any = None

    def __post_init__(self):
        labeling = dict(self.labeling)
        if set(labeling) != set(self.system.states):
            missing = set(self.system.states) - set(labeling)
            extra = set(labeling) - set(self.system.states)
            raise DomainMismatch(
                f"labeling domain differs from states (missing={sorted_ids(missing)[:5]}, "
                f"extra={sorted_ids(extra)[:5]})"
            )
        if self.initial is not None and self.initial not in self.system.states:
            raise ValueError(f"initial state {self.initial!r} not in system")
        object.__setattr__(self, "labeling", labeling)

    @property
    def partition(self) -> Partition:
        return Partition.from_labeling(self.labeling)

    def relabel(self, labeling: Mapping) -> StateRelabeledTS:
        return StateRelabeledTS(self.system, labeling, self.initial)


def is_deterministic(ts: TransitionSystem) -> bool:
    return all(len(v) <= 1 for v in ts.successors.values())


def is_full(ts: TransitionSystem) -> bool:
    succ = ts.successors
    return all((s, lam) in succ for s, lam in product(ts.states, ts.labels))


class Witness(NamedTuple):
    """Two equally labeled states whose ``label``-successors are labeled apart."""

    s: Any
    t: Any
    label: Any
    s_next: Any
    t_next: Any


def violates(srts: StateRelabeledTS, w: Witness) -> bool:
    """Replay a witness against the transition relation."""
    ts, lab = srts.system, srts.labeling
    return (
        lab[w.s] == lab[w.t]
        and (w.s, w.label, w.s_next) in ts.transitions
        and (w.t, w.label, w.t_next) in ts.transitions
        and lab[w.s_next] != lab[w.t_next]
    )


def find_insufficiency(srts: StateRelabeledTS) -> Witness | None:
    """Lexicographically least violation of sufficiency, or ``None``.

    Only existing transitions are quantified over, so a missing
    (state, label) pair never counts as a violation.
    """
    ts, lab = srts.system, srts.labeling
    # fast path: per (block label, edge label) collect successor labels
    seen = defaultdict(set)
    for s, lam, t in ts.transitions:
        seen[lab[s], lam].add(lab[t])
    bad = {key for key, vals in seen.items() if len(vals) > 1}
    if not bad:
        return None

    by_label = defaultdict(list)
    for s in ts.states:
        by_label[lab[s]].append(s)
    candidates = []
    for block_label, edge_label in bad:
        members = sorted_ids(by_label[block_label])
        edges = {
            s: sorted_ids(ts.post(s, edge_label)) for s in members if ts.post(s, edge_label)
        }
        for s, s_succ in edges.items():
            for t, t_succ in edges.items():
                for s2 in s_succ:
                    for t2 in t_succ:
                        if lab[s2] != lab[t2]:
                            candidates.append(Witness(s, t, edge_label, s2, t2))
    return min(candidates, key=lambda w: sort_key(tuple(w)))


def is_sufficient(srts: StateRelabeledTS) -> bool:
    return find_insufficiency(srts) is None


def quotient(srts: StateRelabeledTS) -> TransitionSystem:
    """Collapse each labeling class to a single state named by its label."""
    lab = srts.labeling
    return TransitionSystem(
        frozenset(lab.values()),
        srts.system.labels,
        frozenset((lab[s], lam, lab[t]) for s, lam, t in srts.system.transitions),
    )


def quotient_srts(srts: StateRelabeledTS) -> StateRelabeledTS:
    """Quotient with each class labeled by itself and the root carried over."""
    q = quotient(srts)
    root = None if srts.initial is None else srts.labeling[srts.initial]
    return StateRelabeledTS(q, {v: v for v in q.states}, root)


def _check_domains(ps: list[Partition]):
    domains = {p.domain for p in ps}
    if len(domains) > 1:
        raise DomainMismatch("partitions are over different domains")


def refines(p: Partition, q: Partition) -> bool:
    _check_domains([p, q])
    return all(b <= q.block_of(next(iter(b))) for b in p.blocks)


def common_refinement(ps: list[Partition]) -> Partition:
    if not ps:
        raise ValueError("need at least one partition")
    _check_domains(ps)
    groups = defaultdict(set)
    for s in ps[0].domain:
        groups[tuple(p.block_of(s) for p in ps)].add(s)
    return Partition(groups.values())


# ---------------------------------------------------------------- isomorphism


def _stable_colors(srts: StateRelabeledTS, marks: Mapping = {}) -> dict:
    """Colour refinement keyed on labels and labeled in/out neighbourhoods."""
    ts = srts.system
    out = defaultdict(list)
    inc = defaultdict(list)
    for s, lam, t in ts.transitions:
        out[s].append((lam, t))
        inc[t].append((lam, s))
    colors = {s: repr(sort_key(srts.labeling[s])) + marks.get(s, "") for s in ts.states}
    n_classes = len(set(colors.values()))
    while True:
        new = {}
        for s in ts.states:
            sig = (
                colors[s],
                tuple(sorted(repr(sort_key(lam)) + "|" + colors[t] for lam, t in out[s])),
                tuple(sorted(repr(sort_key(lam)) + "|" + colors[t] for lam, t in inc[s])),
            )
            new[s] = repr(sig)
        n_new = len(set(new.values()))
        colors = new
        if n_new == n_classes:
            return colors
        n_classes = n_new


def isomorphic(a: StateRelabeledTS, b: StateRelabeledTS) -> dict | None:
    """Label-preserving, transition-commuting bijection from ``a`` to ``b``.

    Roots are matched when both systems carry one. Returns ``None`` when no
    isomorphism exists.
    """
    ta, tb = a.system, b.system
    if len(ta.states) != len(tb.states) or len(ta.transitions) != len(tb.transitions):
        return None
    if ta.labels != tb.labels and {lam for _, lam, _ in ta.transitions} != {
        lam for _, lam, _ in tb.transitions
    }:
        return None
    rooted = a.initial is not None and b.initial is not None

    # refine both systems jointly so colours are comparable
    joint_states = {("a", s) for s in ta.states} | {("b", s) for s in tb.states}
    joint_tr = {(("a", s), lam, ("a", t)) for s, lam, t in ta.transitions} | {
        (("b", s), lam, ("b", t)) for s, lam, t in tb.transitions
    }
    joint_lab = {("a", s): v for s, v in a.labeling.items()}
    joint_lab.update({("b", s): v for s, v in b.labeling.items()})
    joint = StateRelabeledTS(
        TransitionSystem(frozenset(joint_states), ta.labels | tb.labels, frozenset(joint_tr)),
        joint_lab,
    )
    marks = {("a", a.initial): "#root", ("b", b.initial): "#root"} if rooted else {}
    colors = _stable_colors(joint, marks)
    hist_a = defaultdict(list)
    hist_b = defaultdict(list)
    for s in ta.states:
        hist_a[colors["a", s]].append(s)
    for s in tb.states:
        hist_b[colors["b", s]].append(s)
    if {k: len(v) for k, v in hist_a.items()} != {k: len(v) for k, v in hist_b.items()}:
        return None

    out_a = defaultdict(set)
    out_b = defaultdict(set)
    for s, lam, t in ta.transitions:
        out_a[s].add((lam, t))
    for s, lam, t in tb.transitions:
        out_b[s].add((lam, t))
    in_a = defaultdict(set)
    in_b = defaultdict(set)
    for s, lam, t in ta.transitions:
        in_a[t].add((lam, s))
    for s, lam, t in tb.transitions:
        in_b[t].add((lam, s))

    order = sorted(ta.states, key=lambda s: (len(hist_a[colors["a", s]]), sort_key(s)))
    if rooted:
        order.remove(a.initial)
        order.insert(0, a.initial)
    mapping: dict = {}
    used: set = set()

    def consistent(x, y) -> bool:
        for lam, t in out_a[x]:
            if t in mapping and (lam, mapping[t]) not in out_b[y]:
                return False
            if t == x and (lam, y) not in out_b[y]:
                return False
        for lam, s in in_a[x]:
            if s in mapping and (lam, mapping[s]) not in in_b[y]:
                return False
        return True

    def extend(i: int) -> bool:
        if i == len(order):
            return True
        x = order[i]
        cands = [b.initial] if rooted and x == a.initial else hist_b[colors["a", x]]
        for y in sorted_ids(cands):
            if y in used or not consistent(x, y):
                continue
            mapping[x] = y
            used.add(y)
            if extend(i + 1):
                return True
            del mapping[x]
            used.discard(y)
        return False

    if not extend(0):
        return None
    return dict(mapping)


# --------------------------------------------------------------------- export


def to_dot(srts: StateRelabeledTS, name: str = "ts", encode=None) -> str:
    from .jsonio import encode_id

    enc = encode or encode_id

    def q(v) -> str:
        return '"' + enc(v).replace("\\", "\\\\").replace('"', '\\"') + '"'

    lines = [f"digraph {name} {{", "  rankdir=LR;"]
    if srts.initial is not None:
        lines.append('  __start [shape=point];')
        lines.append(f"  __start -> {q(srts.initial)};")
    for s in sorted_ids(srts.system.states):
        lab = enc(srts.labeling[s]).replace('"', '\\"')
        lines.append(f'  {q(s)} [label="{enc(s).replace(chr(34), chr(92) + chr(34))}\\n[{lab}]"];')
    for s, lam, t in sorted(srts.system.transitions, key=sort_key):
        lines.append(f'  {q(s)} -> {q(t)} [label={q(lam)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
