"""History information spaces, task machines, I-maps and restrictions.

A history node is a tuple ``(eta0, letter_1, ..., letter_k)``. In the
observation-only setting a letter is an observation ``y``; otherwise it is
an ``(u, y)`` pair whose first action is the :data:`NO_ACTION` placeholder
because nothing is commanded before the first observation.
"""

from __future__ import annotations

import os
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping

from .errors import NondeterministicInput, PartialMap, SchemaError, SizeLimit
from .refine import RefinementResult
from .ts import (
    Partition,
    StateRelabeledTS,
    TransitionSystem,
    is_deterministic,
    quotient,
    sort_key,
    sorted_ids,
)

NO_ACTION = "()"
EMPTY = "()"  # model-free initial condition
PENDING = "⊥"
DEFAULT_SIZE_LIMIT = 10**6


def size_limit() -> int:
    return int(os.environ.get("MINBRAIN_SIZE_LIMIT", DEFAULT_SIZE_LIMIT))


@dataclass(frozen=True)
class HistoryState:
    initial: Any
    pairs: tuple  # ((u, y), ...); first action is NO_ACTION

    @property
    def stage(self) -> int:
        return len(self.pairs)

    @property
    def actions(self) -> tuple:
        return tuple(u for u, _ in self.pairs[1:])

    @property
    def observations(self) -> tuple:
        return tuple(y for _, y in self.pairs)

    @classmethod
    def from_node(cls, node: tuple) -> HistoryState:
        pairs = tuple(
            letter if isinstance(letter, tuple) else (NO_ACTION, letter) for letter in node[1:]
        )
        return cls(node[0], pairs)


def node_name(node: tuple) -> str:
    """Readable id such as ``r.g.r`` (root ``()``); other roots prefix ``eta0:``."""
    parts = []
    for letter in node[1:]:
        parts.append(",".join(map(str, letter)) if isinstance(letter, tuple) else str(letter))
    body = ".".join(parts) if parts else "()"
    return body if node[0] == EMPTY else f"{node[0]}:{body}"


def letters_at(actions, observations, stage: int) -> list:
    if actions is None:
        return list(observations)
    if stage == 0:
        return [(NO_ACTION, y) for y in observations]
    return [(u, y) for u in actions for y in observations]


def tree_size(n_roots: int, n_actions: int | None, n_obs: int, depth: int) -> int:
    per_step = n_obs * (n_actions or 1)
    return n_roots * (1 + sum(per_step ** (k - 1) * n_obs for k in range(1, depth + 1)))


@dataclass(frozen=True)
class HistoryITS:
    actions: tuple | None
    observations: tuple
    initials: tuple
    depth: int
    system: TransitionSystem

    @property
    def roots(self) -> list:
        return [(i,) for i in self.initials]

    def stage(self, node) -> int:
        return len(node) - 1

    def nodes_at(self, k: int) -> list:
        return sorted_ids(n for n in self.system.states if len(n) - 1 == k)

    def interior(self) -> frozenset:
        return frozenset(n for n in self.system.states if len(n) - 1 < self.depth)

    @property
    def root(self):
        if len(self.initials) != 1:
            raise ValueError("tree has several roots")
        return (self.initials[0],)


def unroll(actions, observations, initials=(EMPTY,), depth: int = 1, limit: int | None = None) -> HistoryITS:
    """Explicit history tree of every history up to ``depth`` observations.

    ``actions=None`` gives the observation-only tree over ``Y*``.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    observations = tuple(sorted_ids(observations))
    if not observations:
        raise ValueError("observation set must be nonempty")
    if actions is not None:
        actions = tuple(sorted_ids(actions))
        if not actions:
            raise ValueError("action set must be nonempty")
    initials = tuple(sorted_ids(initials))
    cap = size_limit() if limit is None else limit
    count = tree_size(len(initials), None if actions is None else len(actions), len(observations), depth)
    if count > cap:
        raise SizeLimit(f"tree would have {count} nodes (limit {cap})")

    states = []
    triples = []
    frontier = [(i,) for i in initials]
    states.extend(frontier)
    for k in range(depth):
        nxt = []
        for node in frontier:
            for letter in letters_at(actions, observations, k):
                child = node + (letter,)
                triples.append((node, letter, child))
                nxt.append(child)
        states.extend(nxt)
        frontier = nxt
    labels = set(letters_at(actions, observations, 0)) | set(letters_at(actions, observations, 1))
    ts = TransitionSystem(frozenset(states), frozenset(labels), frozenset(triples))
    return HistoryITS(actions, observations, initials, depth, ts)


# ---------------------------------------------------------------- task machine


@dataclass(frozen=True)
class TaskMachine:
    """Complete deterministic output-labeled machine over history letters.

    Letters are ``y`` when ``alphabet_u`` is ``None`` and ``(u, y)``
    otherwise, where ``u`` ranges over ``alphabet_u`` plus :data:`NO_ACTION`.
    """

    alphabet_u: tuple | None
    alphabet_y: tuple
    states: tuple
    delta: Mapping
    output: Mapping
    initial: Any

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(sorted_ids(set(self.states))))
        object.__setattr__(self, "alphabet_y", tuple(sorted_ids(self.alphabet_y)))
        if self.alphabet_u is not None:
            object.__setattr__(self, "alphabet_u", tuple(sorted_ids(self.alphabet_u)))
        if self.initial not in self.states:
            raise SchemaError(f"initial state {self.initial!r} not a machine state")
        for s in self.states:
            if s not in self.output:
                raise SchemaError(f"output undefined at {s!r}")
            for letter in self.letters():
                t = self.delta.get((s, letter))
                if t is None:
                    raise SchemaError(f"transition undefined at {(s, letter)!r}")
                if t not in self.states:
                    raise SchemaError(f"transition {(s, letter)!r} -> unknown {t!r}")

    def letters(self) -> list:
        if self.alphabet_u is None:
            return list(self.alphabet_y)
        us = (NO_ACTION,) + tuple(u for u in self.alphabet_u if u != NO_ACTION)
        return [(u, y) for u in us for y in self.alphabet_y]

    def run(self, letters: Iterable, start=None):
        s = self.initial if start is None else start
        for letter in letters:
            s = self.delta[s, letter]
        return s

    def label(self, letters: Iterable):
        return self.output[self.run(letters)]

    def as_srts(self) -> StateRelabeledTS:
        ts = TransitionSystem(
            frozenset(self.states),
            frozenset(self.letters()),
            frozenset((s, a, t) for (s, a), t in self.delta.items()),
        )
        return StateRelabeledTS(ts, dict(self.output), self.initial)

    def reachable(self) -> TaskMachine:
        keep = self.as_srts().system.reachable_from([self.initial])
        return TaskMachine(
            self.alphabet_u,
            self.alphabet_y,
            tuple(keep),
            {k: v for k, v in self.delta.items() if k[0] in keep},
            {s: self.output[s] for s in keep},
            self.initial,
        )


# ---------------------------------------------------------------------- I-maps

IMap = TaskMachine | Mapping | Callable[[tuple], Any]


def imap_labels(h: HistoryITS, m: IMap) -> dict:
    if isinstance(m, TaskMachine):
        return {n: m.label(n[1:]) for n in h.system.states}
    if isinstance(m, Mapping):
        missing = [n for n in h.system.states if n not in m]
        if missing:
            raise PartialMap(f"{len(missing)} nodes unlabeled, e.g. {node_name(sorted_ids(missing)[0])}")
        return {n: m[n] for n in h.system.states}
    out = {}
    for n in h.system.states:
        v = m(n)
        if v is None:
            raise PartialMap(f"I-map undefined at {node_name(n)}")
        out[n] = v
    return out


def apply_imap(h: HistoryITS, m: IMap) -> StateRelabeledTS:
    root = h.root if len(h.initials) == 1 else None
    return StateRelabeledTS(h.system, imap_labels(h, m), root)


def derive_its(h: HistoryITS, m: IMap) -> TransitionSystem:
    return quotient(apply_imap(h, m))


def restrict(its: TransitionSystem, policy: Mapping) -> TransitionSystem:
    """Keep the ``(u, y)`` transitions whose action is the policy's choice."""
    missing = [s for s in its.states if s not in policy]
    if missing:
        raise PartialMap(f"policy undefined at {sorted_ids(missing)[:3]!r}")
    return TransitionSystem(
        its.states,
        its.labels,
        frozenset(tr for tr in its.transitions if tr[1][0] == policy[tr[0]]),
    )


def project_observations(its: TransitionSystem) -> TransitionSystem:
    return TransitionSystem(
        its.states,
        frozenset(lam[1] for lam in its.labels),
        frozenset((s, lam[1], t) for s, lam, t in its.transitions),
    )


def strong_restrict(dits: TransitionSystem, policy: Mapping) -> TransitionSystem:
    """Executor over Y: ``phi_pi(i, y) = phi(i, pi(i), y)``."""
    if not is_deterministic(dits):
        raise NondeterministicInput("strong restriction needs a deterministic system")
    return project_observations(restrict(dits, policy))


# ----------------------------------------------------- tree-level refinement


def _tree_depths(srts: StateRelabeledTS) -> dict:
    ts = srts.system
    if srts.initial is None:
        raise ValueError("tree needs a root")
    depth = {srts.initial: 0}
    queue = deque([srts.initial])
    children = defaultdict(list)
    for s, lam, t in ts.transitions:
        children[s].append((lam, t))
    while queue:
        s = queue.popleft()
        for _, t in children[s]:
            if t in depth:
                raise ValueError("not a tree: node reached twice")
            depth[t] = depth[s] + 1
            queue.append(t)
    if len(depth) != len(ts.states):
        raise ValueError("not a tree: unreachable nodes")
    return depth


def interior_refinement(srts: StateRelabeledTS) -> RefinementResult:
    """Coarsest sufficient refinement on the interior of a truncated tree.

    Nodes at the maximal depth are leaves whose futures were cut off; they
    constrain the others only through their labels. Two interior nodes are
    compatible when their labelled subtrees agree up to the shorter of the
    two remaining horizons. Raises ``ValueError`` when compatibility is not
    an equivalence, i.e. the truncation does not determine a unique
    refinement.
    """
    ts, lab = srts.system, srts.labeling
    depth = _tree_depths(srts)
    dmax = max(depth.values())
    children = defaultdict(list)
    for s, lam, t in ts.transitions:
        children[s].append((lam, t))
    for s in children:
        children[s].sort(key=lambda p: sort_key(p[0]))

    intern: dict = {}
    table: dict = {}  # node -> list of ids indexed by horizon
    for node in sorted(ts.states, key=lambda n: -depth[n]):
        ids = [intern.setdefault(("leaf", lab[node]), len(intern))]
        for h in range(1, dmax - depth[node] + 1):
            sig = (lab[node], tuple((lam, table[c][h - 1]) for lam, c in children[node]))
            ids.append(intern.setdefault(sig, len(intern)))
        table[node] = ids

    def compatible(a, b) -> bool:
        m = min(len(table[a]), len(table[b])) - 1
        return table[a][m] == table[b][m]

    interior = [n for n in ts.states if depth[n] < dmax] or [srts.initial]
    # one representative per distinct full table
    reps: dict = {}
    for n in interior:
        reps.setdefault((len(table[n]), table[n][-1]), []).append(n)
    keys = sorted(reps, key=lambda k: (-k[0], k[1]))
    classes: list[list] = []
    for key in keys:
        rep = reps[key][0]
        hits = [c for c in classes if all(compatible(rep, reps[k][0]) for k in c)]
        if len(hits) > 1:
            raise ValueError("truncated tree admits no unique coarsest refinement")
        if hits:
            hits[0].append(key)
        else:
            classes.append([key])
    for c in classes:
        for k1 in c:
            for k2 in c:
                if not compatible(reps[k1][0], reps[k2][0]):
                    raise ValueError("compatibility is not transitive on this tree")
    for ka in keys:
        owners = [c for c in classes if all(compatible(reps[ka][0], reps[k][0]) for k in c)]
        if len(owners) != 1:
            raise ValueError("truncated tree admits no unique coarsest refinement")
    partition = Partition([n for k in c for n in reps[k]] for c in classes)
    return RefinementResult(partition, partition.canonical_labeling(), dmax)


def interior_quotient(srts: StateRelabeledTS, result: RefinementResult) -> StateRelabeledTS:
    """Quotient of the interior subtree by an interior refinement.

    Classes are named by their least member and labeled like their members.
    """
    lab = result.labeling
    inner = srts.system.induced(lab)
    q = TransitionSystem(
        frozenset(lab.values()),
        inner.labels,
        frozenset((lab[s], lam, lab[t]) for s, lam, t in inner.transitions),
    )
    # each class keeps the (common) original label of its members
    return StateRelabeledTS(q, {lab[s]: srts.labeling[s] for s in lab}, lab[srts.initial])
