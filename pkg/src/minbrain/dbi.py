"""Diversity-based inference: test classes, success vectors, update graphs."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ClosureViolation, NotReduced, SigmaIllDefined
from .model import MooreMachine
from .ts import Partition, StateRelabeledTS, TransitionSystem


@dataclass(frozen=True)
class SuccessFunction:
    """Characteristic vector over the sorted states plus a representative test."""

    vector: tuple
    test: tuple  # (actions..., y): first-discovered representative

    def __eq__(self, other):
        return isinstance(other, SuccessFunction) and self.vector == other.vector

    def __hash__(self):
        return hash(self.vector)


def enumerate_test_classes(m: MooreMachine, action_order=None) -> list[SuccessFunction]:
    """Closure of the length-0 success vectors under action prefixing.

    Seeds are the observations in sorted order; the queue then expands
    classes breadth-first, trying actions in sorted order (or
    ``action_order``). The list order is the canonical component order.
    """
    xs = m.states
    actions = list(m.actions if action_order is None else action_order)
    classes: list[SuccessFunction] = []
    index: dict = {}
    for y in m.observations:
        vec = tuple(int(m.h(x) == y) for x in xs)
        if vec not in index:
            index[vec] = len(classes)
            classes.append(SuccessFunction(vec, (y,)))
    pos = {x: i for i, x in enumerate(xs)}
    i = 0
    while i < len(classes):
        cls = classes[i]
        for u in actions:
            # S_{u t}(x) = S_t(f(x, u))
            vec = tuple(cls.vector[pos[m.f(x, u)]] for x in xs)
            if vec not in index:
                index[vec] = len(classes)
                classes.append(SuccessFunction(vec, (u,) + cls.test))
        i += 1
    return classes


def diversity(m: MooreMachine) -> int:
    return len(enumerate_test_classes(m))


def success_vector(m: MooreMachine, classes: list[SuccessFunction], x) -> tuple:
    i = m.states.index(x)
    return tuple(c.vector[i] for c in classes)


def alpha(m: MooreMachine, classes: list[SuccessFunction], u) -> tuple:
    """Index map k -> n with ``x -> S_k(f(x, u))`` equal to class n (0-based)."""
    xs = m.states
    pos = {x: i for i, x in enumerate(xs)}
    lookup = {c.vector: n for n, c in enumerate(classes)}
    out = []
    for c in classes:
        vec = tuple(c.vector[pos[m.f(x, u)]] for x in xs)
        if vec not in lookup:
            raise ClosureViolation(f"prefixing {u!r} leaves the class set")
        out.append(lookup[vec])
    return tuple(out)


@dataclass(frozen=True)
class UpdateGraph:
    nodes: frozenset  # success vectors
    actions: tuple
    tau: dict  # (vector, u) -> vector
    sigma: dict  # vector -> y
    initial: tuple
    classes: tuple

    def as_srts(self) -> StateRelabeledTS:
        ts = TransitionSystem(
            self.nodes,
            frozenset(self.actions),
            frozenset((s, u, t) for (s, u), t in self.tau.items()),
        )
        return StateRelabeledTS(ts, dict(self.sigma), self.initial)


def build_update_graph(m: MooreMachine) -> UpdateGraph:
    classes = enumerate_test_classes(m)
    xi = {x: success_vector(m, classes, x) for x in m.states}
    sigma: dict = {}
    for x, s in xi.items():
        if sigma.setdefault(s, m.h(x)) != m.h(x):
            raise SigmaIllDefined(f"success vector {s} carries two observations")
    shuffles = {u: alpha(m, classes, u) for u in m.actions}
    tau = {}
    for s in set(xi.values()):
        for u, a in shuffles.items():
            tau[s, u] = tuple(s[a[k]] for k in range(len(classes)))
    return UpdateGraph(
        frozenset(xi.values()), tuple(m.actions), tau, sigma, xi[m.initial], tuple(classes)
    )


def xi_partition(m: MooreMachine) -> Partition:
    classes = enumerate_test_classes(m)
    return Partition.from_labeling({x: success_vector(m, classes, x) for x in m.states})


def is_reduced(m: MooreMachine) -> bool:
    classes = enumerate_test_classes(m)
    return len({success_vector(m, classes, x) for x in m.states}) == len(m.states)


def check_isomorphism(m: MooreMachine, g: UpdateGraph) -> bool:
    """Verify that x -> xi(x) is a rooted isomorphism onto the update graph."""
    classes = list(g.classes)
    xi = {x: success_vector(m, classes, x) for x in m.states}
    if len(set(xi.values())) != len(m.states):
        raise NotReduced("success vectors are not injective")
    if set(xi.values()) != set(g.nodes):
        return False
    if xi[m.initial] != g.initial:
        return False
    for x in m.states:
        if g.sigma[xi[x]] != m.h(x):
            return False
        for u in m.actions:
            if g.tau[xi[x], u] != xi[m.f(x, u)]:
                return False
    return True


def moore_srts(m: MooreMachine) -> StateRelabeledTS:
    """The machine as a transition system over U labeled by h."""
    return StateRelabeledTS(
        m.system.transition_system(), {x: m.h(x) for x in m.states}, m.initial
    )
