"""Reach, avoid and reach-avoid task machines built over an external system.

The machine tracks the set of ``(x, status)`` pairs consistent with the
history so far, where ``status`` records whether the goal was reached
("s") or a bad state visited ("f"). A history is labeled "1" when every
consistent run succeeded, "0" when every one failed and pending otherwise.
"""

from __future__ import annotations

from collections import deque

from .errors import EmptyGoal
from .history import NO_ACTION, PENDING, TaskMachine
from .model import ExternalSystem
from .ts import sort_key

START = "start"
INCONSISTENT = "inconsistent"


def _label(pairs: frozenset) -> str:
    statuses = {s for _, s in pairs}
    if statuses == {"s"}:
        return "1"
    if statuses == {"f"}:
        return "0"
    return PENDING


def _build(ext: ExternalSystem, initial, update) -> TaskMachine:
    xs0 = frozenset(ext.states if initial is None else initial)
    if not xs0 <= set(ext.states):
        raise ValueError("initial states outside X")
    letters_u = (NO_ACTION,) + tuple(ext.actions)

    def first(y) -> frozenset:
        return frozenset((x, update("p", x)) for x in xs0 & ext.preimage(y))

    def advance(pairs, u, y) -> frozenset:
        obs = ext.preimage(y)
        return frozenset(
            (x2, update(st, x2)) for x, st in pairs for x2 in ext.image([x], u) if x2 in obs
        )

    names = {START: START, INCONSISTENT: INCONSISTENT}
    output = {START: PENDING, INCONSISTENT: PENDING}
    delta = {}
    for u in letters_u:
        for y in ext.observations:
            delta[INCONSISTENT, (u, y)] = INCONSISTENT

    def name(pairs):
        if not pairs:
            return INCONSISTENT, False
        if pairs not in names:
            names[pairs] = f"q{len(names) - 1}"
            output[names[pairs]] = _label(pairs)
            return names[pairs], True
        return names[pairs], False

    queue = deque()
    for u in letters_u:
        for y in ext.observations:
            pairs = first(y)
            tgt, new = name(pairs)
            delta[START, (u, y)] = tgt
            if new:
                queue.append(pairs)
    while queue:
        pairs = queue.popleft()
        src = names[pairs]
        for y in ext.observations:
            delta[src, (NO_ACTION, y)] = INCONSISTENT
        for u in sorted(ext.actions, key=sort_key):
            for y in ext.observations:
                nxt = advance(pairs, u, y)
                tgt, new = name(nxt)
                delta[src, (u, y)] = tgt
                if new:
                    queue.append(nxt)
    return TaskMachine(
        tuple(ext.actions), tuple(ext.observations), tuple(output), delta, output, START
    )


def build_reach_task(ext: ExternalSystem, goal, initial=None) -> TaskMachine:
    """Success once the state has surely visited ``goal``."""
    goal = frozenset(goal)
    if not goal:
        raise EmptyGoal("reach task needs a nonempty goal")

    def update(st, x):
        return "s" if st == "s" or x in goal else "p"

    return _build(ext, initial, update)


def build_avoid_task(ext: ExternalSystem, bad, initial=None) -> TaskMachine:
    """Success while no run could have visited ``bad``; failure once all did."""
    bad = frozenset(bad)

    def update(st, x):
        return "f" if st == "f" or x in bad else "s"

    return _build(ext, initial, update)


def build_reach_avoid_task(ext: ExternalSystem, goal, bad, initial=None) -> TaskMachine:
    """Reach ``goal`` without first visiting ``bad`` (a bad goal state fails)."""
    goal, bad = frozenset(goal), frozenset(bad)
    if not goal:
        raise EmptyGoal("reach-avoid task needs a nonempty goal")

    def update(st, x):
        if st in ("s", "f"):
            return st
        if x in bad:
            return "f"
        return "s" if x in goal else "p"

    return _build(ext, initial, update)
