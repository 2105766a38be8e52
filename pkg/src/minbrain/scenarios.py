"""Bundled worked scenarios: red-green gates, the L-shaped corridor, toy models."""

from __future__ import annotations

from .history import NO_ACTION, PENDING, TaskMachine
from .model import ExternalSystem
from .ts import TransitionSystem

# ------------------------------------------------------------- red-green gates

COLORS = ("g", "r")
U_G, U_R = "u_g", "u_r"


def consistent(observations) -> bool:
    """Gates crossed in a consistent direction: colors strictly alternate."""
    ys = list(observations)
    return all(a != b for a, b in zip(ys, ys[1:]))


def red_green_label(node) -> str:
    """Task label of a history node: "1" while consistent, "0" after a reversal."""
    ys = [letter[1] if isinstance(letter, tuple) else letter for letter in node[1:]]
    return "1" if consistent(ys) else "0"


def red_green_task_machine() -> TaskMachine:
    """Consistency labeling over Y as a (deliberately unminimized) machine.

    States track the last color and the stage parity, so the machine has
    seven states where four suffice.
    """
    states = ["start"] + [f"{c}{p}" for c in COLORS for p in (0, 1)] + ["bad0", "bad1"]
    delta = {}
    for y in COLORS:
        delta["start", y] = f"{y}1"
    for c in COLORS:
        for p in (0, 1):
            for y in COLORS:
                delta[f"{c}{p}", y] = f"bad{1 - p}" if y == c else f"{y}{1 - p}"
    for p in (0, 1):
        for y in COLORS:
            delta[f"bad{p}", y] = f"bad{1 - p}"
    output = {s: "0" if s.startswith("bad") else "1" for s in states}
    return TaskMachine(None, COLORS, tuple(states), delta, output, "start")


def red_green_policy(node):
    """u_g after seeing red, u_r after seeing green, nothing at the root."""
    if len(node) == 1:
        return NO_ACTION
    last = node[-1]
    y = last[1] if isinstance(last, tuple) else last
    return U_G if y == "r" else U_R


def red_green_policy_machine() -> TaskMachine:
    """The same policy as a machine over (u, y) letters remembering the last letter."""
    letters = [(u, y) for u in (NO_ACTION, U_G, U_R) for y in COLORS]
    states = ["start"] + [f"{u}|{y}" for u, y in letters]
    delta = {(s, (u, y)): f"{u}|{y}" for s in states for (u, y) in letters}
    output = {"start": NO_ACTION}
    for u, y in letters:
        output[f"{u}|{y}"] = U_G if y == "r" else U_R
    return TaskMachine((U_G, U_R), COLORS, tuple(states), delta, output, "start")


def annulus(regions: int = 4) -> ExternalSystem:
    """Finite abstraction of the annulus with alternately colored gates.

    Gate ``j`` separates regions ``j-1`` and ``j`` (mod ``regions``) and is
    green for even ``j``. A state is ``(region, color of the gate last
    crossed)``; the sensor reports that color. Action ``u_g`` (``u_r``)
    bounces inside the region until the green (red) gate is crossed.
    """
    if regions < 2 or regions % 2:
        raise ValueError("need an even number (>= 2) of regions")

    def color(j):
        return "g" if j % regions % 2 == 0 else "r"

    states = [(i, c) for i in range(regions) for c in COLORS]
    f = {}
    for i, c in states:
        for u, want in ((U_G, "g"), (U_R, "r")):
            j = (i - 1) % regions if color(i) == want else (i + 1) % regions
            f[(i, c), u] = (j, want)
    h = {(i, c): c for i, c in states}
    return ExternalSystem(tuple(states), (U_G, U_R), COLORS, f, h)


def red_green_plan_task(laps_of: int = 4) -> TaskMachine:
    """Success ("1") after ``laps_of + 1`` alternating colors, "0" on a reversal.

    With ``laps_of`` equal to the number of regions this is one full
    consistent lap; undecided histories are pending.
    """
    need = laps_of + 1
    states = ["start", "fail", "done"] + [f"{c}{k}" for c in COLORS for k in range(1, need)]
    letters = [(u, y) for u in (NO_ACTION, U_G, U_R) for y in COLORS]
    delta = {}
    for (u, y) in letters:
        delta["start", (u, y)] = f"{y}1" if need > 1 else "done"
        delta["fail", (u, y)] = "fail"
        delta["done", (u, y)] = "done"
        for c in COLORS:
            for k in range(1, need):
                if y == c:
                    delta[f"{c}{k}", (u, y)] = "fail"
                else:
                    delta[f"{c}{k}", (u, y)] = "done" if k + 1 >= need else f"{y}{k + 1}"
    output = {s: PENDING for s in states}
    output["fail"] = "0"
    output["done"] = "1"
    return TaskMachine((U_G, U_R), COLORS, tuple(states), delta, output, "start")


def red_green_executor() -> tuple[TransitionSystem, dict, str]:
    """Three-state executor over Y with its policy table."""
    triples = [
        ("i0", "r", "i1"),
        ("i0", "g", "i2"),
        ("i1", "r", "i1"),
        ("i1", "g", "i2"),
        ("i2", "r", "i1"),
        ("i2", "g", "i2"),
    ]
    policy = {"i0": NO_ACTION, "i1": U_G, "i2": U_R}
    return TransitionSystem.from_triples(triples), policy, "i0"


# ------------------------------------------------------------------ corridor

RIGHT, UP = "right", "up"


def corridor_environments(max_len: int) -> list[tuple[int, int]]:
    return [(l1, l2) for l1 in range(1, max_len + 1) for l2 in range(1, max_len + 1)]


def corridor(max_len: int) -> ExternalSystem:
    """Every inverted-L corridor with arm lengths up to ``max_len``.

    Cells are ``(q1, 0)`` for ``q1 <= l1`` along the bottom arm and
    ``(l1, q2)`` for ``q2 <= l2`` up the vertical arm. A state is
    ``(q, E, blocked)``; the sensor reports ``blocked``, set to 1 when the
    last commanded move could not be executed.
    """
    states = []
    for env in corridor_environments(max_len):
        l1, l2 = env
        cells = [(q1, 0) for q1 in range(l1 + 1)] + [(l1, q2) for q2 in range(1, l2 + 1)]
        states += [(q, env, b) for q in cells for b in (0, 1)]
    f = {}
    for q, env, b in states:
        l1, l2 = env
        if q[1] == 0 and q[0] < l1:
            f[(q, env, b), RIGHT] = ((q[0] + 1, 0), env, 0)
        else:
            f[(q, env, b), RIGHT] = (q, env, 1)
        if q[0] == l1 and q[1] < l2:
            f[(q, env, b), UP] = ((l1, q[1] + 1), env, 0)
        else:
            f[(q, env, b), UP] = (q, env, 1)
    h = {x: x[2] for x in states}
    return ExternalSystem(tuple(states), (RIGHT, UP), (0, 1), f, h)


def corridor_start(max_len: int) -> frozenset:
    return frozenset(((0, 0), env, 0) for env in corridor_environments(max_len))


def corridor_policy(xs) -> str:
    """Move right while some candidate can still move right, then up."""
    return RIGHT if any(q[1] == 0 and q[0] < env[0] for q, env, _ in xs) else UP


def localization_label(xs):
    """Singleton information states keep their state; all others share one label."""
    return next(iter(xs)) if len(xs) == 1 else "?"


# --------------------------------------------------------------- toy models


def binary_toy_planner() -> TransitionSystem:
    """I = U = Y = {0, 1} with phi(i, (u, y)) = |y - u|."""
    triples = [(i, (u, y), abs(y - u)) for i in (0, 1) for u in (0, 1) for y in (0, 1)]
    return TransitionSystem.from_triples(triples)


def swap_machine():
    from .model import MooreMachine

    ext = ExternalSystem(("a", "b"), ("u",), (0, 1), {("a", "u"): "b", ("b", "u"): "a"}, {"a": 0, "b": 1})
    return MooreMachine(ext, "a")


def repeated_action_labeling(u, l1="l1", l2="l2"):
    """I-map with ``l1`` on histories of more than three observations whose
    actions all equal ``u``; every other history gets ``l2``."""

    def kappa(node):
        letters = node[1:]
        acts = [letter[0] for letter in letters[1:]]
        return l1 if len(letters) > 3 and all(a == u for a in acts) else l2

    return kappa
