"""Internal/external couplings: rollouts, reachability, feasibility, minimal DITS."""

from __future__ import annotations

import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, NamedTuple

from .errors import HorizonExhausted, SizeLimit, UndefinedInternalTransition
from .history import (
    NO_ACTION,
    HistoryITS,
    TaskMachine,
    imap_labels,
    interior_quotient,
    interior_refinement,
    project_observations,
    restrict,
    size_limit,
    strong_restrict,
)
from .model import ExternalSystem
from .refine import minimal_sufficient_refinement
from .ts import StateRelabeledTS, TransitionSystem, is_deterministic, sorted_ids


@dataclass(frozen=True)
class CoupledSystem:
    """External system driven by an internal DITS over Y and a policy.

    An internal system over ``(u, y)`` letters is strong-restricted by the
    policy on construction.
    """

    external: ExternalSystem
    internal: TransitionSystem
    policy: Mapping
    initial: Any

    def __post_init__(self):
        internal = self.internal
        if any(isinstance(lam, tuple) for lam in internal.labels):
            internal = strong_restrict(internal, self.policy)
            object.__setattr__(self, "internal", internal)
        if not is_deterministic(internal):
            raise ValueError("internal system must be deterministic")
        if self.initial not in internal.states:
            raise ValueError(f"initial internal state {self.initial!r} unknown")
        bad = {self.policy[i] for i in internal.states if i in self.policy} - set(
            self.external.actions
        ) - {NO_ACTION}
        if bad:
            raise ValueError(f"policy emits unknown actions {sorted_ids(bad)}")


class Step(NamedTuple):
    """Stage k of a rollout: x_k, observation y_k, internal state, action u_k."""

    x: Any
    y: Any
    iota: Any
    u: Any
    theta: Any = None
    psi: Any = None


@dataclass(frozen=True)
class Rollout:
    initial: tuple  # (iota_0, x_1)
    steps: tuple = field(default_factory=tuple)

    @property
    def observations(self) -> tuple:
        return tuple(s.y for s in self.steps)

    @property
    def actions(self) -> tuple:
        return tuple(s.u for s in self.steps)

    @property
    def states(self) -> tuple:
        return tuple(s.x for s in self.steps)

    @property
    def internal_states(self) -> tuple:
        return tuple(s.iota for s in self.steps)

    def letters(self) -> list:
        """History letters ``(u_{k-1}, y_k)`` with the null action first."""
        prev = [NO_ACTION] + [s.u for s in self.steps[:-1]]
        return list(zip(prev, self.observations))


def step(cs: CoupledSystem, state: tuple, disturbance: tuple | None = None):
    """One stage of the coupled dynamics.

    From ``(iota, x)``: sense ``y``, update the internal state, emit
    ``u = pi(iota')`` and move the external state.
    """
    iota, x = state
    ext = cs.external
    d = ext.disturbances
    theta, psi = disturbance if disturbance is not None else (None, None)
    if d is not None:
        if disturbance is None:
            raise ValueError("disturbed system needs (theta, psi)")
        d.check(x, None, None, psi)
    y = ext.sense(x, psi)
    nxt = cs.internal.step(iota, y)
    if nxt is None:
        raise UndefinedInternalTransition(f"internal system has no {y!r}-edge from {iota!r}")
    u = cs.policy[nxt]
    if d is not None:
        d.check(x, u, theta, psi)
    x2 = ext.step(x, u, theta)
    return (nxt, x2), u, y


def _sample(rng: random.Random, row):
    """Draw from a {value: prob} row, or uniformly from a set."""
    keys = sorted_ids(row)
    if not isinstance(row, Mapping):
        return rng.choice(keys)
    r = Fraction(rng.random())
    acc = Fraction(0)
    for k in keys:
        acc += Fraction(row[k])
        if r < acc:
            return k
    return keys[-1]


def rollout(
    cs: CoupledSystem,
    initial: tuple,
    horizon: int,
    mode: str = "fixed",
    trace: list | None = None,
    seed: int = 0,
):
    """Simulate ``horizon`` stages from ``(iota_0, x_1)``.

    ``mode`` is ``"fixed"`` (disturbances from ``trace``, or none),
    ``"seeded"`` (drawn from ``random.Random(seed)``) or ``"exhaustive"``
    (returns the list of every rollout over admissible disturbances).
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    d = cs.external.disturbances
    if mode == "exhaustive":
        return _exhaustive(cs, initial, horizon)
    rng = random.Random(seed)
    state = initial
    steps = []
    for k in range(horizon):
        iota, x = state
        if d is None:
            dist = None
        elif mode == "fixed":
            if trace is None or k >= len(trace):
                raise ValueError("fixed mode needs one (theta, psi) per stage")
            dist = tuple(trace[k])
        elif mode == "seeded":
            psi = _sample(rng, d.psi[x])
            y = cs.external.sense(x, psi)
            nxt = cs.internal.step(iota, y)
            if nxt is None:
                raise UndefinedInternalTransition(f"no {y!r}-edge from {iota!r}")
            theta = _sample(rng, d.theta[x, cs.policy[nxt]])
            dist = (theta, psi)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        state, u, y = step(cs, state, dist)
        steps.append(Step(x, y, state[0], u, *(dist or (None, None))))
    return Rollout(tuple(initial), tuple(steps))


def _exhaustive(cs: CoupledSystem, initial, horizon) -> list[Rollout]:
    d = cs.external.disturbances
    cap = size_limit()
    done: list[Rollout] = []
    stack = [(tuple(initial), ())]
    while stack:
        state, steps = stack.pop()
        if len(steps) == horizon:
            done.append(Rollout(tuple(initial), steps))
            if len(done) > cap:
                raise SizeLimit(f"more than {cap} trajectories")
            continue
        iota, x = state
        if d is None:
            options = [None]
        else:
            options = []
            for psi in d.psis(x):
                y = cs.external.sense(x, psi)
                nxt = cs.internal.step(iota, y)
                if nxt is None:
                    raise UndefinedInternalTransition(f"no {y!r}-edge from {iota!r}")
                options += [(th, psi) for th in d.thetas(x, cs.policy[nxt])]
        for dist in reversed(options):
            nstate, u, y = step(cs, state, dist)
            stack.append((nstate, steps + (Step(x, y, nstate[0], u, *(dist or (None, None))),)))
    done.sort(key=lambda r: [repr(s) for s in r.steps])
    return done


# -------------------------------------------------------------- reachability


def _first_letter(task: TaskMachine, y):
    return y if task.alphabet_u is None else (NO_ACTION, y)


def _letter(task: TaskMachine, u, y):
    return y if task.alphabet_u is None else (u, y)


def backward_reachable_set(ext: ExternalSystem, task: TaskMachine, success="1") -> frozenset:
    """Initial states from which some action sequence yields a success label."""
    if ext.disturbances is not None:
        raise ValueError("backward reachable set is defined for disturbance-free systems")
    start = {x: (x, task.delta[task.initial, _first_letter(task, ext.h[x])]) for x in ext.states}
    succ = defaultdict(set)
    seen = set(start.values())
    queue = deque(seen)
    while queue:
        x, q = queue.popleft()
        for u in ext.actions:
            x2 = ext.f[x, u]
            nxt = (x2, task.delta[q, _letter(task, u, ext.h[x2])])
            succ[x, q].add(nxt)
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    pred = defaultdict(set)
    for a, bs in succ.items():
        for b in bs:
            pred[b].add(a)
    good = {p for p in seen if task.output[p[1]] == success}
    queue = deque(good)
    while queue:
        p = queue.popleft()
        for a in pred[p]:
            if a not in good:
                good.add(a)
                queue.append(a)
    return frozenset(x for x, p in start.items() if p in good)


def dead_states(task: TaskMachine, success="1") -> frozenset:
    """Task states from which no letter sequence reaches a success label."""
    srts = task.as_srts()
    pred = defaultdict(set)
    for s, _, t in srts.system.transitions:
        pred[t].add(s)
    live = {s for s in task.states if task.output[s] == success}
    queue = deque(live)
    while queue:
        t = queue.popleft()
        for s in pred[t]:
            if s not in live:
                live.add(s)
                queue.append(s)
    return frozenset(task.states) - live


class Feasibility(NamedTuple):
    feasible: bool
    witness: Any = None  # least failing initial state
    verdict: str = "success"  # "success" | "fail" | "horizon"
    stages: dict = {}


def _run_task(cs, task, x, horizon, success, dead, initial_internal):
    q = task.initial
    state = (initial_internal, x)
    prev_u = NO_ACTION
    for k in range(1, horizon + 1):
        state, u, y = step(cs, state)
        q = task.delta[q, y if task.alphabet_u is None else (prev_u, y)]
        prev_u = u
        if task.output[q] == success:
            return "success", k
        if q in dead:
            return "fail", k
    return "horizon", horizon


def is_feasible_policy(
    cs: CoupledSystem, task: TaskMachine, horizon_bound: int, success="1", strict=False
) -> Feasibility:
    """Every backward-reachable start reaches a success label within the bound.

    A failing start is reported as ``"fail"`` when the task machine entered
    a state from which success is unreachable and as ``"horizon"`` when the
    bound ran out first (``strict=True`` raises :class:`HorizonExhausted`).
    """
    reach = backward_reachable_set(cs.external, task, success)
    dead = dead_states(task, success)
    stages = {}
    for x in sorted_ids(reach):
        verdict, k = _run_task(cs, task, x, horizon_bound, success, dead, cs.initial)
        stages[x] = k
        if verdict != "success":
            if verdict == "horizon" and strict:
                raise HorizonExhausted(f"start {x!r} undecided after {horizon_bound} stages")
            return Feasibility(False, x, verdict, stages)
    return Feasibility(True, None, "success", stages)


def robust_feasibility(
    cs: CoupledSystem, task: TaskMachine, horizon: int, quantifier: str = "all", success="1"
) -> Feasibility:
    """Feasibility over every disturbance trace (``"all"``) or some (``"some"``).

    An extension for disturbed couplings, kept apart from
    :func:`is_feasible_policy`. Starts are all of X.
    """
    if quantifier not in ("all", "some"):
        raise ValueError("quantifier must be 'all' or 'some'")
    for x in sorted_ids(cs.external.states):
        outcomes = []
        for r in rollout(cs, (cs.initial, x), horizon, mode="exhaustive"):
            q = task.initial
            ok = False
            for (u, y) in r.letters():
                q = task.delta[q, y if task.alphabet_u is None else (u, y)]
                if task.output[q] == success:
                    ok = True
                    break
            outcomes.append(ok)
        good = all(outcomes) if quantifier == "all" else any(outcomes)
        if not good:
            return Feasibility(False, x, "fail")
    return Feasibility(True)


# ----------------------------------------------------------- minimal DITS


def minimal_dits_for_policy(source: HistoryITS | TaskMachine, policy=None) -> StateRelabeledTS:
    """Minimal executor over Y for a history policy.

    ``source`` is either an unrolled history tree with ``policy`` an I-map
    to actions (``NO_ACTION`` at the root), or a policy machine: a
    :class:`TaskMachine` over ``(u, y)`` letters whose outputs are actions.
    The result is labeled by the induced policy on its states.
    """
    if isinstance(source, TaskMachine):
        srts = source.as_srts()
        actions = dict(srts.labeling)
        root = source.initial
        system = srts.system
    else:
        actions = imap_labels(source, policy)
        root = source.root
        system = source.system
    restricted = restrict(system, actions)
    keep = restricted.reachable_from([root])
    executor = project_observations(restricted.induced(keep))
    labeled = StateRelabeledTS(executor, {s: actions[s] for s in keep}, root)
    if isinstance(source, TaskMachine):
        result = minimal_sufficient_refinement(labeled)
        lab = result.labeling
        q = TransitionSystem(
            frozenset(lab.values()),
            executor.labels,
            frozenset((lab[s], y, lab[t]) for s, y, t in executor.transitions),
        )
        return StateRelabeledTS(q, {lab[s]: actions[s] for s in keep}, lab[root])
    result = interior_refinement(labeled)
    return interior_quotient(labeled, result)
