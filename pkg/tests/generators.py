"""Seeded random instances shared by the property suites."""

from __future__ import annotations

import random
from fractions import Fraction

from minbrain.model import ExternalSystem, MooreMachine, ProbModel
from minbrain.ts import StateRelabeledTS, TransitionSystem


def random_full_dts(rng: random.Random, max_states=8, max_labels=3, max_colors=3) -> StateRelabeledTS:
    n = rng.randint(1, max_states)
    k = rng.randint(1, max_labels)
    states = [f"s{i}" for i in range(n)]
    labels = [f"a{j}" for j in range(k)]
    triples = [(s, a, rng.choice(states)) for s in states for a in labels]
    colors = rng.randint(1, max_colors)
    labeling = {s: f"c{rng.randrange(colors)}" for s in states}
    ts = TransitionSystem(frozenset(states), frozenset(labels), frozenset(triples))
    return StateRelabeledTS(ts, labeling)


def random_partial_dts(rng: random.Random, max_states=8, max_labels=3, keep=0.7) -> StateRelabeledTS:
    full = random_full_dts(rng, max_states, max_labels)
    triples = [t for t in full.system.transitions if rng.random() < keep]
    ts = TransitionSystem(full.system.states, full.system.labels, frozenset(triples))
    return StateRelabeledTS(ts, full.labeling)


def random_moore(rng: random.Random, max_states=7, max_actions=3, max_obs=3) -> MooreMachine:
    n = rng.randint(1, max_states)
    xs = [f"x{i}" for i in range(n)]
    us = [f"u{j}" for j in range(rng.randint(1, max_actions))]
    ys = [f"y{j}" for j in range(rng.randint(1, max_obs))]
    f = {(x, u): rng.choice(xs) for x in xs for u in us}
    h = {x: rng.choice(ys) for x in xs}
    used = sorted(set(h.values()))
    return MooreMachine(ExternalSystem(tuple(xs), tuple(us), tuple(used), f, h), xs[0])


def _random_row(rng: random.Random, keys, support: int, denom: int) -> dict:
    chosen = rng.sample(list(keys), min(support, len(keys)))
    if len(chosen) == 1:
        return {chosen[0]: Fraction(1)}
    cuts = sorted(rng.sample(range(1, denom), len(chosen) - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [denom])]
    return {k: Fraction(p, denom) for k, p in zip(chosen, parts)}


def random_prob_model(
    rng: random.Random, max_states=5, max_obs=3, max_actions=2, max_support=2, denom=7
) -> ProbModel:
    xs = [f"x{i}" for i in range(rng.randint(2, max_states))]
    ys = [f"y{j}" for j in range(rng.randint(2, max_obs))]
    us = [f"u{j}" for j in range(rng.randint(1, max_actions))]
    trans = {(x, u): _random_row(rng, xs, rng.randint(1, max_support), denom) for x in xs for u in us}
    obs = {x: _random_row(rng, ys, rng.randint(1, max_support), denom) for x in xs}
    init = _random_row(rng, xs, rng.randint(1, len(xs)), denom)
    init = {x: init.get(x, Fraction(0)) for x in xs}
    return ProbModel(tuple(xs), tuple(us), tuple(ys), trans, obs, init)
