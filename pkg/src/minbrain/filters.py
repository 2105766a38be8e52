"""Set-valued, Bayes and moving-average filters as derived ITSs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .errors import InconsistentObservation, ZeroEvidence
from .history import NO_ACTION
from .model import ExternalSystem, ProbModel
from .ts import StateRelabeledTS, TransitionSystem, sorted_ids

# ------------------------------------------------------------ nondeterministic


def ndet_step(ext: ExternalSystem, xs: frozenset, u, y) -> frozenset:
    """``X' = image(X, u) & preimage(y)``; ``u=None`` for the first reading."""
    if not xs:
        raise InconsistentObservation("empty information state")
    pred = frozenset(xs) if u is None or u == NO_ACTION else ext.image(xs, u)
    out = pred & ext.preimage(y)
    if not out:
        raise InconsistentObservation(f"observation {y!r} impossible after action {u!r}")
    return out


def ndet_its(ext: ExternalSystem, x0: frozenset, policy=None) -> StateRelabeledTS:
    """Reachable set-filter DITS over ``(u, y)`` letters, rooted at ``x0``.

    The root is the pre-observation state ``("eta0", x0)``; its letters carry
    the null action. ``policy`` (set -> action) restricts actions when given.
    Every state is labeled by itself.
    """
    root = ("eta0", frozenset(x0))
    states = {root}
    triples = set()
    queue = deque([root])
    while queue:
        node = queue.popleft()
        if node == root:
            moves = [(NO_ACTION, None)]
            xs = root[1]
        else:
            xs = node
            acts = ext.actions if policy is None else [policy(xs)]
            moves = [(u, u) for u in acts]
        for letter_u, u in moves:
            for y in ext.observations:
                try:
                    nxt = ndet_step(ext, xs, u, y)
                except InconsistentObservation:
                    continue
                triples.add((node, (letter_u, y), nxt))
                if nxt not in states:
                    states.add(nxt)
                    queue.append(nxt)
    labels = {lam for _, lam, _ in triples}
    ts = TransitionSystem(frozenset(states), frozenset(labels), frozenset(triples))
    return StateRelabeledTS(ts, {s: s for s in states}, root)


# ------------------------------------------------------------------ Bayes


def _zero(p):
    return Fraction(0) if isinstance(p, Fraction) else 0.0


def bayes_step(model: ProbModel, belief: Mapping, u, y) -> dict:
    """Predict through P(x'|x,u) (skipped when ``u`` is None) and correct on y."""
    states = model.states
    if u is None or u == NO_ACTION:
        pred = {x: belief.get(x, 0) for x in states}
    else:
        pred = {}
        for x2 in states:
            acc = _zero(next(iter(belief.values())))
            for x, p in belief.items():
                if p:
                    acc += model.p_trans(x, u, x2) * p
            pred[x2] = acc
    post = {x: model.p_obs(x, y) * pred[x] for x in states}
    z = sum(post.values())
    if z == 0:
        raise ZeroEvidence(f"observation {y!r} has zero probability")
    return {x: v / z for x, v in post.items()}


def bayes_filter(model: ProbModel, letters, prior=None) -> dict:
    """Posterior after a history of ``(u, y)`` letters (null action first)."""
    b = dict(model.initial if prior is None else prior)
    for u, y in letters:
        b = bayes_step(model, b, u, y)
    return b


# --------------------------------------------------------------- moving avg


@dataclass(frozen=True)
class MovAvgState:
    n: int
    window: tuple = ()

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("window size must be >= 1")
        if len(self.window) > self.n:
            raise ValueError("window longer than n")


def movavg_step(state: MovAvgState, y):
    """Push ``y``; mean over the stored (at most ``n``) readings."""
    window = (state.window + (y,))[-state.n :]
    total = sum(window)
    if isinstance(total, (int, Fraction)):
        mean = Fraction(total, len(window))
    else:
        mean = total / len(window)
    return MovAvgState(state.n, window), mean


def trace_records(kind: str, letters, states) -> list[dict]:
    """One JSON-ready record per filter step."""
    from .jsonio import encode_value

    return [
        {"stage": k + 1, "filter": kind, "input": encode_value(letter), "state": encode_value(s)}
        for k, (letter, s) in enumerate(zip(letters, states))
    ]


def sorted_support(belief: Mapping) -> list:
    return [x for x in sorted_ids(belief) if belief[x]]


def ndet_history_tree(ext: ExternalSystem, x0: frozenset, policy, depth: int) -> StateRelabeledTS:
    """Consistent histories up to ``depth`` under ``policy``, labeled by the set filter.

    Nodes are history tuples ``(EMPTY, (u, y), ...)``; the root carries the
    label ``("eta0", x0)`` and every other node its information state.
    """
    from .history import EMPTY

    root = (EMPTY,)
    labels = {root: ("eta0", frozenset(x0))}
    triples = []
    frontier = [(root, frozenset(x0), None)]
    for _ in range(depth):
        nxt = []
        for node, xs, u in frontier:
            for y in ext.observations:
                try:
                    xs2 = ndet_step(ext, xs, u, y)
                except InconsistentObservation:
                    continue
                letter = (NO_ACTION if u is None else u, y)
                child = node + (letter,)
                labels[child] = xs2
                triples.append((node, letter, child))
                nxt.append((child, xs2, policy(xs2)))
        frontier = nxt
    ts = TransitionSystem.from_triples(triples, states=[root])
    return StateRelabeledTS(ts, labels, root)
