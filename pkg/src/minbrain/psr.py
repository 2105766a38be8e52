"""Linear predictive state representations over a finite probabilistic model.

A test is a tuple of ``(u, y)`` pairs: do ``u``, then see ``y``. A history
is a tuple of the same letters starting from the null history.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Mapping, Sequence

from .errors import ImpossibleObservation, RankDeficientExtensions, ZeroProbabilityHistory
from .model import ProbModel

FLOAT_TOL = 1e-9


def _is_zero(v) -> bool:
    return v == 0 if isinstance(v, Fraction) else abs(v) <= FLOAT_TOL


def _dot(a: Sequence, b: Sequence):
    return sum((x * y for x, y in zip(a, b)), Fraction(0) if isinstance(a[0], Fraction) else 0.0)


def belief_after(pm: ProbModel, history: Sequence) -> dict:
    """P(x | history) by forward conditioning on each ``(u, y)`` letter."""
    b = dict(pm.initial)
    for u, y in history:
        nb = {}
        for x2 in pm.states:
            acc = sum(b[x] * pm.p_trans(x, u, x2) for x in pm.states)
            nb[x2] = acc * pm.p_obs(x2, y)
        z = sum(nb.values())
        if _is_zero(z):
            raise ZeroProbabilityHistory(f"history {tuple(history)!r} has probability 0")
        b = {x: v / z for x, v in nb.items()}
    return b


def exact_test_probability(pm: ProbModel, history: Sequence, test: Sequence):
    """P(test observations | test actions, history) by belief chaining."""
    alpha = belief_after(pm, history)
    for u, y in test:
        alpha = {
            x2: sum(alpha[x] * pm.p_trans(x, u, x2) for x in pm.states) * pm.p_obs(x2, y)
            for x2 in pm.states
        }
    return sum(alpha.values())


def test_vector(pm: ProbModel, test: Sequence) -> tuple:
    """Per-state success probability of ``test`` (backward recursion)."""
    one = Fraction(1) if pm.exact else 1.0
    v = {x: one for x in pm.states}
    for u, y in reversed(tuple(test)):
        v = {
            x: sum(pm.p_trans(x, u, x2) * pm.p_obs(x2, y) * v[x2] for x2 in pm.states)
            for x in pm.states
        }
    return tuple(v[x] for x in pm.states)


@dataclass(frozen=True)
class LinearPSR:
    actions: tuple
    observations: tuple
    core_tests: tuple
    m0: tuple
    weights: Mapping  # test -> weight vector over core tests

    def predict(self, p: Sequence, test: Sequence):
        return _dot(self.weights[tuple(test)], p)


def psr_update(psr: LinearPSR, p: Sequence, u, y) -> tuple:
    """Prediction vector after doing ``u`` and seeing ``y``."""
    denom = _dot(psr.weights[((u, y),)], p)
    if _is_zero(denom):
        raise ImpossibleObservation(f"({u!r}, {y!r}) has zero predicted probability")
    return tuple(_dot(psr.weights[((u, y),) + q], p) / denom for q in psr.core_tests)


def psr_run(psr: LinearPSR, history: Sequence) -> tuple:
    p = tuple(psr.m0)
    for u, y in history:
        p = psr_update(psr, p, u, y)
    return p


def all_sequences(actions, observations, max_len: int, min_len: int = 1):
    letters = [(u, y) for u in actions for y in observations]
    for n in range(min_len, max_len + 1):
        yield from product(letters, repeat=n)


def positive_histories(pm: ProbModel, max_len: int) -> list[tuple]:
    """Histories up to ``max_len`` letters with nonzero probability."""
    out = [()]
    frontier = [((), dict(pm.initial))]
    for _ in range(max_len):
        nxt = []
        for h, b in frontier:
            for u in pm.actions:
                for y in pm.observations:
                    try:
                        nb = belief_after_step(pm, b, u, y)
                    except ZeroProbabilityHistory:
                        continue
                    nxt.append((h + ((u, y),), nb))
        out.extend(h for h, _ in nxt)
        frontier = nxt
    return out


def belief_after_step(pm: ProbModel, b: Mapping, u, y) -> dict:
    nb = {
        x2: sum(b[x] * pm.p_trans(x, u, x2) for x in pm.states) * pm.p_obs(x2, y)
        for x2 in pm.states
    }
    z = sum(nb.values())
    if _is_zero(z):
        raise ZeroProbabilityHistory("zero-probability extension")
    return {x: v / z for x, v in nb.items()}


# ------------------------------------------------------- exact linear algebra


class _Echelon:
    """Incrementally maintained row-echelon basis for independence tests."""

    def __init__(self):
        self.rows: list[tuple[int, list]] = []

    def reduce(self, vec: Sequence) -> list:
        v = list(vec)
        for piv, row in self.rows:
            if not _is_zero(v[piv]):
                c = v[piv] / row[piv]
                v = [a - c * b for a, b in zip(v, row)]
        return v

    def add(self, vec: Sequence) -> bool:
        v = self.reduce(vec)
        for i, a in enumerate(v):
            if not _is_zero(a):
                self.rows.append((i, v))
                return True
        return False


def solve_square(a: list[list], b: list) -> list:
    """Gauss-Jordan solve of a nonsingular square system."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not _is_zero(m[r][col])), None)
        if piv is None:
            raise ValueError("singular system")
        m[col], m[piv] = m[piv], m[col]
        pv = m[col][col]
        m[col] = [v / pv for v in m[col]]
        for r in range(n):
            if r != col and not _is_zero(m[r][col]):
                c = m[r][col]
                m[r] = [v - c * w for v, w in zip(m[r], m[col])]
    return [m[r][n] for r in range(n)]


def discover_core_tests(pm: ProbModel, max_len: int) -> LinearPSR:
    """Greedy core-test selection from the bounded history x test matrix.

    Rows are the positive-probability histories of at most ``max_len``
    letters, columns the tests of at most ``max_len`` letters, entries
    exact conditional success probabilities. Each row is the history's
    belief times the per-state test vectors, so a maximal independent set
    of belief rows carries the whole row space; tests are then kept in
    (length, letter) order whenever their column is independent of those
    already kept.
    """
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    histories = positive_histories(pm, max_len)
    beliefs = [tuple(belief_after(pm, h)[x] for x in pm.states) for h in histories]
    row_basis = _Echelon()
    basis_rows = [i for i, b in enumerate(beliefs) if row_basis.add(b)]

    vcache: dict = {}

    def column(test, rows):
        v = vcache.get(test)
        if v is None:
            v = vcache[test] = test_vector(pm, test)
        return [_dot(beliefs[i], v) for i in rows]

    col_basis = _Echelon()
    core = []
    for t in all_sequences(pm.actions, pm.observations, max_len):
        if col_basis.add(column(t, basis_rows)):
            core.append(t)
        if len(core) == len(basis_rows):
            break
    core = tuple(core)
    k = len(core)

    # rows where the core columns are independent
    mat_rows = _Echelon()
    sel = [i for i in basis_rows if mat_rows.add(column_row(beliefs[i], core, vcache, pm))][:k]
    a = [[_dot(beliefs[i], vcache[q]) for q in core] for i in sel]

    letters = [(u, y) for u in pm.actions for y in pm.observations]
    needed = [(l,) for l in letters] + [(l,) + q for l in letters for q in core]
    weights = {}
    every = list(range(len(histories)))
    for t in needed:
        r = solve_square(a, column(t, sel))
        # the weights must reproduce the column on every history row
        v = vcache[t]
        for i in every:
            lhs = _dot(beliefs[i], v)
            rhs = _dot(r, [_dot(beliefs[i], vcache[q]) for q in core])
            if not _is_zero(lhs - rhs):
                raise RankDeficientExtensions(
                    f"test of length {len(t)} not predicted at max_len={max_len}; "
                    f"try max_len >= {max_len + 1}"
                )
        weights[t] = tuple(r)
    m0 = tuple(_dot(beliefs[0], vcache[q]) for q in core)
    return LinearPSR(tuple(pm.actions), tuple(pm.observations), core, m0, weights)


def column_row(belief, core, vcache, pm) -> list:
    return [_dot(belief, vcache[q]) for q in core]


def prediction_vector(pm: ProbModel, psr: LinearPSR, history: Sequence) -> tuple:
    """Core-test probabilities given ``history``, from the model directly."""
    return tuple(exact_test_probability(pm, history, q) for q in psr.core_tests)
