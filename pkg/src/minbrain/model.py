"""Finite external systems, disturbance models and probabilistic models."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping

from .errors import InadmissibleDisturbance
from .ts import TransitionSystem, sorted_ids

NORMALIZATION_TOL = 1e-12


def as_prob(value, exact: bool = True):
    """Parse ``"p/q"``, decimal strings or numbers into Fraction (or float)."""
    if isinstance(value, Fraction):
        return value if exact else float(value)
    if isinstance(value, str):
        value = value.strip()
        return Fraction(value) if exact else float(Fraction(value))
    if isinstance(value, float):
        return Fraction(str(value)) if exact else value
    return Fraction(value) if exact else float(value)


def _row_ok(row: Mapping) -> bool:
    total = sum(row.values())
    if any(p < 0 for p in row.values()):
        return False
    if isinstance(total, Fraction):
        return total == 1
    return abs(total - 1) <= NORMALIZATION_TOL


@dataclass(frozen=True)
class DisturbanceModel:
    """Action disturbances theta and sensor disturbances psi.

    ``mode`` is ``"nondeterministic"`` (admissible sets) or
    ``"probabilistic"`` (rows of P(theta|x,u) and P(psi|x)).
    """

    mode: str
    theta: Mapping = field(default_factory=dict)  # (x, u) -> set or {theta: p}
    psi: Mapping = field(default_factory=dict)  # x -> set or {psi: p}

    def __post_init__(self):
        if self.mode not in ("nondeterministic", "probabilistic"):
            raise ValueError(f"unknown disturbance mode {self.mode!r}")
        for key, row in list(self.theta.items()) + list(self.psi.items()):
            if not row:
                raise ValueError(f"empty disturbance set at {key!r}")
            if self.mode == "probabilistic" and not _row_ok(row):
                raise ValueError(f"disturbance row at {key!r} does not sum to 1")

    def thetas(self, x, u) -> list:
        return sorted_ids(self.theta[x, u])

    def psis(self, x) -> list:
        return sorted_ids(self.psi[x])

    def check(self, x, u, theta, psi):
        if theta is not None and theta not in self.theta[x, u]:
            raise InadmissibleDisturbance(f"theta={theta!r} not admissible at {(x, u)!r}")
        if psi is not None and psi not in self.psi[x]:
            raise InadmissibleDisturbance(f"psi={psi!r} not admissible at {x!r}")
        if self.mode == "probabilistic":
            if theta is not None and self.theta[x, u][theta] == 0:
                raise InadmissibleDisturbance(f"theta={theta!r} has probability 0")
            if psi is not None and self.psi[x][psi] == 0:
                raise InadmissibleDisturbance(f"psi={psi!r} has probability 0")


@dataclass(frozen=True)
class ExternalSystem:
    """States X, actions U, dynamics f, sensor h and observations Y.

    Without disturbances ``f`` maps ``(x, u)`` and ``h`` maps ``x``. With a
    disturbance model, ``f`` maps ``(x, u, theta)`` and ``h`` maps
    ``(x, psi)``.
    """

    states: tuple
    actions: tuple
    observations: tuple
    f: Mapping
    h: Mapping
    disturbances: DisturbanceModel | None = None

    def __post_init__(self):
        for name in ("states", "actions", "observations"):
            object.__setattr__(self, name, tuple(sorted_ids(set(getattr(self, name)))))
        d = self.disturbances
        for x in self.states:
            for u in self.actions:
                keys = [(x, u)] if d is None else [(x, u, th) for th in d.thetas(x, u)]
                for k in keys:
                    if k not in self.f:
                        raise ValueError(f"f undefined at {k!r}")
                    if self.f[k] not in self.states:
                        raise ValueError(f"f{k!r} leaves the state set")
            keys = [x] if d is None else [(x, ps) for ps in d.psis(x)]
            for k in keys:
                if k not in self.h:
                    raise ValueError(f"h undefined at {k!r}")
                if self.h[k] not in self.observations:
                    raise ValueError(f"h({k!r}) is not an observation")

    def step(self, x, u, theta=None):
        if self.disturbances is None:
            return self.f[x, u]
        return self.f[x, u, theta]

    def sense(self, x, psi=None):
        if self.disturbances is None:
            return self.h[x]
        return self.h[x, psi]

    def preimage(self, y) -> frozenset:
        """States that can produce observation ``y``."""
        if self.disturbances is None:
            return frozenset(x for x in self.states if self.h[x] == y)
        return frozenset(
            x for x in self.states for ps in self.disturbances.psis(x) if self.h[x, ps] == y
        )

    def image(self, xs, u) -> frozenset:
        if self.disturbances is None:
            return frozenset(self.f[x, u] for x in xs)
        return frozenset(
            self.f[x, u, th] for x in xs for th in self.disturbances.thetas(x, u)
        )

    def transition_system(self) -> TransitionSystem:
        """Dynamics as a transition system over the action alphabet."""
        if self.disturbances is None:
            triples = {(x, u, self.f[x, u]) for x in self.states for u in self.actions}
        else:
            triples = {
                (x, u, self.f[x, u, th])
                for x in self.states
                for u in self.actions
                for th in self.disturbances.thetas(x, u)
            }
        return TransitionSystem(frozenset(self.states), frozenset(self.actions), frozenset(triples))


@dataclass(frozen=True)
class MooreMachine:
    """An external system with a designated initial state."""

    system: ExternalSystem
    initial: Any

    def __post_init__(self):
        if self.system.disturbances is not None:
            raise ValueError("Moore machines are disturbance-free")
        if self.initial not in self.system.states:
            raise ValueError(f"initial state {self.initial!r} not in X")

    @property
    def states(self):
        return self.system.states

    @property
    def actions(self):
        return self.system.actions

    @property
    def observations(self):
        return self.system.observations

    def f(self, x, u):
        return self.system.f[x, u]

    def h(self, x):
        return self.system.h[x]


@dataclass(frozen=True)
class ProbModel:
    """Finite POMDP-style model: P(x'|x,u), P(y|x) and an initial belief.

    Probabilities are Fractions in exact mode, floats otherwise.
    """

    states: tuple
    actions: tuple
    observations: tuple
    transition: Mapping  # (x, u) -> {x': p}
    observation: Mapping  # x -> {y: p}
    initial: Mapping  # x -> p

    def __post_init__(self):
        for name in ("states", "actions", "observations"):
            object.__setattr__(self, name, tuple(sorted_ids(set(getattr(self, name)))))
        rows = [("initial", self.initial)]
        rows += [((x, u), self.transition[x, u]) for x in self.states for u in self.actions]
        rows += [(x, self.observation[x]) for x in self.states]
        for key, row in rows:
            if not _row_ok(row):
                raise ValueError(f"probability row {key!r} does not sum to 1")

    @property
    def exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.initial.values())

    def p_trans(self, x, u, x2):
        return self.transition[x, u].get(x2, 0)

    def p_obs(self, x, y):
        return self.observation[x].get(y, 0)

    @classmethod
    def from_external(cls, ext: ExternalSystem, initial: Mapping) -> ProbModel:
        d = ext.disturbances
        if d is None:
            trans = {(x, u): {ext.f[x, u]: Fraction(1)} for x in ext.states for u in ext.actions}
            obs = {x: {ext.h[x]: Fraction(1)} for x in ext.states}
        else:
            if d.mode != "probabilistic":
                raise ValueError("need a probabilistic disturbance model")
            trans, obs = {}, {}
            for x in ext.states:
                for u in ext.actions:
                    row: dict = {}
                    for th, p in d.theta[x, u].items():
                        nxt = ext.f[x, u, th]
                        row[nxt] = row.get(nxt, 0) + p
                    trans[x, u] = row
                row = {}
                for ps, p in d.psi[x].items():
                    y = ext.h[x, ps]
                    row[y] = row.get(y, 0) + p
                obs[x] = row
        return cls(ext.states, ext.actions, ext.observations, trans, obs, dict(initial))
