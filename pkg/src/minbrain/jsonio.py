"""JSON readers and writers for every file artifact.

Identifiers are written as strings. Composite ids (tuples, sets) get a
compact bracketed spelling, so a loaded document carries plain string ids
and re-exporting it reproduces the input byte for byte.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Any, Callable, Mapping

from .errors import SchemaError
from .history import NO_ACTION, TaskMachine
from .model import DisturbanceModel, ExternalSystem, MooreMachine, ProbModel, as_prob
from .psr import LinearPSR
from .ts import Partition, StateRelabeledTS, TransitionSystem, sort_key, sorted_ids


def encode_id(value: Any) -> str:
    if isinstance(value, str):
        return value
    if value is None:
        return "null"
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, tuple):
        return "(" + ",".join(encode_id(v) for v in value) + ")"
    if isinstance(value, frozenset):
        return "{" + ",".join(encode_id(v) for v in sorted_ids(value)) + "}"
    return str(value)


def encode_value(value: Any) -> Any:
    """JSON-ready form: tuples become lists, sets sorted lists, Fractions "p/q"."""
    if value is None or isinstance(value, (bool, int, str)):
        return value
    if isinstance(value, float):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, (tuple, list)):
        return [encode_value(v) for v in value]
    if isinstance(value, (frozenset, set)):
        return [encode_value(v) for v in sorted_ids(value)]
    if isinstance(value, Mapping):
        return {encode_id(k): encode_value(value[k]) for k in sorted_ids(value)}
    return str(value)


def dumps(doc: Any) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror}") from exc


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


# -------------------------------------------------------------- validation


def _obj(doc, what: str) -> dict:
    if not isinstance(doc, dict):
        raise SchemaError(f"{what}: expected an object")
    return doc


def _field(doc: dict, key: str, kind, what: str, optional=False):
    if key not in doc:
        if optional:
            return None
        raise SchemaError(f"{what}: missing field {key!r}")
    val = doc[key]
    if not isinstance(val, kind):
        raise SchemaError(f"{what}: field {key!r} has the wrong type")
    return val


def _ids(values, what: str) -> list:
    if not isinstance(values, list):
        raise SchemaError(f"{what}: expected a list of identifiers")
    for v in values:
        if not isinstance(v, str):
            raise SchemaError(f"{what}: identifier {v!r} is not a string")
    if len(set(values)) != len(values):
        raise SchemaError(f"{what}: duplicate identifiers")
    return values


def _scalar(v, what: str):
    if isinstance(v, (str, int, float, bool)) or v is None:
        return v
    raise SchemaError(f"{what}: label {v!r} is not a scalar")


# ---------------------------------------------------------- shared system


def system_to_json(srts: StateRelabeledTS, encode: Callable = encode_id) -> dict:
    ts = srts.system
    doc = {
        "states": [encode(s) for s in sorted_ids(ts.states)],
        "labels": [encode_id(lam) for lam in sorted_ids(ts.labels)],
        "transitions": [
            [encode(s), encode_id(lam), encode(t)] for s, lam, t in sorted(ts.transitions, key=sort_key)
        ],
        "state_labels": {
            encode(s): _label_out(srts.labeling[s]) for s in sorted_ids(ts.states)
        },
    }
    if srts.initial is not None:
        doc["initial"] = encode(srts.initial)
    return doc


def _label_out(v):
    return v if isinstance(v, (str, int, float, bool)) or v is None else encode_id(v)


def system_from_json(doc: Any) -> StateRelabeledTS:
    what = "system"
    doc = _obj(doc, what)
    states = _ids(_field(doc, "states", list, what), "states")
    labels = _ids(_field(doc, "labels", list, what), "labels")
    raw = _field(doc, "transitions", list, what)
    triples = []
    for tr in raw:
        if not (isinstance(tr, list) and len(tr) == 3 and all(isinstance(v, str) for v in tr)):
            raise SchemaError(f"transition {tr!r}: expected [state, label, state]")
        triples.append(tuple(tr))
    lab = _field(doc, "state_labels", dict, what)
    labeling = {k: _scalar(v, "state_labels") for k, v in lab.items()}
    initial = _field(doc, "initial", str, what, optional=True)
    try:
        ts = TransitionSystem(frozenset(states), frozenset(labels), frozenset(triples))
        return StateRelabeledTS(ts, labeling, initial)
    except ValueError as exc:
        raise SchemaError(f"{what}: {exc}") from exc
    except Exception as exc:  # DomainMismatch from the labeling check
        raise SchemaError(f"{what}: {exc}") from exc


def partition_to_json(p: Partition, encode: Callable = encode_id) -> dict:
    return {"blocks": [[encode(s) for s in block] for block in p.sorted_blocks()]}


def partition_from_json(doc: Any) -> Partition:
    doc = _obj(doc, "partition")
    blocks = _field(doc, "blocks", list, "partition")
    for b in blocks:
        _ids(b, "partition block")
        if not b:
            raise SchemaError("partition: empty block")
    try:
        return Partition(blocks)
    except ValueError as exc:
        raise SchemaError(f"partition: {exc}") from exc


# ------------------------------------------------------------ task machine


def _delta_key(s, letter) -> str:
    parts = [s] + (list(letter) if isinstance(letter, tuple) else [letter])
    return "(" + ",".join(encode_id(p) for p in parts) + ")"


def task_to_json(tm: TaskMachine) -> dict:
    return {
        "alphabet_u": None
        if tm.alphabet_u is None
        else [encode_id(u) for u in tm.alphabet_u if u != NO_ACTION],
        "alphabet_y": [encode_id(y) for y in tm.alphabet_y],
        "states": [encode_id(s) for s in tm.states],
        "delta": {
            _delta_key(s, letter): encode_id(tm.delta[s, letter])
            for s in tm.states
            for letter in tm.letters()
        },
        "output": {encode_id(s): _label_out(tm.output[s]) for s in tm.states},
        "initial": encode_id(tm.initial),
    }


def task_from_json(doc: Any) -> TaskMachine:
    what = "task machine"
    doc = _obj(doc, what)
    au = doc.get("alphabet_u")
    if au is not None:
        au = tuple(_ids(au, "alphabet_u"))
    ay = tuple(_ids(_field(doc, "alphabet_y", list, what), "alphabet_y"))
    states = tuple(_ids(_field(doc, "states", list, what), "states"))
    raw = _field(doc, "delta", dict, what)
    output = {k: _scalar(v, "output") for k, v in _field(doc, "output", dict, what).items()}
    initial = _field(doc, "initial", str, what)
    if au is None:
        letters = list(ay)
    else:
        letters = [(u, y) for u in (NO_ACTION,) + au for y in ay]
    lookup = {_delta_key(s, letter): (s, letter) for s in states for letter in letters}
    delta = {}
    for key, target in raw.items():
        if key not in lookup:
            raise SchemaError(f"{what}: unknown delta key {key!r}")
        delta[lookup[key]] = target
    try:
        return TaskMachine(au, ay, states, delta, output, initial)
    except SchemaError as exc:
        raise SchemaError(f"{what}: {exc}") from exc


# ------------------------------------------------- external system / Moore


def _row_out(row):
    if isinstance(row, Mapping):
        return {encode_id(k): encode_value(row[k]) for k in sorted_ids(row)}
    return [encode_id(v) for v in sorted_ids(row)]


def _row_in(row, exact: bool, what: str):
    if isinstance(row, list):
        return frozenset(_ids(row, what))
    if isinstance(row, dict):
        try:
            return {k: as_prob(v, exact) for k, v in row.items()}
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise SchemaError(f"{what}: bad probability ({exc})") from exc
    raise SchemaError(f"{what}: expected a list or an object")


def external_to_json(ext: ExternalSystem) -> dict:
    d = ext.disturbances
    doc: dict = {
        "states": [encode_id(x) for x in ext.states],
        "actions": [encode_id(u) for u in ext.actions],
        "observations": [encode_id(y) for y in ext.observations],
    }
    if d is None:
        doc["f"] = [[encode_id(x), encode_id(u), encode_id(ext.f[x, u])] for x in ext.states for u in ext.actions]
        doc["h"] = {encode_id(x): encode_id(ext.h[x]) for x in ext.states}
    else:
        doc["f"] = [
            [encode_id(x), encode_id(u), encode_id(th), encode_id(ext.f[x, u, th])]
            for x in ext.states
            for u in ext.actions
            for th in d.thetas(x, u)
        ]
        doc["h"] = [[encode_id(x), encode_id(ps), encode_id(ext.h[x, ps])] for x in ext.states for ps in d.psis(x)]
        doc["disturbances"] = {
            "mode": d.mode,
            "theta": [[encode_id(x), encode_id(u), _row_out(d.theta[x, u])] for x in ext.states for u in ext.actions],
            "psi": [[encode_id(x), _row_out(d.psi[x])] for x in ext.states],
        }
    return doc


def external_from_json(doc: Any, exact: bool = True) -> ExternalSystem:
    what = "external system"
    doc = _obj(doc, what)
    states = _ids(_field(doc, "states", list, what), "states")
    actions = _ids(_field(doc, "actions", list, what), "actions")
    obs = _ids(_field(doc, "observations", list, what), "observations")
    draw = doc.get("disturbances")
    dist = None
    if draw is not None:
        draw = _obj(draw, "disturbances")
        mode = _field(draw, "mode", str, "disturbances")
        theta = {}
        for row in _field(draw, "theta", list, "disturbances"):
            if not (isinstance(row, list) and len(row) == 3):
                raise SchemaError("disturbances.theta: expected [x, u, row]")
            theta[row[0], row[1]] = _row_in(row[2], exact, "theta")
        psi = {}
        for row in _field(draw, "psi", list, "disturbances"):
            if not (isinstance(row, list) and len(row) == 2):
                raise SchemaError("disturbances.psi: expected [x, row]")
            psi[row[0]] = _row_in(row[1], exact, "psi")
        try:
            dist = DisturbanceModel(mode, theta, psi)
        except ValueError as exc:
            raise SchemaError(f"disturbances: {exc}") from exc
    f = {}
    width = 3 if dist is None else 4
    for row in _field(doc, "f", list, what):
        if not (isinstance(row, list) and len(row) == width):
            raise SchemaError(f"f: expected rows of {width} identifiers")
        f[tuple(row[:-1])] = row[-1]
    if dist is None:
        h = _field(doc, "h", dict, what)
    else:
        h = {}
        for row in _field(doc, "h", list, what):
            if not (isinstance(row, list) and len(row) == 3):
                raise SchemaError("h: expected [x, psi, y] rows")
            h[row[0], row[1]] = row[2]
    try:
        return ExternalSystem(tuple(states), tuple(actions), tuple(obs), f, h, dist)
    except (ValueError, KeyError) as exc:
        raise SchemaError(f"{what}: {exc}") from exc


def moore_to_json(m: MooreMachine) -> dict:
    ext = m.system
    srts = StateRelabeledTS(ext.transition_system(), {x: ext.h[x] for x in ext.states}, m.initial)
    return system_to_json(srts)


def moore_from_json(doc: Any) -> MooreMachine:
    srts = system_from_json(doc)
    if srts.initial is None:
        raise SchemaError("Moore machine: missing field 'initial'")
    ts = srts.system
    f = {}
    for s, u, t in ts.transitions:
        if (s, u) in f:
            raise SchemaError(f"Moore machine: two {u!r}-successors of {s!r}")
        f[s, u] = t
    obs = sorted_ids(set(srts.labeling.values()))
    try:
        ext = ExternalSystem(tuple(ts.states), tuple(ts.labels), tuple(obs), f, dict(srts.labeling))
        return MooreMachine(ext, srts.initial)
    except ValueError as exc:
        raise SchemaError(f"Moore machine: {exc}") from exc


# ----------------------------------------------------------- probabilities


def prob_to_json(pm: ProbModel) -> dict:
    def row(r):
        return {encode_id(k): encode_value(r[k]) for k in sorted_ids(r) if r[k]}

    return {
        "states": [encode_id(x) for x in pm.states],
        "actions": [encode_id(u) for u in pm.actions],
        "observations": [encode_id(y) for y in pm.observations],
        "transition": {
            encode_id(x): {encode_id(u): row(pm.transition[x, u]) for u in pm.actions} for x in pm.states
        },
        "observation": {encode_id(x): row(pm.observation[x]) for x in pm.states},
        "initial": row(pm.initial),
    }


def prob_from_json(doc: Any, exact: bool = True) -> ProbModel:
    what = "probability model"
    doc = _obj(doc, what)
    states = _ids(_field(doc, "states", list, what), "states")
    actions = _ids(_field(doc, "actions", list, what), "actions")
    obs = _ids(_field(doc, "observations", list, what), "observations")

    def row(r, where):
        r = _row_in(r, exact, where)
        if not isinstance(r, dict):
            raise SchemaError(f"{where}: expected {{id: probability}}")
        return r

    tr = _field(doc, "transition", dict, what)
    ob = _field(doc, "observation", dict, what)
    try:
        transition = {(x, u): row(tr[x][u], f"transition[{x}][{u}]") for x in states for u in actions}
        observation = {x: row(ob[x], f"observation[{x}]") for x in states}
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"{what}: missing kernel row {exc}") from exc
    initial = row(_field(doc, "initial", dict, what), "initial")
    for x in states:
        initial.setdefault(x, as_prob(0, exact))
    try:
        return ProbModel(tuple(states), tuple(actions), tuple(obs), transition, observation, initial)
    except ValueError as exc:
        raise SchemaError(f"{what}: {exc}") from exc


def _test_out(t) -> list:
    return [[encode_id(u), encode_id(y)] for u, y in t]


def _test_in(t, what: str) -> tuple:
    if not isinstance(t, list) or not all(
        isinstance(p, list) and len(p) == 2 and all(isinstance(v, str) for v in p) for p in t
    ):
        raise SchemaError(f"{what}: a test is a list of [u, y] pairs")
    return tuple(tuple(p) for p in t)


def psr_to_json(psr: LinearPSR) -> dict:
    return {
        "actions": [encode_id(u) for u in psr.actions],
        "observations": [encode_id(y) for y in psr.observations],
        "core_tests": [_test_out(q) for q in psr.core_tests],
        "m0": [encode_value(v) for v in psr.m0],
        "weights": [
            {"test": _test_out(t), "w": [encode_value(v) for v in psr.weights[t]]}
            for t in sorted(psr.weights, key=lambda t: (len(t), sort_key(t)))
        ],
    }


def psr_from_json(doc: Any, exact: bool = True) -> LinearPSR:
    what = "linear PSR"
    doc = _obj(doc, what)
    actions = tuple(_ids(_field(doc, "actions", list, what), "actions"))
    obs = tuple(_ids(_field(doc, "observations", list, what), "observations"))
    core = tuple(_test_in(t, "core_tests") for t in _field(doc, "core_tests", list, what))

    def vec(v, where):
        if not isinstance(v, list) or len(v) != len(core):
            raise SchemaError(f"{where}: expected {len(core)} entries")
        try:
            return tuple(as_prob(a, exact) for a in v)
        except (ValueError, ZeroDivisionError, TypeError) as exc:
            raise SchemaError(f"{where}: {exc}") from exc

    m0 = vec(_field(doc, "m0", list, what), "m0")
    weights = {}
    for item in _field(doc, "weights", list, what):
        item = _obj(item, "weights entry")
        weights[_test_in(item.get("test"), "weights.test")] = vec(item.get("w"), "weights.w")
    return LinearPSR(actions, obs, core, m0, weights)


# ------------------------------------------------------------------ traces


def to_jsonl(records) -> str:
    return "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n" for r in records)


def from_jsonl(text: str) -> list:
    out = []
    for n, line in enumerate(text.splitlines(), 1):
        if line.strip():
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"trace line {n}: {exc}") from exc
    return out


# ----------------------------------------------------------------- coupling


def coupled_to_json(cs) -> dict:
    labeling = {i: cs.policy.get(i, NO_ACTION) for i in cs.internal.states}
    internal = StateRelabeledTS(cs.internal, labeling, cs.initial)
    return {
        "external": external_to_json(cs.external),
        "internal": system_to_json(internal),
        "policy": {encode_id(i): encode_id(labeling[i]) for i in sorted_ids(labeling)},
        "initial": encode_id(cs.initial),
    }


def coupled_from_json(doc: Any, exact: bool = True):
    """Coupling with an internal executor over Y and its policy table."""
    from .coupled import CoupledSystem

    what = "coupled system"
    doc = _obj(doc, what)
    ext = external_from_json(_field(doc, "external", dict, what), exact)
    internal = system_from_json(_field(doc, "internal", dict, what))
    policy = _field(doc, "policy", dict, what)
    initial = _field(doc, "initial", str, what)
    stray = set(internal.system.labels) - set(ext.observations)
    if stray:
        raise SchemaError(f"{what}: internal edge labels {sorted_ids(stray)} are not observations")
    missing = set(internal.system.states) - set(policy)
    if missing:
        raise SchemaError(f"{what}: policy undefined at {sorted_ids(missing)}")
    try:
        return CoupledSystem(ext, internal.system, dict(policy), initial)
    except ValueError as exc:
        raise SchemaError(f"{what}: {exc}") from exc
