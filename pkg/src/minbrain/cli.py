"""Command-line front end: ``minbrain <verb> [flags]``.

Exit status is 0 on success, 1 when a domain check fails or a module
raises a domain error (a JSON payload explains why) and 2 on bad flags or
malformed input files.
"""

from __future__ import annotations

import argparse
import sys
from collections import deque

from . import jsonio, scenarios
from .coupled import backward_reachable_set, is_feasible_policy, minimal_dits_for_policy, rollout
from .dbi import build_update_graph
from .errors import MinbrainError, SchemaError
from .history import EMPTY, apply_imap, interior_quotient, interior_refinement, node_name, unroll
from .jsonio import encode_id, encode_value
from .psr import discover_core_tests, psr_update
from .refine import minimal_sufficient_refinement
from .ts import (
    StateRelabeledTS,
    TransitionSystem,
    find_insufficiency,
    quotient_srts,
    sort_key,
    sorted_ids,
    to_dot,
)

EXAMPLES = ("red-green-filter", "red-green-plan", "corridor", "repeated-action")

# verb -> (min inputs, max inputs)
ARITY = {
    "check-sufficient": (1, 1),
    "minimize": (1, 1),
    "quotient": (1, 1),
    "derive": (1, 1),
    "restrict": (1, 1),
    "simulate": (1, 1),
    "reach-set": (2, 2),
    "feasible": (2, 2),
    "dbi-graph": (1, 1),
    "psr-run": (1, 2),
    "example": (0, 0),
}


class Failure(Exception):
    """A check came back negative; carries the JSON payload."""

    def __init__(self, payload: dict):
        super().__init__(payload.get("error", "check failed"))
        self.payload = payload


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="minbrain", description=__doc__.splitlines()[0])
    p.add_argument("verb", choices=sorted(ARITY))
    p.add_argument("name", nargs="?", help="example name (for the example verb)")
    p.add_argument("--input", action="append", default=[], help="input file (repeatable)")
    p.add_argument("--output", help="result file (default: stdout)")
    p.add_argument("--dot", help="also write a DOT rendering here")
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--horizon", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    num = p.add_mutually_exclusive_group()
    num.add_argument("--exact", dest="exact", action="store_true", default=True)
    num.add_argument("--float", dest="exact", action="store_false")
    p.add_argument("--max-test-len", type=int, default=4)
    p.add_argument("--strong", action="store_true", help="restrict: project labels to Y")
    return p


def validate(args) -> None:
    lo, hi = ARITY[args.verb]
    if not lo <= len(args.input) <= hi:
        want = str(lo) if lo == hi else f"{lo}..{hi}"
        raise SchemaError(f"{args.verb} takes {want} --input file(s), got {len(args.input)}")
    if args.verb == "example":
        if args.name not in EXAMPLES:
            raise SchemaError(f"example must be one of {', '.join(EXAMPLES)}")
    elif args.name is not None:
        raise SchemaError(f"unexpected argument {args.name!r}")
    for flag in ("depth", "horizon", "max_test_len"):
        if getattr(args, flag) < 1:
            raise SchemaError(f"--{flag.replace('_', '-')} must be >= 1")


# ------------------------------------------------------------------ verbs


def _witness_json(w) -> dict:
    return {k: encode_id(v) for k, v in w._asdict().items()}


def cmd_check_sufficient(args):
    srts = jsonio.system_from_json(jsonio.read_json(args.input[0]))
    w = find_insufficiency(srts)
    if w is not None:
        raise Failure({"sufficient": False, "witness": _witness_json(w)})
    return {"sufficient": True}, None


def cmd_minimize(args):
    srts = jsonio.system_from_json(jsonio.read_json(args.input[0]))
    result = minimal_sufficient_refinement(srts)
    dot = to_dot(quotient_srts(result.as_srts(srts)), "msr") if args.dot else None
    return jsonio.partition_to_json(result.partition), dot


def cmd_quotient(args):
    srts = jsonio.system_from_json(jsonio.read_json(args.input[0]))
    q = quotient_srts(srts)
    return jsonio.system_to_json(q), to_dot(q, "quotient")


def cmd_derive(args):
    tm = jsonio.task_from_json(jsonio.read_json(args.input[0]))
    tree = unroll(tm.alphabet_u, tm.alphabet_y, (EMPTY,), args.depth)
    q = quotient_srts(apply_imap(tree, tm))
    return jsonio.system_to_json(q), to_dot(q, "derived")


def cmd_restrict(args):
    """State labels of the input act as the policy; edge labels read ``(u,y)``."""
    srts = jsonio.system_from_json(jsonio.read_json(args.input[0]))
    keep = []
    for s, lam, t in srts.system.transitions:
        prefix = "(" + encode_id(srts.labeling[s]) + ","
        if not (lam.startswith("(") and lam.endswith(")")):
            raise SchemaError(f"edge label {lam!r} is not of the form (u,y)")
        if lam.startswith(prefix):
            keep.append((s, lam[len(prefix) : -1] if args.strong else lam, t))
    labels = {lam for _, lam, _ in keep} if args.strong else srts.system.labels
    out = StateRelabeledTS(
        TransitionSystem(srts.system.states, frozenset(labels), frozenset(keep)),
        srts.labeling,
        srts.initial,
    )
    return jsonio.system_to_json(out), to_dot(out, "restricted")


def _start(doc, cs):
    start = doc.get("start") if isinstance(doc, dict) else None
    if start is None:
        return cs.external.states[0]
    if start not in cs.external.states:
        raise SchemaError(f"start state {start!r} not in X")
    return start


def cmd_simulate(args):
    doc = jsonio.read_json(args.input[0])
    cs = jsonio.coupled_from_json(doc, args.exact)
    x1 = _start(doc, cs)
    mode = "fixed" if cs.external.disturbances is None else "seeded"
    r = rollout(cs, (cs.initial, x1), args.horizon, mode=mode, seed=args.seed)
    records = [
        {
            "stage": k,
            "x": encode_value(s.x),
            "y": encode_value(s.y),
            "iota": encode_value(s.iota),
            "u": encode_value(s.u),
            "theta": encode_value(s.theta),
            "psi": encode_value(s.psi),
        }
        for k, s in enumerate(r.steps, 1)
    ]
    return jsonio.to_jsonl(records), None


def cmd_reach_set(args):
    ext = jsonio.external_from_json(jsonio.read_json(args.input[0]), args.exact)
    tm = jsonio.task_from_json(jsonio.read_json(args.input[1]))
    return {"backward_reachable": [encode_id(x) for x in sorted_ids(backward_reachable_set(ext, tm))]}, None


def cmd_feasible(args):
    cs = jsonio.coupled_from_json(jsonio.read_json(args.input[0]), args.exact)
    tm = jsonio.task_from_json(jsonio.read_json(args.input[1]))
    res = is_feasible_policy(cs, tm, args.horizon)
    payload = {
        "feasible": res.feasible,
        "verdict": res.verdict,
        "stages": {encode_id(x): k for x, k in sorted(res.stages.items(), key=lambda kv: sort_key(kv[0]))},
    }
    if not res.feasible:
        payload["witness"] = encode_id(res.witness)
        raise Failure(payload)
    return payload, None


def cmd_dbi_graph(args):
    m = jsonio.moore_from_json(jsonio.read_json(args.input[0]))
    g = build_update_graph(m)

    def bits(v):
        return "".join(str(b) for b in v) if isinstance(v, tuple) else encode_id(v)

    srts = g.as_srts()
    return jsonio.system_to_json(srts, encode=bits), to_dot(srts, "update_graph", encode=bits)


def cmd_psr_run(args):
    pm = jsonio.prob_from_json(jsonio.read_json(args.input[0]), args.exact)
    psr = discover_core_tests(pm, args.max_test_len)
    if len(args.input) == 1:
        return jsonio.psr_to_json(psr), None
    with open(args.input[1], encoding="utf-8") as fh:
        steps = jsonio.from_jsonl(fh.read())
    p = psr.m0
    records = [{"stage": 0, "prediction": encode_value(p)}]
    for k, rec in enumerate(steps, 1):
        if not (isinstance(rec, dict) and "u" in rec and "y" in rec):
            raise SchemaError(f"trace line {k}: expected an object with u and y")
        p = psr_update(psr, p, rec["u"], rec["y"])
        records.append({"stage": k, "u": rec["u"], "y": rec["y"], "prediction": encode_value(p)})
    return jsonio.to_jsonl(records), None


# --------------------------------------------------------------- examples


def _access_words(srts: StateRelabeledTS) -> dict:
    """Shortest edge-label word reaching each state (sorted-letter BFS)."""
    words = {srts.initial: ()}
    queue = deque([srts.initial])
    while queue:
        s = queue.popleft()
        for lam in sorted_ids(srts.system.labels):
            for t in sorted_ids(srts.system.post(s, lam)):
                if t not in words:
                    words[t] = words[s] + (lam,)
                    queue.append(t)
    return words


def _rename(srts: StateRelabeledTS, names: dict) -> StateRelabeledTS:
    ts = srts.system
    return StateRelabeledTS(
        TransitionSystem(
            frozenset(names[s] for s in ts.states),
            ts.labels,
            frozenset((names[s], lam, names[t]) for s, lam, t in ts.transitions),
        ),
        {names[s]: v for s, v in srts.labeling.items()},
        names[srts.initial],
    )


def example_red_green_filter(args):
    tree = unroll(None, scenarios.COLORS, (EMPTY,), max(args.depth, 4))
    labeled = apply_imap(tree, scenarios.red_green_label)
    q = interior_quotient(labeled, interior_refinement(labeled))
    by_word = {(): "i0", ("r",): "i_r", ("g",): "i_g"}
    names = {s: by_word.get(w, "i_nt") for s, w in _access_words(q).items()}
    out = _rename(q, names)
    return jsonio.system_to_json(out), to_dot(out, "red_green_filter")


def example_red_green_plan(args):
    tree = unroll((scenarios.U_G, scenarios.U_R), scenarios.COLORS, (EMPTY,), max(args.depth, 3))
    q = minimal_dits_for_policy(tree, scenarios.red_green_policy)
    by_word = {(): "i0", ("r",): "i1", ("g",): "i2"}
    out = _rename(q, {s: by_word[w] for s, w in _access_words(q).items()})
    return jsonio.system_to_json(out), to_dot(out, "red_green_plan")


def example_corridor(args):
    from .filters import ndet_step

    size = 5
    ext = scenarios.corridor(size)
    x0 = scenarios.corridor_start(size)
    rows = []
    for env in scenarios.corridor_environments(size):
        x = ((0, 0), env, 0)
        ys = [ext.h[x]]
        xs = ndet_step(ext, x0, None, ys[0])
        for _ in range(2 * size + 2):
            u = scenarios.corridor_policy(xs)
            x = ext.f[x, u]
            ys.append(ext.h[x])
            xs = ndet_step(ext, xs, u, ys[-1])
        rows.append(
            {
                "environment": list(env),
                "observations": ys,
                "estimate": encode_value(sorted_ids(xs)),
                "localized": xs == frozenset([x]),
            }
        )
    return {"runs": rows}, None


def example_repeated_action(args):
    tree = unroll(("u", "v"), ("a", "b"), (EMPTY,), 4)
    labeled = apply_imap(tree, scenarios.repeated_action_labeling("u"))
    q = quotient_srts(labeled)
    doc = jsonio.system_to_json(q)
    w = find_insufficiency(labeled)
    witness = {
        "s": node_name(w.s),
        "t": node_name(w.t),
        "label": encode_id(w.label),
        "s_next": node_name(w.s_next),
        "t_next": node_name(w.t_next),
    }
    return {"quotient": doc, "witness": witness}, to_dot(q, "repeated_action")


def cmd_example(args):
    return {
        "red-green-filter": example_red_green_filter,
        "red-green-plan": example_red_green_plan,
        "corridor": example_corridor,
        "repeated-action": example_repeated_action,
    }[args.name](args)


COMMANDS = {
    "check-sufficient": cmd_check_sufficient,
    "minimize": cmd_minimize,
    "quotient": cmd_quotient,
    "derive": cmd_derive,
    "restrict": cmd_restrict,
    "simulate": cmd_simulate,
    "reach-set": cmd_reach_set,
    "feasible": cmd_feasible,
    "dbi-graph": cmd_dbi_graph,
    "psr-run": cmd_psr_run,
    "example": cmd_example,
}


def _emit(text: str, path: str | None, stream) -> None:
    if path is None:
        stream.write(text)
    else:
        jsonio.write_text(path, text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        validate(args)
        result, dot = COMMANDS[args.verb](args)
    except SchemaError as exc:
        sys.stderr.write(jsonio.dumps({"error": "SchemaError", "message": str(exc)}))
        return 2
    except Failure as exc:
        _emit(jsonio.dumps(exc.payload), args.output, sys.stdout)
        return 1
    except MinbrainError as exc:
        _emit(jsonio.dumps({"error": type(exc).__name__, "message": str(exc)}), args.output, sys.stdout)
        return 1
    text = result if isinstance(result, str) else jsonio.dumps(result)
    _emit(text, args.output, sys.stdout)
    if args.dot and dot is not None:
        jsonio.write_text(args.dot, dot)
    return 0


if __name__ == "__main__":
    sys.exit(main())
