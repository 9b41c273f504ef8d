"""Command line front end."""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .bisim import EQUIVALENT, NOT_EQUIVALENT, RELATIONS, decide
from .ccs import ccs_to_net, parse_ccs, relabel_theta
from .errors import ParseError, StateExplosion, TflError
from .folding import CcsGenerator, fold, verify_fold
from .formats import format_net, format_tsi, load_model
from .logic import parse
from .mcgame import build_mc_game, game_report, replay, solve_mc
from .models import DEFAULT_CAP, es_to_tsi, net_to_tsi, validate_es, validate_net, validate_tsi
from .order import build_process_space, classify
from .semantics import check_report

EX_USAGE, EX_DATAERR, EX_SOFTWARE_CAP = 64, 65, 70

CHECK_DENOT_SCHEMA = {
    "type": "object",
    "required": ["satisfied", "denotation_size", "approximant_lengths"],
    "properties": {
        "satisfied": {"type": "boolean"},
        "denotation_size": {"type": "integer", "minimum": 0},
        "approximant_lengths": {"type": "object", "additionalProperties": {"type": "integer"}},
    },
}

CHECK_GAME_SCHEMA = {
    "type": "object",
    "required": ["winner", "node_count", "priorities_used", "strategy"],
    "properties": {
        "winner": {"enum": ["eve", "adam"]},
        "node_count": {"type": "integer", "minimum": 1},
        "priorities_used": {"type": "array", "items": {"type": "integer"}},
        "strategy": {"type": "array", "items": {
            "type": "object", "required": ["node", "move"],
            "properties": {"node": {"type": "string"}, "move": {"type": "string"}}}},
    },
}

CLASSIFY_SCHEMA = {
    "type": "object",
    "required": ["auto_concurrency", "confusion", "free_choice", "xi"],
    "properties": {
        "auto_concurrency": {"type": "array", "items": {"type": "array", "items": {"type": "string"}}},
        "confusion": {"type": "array", "items": {
            "type": "object", "required": ["t1", "t2", "t3", "variant", "deterministic"],
            "properties": {"variant": {"enum": ["symmetric", "asymmetric"]},
                           "deterministic": {"type": "boolean"}}}},
        "free_choice": {"type": "boolean"},
        "xi": {"type": "boolean"},
    },
}

BISIM_SCHEMA = {
    "type": "object",
    "required": ["relation", "mode", "verdict"],
    "properties": {
        "relation": {"enum": list(RELATIONS)},
        "mode": {"type": "string"},
        "verdict": {"enum": ["equivalent", "not-equivalent", "unknown"]},
    },
}

VALIDATE_SCHEMA = {
    "type": "object",
    "required": ["kind", "ok", "checks"],
    "properties": {
        "kind": {"enum": ["tsi", "net", "es"]},
        "ok": {"type": "boolean"},
        "checks": {"type": "object", "additionalProperties": {
            "type": "object", "required": ["status", "witnesses"],
            "properties": {"status": {"enum": ["PASS", "FAIL"]}}}},
    },
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def to_tsi(kind, obj, cap=DEFAULT_CAP):
    if kind == "tsi":
        return obj
    if kind == "net":
        return net_to_tsi(obj, cap)
    if kind == "es":
        return es_to_tsi(obj, cap)
    if kind == "ccs":
        return net_to_tsi(ccs_to_net(obj, cap), cap)
    raise ValueError(kind)


def load_tsi(path, cap=DEFAULT_CAP):
    kind, obj = load_model(path)
    return to_tsi(kind, obj, cap)


def read_formulas(path):
    out = []
    for no, line in enumerate(Path(path).read_text().splitlines(), 1):
        text = line.split("#", 1)[0].strip()
        if text:
            out.append((no, text))
    return out


def _emit(data, as_json, text):
    if as_json:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(text)


def _check_one(args):
    model_path, text, engine, cap = args
    tsi = load_tsi(model_path, cap)
    f = parse(text, alphabet=tsi.alphabet)
    space = build_process_space(tsi, cap)
    out = {"formula": text}
    if engine in ("denot", "both"):
        out["denot"] = check_report(space, f)
    if engine in ("game", "both"):
        game = build_mc_game(space, f)
        out["game"] = game_report(game, solve_mc(game))
    return out


def cmd_validate(a):
    kind, obj = load_model(a.model)
    if kind == "tsi":
        rep = validate_tsi(obj)
    elif kind == "net":
        rep = validate_net(obj, a.cap)
    elif kind == "es":
        rep = validate_es(obj)
    else:
        rep = validate_net(ccs_to_net(obj, a.cap), a.cap)
    data = rep.to_dict()
    lines = [f"{name}: {c['status']}" + (f" {c['witnesses']}" if c["witnesses"] else "")
             for name, c in data["checks"].items()]
    _emit(data, a.json, "\n".join(lines))
    return 0 if rep.ok else 1


def cmd_translate(a):
    kind, obj = load_model(a.model)
    if kind == "ccs" and a.to == "net":
        text = format_net(ccs_to_net(obj, a.cap))
    else:
        text = format_tsi(to_tsi(kind, obj, a.cap))
    if a.output:
        Path(a.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_check(a):
    if (a.formula is None) == (a.formula_file is None):
        raise _UsageError("give exactly one of --formula or --formula-file")
    if a.formula is not None:
        texts = [(None, a.formula)]
    else:
        texts = read_formulas(a.formula_file)
    jobs = [(a.model, t, a.engine, a.cap) for _, t in texts]
    if a.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as ex:
            results = list(ex.map(_check_one, jobs))
    else:
        results = [_check_one(j) for j in jobs]
    status = 0
    lines = []
    for r in results:
        sat = r["denot"]["satisfied"] if "denot" in r else r["game"]["winner"] == "eve"
        if "denot" in r and "game" in r and sat != (r["game"]["winner"] == "eve"):
            lines.append(f"ENGINES DISAGREE on {r['formula']}")
            status = max(status, 3)
        if not sat:
            status = max(status, 1)
        extra = ""
        if "game" in r:
            extra = f" (winner {r['game']['winner']}, {r['game']['node_count']} game nodes)"
        lines.append(f"{'satisfied' if sat else 'not satisfied'}: {r['formula']}{extra}")
    if a.json:
        single = results[0] if len(results) == 1 else None
        if single is not None and a.engine != "both":
            data = single["denot"] if a.engine == "denot" else single["game"]
        else:
            data = results
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))
    return status


def _parse_mode(text):
    if text in ("exact", "local"):
        return text, None
    if text.startswith("bounded="):
        try:
            return "bounded", int(text.split("=", 1)[1])
        except ValueError:
            pass
    raise _UsageError(f"bad --mode {text!r}; use exact, bounded=K or local")


def cmd_bisim(a):
    mode, depth = _parse_mode(a.mode)
    left, right = load_tsi(a.left, a.cap), load_tsi(a.right, a.cap)
    res = decide(left, right, a.rel, mode, depth)
    text = f"{res.relation} ({res.mode}): {res.verdict}"
    if res.witness is not None:
        text += f"\nwitness: {json.dumps(res.witness) if not isinstance(res.witness, str) else res.witness}"
    _emit(res.to_dict(), a.json, text)
    return {EQUIVALENT: 0, NOT_EQUIVALENT: 1}.get(res.verdict, 2)


def cmd_classify(a):
    c = classify(load_tsi(a.model, a.cap))
    data = c.to_dict()
    text = "\n".join([
        f"auto-concurrency: {data['auto_concurrency'] or 'none'}",
        f"confusion: {len(data['confusion'])} tuple(s)" + "".join(
            f"\n  ({x['t1']}, {x['t2']}, {x['t3']}) {x['variant']}, "
            f"{'deterministic' if x['deterministic'] else 'non-deterministic'}" for x in data["confusion"]),
        f"free-choice: {data['free_choice']}",
        f"well-behaved (local check valid): {data['xi']}",
    ])
    _emit(data, a.json, text)
    return 0


def cmd_fold(a):
    if a.verify:
        prog = parse_ccs(Path(a.verify).read_text(), a.verify)
        if not a.no_relabel:
            prog, _ = relabel_theta(prog)
        gen = CcsGenerator(prog)
        folded = fold(gen, a.cap).tsi
        texts = read_formulas(a.formulas) if a.formulas else []
        formulas = [parse(t, alphabet=folded.alphabet) for _, t in texts]
        checks = verify_fold(gen, formulas, a.depth, folded, a.cap)
        data = [{"formula": c.formula, "folded": c.folded, "lower": c.lower, "upper": c.upper,
                 "decided": c.decided, "agrees": c.agrees} for c in checks]
        bad = sum(1 for c in checks if not c.agrees)
        text = "\n".join(
            f"{'agree' if c.agrees else 'DISAGREE'}{'' if c.decided else ' (undecided at this depth)'}: "
            f"{c.formula} folded={c.folded}" for c in checks)
        text += f"\n{bad} disagreement(s) over {len(checks)} formula(s) at depth {a.depth}"
        _emit({"depth": a.depth, "disagreements": bad, "results": data}, a.json, text)
        return 0 if bad == 0 else 1
    if not a.ccs:
        raise _UsageError("fold needs --ccs PROGRAM or --verify PROGRAM")
    prog = parse_ccs(Path(a.ccs).read_text(), a.ccs)
    inverse = {}
    if not a.no_relabel:
        prog, inverse = relabel_theta(prog)
    res = fold(CcsGenerator(prog), a.cap)
    header = "".join(f"# label {new} stands for {old}\n" for new, old in sorted(inverse.items()) if new != old)
    header += "".join(f"# {sid} = {' | '.join(key)}\n" for sid, key in zip(res.tsi.states, res.class_keys))
    text = header + format_tsi(res.tsi)
    if a.output:
        Path(a.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_play(a, stdin=None, stdout=None):
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    tsi = load_tsi(a.model, a.cap)
    f = parse(a.formula, alphabet=tsi.alphabet)
    game = build_mc_game(tsi, f)
    sol = solve_mc(game)
    loser = "adam" if sol.winner == "eve" else "eve"
    print(f"{sol.winner} has a winning strategy; you play {loser}.", file=stdout)

    def choose(v, options):
        print(f"\nposition: {game.describe(v)}", file=stdout)
        for k, w in enumerate(options):
            print(f"  [{k}] {game.describe(w)}", file=stdout)
        while True:
            print("your move: ", end="", file=stdout, flush=True)
            line = stdin.readline()
            if not line:
                return options[0]
            try:
                k = int(line.strip())
                if 0 <= k < len(options):
                    return options[k]
            except ValueError:
                pass
            print("enter one of the numbers above", file=stdout)

    for step in replay(game, sol, choose):
        if "end" in step:
            print(f"{step['node']}  [{step['rule']}] {step['end']}", file=stdout)
        else:
            print(f"{step['node']}  [{step['rule']}] {step['mover']} -> {step['move']}", file=stdout)
    return 0


class _UsageError(Exception):
    pass


def build_parser():
    p = _Parser(prog="tflkit", description="Causality-aware model checking and equivalence games.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--json", action="store_true", help="machine-readable output")
        sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="state/process cap")

    s = sub.add_parser("validate", help="check the axioms of a model")
    s.add_argument("model")
    common(s)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("translate", help="turn a net, event structure or CCS program into a TSI")
    s.add_argument("model")
    s.add_argument("-o", "--output")
    s.add_argument("--to", choices=["tsi", "net"], default="tsi")
    common(s)
    s.set_defaults(func=cmd_translate)

    s = sub.add_parser("check", help="model-check a formula")
    s.add_argument("--model", required=True)
    s.add_argument("--formula")
    s.add_argument("--formula-file")
    s.add_argument("--engine", choices=["denot", "game", "both"], default="denot")
    s.add_argument("--jobs", type=int, default=1, help="parallel workers for formula files")
    common(s)
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("bisim", help="decide an equivalence between two models")
    s.add_argument("--rel", choices=list(RELATIONS), default="hpb")
    s.add_argument("--mode", default="exact", help="exact, bounded=K or local")
    s.add_argument("--left", required=True)
    s.add_argument("--right", required=True)
    common(s)
    s.set_defaults(func=cmd_bisim)

    s = sub.add_parser("classify", help="auto-concurrency, confusion and free-choice")
    s.add_argument("model")
    common(s)
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("fold", help="fold a CCS program into a finite TSI")
    s.add_argument("--ccs")
    s.add_argument("-o", "--output")
    s.add_argument("--verify", metavar="PROGRAM")
    s.add_argument("--formulas")
    s.add_argument("--depth", type=int, default=12)
    s.add_argument("--no-relabel", action="store_true")
    common(s)
    s.set_defaults(func=cmd_fold)

    s = sub.add_parser("play", help="play the model-checking game against the solver")
    s.add_argument("--model", required=True)
    s.add_argument("--formula", required=True)
    common(s)
    s.set_defaults(func=cmd_play)
    return p


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        return a.func(a)
    except _UsageError as e:
        print(f"tflkit: error: {e}", file=sys.stderr)
        return EX_USAGE
    except StateExplosion as e:
        print(f"tflkit: {e}", file=sys.stderr)
        return EX_SOFTWARE_CAP
    except (ParseError, TflError, OSError) as e:
        print(f"tflkit: {e}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":
    sys.exit(main())
