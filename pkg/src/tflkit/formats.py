"""Line-oriented text formats for transition systems, nets and event structures."""
from __future__ import annotations

from pathlib import Path

from .errors import ModelError, ParseError
from .models import EventStructure, PetriNet, Tsi, Transition, _pair


def _lines(text):
    for no, raw in enumerate(text.splitlines(), 1):
        words = []
        for w in raw.split():
            # the conflict operator is the only '#' that does not open a comment
            if w == "#" and len(words) == 2 and words[0] == "conflict":
                words.append(w)
                continue
            if w.startswith("#"):
                break
            if "#" in w:
                words.append(w.split("#", 1)[0])
                break
            words.append(w)
        if words:
            yield no, raw, words


def _col(raw, word):
    i = raw.find(word)
    return i + 1 if i >= 0 else 1


def _fail(msg, no, raw, word, path):
    raise ParseError(msg, no, _col(raw, word), path)


def parse_tsi(text: str, path=None) -> Tsi:
    states, initial, trans, indep = [], [], [], []
    for no, raw, w in _lines(text):
        kw = w[0]
        if kw == "state":
            if len(w) not in (2, 3) or (len(w) == 3 and w[2] != "init"):
                _fail("expected: state <id> [init]", no, raw, kw, path)
            states.append(w[1])
            if len(w) == 3:
                initial.append(w[1])
        elif kw == "trans":
            if len(w) != 5:
                _fail("expected: trans <id> <src> <label> <dst>", no, raw, kw, path)
            trans.append((no, raw, Transition(*w[1:])))
        elif kw == "indep":
            if len(w) != 3:
                _fail("expected: indep <id> <id>", no, raw, kw, path)
            indep.append((no, raw, w[1], w[2]))
        else:
            _fail(f"unknown keyword {kw!r}", no, raw, kw, path)
    if len(initial) != 1:
        raise ParseError(f"exactly one initial state required, found {len(initial)}", path=path)
    known_states = set(states)
    ids = set()
    for no, raw, t in trans:
        for end in (t.src, t.dst):
            if end not in known_states:
                _fail(f"unknown state {end!r}", no, raw, end, path)
        ids.add(t.id)
    for no, raw, a, b in indep:
        for x in (a, b):
            if x not in ids:
                _fail(f"unknown transition {x!r}", no, raw, x, path)
        if a == b:
            _fail("independence must be irreflexive", no, raw, a, path)
    try:
        return Tsi(tuple(states), initial[0], tuple(t for _, _, t in trans),
                   frozenset(_pair(a, b) for _, _, a, b in indep))
    except ModelError as e:
        raise ParseError(str(e), path=path) from e


def format_tsi(tsi: Tsi) -> str:
    out = []
    for s in tsi.states:
        out.append(f"state {s} init" if s == tsi.initial else f"state {s}")
    for t in tsi.transitions:
        out.append(f"trans {t.id} {t.src} {t.label} {t.dst}")
    for p in sorted(sorted(p) for p in tsi.indep):
        out.append(f"indep {p[0]} {p[1]}")
    return "\n".join(out) + "\n"


def parse_net(text: str, path=None) -> PetriNet:
    places, marked, actions, arcs = [], [], {}, []
    for no, raw, w in _lines(text):
        kw = w[0]
        if kw == "place":
            if len(w) not in (2, 3) or (len(w) == 3 and w[2] != "marked"):
                _fail("expected: place <id> [marked]", no, raw, kw, path)
            places.append(w[1])
            if len(w) == 3:
                marked.append(w[1])
        elif kw == "action":
            if len(w) != 3:
                _fail("expected: action <id> <label>", no, raw, kw, path)
            actions[w[1]] = w[2]
        elif kw == "arc":
            if len(w) != 4 or w[2] != "->":
                _fail("expected: arc <from> -> <to>", no, raw, kw, path)
            arcs.append((no, raw, w[1], w[3]))
        else:
            _fail(f"unknown keyword {kw!r}", no, raw, kw, path)
    pset = set(places)
    for no, raw, x, y in arcs:
        ok = (x in pset and y in actions) or (x in actions and y in pset)
        if not ok:
            _fail(f"arc {x} -> {y} must join a declared place and a declared action", no, raw, x, path)
    return PetriNet.build(places, actions, [(x, y) for _, _, x, y in arcs], marked)


def format_net(net: PetriNet) -> str:
    out = [f"place {p} marked" if p in net.initial else f"place {p}" for p in net.places]
    out += [f"action {a} {lab}" for a, lab in net.actions.items()]
    for a in net.actions:
        out += [f"arc {p} -> {a}" for p in sorted(net.pre[a])]
        out += [f"arc {a} -> {p}" for p in sorted(net.post[a])]
    return "\n".join(out) + "\n"


def parse_es(text: str, path=None) -> EventStructure:
    events, causal, conflict = {}, [], []
    for no, raw, w in _lines(text):
        kw = w[0]
        if kw == "event":
            if len(w) != 3:
                _fail("expected: event <id> <label>", no, raw, kw, path)
            events[w[1]] = w[2]
        elif kw == "causal":
            if len(w) != 4 or w[2] != "<":
                _fail("expected: causal <id> < <id>", no, raw, kw, path)
            causal.append((no, raw, w[1], w[3]))
        elif kw == "conflict":
            if len(w) != 4 or w[2] != "#":
                _fail("expected: conflict <id> # <id>", no, raw, kw, path)
            conflict.append((no, raw, w[1], w[3]))
        else:
            _fail(f"unknown keyword {kw!r}", no, raw, kw, path)
    for no, raw, a, b in causal + conflict:
        for x in (a, b):
            if x not in events:
                _fail(f"unknown event {x!r}", no, raw, x, path)
    return EventStructure(events, frozenset((a, b) for _, _, a, b in causal),
                          frozenset(_pair(a, b) for _, _, a, b in conflict))


def format_es(es: EventStructure) -> str:
    out = [f"event {e} {es.labels[e]}" for e in es.events]
    out += [f"causal {a} < {b}" for a, b in sorted(es.causality)]
    out += [f"conflict {p[0]} # {p[-1]}" for p in sorted(sorted(p) for p in es.conflict)]
    return "\n".join(out) + "\n"


def load_model(path):
    """Load a .tsi, .net, .es or .ccs file. Returns (kind, object)."""
    path = Path(path)
    text = path.read_text()
    ext = path.suffix.lower()
    if ext == ".tsi":
        return "tsi", parse_tsi(text, str(path))
    if ext == ".net":
        return "net", parse_net(text, str(path))
    if ext == ".es":
        return "es", parse_es(text, str(path))
    if ext == ".ccs":
        from .ccs import parse_ccs
        return "ccs", parse_ccs(text, str(path))
    raise ParseError(f"unknown model extension {ext!r}", path=str(path))
