"""Program model and the `.itm` assembly format.

A program is a total transition table over aligned tape tracks: every
non-halt state must have a rule for every read vector.  Three tracks mean
(input, scratch, output); a fourth track is the oracle tape.  One head is
shared by all tracks, and a left move at cell 0 leaves the head at cell 0.

Rules written against the query protocol never fire mechanically: a machine
entering the query state is answered by the oracle (see the oracle module),
so the query state carries no rules, like halt.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass

from .reals import Real, parse_real  # noqa: F401  (re-exported: machine-facing types)

MOVES = ("L", "R", "S")

TRACK_NAMES = ("input", "scratch", "output", "oracle")


class ProgramError(Exception):
    pass


class ProgramSyntaxError(ProgramError):
    def __init__(self, line: int, column: int, message: str):
        super().__init__("line %d, col %d: %s" % (line, column, message))
        self.line = line
        self.column = column


class TotalityError(ProgramError):
    def __init__(self, missing):
        self.missing = list(missing)
        shown = ", ".join("%s/%s" % (s, "".join(map(str, r)))
                          for s, r in self.missing[:8])
        more = "" if len(self.missing) <= 8 else " (+%d more)" % (len(self.missing) - 8)
        super().__init__("missing rules for: %s%s" % (shown, more))


@dataclass(frozen=True)
class Rule:
    write: tuple[int, ...]
    move: str
    next_state: str


@dataclass(frozen=True, eq=False)
class Program:
    track_count: int
    start_state: str
    limit_state: str
    halt_state: str
    rules: dict[tuple[str, tuple[int, ...]], Rule]
    query_state: str | None = None
    yes_state: str | None = None
    no_state: str | None = None

    def states(self) -> list[str]:
        named = [self.start_state, self.limit_state, self.halt_state]
        for s in (self.query_state, self.yes_state, self.no_state):
            if s is not None:
                named.append(s)
        seen = dict.fromkeys(named)
        for st, _ in self.rules:
            seen.setdefault(st, None)
        for rule in self.rules.values():
            seen.setdefault(rule.next_state, None)
        return list(seen)

    def work_states(self) -> list[str]:
        special = {self.start_state, self.limit_state, self.halt_state,
                   self.query_state, self.yes_state, self.no_state}
        return sorted(s for s in self.states() if s not in special)

    def rule_states(self) -> list[str]:
        """States that must carry a total rule set, in canonical order."""
        out = []
        for s in [self.start_state, self.limit_state] + self.work_states():
            if s not in out and s != self.halt_state and s != self.query_state:
                out.append(s)
        for s in (self.yes_state, self.no_state):
            if s is not None and s not in out and s != self.halt_state:
                out.append(s)
        return out

    def read_vectors(self):
        return itertools.product((0, 1), repeat=self.track_count)

    def __eq__(self, other):
        return isinstance(other, Program) and render_program(self) == render_program(other)

    def __hash__(self):
        return hash(render_program(self))

    def digest(self) -> str:
        return hashlib.sha256(render_program(self).encode()).hexdigest()[:16]

    def __repr__(self):
        return "Program[%d states, %d tracks]" % (len(self.states()), self.track_count)


def _state_sort_key(p: Program):
    order = {p.start_state: 0, p.limit_state: 1}
    def key(state):
        return (order.get(state, 2), state)
    return key


def render_program(p: Program) -> str:
    lines = ["tracks: %d" % p.track_count,
             "start: %s" % p.start_state,
             "limit: %s" % p.limit_state,
             "halt: %s" % p.halt_state]
    if p.query_state is not None:
        lines.append("query: %s" % p.query_state)
    if p.yes_state is not None:
        lines.append("yes: %s" % p.yes_state)
    if p.no_state is not None:
        lines.append("no: %s" % p.no_state)
    key = _state_sort_key(p)
    for (state, read), rule in sorted(
            p.rules.items(), key=lambda kv: (key(kv[0][0]), kv[0][1])):
        lines.append("%s %s -> %s %s %s" % (
            state, "".join(map(str, read)),
            rule.next_state, "".join(map(str, rule.write)), rule.move))
    return "\n".join(lines) + "\n"


def parse_program(text: str) -> Program:
    headers: dict[str, str] = {}
    rules: dict[tuple[str, tuple[int, ...]], Rule] = {}
    rule_lines: list[tuple[int, str, tuple[int, ...], str, tuple[int, ...], str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "->" in line:
            left, _, right = line.partition("->")
            lparts, rparts = left.split(), right.split()
            if len(lparts) != 2 or len(rparts) != 3:
                raise ProgramSyntaxError(lineno, 1, "rule must be '<state> <read> -> <state> <write> <L|R|S>'")
            state, read = lparts
            nxt, write, move = rparts
            if any(c not in "01" for c in read) or any(c not in "01" for c in write):
                raise ProgramSyntaxError(lineno, 1, "read/write vectors must be 0/1 strings")
            if move not in MOVES:
                raise ProgramSyntaxError(lineno, 1, "move must be one of L, R, S")
            rule_lines.append((lineno, state, tuple(int(c) for c in read),
                               nxt, tuple(int(c) for c in write), move))
        elif ":" in line:
            name, _, value = line.partition(":")
            name, value = name.strip(), value.strip()
            if name not in ("tracks", "start", "limit", "halt", "query", "yes", "no"):
                raise ProgramSyntaxError(lineno, 1, "unknown header %r" % name)
            if not value or len(value.split()) != 1:
                raise ProgramSyntaxError(lineno, len(name) + 2, "header %r needs one value" % name)
            if name in headers:
                raise ProgramSyntaxError(lineno, 1, "duplicate header %r" % name)
            headers[name] = value
        else:
            raise ProgramSyntaxError(lineno, 1, "expected header or rule")
    for required in ("tracks", "start", "limit", "halt"):
        if required not in headers:
            raise ProgramSyntaxError(0, 0, "missing header %r" % required)
    try:
        track_count = int(headers["tracks"])
    except ValueError:
        raise ProgramSyntaxError(0, 0, "tracks must be an integer")
    if track_count not in (3, 4):
        raise ProgramSyntaxError(0, 0, "tracks must be 3 or 4")
    for lineno, state, read, nxt, write, move in rule_lines:
        if len(read) != track_count or len(write) != track_count:
            raise ProgramSyntaxError(lineno, 1, "vector width must equal track count %d" % track_count)
        if (state, read) in rules:
            raise ProgramSyntaxError(lineno, 1, "duplicate rule for %s %s" % (state, "".join(map(str, read))))
        rules[(state, read)] = Rule(write, move, nxt)
    p = Program(track_count=track_count,
                start_state=headers["start"],
                limit_state=headers["limit"],
                halt_state=headers["halt"],
                query_state=headers.get("query"),
                yes_state=headers.get("yes"),
                no_state=headers.get("no"),
                rules=rules)
    header_states = {headers["start"], headers["limit"], headers["halt"],
                     headers.get("query"), headers.get("yes"), headers.get("no")}
    sources = {s for s, _ in rules}
    for lineno, state, read, nxt, write, move in rule_lines:
        if nxt not in sources and nxt not in header_states:
            raise ProgramSyntaxError(lineno, 1, "undeclared state %r" % nxt)
    problems = validate(p)
    if problems:
        missing = [m for m in problems if isinstance(m, tuple)]
        if missing:
            raise TotalityError(missing)
        raise ProgramError("; ".join(problems))
    return p


def validate(p: Program):
    """Check all Program invariants; returns [] when the program is well formed.

    Missing (state, read-vector) pairs are reported as tuples so callers can
    surface the totality gap precisely; everything else is a message string.
    """
    problems: list = []
    if p.track_count not in (3, 4):
        problems.append("track count must be 3 or 4")
        return problems
    if p.limit_state == p.halt_state:
        problems.append("limit state must be distinct from halt state")
    protocol = [p.query_state, p.yes_state, p.no_state]
    if any(s is not None for s in protocol) and any(s is None for s in protocol):
        problems.append("query protocol incomplete: query/yes/no states must all be present or all absent")
    for (state, read), rule in p.rules.items():
        if state == p.halt_state:
            problems.append("halt state %r has outgoing rule" % state)
        if state == p.query_state:
            problems.append("query state %r has outgoing rule (answers are oracle-driven)" % state)
        if len(read) != p.track_count or len(rule.write) != p.track_count:
            problems.append("rule %s/%s has wrong vector width" % (state, "".join(map(str, read))))
        if rule.move not in MOVES:
            problems.append("rule %s/%s has bad move %r" % (state, "".join(map(str, read)), rule.move))
    for state in p.rule_states():
        for read in p.read_vectors():
            if (state, read) not in p.rules:
                problems.append((state, read))
    return problems


# --- reference machines ----------------------------------------------------
#
# The fill convention for rules a description leaves open is the least rule
# text "-> halt 000 L", which also pins these machines to small indices in
# the canonical enumeration.

def _zeros(n):
    return tuple(0 for _ in range(n))


def default_rule(p_halt_state: str, tracks: int) -> Rule:
    return Rule(_zeros(tracks), "L", p_halt_state)


def _filled(tracks: int, overrides, query=None, yes=None, no=None) -> Program:
    states = ["start", "limit"]
    for (st, _read) in overrides:
        if st not in states and st != "halt":
            states.append(st)
    rules = {}
    for st in states:
        for read in itertools.product((0, 1), repeat=tracks):
            rules[(st, read)] = default_rule("halt", tracks)
    rules.update(overrides)
    return Program(track_count=tracks, start_state="start", limit_state="limit",
                   halt_state="halt", query_state=query, yes_state=yes,
                   no_state=no, rules=rules)


def p_halt() -> Program:
    """Writes output bit 0 and halts on the first step."""
    return _filled(3, {("start", (0, 0, 0)): Rule((0, 0, 1), "S", "halt")})


def p_flip() -> Program:
    """Flips scratch bit 0 forever; ignores the input track entirely."""
    overrides = {}
    for read in itertools.product((0, 1), repeat=3):
        i, s, o = read
        rule = Rule((i, 1 - s, o), "S", "start")
        overrides[("start", read)] = rule
        overrides[("limit", read)] = rule
    return _filled(3, overrides)


def p_flip_lh() -> Program:
    """p_flip, except the limit state halts on seeing the limsup scratch 1."""
    p = p_flip()
    rules = dict(p.rules)
    rules[("limit", (0, 1, 0))] = Rule((0, 1, 0), "S", "halt")
    return Program(track_count=3, start_state="start", limit_state="limit",
                   halt_state="halt", rules=rules)


def p_sweep() -> Program:
    """Marches right writing scratch 1s; all other rules self-loop."""
    overrides = {}
    for st in ("start", "limit"):
        for read in itertools.product((0, 1), repeat=3):
            overrides[(st, read)] = Rule(read, "S", st)
    overrides[("start", (0, 0, 0))] = Rule((0, 1, 0), "R", "start")
    return _filled(3, overrides)


def extend_to_oracle_tracks(p: Program) -> Program:
    """4-track version of a 3-track program that never touches track 4."""
    if p.track_count != 3:
        raise ValueError("only 3-track programs can be extended")
    rules = {}
    for (state, read), rule in p.rules.items():
        for b in (0, 1):
            rules[(state, read + (b,))] = Rule(rule.write + (b,), rule.move, rule.next_state)
    return Program(track_count=4, start_state=p.start_state,
                   limit_state=p.limit_state, halt_state=p.halt_state,
                   query_state=p.query_state, yes_state=p.yes_state,
                   no_state=p.no_state, rules=rules)
