"""Exact transfinite execution.

Successor steps follow the transition table.  Limit stages are only ever
computed under a certificate that makes them exact:

* RepeatCert(mu, pi): the full configuration at step mu+pi equals the one at
  step mu, so the run is periodic from mu and the omega-limit of each cell is
  1 iff the cell is 1 somewhere in one period (that is its limsup).

* TranslationCert(mu, pi, shift): the configuration at mu+pi looks exactly
  like the one at mu moved `shift` cells right (same state, right half-tapes
  equal under the shift), the head never dips below its mu position inside
  the window and no step in the window hit the cell-0 edge clamp.  The run
  then replays forever shifted right, every cell is eventually constant, and
  the omega-limit is the tape left behind: the pre-window prefix followed by
  the wake of one cycle repeating.

Limits of limits reuse the same idea one level up: block-start snapshots
recur, and a cell is 1 at the w^k-limit iff it is 1 somewhere inside
cofinally many level-(k-1) blocks, i.e. inside the certified cycle.

A run diverges provably when a limit snapshot recurs in the strong sense: an
identical earlier limit snapshot such that no cell that is 0 in it was 1 at
any stage in between.  Such a run repeats that whole span of stages forever,
reproducing the snapshot at every higher limit, so a Loops verdict is sound.
Recurrence where some in-between cell was 1 is not a loop: the next limit
sets that cell and the computation escapes with a genuinely new snapshot.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .machine import Program, validate, ProgramError
from .ordinal import (Ordinal, ZERO as ZERO_ORD, successor, limit_step,
                      BudgetOrdinalOverflow)
from .reals import Real, ZERO as ZERO_REAL, or_all, and_not, shift_union


class StepFromHalt(Exception):
    pass


class OracleProtocolError(Exception):
    pass


class LimitNotFound(Exception):
    """No block-start recurrence within the per-level budget."""


@dataclass(frozen=True)
class BudgetPolicy:
    depth: int = 3
    per_level_budget: int = 4096
    appearance_cap: int = 512

    def __post_init__(self):
        if self.depth < 1:
            raise ValueError("depth must be >= 1")
        if self.per_level_budget < 2:
            raise ValueError("per-level budget must be >= 2")
        if self.appearance_cap < 1:
            raise ValueError("appearance cap must be >= 1")

    def scaled(self, factor: int) -> "BudgetPolicy":
        return BudgetPolicy(self.depth, self.per_level_budget * factor,
                            self.appearance_cap)


DEFAULT_BUDGET = BudgetPolicy()


@dataclass(frozen=True)
class Snapshot:
    state: str
    head: int
    tracks: tuple[Real, ...]
    stage: Ordinal

    def key(self):
        """Configuration identity: everything but the stage label."""
        return (self.state, self.head, self.tracks)

    def digest(self) -> str:
        body = "%s|%d|%s|%s" % (self.state, self.head,
                                ";".join(t.render() for t in self.tracks),
                                self.stage.render())
        return hashlib.sha256(body.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class RepeatCert:
    mu: int
    pi: int


@dataclass(frozen=True)
class TranslationCert:
    mu: int
    pi: int
    shift: int


@dataclass(frozen=True)
class HaltAt:
    steps: int


@dataclass(frozen=True)
class ExceededCert:
    steps: int


@dataclass(frozen=True)
class BlockSummary:
    start: Snapshot
    certificate: object
    ever_one: tuple[Real, ...]
    limit: Snapshot | None
    explicit: tuple[Snapshot, ...]


@dataclass(frozen=True)
class QueryRecord:
    stage: Ordinal
    real: Real
    answer: bool


@dataclass(frozen=True)
class LoopCert:
    first: Ordinal
    second: Ordinal
    snapshot_digest: str


@dataclass
class RunTrace:
    blocks: list = field(default_factory=list)
    limits: list = field(default_factory=list)   # (level, Snapshot) for levels >= 2
    final_limit: Snapshot | None = None
    budget: BudgetPolicy = DEFAULT_BUDGET


@dataclass(frozen=True)
class RunResult:
    outcome: str                 # "halted" | "loops" | "exceeded"
    trace: RunTrace
    time: Ordinal | None = None
    output: Real | None = None
    loop: LoopCert | None = None
    reason: str | None = None    # exceeded: "budget" | "ordinal-overflow"

    def __post_init__(self):
        if self.outcome == "halted":
            assert self.time is not None and not self.time.is_limit(), \
                "halting times are never limit ordinals"

    @property
    def halted(self):
        return self.outcome == "halted"


def _oracle_kind(oracle):
    return getattr(oracle, "kind", None)


def initial_snapshot(p: Program, input_real: Real = ZERO_REAL, oracle=None) -> Snapshot:
    tracks = [input_real] + [ZERO_REAL] * (p.track_count - 1)
    if _oracle_kind(oracle) == "real":
        if p.track_count != 4:
            raise OracleProtocolError("real oracle needs a 4-track program")
        tracks[3] = oracle.real
    return Snapshot(p.start_state, 0, tuple(tracks), ZERO_ORD)


def _step(s: Snapshot, p: Program, oracle=None, query_log=None):
    """One successor step; returns (snapshot, clamped-at-edge)."""
    if s.state == p.halt_state:
        raise StepFromHalt("cannot step from the halt state")
    if p.query_state is not None and s.state == p.query_state:
        if _oracle_kind(oracle) != "set":
            raise OracleProtocolError("query state entered without a set oracle")
        q = oracle.canonical_query(s.tracks[3])
        ans = oracle.contains(q)
        if query_log is not None:
            query_log.append(QueryRecord(s.stage, q, ans))
        nxt = p.yes_state if ans else p.no_state
        return Snapshot(nxt, s.head, s.tracks, successor(s.stage)), False
    read = tuple(t.bit(s.head) for t in s.tracks)
    rule = p.rules.get((s.state, read))
    if rule is None:
        raise ProgramError("no rule for state %r reading %s" % (s.state, read))
    tracks = list(s.tracks)
    for idx, bit in enumerate(rule.write):
        if idx == 3 and _oracle_kind(oracle) == "real":
            continue  # the oracle track is read-only
        if tracks[idx].bit(s.head) != bit:
            tracks[idx] = tracks[idx].with_bit(s.head, bit)
    head, clamped = s.head, False
    if rule.move == "R":
        head += 1
    elif rule.move == "L":
        if head == 0:
            clamped = True
        else:
            head -= 1
    return Snapshot(rule.next_state, head, tuple(tracks), successor(s.stage)), clamped


def step(s: Snapshot, p: Program, oracle=None, query_log=None) -> Snapshot:
    return _step(s, p, oracle, query_log)[0]


def _or_tracks(snaps, n_tracks):
    return tuple(or_all(s.tracks[t] for s in snaps) for t in range(n_tracks))


def run_block(start: Snapshot, p: Program, budget: BudgetPolicy,
              oracle=None, query_log=None) -> BlockSummary:
    """Step from a block start until halt or an exact limit certificate."""
    n_tracks = p.track_count
    if start.state == p.halt_state:
        return BlockSummary(start, HaltAt(0), tuple(start.tracks), None, (start,))
    snaps = [start]
    heads = [start.head]
    seen = {start.key(): 0}
    records = [(0, start.head)]      # strict head maxima, translation candidates
    max_head = start.head
    clamps: set[int] = set()         # i such that the step snaps[i] -> snaps[i+1] clamped

    def finish_repeat(mu, pi):
        window = snaps[: mu + pi + 1]
        ever = _or_tracks(window, n_tracks)
        limit_tracks = _or_tracks(snaps[mu: mu + pi + 1], n_tracks)
        stage = limit_step(start.stage, 1, budget.depth)
        lim = Snapshot(p.limit_state, 0, limit_tracks, stage)
        return BlockSummary(start, RepeatCert(mu, pi), ever, lim, tuple(window))

    def finish_translation(mu, pi, d):
        window = snaps[: mu + pi + 1]
        h0 = heads[mu]
        last = snaps[mu + pi]
        ever = []
        cycle = _or_tracks(snaps[mu: mu + pi + 1], n_tracks)
        whole = _or_tracks(window, n_tracks)
        for t in range(n_tracks):
            ever.append(or_all([whole[t], shift_union(cycle[t], h0, d)]))
        limit_tracks = tuple(
            Real(last.tracks[t].bits(h0), last.tracks[t].bits(h0 + d)[h0:])
            for t in range(n_tracks))
        stage = limit_step(start.stage, 1, budget.depth)
        lim = Snapshot(p.limit_state, 0, limit_tracks, stage)
        return BlockSummary(start, TranslationCert(mu, pi, d), tuple(ever),
                            lim, tuple(window))

    for i in range(1, budget.per_level_budget + 1):
        nxt, clamped = _step(snaps[-1], p, oracle, query_log)
        if clamped:
            clamps.add(i - 1)
        snaps.append(nxt)
        heads.append(nxt.head)
        if nxt.state == p.halt_state:
            return BlockSummary(start, HaltAt(i), _or_tracks(snaps, n_tracks),
                                None, tuple(snaps))
        key = nxt.key()
        if key in seen:
            mu = seen[key]
            return finish_repeat(mu, i - mu)
        seen[key] = i
        if nxt.head > max_head:
            for j, hj in records:
                if snaps[j].state != nxt.state:
                    continue
                d = nxt.head - hj
                if d < 1 or min(heads[j: i + 1]) < hj:
                    continue
                if any(t in clamps for t in range(j, i)):
                    continue
                if all(nxt.tracks[t].suffix(hj + d) == snaps[j].tracks[t].suffix(hj)
                       for t in range(n_tracks)):
                    return finish_translation(j, i - j, d)
            records.append((i, nxt.head))
            max_head = nxt.head
    return BlockSummary(start, ExceededCert(budget.per_level_budget),
                        _or_tracks(snaps, n_tracks), None, tuple(snaps))


def verify_certificate(p: Program, start: Snapshot, cert, oracle=None) -> bool:
    """Re-check an emitted certificate against only the snapshots it cites."""
    if isinstance(cert, ExceededCert):
        return True
    steps = cert.steps if isinstance(cert, HaltAt) else cert.mu + cert.pi
    snaps = [start]
    heads = [start.head]
    clamps = set()
    for i in range(steps):
        if snaps[-1].state == p.halt_state:
            return isinstance(cert, HaltAt) and i == cert.steps
        nxt, clamped = _step(snaps[-1], p, oracle)
        if clamped:
            clamps.add(i)
        snaps.append(nxt)
        heads.append(nxt.head)
    if isinstance(cert, HaltAt):
        return snaps[-1].state == p.halt_state and \
            all(s.state != p.halt_state for s in snaps[:-1])
    a, b = snaps[cert.mu], snaps[cert.mu + cert.pi]
    if isinstance(cert, RepeatCert):
        return a.key() == b.key()
    if isinstance(cert, TranslationCert):
        d = cert.shift
        h0 = heads[cert.mu]
        return (a.state == b.state
                and b.head - a.head == d and d >= 1
                and min(heads[cert.mu: cert.mu + cert.pi + 1]) >= h0
                and not any(t in clamps for t in range(cert.mu, cert.mu + cert.pi))
                and all(b.tracks[t].suffix(h0 + d) == a.tracks[t].suffix(h0)
                        for t in range(p.track_count)))
    raise ValueError("unknown certificate %r" % (cert,))


def limit_of_level(blocks, level: int, budget: BudgetPolicy) -> Snapshot:
    """The w^level limit of a chained run of level-(level-1) blocks.

    Detects recurrence of block-start snapshots; the limit's cell is 1 iff
    the cell is in some cycle block's ever_one (1 cofinally below w^level).
    """
    if level < 2:
        raise ValueError("limit_of_level applies at levels >= 2")
    if not blocks:
        raise ValueError("no blocks given")
    for b in blocks:
        if b.limit is None:
            raise ValueError("block without a limit (halted or exceeded): no limit to take")
    for prev, nxt in zip(blocks, blocks[1:]):
        if prev.limit.key() != nxt.start.key():
            raise ValueError("block chain broken: each start must be the previous limit")
    n_tracks = len(blocks[0].start.tracks)
    starts = {blocks[0].start.key(): 0}
    for m, b in enumerate(blocks[: budget.per_level_budget]):
        key = b.limit.key()
        if key in starts:
            i = starts[key]
            union = tuple(or_all(blocks[k].ever_one[t] for k in range(i, m + 1))
                          for t in range(n_tracks))
            stage = limit_step(blocks[0].start.stage, level, budget.depth)
            return Snapshot(b.limit.state, 0, union, stage)
        starts[key] = m + 1
    raise LimitNotFound("no block-start recurrence within %d blocks"
                        % budget.per_level_budget)


def run_transfinite(p: Program, input_real: Real = ZERO_REAL,
                    budget: BudgetPolicy = DEFAULT_BUDGET,
                    oracle=None, query_log=None) -> RunResult:
    problems = validate(p)
    if problems:
        raise ProgramError("invalid program: %s" % problems[:3])
    trace = RunTrace(budget=budget)
    registry: list[tuple[Ordinal, tuple, Snapshot]] = []
    n_tracks = p.track_count

    def check_loops(snap: Snapshot) -> LoopCert | None:
        key = snap.key()
        for st1, k1, _s1 in registry:
            if k1 != key:
                continue
            between = [b for b in trace.blocks if b.start.stage >= st1]
            strong = True
            for t in range(n_tracks):
                ever = or_all(b.ever_one[t] for b in between)
                if not and_not(ever, snap.tracks[t]).is_zero():
                    strong = False
                    break
            if strong:
                return LoopCert(st1, snap.stage, snap.digest())
        return None

    def level_limit(level: int, snap: Snapshot):
        if level == 1:
            summary = run_block(snap, p, budget, oracle, query_log)
            trace.blocks.append(summary)
            cert = summary.certificate
            if isinstance(cert, HaltAt):
                final = summary.explicit[-1]
                return ("halted", final.stage, final.tracks[2])
            if isinstance(cert, ExceededCert):
                return ("exceeded", "budget", None)
            lim = summary.limit
            loop = check_loops(lim)
            if loop is not None:
                trace.final_limit = lim
                return ("loops", loop, None)
            registry.append((lim.stage, lim.key(), lim))
            return ("limit", lim, summary.ever_one)
        starts = {snap.key(): 0}
        evers = []
        cur = snap
        for m in range(budget.per_level_budget):
            r = level_limit(level - 1, cur)
            if r[0] != "limit":
                return r
            nxt, ever = r[1], r[2]
            evers.append(ever)
            key = nxt.key()
            if key in starts:
                i = starts[key]
                union = tuple(or_all(e[t] for e in evers[i:])
                              for t in range(n_tracks))
                stage = limit_step(snap.stage, level, budget.depth)
                lim = Snapshot(p.limit_state, 0, union, stage)
                loop = check_loops(lim)
                if loop is not None:
                    trace.final_limit = lim
                    return ("loops", loop, None)
                registry.append((lim.stage, lim.key(), lim))
                trace.limits.append((level, lim))
                whole = tuple(or_all(e[t] for e in evers)
                              for t in range(n_tracks))
                return ("limit", lim, whole)
            starts[key] = m + 1
            cur = nxt
        return ("exceeded", "budget", None)

    init = initial_snapshot(p, input_real, oracle)
    try:
        r = level_limit(budget.depth, init)
    except BudgetOrdinalOverflow:
        r = ("exceeded", "ordinal-overflow", None)
    if r[0] == "halted":
        return RunResult("halted", trace, time=r[1], output=r[2])
    if r[0] == "loops":
        return RunResult("loops", trace, loop=r[1])
    if r[0] == "limit":
        # the top-level w^depth limit itself has no representable stage
        return RunResult("exceeded", trace, reason="ordinal-overflow")
    return RunResult("exceeded", trace, reason=r[1])


@dataclass(frozen=True)
class ClockableTime:
    time: Ordinal | None
    exceeded: bool


def clockable_time(p: Program, budget: BudgetPolicy = DEFAULT_BUDGET) -> ClockableTime:
    res = run_transfinite(p, ZERO_REAL, budget)
    if res.outcome == "halted":
        return ClockableTime(res.time, False)
    return ClockableTime(None, res.outcome == "exceeded")
