"""Approximation machinery over exact transfinite runs.

Everything here replays certified traces rather than re-deriving semantics:
the universal dovetailer logs each new distinct track content with the exact
stage it first appears; stabilization search reads cell histories off the
certificates; the halting-set approximation stream is the exact sequence of
budgeted halting events; and the iterated-jump matrix replays the
transfinite-injury procedure event by event, erasing higher rows whenever a
lower row improves.

Translation-certified blocks need care: the wake keeps producing fresh track
contents below the block's limit, either forever (each cycle extends the
content) or not at all (the cycle is absorbed by the periodic background).
One cycle comparison decides which, so content streams are enumerated
exacttly up to the appearance cap and truncation is always flagged with the
first stage the log no longer covers.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .machine import Program
from .ordinal import (Ordinal, OrderCode, ZERO as ZERO_ORD, OMEGA, cnf_add,
                      element_of, from_int, pair_index, successor)
from .oracle import RealOracle, _as_programs
from .reals import Real, ZERO as ZERO_REAL, from_support
from .runner import (BlockSummary, BudgetPolicy, DEFAULT_BUDGET, ExceededCert,
                     RepeatCert, RunResult, TranslationCert, run_transfinite)


class TruncatedLog(Exception):
    """The appearance log does not cover the requested stage range."""


def _digest(r: Real) -> str:
    return hashlib.sha256(r.render().encode()).hexdigest()[:12]


# --- per-program content streams -------------------------------------------

def _translation_tail(block: BlockSummary, cap: int):
    """Contents of the stages past the certified window of a translation
    block, as (relative step, per-track contents).  Yields nothing when the
    wake is absorbed by the background (the stream is stationary); otherwise
    the stream is genuinely infinite and is cut at `cap` with a flag."""
    cert = block.certificate
    mu, pi, d = cert.mu, cert.pi, cert.shift
    h0 = block.explicit[mu].head
    limit = block.limit
    n_tracks = len(limit.tracks)

    def contents(k, i):
        out = []
        for t in range(n_tracks):
            head_bits = limit.tracks[t].bits(h0 + k * d)
            rest = block.explicit[mu + i].tracks[t].suffix(h0)
            out.append(Real(head_bits + rest.prefix, rest.tail))
        return tuple(out)

    window = [tuple(block.explicit[mu + i].tracks) for i in range(pi)]
    first_cycle = [contents(1, i) for i in range(pi)]
    if first_cycle == window:
        return  # wake absorbed by the background: the stream is stationary
    emitted = 0
    k = 1
    while True:
        for i in range(pi):
            rel = mu + k * pi + i
            if rel <= mu + pi:
                continue
            if emitted >= cap:
                yield (rel, None)  # truncation marker
                return
            yield (rel, contents(k, i))
            emitted += 1
        k += 1


def _translation_track_stationary(block: BlockSummary, track: int) -> bool:
    """Whether one track's content stops changing past the certified window
    of a translation block (the per-cycle wake extension is absorbed)."""
    cert = block.certificate
    mu, pi, d = cert.mu, cert.pi, cert.shift
    h0 = block.explicit[mu].head
    for i in range(pi):
        base = block.explicit[mu + i].tracks[track]
        rest = base.suffix(h0)
        shifted = Real(block.limit.tracks[track].bits(h0 + d) + rest.prefix,
                       rest.tail)
        if shifted != base:
            return False
    return True


def _program_content_events(res: RunResult, cap: int):
    """(stage, track, Real) stream of content changes, plus the first stage
    the stream no longer covers (None when it covers the whole run)."""
    events = []
    horizon = None
    last = {}
    def emit(stage, tracks):
        for t, content in enumerate(tracks):
            if last.get(t) != content:
                last[t] = content
                events.append((stage, t, content))
    for block in res.trace.blocks:
        base = block.start.stage
        for rel, snap in enumerate(block.explicit):
            emit(cnf_add(base, from_int(rel)), snap.tracks)
        cert = block.certificate
        if isinstance(cert, ExceededCert):
            horizon = cnf_add(base, from_int(len(block.explicit)))
            break
        if isinstance(cert, TranslationCert):
            cut = None
            for rel, tracks in _translation_tail(block, cap):
                if tracks is None:
                    cut = cnf_add(base, from_int(rel))
                    break
                emit(cnf_add(base, from_int(rel)), tracks)
            if cut is not None:
                horizon = cut
                break
        if block.limit is not None:
            emit(block.limit.stage, block.limit.tracks)
    if res.trace.final_limit is not None and horizon is None:
        emit(res.trace.final_limit.stage, res.trace.final_limit.tracks)
    if horizon is None and res.outcome == "exceeded":
        # budget ran out above block level: every block was certified, so
        # stages through the last block limit are covered and nothing later
        last = res.trace.blocks[-1]
        covered = last.limit.stage if last.limit is not None else \
            cnf_add(last.start.stage, from_int(len(last.explicit) - 1))
        horizon = successor(covered)
    return events, horizon


# --- the universal dovetailer ----------------------------------------------

@dataclass(frozen=True)
class Appearance:
    stage: Ordinal
    program: int
    track: int
    real: Real
    digest: str


@dataclass
class AppearanceLog:
    records: list[Appearance]
    first_appearance: dict[Real, int]
    truncated: bool
    complete_below: Ordinal | None   # None: covers every stage it claims
    bound: int
    budget: BudgetPolicy

    def distinct_reals(self) -> list[Real]:
        return [rec.real for rec in self.records]

    def segment(self, upto_stage: Ordinal) -> list[Real]:
        """Distinct reals first appearing below upto_stage, in appearance
        order; refuses when truncation may hide earlier appearances."""
        if self.complete_below is not None and self.complete_below < upto_stage:
            raise TruncatedLog(
                "appearance log complete below %s only, need %s"
                % (self.complete_below.render(), upto_stage.render()))
        return [rec.real for rec in self.records if rec.stage < upto_stage]


def _bare_oracle(p: Program):
    """Oracle for an oracle-free dovetail: machines that declare the query
    protocol are answered by the empty set, the stage-zero approximation."""
    if p.query_state is not None:
        from .oracle import SetOracle
        return SetOracle(frozenset())
    return None


def universal_run(programs, budget: BudgetPolicy = DEFAULT_BUDGET) -> AppearanceLog:
    """Dovetail every program on input all-zero, one step per master stage,
    logging each new distinct track content at its first appearance."""
    progs = _as_programs(programs)
    merged = []
    horizons = []
    for pid, p in enumerate(progs):
        res = run_transfinite(p, ZERO_REAL, budget, oracle=_bare_oracle(p))
        events, horizon = _program_content_events(res, budget.appearance_cap)
        merged.extend((stage, pid, t, real) for stage, t, real in events)
        if horizon is not None:
            horizons.append(horizon)
    merged.sort(key=lambda e: (e[0], e[1], e[2]))
    records: list[Appearance] = []
    first: dict[Real, int] = {}
    truncated = bool(horizons)
    cap_stage = None
    for stage, pid, t, real in merged:
        if real in first:
            continue
        if len(records) >= budget.appearance_cap:
            truncated = True
            cap_stage = stage
            break
        first[real] = len(records)
        records.append(Appearance(stage, pid, t, real, _digest(real)))
    bounds = list(horizons)
    if cap_stage is not None:
        bounds.append(cap_stage)
    complete_below = min(bounds) if bounds else None
    return AppearanceLog(records, first, truncated, complete_below,
                         len(progs), budget)


def diagonal_against(reals) -> Real:
    """A real differing from the k-th listed real at bit k, zero tail."""
    reals = list(reals)
    bits = tuple(1 - r.bit(k) for k, r in enumerate(reals))
    out = Real(bits, (0,))
    assert all(out != r for r in reals)
    return out


def diagonalize_appearances(log: AppearanceLog, upto_stage: Ordinal) -> Real:
    """A real provably absent from every tape below upto_stage."""
    seg = log.segment(upto_stage)
    out = diagonal_against(seg)
    assert out not in set(seg)
    return out


# --- cell and track histories ----------------------------------------------

def _cell_items(res: RunResult, track: int, cell: int):
    """History of one cell: ("set", stage, value) changes plus
    ("osc", block_start_stage, limit_stage) markers for blocks whose
    certified cycle flips the cell cofinally below the block limit."""
    items = []
    value = None
    def set_at(stage, v):
        nonlocal value
        if v != value:
            items.append(("set", stage, v))
            value = v
    for block in res.trace.blocks:
        base = block.start.stage
        for rel, snap in enumerate(block.explicit):
            set_at(cnf_add(base, from_int(rel)), snap.tracks[track].bit(cell))
        cert = block.certificate
        if isinstance(cert, RepeatCert):
            vals = {s.tracks[track].bit(cell)
                    for s in block.explicit[cert.mu: cert.mu + cert.pi]}
            if len(vals) > 1:
                items.append(("osc", base, block.limit.stage))
                value = None
        elif isinstance(cert, TranslationCert):
            mu, pi, d = cert.mu, cert.pi, cert.shift
            h0 = block.explicit[mu].head
            if cell >= h0:
                for k in range(1, (cell - h0) // d + 1):
                    pre = cell - k * d
                    for i in range(pi):
                        rel = mu + k * pi + i
                        if rel <= mu + pi:
                            continue
                        set_at(cnf_add(base, from_int(rel)),
                               block.explicit[mu + i].tracks[track].bit(pre))
                # the cell freezes at its wake value when the head range
                # passes it, one cycle after the last shifted preimage
                k_fix = (cell - h0) // d + 1
                set_at(cnf_add(base, from_int(mu + k_fix * pi)),
                       block.limit.tracks[track].bit(cell))
        if block.limit is not None:
            set_at(block.limit.stage, block.limit.tracks[track].bit(cell))
    if res.trace.final_limit is not None:
        set_at(res.trace.final_limit.stage,
               res.trace.final_limit.tracks[track].bit(cell))
    return items


def _track_items(res: RunResult, track: int, cap: int):
    """Like _cell_items but for whole-track contents."""
    items = []
    content = None
    def set_at(stage, c):
        nonlocal content
        if c != content:
            items.append(("set", stage, c))
            content = c
    for block in res.trace.blocks:
        base = block.start.stage
        for rel, snap in enumerate(block.explicit):
            set_at(cnf_add(base, from_int(rel)), snap.tracks[track])
        cert = block.certificate
        if isinstance(cert, RepeatCert):
            vals = {s.tracks[track]
                    for s in block.explicit[cert.mu: cert.mu + cert.pi]}
            if len(vals) > 1:
                items.append(("osc", base, block.limit.stage))
                content = None
        elif isinstance(cert, TranslationCert):
            if not _translation_track_stationary(block, track):
                items.append(("osc", base, block.limit.stage))
                content = None
        if block.limit is not None:
            set_at(block.limit.stage, block.limit.tracks[track])
    if res.trace.final_limit is not None:
        set_at(res.trace.final_limit.stage, res.trace.final_limit.tracks[track])
    return items


def _settle(items, res: RunResult):
    """Shared verdict: (status, stage, final value) for a change history."""
    if res.outcome == "exceeded":
        return ("exceeded", None, None)
    if res.outcome == "loops":
        t1, t2 = res.loop.first, res.loop.second
        for kind, *rest in items:
            if kind == "set" and t1 < rest[0] < t2:
                return ("unstable", None, None)
            if kind == "osc" and t1 <= rest[0]:
                return ("unstable", None, None)
    if not items:
        return ("stable", ZERO_ORD, None)
    last = items[-1]
    if last[0] == "osc":
        # oscillation settles exactly at the block limit; the limit value is
        # recorded by a following set item, so a trailing osc cannot happen
        # for a certified run, but guard anyway
        return ("unstable", None, None)
    stage = last[1]
    value = last[2]
    return ("stable", stage, value)


@dataclass(frozen=True)
class Stabilization:
    status: str                 # "stable" | "unstable" | "exceeded"
    stage: Ordinal | None
    value: int | None


def stabilization_stage(p: Program, cell: tuple[int, int],
                        budget: BudgetPolicy = DEFAULT_BUDGET,
                        input_real: Real = ZERO_REAL) -> Stabilization:
    """Least stage from which the cell's value is constant through the
    certified horizon, or a proof of cofinal oscillation."""
    res = run_transfinite(p, input_real, budget)
    track, index = cell
    items = _cell_items(res, track, index)
    status, stage, value = _settle(items, res)
    return Stabilization(status, stage, value)


@dataclass(frozen=True)
class EventuallyWritten:
    status: str                 # "stable" | "unstable" | "exceeded"
    real: Real | None
    stage: Ordinal | None


def eventually_written(p: Program, budget: BudgetPolicy = DEFAULT_BUDGET
                       ) -> EventuallyWritten:
    """Output-track content if it is constant from some certified stage on."""
    res = run_transfinite(p, ZERO_REAL, budget)
    items = _track_items(res, 2, budget.appearance_cap)
    status, stage, value = _settle(items, res)
    if status != "stable":
        return EventuallyWritten(status, None, None)
    return EventuallyWritten("stable", value if value is not None else ZERO_REAL,
                             stage)


# --- the halting-set approximation stream ----------------------------------

@dataclass(frozen=True)
class ApproximationStream:
    events: tuple[tuple[Ordinal, int], ...]
    exceeded: frozenset[int]
    diverges: frozenset[int]
    bound: int
    budget: BudgetPolicy

    def snapshot_at(self, sigma: Ordinal) -> frozenset[int]:
        """Programs halted by stage sigma."""
        return frozenset(p for st, p in self.events if st <= sigma)

    def snapshots(self) -> list[tuple[Ordinal, frozenset[int]]]:
        out = []
        acc: set[int] = set()
        for st, p in self.events:
            acc.add(p)
            out.append((st, frozenset(acc)))
        return out

    def final(self) -> frozenset[int]:
        return frozenset(p for _st, p in self.events)

    def final_real(self) -> Real:
        return from_support(self.final())


def approximate_jump(programs, oracle=None,
                     budget: BudgetPolicy = DEFAULT_BUDGET,
                     workers: int | None = None) -> ApproximationStream:
    """Exact event stream of budgeted halts, ordered by (stage, program).

    Bookkeeping is kept separate from jump_lightface so that agreement of
    the stream's final set with the jump is a real cross-check."""
    from .oracle import _map_programs, run_with_oracle
    progs = _as_programs(programs, 4 if oracle is not None else 3)
    def run(p):
        if oracle is None:
            return run_transfinite(p, ZERO_REAL, budget, oracle=_bare_oracle(p))
        return run_with_oracle(p, ZERO_REAL, oracle, budget)[0]
    results = _map_programs(run, progs, workers)
    pending = []
    exceeded, diverges = set(), set()
    for pid, res in enumerate(results):
        if res.outcome == "halted":
            pending.append((res.time, pid))
        elif res.outcome == "loops":
            diverges.add(pid)
        else:
            exceeded.add(pid)
    events = tuple(sorted(pending, key=lambda e: (e[0], e[1])))
    return ApproximationStream(events, frozenset(exceeded), frozenset(diverges),
                               len(progs), budget)


# --- the iterated-jump injury matrix ----------------------------------------

@dataclass(frozen=True)
class ErasureEntry:
    stage: Ordinal
    rank: Ordinal
    cause: str          # "lower-row-change" | "limit-of-erasures"


@dataclass(frozen=True)
class ChangeEntry:
    stage: Ordinal
    rank: Ordinal
    program: int


@dataclass
class JumpMatrix:
    code: OrderCode
    ranks: tuple[Ordinal, ...]
    rows: dict[Ordinal, Real]
    change_log: tuple[ChangeEntry, ...]
    erasure_log: tuple[ErasureEntry, ...]
    stabilization: dict[Ordinal, Ordinal]
    partial: bool
    partial_reasons: tuple[str, ...]
    bound: int
    budget: BudgetPolicy

    def limit_ranks(self):
        return [r for r in self.ranks if r.is_limit()]

    def successor_pairs(self):
        """(rank, rank+1) pairs with both rows materialized."""
        pairs = []
        have = set(self.ranks)
        for r in self.ranks:
            if successor(r) in have:
                pairs.append((r, successor(r)))
        return pairs


def is_limit_of(stages, sigma: Ordinal) -> bool:
    """Whether sigma is a limit of the given stage set (sup of the part
    strictly below equals sigma).  A finite set strictly below sigma has a
    maximum below sigma, so at desk scale this holds only vacuously."""
    below = [s for s in stages if s < sigma]
    if not sigma.is_limit() or not below:
        return False
    return max(below) == sigma


def materialized_ranks(alpha: Ordinal, cap: int) -> tuple[list[Ordinal], bool]:
    """Ascending ranks below alpha the desk construction materializes:
    each omega-run of successors is cut at `cap`.  Second result says
    whether ranks were omitted."""
    ranks: list[Ordinal] = []
    partial = False
    base = ZERO_ORD
    while base < alpha and len(ranks) < cap * cap:
        n = 0
        while n < cap:
            r = cnf_add(base, from_int(n))
            if not (r < alpha):
                break
            ranks.append(r)
            n += 1
        if n == cap and cnf_add(base, from_int(n)) < alpha:
            partial = True
        base = cnf_add(base, OMEGA)
    if base < alpha:
        partial = True
    return ranks, partial


def join_rows(rows: dict[Ordinal, Real], lam: Ordinal) -> Real:
    """The organized sum of the rows below a limit rank: bit <n, m> is on
    iff element n has a materialized rank below lam whose row has bit m."""
    ones = set()
    for beta, row in rows.items():
        if not (beta < lam):
            continue
        n = element_of(beta)
        bound = row.support_bound()
        if bound is None:
            raise ValueError("matrix rows must have finite support")
        for m in range(bound):
            if row.bit(m):
                ones.add(pair_index(n, m))
    return from_support(ones)


def iterated_matrix(y: OrderCode, programs, budget: BudgetPolicy = DEFAULT_BUDGET,
                    row_cap: int = 8) -> JumpMatrix:
    """Replay the transfinite-injury approximation of the iterated jump.

    All rows run simultaneously against the current approximation below
    them; a new halt in row r updates that row at its exact stage and erases
    every materialized row above r, whose approximations restart against the
    updated lower rows.  Event ties break by (stage, rank, program).
    """
    progs = _as_programs(programs, 4)
    alpha = y.ordinal
    ranks, partial = materialized_ranks(alpha, row_cap)
    reasons = ["ranks-omitted"] if partial else []
    rank_set = set(ranks)
    rows: dict[Ordinal, Real] = {r: ZERO_REAL for r in ranks}
    change_log: list[ChangeEntry] = []
    erasure_log: list[ErasureEntry] = []
    stabilization: dict[Ordinal, Ordinal] = {r: ZERO_ORD for r in ranks}

    jump_cache: dict[Real, tuple[tuple[Ordinal, int], ...]] = {}
    def jump_events(oracle_real: Real):
        if oracle_real not in jump_cache:
            stream = approximate_jump(progs, RealOracle(oracle_real), budget)
            jump_cache[oracle_real] = stream.events
        return jump_cache[oracle_real]

    def pred(rank: Ordinal) -> Ordinal | None:
        if not rank.is_successor():
            return None
        terms = list(rank.terms)
        e, c = terms[-1]
        terms[-1] = (e, c - 1)
        if terms[-1][1] == 0:
            terms.pop()
        return Ordinal(tuple(terms))

    runs: dict[Ordinal, dict] = {}
    def restart(rank: Ordinal, stage: Ordinal):
        below = pred(rank)
        runs[rank] = {"start": stage, "events": jump_events(rows[below]), "idx": 0}

    def refresh_limits():
        for r in ranks:
            if r.is_limit():
                rows[r] = join_rows(rows, r)

    for r in ranks:
        if r.is_successor():
            restart(r, ZERO_ORD)
    refresh_limits()

    processed = 0
    while processed < budget.per_level_budget:
        best = None
        for r, run in runs.items():
            if run["idx"] >= len(run["events"]):
                continue
            t, pid = run["events"][run["idx"]]
            key = (cnf_add(run["start"], t), r, pid)
            if best is None or key < best[0]:
                best = (key, r, run)
        if best is None:
            break
        (stage, rank, pid), _, run = best[0], best[1], best[2]
        run["idx"] += 1
        rows[rank] = rows[rank].with_bit(pid, 1)
        change_log.append(ChangeEntry(stage, rank, pid))
        stabilization[rank] = stage
        above = [q for q in ranks if rank < q]
        for q in above:
            rows[q] = ZERO_REAL
            erasure_log.append(ErasureEntry(stage, q, "lower-row-change"))
            stabilization[q] = stage
        refresh_limits()
        for q in above:
            if q.is_successor():
                restart(q, stage)
            # second erasure rule: a row is also erased at any stage that
            # is a limit of its previous erasure stages; finitely many desk
            # events never produce such a limit, but check anyway
            past = [e.stage for e in erasure_log if e.rank == q]
            if is_limit_of(past[:-1], stage):
                erasure_log.append(ErasureEntry(stage, q, "limit-of-erasures"))
        processed += 1
    else:
        reasons.append("event-budget")

    refresh_limits()
    return JumpMatrix(y, tuple(ranks), rows, tuple(change_log),
                      tuple(erasure_log), stabilization,
                      bool(reasons), tuple(reasons), len(progs), budget)


def validate_erasures(matrix: JumpMatrix) -> list[str]:
    """Justify every erasure entry from the logs alone, per the two rules."""
    problems = []
    for k, entry in enumerate(matrix.erasure_log):
        if entry.cause == "lower-row-change":
            if not any(ch.stage == entry.stage and ch.rank < entry.rank
                       for ch in matrix.change_log):
                problems.append("erasure %d at %s lacks a same-stage lower-row change"
                                % (k, entry.stage.render()))
        elif entry.cause == "limit-of-erasures":
            past = [e.stage for e in matrix.erasure_log[:k] if e.rank == entry.rank]
            if not is_limit_of(past, entry.stage):
                problems.append("erasure %d at %s is not a limit of prior erasures"
                                % (k, entry.stage.render()))
        else:
            problems.append("erasure %d has unknown cause %r" % (k, entry.cause))
    return problems
