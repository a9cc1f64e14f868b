"""Metropolis-style rewrite search with restarts and parallel runs.

Each chain walks over concrete terms: the candidate set is every one-step
rewrite of the current term, and a successor is drawn with probability
proportional to exp(-beta/2 * (C(t') - C(t))).  A periodic exploration
phase sets beta to 0; a chain that stops improving for too long either
ends (when it has no other budget) or hard-restarts from the initial term.
Chains are fully independent, so parallel runs share nothing but a
deadline.
"""
from __future__ import annotations

import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from .costs import CostModel
from .rules import (
    FOLD_RULE_NAME,
    Ruleset,
    apply_rule_at,
    constant_term,
    fold_node,
    instantiate,
    match_pattern,
    proposals,
    term_constant,
)
from .terms import Term, Position, positions, replace_at

_M64 = (1 << 64) - 1


class EmptyCandidateSetError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Hyperparameters for stochastic search.

    The defaults are engineering choices; every field is exposed as a CLI
    flag.  budget (number of independent chains) defaults to workers.
    """

    beta: float = 1.0
    budget: int | None = None
    n_soft: int = 1000
    explore: int = 100
    n_hard: int = 5000
    time_limit: float | None = None
    workers: int = 1
    seed: int = 0
    max_steps: int | None = None
    max_proposals: int | None = None
    validate_every: int = 25
    record_trace: bool = False

    def __post_init__(self):
        if self.explore > self.n_soft:
            raise ValueError("explore phase cannot exceed the soft-restart period")
        if self.n_soft < 1 or self.n_hard < 1 or self.workers < 1:
            raise ValueError("periods and worker count must be at least 1")
        if self.budget is not None and self.budget < 1:
            raise ValueError("budget must be at least 1 chain")
        if self.validate_every < 1:
            raise ValueError("validate_every must be at least 1")

    @property
    def chains(self) -> int:
        return self.budget if self.budget is not None else self.workers


@dataclass
class RunResult:
    """Outcome of one chain."""

    best_term: Term
    best_cost: float
    chain_index: int
    steps: int = 0
    proposals: int = 0
    hard_restarts: int = 0
    unsound_restarts: int = 0
    wall_time: float = 0.0
    best_trace: list[tuple[str, Position]] | None = None
    # Example assignment where an unsound rewrite was caught, for reports.
    unsound_witness: dict | None = None


@dataclass
class SearchResult:
    """Best chain plus aggregate statistics across all chains."""

    best_term: Term
    best_cost: float
    best_chain: int
    steps: int
    proposals: int
    hard_restarts: int
    unsound_restarts: int
    wall_time: float
    chains: list[RunResult] = field(default_factory=list)


def chain_seed(seed: int, index: int) -> int:
    """Deterministic per-chain seed, independent of worker scheduling."""
    x = (seed * 0x9E3779B97F4A7C15 + (index + 1) * 0xBF58476D1CE4E5B9) & _M64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _M64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _M64
    return x ^ (x >> 31)


def successor_weights(base_cost: float, candidate_costs: list[float],
                      beta_now: float) -> list[float]:
    """Unnormalized Boltzmann weights with overflow-safe normalization."""
    deltas = [c - base_cost for c in candidate_costs]
    lowest = min(deltas)
    return [math.exp(-0.5 * beta_now * (d - lowest)) for d in deltas]


def sample_successor(t: Term, candidates: list[Term], beta_now: float,
                     model: CostModel, rng: random.Random) -> Term:
    """Draw one candidate with probability proportional to exp(-beta/2 * dC)."""
    if not candidates:
        raise EmptyCandidateSetError("cannot sample from an empty candidate set")
    if len(candidates) == 1:
        return candidates[0]
    base = model.cost(t)
    weights = successor_weights(base, [model.cost(c) for c in candidates], beta_now)
    return candidates[_draw(weights, rng)]


def _draw(weights: list[float], rng: random.Random) -> int:
    total = 0.0
    for w in weights:
        total += w
    r = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if r < acc:
            return i
    return len(weights) - 1


class _Candidate:
    """One-step rewrite kept unmaterialized until sampled.

    delta is the exact cost change; term is built lazily (only the sampled
    candidate pays for the spine rebuild).
    """

    __slots__ = ("rule", "position", "new_sub", "delta", "term")

    def __init__(self, rule, position, new_sub, delta, term=None):
        self.rule = rule
        self.position = position
        self.new_sub = new_sub
        self.delta = delta
        self.term = term

    def materialize(self, t: Term) -> Term:
        if self.term is None:
            self.term = replace_at(t, self.position, self.new_sub)
        return self.term


def _result_hash(t: Term, pos: Position, new_sub: Term) -> int:
    """Structural hash of replace_at(t, pos, new_sub) without building it."""
    spine = []
    cur = t
    for idx in pos:
        spine.append((cur, idx))
        cur = cur.children[idx]
    h = new_sub._hash
    for node, idx in reversed(spine):
        hashes = [c._hash for c in node.children]
        hashes[idx] = h
        h = hash((node.op.name, *hashes))
    return h


def _enumerate_candidates(t: Term, ruleset: Ruleset, model: CostModel,
                          base_cost) -> list[_Candidate]:
    """All one-step rewrites with exact cost deltas, deduplicated by result.

    Order and deduplication mirror rules.proposals: position-major, rule-
    minor, first occurrence kept, identity excluded.
    """
    out: list[_Candidate] = []
    seen: set[int] = set()
    for pos, sub in positions(t):
        for rule in ruleset.rules_for_root(sub.op.name):
            subst = match_pattern(rule.lhs, sub)
            if subst is None:
                continue
            if rule.guard is not None and not rule.guard.passes(subst[rule.guard.var]):
                continue
            new_sub = instantiate(rule.rhs, subst)
            if new_sub == sub:
                continue
            rh = _result_hash(t, pos, new_sub)
            if rh in seen:
                continue
            seen.add(rh)
            out.append(_make_candidate(t, pos, sub, new_sub, rule.name,
                                       model, base_cost))
        if ruleset.fold_constants and sub.children:
            values = []
            for k in sub.children:
                v = term_constant(k)
                if v is None:
                    break
                values.append(v)
            if len(values) == len(sub.children):
                folded = fold_node(sub.op.name, values)
                if folded is not None:
                    new_sub = constant_term(folded)
                    rh = _result_hash(t, pos, new_sub)
                    if new_sub != sub and rh not in seen:
                        seen.add(rh)
                        out.append(_make_candidate(t, pos, sub, new_sub,
                                                   FOLD_RULE_NAME, model,
                                                   base_cost))
    return out


def _make_candidate(t, pos, old_sub, new_sub, rule_name, model, base_cost):
    delta = model.delta_cost(old_sub, new_sub)
    if delta is not None:
        return _Candidate(rule_name, pos, new_sub, delta)
    term = replace_at(t, pos, new_sub)
    return _Candidate(rule_name, pos, new_sub, model.cost(term) - base_cost, term)


def run_chain(t0: Term, ruleset: Ruleset, model: CostModel, cfg: RunConfig,
              validator=None, rng: random.Random | None = None,
              chain_index: int = 0, deadline: float | None = None,
              target_cost: float | None = None) -> RunResult:
    """Run one chain of the search loop.

    With no deadline or step/proposal cap, the chain ends once it has gone
    n_hard steps without improving, exactly as a single run segment.  When
    some budget remains, reaching the stall limit instead triggers a hard
    restart from t0.
    """
    if rng is None:
        rng = random.Random(chain_seed(cfg.seed, chain_index))
    if deadline is None and cfg.time_limit is not None:
        deadline = time.monotonic() + cfg.time_limit
    started = time.monotonic()
    has_budget = (deadline is not None or cfg.max_steps is not None
                  or cfg.max_proposals is not None)

    t = t0
    cost_t = model.cost(t0)
    best = t0
    best_cost = cost_t
    n = 0
    n_stall = 0
    steps = 0
    total_proposals = 0
    accepted = 0
    hard_restarts = 0
    unsound_restarts = 0
    trace: list[tuple[str, Position]] = []
    best_trace: list[tuple[str, Position]] | None = None
    candidates: list[_Candidate] | None = None
    solved = target_cost is not None and best_cost <= target_cost

    while not solved:
        if deadline is not None and time.monotonic() >= deadline:
            break
        if cfg.max_steps is not None and steps >= cfg.max_steps:
            break
        if cfg.max_proposals is not None and total_proposals >= cfg.max_proposals:
            break
        if n_stall >= cfg.n_hard:
            if not has_budget:
                break
            hard_restarts += 1
            t, cost_t, n, n_stall, candidates = t0, model.cost(t0), 0, 0, None
            trace.clear()
            continue

        if candidates is None:
            candidates = _enumerate_candidates(t, ruleset, model, cost_t)
        total_proposals += len(candidates)
        if not candidates:
            # Empty proposal set: record a stall step, keep the term.
            n += 1
            n_stall += 1
            steps += 1
            continue

        beta_now = 0.0 if (n % cfg.n_soft) < cfg.explore else cfg.beta
        if beta_now == 0.0:
            chosen = candidates[int(rng.random() * len(candidates)) % len(candidates)]
        else:
            lowest = min(c.delta for c in candidates)
            half_beta = 0.5 * beta_now
            weights = [math.exp(-half_beta * (c.delta - lowest))
                       for c in candidates]
            chosen = candidates[_draw(weights, rng)]
        t = chosen.materialize(t)
        cost_t = model.cost(t)
        candidates = None
        n += 1
        steps += 1
        accepted += 1
        if cfg.record_trace:
            trace.append((chosen.rule, chosen.position))

        if validator is not None and accepted % cfg.validate_every == 0:
            if not validator(t):
                unsound_restarts += 1
                t, cost_t, n, n_stall, candidates = t0, model.cost(t0), 0, 0, None
                trace.clear()
                continue

        if cost_t < best_cost:
            if validator is not None and not validator(t):
                unsound_restarts += 1
                t, cost_t, n, n_stall, candidates = t0, model.cost(t0), 0, 0, None
                trace.clear()
                continue
            best = t
            best_cost = cost_t
            n_stall = 0
            if cfg.record_trace:
                best_trace = list(trace)
            if target_cost is not None and best_cost <= target_cost:
                solved = True
        else:
            n_stall += 1

    witness = None
    if unsound_restarts and getattr(validator, "last_failure", None) is not None:
        failure = validator.last_failure
        witness = {"env": failure.witness, "lhs": failure.lhs,
                   "rhs": failure.rhs}
    return RunResult(
        best_term=best,
        best_cost=best_cost,
        chain_index=chain_index,
        steps=steps,
        proposals=total_proposals,
        hard_restarts=hard_restarts,
        unsound_restarts=unsound_restarts,
        wall_time=time.monotonic() - started,
        best_trace=best_trace,
        unsound_witness=witness,
    )


def _chain_task(args) -> RunResult:
    t0, ruleset, model, cfg, validator, index, deadline, target_cost = args
    if validator is not None:
        validator = replace(validator, seed=validator.seed + 7919 * index)
    return run_chain(t0, ruleset, model, cfg, validator=validator,
                     chain_index=index, deadline=deadline,
                     target_cost=target_cost)


def search(t0: Term, ruleset: Ruleset, model: CostModel, cfg: RunConfig,
           validator=None, target_cost: float | None = None) -> SearchResult:
    """Run cfg.chains independent chains and keep the best result.

    Per-chain seeds derive deterministically from cfg.seed and the chain
    index, so results do not depend on worker scheduling.  Ties are broken
    by the lowest chain index.
    """
    started = time.monotonic()
    deadline = None if cfg.time_limit is None else started + cfg.time_limit
    n_chains = cfg.chains
    tasks = [(t0, ruleset, model, cfg, validator, i, deadline, target_cost)
             for i in range(n_chains)]

    if cfg.workers == 1 or n_chains == 1:
        results = [_chain_task(task) for task in tasks]
    else:
        import multiprocessing as mp

        methods = mp.get_all_start_methods()
        ctx = mp.get_context("fork" if "fork" in methods else "spawn")
        with ProcessPoolExecutor(max_workers=min(cfg.workers, n_chains),
                                 mp_context=ctx) as pool:
            results = list(pool.map(_chain_task, tasks))

    results.sort(key=lambda r: r.chain_index)
    best = min(results, key=lambda r: (r.best_cost, r.chain_index))
    return SearchResult(
        best_term=best.best_term,
        best_cost=best.best_cost,
        best_chain=best.chain_index,
        steps=sum(r.steps for r in results),
        proposals=sum(r.proposals for r in results),
        hard_restarts=sum(r.hard_restarts for r in results),
        unsound_restarts=sum(r.unsound_restarts for r in results),
        wall_time=time.monotonic() - started,
        chains=results,
    )


def replay_trace(t0: Term, ruleset: Ruleset, trace: list[tuple[str, Position]]) -> Term:
    """Re-apply a recorded (rule, position) sequence; used to audit results."""
    by_name = {r.name: r for r in ruleset.rules}
    t = t0
    for rule_name, pos in trace:
        if rule_name == "fold":
            from .rules import proposals as _props

            folded = [p.term for p in _props(t, ruleset)
                      if p.rule == "fold" and p.position == pos]
            if not folded:
                raise ValueError(f"fold at {pos} no longer applies")
            t = folded[0]
            continue
        nxt = apply_rule_at(by_name[rule_name], t, pos)
        if nxt is None:
            raise ValueError(f"rule {rule_name!r} no longer applies at {pos}")
        t = nxt
    return t
