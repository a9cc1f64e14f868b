"""Run benchmark cases through the engines and collect result rows."""
from __future__ import annotations

import sys
import time
from dataclasses import dataclass, replace

from .benchmarks import BenchmarkCase, ReachTerm, ReachTrue, judge
from .costs import GoalIndicator
from .egraph import (
    BackoffScheduler,
    EGraph,
    extract,
    pulse,
    run_iteration,
)
from .equivalence import EquivalenceValidator
from .stochastic import RunConfig, search
from .terms import TRUE, print_sexpr

ENGINES = ("stochastic", "eqsat", "eqsat-pulsed")


@dataclass(frozen=True)
class EqsatConfig:
    iterations: int = 30
    nodes: int = 20000
    pulse_iterations: int = 3
    match_limit: int = 1000
    ban_length: int = 5


@dataclass
class CaseResult:
    engine: str
    case: str
    best_cost: float
    oracle_cost: float | None
    ratio: float | None
    solved: bool
    units: int
    unit_kind: str
    hard_restarts: int
    unsound_restarts: int
    wall_time: float
    best_term: str = ""

    def row(self) -> dict:
        return {
            "engine": self.engine,
            "case": self.case,
            "best_cost": self.best_cost,
            "oracle_cost": "" if self.oracle_cost is None else self.oracle_cost,
            "ratio": "" if self.ratio is None else round(self.ratio, 6),
            "solved": int(self.solved),
            "units": self.units,
            "unit_kind": self.unit_kind,
            "hard_restarts": self.hard_restarts,
            "unsound_restarts": self.unsound_restarts,
            "wall_time_s": round(self.wall_time, 3),
        }


CSV_COLUMNS = ["engine", "case", "best_cost", "oracle_cost", "ratio", "solved",
               "units", "unit_kind", "hard_restarts", "unsound_restarts",
               "wall_time_s"]


def _ratio(oracle: float | None, found: float) -> float | None:
    if oracle is None or found <= 0:
        return None
    return oracle / found


def _early_target(case: BenchmarkCase) -> float | None:
    target = case.target_cost()
    if target is None and isinstance(case.criterion, ReachTerm) \
            and isinstance(case.cost_model, GoalIndicator):
        return 0
    return target


def run_case_stochastic(case: BenchmarkCase, cfg: RunConfig,
                        time_limit: float | None = None,
                        early_exit: bool = True,
                        pinned: frozenset[str] = frozenset()) -> CaseResult:
    """Run one case; `pinned` names config fields suite tuning must not touch."""
    model = case.model_for("stochastic")
    limit = case.time_limit if time_limit is None else time_limit
    overrides = {k: v for k, v in (case.stochastic_overrides or {}).items()
                 if k not in pinned}
    cfg = replace(cfg, time_limit=limit, **overrides)
    validator = None
    if case.validate:
        validator = EquivalenceValidator(case.input_term, seed=cfg.seed)
    result = search(case.input_term, case.ruleset, model, cfg,
                    validator=validator,
                    target_cost=_early_target(case) if early_exit else None)
    solved = judge(case, result.best_term, model)
    for chain in result.chains:
        if chain.unsound_witness is not None:
            w = chain.unsound_witness
            print(f"note: {case.name}: unsound rewrite caught in chain "
                  f"{chain.chain_index} at {w['env']} "
                  f"(lhs={w['lhs']:.6g}, rhs={w['rhs']:.6g})",
                  file=sys.stderr)
            break
    return CaseResult(
        engine="stochastic",
        case=case.name,
        best_cost=result.best_cost,
        oracle_cost=case.oracle_cost,
        ratio=_ratio(case.oracle_cost, result.best_cost),
        solved=solved,
        units=result.proposals,
        unit_kind="proposals",
        hard_restarts=result.hard_restarts,
        unsound_restarts=result.unsound_restarts,
        wall_time=result.wall_time,
        best_term=print_sexpr(result.best_term),
    )


def _solved_in_graph(g: EGraph, root, case: BenchmarkCase, model) -> bool:
    crit = case.criterion
    if isinstance(crit, ReachTerm):
        return g.represents(root, crit.goal)
    if isinstance(crit, ReachTrue):
        return g.represents(root, TRUE)
    _, cost = extract(g, root, model)
    return cost <= crit.value


def _eqsat_overrides(case: BenchmarkCase, eqsat_cfg: EqsatConfig | None,
                     pinned: frozenset[str]) -> EqsatConfig:
    cfg = eqsat_cfg or EqsatConfig()
    overrides = {k: v for k, v in (case.eqsat_overrides or {}).items()
                 if k not in pinned}
    return replace(cfg, **overrides) if overrides else cfg


def run_case_eqsat(case: BenchmarkCase, eqsat_cfg: EqsatConfig | None = None,
                   time_limit: float | None = None,
                   pinned: frozenset[str] = frozenset()) -> CaseResult:
    """Saturate with checkpointing as configured; stop early once solved."""
    eqsat_cfg = _eqsat_overrides(case, eqsat_cfg, pinned)
    model = case.model_for("eqsat")
    limit = case.time_limit if time_limit is None else time_limit
    started = time.monotonic()
    deadline = None if limit is None else started + limit
    g = EGraph(dims=case.dims)
    root = g.add_term(case.input_term)
    g.rebuild()
    scheduler = BackoffScheduler(eqsat_cfg.match_limit, eqsat_cfg.ban_length)
    checkpoint = g.copy() if case.checkpointing else None
    extract_from = g
    iterations = 0
    solved = _solved_in_graph(g, root, case, model)
    while not solved and iterations < eqsat_cfg.iterations:
        if deadline is not None and time.monotonic() >= deadline:
            break
        if g.num_nodes() > eqsat_cfg.nodes:
            break
        before_unions = g.union_count
        before_nodes = g.num_nodes()
        run_iteration(g, case.ruleset, scheduler, iterations)
        iterations += 1
        if g.contradiction:
            if checkpoint is not None:
                extract_from = checkpoint
            break
        if case.checkpointing:
            checkpoint = g.copy()
        solved = _solved_in_graph(g, root, case, model)
        if g.union_count == before_unions and g.num_nodes() == before_nodes:
            break

    if isinstance(case.criterion, ReachTerm):
        ok = extract_from.represents(root, case.criterion.goal)
        best_term = case.criterion.goal if ok else case.input_term
        best_cost = model.cost(best_term)
    else:
        best_term, best_cost = extract(extract_from, root, model)
    solved = judge(case, best_term, model)
    return CaseResult(
        engine="eqsat",
        case=case.name,
        best_cost=best_cost,
        oracle_cost=case.oracle_cost,
        ratio=_ratio(case.oracle_cost, best_cost),
        solved=solved,
        units=iterations,
        unit_kind="iterations",
        hard_restarts=0,
        unsound_restarts=0,
        wall_time=time.monotonic() - started,
        best_term=print_sexpr(best_term),
    )


def run_case_eqsat_pulsed(case: BenchmarkCase,
                          eqsat_cfg: EqsatConfig | None = None,
                          time_limit: float | None = None,
                          pinned: frozenset[str] = frozenset()) -> CaseResult:
    eqsat_cfg = _eqsat_overrides(case, eqsat_cfg, pinned)
    model = case.model_for("eqsat")
    limit = case.time_limit if time_limit is None else time_limit
    started = time.monotonic()
    best, reports = pulse(
        case.input_term, case.ruleset, model,
        iterations_per_pulse=eqsat_cfg.pulse_iterations,
        time_limit=limit,
        node_limit=eqsat_cfg.nodes,
        dims=case.dims,
        checkpointing=case.checkpointing,
        target_cost=_early_target(case),
    )
    best_cost = model.cost(best)
    return CaseResult(
        engine="eqsat-pulsed",
        case=case.name,
        best_cost=best_cost,
        oracle_cost=case.oracle_cost,
        ratio=_ratio(case.oracle_cost, best_cost),
        solved=judge(case, best, model),
        units=sum(r.iterations for r in reports),
        unit_kind="iterations",
        hard_restarts=0,
        unsound_restarts=0,
        wall_time=time.monotonic() - started,
        best_term=print_sexpr(best),
    )


def run_case(case: BenchmarkCase, engine: str, cfg: RunConfig,
             eqsat_cfg: EqsatConfig | None = None,
             time_limit: float | None = None,
             pinned: frozenset[str] = frozenset()) -> list[CaseResult]:
    if engine == "both":
        return (run_case(case, "stochastic", cfg, eqsat_cfg, time_limit, pinned)
                + run_case(case, "eqsat", cfg, eqsat_cfg, time_limit, pinned))
    if engine == "stochastic":
        return [run_case_stochastic(case, cfg, time_limit, pinned=pinned)]
    if engine == "eqsat":
        return [run_case_eqsat(case, eqsat_cfg, time_limit, pinned=pinned)]
    if engine == "eqsat-pulsed":
        return [run_case_eqsat_pulsed(case, eqsat_cfg, time_limit, pinned=pinned)]
    raise ValueError(f"unknown engine {engine!r}")


def run_suite(cases: list[BenchmarkCase], engine: str, cfg: RunConfig,
              eqsat_cfg: EqsatConfig | None = None,
              time_limit: float | None = None,
              pinned: frozenset[str] = frozenset()) -> list[CaseResult]:
    results: list[CaseResult] = []
    for case in cases:
        results.extend(run_case(case, engine, cfg, eqsat_cfg, time_limit, pinned))
    return results


def aggregate(results: list[CaseResult]) -> dict:
    """Suite summary: per-engine solved counts plus the 4-way partition."""
    engines = sorted({r.engine for r in results})
    by_case: dict[str, dict[str, CaseResult]] = {}
    for r in results:
        by_case.setdefault(r.case, {})[r.engine] = r
    summary: dict = {"cases": len(by_case), "engines": {}}
    for eng in engines:
        rows = [r for r in results if r.engine == eng]
        ratios = [r.ratio for r in rows if r.ratio is not None]
        summary["engines"][eng] = {
            "solved": sum(1 for r in rows if r.solved),
            "total": len(rows),
            "mean_ratio": (sum(ratios) / len(ratios)) if ratios else None,
        }
    stoc = {e for e in engines if e == "stochastic"}
    eqsats = {e for e in engines if e.startswith("eqsat")}
    if stoc and eqsats:
        eq = sorted(eqsats)[0]
        both = only_eq = only_st = neither = 0
        for case_rows in by_case.values():
            s = case_rows.get("stochastic")
            q = case_rows.get(eq)
            if s is None or q is None:
                continue
            if s.solved and q.solved:
                both += 1
            elif q.solved:
                only_eq += 1
            elif s.solved:
                only_st += 1
            else:
                neither += 1
        summary["partition"] = {
            "both_solved": both,
            "only_eqsat": only_eq,
            "only_stochastic": only_st,
            "neither": neither,
        }
    return summary


def scaling_report(cases: list[BenchmarkCase], workers_list: list[int],
                   cfg: RunConfig, time_limit: float | None = None,
                   early_exit: bool = False) -> list[dict]:
    """One suite run per worker count: proposals/sec and solved count rows."""
    rows = []
    for workers in workers_list:
        wcfg = replace(cfg, workers=workers, budget=workers)
        proposals = 0
        wall = 0.0
        solved = 0
        for case in cases:
            res = run_case_stochastic(case, wcfg, time_limit=time_limit,
                                      early_exit=early_exit)
            proposals += res.units
            wall += res.wall_time
            solved += int(res.solved)
        rows.append({
            "workers": workers,
            "proposals": proposals,
            "wall_time_s": round(wall, 3),
            "proposals_per_sec": round(proposals / wall, 1) if wall else 0.0,
            "solved": solved,
            "cases": len(cases),
            "seed": cfg.seed,
        })
    return rows
