#!/usr/bin/env python3
# The built-in suites (trig simplification, indefinite integration, and
# inequality proving) run through both engines, ending with the 4-way
# solved partition and a needle system where the engines separate sharply.

from rewrite_arena import (
    BackoffScheduler,
    EGraph,
    RunConfig,
    builtin_suites,
    needle_case,
    run_chain,
    run_iteration,
)
from rewrite_arena.runner import aggregate, run_suite

cfg = RunConfig(workers=2, seed=0)

for name, cases in builtin_suites().items():
    results = run_suite(cases, "both", cfg, time_limit=4.0)
    summary = aggregate(results)
    part = summary["partition"]
    print(f"{name}: {summary['cases']} cases | "
          f"both={part['both_solved']} only-eqsat={part['only_eqsat']} "
          f"only-stochastic={part['only_stochastic']} "
          f"neither={part['neither']}")

# The needle system {a => b, b => a, f(b..b) => g(b..b)} has a flat cost
# surface: equality saturation proves f(a..a) = g(b..b) in two iterations,
# while a random walk needs expected time exponential in the arity.
case = needle_case(8)
g = EGraph()
root = g.add_term(case.input_term)
g.rebuild()
sched = BackoffScheduler()
for i in range(2):
    run_iteration(g, case.ruleset, sched, i)
print(f"\nneedle arity 8, eqsat: goal represented after 2 iterations: "
      f"{g.represents(root, case.criterion.goal)}")

solved = 0
for seed in range(5):
    chain_cfg = RunConfig(workers=1, budget=1, seed=seed, max_proposals=10000)
    res = run_chain(case.input_term, case.ruleset, case.cost_model, chain_cfg,
                    target_cost=0)
    solved += res.best_term == case.criterion.goal
print(f"needle arity 8, stochastic at a 10k-proposal budget: "
      f"{solved}/5 seeds solved (expected hitting time grows like 2^N)")
