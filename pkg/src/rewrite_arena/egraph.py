"""Minimal equality saturation: e-graph, e-matching, scheduling, extraction.

The e-graph keeps a union-find over e-class ids, a hashcons from canonical
e-nodes to classes, and per-class analysis data (an exact-rational/boolean
constant, plus matrix dimensions when a dimension environment is supplied).
Congruence repair is deferred: rebuild() re-canonicalizes every node and
merges congruent classes to a fixpoint, which is simple and plenty fast at
the graph sizes this package targets.  Saturation runs single-threaded by
contract; pulsing reseeds a fresh e-graph from the current best term.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction

from .costs import (
    AstSize,
    CostModel,
    DimEnv,
    DimensionError,
    GoalIndicator,
    IntegSquare,
    MatMulScalarOps,
    WeightedAstSize,
)
from .rules import (
    Rule,
    Ruleset,
    Substitution,
    constant_term,
    fold_node,
    is_pattern_var,
)
from .terms import Term, TermError

EClassId = int
ENode = tuple  # (Symbol, child EClassId, ...) -- children canonical at creation


class EGraphError(TermError):
    pass


class ExtractionError(EGraphError):
    pass


class EClass:
    __slots__ = ("nodes", "constant", "dims")

    def __init__(self):
        self.nodes: dict[ENode, None] = {}
        self.constant = None
        self.dims: tuple[int, int] | None = None


class EGraph:
    def __init__(self, dims: DimEnv | None = None):
        self._uf: list[EClassId] = []
        self.classes: dict[EClassId, EClass] = {}
        self.hashcons: dict[ENode, EClassId] = {}
        self.dims_env = dict(dims) if dims else None
        self.contradiction = False
        self.union_count = 0
        self._dirty = False

    # -- union-find ---------------------------------------------------------

    def find(self, a: EClassId) -> EClassId:
        uf = self._uf
        while uf[a] != a:
            uf[a] = uf[uf[a]]
            a = uf[a]
        return a

    def _fresh_class(self) -> EClassId:
        cid = len(self._uf)
        self._uf.append(cid)
        self.classes[cid] = EClass()
        return cid

    # -- analysis -----------------------------------------------------------

    def _make_constant(self, node: ENode):
        op = node[0]
        if len(node) == 1:
            name = op.name
            if name == "true":
                return True
            if name == "false":
                return False
            body = name[1:] if name[0] in "+-" else name
            if body and (body[0].isdigit() or body[0] == "."):
                try:
                    return Fraction(name)
                except (ValueError, ZeroDivisionError):
                    return None
            return None
        args = []
        for child in node[1:]:
            c = self.classes[self.find(child)].constant
            if c is None:
                return None
            args.append(c)
        return fold_node(op.name, args)

    def _make_dims(self, node: ENode):
        if self.dims_env is None:
            return None
        op = node[0]
        if len(node) == 1:
            return self.dims_env.get(op.name)
        if op.name != "*" or len(node) != 3:
            return None
        left = self.classes[self.find(node[1])].dims
        right = self.classes[self.find(node[2])].dims
        if left is None or right is None:
            return None
        if left[1] != right[0]:
            raise DimensionError(
                f"dimension mismatch in e-graph: {left[0]}x{left[1]} "
                f"times {right[0]}x{right[1]}"
            )
        return (left[0], right[1])

    def _join_into(self, cid: EClassId, constant, dims) -> bool:
        """Join analysis values into a class; True when something changed."""
        cls = self.classes[cid]
        changed = False
        if constant is not None:
            if cls.constant is None:
                cls.constant = constant
                changed = True
            elif cls.constant != constant:
                self.contradiction = True
        if dims is not None:
            if cls.dims is None:
                cls.dims = dims
                changed = True
            elif cls.dims != dims:
                raise DimensionError(
                    f"conflicting dimensions {cls.dims} vs {dims} in one class"
                )
        return changed

    # -- construction ---------------------------------------------------------

    def add_enode(self, op_sym, child_ids) -> EClassId:
        node = (op_sym, *[self.find(c) for c in child_ids])
        existing = self.hashcons.get(node)
        if existing is not None:
            return self.find(existing)
        cid = self._fresh_class()
        self.classes[cid].nodes[node] = None
        self.hashcons[node] = cid
        if self._join_into(cid, self._make_constant(node), self._make_dims(node)):
            self._dirty = True
        return cid

    def add_term(self, t: Term) -> EClassId:
        ids: dict[int, EClassId] = {}
        stack: list[tuple[Term, bool]] = [(t, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in ids:
                continue
            if expanded:
                ids[id(node)] = self.add_enode(
                    node.op, [ids[id(c)] for c in node.children])
            else:
                stack.append((node, True))
                for c in node.children:
                    stack.append((c, False))
        return ids[id(t)]

    # -- union and rebuild ------------------------------------------------------

    def union(self, a: EClassId, b: EClassId) -> EClassId:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        ca, cb = self.classes[ra], self.classes[rb]
        # Deterministic leader: larger class wins, ties go to the lower id.
        if (len(cb.nodes), -rb) > (len(ca.nodes), -ra):
            ra, rb = rb, ra
            ca, cb = cb, ca
        self._uf[rb] = ra
        ca.nodes.update(cb.nodes)
        self._join_into(ra, cb.constant, cb.dims)
        del self.classes[rb]
        self.union_count += 1
        self._dirty = True
        return ra

    def _canonicalize(self, node: ENode) -> ENode:
        if len(node) == 1:
            return node
        return (node[0], *[self.find(c) for c in node[1:]])

    def rebuild(self) -> None:
        """Restore congruence and analysis to a fixpoint.

        Each pass re-keys every node canonically (merging congruent
        classes), recomputes analysis joins, and materializes literal nodes
        for classes whose constant became known.
        """
        if not self._dirty:
            return
        while True:
            changed = False
            # Congruence pass: canonical keys, congruent classes merged.
            pairs = [(node, cid)
                     for cid, cls in self.classes.items()
                     for node in cls.nodes]
            self.hashcons = {}
            for node, cid in pairs:
                root = self.find(cid)
                canon = self._canonicalize(node)
                existing = self.hashcons.get(canon)
                if existing is None:
                    self.hashcons[canon] = root
                elif self.find(existing) != root:
                    self.union(existing, root)
                    changed = True
            for cid in list(self.classes.keys()):
                cls = self.classes.get(cid)
                if cls is None:
                    continue
                canon_nodes = {}
                for node in cls.nodes:
                    canon_nodes[self._canonicalize(node)] = None
                cls.nodes = canon_nodes
            # Analysis pass: recompute joins bottom-up and materialize
            # constants as literal leaf nodes.
            for cid in list(self.classes.keys()):
                cls = self.classes.get(cid)
                if cls is None:
                    continue
                for node in list(cls.nodes):
                    if self._join_into(self.find(cid), self._make_constant(node),
                                       self._make_dims(node)):
                        changed = True
            for cid in list(self.classes.keys()):
                cls = self.classes.get(cid)
                if cls is None or cls.constant is None:
                    continue
                lit = constant_term(cls.constant)
                key = (lit.op,)
                owner = self.hashcons.get(key)
                if owner is None:
                    lit_id = self.add_enode(lit.op, [])
                    self.union(lit_id, cid)
                    changed = True
                elif self.find(owner) != self.find(cid):
                    self.union(owner, cid)
                    changed = True
            if not changed:
                break
        self._dirty = False

    # -- queries ------------------------------------------------------------

    def num_classes(self) -> int:
        return len(self.classes)

    def num_nodes(self) -> int:
        return sum(len(c.nodes) for c in self.classes.values())

    def constant_of(self, cid: EClassId):
        return self.classes[self.find(cid)].constant

    def represents(self, cid: EClassId, t: Term) -> bool:
        """True when the class contains t as a concrete tree."""
        memo: dict[tuple[EClassId, int], bool] = {}

        def visit(c: EClassId, node: Term) -> bool:
            c = self.find(c)
            key = (c, id(node))
            hit = memo.get(key)
            if hit is not None:
                return hit
            memo[key] = False
            ok = False
            for enode in self.classes[c].nodes:
                if enode[0] is not node.op or len(enode) - 1 != len(node.children):
                    continue
                if all(visit(child, kid)
                       for child, kid in zip(enode[1:], node.children)):
                    ok = True
                    break
            memo[key] = ok
            return ok

        return visit(cid, t)

    def copy(self) -> "EGraph":
        dup = EGraph.__new__(EGraph)
        dup._uf = list(self._uf)
        dup.classes = {}
        for cid, cls in self.classes.items():
            c2 = EClass()
            c2.nodes = dict(cls.nodes)
            c2.constant = cls.constant
            c2.dims = cls.dims
            dup.classes[cid] = c2
        dup.hashcons = dict(self.hashcons)
        dup.dims_env = dict(self.dims_env) if self.dims_env else None
        dup.contradiction = self.contradiction
        dup.union_count = self.union_count
        dup._dirty = self._dirty
        return dup

    # -- e-matching -----------------------------------------------------------

    def ematch(self, pattern: Term) -> list[tuple[Substitution, EClassId]]:
        """All matches of the pattern; variables bind canonical e-class ids."""
        results: list[tuple[dict, EClassId]] = []
        seen: set = set()
        if is_pattern_var(pattern):
            name = pattern.op.name
            for cid in self.classes:
                results.append(({name: cid}, cid))
            return results
        for cid in list(self.classes.keys()):
            if cid not in self.classes:
                continue
            for subst in self._match_class(pattern, cid, {}):
                key = (cid, tuple(sorted(subst.items())))
                if key not in seen:
                    seen.add(key)
                    results.append((subst, cid))
        return results

    def _match_class(self, pattern: Term, cid: EClassId, subst: dict):
        cid = self.find(cid)
        if is_pattern_var(pattern):
            name = pattern.op.name
            bound = subst.get(name)
            if bound is None:
                new = dict(subst)
                new[name] = cid
                yield new
            elif self.find(bound) == cid:
                yield subst
            return
        cls = self.classes.get(cid)
        if cls is None:
            return
        arity = len(pattern.children)
        for node in list(cls.nodes):
            if node[0] is not pattern.op or len(node) - 1 != arity:
                continue
            if arity == 0:
                yield subst
            else:
                yield from self._match_children(pattern.children, node, 1, subst)

    def _match_children(self, patterns, node, k, subst):
        if k > len(patterns):
            yield subst
            return
        for sub in self._match_class(patterns[k - 1], node[k], subst):
            yield from self._match_children(patterns, node, k + 1, sub)

    # -- rule application -------------------------------------------------------

    def guard_passes(self, rule: Rule, subst: Substitution) -> bool:
        if rule.guard is None:
            return True
        cls = self.classes[self.find(subst[rule.guard.var])]
        if rule.guard.kind == "nonzero":
            return not (isinstance(cls.constant, Fraction) and cls.constant == 0)
        return isinstance(cls.constant, Fraction)

    def add_instantiated(self, pattern: Term, subst: Substitution) -> EClassId:
        if is_pattern_var(pattern):
            return self.find(subst[pattern.op.name])
        child_ids = [self.add_instantiated(c, subst) for c in pattern.children]
        return self.add_enode(pattern.op, child_ids)


@dataclass
class RuleStats:
    match_limit: int
    ban_length: int
    banned_until: int = -1
    times_banned: int = 0
    matches_total: int = 0


class BackoffScheduler:
    """Ban rules that match too much; limit and ban length double on re-trigger."""

    def __init__(self, match_limit: int = 1000, ban_length: int = 5):
        self.match_limit = match_limit
        self.ban_length = ban_length
        self.stats: dict[str, RuleStats] = {}

    def _get(self, name: str) -> RuleStats:
        st = self.stats.get(name)
        if st is None:
            st = RuleStats(self.match_limit, self.ban_length)
            self.stats[name] = st
        return st

    def can_run(self, name: str, iteration: int) -> bool:
        # A ban at iteration i with length L covers iterations i+1 .. i+L.
        return iteration > self._get(name).banned_until

    def record(self, name: str, n_matches: int, iteration: int) -> bool:
        """Record match volume; True if the rule just got banned."""
        st = self._get(name)
        st.matches_total += n_matches
        if n_matches > st.match_limit:
            st.banned_until = iteration + st.ban_length
            st.match_limit *= 2
            st.ban_length *= 2
            st.times_banned += 1
            return True
        return False


@dataclass
class IterationReport:
    iteration: int
    matches: int
    applied: int
    unions: int
    nodes: int
    classes: int
    contradiction: bool
    banned: list[str] = field(default_factory=list)


def run_iteration(g: EGraph, ruleset: Ruleset, scheduler: BackoffScheduler,
                  iteration: int = 0) -> IterationReport:
    """One read-then-write saturation step over every unbanned rule.

    Matches are collected against the pre-iteration graph for all rules
    first (guards checked against the constant analysis at match time),
    then all right-hand sides are instantiated and unioned, then the graph
    is rebuilt once.
    """
    unions_before = g.union_count
    matched: list[tuple[Rule, Substitution, EClassId]] = []
    banned: list[str] = []
    total_matches = 0
    for rule in ruleset:
        if not scheduler.can_run(rule.name, iteration):
            banned.append(rule.name)
            continue
        hits = g.ematch(rule.lhs)
        total_matches += len(hits)
        if scheduler.record(rule.name, len(hits), iteration):
            # Newly banned: this iteration's matches are dropped too.
            banned.append(rule.name)
            continue
        for subst, root in hits:
            if g.guard_passes(rule, subst):
                matched.append((rule, subst, root))
    applied = 0
    for rule, subst, root in matched:
        new_id = g.add_instantiated(rule.rhs, subst)
        g.union(root, new_id)
        applied += 1
    g.rebuild()
    return IterationReport(
        iteration=iteration,
        matches=total_matches,
        applied=applied,
        unions=g.union_count - unions_before,
        nodes=g.num_nodes(),
        classes=g.num_classes(),
        contradiction=g.contradiction,
        banned=banned,
    )


# ---------------------------------------------------------------------------
# Extraction.

def _enode_cost(model: CostModel, g: EGraph, node: ENode, child_costs):
    op = node[0]
    if isinstance(model, MatMulScalarOps):
        if len(node) == 1:
            if op.name not in model.dims:
                raise ExtractionError(f"unbound matrix leaf {op.name!r}")
            return 0
        dims = [g.classes[g.find(c)].dims for c in node[1:]]
        if any(d is None for d in dims):
            raise ExtractionError("matrix node without dimension analysis")
        (rl, kl), (rr, kr) = dims
        return child_costs[0] + child_costs[1] + rl * kl * kr
    if isinstance(model, WeightedAstSize):
        return model.weights.get(op.name, 1) + sum(child_costs)
    if isinstance(model, IntegSquare):
        if op.name in ("int", "d"):
            s = sum(child_costs)
            return s * s
        return 1 + sum(child_costs)
    if isinstance(model, AstSize):
        return 1 + sum(child_costs)
    if isinstance(model, GoalIndicator):
        raise ExtractionError("goal-indicator cost cannot drive extraction; "
                              "check goal representation instead")
    raise ExtractionError(f"unsupported cost model {model!r}")


def extract(g: EGraph, root: EClassId, model: CostModel) -> tuple[Term, float]:
    """Minimum-cost concrete term represented by the root class."""
    best_cost: dict[EClassId, float] = {}
    best_node: dict[EClassId, ENode] = {}
    changed = True
    while changed:
        changed = False
        for cid, cls in g.classes.items():
            for node in cls.nodes:
                child_costs = []
                ok = True
                for child in node[1:]:
                    c = best_cost.get(g.find(child))
                    if c is None:
                        ok = False
                        break
                    child_costs.append(c)
                if not ok:
                    continue
                total = _enode_cost(model, g, node, child_costs)
                prev = best_cost.get(cid)
                if prev is None or total < prev:
                    best_cost[cid] = total
                    best_node[cid] = node
                    changed = True
    root = g.find(root)
    if root not in best_cost:
        raise ExtractionError("root class admits no finite-cost term")

    built: dict[EClassId, Term] = {}

    def build(cid: EClassId) -> Term:
        cid = g.find(cid)
        done = built.get(cid)
        if done is not None:
            return done
        node = best_node[cid]
        t = Term(node[0], tuple(build(c) for c in node[1:]))
        built[cid] = t
        return t

    return build(root), best_cost[root]


# ---------------------------------------------------------------------------
# Saturation and pulsing.

@dataclass
class SaturationLimits:
    iterations: int = 30
    nodes: int = 20000
    time_limit: float | None = None


@dataclass
class SaturationReport:
    iterations: int = 0
    nodes: int = 0
    classes: int = 0
    unions: int = 0
    contradiction: bool = False
    wall_time: float = 0.0
    stop_reason: str = ""
    restored_checkpoint: bool = False

    def to_json(self) -> str:
        return json.dumps({
            "schema": 1,
            "iterations": self.iterations,
            "e_nodes": self.nodes,
            "e_classes": self.classes,
            "unions": self.unions,
            "contradiction": self.contradiction,
            "wall_time": self.wall_time,
            "stop_reason": self.stop_reason,
            "restored_checkpoint": self.restored_checkpoint,
        })


def saturate(g: EGraph, root: EClassId, ruleset: Ruleset, model: CostModel,
             limits: SaturationLimits | None = None,
             checkpointing: bool = False,
             scheduler: BackoffScheduler | None = None,
             target_cost: float | None = None,
             deadline: float | None = None) -> tuple[Term, SaturationReport]:
    """Repeat saturation steps until fixpoint, a limit, or contradiction.

    With checkpointing on, a full copy of the e-graph is taken after every
    clean iteration; a detected contradiction aborts the run and the last
    checkpoint is used for extraction.
    """
    if limits is None:
        limits = SaturationLimits()
    if scheduler is None:
        scheduler = BackoffScheduler()
    started = time.monotonic()
    if deadline is None and limits.time_limit is not None:
        deadline = started + limits.time_limit
    g.rebuild()
    report = SaturationReport()
    checkpoint = g.copy() if checkpointing else None
    extract_from = g
    stop = "iteration_limit"
    for iteration in range(limits.iterations):
        if deadline is not None and time.monotonic() >= deadline:
            stop = "time_limit"
            break
        if g.num_nodes() > limits.nodes:
            stop = "node_limit"
            break
        before_unions = g.union_count
        before_nodes = g.num_nodes()
        step = run_iteration(g, ruleset, scheduler, iteration)
        report.iterations = iteration + 1
        if g.contradiction:
            stop = "contradiction"
            report.contradiction = True
            if checkpoint is not None:
                extract_from = checkpoint
                report.restored_checkpoint = True
            break
        if checkpointing:
            checkpoint = g.copy()
        # A quiet iteration is saturation only if no rule sat out banned.
        if (g.union_count == before_unions and g.num_nodes() == before_nodes
                and not step.banned):
            stop = "saturated"
            break
        if target_cost is not None:
            _, c = extract(g, root, model)
            if c <= target_cost:
                stop = "target_reached"
                break
    report.stop_reason = stop
    report.nodes = extract_from.num_nodes()
    report.classes = extract_from.num_classes()
    report.unions = extract_from.union_count
    best, _cost = extract(extract_from, root, model)
    report.wall_time = time.monotonic() - started
    return best, report


def pulse(t0: Term, ruleset: Ruleset, model: CostModel,
          iterations_per_pulse: int = 3,
          time_limit: float | None = 10.0,
          node_limit: int = 20000,
          dims: DimEnv | None = None,
          checkpointing: bool = False,
          target_cost: float | None = None) -> tuple[Term, list[SaturationReport]]:
    """Repeatedly saturate a fresh e-graph seeded with the current best term.

    The extracted term is adopted only when strictly cheaper, so the cost of
    the carried term never increases across pulses.
    """
    deadline = None if time_limit is None else time.monotonic() + time_limit
    best = t0
    best_cost = model.cost(t0)
    reports: list[SaturationReport] = []
    while True:
        if deadline is not None and time.monotonic() >= deadline:
            break
        g = EGraph(dims=dims)
        root = g.add_term(best)
        limits = SaturationLimits(iterations=iterations_per_pulse,
                                  nodes=node_limit)
        extracted, report = saturate(
            g, root, ruleset, model, limits,
            checkpointing=checkpointing, deadline=deadline)
        reports.append(report)
        cost = model.cost(extracted)
        if cost < best_cost:
            best, best_cost = extracted, cost
        else:
            # Pulses are deterministic in the seed term, so a pulse that
            # fails to improve would just repeat itself.
            break
        if target_cost is not None and best_cost <= target_cost:
            break
    return best, reports
