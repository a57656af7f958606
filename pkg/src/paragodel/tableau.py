"""Constraint-based validity prover with countermodel extraction.

Validity of a formula f is decided by refutation.  We start from the single
constraint ``w0:1:f < 1`` ("the truth support of f falls short of 1 somewhere")
and saturate it under decomposition rules.  Constraints compare *structures*:
either the value of one component of a formula at a named world (``w:1:g`` is
the truth support, ``w:2:g`` the falsity support) or one of the constants 0, 1.
If every branch of the resulting search tree develops a contradictory order
(a strict cycle), the assumption was absurd and f is valid.  Otherwise some
saturated branch stays consistent, and a finite countermodel is read off its
order structure, re-checked by direct evaluation, and returned.

Branching mirrors the case analysis of the Goedel operations: ``min(a,b) <= X``
holds iff one of the conjuncts does, ``imp(a,b)`` is either 1 or b, and so on.
Modal structures are handled in two complementary ways: an extremal bound
(e.g. "the minimum over successors is below X") is witnessed by a dedicated
successor world, while the universal direction propagates along every
relational constraint already on the branch.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

import networkx as nx

from .algebra import Pair
from .formula import (
    And,
    Box,
    Coimp,
    Const0,
    Const1,
    Dia,
    Formula,
    Imp,
    Neg,
    Or,
    Var,
    is_neg_free,
    print_formula,
    variables,
)
from .kripke import KripkeModel, check_realization, eval_kg2

# --------------------------------------------------------------------------
# Structures and constraints.


@dataclass(frozen=True)
class Labeled:
    """Component `index` (1 = truth support, 2 = falsity support) of a formula
    at a world."""

    world: str
    index: int
    formula: Formula

    def __str__(self):
        text = print_formula(self.formula)
        if isinstance(self.formula, (And, Or, Imp, Coimp)):
            text = f"({text})"
        return f"{self.world}:{self.index}:{text}"


@dataclass(frozen=True)
class Constant:
    value: int

    def __str__(self):
        return str(self.value)


Structure = Union[Labeled, Constant]

K0 = Constant(0)
K1 = Constant(1)


def labeled(world: str, index: int, f: Formula) -> Structure:
    """Structure for one component of f at a world, collapsing constants.

    Both components of the constants are known outright (1 has truth support 1
    and falsity support 0, dually for 0), so such structures are normalized to
    plain Constant nodes instead of carrying a world label.
    """
    if isinstance(f, Const1):
        return K1 if index == 1 else K0
    if isinstance(f, Const0):
        return K0 if index == 1 else K1
    return Labeled(world, index, f)


@dataclass(frozen=True)
class Constraint:
    """`lhs < rhs` when strict, else `lhs <= rhs`.

    Constraints are always stored in this lower-side-first orientation; rule
    builders that conceptually conclude "a >= b" simply construct the flipped
    instance.
    """

    lhs: Structure
    strict: bool
    rhs: Structure

    @property
    def rel(self) -> str:
        return "<" if self.strict else "<="

    def __str__(self):
        return f"{self.lhs} {self.rel} {self.rhs}"


@dataclass(frozen=True)
class RelConstraint:
    """Accessibility assertion: `source` sees `target`."""

    source: str
    target: str

    def __str__(self):
        return f"{self.source}R{self.target}"


# --------------------------------------------------------------------------
# Branches.


class Branch:
    """One branch of the search tree.

    Holds the constraints in insertion order (order matters for deterministic
    rule scheduling), the relational constraints, the set of already-fired rule
    instances, the witness bookkeeping for modal structures, and the world
    inventory.  Worlds are named w0, w1, ... in creation order; the root world
    w0 always exists.
    """

    def __init__(self, branch_id: str = "0"):
        self.branch_id = branch_id
        self.constraints: list[Constraint] = []
        self._cset: set[Constraint] = set()
        self.relations: list[RelConstraint] = []
        self._rset: set[RelConstraint] = set()
        self.fired: set = set()
        self.worlds: list[str] = ["w0"]
        # (world, index, modal formula) -> the witness world created for it.
        # Each extremal modal structure gets at most one witness per branch:
        # in a finitely branching model the min/max over successors is
        # attained, and the attaining successor witnesses every bound on the
        # same structure at once.  Later firings reuse it instead of spawning
        # fresh worlds (which would not terminate on e.g. nested boxes).
        self.witnesses: dict[tuple[str, int, Formula], str] = {}
        self.fresh = 1
        self.new_lines: list[str] = []  # trace lines not yet consumed by saturate

    def clone(self, branch_id: Optional[str] = None) -> "Branch":
        b = Branch.__new__(Branch)
        b.branch_id = branch_id if branch_id is not None else self.branch_id
        b.constraints = list(self.constraints)
        b._cset = set(self._cset)
        b.relations = list(self.relations)
        b._rset = set(self._rset)
        b.fired = set(self.fired)
        b.worlds = list(self.worlds)
        b.witnesses = dict(self.witnesses)
        b.fresh = self.fresh
        b.new_lines = []
        return b

    def add_constraint(self, c: Constraint, rule_id: str) -> bool:
        """Add c unless already present; duplicates are silent no-ops."""
        if c in self._cset:
            return False
        self.constraints.append(c)
        self._cset.add(c)
        self.new_lines.append(f"{self.branch_id}\t{rule_id}\t{c}")
        return True

    def add_relation(self, r: RelConstraint, rule_id: str) -> bool:
        if r in self._rset:
            return False
        self.relations.append(r)
        self._rset.add(r)
        self.new_lines.append(f"{self.branch_id}\t{rule_id}\t{r}")
        return True

    def new_world(self) -> str:
        name = f"w{self.fresh}"
        self.fresh += 1
        self.worlds.append(name)
        return name

    def __contains__(self, c: Constraint) -> bool:
        return c in self._cset

    def __repr__(self):
        return (
            f"Branch({self.branch_id!r}, {len(self.constraints)} constraints, "
            f"{len(self.relations)} relations, {len(self.worlds)} worlds)"
        )


# --------------------------------------------------------------------------
# The rule table.


@dataclass(frozen=True)
class Rule:
    """One decomposition schema.

    `family`/`index`/`side` say which constraints it matches: the active
    structure carries a formula of that family at that component index and
    sits on that side of the constraint.  `strictness` gates on the premise
    relation: 'both' schemata conclude with the premise's own relation, while
    'weak'/'strict' schemata exist only for one of them.  Fresh-world schemata
    introduce a witness successor; propagation schemata take an existing
    relational constraint as a second premise.  `order_class` drives the
    scheduling: 0 = non-branching propositional, 1 = branching propositional,
    2 = fresh-world modal (including witness reuse), 3 = propagation modal.
    """

    rule_id: str
    family: str
    index: int
    side: str
    strictness: str
    fresh: bool = False
    propagation: bool = False
    order_class: int = 1


class RuleTable:
    """The rule inventory, indexed for matching; restrictable by component."""

    def __init__(self, rules):
        self.rules: dict[str, Rule] = {r.rule_id: r for r in rules}
        self._by_pattern: dict[tuple[str, int, str], list[Rule]] = {}
        for r in self.rules.values():
            self._by_pattern.setdefault((r.family, r.index, r.side), []).append(r)

    def match(self, family: str, index: int, side: str, strict: bool) -> Optional[Rule]:
        for r in self._by_pattern.get((family, index, side), ()):
            if r.strictness == "both" or (r.strictness == "strict") == strict:
                return r
        return None

    def restrict_to_index(self, index: int) -> "RuleTable":
        return RuleTable(r for r in self.rules.values() if r.index == index)

    def __len__(self):
        return len(self.rules)


_R = Rule
RULES_KG2 = RuleTable(
    [
        # '!' swaps the two components, on either side of a constraint.
        _R("neg1_le", "neg", 1, "lhs", "both", order_class=0),
        _R("neg1_ge", "neg", 1, "rhs", "both", order_class=0),
        _R("neg2_le", "neg", 2, "lhs", "both", order_class=0),
        _R("neg2_ge", "neg", 2, "rhs", "both", order_class=0),
        # '&' is min on component 1 and max on component 2; '|' dually.  A min
        # below X splits into cases, a min above X decomposes conjunctively.
        _R("and1_le", "and", 1, "lhs", "both", order_class=1),
        _R("and1_ge", "and", 1, "rhs", "both", order_class=0),
        _R("and2_le", "and", 2, "lhs", "both", order_class=0),
        _R("and2_ge", "and", 2, "rhs", "both", order_class=1),
        _R("or1_le", "or", 1, "lhs", "both", order_class=0),
        _R("or1_ge", "or", 1, "rhs", "both", order_class=1),
        _R("or2_le", "or", 2, "lhs", "both", order_class=1),
        _R("or2_ge", "or", 2, "rhs", "both", order_class=0),
        # '->' on component 1: the value is either 1 (antecedent below
        # consequent) or the consequent's value.  The strict lower-bound case
        # forces the second alternative outright, hence the dedicated
        # single-strictness schemata.
        _R("imp1_leq", "imp", 1, "lhs", "weak", order_class=1),
        _R("imp1_lt", "imp", 1, "lhs", "strict", order_class=0),
        _R("imp1_ge", "imp", 1, "rhs", "both", order_class=1),
        # '->' on component 2 behaves like a reversed '-<' (0 or the
        # consequent's falsity support).
        _R("imp2_le", "imp", 2, "lhs", "both", order_class=1),
        _R("imp2_geq", "imp", 2, "rhs", "weak", order_class=1),
        _R("imp2_gt", "imp", 2, "rhs", "strict", order_class=0),
        # '-<' mirrors '->' with the roles of the components swapped.
        _R("coimp1_le", "coimp", 1, "lhs", "both", order_class=1),
        _R("coimp1_geq", "coimp", 1, "rhs", "weak", order_class=1),
        _R("coimp1_gt", "coimp", 1, "rhs", "strict", order_class=0),
        _R("coimp2_ge", "coimp", 2, "rhs", "both", order_class=1),
        _R("coimp2_leq", "coimp", 2, "lhs", "weak", order_class=1),
        _R("coimp2_lt", "coimp", 2, "lhs", "strict", order_class=0),
        # '[]' is min over successors on component 1 and max on component 2;
        # '<>' dually.  The extremal direction gets a witness successor, the
        # universal direction propagates along every known relation.
        _R("box1_le", "box", 1, "lhs", "both", fresh=True, order_class=2),
        _R("box1_ge", "box", 1, "rhs", "both", propagation=True, order_class=3),
        _R("box2_le", "box", 2, "lhs", "both", propagation=True, order_class=3),
        _R("box2_ge", "box", 2, "rhs", "both", fresh=True, order_class=2),
        _R("dia1_le", "dia", 1, "lhs", "both", propagation=True, order_class=3),
        _R("dia1_ge", "dia", 1, "rhs", "both", fresh=True, order_class=2),
        _R("dia2_le", "dia", 2, "lhs", "both", fresh=True, order_class=2),
        _R("dia2_ge", "dia", 2, "rhs", "both", propagation=True, order_class=3),
    ]
)

# The single-valued fragment needs only the truth-support rules.
RULES_KBIG = RULES_KG2.restrict_to_index(1)

_FAMILY = {
    Neg: "neg",
    And: "and",
    Or: "or",
    Imp: "imp",
    Coimp: "coimp",
    Box: "box",
    Dia: "dia",
}


def _conclusions(rule: Rule, active: Labeled, other: Structure, strict: bool,
                 target_world: Optional[str] = None) -> list[list[Constraint]]:
    """Conclusion branches (lists of constraints) for one rule firing.

    `other` is the non-active side of the premise constraint; `strict` its
    relation; `target_world` the witness/successor world for modal rules.

    Four of the 'both'-strictness schemata (imp1_ge, imp2_le, coimp1_le,
    coimp2_ge) add an explicit bound on `other` in their strict case beyond
    the bare case split: when e.g. `other < imp(a,b)` is explained by "the
    implication equals 1", that only holds if `other` is itself below 1.
    Without the bound, a saturated branch can pair `g < X` with constraints
    that force g's evaluated value to 0 while leaving X completely
    unconstrained at 0 as well, and no model read off the branch can satisfy
    it.  The bound is dropped when it would be the tautology 0 < 1.
    """
    rid = rule.rule_id
    w, X, R = active.world, other, strict
    f = active.formula

    if rule.family == "neg":
        flip = labeled(w, 3 - active.index, f.arg)
        if rule.side == "lhs":
            return [[Constraint(flip, R, X)]]
        return [[Constraint(X, R, flip)]]

    if rule.family in ("and", "or"):
        i = active.index
        a, b = labeled(w, i, f.left), labeled(w, i, f.right)
        is_min = (rule.family == "and") == (i == 1)
        if rule.side == "lhs":
            if is_min:
                return [[Constraint(a, R, X)], [Constraint(b, R, X)]]
            return [[Constraint(a, R, X), Constraint(b, R, X)]]
        if is_min:
            return [[Constraint(X, R, a), Constraint(X, R, b)]]
        return [[Constraint(X, R, a)], [Constraint(X, R, b)]]

    if rule.family in ("box", "dia"):
        inner = labeled(target_world, active.index, f.arg)
        if rule.side == "lhs":
            return [[Constraint(inner, R, X)]]
        return [[Constraint(X, R, inner)]]

    if rule.family == "imp":
        a1, b1 = labeled(w, 1, f.left), labeled(w, 1, f.right)
        a2, b2 = labeled(w, 2, f.left), labeled(w, 2, f.right)
        if rid == "imp1_leq":
            return [
                [Constraint(K1, False, X)],
                [Constraint(X, True, K1), Constraint(b1, False, X), Constraint(b1, True, a1)],
            ]
        if rid == "imp1_lt":
            return [[Constraint(b1, True, X), Constraint(b1, True, a1)]]
        if rid == "imp1_ge":
            first = [Constraint(a1, False, b1)]
            if R and X != K0:
                first.append(Constraint(X, True, K1))
            return [first, [Constraint(X, R, b1)]]
        if rid == "imp2_le":
            first = [Constraint(b2, False, a2)]
            if R and X != K1:
                first.append(Constraint(K0, True, X))
            return [first, [Constraint(b2, R, X)]]
        if rid == "imp2_geq":
            return [
                [Constraint(X, False, K0)],
                [Constraint(K0, True, X), Constraint(X, False, b2), Constraint(a2, True, b2)],
            ]
        if rid == "imp2_gt":
            return [[Constraint(X, True, b2), Constraint(a2, True, b2)]]

    if rule.family == "coimp":
        a1, b1 = labeled(w, 1, f.left), labeled(w, 1, f.right)
        a2, b2 = labeled(w, 2, f.left), labeled(w, 2, f.right)
        if rid == "coimp1_le":
            first = [Constraint(a1, False, b1)]
            if R and X != K1:
                first.append(Constraint(K0, True, X))
            return [first, [Constraint(a1, R, X)]]
        if rid == "coimp1_geq":
            return [
                [Constraint(X, False, K0)],
                [Constraint(K0, True, X), Constraint(X, False, a1), Constraint(b1, True, a1)],
            ]
        if rid == "coimp1_gt":
            return [[Constraint(X, True, a1), Constraint(b1, True, a1)]]
        if rid == "coimp2_ge":
            second = [Constraint(b2, False, a2)]
            if R and X != K0:
                second.append(Constraint(X, True, K1))
            return [[Constraint(X, R, a2)], second]
        if rid == "coimp2_leq":
            return [
                [Constraint(K1, False, X)],
                [Constraint(X, True, K1), Constraint(a2, False, X), Constraint(a2, True, b2)],
            ]
        if rid == "coimp2_lt":
            return [[Constraint(a2, True, X), Constraint(a2, True, b2)]]

    raise AssertionError(f"no conclusions for rule {rid}")  # pragma: no cover


# --------------------------------------------------------------------------
# Matching.


@dataclass(frozen=True)
class RuleInstance:
    """A rule applied to one constraint reading (and, for propagation rules,
    one relational constraint)."""

    rule_id: str
    constraint: Constraint
    side: str
    relation: Optional[RelConstraint] = None

    @property
    def fingerprint(self):
        if self.relation is None:
            return (self.rule_id, self.constraint)
        return (self.rule_id, self.constraint, self.relation)


def _suppressed(b: Branch, ct: Constraint, side: str) -> bool:
    """Bound-constraint priority: decomposition of a structure's strict bound
    against a constant is withheld while a sharper strict constraint ties the
    same structure to anything else.  The sharper constraint's conclusions
    subsume the bound's (every structure sits between 0 and 1 anyway), and
    skipping the bound keeps derivations lean.  Weak bounds are never withheld.
    """
    if not ct.strict:
        return False
    if side == "lhs" and ct.rhs == K1:
        return any(c.strict and c.lhs == ct.lhs and c.rhs != K1 for c in b.constraints)
    if side == "rhs" and ct.lhs == K0:
        return any(c.strict and c.rhs == ct.rhs and c.lhs != K0 for c in b.constraints)
    return False


def applicable_instances(b: Branch, rules: Optional[RuleTable] = None) -> list[RuleInstance]:
    """All rule instances matching the branch and not yet fired, scheduled:
    non-branching propositional first, then branching propositional, then
    fresh-world modal, then propagation modal; within a class, by premise
    insertion order.  Propagation instances re-enter this list whenever a new
    relational constraint appears (their fingerprint includes the relation).
    """
    rules = rules if rules is not None else RULES_KG2
    keyed = []
    for ci, ct in enumerate(b.constraints):
        for si, side in enumerate(("lhs", "rhs")):
            active = ct.lhs if side == "lhs" else ct.rhs
            if not isinstance(active, Labeled):
                continue
            family = _FAMILY.get(type(active.formula))
            if family is None:  # variable: nothing to decompose
                continue
            rule = rules.match(family, active.index, side, ct.strict)
            if rule is None:
                continue
            if _suppressed(b, ct, side):
                continue
            if rule.propagation:
                for ri, rel in enumerate(b.relations):
                    if rel.source != active.world:
                        continue
                    inst = RuleInstance(rule.rule_id, ct, side, rel)
                    if inst.fingerprint not in b.fired:
                        keyed.append(((rule.order_class, ci, si, ri), inst))
            else:
                inst = RuleInstance(rule.rule_id, ct, side)
                if inst.fingerprint not in b.fired:
                    keyed.append(((rule.order_class, ci, si, -1), inst))
    keyed.sort(key=lambda pair: pair[0])
    return [inst for _, inst in keyed]


def apply_instance(b: Branch, inst: RuleInstance,
                   rules: Optional[RuleTable] = None) -> list[Branch]:
    """Fire one instance; returns the successor branches (new objects).

    Every successor records the firing in its fired set, so an instance whose
    conclusions all turn out to be duplicates still never fires twice.  When a
    fresh-world rule fires for a modal structure that already has a witness,
    the conclusion is re-targeted at the existing witness world instead of
    creating a new one.
    """
    rules = rules if rules is not None else RULES_KG2
    rule = rules.rules[inst.rule_id]
    if inst.fingerprint in b.fired:
        raise ValueError(f"instance already fired: {inst.rule_id} on {inst.constraint}")
    if inst.constraint not in b:
        raise ValueError(f"premise not on branch: {inst.constraint}")

    ct = inst.constraint
    active = ct.lhs if inst.side == "lhs" else ct.rhs
    other = ct.rhs if inst.side == "lhs" else ct.lhs

    if rule.fresh:
        key = (active.world, active.index, active.formula)
        witness = b.witnesses.get(key)
        nb = b.clone()
        nb.fired.add(inst.fingerprint)
        if witness is None:
            witness = nb.new_world()
            nb.witnesses[key] = witness
            nb.add_relation(RelConstraint(active.world, witness), inst.rule_id)
        for c in _conclusions(rule, active, other, ct.strict, witness)[0]:
            nb.add_constraint(c, inst.rule_id)
        return [nb]

    if rule.propagation:
        nb = b.clone()
        nb.fired.add(inst.fingerprint)
        for c in _conclusions(rule, active, other, ct.strict, inst.relation.target)[0]:
            nb.add_constraint(c, inst.rule_id)
        return [nb]

    branches = _conclusions(rule, active, other, ct.strict)
    out = []
    for k, conclusion in enumerate(branches):
        child_id = b.branch_id if len(branches) == 1 else f"{b.branch_id}.{k + 1}"
        nb = b.clone(child_id)
        nb.fired.add(inst.fingerprint)
        for c in conclusion:
            nb.add_constraint(c, inst.rule_id)
        out.append(nb)
    return out


# --------------------------------------------------------------------------
# Closure.


class OrderGraph:
    """Directed order graph of a branch's structural constraints.

    Nodes are the structures plus the constants; edges carry a strict flag
    (a strict edge wins over a weak one between the same pair).  Built-in
    bound edges 0 <= s <= 1 for every node and 0 < 1 fold the constant
    contradiction cases (something above 1, below 0, or 1 at-or-below 0)
    into the single cycle criterion.
    """

    def __init__(self, constraints):
        g = nx.DiGraph()
        g.add_nodes_from((K0, K1))
        for ct in constraints:
            self._add_edge(g, ct.lhs, ct.rhs, ct.strict)
        for node in list(g.nodes):
            if node != K0:
                self._add_edge(g, K0, node, node == K1)
            if node != K1:
                self._add_edge(g, node, K1, False)
        self.graph = g

    @staticmethod
    def _add_edge(g, u, v, strict: bool):
        if g.has_edge(u, v):
            if strict:
                g[u][v]["strict"] = True
        else:
            g.add_edge(u, v, strict=strict)

    def closed(self) -> bool:
        """True iff some strongly connected component contains a strict edge,
        i.e. the constraints force x < x for some value."""
        comp = {}
        for i, members in enumerate(nx.strongly_connected_components(self.graph)):
            for n in members:
                comp[n] = i
        return any(
            data["strict"] and comp[u] == comp[v]
            for u, v, data in self.graph.edges(data=True)
        )


def closure_check(b: Branch) -> bool:
    """Is the branch contradictory?"""
    return OrderGraph(b.constraints).closed()


# --------------------------------------------------------------------------
# Saturation.


@dataclass
class TableauLimits:
    """Resource guardrails; exceeding them aborts with an explicit error
    rather than ever returning a verdict."""

    max_constraints: int = 10_000
    max_worlds: int = 200


class ResourceExhausted(Exception):
    """Saturation hit a resource cap; the search is inconclusive."""

    def __init__(self, message: str, *, constraints: int = 0, worlds: int = 0):
        super().__init__(message)
        self.constraints = constraints
        self.worlds = worlds


@dataclass(frozen=True)
class Closed:
    """Every branch closed: the refutation assumption is absurd."""

    trace: tuple[str, ...]


@dataclass(frozen=True)
class OpenBranch:
    """A saturated consistent branch, ready for countermodel extraction."""

    branch: Branch
    trace: tuple[str, ...]


def init_tableau(f: Formula) -> Branch:
    """Root branch: the refutation assumption w0:1:f < 1."""
    b = Branch()
    b.add_constraint(Constraint(labeled("w0", 1, f), True, K1), "init")
    return b


def saturate(f: Formula, *, rules: Optional[RuleTable] = None,
             limits: Optional[TableauLimits] = None) -> Union[Closed, OpenBranch]:
    """Depth-first saturation from the refutation assumption.

    Visits branches in deterministic order, always firing the first applicable
    instance; children of a branching rule are explored left to right.  The
    trace records one line per added constraint or relation, tab-separated:
    branch id, rule id, the addition.
    """
    rules = rules if rules is not None else RULES_KG2
    limits = limits if limits is not None else TableauLimits()
    trace: list[str] = []
    stack = [init_tableau(f)]
    while stack:
        b = stack.pop()
        trace.extend(b.new_lines)
        b.new_lines = []
        if len(b.constraints) > limits.max_constraints or len(b.worlds) > limits.max_worlds:
            raise ResourceExhausted(
                f"saturation exceeded limits on branch {b.branch_id} "
                f"({len(b.constraints)} constraints, {len(b.worlds)} worlds)",
                constraints=len(b.constraints),
                worlds=len(b.worlds),
            )
        if closure_check(b):
            trace.append(f"{b.branch_id}\tclosure\tclosed")
            continue
        instances = applicable_instances(b, rules)
        if not instances:
            trace.append(f"{b.branch_id}\topen\tsaturated")
            return OpenBranch(branch=b, trace=tuple(trace))
        stack.extend(reversed(apply_instance(b, instances[0], rules)))
    return Closed(trace=tuple(trace))


# --------------------------------------------------------------------------
# Countermodel extraction.


def _strict_ancestors(g: nx.DiGraph, members) -> set:
    """Nodes with a path into `members` crossing at least one strict edge."""
    seen = {(m, False) for m in members}
    todo = list(seen)
    out = set()
    while todo:
        x, s = todo.pop()
        for y in g.predecessors(x):
            state = (y, s or g[y][x]["strict"])
            if state not in seen:
                seen.add(state)
                todo.append(state)
                if state[1]:
                    out.add(y)
    return out


def extract_countermodel(b: Branch, f: Formula) -> KripkeModel:
    """Read a refuting model off a saturated open branch.

    The worlds and relation are the branch's own.  Variable values come from
    the order structure of the constraints (branch constraints only -- the
    built-in bound edges play no role here):

      * a variable structure weakly reachable from the constant 1 is pinned to
        1, and one that weakly reaches the constant 0 is pinned to 0;
      * the remaining variable structures are grouped by mutual reachability
        (order-equivalent values share a scalar);
      * each group's value is rank/D, where the rank counts the variable
        groups strictly below it (a path with a strict edge), plus one if the
        constant 0 or a 0-pinned structure sits strictly below;
      * D is 2 * (number of variables) * (number of worlds), raised to
        max rank + 1 in the degenerate cases where that product is too small.

    Strict chains then get strictly increasing values, weak paths
    non-decreasing ones, and everything stays inside [0, 1] with room below
    any 1-pinned structure.  Components never mentioned default to 0.
    """
    if closure_check(b):
        raise ValueError("cannot extract a model from a closed branch")
    if applicable_instances(b, RULES_KG2):
        raise ValueError("branch is not saturated")

    g = nx.DiGraph()
    g.add_nodes_from((K0, K1))
    for ct in b.constraints:
        OrderGraph._add_edge(g, ct.lhs, ct.rhs, ct.strict)

    var_nodes = [
        n for n in g.nodes if isinstance(n, Labeled) and isinstance(n.formula, Var)
    ]
    pinned1 = {n for n in var_nodes if nx.has_path(g, K1, n)}
    pinned0 = {n for n in var_nodes if nx.has_path(g, n, K0)}
    unpinned = {n for n in var_nodes if n not in pinned1 and n not in pinned0}

    # At a world with no outgoing relational constraint, the truth support of
    # a diamond and the falsity support of a box evaluate to 0 no matter what
    # the valuation says.  A residual strict bound with such a structure on
    # the small side (the only way they linger on a saturated branch: their
    # upper-bound schemata merely propagate, and the world has nothing to
    # propagate to) therefore pushes the big side strictly above 0, just like
    # a strict bound whose small side is the constant 0.  The mirrored
    # forced-1 structures need no counterpart: they can only linger on the
    # big side, unpinned values stay below 1 by construction, and a 1-pinned
    # structure under a strict bound closes the branch through the built-in
    # upper bounds instead.
    has_succ = {r.source for r in b.relations}
    floor0 = {
        n
        for n in g.nodes
        if isinstance(n, Labeled)
        and n.world not in has_succ
        and (
            (n.index == 1 and isinstance(n.formula, Dia))
            or (n.index == 2 and isinstance(n.formula, Box))
        )
    }

    classes: list[list[Labeled]] = []
    node_class: dict[Labeled, int] = {}
    for scc in nx.strongly_connected_components(g):
        members = [n for n in scc if n in unpinned]
        if members:
            for n in members:
                node_class[n] = len(classes)
            classes.append(members)

    values: list[int] = []
    for idx, members in enumerate(classes):
        below = _strict_ancestors(g, members)
        rank = len({node_class[y] for y in below if y in node_class} - {idx})
        bump = 1 if any(y == K0 or y in pinned0 or y in floor0 for y in below) else 0
        values.append(rank + bump)

    denom = max(2 * len(variables(f)) * len(b.worlds), max(values, default=0) + 1)

    valuation: dict[tuple[str, str], Pair] = {}

    def put(node: Labeled, val: Fraction):
        key = (node.world, node.formula.name)
        pos, neg = valuation.get(key, Pair(Fraction(0), Fraction(0)))
        if node.index == 1:
            pos = val
        else:
            neg = val
        valuation[key] = Pair(pos, neg)

    for node in var_nodes:
        if node in pinned1:
            put(node, Fraction(1))
        elif node in pinned0:
            put(node, Fraction(0))
        else:
            put(node, Fraction(values[node_class[node]], denom))

    return KripkeModel(
        b.worlds,
        relation=[(r.source, r.target) for r in b.relations],
        valuation=valuation,
    )


# --------------------------------------------------------------------------
# The decision procedure.


@dataclass(frozen=True)
class Valid:
    trace: tuple[str, ...]

    valid = True


@dataclass(frozen=True)
class Invalid:
    model: KripkeModel
    branch: Branch
    world: str
    trace: tuple[str, ...] = ()

    valid = False


Verdict = Union[Valid, Invalid]


def prove(f: Formula, logic: str = "KG2", *,
          limits: Optional[TableauLimits] = None) -> Verdict:
    """Decide validity of f; "KG2" is the full two-component logic, "KbiG"
    the single-valued '!'-free fragment (same verdicts on its domain, smaller
    rule table).

    Invalid verdicts pass a self-check before being returned: the extracted
    model must satisfy every branch constraint under direct evaluation and
    must give f a truth support below 1 at the root world.
    """
    if logic not in ("KG2", "KbiG"):
        raise ValueError(f"unknown logic {logic!r}; expected 'KG2' or 'KbiG'")
    if logic == "KbiG":
        if not is_neg_free(f):
            raise ValueError("KbiG mode requires a '!'-free formula")
        rules = RULES_KBIG
    else:
        rules = RULES_KG2

    outcome = saturate(f, rules=rules, limits=limits)
    if isinstance(outcome, Closed):
        return Valid(trace=outcome.trace)

    model = extract_countermodel(outcome.branch, f)
    if not check_realization(model, outcome.branch):
        raise RuntimeError(
            "internal error: extracted model does not realize its branch"
        )
    if not eval_kg2(model, "w0", f).pos < 1:
        raise RuntimeError(
            "internal error: extracted model does not refute the formula"
        )
    return Invalid(model=model, branch=outcome.branch, world="w0", trace=outcome.trace)
