"""Inference procedures: entailment, maxent, I0, I1, and prior-based.

A procedure maps a knowledge base's denotation to a subset of it; a
query follows when every selected measure satisfies it.  Selections are
finite lists (maxent, finite priors), constraint denotations (entailment,
I0, I1), or the product-measure family, which is handled by structural
rules plus seeded sampling falsification.
"""

from __future__ import annotations

import itertools
import random as _random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .constraints import (
    And,
    ConstraintExpr,
    FalseExpr,
    LinearAtom,
    ProductAtom,
    TrueExpr,
    and_,
    atoms_of,
    has_product_atom,
    not_,
    satisfies,
    space_of,
    translate,
)
from .entail import (
    entails,
    is_interesting,
    linear_range,
    objective_normal_form,
    sample_measures,
    satisfiable,
)
from .errors import CredalError, DomainError
from .measures import (
    DenotationSet,
    FiniteMeasureSet,
    Measure,
    MeasureSet,
    product_measure,
)
from .optimize import DEFAULT_CONFIG, ProjectionConfig, maxent, update_set
from .spaces import Event, Space, component_map, cylinder, event_from_indices, product_space

_ONE = Fraction(1)

ENTAILMENT = "entailment"
MAXENT = "maxent"
I0 = "i0"
I1 = "i1"
PRIOR_BASED = "prior_based"
BROKEN = "broken"

UNIFORM = "uniform"
FINITE = "finite"
PRODUCT_FAMILY = "product_family"


@dataclass(frozen=True)
class PriorFunction:
    """Assigns each space its set of prior measures."""

    kind: str  # uniform | finite | product_family
    finite: tuple[tuple[Space, tuple[Measure, ...]], ...] = ()

    @staticmethod
    def uniform() -> "PriorFunction":
        return PriorFunction(UNIFORM)

    @staticmethod
    def product_family() -> "PriorFunction":
        return PriorFunction(PRODUCT_FAMILY)

    @staticmethod
    def of(assignment: Mapping[Space, Sequence[Measure]]) -> "PriorFunction":
        items = []
        for space, measures in assignment.items():
            if not measures:
                raise ValueError("finite prior lists must be nonempty")
            items.append((space, tuple(measures)))
        return PriorFunction(FINITE, tuple(items))

    def measures_for(self, space: Space) -> tuple[Measure, ...]:
        if self.kind == UNIFORM:
            return (Measure.uniform(space),)
        if self.kind == FINITE:
            for sp, ms in self.finite:
                if sp == space:
                    return ms
            raise KeyError(f"no prior declared for {space!r}")
        raise CredalError("the product family is not a finite prior list")


@dataclass(frozen=True)
class InferenceProcedure:
    name: str
    kind: str
    prior: PriorFunction | None = None
    config: ProjectionConfig = field(default=DEFAULT_CONFIG)

    @staticmethod
    def entailment() -> "InferenceProcedure":
        return InferenceProcedure("entailment", ENTAILMENT)

    @staticmethod
    def maxent(config: ProjectionConfig = DEFAULT_CONFIG) -> "InferenceProcedure":
        return InferenceProcedure("maxent", MAXENT, config=config)

    @staticmethod
    def i0() -> "InferenceProcedure":
        return InferenceProcedure("I0", I0)

    @staticmethod
    def i1() -> "InferenceProcedure":
        return InferenceProcedure("I1", I1)

    @staticmethod
    def prior_based(prior: PriorFunction, name: str | None = None,
                    config: ProjectionConfig = DEFAULT_CONFIG) -> "InferenceProcedure":
        return InferenceProcedure(name or f"I^{prior.kind}", PRIOR_BASED, prior, config)

    @staticmethod
    def broken() -> "InferenceProcedure":
        """Negative control: ignores the knowledge base (violates I(A) <= A)."""
        return InferenceProcedure("broken", BROKEN)


@dataclass(frozen=True)
class Verdict:
    holds: bool
    evidence: tuple[Measure, ...] = ()
    mode: str = "exact"  # "exact" | "sampled"
    samples: int | None = None
    seed: int | None = None

    def __bool__(self):  # pragma: no cover - convenience
        return self.holds


def _resolve_space(kb, theta, space):
    sp = space or space_of(kb) or (space_of(theta) if theta is not None else None)
    if sp is None:
        raise ValueError("cannot infer the space from pure true/false constraints")
    return sp


def i0_select(kb: ConstraintExpr, space: Space | None = None) -> MeasureSet:
    """Selection of the objective-strengthening procedure.

    For kb equivalent to Pr(T) = 1 the selection is the measures
    concentrated on T with full support on it: over a finite space every
    constraint 0 < Pr(S) < 1 for nonempty strict subsets S of T reduces
    to per-world positivity, so the exponential family of subset
    constraints is represented by |T| strict atoms.  Non-objective kb
    selects its whole denotation (entailment behavior).
    """
    space = _resolve_space(kb, None, space)
    t = objective_normal_form(kb, space)
    if t is None:
        return DenotationSet(kb)
    if t.count == 0:
        return DenotationSet(FalseExpr())
    parts: list[ConstraintExpr] = [LinearAtom(((_ONE, t),), "=", _ONE)]
    if t.count >= 2:
        for i in t.indices():
            singleton = event_from_indices(space, [i])
            parts.append(LinearAtom(((_ONE, singleton),), ">", Fraction(0)))
    return DenotationSet(and_(*parts))


def i1_select(kb: ConstraintExpr, space: Space | None = None) -> MeasureSet:
    """Selection tightening Pr(S) >= 1/4 knowledge bases to Pr(S) >= 1/3."""
    space = _resolve_space(kb, None, space)
    s = is_interesting(kb, space)
    if s is None:
        return DenotationSet(kb)
    return DenotationSet(LinearAtom(((_ONE, s),), ">=", Fraction(1, 3)))


def select(proc: InferenceProcedure, kb: ConstraintExpr, space: Space | None = None) -> MeasureSet:
    """The procedure's selected set for kb (not for the product family)."""
    space = _resolve_space(kb, None, space)
    if proc.kind == ENTAILMENT:
        return DenotationSet(kb)
    if proc.kind == BROKEN:
        return DenotationSet(TrueExpr())
    if proc.kind == MAXENT:
        res = maxent(kb, space, proc.config)
        if res.status == "not_attained":
            raise DomainError("KB outside procedure domain: entropy supremum not attained")
        return FiniteMeasureSet(res.measures)
    if proc.kind == I0:
        return i0_select(kb, space)
    if proc.kind == I1:
        return i1_select(kb, space)
    if proc.kind == PRIOR_BASED:
        if proc.prior.kind == PRODUCT_FAMILY:
            raise CredalError("product-family selections are not enumerable; use infers")
        priors = FiniteMeasureSet(tuple(m.to_float() for m in proc.prior.measures_for(space)))
        return update_set(priors, kb, proc.config)
    raise ValueError(f"unknown procedure kind {proc.kind!r}")


def _check_all_satisfy(selection: MeasureSet, theta: ConstraintExpr, space: Space,
                       eps: float, seed: int, samples: int) -> Verdict:
    if isinstance(selection, FiniteMeasureSet):
        for m in selection:
            if not satisfies(m, theta, eps):
                return Verdict(False, (m,))
        return Verdict(True, tuple(selection.measures))
    if isinstance(selection, DenotationSet):
        expr = selection.expr
        if not has_product_atom(theta):
            if entails(expr, theta, space):
                return Verdict(True)
            witness = satisfiable(and_(expr, not_(theta)), space).witness
            return Verdict(False, (witness,) if witness else ())
        for mu in sample_measures(expr, space, samples, seed):
            if not satisfies(mu, theta):
                return Verdict(False, (mu,), mode="sampled", samples=samples, seed=seed)
        return Verdict(True, mode="sampled", samples=samples, seed=seed)
    raise CredalError("selection kind does not support query evaluation")


def infers(proc: InferenceProcedure, kb: ConstraintExpr, theta: ConstraintExpr,
           space: Space | None = None, eps: float = 1e-8,
           seed: int = 0, samples: int = 200) -> Verdict:
    """KB |~ theta under the procedure: every selected measure satisfies
    theta.  Exact for finite selections and for linear queries against
    denotations; sampled falsification otherwise."""
    space = _resolve_space(kb, theta, space)
    if has_product_atom(kb):
        raise CredalError("product atoms are query-only; they cannot appear in kb")
    if proc.kind == PRIOR_BASED and proc.prior.kind == PRODUCT_FAMILY:
        kbs = _factorize(kb, space)
        if kbs is None:
            return _product_family_sampled(kb, theta, space, seed, samples)
        return product_prior_infer(kbs, theta, space, seed=seed, samples=samples)
    selection = select(proc, kb, space)
    return _check_all_satisfy(selection, theta, space, eps, seed, samples)


# Product-family machinery ------------------------------------------------



def _pi_factors(space: Space) -> tuple[Space, ...]:
    """Factors the product prior refers to: the declared ones, else the
    maximal product decomposition."""
    if space.factors is not None:
        return space.factors
    from .spaces import product_decomposition

    return tuple(product_decomposition(space))


def _rectangle_projections(event: Event, space: Space) -> list[Event] | None:
    """Per-factor projections if the event is a product rectangle."""
    factors = _pi_factors(space)
    comps = [component_map(space, f) for f in factors]
    projections = []
    for k, f in enumerate(factors):
        ids = {comps[k][i] for i in event.indices()}
        projections.append(event_from_indices(f, sorted(ids)))
    mask = (1 << len(space.worlds)) - 1
    rect = Event(space, mask)
    for f, ev in zip(factors, projections):
        rect = rect & cylinder(space, f, ev)
    if rect.mask != event.mask:
        return None
    return projections


def _factorize(kb: ConstraintExpr, space: Space) -> list[ConstraintExpr] | None:
    """Split a conjunction into per-factor constraints, if possible."""
    factors = _pi_factors(space)
    if isinstance(kb, TrueExpr):
        return [TrueExpr()] * len(factors)
    conjuncts = kb.items if isinstance(kb, And) else (kb,)
    comps = [component_map(space, f) for f in factors]
    out: list[ConstraintExpr] = [TrueExpr()] * len(factors)
    for conj in conjuncts:
        owner: int | None = None
        for atom in atoms_of(conj):
            events = ([e for _, e in atom.terms] if isinstance(atom, LinearAtom)
                      else [atom.lhs, *atom.rhs])
            for ev in events:
                ks = _cylinder_factor(ev, space, factors, comps)
                if ks is None:
                    return None
                if owner is None:
                    owner = ks
                elif owner != ks:
                    return None
        if owner is None:  # constant conjunct
            continue
        projected = _project_constraint(conj, factors[owner], comps[owner])
        out[owner] = and_(out[owner], projected)
    return out


def _cylinder_factor(event: Event, space: Space, factors, comps) -> int | None:
    """Index of the single factor an event is a cylinder over, if any."""
    for k, f in enumerate(factors):
        ids = {comps[k][i] for i in event.indices()}
        if cylinder(space, f, event_from_indices(f, sorted(ids))).mask == event.mask:
            return k
    return None


def _project_constraint(expr: ConstraintExpr, factor: Space, comp) -> ConstraintExpr:
    from .constraints import Not, Or

    if isinstance(expr, (TrueExpr, FalseExpr)):
        return expr
    if isinstance(expr, LinearAtom):
        terms = []
        for c, ev in expr.terms:
            ids = sorted({comp[i] for i in ev.indices()})
            terms.append((c, event_from_indices(factor, ids)))
        return LinearAtom(tuple(terms), expr.cmp, expr.bound)
    if isinstance(expr, And):
        return And(tuple(_project_constraint(i, factor, comp) for i in expr.items))
    if isinstance(expr, Or):
        return Or(tuple(_project_constraint(i, factor, comp) for i in expr.items))
    if isinstance(expr, Not):
        return Not(_project_constraint(expr.child, factor, comp))
    raise CredalError("cannot project this constraint onto a factor")


def _has_strict(expr: ConstraintExpr) -> bool:
    return any(isinstance(a, LinearAtom) and a.cmp in ("<", ">") for a in atoms_of(expr))


def _normalize_single_cell(kb: ConstraintExpr) -> ConstraintExpr:
    """Push negations into atoms when the kb is one conjunctive cell, so
    syntactically strict spellings of closed sets (like !(P < 1/4)) take
    the exact interval path."""
    if isinstance(kb, (TrueExpr, FalseExpr)) or has_product_atom(kb):
        return kb
    from .constraints import to_dnf

    dnf = to_dnf(kb)
    if len(dnf.systems) == 1:
        return dnf.systems[0].as_constraint()
    return kb


def product_prior_infer(kbs: Sequence[ConstraintExpr], theta: ConstraintExpr, space: Space,
                        seed: int = 0, samples: int = 400) -> Verdict:
    """Inference under the all-product-measures prior, for a factorized kb.

    The updated set is exactly the product measures whose factors satisfy
    their constraints.  Product atoms over disjoint-factor rectangles
    hold structurally; single-rectangle linear atoms are decided by
    exact per-factor interval analysis; anything else falls back to
    seeded sampling falsification over random product measures.
    """
    factors = _pi_factors(space)
    if len(kbs) != len(factors):
        raise ValueError("kbs must align with the space's factors")
    kbs = [_normalize_single_cell(kb_i) for kb_i in kbs]
    for kb_i, f in zip(kbs, factors):
        if not satisfiable(kb_i, f).feasible:
            return Verdict(True)  # empty selection: trivially holds

    exact = _exact_product_verdict(kbs, theta, space, factors)
    if exact is not None:
        return exact

    rng = _random.Random(seed)
    factor_samples = [sample_measures(kb_i, f, max(4, samples // 8), rng.randrange(2**30))
                      for kb_i, f in zip(kbs, factors)]
    if all(factor_samples):
        for _ in range(samples):
            parts = [fs[rng.randrange(len(fs))] for fs in factor_samples]
            mu = product_measure(parts, space)
            if not satisfies(mu, theta):
                return Verdict(False, (mu,), mode="sampled", samples=samples, seed=seed)
    return Verdict(True, mode="sampled", samples=samples, seed=seed)


def _product_family_sampled(kb: ConstraintExpr, theta: ConstraintExpr, space: Space,
                            seed: int, samples: int, eps: float = 1e-8) -> Verdict:
    """Falsification for a non-factorized kb under the product prior.

    The selection is the union of the priors' projections onto [[kb]]
    (generally not product measures), so random full-support product
    priors are drawn and projected; their projection attainers are the
    sampled members of the selection.  An unattained projection puts the
    kb outside the procedure's domain.
    """
    from .optimize import kl_project

    if not satisfiable(kb, space).feasible:
        return Verdict(True)  # empty selection: trivially holds
    factors = _pi_factors(space)
    rng = _random.Random(seed)

    priors: list[Measure] = []
    sizes = [len(f.worlds) for f in factors]
    n_corners = 1
    for s in sizes:
        n_corners *= s
    if n_corners <= 64:
        # extreme priors first: counterexamples live at the corners
        for combo in itertools.product(*(range(s) for s in sizes)):
            priors.append(product_measure(
                [Measure.point_mass(f, i, backend="float") for f, i in zip(factors, combo)],
                space))
    priors.append(product_measure([Measure.uniform(f) for f in factors], space))
    for _ in range(max(1, samples // 8)):
        parts = []
        for f in factors:
            raw = [rng.random() + 1e-3 for _ in f.worlds]
            total = sum(raw)
            parts.append(Measure.from_floats(f, [w / total for w in raw]))
        priors.append(product_measure(parts, space))

    tested = 0
    for prior in priors:
        res = kl_project(prior, kb)
        if res.status == "not_attained":
            raise DomainError("KB outside procedure domain: projection not attained")
        for m in res.measures:
            tested += 1
            if not satisfies(m, theta, eps):
                return Verdict(False, (m,), mode="sampled", samples=tested, seed=seed)
    return Verdict(True, mode="sampled", samples=tested, seed=seed)


def _exact_product_verdict(kbs, theta, space, factors) -> Verdict | None:
    from .constraints import to_dnf

    conjuncts = theta.items if isinstance(theta, And) else (theta,)
    closed = all(not _has_strict(kb_i) for kb_i in kbs)
    # single closed cells make the attained value range an exact interval,
    # so a violated interval is a definite counterexample, not just a miss
    exact_interval = closed and all(
        isinstance(kb_i, TrueExpr) or len(to_dnf(kb_i).systems) == 1 for kb_i in kbs)
    for conj in conjuncts:
        if isinstance(conj, TrueExpr):
            continue
        if isinstance(conj, FalseExpr):
            return Verdict(False)
        if isinstance(conj, ProductAtom):
            if not _structural_product_atom(conj, space):
                return None
            continue
        if isinstance(conj, LinearAtom) and len(conj.terms) == 1 and closed:
            coeff, ev = conj.terms[0]
            projections = _rectangle_projections(ev, space)
            if projections is None:
                return None
            lo = hi = Fraction(1)
            for kb_i, f, u in zip(kbs, factors, projections):
                rng_i = linear_range(kb_i, ((Fraction(1), u),), f)
                if rng_i is None:
                    return Verdict(True)
                lo, hi = lo * rng_i[0], hi * rng_i[1]
            vals = sorted((coeff * lo, coeff * hi))
            if not _interval_satisfies(vals[0], vals[1], conj.cmp, conj.bound):
                if exact_interval:
                    return Verdict(False)
                return None  # range may overcover: fall back to sampling
            continue
        return None
    return Verdict(True)


def _structural_product_atom(atom: ProductAtom, space: Space) -> bool:
    """True when every product measure satisfies Pr(A) = Pr(B) Pr(C):
    A, B, C are rectangles, A = B & C, and B and C constrain disjoint
    factor sets."""
    pa = _rectangle_projections(atom.lhs, space)
    pb = _rectangle_projections(atom.rhs[0], space)
    pc = _rectangle_projections(atom.rhs[1], space)
    if pa is None or pb is None or pc is None:
        return False
    if (atom.rhs[0] & atom.rhs[1]).mask != atom.lhs.mask:
        return False
    for k, f in enumerate(_pi_factors(space)):
        full = (1 << len(f.worlds)) - 1
        if pb[k].mask != full and pc[k].mask != full:
            return False
    return True


def _interval_satisfies(lo: Fraction, hi: Fraction, cmp: str, bound: Fraction) -> bool:
    """Whether every value in [lo, hi] satisfies the comparison."""
    if cmp == "=":
        return lo == hi == bound
    if cmp == "<=":
        return hi <= bound
    if cmp == "<":
        return hi < bound
    if cmp == ">=":
        return lo >= bound
    return lo > bound


def minimal_default_independence_check(proc: InferenceProcedure, kb: ConstraintExpr,
                                       s: Event, t: Event, space: Space | None = None,
                                       seed: int = 0, samples: int = 200) -> Verdict:
    """Does the procedure conclude Pr(S x T) = Pr(S) Pr(T) for a fresh T?

    The kb about S's space is lifted to the product with T's space and
    the product atom is evaluated against the selected set there.
    """
    from .embeddings import from_surjection

    x_space = s.space
    y_space = t.space
    xy = space if space is not None else product_space([x_space, y_space])
    comp = component_map(xy, xy.factors[0])
    lift = from_surjection(x_space, xy, comp)
    kb_lifted = translate(lift, kb) if space_of(kb) is not None else kb
    cyl_s = cylinder(xy, 0, s)
    cyl_t = cylinder(xy, 1, t)
    theta = ProductAtom(cyl_s & cyl_t, (cyl_s, cyl_t))
    if proc.kind == PRIOR_BASED and proc.prior.kind == PRODUCT_FAMILY:
        return product_prior_infer([kb, TrueExpr()], theta, xy, seed=seed, samples=samples)
    return infers(proc, kb_lifted, theta, xy, seed=seed, samples=samples)


# KLM-style property report ------------------------------------------------


@dataclass(frozen=True)
class KlmViolation:
    prop: str
    kb: ConstraintExpr
    theta: ConstraintExpr | None = None
    psi: ConstraintExpr | None = None


@dataclass(frozen=True)
class KlmReport:
    procedure: str
    checked: int
    violations: tuple[KlmViolation, ...]

    @property
    def all_pass(self) -> bool:
        return not self.violations

    def by_property(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for v in self.violations:
            out[v.prop] = out.get(v.prop, 0) + 1
        return out


def klm_properties_check(proc: InferenceProcedure, kbs: Sequence[ConstraintExpr],
                         thetas: Sequence[ConstraintExpr], space: Space | None = None,
                         lle_pairs: Sequence[tuple[ConstraintExpr, ConstraintExpr]] = (),
                         max_and_pairs: int = 3) -> KlmReport:
    """Check Reflexivity, Left Logical Equivalence, Right Weakening, And,
    and Consistency over the given corpus; any violation is reported with
    the witnessing constraints."""
    violations: list[KlmViolation] = []
    checked = 0
    if space is None:
        for expr in itertools.chain(kbs, thetas):
            space = space_of(expr)
            if space is not None:
                break
    rw_pairs = [(a, b) for a, b in itertools.permutations(thetas, 2) if entails(a, b, space)]
    and_pairs = list(itertools.combinations(thetas, 2))[:max_and_pairs]

    for kb in kbs:
        sp = _resolve_space(kb, None, space)
        verdicts = {th: infers(proc, kb, th, sp).holds for th in thetas}
        checked += 1
        if not infers(proc, kb, kb, sp).holds:
            violations.append(KlmViolation("Reflexivity", kb))
        if satisfiable(kb, sp).feasible and infers(proc, kb, FalseExpr(), sp).holds:
            violations.append(KlmViolation("Consistency", kb))
        for a, b in rw_pairs:
            if verdicts[a] and not verdicts[b]:
                violations.append(KlmViolation("Right Weakening", kb, a, b))
        for a, b in and_pairs:
            if verdicts[a] and verdicts[b] and not infers(proc, kb, and_(a, b), sp).holds:
                violations.append(KlmViolation("And", kb, a, b))

    for kb, kb2 in lle_pairs:
        sp = _resolve_space(kb, kb2, space)
        if not equivalent_kb(kb, kb2, sp):
            continue
        for th in thetas:
            if infers(proc, kb, th, sp).holds != infers(proc, kb2, th, sp).holds:
                violations.append(KlmViolation("Left Logical Equivalence", kb, th, kb2))
    return KlmReport(proc.name, checked, tuple(violations))


def equivalent_kb(a: ConstraintExpr, b: ConstraintExpr, space: Space) -> bool:
    from .entail import equivalent

    return equivalent(a, b, space)
