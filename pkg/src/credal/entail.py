"""Exact decision procedures over constraint denotations.

Satisfiability, entailment and equivalence are decided per DNF disjunct
with a rational LP; strict inequalities are handled soundly by relaxing
each strict atom with one shared slack variable t and asking whether the
optimum of t is positive.  Witnesses are exact rational measures.
"""

from __future__ import annotations

import random as _random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from . import simplex
from .constraints import (
    DEFAULT_MAX_DISJUNCTS,
    And,
    ConstraintExpr,
    DnfSystem,
    FalseExpr,
    LinearAtom,
    TrueExpr,
    and_,
    not_,
    satisfies,
    space_of,
    to_dnf,
)
from .errors import CredalError
from .measures import Measure
from .spaces import Event, Space, component_map, event_from_indices, whole_event

DEFAULT_INTERESTING_SCAN_LIMIT = 16

_ZERO = Fraction(0)
_ONE = Fraction(1)


@dataclass(frozen=True)
class FeasibilityReport:
    status: str  # "feasible" | "infeasible"
    witness: Measure | None = None
    disjunct: int | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _system_rows(system: DnfSystem, space: Space, extra_pins: list[tuple[list[Fraction], str, Fraction]] | None = None):
    """LP rows for one disjunct: simplex, atoms, shared strict slack t."""
    n = len(space.worlds)
    rows: list[tuple[list[Fraction], str, Fraction]] = []
    rows.append(([_ONE] * n + [_ZERO], "=", _ONE))
    for atom in system.equalities:
        rows.append((atom.coefficients(space) + [_ZERO], "=", atom.bound))
    for atom in system.nonstrict:
        rows.append((atom.coefficients(space) + [_ZERO], atom.cmp, atom.bound))
    for atom in system.strict:
        coeffs = atom.coefficients(space)
        if atom.cmp == ">":
            rows.append((coeffs + [-_ONE], ">=", atom.bound))
        else:
            rows.append((coeffs + [_ONE], "<=", atom.bound))
    rows.append(([_ZERO] * n + [_ONE], "<=", _ONE))
    if extra_pins:
        rows.extend(extra_pins)
    return rows


def _system_feasible(system: DnfSystem, space: Space,
                     extra_pins=None) -> Measure | None:
    n = len(space.worlds)
    objective = [_ZERO] * n + [_ONE]
    status, x, value = simplex.solve_lp(n + 1, _system_rows(system, space, extra_pins),
                                        objective, maximize=True)
    if status != simplex.OPTIMAL or value <= 0:
        return None
    return Measure.rational(space, x[:n])


def satisfiable(expr: ConstraintExpr, space: Space | None = None,
                max_disjuncts: int = DEFAULT_MAX_DISJUNCTS) -> FeasibilityReport:
    """Decide whether some measure satisfies the constraint.

    The witness, when present, satisfies the constraint exactly,
    including all strict atoms.
    """
    if space is None:
        space = space_of(expr)
    if space is None:
        if isinstance(expr, TrueExpr):
            return FeasibilityReport("feasible")
        if isinstance(expr, FalseExpr):
            return FeasibilityReport("infeasible")
        dnf = to_dnf(expr, max_disjuncts)
        return (FeasibilityReport("feasible") if dnf.systems
                else FeasibilityReport("infeasible"))
    for k, system in enumerate(to_dnf(expr, max_disjuncts).systems):
        witness = _system_feasible(system, space)
        if witness is not None:
            assert satisfies(witness, expr), "LP witness failed exact satisfaction"
            return FeasibilityReport("feasible", witness, k)
    return FeasibilityReport("infeasible")


def entails(kb: ConstraintExpr, theta: ConstraintExpr, space: Space | None = None) -> bool:
    """KB entails theta iff no measure satisfies KB and violates theta."""
    if space is None:
        space = space_of(kb) or space_of(theta)
    return not satisfiable(and_(kb, not_(theta)), space).feasible


def equivalent(a: ConstraintExpr, b: ConstraintExpr, space: Space | None = None) -> bool:
    if space is None:
        space = space_of(a) or space_of(b)
    return entails(a, b, space) and entails(b, a, space)


def quarter_constraint(s: Event) -> LinearAtom:
    return LinearAtom(((_ONE, s),), ">=", Fraction(1, 4))


def _probe_measures(space: Space) -> list[Measure]:
    n = len(space.worlds)
    probes = [Measure.uniform(space, backend="rational")]
    for i in range(n):
        probes.append(Measure.point_mass(space, i))
    half = Fraction(1, 2)
    quarter = Fraction(1, 4)
    for i, j in combinations(range(n), 2):
        w = [_ZERO] * n
        w[i], w[j] = half, half
        probes.append(Measure.rational(space, w))
        w = [_ZERO] * n
        w[i], w[j] = quarter, 1 - quarter
        probes.append(Measure.rational(space, w))
    return probes


def is_interesting(kb: ConstraintExpr, space: Space | None = None,
                   scan_limit: int = DEFAULT_INTERESTING_SCAN_LIMIT) -> Event | None:
    """The event S with [[kb]] = [[Pr(S) >= 1/4]], if one exists.

    Candidates are short-circuited through point-mass witnesses: a point
    mass on x satisfies Pr(S) >= 1/4 exactly when x is in S, so the only
    possible S is the set of worlds whose point mass satisfies kb.  The
    empty and full candidates are excluded (they denote the empty set
    and the whole simplex).
    """
    if space is None:
        space = space_of(kb)
    if space is None:
        return None
    if len(space.worlds) > scan_limit:
        raise CredalError("space exceeds the interesting-scan limit")
    candidate_ids = [i for i in range(len(space.worlds))
                     if satisfies(Measure.point_mass(space, i), kb)]
    if not candidate_ids or len(candidate_ids) == len(space.worlds):
        return None
    s = event_from_indices(space, candidate_ids)
    atom = quarter_constraint(s)
    for probe in _probe_measures(space):
        if satisfies(probe, kb) != satisfies(probe, atom):
            return None
    return s if equivalent(kb, atom, space) else None


def objective_normal_form(kb: ConstraintExpr, space: Space | None = None) -> Event | None:
    """The event T with [[kb]] = [[Pr(T) = 1]], if one exists.

    T is the union of supports of satisfying measures (found by one
    small LP per world), verified by entailment in both directions.
    """
    if space is None:
        space = space_of(kb)
    if space is None:
        if isinstance(kb, TrueExpr):
            raise ValueError("pass the space to normalize a pure true/false constraint")
        return None
    if isinstance(kb, TrueExpr):
        return whole_event(space)
    if isinstance(kb, FalseExpr):
        return event_from_indices(space, [])

    direct = _syntactic_objective(kb)
    if direct is not None:
        return direct

    support = []
    for i in range(len(space.worlds)):
        positive = LinearAtom(((_ONE, event_from_indices(space, [i])),), ">", _ZERO)
        if satisfiable(and_(kb, positive), space).feasible:
            support.append(i)
    t = event_from_indices(space, support)
    target = LinearAtom(((_ONE, t),), "=", _ONE)
    if entails(target, kb, space) and entails(kb, target, space):
        return t
    return None


def _syntactic_objective(kb: ConstraintExpr) -> Event | None:
    """Fast path: conjunctions of Pr(T_i) = 1 collapse to Pr(of the
    intersection) = 1 without any LP calls."""
    atoms = kb.items if isinstance(kb, And) else (kb,)
    t = None
    for atom in atoms:
        if not (isinstance(atom, LinearAtom) and atom.cmp == "=" and atom.bound == 1
                and len(atom.terms) == 1 and atom.terms[0][0] == 1):
            return None
        ev = atom.terms[0][1]
        t = ev if t is None else (t & ev)
    return t


# Linear ranges and sampling over denotations ---------------------------


def linear_range(expr: ConstraintExpr, terms: tuple[tuple[Fraction, Event], ...],
                 space: Space) -> tuple[Fraction, Fraction] | None:
    """[min, max] of a linear functional over the closure of [[expr]].

    None when the constraint is unsatisfiable.  Computed per DNF cell;
    strict atoms are relaxed, so the bounds are those of the closure.
    """
    probe = LinearAtom(terms, "=", _ZERO)  # carrier for coefficients
    lo = hi = None
    n = len(space.worlds)
    objective = probe.coefficients(space) + [_ZERO]
    for system in to_dnf(expr).systems:
        if _system_feasible(system, space) is None:
            continue
        closed = DnfSystem(system.equalities,
                           system.nonstrict + tuple(
                               LinearAtom(a.terms, "<=" if a.cmp == "<" else ">=", a.bound)
                               for a in system.strict),
                           ())
        rows = _system_rows(closed, space)
        for maximize in (False, True):
            status, x, value = simplex.solve_lp(n + 1, rows, objective, maximize=maximize)
            if status != simplex.OPTIMAL:
                continue
            if maximize:
                hi = value if hi is None else max(hi, value)
            else:
                lo = value if lo is None else min(lo, value)
    if lo is None or hi is None:
        return None
    return lo, hi


def sample_measures(expr: ConstraintExpr, space: Space, n: int, seed: int) -> list[Measure]:
    """Seeded exact samples from [[expr]]: randomly tilted LP vertices of
    each cell's closure, mixed toward a strictly feasible witness so
    every returned measure satisfies the constraint exactly."""
    rng = _random.Random(seed)
    out: list[Measure] = []
    nw = len(space.worlds)
    systems = to_dnf(expr).systems
    witnesses = [(sys_, _system_feasible(sys_, space)) for sys_ in systems]
    witnesses = [(s, w) for s, w in witnesses if w is not None]
    if not witnesses:
        return out
    attempts = 0
    while len(out) < n and attempts < 20 * n:
        attempts += 1
        system, witness = witnesses[rng.randrange(len(witnesses))]
        objective = [Fraction(rng.randrange(-8, 9)) for _ in range(nw)] + [_ZERO]
        rows = _system_rows(system, space)
        status, x, _ = simplex.solve_lp(nw + 1, rows, objective, maximize=bool(rng.getrandbits(1)))
        if status != simplex.OPTIMAL:
            continue
        vertex = x[:nw]
        lam = Fraction(rng.randrange(1, 8), 8)
        mixed = [lam * a + (1 - lam) * b for a, b in zip(witness.weights, vertex)]
        mu = Measure.rational(space, mixed)
        if satisfies(mu, expr):
            out.append(mu)
    return out


# Conservativeness -------------------------------------------------------


@dataclass(frozen=True)
class ConservativeReport:
    status: str  # "conservative_verified" | "not_conservative" | "inconclusive"
    witness: Measure | None = None
    tested: int = 0
    note: str = ""


def _cell_vertices(system: DnfSystem, space: Space) -> list[list[Fraction]]:
    """Vertices of the closure of one cell, by exhaustive basis search."""
    n = len(space.worlds)
    eqs: list[tuple[list[Fraction], Fraction]] = [([_ONE] * n, _ONE)]
    for a in system.equalities:
        eqs.append((a.coefficients(space), a.bound))
    pool: list[tuple[list[Fraction], Fraction]] = []
    for i in range(n):
        row = [_ZERO] * n
        row[i] = _ONE
        pool.append((row, _ZERO))
    for a in system.nonstrict + system.strict:
        pool.append((a.coefficients(space), a.bound))

    def feasible(x: list[Fraction]) -> bool:
        if any(v < 0 for v in x):
            return False
        for a in system.equalities:
            if _dot(a.coefficients(space), x) != a.bound:
                return False
        for a in system.nonstrict + system.strict:
            v = _dot(a.coefficients(space), x)
            if a.cmp in ("<=", "<") and v > a.bound:
                return False
            if a.cmp in (">=", ">") and v < a.bound:
                return False
        return True

    need = n - len(eqs)
    vertices: list[list[Fraction]] = []
    seen: set[tuple] = set()
    if need < 0:
        need = 0
    for chosen in combinations(range(len(pool)), need):
        rows = [r for r, _ in eqs] + [pool[i][0] for i in chosen]
        rhs = [b for _, b in eqs] + [pool[i][1] for i in chosen]
        x = _solve_unique(rows, rhs, n)
        if x is None or not feasible(x):
            continue
        key = tuple(x)
        if key not in seen:
            seen.add(key)
            vertices.append(x)
    return vertices


def _dot(a, b):
    return sum((x * y for x, y in zip(a, b)), _ZERO)


def _solve_unique(rows: list[list[Fraction]], rhs: list[Fraction], n: int) -> list[Fraction] | None:
    m = len(rows)
    aug = [list(rows[i]) + [rhs[i]] for i in range(m)]
    piv_cols = []
    r = 0
    for c in range(n):
        pivot = next((i for i in range(r, m) if aug[i][c] != 0), None)
        if pivot is None:
            continue
        aug[r], aug[pivot] = aug[pivot], aug[r]
        pv = aug[r][c]
        aug[r] = [v / pv for v in aug[r]]
        for i in range(m):
            if i != r and aug[i][c] != 0:
                f = aug[i][c]
                aug[i] = [v - f * w for v, w in zip(aug[i], aug[r])]
        piv_cols.append(c)
        r += 1
        if r == m:
            break
    for i in range(r, m):
        if aug[i][n] != 0:
            return None  # inconsistent
    if len(piv_cols) < n:
        return None  # underdetermined
    x = [_ZERO] * n
    for i, c in enumerate(piv_cols):
        x[c] = aug[i][n]
    return x


def conservative_check(kb: ConstraintExpr, psi: ConstraintExpr, xy_space: Space,
                       x_factor: int = 0, n_samples: int = 8, seed: int = 0,
                       vertex_cell_cap: int = 64) -> ConservativeReport:
    """Check that psi adds no information about the X factor over kb.

    The containment proj_X([[kb & psi]]) within [[kb]] holds by
    construction; the reverse direction is tested by asking, for each
    vertex of [[kb]] (plus seeded samples), whether some extension with
    that X-marginal satisfies kb & psi.  A failed point is an exact
    counterexample; full passes are vertex-complete for polytopal [[kb]]
    and reported as inconclusive when vertex enumeration is skipped.
    """
    from .embeddings import from_surjection  # cycle-free at call time

    if xy_space.factors is None:
        raise ValueError("xy_space must be a declared product")
    x_space = xy_space.factors[x_factor]
    comp = component_map(xy_space, x_space)
    lift = from_surjection(x_space, xy_space, comp)

    from .constraints import translate

    kb_lifted = translate(lift, kb) if space_of(kb) is not None else kb
    combined = and_(kb_lifted, psi)

    if not satisfiable(kb, x_space).feasible:
        return ConservativeReport("conservative_verified", note="kb unsatisfiable")

    systems = to_dnf(kb).systems
    complete = len(systems) <= vertex_cell_cap and len(x_space.worlds) <= 8
    points: list[Measure] = []
    if complete:
        for system in systems:
            interior = _system_feasible(system, x_space)
            if interior is None:
                continue
            for vertex in _cell_vertices(system, x_space):
                mu = Measure.rational(x_space, vertex)
                if not satisfies(mu, kb):
                    lam = Fraction(1, 8)
                    mixed = [lam * a + (1 - lam) * b
                             for a, b in zip(interior.weights, vertex)]
                    mu = Measure.rational(x_space, mixed)
                    if not satisfies(mu, kb):
                        continue
                points.append(mu)
    points.extend(sample_measures(kb, x_space, n_samples, seed))

    tested = 0
    for nu in points:
        tested += 1
        pins = []
        n_xy = len(xy_space.worlds)
        for xi in range(len(x_space.worlds)):
            row = [_ZERO] * (n_xy + 1)
            for j in range(n_xy):
                if comp[j] == xi:
                    row[j] = _ONE
            pins.append((row, "=", nu.weights[xi]))
        extended = any(
            _system_feasible(system, xy_space, extra_pins=pins) is not None
            for system in to_dnf(combined).systems
        )
        if not extended:
            return ConservativeReport("not_conservative", witness=nu, tested=tested)
    status = "conservative_verified" if complete else "inconclusive"
    return ConservativeReport(status, tested=tested)
