"""Exact two-phase simplex over rationals with Bland's rule.

Small and dense on purpose: the workbench's decision problems involve a
handful of constraints over at most a few hundred worlds, and strict
inequalities plus set-equality questions cannot tolerate floating-point
rounding.  Bland's pivoting rule rules out cycling.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_ZERO = Fraction(0)
_ONE = Fraction(1)


def solve_lp(
    num_vars: int,
    constraints: Sequence[tuple[Sequence[Fraction], str, Fraction]],
    objective: Sequence[Fraction],
    maximize: bool = False,
) -> tuple[str, list[Fraction] | None, Fraction | None]:
    """Solve min/max objective . x subject to the constraints and x >= 0.

    Each constraint is (coefficients, rel, rhs) with rel in {'<=', '>=', '='}.
    Returns (status, x, value) with x covering the original variables.
    """
    rows: list[list[Fraction]] = []
    rels: list[str] = []
    rhs: list[Fraction] = []
    for coeffs, rel, b in constraints:
        row = [Fraction(c) for c in coeffs] + [_ZERO] * (num_vars - len(coeffs))
        b = Fraction(b)
        if b < 0:
            row = [-c for c in row]
            b = -b
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rows.append(row)
        rels.append(rel)
        rhs.append(b)

    m = len(rows)
    n_slack = sum(1 for r in rels if r in ("<=", ">="))
    n_art = sum(1 for r in rels if r in (">=", "="))
    total = num_vars + n_slack + n_art
    art_start = num_vars + n_slack

    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    slack_i = num_vars
    art_i = art_start
    art_cols: list[int] = []
    for i in range(m):
        row = rows[i] + [_ZERO] * (n_slack + n_art) + [rhs[i]]
        if rels[i] == "<=":
            row[slack_i] = _ONE
            basis.append(slack_i)
            slack_i += 1
        elif rels[i] == ">=":
            row[slack_i] = -_ONE
            slack_i += 1
            row[art_i] = _ONE
            basis.append(art_i)
            art_cols.append(art_i)
            art_i += 1
        else:
            row[art_i] = _ONE
            basis.append(art_i)
            art_cols.append(art_i)
            art_i += 1
        tableau.append(row)

    # Phase 1: minimize the sum of artificials.
    if n_art:
        cost = [_ZERO] * (total + 1)
        for i in range(m):
            if basis[i] >= art_start:
                row = tableau[i]
                for j in range(total + 1):
                    cost[j] -= row[j]
        for j in range(art_start, total):
            cost[j] += _ONE
        status = _iterate(tableau, cost, basis, total)
        if status == UNBOUNDED or -cost[total] > 0:
            return INFEASIBLE, None, None
        _evict_artificials(tableau, basis, art_start, total)

    # Phase 2 on the real objective (minimize; negate for maximize).
    sign = -1 if maximize else 1
    costs = [sign * Fraction(c) for c in objective] + [_ZERO] * (total - num_vars)
    cost = [_ZERO] * (total + 1)
    for j in range(total):
        cost[j] = costs[j]
    for i, b in enumerate(basis):
        cb = costs[b]
        if cb != 0:
            row = tableau[i]
            for j in range(total + 1):
                cost[j] -= cb * row[j]
    status = _iterate(tableau, cost, basis, total, forbid=set(art_cols))
    if status == UNBOUNDED:
        return UNBOUNDED, None, None

    x = [_ZERO] * num_vars
    for i, b in enumerate(basis):
        if b < num_vars:
            x[b] = tableau[i][total]
    value = sign * -cost[total]
    return OPTIMAL, x, value


def _iterate(tableau, cost, basis, total, forbid=frozenset()):
    m = len(tableau)
    while True:
        entering = -1
        for j in range(total):
            if j not in forbid and cost[j] < 0:
                entering = j
                break
        if entering < 0:
            return OPTIMAL
        leaving = -1
        best = None
        for i in range(m):
            a = tableau[i][entering]
            if a > 0:
                ratio = tableau[i][total] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    best = ratio
                    leaving = i
        if leaving < 0:
            return UNBOUNDED
        _pivot(tableau, cost, basis, leaving, entering, total)


def _pivot(tableau, cost, basis, leaving, entering, total):
    row = tableau[leaving]
    p = row[entering]
    if p != 1:
        inv = 1 / p
        for j in range(total + 1):
            if row[j]:
                row[j] *= inv
    for other in tableau:
        if other is row:
            continue
        f = other[entering]
        if f:
            for j in range(total + 1):
                if row[j]:
                    other[j] -= f * row[j]
    f = cost[entering]
    if f:
        for j in range(total + 1):
            if row[j]:
                cost[j] -= f * row[j]
    basis[leaving] = entering


def _evict_artificials(tableau, basis, art_start, total):
    """Pivot basic artificials (at value 0) onto real columns; drop rows
    that turn out to be redundant."""
    for i in range(len(tableau) - 1, -1, -1):
        if basis[i] < art_start:
            continue
        row = tableau[i]
        entering = -1
        for j in range(art_start):
            if row[j] != 0:
                entering = j
                break
        if entering >= 0:
            dummy = [_ZERO] * (total + 1)
            _pivot(tableau, dummy, basis, i, entering, total)
        else:
            del tableau[i]
            del basis[i]
