from fractions import Fraction

import pytest

from credal.constraints import (
    And,
    LinearAtom,
    Not,
    parse_constraint,
    satisfies,
)
from credal.entail import (
    conservative_check,
    entails,
    equivalent,
    is_interesting,
    linear_range,
    objective_normal_form,
    sample_measures,
    satisfiable,
)
from credal.errors import CredalError
from credal.measures import Measure
from credal.spaces import (
    cylinder,
    enumerate_worlds,
    event_from_indices,
    event_of,
    product_space,
    whole_event,
)
from tests.conftest import simplex_grid

F = Fraction


class TestSatisfiable:
    def test_contradictory_bounds(self, fly_bird_space):
        rep = satisfiable(parse_constraint("P(fly) >= 1/4 & P(fly) < 1/8", fly_bird_space))
        assert rep.status == "infeasible"

    def test_strict_interval_with_witness(self):
        two = enumerate_worlds(["p"])
        rep = satisfiable(parse_constraint("0 < P(p) < 1", two))
        assert rep.feasible
        assert satisfies(rep.witness, parse_constraint("0 < P(p) < 1", two))

    def test_witnesses_satisfy_exactly(self, fly_bird_space):
        for text in ("P(fly) > 1/3 & P(bird) < 2/3",
                     "!(P(fly & bird) >= 1/2) & P(fly) >= 1/4",
                     "P(fly | bird) = 1/2 | P(bird) > 7/8"):
            expr = parse_constraint(text, fly_bird_space)
            rep = satisfiable(expr)
            assert rep.feasible
            assert rep.witness.backend == "rational"
            assert satisfies(rep.witness, expr)

    def test_true_false_without_space(self):
        from credal.constraints import TRUE, FALSE

        assert satisfiable(TRUE).feasible
        assert not satisfiable(FALSE).feasible


class TestEntails:
    def test_threshold_weakening(self, fly_bird_space):
        kb = parse_constraint("P(fly) >= 1/2", fly_bird_space)
        assert entails(kb, parse_constraint("P(fly) >= 1/3", fly_bird_space))
        assert not entails(parse_constraint("P(fly) >= 1/3", fly_bird_space), kb)

    def test_frechet_bound(self, fly_bird_space):
        kb = parse_constraint("P(fly) >= 1/2 & P(bird) >= 9/10", fly_bird_space)
        theta = parse_constraint("P(fly & bird) >= 2/5", fly_bird_space)
        # oracle: dense grid search for the minimum of P(fly & bird)
        lo = min(mu.prob(event_of(fly_bird_space, "fly & bird"))
                 for mu in simplex_grid(fly_bird_space, 20)
                 if satisfies(mu, kb))
        assert lo == F(2, 5)
        assert entails(kb, theta)
        assert not entails(kb, parse_constraint("P(fly & bird) > 2/5", fly_bird_space))

    def test_conditional_irrelevance_not_entailed(self):
        sp = enumerate_worlds(["fly", "bird", "red"])
        kb = parse_constraint("P(fly | bird) >= 9/10", sp)
        theta = parse_constraint("P(fly | bird & red) >= 9/10", sp)
        assert not entails(kb, theta)

    def test_grid_agreement_small_spaces(self):
        from credal.spaces import Space, Vocabulary, World

        space = Space(Vocabulary(("g0", "g1")), (World(0, 2), World(1, 2), World(2, 2)))
        exprs = [
            parse_constraint("P(g0) >= 1/2", space),
            parse_constraint("P(g0) < 1/4 | P(g1) > 1/2", space),
            parse_constraint("P(g0 & g1) = 0", space),
            parse_constraint("!(P(g1) <= 1/4)", space),
        ]
        grid = list(simplex_grid(space, 20))
        for kb in exprs:
            for theta in exprs:
                claimed = entails(kb, theta, space)
                witness = next((mu for mu in grid
                                if satisfies(mu, kb) and not satisfies(mu, theta)), None)
                if witness is not None:
                    assert not claimed
                if claimed:
                    assert witness is None


class TestEquivalent:
    def test_objective_conjunction_collapses(self, fly_bird_space):
        a = parse_constraint("P(fly) = 1 & P(bird) = 1", fly_bird_space)
        b = parse_constraint("P(fly & bird) = 1", fly_bird_space)
        assert equivalent(a, b)

    def test_double_negation(self, fly_bird_space):
        a = parse_constraint("P(fly) >= 1/4", fly_bird_space)
        assert equivalent(a, parse_constraint("!(P(fly) < 1/4)", fly_bird_space))

    def test_different_thresholds_differ(self, fly_bird_space):
        a = parse_constraint("P(fly) >= 1/4", fly_bird_space)
        b = parse_constraint("P(fly) >= 1/3", fly_bird_space)
        assert not equivalent(a, b)


class TestIsInteresting:
    def test_direct_form(self, fly_bird_space):
        s = event_of(fly_bird_space, "fly")
        kb = parse_constraint("P(fly) >= 1/4", fly_bird_space)
        assert is_interesting(kb) == s

    def test_negated_form(self, fly_bird_space):
        kb = parse_constraint("!(P(fly) < 1/4)", fly_bird_space)
        found = is_interesting(kb)
        assert found == event_of(fly_bird_space, "fly")
        # oracle: full equivalence with the quarter constraint
        assert equivalent(kb, LinearAtom(((F(1), found),), ">=", F(1, 4)))

    def test_other_threshold_is_not(self, fly_bird_space):
        assert is_interesting(parse_constraint("P(fly) >= 1/2", fly_bird_space)) is None

    def test_true_excluded(self, fly_bird_space):
        assert is_interesting(parse_constraint("true", fly_bird_space)) is None

    def test_scan_limit(self):
        sp = enumerate_worlds(["a", "b", "c", "d", "e"])
        with pytest.raises(CredalError, match="scan limit"):
            is_interesting(parse_constraint("P(a) >= 1/4", sp), scan_limit=16)


class TestObjectiveNormalForm:
    def test_conjunction_intersects(self, fly_bird_space):
        kb = parse_constraint("P(fly) = 1 & P(bird) = 1", fly_bird_space)
        assert objective_normal_form(kb) == event_of(fly_bird_space, "fly & bird")

    def test_threshold_is_not_objective(self, fly_bird_space):
        assert objective_normal_form(parse_constraint("P(fly) >= 1/2", fly_bird_space)) is None

    def test_true_is_whole_space(self, fly_bird_space):
        kb = parse_constraint("true", fly_bird_space)
        assert objective_normal_form(kb, fly_bird_space) == whole_event(fly_bird_space)

    def test_semantic_objective_found(self, fly_bird_space):
        # equivalent to P(fly & bird) = 1 without using the syntactic form
        kb = parse_constraint("P(fly) >= 1 & P(bird) >= 1", fly_bird_space)
        assert objective_normal_form(kb) == event_of(fly_bird_space, "fly & bird")


class TestLinearRangeAndSampling:
    def test_range_over_band(self, fly_bird_space):
        kb = parse_constraint("P(fly) >= 1/4 & P(fly) <= 2/3", fly_bird_space)
        ev = event_of(fly_bird_space, "fly")
        assert linear_range(kb, ((F(1), ev),), fly_bird_space) == (F(1, 4), F(2, 3))

    def test_samples_satisfy(self, fly_bird_space):
        kb = parse_constraint("P(fly) > 1/4 & P(bird) < 2/3", fly_bird_space)
        for mu in sample_measures(kb, fly_bird_space, 12, seed=4):
            assert satisfies(mu, kb)


class TestConservativeCheck:
    def _setup(self):
        x = enumerate_worlds(["s"])
        y = enumerate_worlds(["t"])
        xy = product_space([x, y])
        s = event_of(x, "s")
        t = event_from_indices(y, [1])
        iff = ((cylinder(xy, 0, s) & cylinder(xy, 1, t))
               | (~cylinder(xy, 0, s) & ~cylinder(xy, 1, t)))
        return x, y, xy, s, t, iff

    def test_crossproduct_iff_is_conservative(self, fly_bird_space):
        x, y, xy, s, t, iff = self._setup()
        psi = LinearAtom(((F(1), iff),), "=", F(1))
        from credal.constraints import TrueExpr

        rep = conservative_check(TrueExpr(), psi, xy)
        assert rep.status == "conservative_verified"
        # oracle: the coupling construction extends any marginal explicitly
        from credal.measures import couple

        nu = Measure.rational(x, [F(3, 7), F(4, 7)])
        tau = Measure.rational(y, [F(3, 7), F(4, 7)])
        joint = couple(nu, s, tau, t)
        assert satisfies(joint, psi)

    def test_marginal_restriction_detected(self):
        x, y, xy, s, t, iff = self._setup()
        psi = And((LinearAtom(((F(1), cylinder(xy, 1, t)),), "=", F(1)),
                   LinearAtom(((F(1), cylinder(xy, 0, s)),), "=", F(0))))
        kb = parse_constraint("P(s) > 0", x)
        rep = conservative_check(kb, psi, xy)
        assert rep.status == "not_conservative"
        assert satisfies(rep.witness, kb)

    def test_true_psi_is_conservative(self, fly_bird_space):
        x, y, xy, *_ = self._setup()
        kb = parse_constraint("P(s) >= 1/4", x)
        from credal.constraints import TrueExpr

        rep = conservative_check(kb, TrueExpr(), xy)
        assert rep.status == "conservative_verified"


def test_conservative_check_inconclusive_beyond_vertex_limit():
    from credal.constraints import TrueExpr
    from credal.harness import _plain_space
    from credal.spaces import product_space as _prod

    big = _plain_space("big", 9)  # beyond the vertex-enumeration limit
    other = enumerate_worlds(["o"])
    xy = _prod([big, other])
    rep = conservative_check(TrueExpr(), TrueExpr(), xy, n_samples=2)
    assert rep.status == "inconclusive"


class TestRandomizedEngineSoundness:
    """Randomized cross-validation of the exact engine against a grid
    oracle, using the same template grammar the falsifier draws from."""

    def test_satisfiable_and_entails_agree_with_grid(self):
        import random

        from credal.harness import _plain_space, _random_kb, _random_theta
        from tests.conftest import simplex_grid

        space = _plain_space("e", 3)
        grid = list(simplex_grid(space, 12))
        rng = random.Random(2024)
        checked = 0
        for _ in range(150):
            kb = _random_kb(space, rng)
            theta = _random_theta(space, rng)
            rep = satisfiable(kb, space)
            grid_sat = any(satisfies(mu, kb) for mu in grid)
            if grid_sat:
                assert rep.feasible  # a grid witness is a real witness
            if rep.feasible:
                assert satisfies(rep.witness, kb)  # exact soundness
            claimed = entails(kb, theta, space)
            counter = next((mu for mu in grid
                            if satisfies(mu, kb) and not satisfies(mu, theta)), None)
            if counter is not None:
                assert not claimed
            checked += 1
        assert checked == 150

    def test_equivalence_is_reflexive_and_symmetric(self):
        import random

        from credal.harness import _plain_space, _random_kb

        space = _plain_space("q", 3)
        rng = random.Random(7)
        for _ in range(40):
            a = _random_kb(space, rng)
            b = _random_kb(space, rng)
            assert equivalent(a, a, space)
            assert equivalent(a, b, space) == equivalent(b, a, space)
