import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_system, random_tree
from infratree import attacktree as at
from infratree import quant
from infratree import statespace as ss


def sig(pre, post):
    return at.AttackSignature(frozenset(pre), frozenset(post))


S_AB = sig({0}, {1})
S_BC = sig({1}, {2})
TWO_STEP = at.AndTree((at.Base(S_AB), at.Base(S_BC)), sig({0}, {2}))
OR_TREE = at.OrTree((at.Base(S_AB), at.Base(S_BC)), sig({0, 1}, {1, 2}))


def attr(cost=None, prob=None, **kw):
    return quant.Attribution(cost=cost or {}, prob=prob or {}, **kw)


class TestEvaluate:
    def test_and_costs_sum(self):
        a = attr(cost={S_AB: Fraction(2), S_BC: Fraction(3)},
                 default_prob=Fraction(1))
        cost, _ = quant.evaluate(TWO_STEP, a)
        assert cost == Fraction(5)

    def test_and_probs_multiply(self):
        a = attr(prob={S_AB: Fraction(1, 2), S_BC: Fraction(1, 2)},
                 default_cost=Fraction(0))
        _, prob = quant.evaluate(TWO_STEP, a)
        assert prob == Fraction(1, 4)

    def test_or_costs_min(self):
        a = attr(cost={S_AB: Fraction(7), S_BC: Fraction(4)},
                 default_prob=Fraction(1))
        cost, _ = quant.evaluate(OR_TREE, a)
        assert cost == Fraction(4)

    def test_or_prob_max_by_default(self):
        a = attr(prob={S_AB: Fraction(1, 4), S_BC: Fraction(1, 2)},
                 default_cost=Fraction(0))
        _, prob = quant.evaluate(OR_TREE, a)
        assert prob == Fraction(1, 2)

    def test_or_prob_noisy_or_selectable(self):
        a = attr(prob={S_AB: Fraction(1, 2), S_BC: Fraction(1, 2)},
                 default_cost=Fraction(0))
        laws = quant.AttrLaws(or_prob=quant.NOISY_OR)
        _, prob = quant.evaluate(OR_TREE, a, laws)
        assert prob == Fraction(3, 4)

    def test_empty_nodes_yield_identities(self):
        a = attr()
        assert quant.evaluate(at.AndTree((), sig({0}, {0})), a) == (
            Fraction(0), Fraction(1),
        )
        cost, prob = quant.evaluate(at.OrTree((), sig({0}, {0})), a)
        assert cost == math.inf and prob == Fraction(0)

    def test_missing_attribution_names_leaf(self):
        a = attr(cost={S_AB: Fraction(1)}, default_prob=Fraction(1))
        with pytest.raises(ValueError, match=r"no cost .* N\(\{1\},\{2\}\)"):
            quant.evaluate(TWO_STEP, a)

    def test_default_fills_gaps(self):
        a = attr(cost={S_AB: Fraction(2)}, default_cost=Fraction(10),
                 default_prob=Fraction(1))
        cost, _ = quant.evaluate(TWO_STEP, a)
        assert cost == Fraction(12)

    def test_prob_entries_validated(self):
        with pytest.raises(ValueError, match="outside"):
            attr(prob={S_AB: Fraction(3, 2)})

    @given(st.integers(0, 2**30), st.booleans())
    @settings(max_examples=60, deadline=None)
    def test_prob_stays_in_unit_interval(self, seed, noisy):
        rng = random.Random(seed)
        tree = random_tree(rng, 5)
        a = attr(
            default_cost=Fraction(1),
            default_prob=Fraction(rng.randint(0, 8), 8),
        )
        laws = quant.AttrLaws(
            or_prob=quant.NOISY_OR if noisy else quant.MAX
        )
        _, prob = quant.evaluate(tree, a, laws)
        assert 0 <= prob <= 1


def brute_cheapest(tree, a):
    scored = [
        (sum((a.cost_of(s) for s in p.steps), Fraction(0)), i, p)
        for i, p in enumerate(at.attack_paths(tree))
    ]
    if not scored:
        return None
    cost, _, path = min(scored, key=lambda t: (t[0], t[1]))
    return cost, path


class TestCheapestAttackPath:
    def test_or_of_chains(self):
        chain_a = at.AndTree(
            (at.Base(sig({0}, {1})), at.Base(sig({1}, {2}))), sig({0}, {2})
        )
        chain_b = at.AndTree(
            (at.Base(sig({0}, {3})), at.Base(sig({3}, {2}))), sig({0}, {2})
        )
        tree = at.OrTree((chain_a, chain_b), sig({0}, {2}))
        a = attr(cost={
            sig({0}, {1}): Fraction(2), sig({1}, {2}): Fraction(3),
            sig({0}, {3}): Fraction(4), sig({3}, {2}): Fraction(5),
        })
        path, cost = quant.cheapest_attack_path(tree, a)
        assert cost == Fraction(5)
        assert path.steps == (sig({0}, {1}), sig({1}, {2}))

    def test_single_base(self):
        a = attr(cost={S_AB: Fraction(2)})
        path, cost = quant.cheapest_attack_path(at.Base(S_AB), a)
        assert path.steps == (S_AB,) and cost == Fraction(2)

    def test_tie_goes_left(self):
        tree = at.OrTree((at.Base(S_AB), at.Base(S_BC)), sig({0, 1}, {1, 2}))
        a = attr(cost={S_AB: Fraction(4), S_BC: Fraction(4)})
        path, cost = quant.cheapest_attack_path(tree, a)
        assert path.steps == (S_AB,) and cost == Fraction(4)

    def test_no_scenarios_rejected(self):
        with pytest.raises(ValueError, match="no attack scenarios"):
            quant.cheapest_attack_path(at.OrTree((), sig({0}, {0})), attr())

    def test_matches_brute_force_on_random_trees(self):
        rng = random.Random(4242)
        checked = 0
        while checked < 80:
            tree = random_tree(rng, 6)
            if sum(1 for _ in _leaves(tree)) > 12:
                continue
            a = attr(default_cost=Fraction(rng.randint(0, 20), 4),
                     default_prob=Fraction(1))
            expected = brute_cheapest(tree, a)
            if expected is None:
                with pytest.raises(ValueError):
                    quant.cheapest_attack_path(tree, a)
            else:
                path, cost = quant.cheapest_attack_path(tree, a)
                assert (cost, path) == expected
                # fold total equals the evaluated or/min cost
                assert quant.evaluate(tree, a)[0] == cost
            checked += 1


def _leaves(tree):
    if isinstance(tree, at.Base):
        yield tree
    else:
        for c in tree.children:
            yield from _leaves(c)


class TestPathProbability:
    def test_product_along_path(self):
        ws = {
            quant.WeightedTransition(0, 1, Fraction(1, 2)),
            quant.WeightedTransition(1, 2, Fraction(1, 2)),
        }
        assert quant.path_probability(ws, ss.Path((0, 1, 2))) == Fraction(1, 4)

    def test_singleton_path_is_one(self):
        assert quant.path_probability(set(), ss.Path((0,))) == 1

    def test_zero_weight_absorbs(self):
        ws = {
            quant.WeightedTransition(0, 1, Fraction(0)),
            quant.WeightedTransition(1, 2, Fraction(1)),
        }
        assert quant.path_probability(ws, ss.Path((0, 1, 2))) == 0

    def test_missing_weight_names_edge(self):
        with pytest.raises(ValueError, match=r"no weight for edge \(0, 1\)"):
            quant.path_probability(set(), ss.Path((0, 1)))

    def test_weight_range_validated(self):
        with pytest.raises(ValueError, match="outside"):
            quant.WeightedTransition(0, 1, Fraction(2))

    def test_make_weights_checks_edges(self, chain3):
        ws = quant.make_weights(chain3, [(0, 1, Fraction(1, 2))])
        assert len(ws) == 1
        with pytest.raises(ValueError, match=r"no edge \(0, 2\)"):
            quant.make_weights(chain3, [(0, 2, Fraction(1, 2))])


class TestGoalDistance:
    def test_chain3(self, chain3):
        k = ss.make_kripke(chain3, frozenset({0}))
        assert quant.goal_distance(k, frozenset({2})) == {0: 2, 1: 1, 2: 0}

    def test_target_everywhere(self, chain3):
        k = ss.make_kripke(chain3, frozenset({0}))
        assert quant.goal_distance(k, frozenset({0, 1, 2})) == {
            0: 0, 1: 0, 2: 0,
        }

    def test_unreachable_target_absent(self, chain3):
        k = ss.make_kripke(chain3, frozenset({2}))
        assert quant.goal_distance(k, frozenset({0})) == {2: None}

    def test_zero_iff_member_and_steps_decrease(self):
        rng = random.Random(909)
        for _ in range(50):
            ts = random_system(rng, max_states=9)
            n = len(ts.keys)
            k = ss.make_kripke(
                ts, frozenset(x for x in range(n) if rng.random() < 0.5)
            )
            target = frozenset(x for x in range(n) if rng.random() < 0.3)
            dist = quant.goal_distance(k, target)
            for s, d in dist.items():
                if d == 0:
                    assert s in target
                elif d is not None:
                    assert s not in target
                    assert any(
                        dist.get(t) == d - 1 for t in ts.step[s]
                    )
