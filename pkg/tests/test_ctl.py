import random

import pytest

from conftest import random_subset, random_system
from ctl_oracle import PathOracle, all_formulas
from infratree import ctl
from infratree import statespace as ss


def K(ts, *init):
    return ss.make_kripke(ts, frozenset(init))


class TestSat:
    def test_chain3_ef(self, chain3):
        k = K(chain3, 0)
        assert ctl.sat(k, ctl.EF(ctl.Atom(frozenset({2})))) == {0, 1, 2}

    def test_ef_of_empty_target(self, chain3):
        k = K(chain3, 0)
        assert ctl.sat(k, ctl.EF(ctl.Atom(frozenset()))) == frozenset()

    def test_loop_ag(self, loop):
        k = K(loop, 0)
        assert ctl.sat(k, ctl.AG(ctl.Atom(frozenset({0})))) == {0}

    def test_named_atom_resolution(self):
        ts = ss.build_ts(["a", "b"], [("a", "b")], labels={"b": {"goal"}})
        k = K(ts, 0)
        assert ctl.sat(k, ctl.Atom("goal")) == {1}
        assert ctl.sat(k, ctl.EF(ctl.Atom("goal"))) == {0, 1}

    def test_unresolvable_atom_rejected(self, chain3):
        k = K(chain3, 0)
        with pytest.raises(ValueError, match="unresolvable atom 'nope'"):
            ctl.sat(k, ctl.Atom("nope"))

    def test_literal_atom_outside_system_rejected(self, chain3):
        k = K(chain3, 0)
        with pytest.raises(ValueError, match="unknown states"):
            ctl.sat(k, ctl.Atom(frozenset({9})))

    def test_restricted_to_reach(self, chain3):
        k = K(chain3, 2)  # only c reachable
        assert ctl.sat(k, ctl.Atom(frozenset({0, 2}))) == {2}

    def test_deadlock_semantics(self, chain3):
        k = K(chain3, 0)
        any_state = ctl.Atom(frozenset({0, 1, 2}))
        # c has no successors: EX fails there, AX holds vacuously
        assert 2 not in ctl.sat(k, ctl.EX(any_state))
        assert 2 in ctl.sat(k, ctl.AX(any_state))
        # and no infinite path leaves c, so EG fails at c
        assert ctl.sat(k, ctl.EG(any_state)) == frozenset()


class TestAlgebraicLaws:
    def test_not_is_complement_ef_extends_ag_shrinks(self):
        rng = random.Random(5)
        for _ in range(50):
            ts = random_system(rng, max_states=8)
            n = len(ts.keys)
            k = K(ts, *[x for x in range(n) if rng.random() < 0.4])
            f = ctl.Atom(random_subset(rng, n))
            s = ctl.sat(k, f)
            assert ctl.sat(k, ctl.Not(f)) == k.reach - s
            assert ctl.sat(k, ctl.EF(f)) >= s
            assert ctl.sat(k, ctl.AG(f)) <= s or not k.reach

    def test_fixpoint_iteration_bound(self):
        rng = random.Random(17)
        for _ in range(40):
            ts = random_system(rng, max_states=9)
            n = len(ts.keys)
            init = frozenset(x for x in range(n) if rng.random() < 0.5)
            k = ss.make_kripke(ts, init)
            target = random_subset(rng, n) & k.reach
            ef_fix, ef_steps = ctl.lfp(
                lambda x: target | ctl.pre_exists(ts, x, k.reach),
                frozenset(),
            )
            eg_fix, eg_steps = ctl.gfp(
                lambda x: target & ctl.pre_exists(ts, x, k.reach), target
            )
            assert ef_steps <= len(k.reach)
            assert eg_steps <= len(k.reach)
            # the worklist implementations agree with naive iteration
            assert ctl.sat(k, ctl.EF(ctl.Atom(target))) == ef_fix
            assert ctl.sat(k, ctl.EG(ctl.Atom(target))) == eg_fix


class TestModels:
    def test_chain3_ef_holds_with_witness(self, chain3):
        k = K(chain3, 0)
        res = ctl.models(k, ctl.EF(ctl.Atom(frozenset({2}))))
        assert res.holds
        assert res.witnesses[0].steps == (0, 1, 2)

    def test_chain3_backwards_fails(self, chain3):
        k = K(chain3, 2)
        res = ctl.models(k, ctl.EF(ctl.Atom(frozenset({0}))))
        assert not res.holds

    def test_vacuous_on_empty_init(self, chain3):
        k = K(chain3)
        res = ctl.models(k, ctl.EF(ctl.Atom(frozenset())))
        assert res.holds

    def test_holds_iff_init_in_sat_set(self, chain3):
        k = K(chain3, 0, 1)
        res = ctl.models(k, ctl.Atom(frozenset({0, 1})))
        assert res.holds and k.init <= res.sat_set

    def test_ef_holds_iff_every_initial_state_has_witness(self):
        rng = random.Random(31)
        for _ in range(50):
            ts = random_system(rng, max_states=8)
            n = len(ts.keys)
            init = frozenset(x for x in range(n) if rng.random() < 0.4)
            k = ss.make_kripke(ts, init)
            target = random_subset(rng, n)
            res = ctl.models(k, ctl.EF(ctl.Atom(target)))
            wit = ctl.ef_witness(k, target)
            assert res.holds == all(wit[i] is not None for i in init)


class TestEfWitness:
    def test_chain3(self, chain3):
        k = K(chain3, 0)
        wit = ctl.ef_witness(k, frozenset({2}))
        assert wit == {0: ss.Path((0, 1, 2))}

    def test_zero_step_when_initial_in_target(self, chain3):
        k = K(chain3, 0)
        wit = ctl.ef_witness(k, frozenset({0, 2}))
        assert wit[0].steps == (0,)

    def test_diamond_tie_break(self, diamond):
        k = K(diamond, 0)
        wit = ctl.ef_witness(k, frozenset({3}))
        assert wit[0].steps == (0, 1, 3)

    def test_witness_paths_are_genuine(self):
        rng = random.Random(43)
        for _ in range(30):
            ts = random_system(rng, max_states=8)
            n = len(ts.keys)
            k = ss.make_kripke(
                ts, frozenset(x for x in range(n) if rng.random() < 0.4)
            )
            target = random_subset(rng, n)
            for i, p in ctl.ef_witness(k, target).items():
                if p is not None:
                    assert p.steps[0] == i
                    assert p.steps[-1] in target
                    assert ss.is_path(ts, p)


class TestOracleEquivalence:
    """Spot-check against the path-semantics oracle; the exhaustive run
    lives in the acceptance suite."""

    def test_depth2_formulas_on_small_systems(self):
        rng = random.Random(59)
        for _ in range(25):
            ts = random_system(rng, max_states=5)
            n = len(ts.keys)
            init = frozenset(x for x in range(n) if rng.random() < 0.5)
            k = ss.make_kripke(ts, init)
            atoms = (
                ctl.Atom(random_subset(rng, n)),
                ctl.Atom(random_subset(rng, n)),
            )
            oracle = PathOracle(k)
            for f in all_formulas(2, atoms):
                assert ctl.sat(k, f) == oracle.sat(f), f
