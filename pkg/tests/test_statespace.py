import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_system
from infratree import statespace as ss


def brute_closure(ts: ss.TransitionSystem, init: frozenset) -> frozenset:
    """Reachability via boolean matrix closure (Floyd-Warshall style)."""
    n = len(ts.keys)
    reach = [[y in ts.step[x] for y in range(n)] for x in range(n)]
    for x in range(n):
        reach[x][x] = True
    for k in range(n):
        for i in range(n):
            for j in range(n):
                reach[i][j] = reach[i][j] or (reach[i][k] and reach[k][j])
    return frozenset(
        t for t in range(n) if any(reach[i][t] for i in init)
    )


def all_paths(ts: ss.TransitionSystem, start: int, max_len: int):
    """Every path from start with at most max_len states (brute force)."""
    frontier = [(start,)]
    for _ in range(max_len - 1):
        yield from frontier
        frontier = [
            p + (y,) for p in frontier for y in sorted(ts.step[p[-1]])
        ]
    yield from frontier


class TestBuildTs:
    def test_single_state_no_edges(self):
        ts = ss.build_ts(["a"], [])
        assert ts.states == frozenset({0})
        assert ts.step == (frozenset(),)

    def test_chain3_structure(self, chain3):
        assert chain3.keys == ("a", "b", "c")
        assert chain3.step == (frozenset({1}), frozenset({2}), frozenset())
        assert chain3.rstep == (frozenset(), frozenset({0}), frozenset({1}))

    def test_duplicate_key_rejected(self):
        with pytest.raises(ValueError, match="duplicate state key"):
            ss.build_ts(["a", "a"], [])

    def test_dangling_endpoint_rejected(self):
        with pytest.raises(ValueError, match="dangling edge endpoint 'c'"):
            ss.build_ts(["a", "b"], [("a", "c")])

    def test_label_for_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown state key"):
            ss.build_ts(["a"], [], labels={"b": {"p"}})


class TestReachable:
    def test_chain3_from_a(self, chain3):
        assert ss.reachable(chain3, frozenset({0})) == frozenset({0, 1, 2})

    def test_empty_init(self, chain3):
        assert ss.reachable(chain3, frozenset()) == frozenset()

    def test_chain3_from_c(self, chain3):
        assert ss.reachable(chain3, frozenset({2})) == frozenset({2})

    def test_unknown_initial_state_rejected(self, chain3):
        with pytest.raises(ValueError, match="unknown initial state"):
            ss.reachable(chain3, frozenset({7}))

    def test_matches_brute_closure_on_random_systems(self):
        rng = random.Random(7)
        for _ in range(60):
            ts = random_system(rng, max_states=10)
            n = len(ts.keys)
            init = frozenset(x for x in range(n) if rng.random() < 0.3)
            assert ss.reachable(ts, init) == brute_closure(ts, init)

    @given(st.integers(0, 2**20), st.integers(0, 2**10), st.integers(0, 2**10))
    @settings(max_examples=60, deadline=None)
    def test_monotone_and_idempotent(self, seed, mask1, mask2):
        rng = random.Random(seed)
        ts = random_system(rng, max_states=8)
        n = len(ts.keys)
        small = frozenset(x for x in range(n) if mask1 >> x & 1)
        extra = frozenset(x for x in range(n) if mask2 >> x & 1)
        big = small | extra
        r_small = ss.reachable(ts, small)
        r_big = ss.reachable(ts, big)
        assert r_small <= r_big
        assert ss.reachable(ts, r_small) == r_small


class TestMakeKripke:
    def test_chain3(self, chain3):
        k = ss.make_kripke(chain3, frozenset({0}))
        assert k.init == frozenset({0})
        assert k.reach == frozenset({0, 1, 2})

    def test_empty_init(self, chain3):
        k = ss.make_kripke(chain3, frozenset())
        assert k.reach == frozenset()

    def test_diamond(self, diamond):
        k = ss.make_kripke(diamond, frozenset({0}))
        assert k.reach == frozenset({0, 1, 2, 3})

    def test_invariants_on_random_systems(self):
        rng = random.Random(11)
        for _ in range(40):
            ts = random_system(rng, max_states=10)
            n = len(ts.keys)
            init = frozenset(x for x in range(n) if rng.random() < 0.3)
            k = ss.make_kripke(ts, init)
            assert k.init <= k.reach or not k.init
            assert k.init <= k.reach | frozenset()
            assert k.reach <= ts.states
            assert k.reach == brute_closure(ts, init)


class TestNeighborhoods:
    def test_successors(self, chain3):
        assert ss.successors(chain3, 0) == frozenset({1})

    def test_predecessors(self, chain3):
        assert ss.predecessors(chain3, frozenset({2})) == frozenset({1})

    def test_predecessors_empty(self, chain3):
        assert ss.predecessors(chain3, frozenset()) == frozenset()

    def test_unknown_state_rejected(self, chain3):
        with pytest.raises(ValueError, match="unknown"):
            ss.successors(chain3, 9)
        with pytest.raises(ValueError, match="unknown"):
            ss.predecessors(chain3, frozenset({9}))


class TestShortestPath:
    def test_chain3(self, chain3):
        p = ss.shortest_path(chain3, 0, frozenset({2}))
        assert p.steps == (0, 1, 2)

    def test_zero_step(self, chain3):
        p = ss.shortest_path(chain3, 0, frozenset({0}))
        assert p.steps == (0,)

    def test_unreachable(self, chain3):
        assert ss.shortest_path(chain3, 2, frozenset({0})) is None

    def test_diamond_tie_break(self, diamond):
        p = ss.shortest_path(diamond, 0, frozenset({3}))
        assert p.steps == (0, 1, 3)  # smallest-id branch wins

    def test_path_invariant_must_be_nonempty(self):
        with pytest.raises(ValueError):
            ss.Path(())

    def test_minimal_among_all_paths_on_random_systems(self):
        rng = random.Random(23)
        for _ in range(40):
            ts = random_system(rng, max_states=8)
            n = len(ts.keys)
            start = rng.randrange(n)
            target = frozenset(x for x in range(n) if rng.random() < 0.3)
            got = ss.shortest_path(ts, start, target)
            hits = [
                p for p in all_paths(ts, start, n + 1) if p[-1] in target
            ]
            if got is None:
                assert not hits
            else:
                assert ss.is_path(ts, got)
                assert got.steps[-1] in target
                assert len(got.steps) == min(len(p) for p in hits)
