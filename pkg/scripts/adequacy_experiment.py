"""Adequacy statistics over random transition systems.

For each random system: synthesize trees for random targets and generate
random trees, then count how often validity holds and confirm the
reachability direction on every valid tree.  Prints a summary table.

    python3 scripts/adequacy_experiment.py [--systems N] [--seed S]
"""

import argparse
import random
import time

from infratree import attacktree as at
from infratree import ctl
from infratree import statespace as ss


def random_system(rng: random.Random, max_states: int) -> ss.TransitionSystem:
    n = rng.randint(1, max_states)
    p = rng.uniform(0.1, 0.5)
    edges = [(x, y) for x in range(n) for y in range(n) if rng.random() < p]
    return ss.build_ts(list(range(n)), edges)


def random_subset(rng, n, nonempty=False):
    out = frozenset(x for x in range(n) if rng.random() < 0.4)
    if nonempty and not out:
        out = frozenset({rng.randrange(n)})
    return out


def random_tree(rng, n, depth=3):
    def sig():
        return at.AttackSignature(random_subset(rng, n), random_subset(rng, n))

    def build(d):
        if d == 0 or rng.random() < 0.4:
            return at.Base(sig())
        children = tuple(build(d - 1) for _ in range(rng.randint(0, 3)))
        if rng.random() < 0.5:
            if children and rng.random() < 0.5:
                s = at.AttackSignature(children[0].sig.pre,
                                       children[-1].sig.post)
                return at.AndTree(children, s)
            return at.AndTree(children, sig())
        return at.OrTree(children, sig())

    return build(depth)


def run(systems: int, seed: int) -> None:
    rng = random.Random(seed)
    t0 = time.time()
    stats = {"systems": 0, "synth": 0, "absent": 0, "random": 0,
             "valid": 0, "sound": 0}
    for _ in range(systems):
        ts = random_system(rng, 10)
        n = len(ts.keys)
        init = random_subset(rng, n, nonempty=True)
        k = ss.make_kripke(ts, init)
        stats["systems"] += 1
        trees = []
        for _ in range(3):
            target = random_subset(rng, n)
            tree = at.synthesize(k, target)
            holds = ctl.models(k, ctl.EF(ctl.Atom(target))).holds
            assert (tree is not None) == holds
            if tree is None:
                stats["absent"] += 1
            else:
                stats["synth"] += 1
                trees.append(tree)
        for _ in range(50):
            trees.append(random_tree(rng, n))
            stats["random"] += 1
        for tree in trees:
            if not at.is_valid(ts, tree):
                continue
            stats["valid"] += 1
            k_pre = ss.make_kripke(ts, tree.sig.pre)
            assert ctl.models(k_pre, ctl.EF(ctl.Atom(tree.sig.post))).holds
            stats["sound"] += 1
    elapsed = time.time() - t0
    print(f"systems checked      {stats['systems']}")
    print(f"trees synthesized    {stats['synth']}")
    print(f"targets unreachable  {stats['absent']}")
    print(f"random trees         {stats['random']}")
    print(f"valid trees          {stats['valid']}")
    print(f"soundness confirmed  {stats['sound']}/{stats['valid']}")
    print(f"elapsed              {elapsed:.2f}s")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--systems", type=int, default=200)
    ap.add_argument("--seed", type=int, default=101)
    args = ap.parse_args()
    run(args.systems, args.seed)
