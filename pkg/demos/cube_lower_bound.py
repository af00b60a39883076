"""Why copies are unavoidable for monotone valuations: the [n]^n cube."""
import itertools

from mms_copies import gen_cube
from mms_copies.solve import per_good_threshold, randomized_monotone, total_copy_threshold

for n in (2, 3):
    cube = gen_cube(n)
    parts = [v.mms_partition for v in cube.valuations]
    # every way of giving each agent one of its slabs overlaps in exactly (n-1)^n goods
    extras = set()
    for choice in itertools.product(range(n), repeat=n):
        bundles = [parts[i][c] for i, c in enumerate(choice)]
        extras.add(sum(map(len, bundles)) - len(frozenset().union(*bundles)))
    print(f"n={n}: m={cube.m}, copies over all {n ** n} choices: {sorted(extras)}")

    res = randomized_monotone(cube, beta=3, seed=0)
    print(f"  randomized: success={res.success} after {res.iterations} draw(s), "
          f"t={res.allocation.stats().total_extra} <= {total_copy_threshold(cube.m)}, "
          f"k={res.allocation.stats().max_per_good} <= {per_good_threshold(cube.m, n)}")
