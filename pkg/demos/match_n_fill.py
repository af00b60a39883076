"""Full MMS with at most n-2 copied goods.

Seeds 0 and 1 are settled by singletons and a perfect matching; 70 and 94
have a Hall violator, so the leftover agents go through bag filling and a
good gets copied.
"""
from mms_copies import gen_random_additive, mms_values, verify_guarantee
from mms_copies.solve import run_match_n_fill

for seed in (0, 1, 70, 94):
    inst = gen_random_additive(4, 9, seed)
    mus = mms_values(inst)
    run = run_match_n_fill(inst, mus)
    report = verify_guarantee(inst, run.allocation, mus)
    stats = report.stats
    print(f"seed {seed}: shares {[str(m) for m in mus]}")
    print(f"  singletons {run.singletons}, matched {sorted(run.matched)}, "
          f"Hall violator size {run.violator_size}")
    if run.bagfill is not None:
        print(f"  bag filling served {[c.agent for c in run.bagfill.closures]}, "
              f"seeds {list(run.bagfill.duplicated)}")
    print(f"  all at share: {report.all_pass}, copies {stats.total_extra} (bound {inst.n - 2})")
