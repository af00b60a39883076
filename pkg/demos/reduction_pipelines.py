"""The two reduce-then-round-robin pipelines on instances built to trigger their copying rules."""
from mms_copies import Instance, verify_guarantee
from mms_copies.mms import SizeCap
from mms_copies.solve import pipeline_four_fifths, pipeline_six_sevenths


def show(res):
    for step in res.trace.steps:
        k = "" if step.k is None else f"_{step.k}"
        parts = [f"agent {a} <- ranks {sorted(b)}" for a, b in zip(step.removed_agents, step.bundles)]
        copied = f", copies rank {sorted(step.copies)}" if step.copies else ""
        print(f"  {step.rule}{k}: " + "; ".join(parts) + copied)
    rr = res.round_robin
    print(f"  round robin: awards {({a: sorted(b) for a, b in rr.awards.items()})}, "
          f"duplicated ranks {list(rr.duplicated)}")
    print(f"  simple: t={res.witness.t}, pairs {res.witness.pairs}")


# three identical agents; both of the first two want {top, 4th} so the top good is shared
inst = Instance.additive([[9, 8, 6, 5, 4, 4, 3]] * 3)
res = pipeline_six_sevenths(inst)
print("6/7 pipeline, shares", [str(m) for m in res.mus])
show(res)
rep = verify_guarantee(inst, res.allocation, res.targets())
print("  final bundles", [sorted(b) for b in res.allocation.bundles], "| pass:", rep.all_pass)

# six identical agents over two copies of an eight-good profile: T fires twice
inst = Instance.additive([[10, 9, 5, 4, 4, 3, 3, 1] * 2] * 6)
res = pipeline_four_fifths(inst, cap=SizeCap(16, 8))
print("\n4/5 pipeline, shares", [str(m) for m in res.mus])
show(res)
rep = verify_guarantee(inst, res.allocation, res.targets())
print("  copies", rep.stats.total_extra, "(bound 6 // 3 = 2) | pass:", rep.all_pass)
