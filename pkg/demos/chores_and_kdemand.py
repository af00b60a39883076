"""Two variants: chores with a few discarded items, and 2-demand goods."""
from mms_copies.instances import appendix_d_instance, gen_random_chores
from mms_copies.solve import run_bagfill_with_copies
from mms_copies.variants import chores_mms_values, match_n_fill_chores, run_kdemand_bagfill

inst = gen_random_chores(4, 10, seed=3)
mus = chores_mms_values(inst)
res = match_n_fill_chores(inst, mus)
print("chores: min-max shares", [str(m) for m in mus])
for i, b in enumerate(res.allocation.bundles):
    print(f"  agent {i}: chores {sorted(b)} cost {inst.value(i, b)}")
print(f"  discarded {sorted(res.discarded)} (at most n-2 = 2), allocated {res.allocated} of {inst.m}")

# 2-demand agents: a bag is worth its two best goods
for n in (3, 4):
    inst, order = appendix_d_instance(n)
    plain = run_bagfill_with_copies(inst, [1] * n, order=order, check=False)
    kd = run_kdemand_bagfill(inst, order=order)
    print(f"\n2-demand, n={n}: order {order}")
    print("  plain bag filling bags:", [sorted(c.bag) for c in plain.closures],
          "unsatisfied", plain.unsatisfied)
    print("  k-demand variant awards:", [(a.agent, sorted(a.bundle)) for a in kd.awards],
          "copies", kd.allocation.stats().total_extra)
