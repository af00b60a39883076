"""Command-line front end: ``mms-copies {gen,mms,solve,verify,bench}``.

Goods and agents are 0-indexed everywhere.  Exit status is 0 when every
guarantee holds, 1 when some agent misses its target (or the randomized
allocator gives up), and 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from .core import (
    CopyAllocation,
    Instance,
    PreconditionError,
    format_rational,
    instance_to_json,
    load_instance,
    parse_rational,
    save_instance,
    verify_guarantee,
)
from .instances import (
    appendix_d_instance,
    fixture_appendix_e,
    gen_cube,
    gen_random_additive,
    gen_random_chores,
    gen_random_kdemand,
    gen_two_tier_additive,
)
from .mms import SizeCapExceeded, exact_mms
from .solve import (
    FOUR_FIFTHS,
    SIX_SEVENTHS,
    mms_via_one_out_of_d,
    pipeline_four_fifths,
    pipeline_six_sevenths,
    randomized_monotone,
    run_bagfill_with_copies,
    run_match_n_fill,
)
from .variants import ChoreInstance, chores_exact_mms, match_n_fill_chores, run_kdemand_bagfill

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

# largest alpha each algorithm is proven for; the default alpha is the cap.
# For one-out-of-d alpha is the reduction parameter (d = ceil((1+alpha)n')) and
# every agent is held to its full share.
ALPHA_CAPS = {
    "match-n-fill": Fraction(1),
    "bagfill": Fraction(1),
    "rr67": SIX_SEVENTHS,
    "rr45": FOUR_FIFTHS,
    "one-out-of-d": Fraction(1),
    "randomized-monotone": Fraction(1),
    "chores": Fraction(1),
    "kdemand": Fraction(1),
}
DEFAULT_ALPHA = dict(ALPHA_CAPS, **{"one-out-of-d": Fraction(1, 2)})
CSV_COLUMNS = ["family", "n", "m", "seed", "algorithm", "alpha", "min_ratio", "copies_t", "max_k", "ms"]


class UsageError(Exception):
    pass


def _dumps(data) -> str:
    return json.dumps(data, sort_keys=True, indent=1)


def _digest(instance) -> str:
    canon = json.dumps(instance_to_json(instance), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def _shares(instance, cap=None) -> list[Fraction]:
    if isinstance(instance, ChoreInstance):
        return [chores_exact_mms(row, instance.n, cap=cap).value for row in instance.costs]
    return [exact_mms(v, instance.n, cap=cap).value for v in instance.valuations]


def parse_order(text: str | None, m: int) -> list[int] | None:
    """``ascending`` (default), ``shuffle:<seed>`` or a comma-separated list of goods."""
    if text is None or text == "ascending":
        return None
    if text.startswith("shuffle:"):
        order = list(range(m))
        random.Random(int(text.split(":", 1)[1])).shuffle(order)
        return order
    try:
        order = [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"bad --order {text!r}") from exc
    if any(not 0 <= g < m for g in order):
        raise UsageError("--order mentions a good outside 0..m-1")
    return order


# ---------------------------------------------------------------------------
# reports


def build_report(instance, alloc: CopyAllocation, targets, extra: dict | None = None) -> dict:
    """Recompute every value from the instance; nothing is taken from the solver."""
    if isinstance(instance, ChoreInstance):
        agents = []
        for i in range(instance.n):
            cost = instance.value(i, alloc.bundles[i])
            agents.append({"agent": i, "cost": format_rational(cost),
                           "target": format_rational(targets[i]), "ok": cost <= targets[i]})
        allocated = set().union(*alloc.bundles)
        report = {
            "agents": agents,
            "all_pass": all(a["ok"] for a in agents),
            "discarded": sorted(set(range(instance.m)) - allocated),
            "copies_t": alloc.stats().total_extra,
            "max_k": alloc.stats().max_per_good,
        }
    else:
        rep = verify_guarantee(instance, alloc, targets)
        report = {
            "agents": [
                {"agent": c.agent, "value": format_rational(c.value),
                 "target": format_rational(c.target), "ok": c.ok}
                for c in rep.agents
            ],
            "all_pass": rep.all_pass,
            "covered": rep.covered,
            "copies_t": rep.stats.total_extra,
            "max_k": rep.stats.max_per_good,
            "duplicated": sorted(rep.stats.duplicated),
            "min_ratio": None if rep.min_ratio is None else format_rational(rep.min_ratio),
        }
    if extra:
        report.update(extra)
    return report


def _min_ratio(instance, alloc, shares) -> Fraction | None:
    ratios = []
    for i in range(instance.n):
        value = instance.value(i, alloc.bundles[i])
        if isinstance(instance, ChoreInstance):
            if value > 0:
                ratios.append(shares[i] / value)
        elif shares[i] > 0:
            ratios.append(value / shares[i])
    return min(ratios) if ratios else None


# ---------------------------------------------------------------------------
# solving


def solve(instance, algorithm: str, alpha: Fraction | None = None, seed: int = 0,
          order: list[int] | None = None, beta: int = 3, cap=None):
    """Run one algorithm; returns (allocation or None, targets, shares, trace dict)."""
    if algorithm not in ALPHA_CAPS:
        raise UsageError(f"unknown algorithm {algorithm!r}")
    limit = ALPHA_CAPS[algorithm]
    alpha = DEFAULT_ALPHA[algorithm] if alpha is None else alpha
    if alpha > limit or alpha <= 0:
        raise UsageError(f"alpha={format_rational(alpha)} is outside (0, {format_rational(limit)}], "
                         f"the proven range of {algorithm}")
    is_chores = isinstance(instance, ChoreInstance)
    if is_chores != (algorithm == "chores"):
        raise UsageError("the chores algorithm needs a chores instance and vice versa")
    trace = None
    if algorithm == "randomized-monotone":
        res = randomized_monotone(instance, beta, seed)
        shares = [min(v.value(p) for p in v.mms_partition) for v in instance.valuations]
        trace = {"iterations": res.iterations, "max_iterations": res.max_iterations,
                 "choices": None if res.choices is None else list(res.choices)}
        return res.allocation, [alpha * x for x in shares], shares, trace
    shares = _shares(instance, cap)
    if algorithm == "chores":
        res = match_n_fill_chores(instance, shares, cap)
        trace = {"discarded": sorted(res.discarded)}
        return res.allocation, shares, shares, trace  # costs are capped at the full share
    targets = [alpha * s for s in shares]
    if algorithm == "match-n-fill":
        run = run_match_n_fill(instance, shares, cap)
        alloc = run.allocation
        trace = {
            "singletons": {str(k): v for k, v in run.singletons.items()},
            "matched": {str(k): sorted(v) for k, v in run.matched.items()},
            "violator_size": run.violator_size,
            "duplications": [] if run.bagfill is None else list(run.bagfill.duplicated),
        }
    elif algorithm == "bagfill":
        run = run_bagfill_with_copies(instance, shares, order=order, check=False)
        alloc = run.allocation
        trace = {
            "closures": [{"agent": c.agent, "bag": sorted(c.bag), "seed": c.seed} for c in run.closures],
            "duplications": list(run.duplicated),
            "unsatisfied": list(run.unsatisfied),
        }
    elif algorithm in ("rr67", "rr45"):
        pipe = pipeline_six_sevenths if algorithm == "rr67" else pipeline_four_fifths
        res = pipe(instance, alpha, shares, cap, check=False)
        alloc = res.allocation
        trace = {
            "reduction": res.trace.to_json(),
            "round_robin": {
                "closed_bags": list(res.round_robin.closed_bags),
                "duplicated_ranks": list(res.round_robin.duplicated),
                "survivors": list(res.round_robin.survivors),
            },
            "ordered_allocation": res.ordered_allocation.to_json(),
        }
    elif algorithm == "one-out-of-d":
        res = mms_via_one_out_of_d(instance, alpha, cap=cap)
        alloc = res.allocation
        targets = shares
        trace = {"kept": list(res.kept), "d": res.d, "copy_bound": res.bound}
    else:  # kdemand
        run = run_kdemand_bagfill(instance, shares, order, cap)
        alloc = run.allocation
        trace = {
            "awards": [{"agent": a.agent, "bundle": sorted(a.bundle), "trigger": a.trigger,
                        "returned": list(a.returned)} for a in run.awards],
            "unsatisfied": list(run.unsatisfied),
        }
    return alloc, targets, shares, trace


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    fam = args.family
    if fam == "random-additive":
        inst = gen_random_additive(args.n, args.m, args.seed)
    elif fam == "two-tier":
        inst = gen_two_tier_additive(args.n, args.m, args.seed)
    elif fam == "random-kdemand":
        inst = gen_random_kdemand(args.n, args.m, args.k, args.seed)
    elif fam == "random-chores":
        inst = gen_random_chores(args.n, args.m, args.seed)
    elif fam == "cube":
        inst = gen_cube(args.n)
    elif fam == "appendix-e":
        inst = fixture_appendix_e()
    else:  # appendix-d
        inst, _ = appendix_d_instance(args.n)
    if args.out:
        save_instance(inst, args.out)
    else:
        print(_dumps(instance_to_json(inst)))
    return EXIT_OK


def cmd_mms(args) -> int:
    inst = load_instance(args.instance)
    d = args.d or inst.n
    agents = [args.agent] if args.agent is not None else range(inst.n)
    out = []
    for i in agents:
        if not 0 <= i < inst.n:
            raise UsageError(f"agent {i} out of range")
        if isinstance(inst, ChoreInstance):
            res = chores_exact_mms(inst.costs[i], d)
        else:
            res = exact_mms(inst.valuations[i], d)
        out.append({"agent": i, "d": d, "value": format_rational(res.value),
                    "partition": [sorted(b) for b in res.partition]})
    print(_dumps({"mms": out}))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    alpha = None if args.alpha is None else parse_rational(args.alpha)
    order = parse_order(args.order, inst.m)
    start = time.perf_counter()
    alloc, targets, _, trace = solve(inst, args.algorithm, alpha, args.seed, order, args.beta)
    ms = (time.perf_counter() - start) * 1000
    params = {"algorithm": args.algorithm, "alpha": None if alpha is None else format_rational(alpha),
              "seed": args.seed, "order": args.order}
    head = {"instance_digest": _digest(inst), "params": params, "ms": round(ms, 3)}
    if alloc is None:
        report = dict(head, all_pass=False, failure="no accepted draw within the iteration budget")
        if args.emit_trace:
            report["trace"] = trace
        print(_dumps({"allocation": None, "report": report}))
        return EXIT_VIOLATION
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(_dumps(alloc.to_json()) + "\n")
    report = build_report(inst, alloc, targets, head)
    if args.emit_trace:
        report["trace"] = trace
    elif args.algorithm == "bagfill":
        report["duplications"] = trace["duplications"]
    print(_dumps({"allocation": alloc.to_json(), "report": report}))
    return EXIT_OK if report["all_pass"] else EXIT_VIOLATION


def cmd_verify(args) -> int:
    inst = load_instance(args.instance)
    with open(args.allocation) as fh:
        alloc = CopyAllocation.from_json(json.load(fh), inst.m)
    if alloc.n != inst.n:
        raise UsageError(f"allocation has {alloc.n} bundles for {inst.n} agents")
    alpha = parse_rational(args.alpha)
    if getattr(inst, "cube_n", None) is not None:
        shares = [Fraction(1)] * inst.n
    else:
        shares = _shares(inst)
    targets = shares if isinstance(inst, ChoreInstance) else [alpha * s for s in shares]
    report = build_report(inst, alloc, targets, {"instance_digest": _digest(inst),
                                                 "alpha": format_rational(alpha)})
    print(_dumps(report))
    return EXIT_OK if report["all_pass"] else EXIT_VIOLATION


def _bench_instance(family: str, n: int, m: int, seed: int, k: int):
    if family == "random-additive":
        return gen_random_additive(n, m, seed)
    if family == "two-tier":
        return gen_two_tier_additive(n, m, seed)
    if family == "random-kdemand":
        return gen_random_kdemand(n, m, k, seed)
    if family == "random-chores":
        return gen_random_chores(n, m, seed)
    if family == "cube":
        return gen_cube(n)
    raise UsageError(f"unknown family {family!r}")


def bench_row(family: str, n: int, m: int, seed: int, algorithm: str, alpha, k: int = 2) -> dict:
    inst = _bench_instance(family, n, m, seed, k)
    start = time.perf_counter()
    alloc, targets, shares, _ = solve(inst, algorithm, alpha, seed)
    ms = (time.perf_counter() - start) * 1000
    used_alpha = DEFAULT_ALPHA[algorithm] if alpha is None else alpha
    if alloc is None:
        ratio, t, kmax = None, None, None
    else:
        ratio = _min_ratio(inst, alloc, shares)
        stats = alloc.stats()
        t, kmax = stats.total_extra, stats.max_per_good
        if isinstance(inst, ChoreInstance):
            t = inst.m - len(set().union(*alloc.bundles))  # discarded chores
    return {
        "family": family, "n": inst.n, "m": inst.m, "seed": seed, "algorithm": algorithm,
        "alpha": format_rational(used_alpha),
        "min_ratio": "" if ratio is None else f"{float(ratio):.6f}",
        "copies_t": "" if t is None else t, "max_k": "" if kmax is None else kmax,
        "ms": f"{ms:.3f}",
    }


def _bench_task(task):
    return bench_row(*task)


def cmd_bench(args) -> int:
    alpha = None if args.alpha is None else parse_rational(args.alpha)
    if args.algorithm not in ALPHA_CAPS:
        raise UsageError(f"unknown algorithm {args.algorithm!r}")
    tasks = [(args.family, n, m, args.seed + trial, args.algorithm, alpha, args.k)
             for n in args.n for m in args.m if m >= n or args.family == "cube"
             for trial in range(args.trials)]
    if args.workers > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            rows = list(pool.map(_bench_task, tasks))
    else:
        rows = [_bench_task(t) for t in tasks]
    rows.sort(key=lambda r: (r["n"], r["m"], r["seed"]))
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    failed = any(r["min_ratio"] == "" or Fraction(r["min_ratio"]) < Fraction(r["alpha"])
                 for r in rows if args.family != "random-chores")
    failed = failed or any(r["min_ratio"] != "" and Fraction(r["min_ratio"]) < 1
                           for r in rows if args.family == "random-chores")
    return EXIT_VIOLATION if failed else EXIT_OK


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mms-copies", description=__doc__.splitlines()[0],
                                epilog="Goods and agents are numbered from 0.")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write an instance as JSON")
    g.add_argument("family", choices=["random-additive", "two-tier", "random-kdemand", "random-chores",
                                      "cube", "appendix-e", "appendix-d"])
    g.add_argument("--n", type=int, default=3)
    g.add_argument("--m", type=int, default=9)
    g.add_argument("--k", type=int, default=2, help="demand size for random-kdemand")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gen)

    q = sub.add_parser("mms", help="exact maximin (or min-max) share of each agent")
    q.add_argument("instance")
    q.add_argument("--agent", type=int)
    q.add_argument("--d", type=int, help="number of bundles (default n)")
    q.set_defaults(func=cmd_mms)

    s = sub.add_parser("solve", help="run an allocation algorithm and report on it")
    s.add_argument("instance")
    s.add_argument("--algorithm", required=True, choices=sorted(ALPHA_CAPS))
    s.add_argument("--alpha", help="approximation factor as p/q (default: the algorithm's cap)")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--beta", type=int, default=3, help="confidence parameter of randomized-monotone")
    s.add_argument("--order", help="insertion order: ascending, shuffle:<seed> or g0,g1,...")
    s.add_argument("--emit-trace", action="store_true")
    s.add_argument("--out", help="also write the allocation JSON here")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("verify", help="check an allocation against alpha times the shares")
    v.add_argument("instance")
    v.add_argument("allocation")
    v.add_argument("--alpha", default="1")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="CSV summary over seeded random instances")
    b.add_argument("family", choices=["random-additive", "two-tier", "random-kdemand",
                                      "random-chores", "cube"])
    b.add_argument("--n", type=_int_list, default=[4], help="comma-separated agent counts")
    b.add_argument("--m", type=_int_list, default=[10], help="comma-separated good counts")
    b.add_argument("--k", type=int, default=2)
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--algorithm", default="match-n-fill", choices=sorted(ALPHA_CAPS))
    b.add_argument("--alpha")
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, PreconditionError, SizeCapExceeded, ValueError, KeyError,
            FileNotFoundError, json.JSONDecodeError, NotImplementedError) as exc:
        print(f"mms-copies: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
