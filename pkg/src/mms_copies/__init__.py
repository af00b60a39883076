"""Maximin-share fair division where a few goods may be duplicated.

Exact rational arithmetic throughout; exponential oracles verify every
guarantee at desk scale.
"""
from .core import (
    Additive,
    AgentCheck,
    CopyAllocation,
    CopyStats,
    GuaranteeReport,
    Instance,
    InternalInvariantError,
    KDemand,
    MonotoneOracle,
    PreconditionError,
    copy_stats,
    evaluate,
    format_rational,
    instance_from_json,
    instance_to_json,
    load_instance,
    parse_rational,
    save_instance,
    verify_guarantee,
)
from .instances import (
    CubeInstance,
    appendix_d_instance,
    fixture_appendix_e,
    fixture_appendix_f,
    gen_cube,
    gen_random_additive,
    gen_random_chores,
    gen_random_kdemand,
    gen_two_tier_additive,
)
from .mms import (
    MmsResult,
    SizeCap,
    SizeCapExceeded,
    brute_force_mms,
    check_valid_reduction,
    exact_mms,
    mms_values,
    normalize,
    one_out_of_d_alloc,
)
from .ordered import (
    OrderedInstance,
    SimpleAllocationWitness,
    from_ordered_no_copies,
    from_ordered_simple,
    is_simple,
    to_ordered,
)
from .reduce import ReductionTrace, r_reduce, s_reduce, start_trace, t_reduce, try_R, try_S, try_T
from .solve import (
    PipelineResult,
    RandomizedResult,
    bagfill_round_robin,
    bagfill_with_copies,
    match_n_fill,
    mms_via_one_out_of_d,
    pipeline_four_fifths,
    pipeline_six_sevenths,
    randomized_monotone,
)
from .variants import (
    ChoreInstance,
    chores_exact_mms,
    kdemand_bagfill,
    match_n_fill_chores,
)

__version__ = "0.1.0"
