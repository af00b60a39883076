"""Instance generators and the worked examples used as fixtures."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from .core import Additive, CopyAllocation, Instance, KDemand, MonotoneOracle


class CubeInstance(Instance):
    """Instance whose goods sit on the n-dimensional grid ``[n]^n``.

    Agent ``i`` values a bundle at 1 iff it contains a whole slab
    ``{g : g[i] == j}`` for some ``j``; the ``n`` slabs are its MMS partition.
    """

    cube_n: int
    coords: tuple[tuple[int, ...], ...]


def _cube_valuation(slabs: tuple[frozenset, ...], m: int) -> MonotoneOracle:
    def value(bundle: frozenset) -> Fraction:
        return Fraction(1) if any(slab <= bundle for slab in slabs) else Fraction(0)

    return MonotoneOracle(m, value, slabs)


def gen_cube(n: int, max_n: int = 5) -> CubeInstance:
    """The lower-bound instance where every all-satisfying choice copies (n-1)^n goods."""
    if n < 2:
        raise ValueError("the cube construction needs n >= 2")
    if n > max_n:
        raise ValueError(f"n={n} gives {n ** n} goods; raise max_n to allow it")
    coords = tuple(itertools.product(range(n), repeat=n))
    m = len(coords)
    vals = []
    for i in range(n):
        slabs = tuple(
            frozenset(g for g, c in enumerate(coords) if c[i] == j) for j in range(n)
        )
        vals.append(_cube_valuation(slabs, m))
    inst = CubeInstance(tuple(vals))
    object.__setattr__(inst, "cube_n", n)
    object.__setattr__(inst, "coords", coords)
    return inst


def random_values(
    rng: random.Random, m: int, value_range: tuple[int, int] = (1, 10), denominator: int = 10
) -> tuple[Fraction, ...]:
    lo, hi = value_range
    return tuple(Fraction(rng.randint(lo, hi), denominator) for _ in range(m))


def gen_random_additive(
    n: int,
    m: int,
    seed: int,
    value_range: tuple[int, int] = (1, 10),
    denominator: int = 10,
) -> Instance:
    """Seeded additive instance with values on the grid ``{lo..hi}/denominator``."""
    if n > m:
        raise ValueError("need n <= m")
    if not (0 < value_range[0] <= value_range[1]):
        raise ValueError("value_range must be positive")
    rng = random.Random(seed)
    return Instance(tuple(Additive(random_values(rng, m, value_range, denominator)) for _ in range(n)))


def gen_two_tier_additive(
    n: int,
    m: int,
    seed: int,
    top: tuple[int, int] = (6, 9),
    low: tuple[int, int] = (2, 5),
    noise: int = 1,
) -> Instance:
    """n shared "big" goods and m-n small ones; each agent adds up to ``noise`` per good.

    Near-identical agents competing for a few big goods is where the copying
    reduction rules fire; uniform instances almost never reach them.
    """
    if n > m:
        raise ValueError("need n <= m")
    rng = random.Random(seed)
    base = [rng.randint(*top) for _ in range(n)] + [rng.randint(*low) for _ in range(m - n)]
    return Instance(tuple(
        Additive(tuple(Fraction(b + rng.randint(0, noise)) for b in base)) for _ in range(n)
    ))


def gen_random_kdemand(n: int, m: int, k: int, seed: int, value_range=(1, 10)) -> Instance:
    rng = random.Random(seed)
    return Instance(tuple(KDemand(k, random_values(rng, m, value_range)) for _ in range(n)))


def gen_random_chores(n: int, m: int, seed: int, value_range=(1, 10)):
    from .variants import ChoreInstance

    rng = random.Random(seed)
    return ChoreInstance([random_values(rng, m, value_range) for _ in range(n)])


APPENDIX_E_TABLE = (
    # agent 1..4 values of g1..g12, as printed
    ("0.2", "0.3", "0.8", "0.1"),
    ("0.2", "0.5", "0.3", "0.1"),
    ("0.7", "0.3", "0.2", "0.8"),
    ("0.3", "0.2", "0.3", "0.2"),
    ("0.3", "0.8", "0.1", "0.2"),
    ("0.5", "0.5", "0.1", "0.7"),
    ("0.1", "0.1", "0.5", "0.1"),
    ("0.1", "0.1", "0.7", "0.2"),
    ("0.8", "0.3", "0.3", "0.8"),
    ("0.2", "0.8", "0.1", "0.3"),
    ("0.2", "0.2", "0.9", "0.3"),
    ("0.7", "0.3", "0.1", "0.5"),
)

# insertion order of the published run (1-based good names; g7 appears twice)
APPENDIX_E_ORDER = (4, 7, 9, 1, 2, 10, 12, 7, 5, 3, 8)

# bundles of the published run, agent 1..4
APPENDIX_E_BUNDLES = ({4, 7, 9}, {9, 1, 2}, {7, 5, 3, 8}, {2, 10, 12, 7})


def fixture_appendix_e() -> Instance:
    """Four agents, twelve goods ``g1..g12`` (indices 0..11)."""
    values = [[Fraction(row[i]) for row in APPENDIX_E_TABLE] for i in range(4)]
    return Instance.additive(
        values,
        agent_labels=tuple(f"agent{i + 1}" for i in range(4)),
        good_labels=tuple(f"g{j + 1}" for j in range(12)),
    )


def appendix_e_order() -> list[int]:
    return [g - 1 for g in APPENDIX_E_ORDER]


def appendix_e_allocation() -> CopyAllocation:
    return CopyAllocation(tuple(frozenset(g - 1 for g in b) for b in APPENDIX_E_BUNDLES), 12)


@dataclass(frozen=True)
class OrdinalExample:
    instance: Instance
    virtual_allocation: CopyAllocation  # over ranks 0..2
    orders: dict  # agent label -> goods from best to worst


def _ordinal_instance(orders: dict[str, str]) -> Instance:
    names = "xyz"
    rows = []
    for order in orders.values():
        score = {g: 3 - pos for pos, g in enumerate(order)}
        rows.append([score[g] for g in names])
    return Instance.additive(rows, agent_labels=tuple(orders), good_labels=tuple(names))


def fixture_appendix_f() -> list[OrdinalExample]:
    """The two three-agent examples where naive picking sequences break with copies.

    Values 3 > 2 > 1 realise the ordinal preferences.
    """
    first = {"a": "xzy", "b": "xzy", "c": "xyz"}
    second = {"a": "xyz", "b": "zyx", "c": "zyx"}
    return [
        OrdinalExample(
            _ordinal_instance(first),
            CopyAllocation((frozenset({0, 1}), frozenset({0, 2}), frozenset({1, 2})), 3),
            first,
        ),
        OrdinalExample(
            _ordinal_instance(second),
            CopyAllocation((frozenset({0, 1, 2}), frozenset({0}), frozenset({1, 2})), 3),
            second,
        ),
    ]


def appendix_d_instance(n: int, eps: Fraction = Fraction(1, 10)) -> tuple[Instance, list[int]]:
    """Identical 2-demand agents over goods g_1..g_{n-1}, h_1..h_{n-1}, x_1, x_2.

    Returns the instance and the adversarial insertion order g.., x_1, x_2, h..
    Goods are laid out as ``[g_1..g_{n-1}, h_1..h_{n-1}, x_1, x_2]``.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    g_val = (1 - eps) / 2
    h_val = (1 + eps) / 2
    values = [g_val] * (n - 1) + [h_val] * (n - 1) + [Fraction(1, 2)] * 2
    inst = Instance.kdemand(2, [values] * n)
    gs = list(range(n - 1))
    hs = list(range(n - 1, 2 * n - 2))
    xs = [2 * n - 2, 2 * n - 1]
    return inst, gs + xs + hs
