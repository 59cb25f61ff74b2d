"""Seeded synthetic market instances for the 14 benchmark strata."""

from __future__ import annotations

import math
import random
import zlib
from dataclasses import dataclass

from ..amm import BalancerPool, CurvePool, DodoPool, KyberPool, Token, UniV2Pool, UniV3Pool
from ..errors import InvalidStratum
from ..graph import build_graph, token_paths
from ..instance import GAS_REGIMES, Instance, Order

ORDER_ETH = {"small": 1.0, "medium": 10.0, "large": 200.0}
SIZE_RATIO = {"small": 0.005, "medium": 0.05, "large": 0.5}
POOLS_PER_PAIR = {"low": (1, 2), "medium": (3, 4), "high": (5, 8)}
AMM_ALIASES = {"homo": "homogeneous_v2", "homogeneous": "homogeneous_v2", "homogeneous_v2": "homogeneous_v2",
               "mixed": "mixed"}
MIXED_KINDS = ("UniV2", "UniV3", "BalancerWeighted", "CurveStable", "DodoPMM", "KyberDMM")
PRICE_NOISE = 0.002


@dataclass(frozen=True, order=True)
class Stratum:
    order_size: str
    fragmentation: str
    amm_diversity: str
    gas_regime: str

    def __post_init__(self):
        amm = AMM_ALIASES.get(self.amm_diversity)
        if amm is None:
            raise InvalidStratum(f"unknown AMM diversity {self.amm_diversity!r}")
        object.__setattr__(self, "amm_diversity", amm)
        if (self.order_size not in ORDER_ETH or self.fragmentation not in POOLS_PER_PAIR
                or self.gas_regime not in GAS_REGIMES):
            raise InvalidStratum(f"unknown stratum component in {self}")

    @property
    def id(self) -> str:
        amm = "homo" if self.amm_diversity == "homogeneous_v2" else "mixed"
        return f"{self.order_size}_{self.fragmentation}_{amm}_{self.gas_regime}"

    @property
    def gas_gwei(self) -> float:
        return GAS_REGIMES[self.gas_regime]

    def to_dict(self) -> dict:
        return {"order_size": self.order_size, "fragmentation": self.fragmentation,
                "amm_diversity": self.amm_diversity, "gas_regime": self.gas_regime}


_ROWS = [
    ("small", "low", "homo", "low"),
    ("small", "low", "mixed", "low"),
    ("small", "medium", "mixed", "medium"),
    ("small", "high", "mixed", "medium"),
    ("medium", "low", "mixed", "medium"),
    ("medium", "medium", "homo", "low"),
    ("medium", "medium", "homo", "medium"),
    ("medium", "medium", "homo", "high"),
    ("medium", "high", "mixed", "medium"),
    ("large", "low", "mixed", "medium"),
    ("large", "medium", "mixed", "medium"),
    ("large", "high", "homo", "high"),
    ("large", "high", "mixed", "low"),
    ("large", "high", "mixed", "high"),
]
STRATA: tuple[Stratum, ...] = tuple(Stratum(*r) for r in _ROWS)
_BY_ID = {s.id: s for s in STRATA}


def parse_stratum(spec) -> Stratum:
    """Accept a Stratum, its id ("small_low_homo_low"), a comma list or a mapping."""
    if isinstance(spec, Stratum):
        s = spec
    elif isinstance(spec, dict):
        s = Stratum(spec["order_size"], spec["fragmentation"], spec["amm_diversity"], spec["gas_regime"])
    else:
        parts = [p for p in str(spec).replace(",", "_").replace("-", "_").split("_") if p]
        if parts[2:4] == ["homogeneous", "v2"]:
            parts = parts[:2] + ["homogeneous_v2"] + parts[4:]
        if len(parts) != 4:
            raise InvalidStratum(f"cannot parse stratum {spec!r}")
        s = Stratum(*parts)
    if s.id not in _BY_ID:
        raise InvalidStratum(f"{s.id} is not one of the 14 admissible strata")
    return s


def parse_strata(spec: str) -> list[Stratum]:
    if spec in ("all", "*"):
        return list(STRATA)
    return [parse_stratum(p) for p in spec.replace(";", " ").split()]


def market_seed(stratum: Stratum, seed: int) -> int:
    """Instance RNG key; gas is excluded so gas-only variants share a market."""
    key = f"{stratum.order_size}|{stratum.fragmentation}|{stratum.amm_diversity}|{seed}"
    return zlib.crc32(key.encode())


def _dirichlet(rng: random.Random, n: int, alpha: float = 2.0) -> list[float]:
    g = [rng.gammavariate(alpha, 1.0) for _ in range(n)]
    s = math.fsum(g)
    return [x / s for x in g]


def _make_pool(kind: str, pid: str, a: Token, b: Token, depth: float, rng: random.Random):
    """One pool between ``a`` and ``b`` holding about ``depth`` ETH per side."""
    ratio = a.eth_price / b.eth_price * math.exp(rng.gauss(0.0, PRICE_NOISE))  # b per a
    ra = depth / a.eth_price
    rb = ra * ratio
    if kind == "UniV2":
        fee = 0.003
        return UniV2Pool(pid, a.id, b.id, ra, rb, fee)
    if kind == "UniV3":
        fee = rng.choice((0.0005, 0.003))
        s0 = math.sqrt(ratio)
        n = rng.randint(1, 5)
        width = math.exp(rng.uniform(0.15, 0.4))
        offset = rng.random()
        lo_exp = -(n // 2) - offset
        edges = [s0 * width ** (lo_exp + j) for j in range(n + 1)]
        # concentration: the active band holds V2-equivalent depth times a boost
        base = ra * s0 * rng.uniform(1.0, 2.0)
        centre = n // 2
        bands = tuple((edges[j], edges[j + 1], base * (1.0 if j == centre else rng.uniform(0.3, 1.0)))
                      for j in range(n))
        return UniV3Pool(pid, a.id, b.id, s0, bands, fee)
    if kind == "BalancerWeighted":
        wa = rng.choice((0.5, 0.8, 0.2))
        wb = 1.0 - wa
        # spot (wa * xb) / (wb * xa) equals ratio
        return BalancerPool(pid, (a.id, b.id), (ra, ratio * ra * wb / wa), (wa, wb), 0.002)
    if kind == "CurveStable":
        amp = rng.uniform(5.0, 50.0)
        rates = (a.eth_price, a.eth_price / ratio)  # balanced scaled balances price at ratio
        return CurvePool(pid, (a.id, b.id), (ra, rb), amp, 0.0004, rates)
    if kind == "DodoPMM":
        k = rng.uniform(0.2, 0.8)
        return DodoPool(pid, a.id, b.id, ratio, k, ra, ra, rb, 0.003)
    if kind == "KyberDMM":
        amp = rng.uniform(1.5, 3.0)
        return KyberPool.amplified(pid, a.id, b.id, ra / amp, rb / amp, amp, 0.002)
    raise ValueError(kind)


def generate_instance(stratum, seed: int) -> Instance:
    """Deterministic synthetic market for ``(stratum, seed)``."""
    st = parse_stratum(stratum)
    rng = random.Random(market_seed(st, seed))
    n_tokens = rng.randint(4, 10)
    tokens = [Token("T0", 18, 1.0)]
    for i in range(1, n_tokens):
        price = math.exp(rng.uniform(math.log(2e-4), math.log(2.0)))
        tokens.append(Token(f"T{i}", rng.choice((6, 8, 18)), price))
    src, dst = tokens[0], tokens[1]
    hubs = tokens[2:]
    pairs = []
    if rng.random() < 0.5:
        pairs.append((src, dst))
    for h in hubs:
        if rng.random() < 0.8:
            pairs.append((src, h))
        if rng.random() < 0.8:
            pairs.append((h, dst))
    for i, h in enumerate(hubs):
        for g in hubs[i + 1:]:
            if rng.random() < 0.3:
                pairs.append((h, g))
    lo, hi = POOLS_PER_PAIR[st.fragmentation]
    kinds = ("UniV2",) if st.amm_diversity == "homogeneous_v2" else MIXED_KINDS

    def build(pair_list):
        specs = []
        for a, b in pair_list:
            n = rng.randint(lo, hi)
            pair_depth = math.exp(rng.gauss(0.0, 0.5))
            for share in _dirichlet(rng, n):
                kind = kinds[rng.randrange(len(kinds))]
                flip = rng.random() < 0.5
                specs.append((kind, (b, a) if flip else (a, b), pair_depth * share))
        return specs

    specs = build(pairs)
    probe = [UniV2Pool(f"x{i}", a.id, b.id, 1.0, 1.0) for i, (_, (a, b), _) in enumerate(specs)]
    if not specs or not token_paths(build_graph(probe), src.id, dst.id, 4):
        specs += build([(src, dst)])
    q_eth = ORDER_ETH[st.order_size]
    target_mean = q_eth / SIZE_RATIO[st.order_size]
    scale = target_mean / (math.fsum(d for _, _, d in specs) / len(specs))
    pools = []
    for i, (kind, (a, b), d) in enumerate(specs):
        pools.append(_make_pool(kind, f"P{i:03d}", a, b, d * scale, rng))
    order = Order(src.id, dst.id, q_eth / src.eth_price)
    return Instance(f"{st.id}-s{seed}", tuple(tokens), tuple(pools), order, st.gas_gwei, st.to_dict(),
                    market_seed(st, seed))
