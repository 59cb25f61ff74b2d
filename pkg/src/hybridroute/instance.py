"""Problem instances: tokens with ETH reference prices, pools and one order."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Mapping

from .amm import Pool, Token, pool_from_dict
from .errors import DuplicatePoolId, InvalidAmount, SrcEqualsDst, UnknownToken

GAS_REGIMES = {"low": 10.0, "medium": 30.0, "high": 80.0}


@dataclass(frozen=True)
class Order:
    src: str
    dst: str
    quantity: float

    def __post_init__(self):
        if self.src == self.dst:
            raise SrcEqualsDst(f"order src and dst are both {self.src}")
        q = self.quantity
        if not (q >= 0 and q != float("inf")):
            raise InvalidAmount(f"order quantity must be finite and >= 0, got {q!r}")


@dataclass(frozen=True)
class Instance:
    id: str
    tokens: tuple[Token, ...]
    pools: tuple[Pool, ...]
    order: Order
    gas_price_gwei: float = 30.0
    stratum: Mapping[str, str] | None = None
    seed: int | None = None
    _token_map: dict = field(init=False, repr=False, compare=False)
    _pool_map: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tmap = {t.id: t for t in self.tokens}
        pmap = {}
        for p in self.pools:
            if p.id in pmap:
                raise DuplicatePoolId(p.id)
            pmap[p.id] = p
            for t in p.tokens:
                if t not in tmap:
                    raise UnknownToken(f"pool {p.id} references undeclared token {t}")
        for t in (self.order.src, self.order.dst):
            if t not in tmap:
                raise UnknownToken(f"order token {t} is not declared")
        object.__setattr__(self, "_token_map", tmap)
        object.__setattr__(self, "_pool_map", pmap)

    def token(self, tid: str) -> Token:
        try:
            return self._token_map[tid]
        except KeyError:
            raise UnknownToken(tid) from None

    def price(self, tid: str) -> float:
        return self.token(tid).eth_price

    def pool(self, pid: str) -> Pool:
        return self._pool_map[pid]

    @property
    def pool_map(self) -> dict[str, Pool]:
        return dict(self._pool_map)

    def with_order(self, order: Order) -> "Instance":
        return Instance(self.id, self.tokens, self.pools, order, self.gas_price_gwei, self.stratum, self.seed)

    def with_gas_price(self, gwei: float) -> "Instance":
        return Instance(self.id, self.tokens, self.pools, self.order, gwei, self.stratum, self.seed)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"id": self.id}
        if self.stratum is not None:
            out["stratum"] = dict(self.stratum)
        if self.seed is not None:
            out["seed"] = self.seed
        out["gas_price_gwei"] = repr(float(self.gas_price_gwei))
        out["tokens"] = [{"id": t.id, "decimals": t.decimals, "eth_price": repr(t.eth_price)} for t in self.tokens]
        out["pools"] = [p.to_dict() for p in self.pools]
        out["order"] = {"src": self.order.src, "dst": self.order.dst, "quantity": repr(float(self.order.quantity))}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "Instance":
        tokens = tuple(Token(t["id"], int(t.get("decimals", 18)), float(t.get("eth_price", 1.0)))
                       for t in data["tokens"])
        pools = tuple(pool_from_dict(p) for p in data["pools"])
        o = data["order"]
        order = Order(o["src"], o["dst"], float(o["quantity"]))
        stratum = data.get("stratum")
        gas = data.get("gas_price_gwei")
        if gas is None:
            regime = stratum.get("gas_regime") if isinstance(stratum, Mapping) else None
            gas = GAS_REGIMES.get(regime, 30.0)
        return cls(str(data.get("id", "instance")), tokens, pools, order, float(gas),
                   dict(stratum) if isinstance(stratum, Mapping) else None, data.get("seed"))

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "Instance":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())
