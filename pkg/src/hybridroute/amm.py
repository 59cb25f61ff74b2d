"""Exact-in swap simulation for six AMM venue kinds.

All pool math runs in binary floating point on abstract token units. Pools are
immutable values: a swap returns the post-trade pool instead of mutating the
input, so pools can be shared freely between scenarios, workers and genomes.

The fee is always taken from the input before the curve math, and fees leave
the pool (reserves grow by the post-fee input only). This keeps every kind
path-independent: two sequential swaps equal one swap of the summed input.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields
from typing import Any, ClassVar, Mapping

from .errors import InvalidAmount, NonPositiveReserve, NumericalFailure, UnknownToken

_EPS = 2.220446049250313e-16
CURVE_MAX_ITER = 255
CURVE_TOL = 1e-10
# Fraction of a finite reserve that a single swap may never drain.
_DRAIN_GUARD = 1e-9


class VenueKind(str, enum.Enum):
    UNIV2 = "UniV2"
    UNIV3 = "UniV3"
    BALANCER = "BalancerWeighted"
    CURVE = "CurveStable"
    DODO = "DodoPMM"
    KYBER = "KyberDMM"


@dataclass(frozen=True)
class Token:
    id: str
    decimals: int = 18
    eth_price: float = 1.0

    def __post_init__(self):
        if not self.id:
            raise ValueError("token id must be non-empty")
        if not 0 <= self.decimals <= 36:
            raise ValueError(f"decimals out of range: {self.decimals}")
        if not self.eth_price > 0:
            raise ValueError(f"eth_price must be positive for {self.id}")


@dataclass(frozen=True)
class SwapResult:
    amount_out: float
    new_pool: "Pool"
    token_in: str
    token_out: str
    amount_in_used: float
    ticks_crossed: int = 0
    amount_in_requested: float = field(default=0.0, compare=False)

    @property
    def marginal_price_after(self) -> float:
        return self.new_pool.spot(self.token_in, self.token_out)

    @property
    def partial(self) -> bool:
        return self.amount_in_used < self.amount_in_requested


_FIELD_NAMES: dict[type, tuple[str, ...]] = {}


def _unchecked(cls, *values):
    # post-trade states derive from a validated pool; skip re-validation
    names = _FIELD_NAMES.get(cls)
    if names is None:
        names = _FIELD_NAMES[cls] = tuple(f.name for f in fields(cls))
    obj = object.__new__(cls)
    for name, v in zip(names, values):
        object.__setattr__(obj, name, v)
    return obj


def _positive(pool_id: str, **values: float) -> None:
    for name, v in values.items():
        if not (v > 0 and math.isfinite(v)):
            raise NonPositiveReserve(f"{pool_id}: {name}={v!r} must be finite and > 0")


def _check_fee(pool_id: str, fee: float) -> None:
    if not 0 <= fee < 1:
        raise ValueError(f"{pool_id}: fee {fee!r} outside [0, 1)")


def _num(x: Any) -> float:
    return float(x)


class Pool:
    """Behaviour shared by every venue kind.

    Subclasses are frozen dataclasses and implement ``_swap`` (amount already
    validated and positive), ``spot``, ``reserve`` and ``perturbed``.
    """

    __slots__ = ()
    kind: ClassVar[VenueKind]
    id: str
    fee: float

    @property
    def tokens(self) -> tuple[str, ...]:
        raise NotImplementedError

    def other(self, token_in: str) -> str:
        toks = self.tokens
        if len(toks) != 2:
            raise ValueError(f"{self.id}: token_out required for {len(toks)}-token pool")
        return toks[1] if token_in == toks[0] else toks[0]

    def _index(self, token: str) -> int:
        try:
            return self.tokens.index(token)
        except ValueError:
            raise UnknownToken(f"{token} not in pool {self.id}") from None

    def swap(self, token_in: str, token_out: str, amount_in: float) -> SwapResult:
        if amount_in != amount_in or amount_in in (math.inf, -math.inf):
            raise InvalidAmount(f"amount_in must be finite, got {amount_in!r}")
        if amount_in < 0:
            raise InvalidAmount(f"amount_in must be >= 0, got {amount_in!r}")
        i, j = self._index(token_in), self._index(token_out)
        if i == j:
            raise UnknownToken(f"{self.id}: token_in and token_out are both {token_in}")
        if amount_in == 0:
            return SwapResult(0.0, self, token_in, token_out, 0.0, 0, 0.0)
        return self._swap(i, j, amount_in)

    def _swap(self, i: int, j: int, amount_in: float) -> SwapResult:
        raise NotImplementedError

    def spot(self, token_in: str, token_out: str) -> float:
        raise NotImplementedError

    def quote_out(self, i: int, j: int, amount_in: float) -> tuple[float, int]:
        """(output, ticks crossed) for a positive amount, by token index.

        Skips validation and the post-trade state; callers pass indices of
        a known edge.
        """
        res = self._swap(i, j, amount_in)
        return res.amount_out, res.ticks_crossed

    def reserve(self, token: str) -> float:
        return self.reserve_at(self._index(token))

    def reserve_at(self, i: int) -> float:
        raise NotImplementedError

    def perturbed(self, price_mult: float, depth_mult: float) -> "Pool":
        """Scenario copy: shift the token1-side price and scale depth."""
        raise NotImplementedError

    def params(self) -> dict[str, Any]:
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "kind": self.kind.value,
            "tokens": list(self.tokens),
            "fee": repr(self.fee),
            "params": _encode(self.params()),
        }


def _encode(value: Any) -> Any:
    # Decimal strings are the canonical on-disk form for pool parameters.
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return [_encode(v) for v in value]
    if isinstance(value, dict):
        return {k: _encode(v) for k, v in value.items()}
    return value


# --------------------------------------------------------------------------
# Uniswap V2: x * y = k


@dataclass(frozen=True, slots=True)
class UniV2Pool(Pool):
    id: str
    token0: str
    token1: str
    reserve0: float
    reserve1: float
    fee: float = 0.003
    kind: ClassVar[VenueKind] = VenueKind.UNIV2

    def __post_init__(self):
        _positive(self.id, reserve0=self.reserve0, reserve1=self.reserve1)
        _check_fee(self.id, self.fee)

    @property
    def tokens(self):
        return (self.token0, self.token1)

    def quote_out(self, i, j, amount_in):
        x, y = (self.reserve0, self.reserve1) if i == 0 else (self.reserve1, self.reserve0)
        dx = (1.0 - self.fee) * amount_in
        return y * dx / (x + dx), 0

    def _swap(self, i, j, amount_in):
        x, y = (self.reserve0, self.reserve1) if i == 0 else (self.reserve1, self.reserve0)
        dx = (1.0 - self.fee) * amount_in
        out = y * dx / (x + dx)
        nx, ny = x + dx, y - out
        new = _unchecked(UniV2Pool, self.id, self.token0, self.token1,
                        *((nx, ny) if i == 0 else (ny, nx)), self.fee)
        return SwapResult(out, new, self.tokens[i], self.tokens[j], amount_in, 0, amount_in)

    def spot(self, token_in, token_out):
        i = self._index(token_in)
        self._index(token_out)
        x, y = (self.reserve0, self.reserve1) if i == 0 else (self.reserve1, self.reserve0)
        return (1.0 - self.fee) * y / x

    def reserve_at(self, i):
        return self.reserve0 if i == 0 else self.reserve1

    def perturbed(self, price_mult, depth_mult):
        return UniV2Pool(self.id, self.token0, self.token1, self.reserve0 * depth_mult,
                         self.reserve1 * price_mult * depth_mult, self.fee)

    def params(self):
        return {"reserve0": self.reserve0, "reserve1": self.reserve1}


# --------------------------------------------------------------------------
# Uniswap V3: consecutive constant-L bands in sqrt-price space


@dataclass(frozen=True, slots=True)
class UniV3Pool(Pool):
    """Concentrated liquidity as contiguous (s_lo, s_hi, L) bands.

    ``sqrt_price`` is sqrt(token1 per token0). Selling token0 moves the price
    down through lower bands; past the lowest band the swap is clamped and
    the unused input is reported via ``amount_in_used``.
    """

    id: str
    token0: str
    token1: str
    sqrt_price: float
    bands: tuple[tuple[float, float, float], ...]
    fee: float = 0.003
    kind: ClassVar[VenueKind] = VenueKind.UNIV3

    def __post_init__(self):
        _positive(self.id, sqrt_price=self.sqrt_price)
        _check_fee(self.id, self.fee)
        if not self.bands:
            raise NonPositiveReserve(f"{self.id}: at least one liquidity band required")
        prev_hi = None
        for lo, hi, liq in self.bands:
            _positive(self.id, s_lo=lo, s_hi=hi, liquidity=liq)
            if not lo < hi:
                raise ValueError(f"{self.id}: band bounds must satisfy s_lo < s_hi")
            if prev_hi is not None and abs(lo - prev_hi) > 1e-12 * hi:
                raise ValueError(f"{self.id}: bands must be contiguous and ascending")
            prev_hi = hi
        if not (self.bands[0][0] <= self.sqrt_price <= self.bands[-1][1]):
            raise ValueError(f"{self.id}: sqrt_price outside the band range")

    @classmethod
    def single(cls, id, token0, token1, liquidity, sqrt_price, s_lo, s_hi, fee=0.003):
        return cls(id, token0, token1, sqrt_price, ((s_lo, s_hi, liquidity),), fee)

    @property
    def tokens(self):
        return (self.token0, self.token1)

    def _band_down(self, s):
        # band used when the price moves down from s
        for k in range(len(self.bands) - 1, -1, -1):
            if self.bands[k][0] < s:
                return k
        return -1

    def _band_up(self, s):
        for k, (lo, hi, _) in enumerate(self.bands):
            if hi > s:
                return k
        return len(self.bands)

    def active_liquidity(self) -> float:
        k = self._band_down(self.sqrt_price)
        if k < 0:
            k = 0
        return self.bands[k][2]

    def _swap(self, i, j, amount_in):
        rem = (1.0 - self.fee) * amount_in
        total = rem
        s = self.sqrt_price
        out = 0.0
        crossed = 0
        if i == 0:
            k = self._band_down(s)
            while rem > 0 and k >= 0:
                lo, _, liq = self.bands[k]
                cap = liq * (1.0 / lo - 1.0 / s)
                if rem < cap:
                    s1 = 1.0 / (1.0 / s + rem / liq)
                    out += rem * s * s1  # liq * (s - s1) without cancellation
                    s, rem = s1, 0.0
                else:
                    out += liq * (s - lo)
                    s, rem = lo, rem - cap
                    crossed += 1
                    k -= 1
        else:
            k = self._band_up(s)
            while rem > 0 and k < len(self.bands):
                _, hi, liq = self.bands[k]
                cap = liq * (hi - s)
                if rem < cap:
                    s1 = s + rem / liq
                    out += rem / (s * s1)
                    s, rem = s1, 0.0
                else:
                    out += liq * (1.0 / s - 1.0 / hi)
                    s, rem = hi, rem - cap
                    crossed += 1
                    k += 1
        new = _unchecked(UniV3Pool, self.id, self.token0, self.token1, s, self.bands, self.fee)
        used = (total - rem) / (1.0 - self.fee) if rem > 0 else amount_in
        return SwapResult(out, new, self.tokens[i], self.tokens[j], used, crossed, amount_in)

    def spot(self, token_in, token_out):
        i = self._index(token_in)
        self._index(token_out)
        p = self.sqrt_price * self.sqrt_price
        if i == 0:
            if self._band_down(self.sqrt_price) < 0:
                return 0.0
            return (1.0 - self.fee) * p
        if self._band_up(self.sqrt_price) >= len(self.bands):
            return 0.0
        return (1.0 - self.fee) / p

    def reserve_at(self, i):
        # virtual reserves of the active band
        liq = self.active_liquidity()
        return liq / self.sqrt_price if i == 0 else liq * self.sqrt_price

    def perturbed(self, price_mult, depth_mult):
        r = math.sqrt(price_mult)
        bands = tuple((lo * r, hi * r, liq * depth_mult) for lo, hi, liq in self.bands)
        return UniV3Pool(self.id, self.token0, self.token1, self.sqrt_price * r, bands, self.fee)

    def params(self):
        return {"sqrt_price": self.sqrt_price, "bands": [list(b) for b in self.bands]}


# --------------------------------------------------------------------------
# Balancer weighted pool: prod x_i ** w_i


@dataclass(frozen=True, slots=True)
class BalancerPool(Pool):
    id: str
    token_ids: tuple[str, ...]
    balances: tuple[float, ...]
    weights: tuple[float, ...]
    fee: float = 0.002
    kind: ClassVar[VenueKind] = VenueKind.BALANCER

    def __post_init__(self):
        _check_fee(self.id, self.fee)
        n = len(self.token_ids)
        if n < 2 or len(self.balances) != n or len(self.weights) != n:
            raise ValueError(f"{self.id}: tokens, balances and weights must align (n >= 2)")
        for b, w in zip(self.balances, self.weights):
            _positive(self.id, balance=b, weight=w)
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"{self.id}: weights must sum to 1")

    @property
    def tokens(self):
        return self.token_ids

    def quote_out(self, i, j, amount_in):
        dx = (1.0 - self.fee) * amount_in
        ratio = self.weights[i] / self.weights[j]
        # 1 - (bi / (bi + dx)) ** ratio, written to stay accurate for tiny dx
        return -self.balances[j] * math.expm1(-ratio * math.log1p(dx / self.balances[i])), 0

    def _swap(self, i, j, amount_in):
        bi, bo = self.balances[i], self.balances[j]
        dx = (1.0 - self.fee) * amount_in
        out = self.quote_out(i, j, amount_in)[0]
        bal = list(self.balances)
        bal[i] = bi + dx
        bal[j] = bo - out
        new = _unchecked(BalancerPool, self.id, self.token_ids, tuple(bal), self.weights, self.fee)
        return SwapResult(out, new, self.token_ids[i], self.token_ids[j], amount_in, 0, amount_in)

    def spot(self, token_in, token_out):
        i, j = self._index(token_in), self._index(token_out)
        wi, wj = self.weights[i], self.weights[j]
        xi, xj = self.balances[i], self.balances[j]
        return (1.0 - self.fee) * (wi * xj) / (wj * xi)

    def reserve_at(self, i):
        return self.balances[i]

    def perturbed(self, price_mult, depth_mult):
        bal = tuple(b * depth_mult * (price_mult if k else 1.0) for k, b in enumerate(self.balances))
        return BalancerPool(self.id, self.token_ids, bal, self.weights, self.fee)

    def params(self):
        return {"balances": list(self.balances), "weights": list(self.weights)}


# --------------------------------------------------------------------------
# Curve StableSwap:
#   A n^n sum(x) + D = A D n^n + D^(n+1) / (n^n prod(x))
# evaluated on rate-scaled balances xp_i = x_i * rate_i.


def curve_invariant(xp, amp: float) -> float:
    """Solve the StableSwap invariant D by Newton iteration."""
    n = len(xp)
    s = math.fsum(xp)
    if s == 0:
        return 0.0
    ann = amp * n**n
    d = s
    prev = d
    for _ in range(CURVE_MAX_ITER):
        dp = d
        for x in xp:
            dp = dp * d / (x * n)
        prev = d
        d = (ann * s + dp * n) * d / ((ann - 1.0) * d + (n + 1) * dp)
        if abs(d - prev) <= 4 * _EPS * d:
            return d
    if abs(d - prev) <= CURVE_TOL * d:
        return d
    raise NumericalFailure(f"StableSwap D did not converge: |dD|={abs(d - prev):.3e}")


def curve_solve_y(xp, i: int, j: int, x_new: float, d: float, amp: float) -> float:
    """New scaled balance of coin ``j`` after coin ``i`` moves to ``x_new``."""
    n = len(xp)
    ann = amp * n**n
    c = d
    s = 0.0
    for k in range(n):
        if k == j:
            continue
        x = x_new if k == i else xp[k]
        s += x
        c = c * d / (x * n)
    c = c * d / (ann * n)
    b = s + d / ann
    # Newton on a convex quadratic: from the old balance it descends monotonically
    y = xp[j] if xp[j] > 0 else d
    prev = y
    for _ in range(CURVE_MAX_ITER):
        prev = y
        y = (y * y + c) / (2.0 * y + b - d)
        if abs(y - prev) <= 4 * _EPS * y:
            return y
    if abs(y - prev) <= CURVE_TOL * y:
        return y
    raise NumericalFailure(f"StableSwap y did not converge: |dy|={abs(y - prev):.3e}")


@dataclass(frozen=True, slots=True)
class CurvePool(Pool):
    id: str
    token_ids: tuple[str, ...]
    balances: tuple[float, ...]
    amp: float
    fee: float = 0.0004
    rates: tuple[float, ...] = ()
    cached_d: float = field(default=0.0, compare=False, repr=False)
    kind: ClassVar[VenueKind] = VenueKind.CURVE

    def __post_init__(self):
        _check_fee(self.id, self.fee)
        n = len(self.token_ids)
        if n < 2 or len(self.balances) != n:
            raise ValueError(f"{self.id}: tokens and balances must align (n >= 2)")
        if not self.rates:
            object.__setattr__(self, "rates", (1.0,) * n)
        if len(self.rates) != n:
            raise ValueError(f"{self.id}: one rate per token required")
        _positive(self.id, amp=self.amp)
        for b, r in zip(self.balances, self.rates):
            _positive(self.id, balance=b, rate=r)

    @property
    def tokens(self):
        return self.token_ids

    def scaled(self) -> list[float]:
        return [b * r for b, r in zip(self.balances, self.rates)]

    def invariant(self) -> float:
        d = self.cached_d
        if not d:
            d = curve_invariant(self.scaled(), self.amp)
            object.__setattr__(self, "cached_d", d)
        return d

    def _swap(self, i, j, amount_in):
        xp = self.scaled()
        d = self.invariant()
        dx = (1.0 - self.fee) * amount_in
        y = curve_solve_y(xp, i, j, xp[i] + dx * self.rates[i], d, self.amp)
        out = (xp[j] - y) / self.rates[j]
        cap = self.balances[j] * (1.0 - _DRAIN_GUARD)
        if out > cap:
            out = cap
        if out < 0:
            out = 0.0
        bal = list(self.balances)
        bal[i] += dx
        bal[j] -= out
        # fees leave the pool, so the invariant carries over unchanged
        new = _unchecked(CurvePool, self.id, self.token_ids, tuple(bal), self.amp, self.fee, self.rates, d)
        return SwapResult(out, new, self.token_ids[i], self.token_ids[j], amount_in, 0, amount_in)

    def spot(self, token_in, token_out):
        i, j = self._index(token_in), self._index(token_out)
        xp = self.scaled()
        n = len(xp)
        d = self.invariant()
        ann = self.amp * n**n
        prod = math.prod(xp)
        base = d ** (n + 1) / (n**n * prod)
        gi = ann + base / xp[i]
        gj = ann + base / xp[j]
        return (1.0 - self.fee) * (self.rates[i] / self.rates[j]) * gi / gj

    def reserve_at(self, i):
        return self.balances[i]

    def perturbed(self, price_mult, depth_mult):
        bal = tuple(b * depth_mult * (price_mult if k else 1.0) for k, b in enumerate(self.balances))
        return CurvePool(self.id, self.token_ids, bal, self.amp, self.fee, self.rates)

    def params(self):
        return {"balances": list(self.balances), "amp": self.amp, "rates": list(self.rates)}


# --------------------------------------------------------------------------
# DODO-style proactive market maker (simplified)


@dataclass(frozen=True, slots=True)
class DodoPool(Pool):
    """Linear price curve around an oracle price.

    The quote-per-base price is ``p0 * (1 - k * d / base_target)`` where ``d``
    is the pool's base inventory above its target. Buying base therefore pays
    ``p0 * (1 + k * q / B)`` at cumulative size ``q`` from equilibrium and
    selling base receives the mirrored price; both legs integrate in closed
    form.
    """

    id: str
    base: str
    quote: str
    p0: float
    k: float
    base_target: float
    base_reserve: float
    quote_reserve: float
    fee: float = 0.003
    kind: ClassVar[VenueKind] = VenueKind.DODO

    def __post_init__(self):
        _check_fee(self.id, self.fee)
        _positive(self.id, p0=self.p0, base_target=self.base_target,
                  base_reserve=self.base_reserve, quote_reserve=self.quote_reserve)
        if not 0 <= self.k <= 1:
            raise ValueError(f"{self.id}: slope k must lie in [0, 1]")

    @property
    def tokens(self):
        return (self.base, self.quote)

    def _offset(self) -> float:
        return self.base_reserve - self.base_target

    def _kink(self) -> float:
        # inventory offset at which the price reaches zero
        return self.base_target / self.k if self.k > 0 else math.inf

    def _antideriv(self, x):
        return self.p0 * x * (1.0 - 0.5 * self.k * x / self.base_target)

    def _inverse(self, c):
        # x <= kink with _antideriv(x) == c, in a cancellation-free form
        disc = 1.0 - 2.0 * self.k * c / (self.p0 * self.base_target)
        return 2.0 * c / (self.p0 * (1.0 + math.sqrt(max(disc, 0.0))))

    def price(self) -> float:
        return self.p0 * max(0.0, 1.0 - self.k * self._offset() / self.base_target)

    def _swap(self, i, j, amount_in):
        dx = (1.0 - self.fee) * amount_in
        d = self._offset()
        kink = self._kink()
        used = amount_in
        if i == 0:  # sell base for quote
            x0 = d
            x1 = min(d + dx, kink)
            out = self.p0 * (x1 - x0) * (1.0 - 0.5 * self.k * (x1 + x0) / self.base_target) if x1 > x0 else 0.0
            new_d = d + dx
            cap = self.quote_reserve * (1.0 - _DRAIN_GUARD)
            if out > cap:
                out = cap
                new_d = self._inverse(self._antideriv(x0) + cap)
                used = (new_d - d) / (1.0 - self.fee)
            base_res = self.base_target + new_d
            quote_res = self.quote_reserve - out
        else:  # buy base with quote
            top = min(d, kink)
            free = d - top
            x1 = self._inverse(self._antideriv(top) - dx)
            floor = -self.base_target * (1.0 - _DRAIN_GUARD)
            if x1 < floor:
                x1 = floor
                used = (self._antideriv(top) - self._antideriv(x1)) / (1.0 - self.fee)
            out = free + (top - x1)
            base_res = self.base_target + x1
            quote_res = self.quote_reserve + (1.0 - self.fee) * used
        new = _unchecked(DodoPool, self.id, self.base, self.quote, self.p0, self.k, self.base_target,
                       base_res, quote_res, self.fee)
        return SwapResult(out, new, self.tokens[i], self.tokens[j], min(used, amount_in), 0, amount_in)

    def spot(self, token_in, token_out):
        i = self._index(token_in)
        self._index(token_out)
        p = self.price()
        if i == 0:
            return (1.0 - self.fee) * p
        return (1.0 - self.fee) / p if p > 0 else math.inf

    def reserve_at(self, i):
        return self.base_reserve if i == 0 else self.quote_reserve

    def perturbed(self, price_mult, depth_mult):
        return DodoPool(self.id, self.base, self.quote, self.p0 * price_mult, self.k,
                        self.base_target * depth_mult, self.base_reserve * depth_mult,
                        self.quote_reserve * depth_mult, self.fee)

    def params(self):
        return {"p0": self.p0, "k": self.k, "base_target": self.base_target,
                "base_reserve": self.base_reserve, "quote_reserve": self.quote_reserve}


# --------------------------------------------------------------------------
# Kyber DMM: constant product on amplified virtual reserves


@dataclass(frozen=True, slots=True)
class KyberPool(Pool):
    id: str
    token0: str
    token1: str
    reserve0: float
    reserve1: float
    vreserve0: float
    vreserve1: float
    fee: float = 0.002
    kind: ClassVar[VenueKind] = VenueKind.KYBER

    def __post_init__(self):
        _check_fee(self.id, self.fee)
        _positive(self.id, reserve0=self.reserve0, reserve1=self.reserve1,
                  vreserve0=self.vreserve0, vreserve1=self.vreserve1)

    @classmethod
    def amplified(cls, id, token0, token1, reserve0, reserve1, amp, fee=0.002):
        if amp < 1:
            raise ValueError(f"{id}: amplification must be >= 1")
        return cls(id, token0, token1, reserve0, reserve1, reserve0 * amp, reserve1 * amp, fee)

    @property
    def tokens(self):
        return (self.token0, self.token1)

    def _amounts(self, y, vx, vy, amount_in):
        # (output, effective input, input used)
        dx = (1.0 - self.fee) * amount_in
        used = amount_in
        cap = y * (1.0 - _DRAIN_GUARD)
        # input that drains the real output reserve down to the guard
        dx_max = vx * cap / (vy - cap) if vy > cap else math.inf
        if dx > dx_max:
            dx = dx_max
            used = dx / (1.0 - self.fee)
        return min(vy * dx / (vx + dx), cap), dx, used

    def quote_out(self, i, j, amount_in):
        if i == 0:
            return self._amounts(self.reserve1, self.vreserve0, self.vreserve1, amount_in)[0], 0
        return self._amounts(self.reserve0, self.vreserve1, self.vreserve0, amount_in)[0], 0

    def _swap(self, i, j, amount_in):
        if i == 0:
            x, y, vx, vy = self.reserve0, self.reserve1, self.vreserve0, self.vreserve1
        else:
            x, y, vx, vy = self.reserve1, self.reserve0, self.vreserve1, self.vreserve0
        out, dx, used = self._amounts(y, vx, vy, amount_in)
        nx, ny, nvx, nvy = x + dx, y - out, vx + dx, vy - out
        if i == 0:
            new = _unchecked(KyberPool, self.id, self.token0, self.token1, nx, ny, nvx, nvy, self.fee)
        else:
            new = _unchecked(KyberPool, self.id, self.token0, self.token1, ny, nx, nvy, nvx, self.fee)
        return SwapResult(out, new, self.tokens[i], self.tokens[j], used, 0, amount_in)

    def spot(self, token_in, token_out):
        i = self._index(token_in)
        self._index(token_out)
        vx, vy = (self.vreserve0, self.vreserve1) if i == 0 else (self.vreserve1, self.vreserve0)
        return (1.0 - self.fee) * vy / vx

    def reserve_at(self, i):
        return self.reserve0 if i == 0 else self.reserve1

    def perturbed(self, price_mult, depth_mult):
        return KyberPool(self.id, self.token0, self.token1, self.reserve0 * depth_mult,
                         self.reserve1 * depth_mult * price_mult, self.vreserve0 * depth_mult,
                         self.vreserve1 * depth_mult * price_mult, self.fee)

    def params(self):
        return {"reserve0": self.reserve0, "reserve1": self.reserve1,
                "vreserve0": self.vreserve0, "vreserve1": self.vreserve1}


# --------------------------------------------------------------------------
# functional surface


def _resolve_out(pool: Pool, token_in: str, token_out: str | None) -> str:
    if token_in not in pool.tokens:
        raise UnknownToken(f"{token_in} not in pool {pool.id}")
    return pool.other(token_in) if token_out is None else token_out


def swap_exact_in(pool: Pool, token_in: str, amount_in: float, token_out: str | None = None) -> SwapResult:
    """Swap ``amount_in`` of ``token_in`` and return output plus post-trade pool."""
    return pool.swap(token_in, _resolve_out(pool, token_in, token_out), amount_in)


def spot_price(pool: Pool, token_in: str, token_out: str | None = None) -> float:
    """Marginal output per unit input at zero size, fee included."""
    return pool.spot(token_in, _resolve_out(pool, token_in, token_out))


def slippage_estimate(pool: Pool, token_in: str, amount_in: float, token_out: str | None = None) -> float:
    """1 - average execution price / spot price (0 for a zero-size trade)."""
    token_out = _resolve_out(pool, token_in, token_out)
    res = pool.swap(token_in, token_out, amount_in)
    if amount_in == 0:
        return 0.0
    spot = pool.spot(token_in, token_out)
    if spot <= 0:
        return 1.0
    return 1.0 - (res.amount_out / amount_in) / spot


POOL_TYPES: dict[str, type[Pool]] = {
    VenueKind.UNIV2.value: UniV2Pool,
    VenueKind.UNIV3.value: UniV3Pool,
    VenueKind.BALANCER.value: BalancerPool,
    VenueKind.CURVE.value: CurvePool,
    VenueKind.DODO.value: DodoPool,
    VenueKind.KYBER.value: KyberPool,
}


def pool_from_dict(data: Mapping[str, Any]) -> Pool:
    """Inverse of ``Pool.to_dict``; accepts decimal strings or numbers."""
    kind = data["kind"]
    toks = list(data["tokens"])
    fee = _num(data.get("fee", 0.0))
    p = data.get("params", {})
    pid = data["id"]
    if kind == VenueKind.UNIV2.value:
        return UniV2Pool(pid, toks[0], toks[1], _num(p["reserve0"]), _num(p["reserve1"]), fee)
    if kind == VenueKind.UNIV3.value:
        bands = tuple(tuple(_num(v) for v in b) for b in p["bands"])
        return UniV3Pool(pid, toks[0], toks[1], _num(p["sqrt_price"]), bands, fee)
    if kind == VenueKind.BALANCER.value:
        return BalancerPool(pid, tuple(toks), tuple(_num(v) for v in p["balances"]),
                            tuple(_num(v) for v in p["weights"]), fee)
    if kind == VenueKind.CURVE.value:
        rates = tuple(_num(v) for v in p.get("rates", [])) or ()
        return CurvePool(pid, tuple(toks), tuple(_num(v) for v in p["balances"]), _num(p["amp"]), fee, rates)
    if kind == VenueKind.DODO.value:
        return DodoPool(pid, toks[0], toks[1], _num(p["p0"]), _num(p["k"]), _num(p["base_target"]),
                        _num(p["base_reserve"]), _num(p["quote_reserve"]), fee)
    if kind == VenueKind.KYBER.value:
        if "amp" in p:
            return KyberPool.amplified(pid, toks[0], toks[1], _num(p["reserve0"]), _num(p["reserve1"]),
                                       _num(p["amp"]), fee)
        return KyberPool(pid, toks[0], toks[1], _num(p["reserve0"]), _num(p["reserve1"]),
                         _num(p["vreserve0"]), _num(p["vreserve1"]), fee)
    raise ValueError(f"unknown pool kind {kind!r}")
