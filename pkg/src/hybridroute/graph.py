"""Token/pool multigraph, log-rate edge weights, paths and negative cycles."""

from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .amm import Pool, VenueKind
from .errors import DuplicatePoolId, SrcEqualsDst

NEG_CYCLE_EPS = 1e-12


@dataclass(frozen=True, order=True)
class PoolEdge:
    pool_id: str
    token_in: str
    token_out: str
    kind: VenueKind = field(compare=False, default=VenueKind.UNIV2)
    _hash: int = field(init=False, compare=False, repr=False, default=0)

    def __post_init__(self):
        # paths are dict keys on the hot evaluation loop
        object.__setattr__(self, "_hash", hash((self.pool_id, self.token_in, self.token_out)))

    def __hash__(self):
        return self._hash

    @property
    def key(self) -> str:
        return f"{self.pool_id}:{self.token_in}>{self.token_out}"


Path = tuple  # tuple[PoolEdge, ...]


def path_key(path: Sequence[PoolEdge]) -> str:
    return "|".join(e.key for e in path)


def path_tokens(path: Sequence[PoolEdge]) -> list[str]:
    if not path:
        return []
    return [path[0].token_in] + [e.token_out for e in path]


def is_valid_path(path: Sequence[PoolEdge], src: str, dst: str, max_hops: int = 4) -> bool:
    """Token-compatible, simple (no repeated token) and within the hop limit."""
    if not path or len(path) > max_hops:
        return False
    if path[0].token_in != src or path[-1].token_out != dst:
        return False
    for a, b in zip(path, path[1:]):
        if a.token_out != b.token_in:
            return False
    toks = path_tokens(path)
    return len(set(toks)) == len(toks)


@dataclass(frozen=True)
class EdgeWeight:
    c: float
    rho: float
    phi: float


class DexGraph:
    """Immutable directed multigraph: one edge per (pool, token_in, token_out)."""

    def __init__(self, pools: Iterable[Pool]):
        self.pools: dict[str, Pool] = {}
        edges = []
        for p in pools:
            if p.id in self.pools:
                raise DuplicatePoolId(p.id)
            self.pools[p.id] = p
            for a in p.tokens:
                for b in p.tokens:
                    if a != b:
                        edges.append(PoolEdge(p.id, a, b, p.kind))
        edges.sort()
        self.edges: tuple[PoolEdge, ...] = tuple(edges)
        self.vertices: tuple[str, ...] = tuple(sorted({t for p in self.pools.values() for t in p.tokens}))
        adj: dict[str, list[PoolEdge]] = {v: [] for v in self.vertices}
        between: dict[tuple[str, str], list[PoolEdge]] = {}
        for e in self.edges:
            adj[e.token_in].append(e)
            between.setdefault((e.token_in, e.token_out), []).append(e)
        self.adjacency: dict[str, tuple[PoolEdge, ...]] = {k: tuple(v) for k, v in adj.items()}
        self._between = {k: tuple(v) for k, v in between.items()}
        self.neighbors: dict[str, tuple[str, ...]] = {
            v: tuple(sorted({e.token_out for e in adj[v]})) for v in self.vertices
        }

    def out_edges(self, token: str) -> tuple[PoolEdge, ...]:
        return self.adjacency.get(token, ())

    def parallel(self, token_in: str, token_out: str) -> tuple[PoolEdge, ...]:
        return self._between.get((token_in, token_out), ())

    def __len__(self):
        return len(self.edges)


def build_graph(pools: Iterable[Pool]) -> DexGraph:
    return DexGraph(pools)


def edge_weight(graph: DexGraph, edge: PoolEdge, probe_size: float = 0.0) -> EdgeWeight:
    """c = -ln((1 - fee) * rho) with rho the pre-fee marginal or average rate."""
    pool = graph.pools[edge.pool_id]
    phi = pool.fee
    if probe_size < 0:
        raise ValueError("probe_size must be >= 0")
    if probe_size == 0:
        eff = pool.spot(edge.token_in, edge.token_out)
    else:
        eff = pool.swap(edge.token_in, edge.token_out, probe_size).amount_out / probe_size
    rho = eff / (1.0 - phi)
    c = -math.log(eff) if eff > 0 and math.isfinite(eff) else math.inf
    return EdgeWeight(c, rho, phi)


def edge_weights(graph: DexGraph, probe: Mapping[str, float] | float = 0.0) -> dict[PoolEdge, EdgeWeight]:
    """Weights for every edge; ``probe`` may give a per-input-token probe size."""
    out = {}
    for e in graph.edges:
        size = probe.get(e.token_in, 0.0) if isinstance(probe, Mapping) else probe
        out[e] = edge_weight(graph, e, size)
    return out


def _costs(weights: Mapping[PoolEdge, EdgeWeight | float]) -> dict[PoolEdge, float]:
    return {e: (w.c if isinstance(w, EdgeWeight) else float(w)) for e, w in weights.items()}


def has_negative_cycle(graph: DexGraph, weights: Mapping[PoolEdge, EdgeWeight | float]) -> bool:
    """Bellman-Ford from a virtual source linked to every vertex at cost 0."""
    cost = _costs(weights)
    dist = dict.fromkeys(graph.vertices, 0.0)
    edges = [(e.token_in, e.token_out, cost[e]) for e in graph.edges if math.isfinite(cost[e])]
    for _ in range(len(graph.vertices)):
        changed = False
        for a, b, c in edges:
            nd = dist[a] + c
            if nd < dist[b]:
                dist[b] = nd
                changed = True
        if not changed:
            return False
    return True


def canonical_cycle(cycle: Sequence[PoolEdge]) -> tuple[PoolEdge, ...]:
    """Rotate so the edge with the smallest key comes first."""
    keys = [e.key for e in cycle]
    k = keys.index(min(keys))
    return tuple(cycle[k:]) + tuple(cycle[:k])


def _token_cycles(graph: DexGraph, max_len: int) -> Iterator[list[str]]:
    # each simple cycle once: start at its smallest token, only larger tokens after
    for start in graph.vertices:
        stack = [(start, [start])]
        while stack:
            node, seq = stack.pop()
            for nb in reversed(graph.neighbors[node]):
                if nb == start and len(seq) >= 2:
                    yield seq
                elif nb > start and nb not in seq and len(seq) < max_len:
                    stack.append((nb, seq + [nb]))


def _kbest_combos(options: list[list[tuple[float, str, PoolEdge]]], limit: int, threshold: float):
    """Cheapest edge combinations (one per position) in ascending total cost."""
    start = (0,) * len(options)
    first = sum(o[0][0] for o in options)
    heap = [(first, tuple(o[0][1] for o in options), start, 0)]
    seen = {start}
    produced = 0
    while heap and produced < limit:
        total, keys, idx, _ = heapq.heappop(heap)
        if not total < threshold:
            break
        yield total, tuple(options[p][i][2] for p, i in enumerate(idx))
        produced += 1
        for p in range(len(options)):
            if idx[p] + 1 < len(options[p]):
                nxt = idx[:p] + (idx[p] + 1,) + idx[p + 1:]
                if nxt in seen:
                    continue
                seen.add(nxt)
                t = sum(options[q][i][0] for q, i in enumerate(nxt))
                heapq.heappush(heap, (t, tuple(options[q][i][1] for q, i in enumerate(nxt)), nxt, p))


def find_negative_cycles(graph: DexGraph, weights: Mapping[PoolEdge, EdgeWeight | float],
                         max_cycles: int = 8, max_len: int | None = None) -> list[tuple[PoolEdge, ...]]:
    """Profitable simple cycles (sum of c below -1e-12), cheapest first.

    Bellman-Ford acts as the gate; if it finds a negative cycle the simple
    cycles are enumerated and the cheapest ``max_cycles`` are returned in
    canonical rotation, ordered by (total cost, edge keys).
    """
    if max_cycles <= 0 or not graph.edges:
        return []
    if not has_negative_cycle(graph, weights):
        return []
    cost = _costs(weights)
    max_len = len(graph.vertices) if max_len is None else max_len
    found = []
    for toks in _token_cycles(graph, max_len):
        ring = toks + [toks[0]]
        options = []
        for a, b in zip(ring, ring[1:]):
            opts = sorted((cost[e], e.key, e) for e in graph.parallel(a, b) if math.isfinite(cost[e]))
            if not opts:
                break
            options.append(opts)
        else:
            lower = sum(o[0][0] for o in options)
            if lower < -NEG_CYCLE_EPS:
                for total, cyc in _kbest_combos(options, max_cycles, -NEG_CYCLE_EPS):
                    canon = canonical_cycle(cyc)
                    found.append((total, tuple(e.key for e in canon), canon))
    found.sort(key=lambda t: (t[0], t[1]))
    return [c for _, _, c in found[:max_cycles]]


def enumerate_paths(graph: DexGraph, src: str, dst: str, max_hops: int = 4) -> list[tuple[PoolEdge, ...]]:
    """All simple src->dst paths with at most ``max_hops`` edges.

    Ordered by hop count, then lexicographically by edge keys.
    """
    if src == dst:
        raise SrcEqualsDst(f"src and dst are both {src}")
    if not 1 <= max_hops:
        raise ValueError("max_hops must be >= 1")
    out = []

    def walk(node, visited, acc):
        for e in graph.out_edges(node):
            if e.token_out == dst:
                out.append(tuple(acc + [e]))
            elif e.token_out not in visited and len(acc) + 1 < max_hops:
                visited.add(e.token_out)
                walk(e.token_out, visited, acc + [e])
                visited.discard(e.token_out)

    if src in graph.adjacency:
        walk(src, {src}, [])
    out.sort(key=lambda p: (len(p), tuple(e.key for e in p)))
    return out


def token_paths(graph: DexGraph, src: str, dst: str, max_hops: int = 4) -> list[tuple[str, ...]]:
    """Simple token sequences src..dst with at most ``max_hops`` hops."""
    if src == dst:
        raise SrcEqualsDst(f"src and dst are both {src}")
    out = []
    stack = [(src, (src,))]
    while stack:
        node, seq = stack.pop()
        for nb in graph.neighbors.get(node, ()):
            if nb == dst:
                out.append(seq + (nb,))
            elif nb not in seq and len(seq) < max_hops:
                stack.append((nb, seq + (nb,)))
    out.sort(key=lambda s: (len(s), s))
    return out


def cheapest_paths(graph: DexGraph, weights: Mapping[PoolEdge, EdgeWeight | float], src: str, dst: str,
                   max_hops: int = 4) -> Iterator[tuple[float, tuple[PoolEdge, ...]]]:
    """Lazily yield simple paths in ascending total cost, ties by edge keys."""
    cost = _costs(weights)
    heap = []
    tables = []
    for seq in token_paths(graph, src, dst, max_hops):
        options = []
        for a, b in zip(seq, seq[1:]):
            opts = sorted((cost[e], e.key, e) for e in graph.parallel(a, b) if math.isfinite(cost[e]))
            if not opts:
                break
            options.append(opts)
        else:
            t = len(tables)
            tables.append(options)
            idx = (0,) * len(options)
            heapq.heappush(heap, (sum(o[0][0] for o in options), tuple(o[0][1] for o in options), t, idx))
    seen = set()
    while heap:
        total, keys, t, idx = heapq.heappop(heap)
        options = tables[t]
        yield total, tuple(options[p][i][2] for p, i in enumerate(idx))
        for p in range(len(options)):
            if idx[p] + 1 < len(options[p]):
                nxt = idx[:p] + (idx[p] + 1,) + idx[p + 1:]
                if (t, nxt) in seen:
                    continue
                seen.add((t, nxt))
                heapq.heappush(heap, (sum(options[q][i][0] for q, i in enumerate(nxt)),
                                      tuple(options[q][i][1] for q, i in enumerate(nxt)), t, nxt))


def hops_to(graph: DexGraph, dst: str) -> dict[str, int]:
    """Fewest hops from every token to ``dst`` (reverse BFS)."""
    rev: dict[str, set[str]] = {}
    for e in graph.edges:
        rev.setdefault(e.token_out, set()).add(e.token_in)
    dist = {dst: 0}
    q = deque([dst])
    while q:
        v = q.popleft()
        for u in sorted(rev.get(v, ())):
            if u not in dist:
                dist[u] = dist[v] + 1
                q.append(u)
    return dist

