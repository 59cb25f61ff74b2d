import math
import random

import pytest
from hypothesis import given, strategies as st

from hybridroute.amm import Token, UniV2Pool, UniV3Pool
from hybridroute.bench.generate import generate_instance
from hybridroute.errors import InfeasiblePath, InvalidVector, NegativeTheta, UnknownVenue
from hybridroute.graph import PoolEdge, build_graph, enumerate_paths
from hybridroute.instance import Instance, Order
from hybridroute.objectives import (Evaluator, GasModel, ObjectiveVector, RiskParams, RouteGenome, ScenarioSet, cvar,
                                    default_theta, dominates, evaluate_gas, evaluate_surplus, evaluate_vector,
                                    scalarize, simulate)


def two_pool_instance(q=10.0, gas=30.0, fee=0.0):
    toks = (Token("A"), Token("B"))
    pools = (UniV2Pool("p1", "A", "B", 1000.0, 1000.0, fee), UniV2Pool("p2", "A", "B", 1000.0, 1000.0, fee))
    return Instance("two", toks, pools, Order("A", "B", q), gas)


def edge(pid, a="A", b="B"):
    return PoolEdge(pid, a, b)


def genome(*pairs):
    return RouteGenome(tuple((edge(p),) for p, _ in pairs), tuple(w for _, w in pairs))


# surplus ---------------------------------------------------------------------


def test_surplus_single_path():
    inst = two_pool_instance()
    s = evaluate_surplus(genome(("p1", 1.0)), inst.pool_map, inst)
    assert s == pytest.approx(1000 * 10 / 1010 - 10, rel=1e-12)
    assert s == pytest.approx(-0.09901, abs=1e-5)


def test_surplus_zero_order():
    inst = two_pool_instance(q=0.0)
    assert evaluate_surplus(genome(("p1", 1.0)), inst.pool_map, inst) == 0.0
    v = evaluate_vector(genome(("p1", 1.0)), inst)
    assert v.S == 0.0 and v.Sigma == 0.0
    assert v.G > 0
    assert v.R == pytest.approx(0.05 * 2)


def test_surplus_split():
    inst = two_pool_instance()
    split = evaluate_surplus(genome(("p1", 0.5), ("p2", 0.5)), inst.pool_map, inst)
    assert split == pytest.approx(2 * 1000 * 5 / 1005 - 10, rel=1e-12)
    assert split == pytest.approx(-0.04975, abs=1e-5)
    assert split > evaluate_surplus(genome(("p1", 1.0)), inst.pool_map, inst)


def test_shared_pool_sees_earlier_path():
    inst = two_pool_instance()
    g = genome(("p1", 0.5), ("p1", 0.5))
    # the second half trades against the moved pool: same as one 10-unit swap
    assert evaluate_surplus(g, inst.pool_map, inst) == pytest.approx(1000 * 10 / 1010 - 10, rel=1e-12)
    assert Evaluator(inst).surplus(g) == pytest.approx(1000 * 10 / 1010 - 10, rel=1e-12)


def test_reference_prices_convert_to_eth():
    toks = (Token("A", eth_price=2.0), Token("B", eth_price=0.5))
    inst = Instance("px", toks, (UniV2Pool("p1", "A", "B", 1000.0, 4000.0, 0.0),), Order("A", "B", 1.0))
    out = 4000 * 1 / 1001
    assert Evaluator(inst).surplus(genome(("p1", 1.0))) == pytest.approx(out * 0.5 - 2.0)


def test_token_mismatch_raises():
    inst = two_pool_instance()
    bad = RouteGenome(((edge("p1", "B", "A"),),), (1.0,))
    with pytest.raises(InfeasiblePath):
        evaluate_surplus(bad, inst.pool_map, inst)
    with pytest.raises(InvalidVector):
        genome(("p1", 0.7), ("p2", 0.7)).check("A", "B")


def test_evaluator_matches_plain_simulation_on_generated_instances():
    rng = random.Random(4)
    for seed in range(1, 6):
        inst = generate_instance("medium_high_mixed_medium", seed)
        ev = Evaluator(inst)
        graph = build_graph(inst.pools)
        paths = enumerate_paths(graph, inst.order.src, inst.order.dst, 3)
        for _ in range(40):
            k = rng.randint(1, 3)
            ps = tuple(rng.choice(paths) for _ in range(k))
            raw = [rng.random() for _ in range(k)]
            g = RouteGenome(ps, tuple(x / sum(raw) for x in raw))
            ref = simulate(g, inst.pool_map, inst.order.quantity).out
            assert ev.surplus(g) == pytest.approx(ev.surplus_from_out(ref), rel=1e-12, abs=1e-12)
            for i, m in enumerate(ev.scenario_markets[:3]):
                assert ev._run(g, i)[0] == pytest.approx(simulate(g, m, inst.order.quantity).out, rel=1e-12)


# gas -------------------------------------------------------------------------


def test_gas_examples():
    two_hops = RouteGenome(((edge("a", "A", "C"), edge("b", "C", "B")),), (1.0,))
    gm = GasModel(30.0)
    assert gm.units(two_hops) == pytest.approx(418_000)
    assert evaluate_gas(two_hops, gm) == pytest.approx(0.01254)
    v3 = RouteGenome(((PoolEdge("v", "A", "B", UniV3Pool.kind),),), (1.0,))
    assert GasModel(10.0).units(v3) == pytest.approx(308_000)
    assert evaluate_gas(v3, GasModel(10.0)) == pytest.approx(0.00308)
    assert evaluate_gas(v3, GasModel(0.0)) == 0.0


def test_gas_increases_with_hops_and_price():
    one = RouteGenome(((edge("a", "A", "B"),),), (1.0,))
    two = RouteGenome(((edge("a", "A", "C"), edge("b", "C", "B")),), (1.0,))
    assert GasModel(30.0).cost_eth(two) > GasModel(30.0).cost_eth(one)
    assert GasModel(31.0).cost_eth(one) > GasModel(30.0).cost_eth(one)


def test_unknown_venue():
    with pytest.raises(UnknownVenue):
        GasModel(30.0, per_hop={}).units(genome(("p1", 1.0)))


# dispersion ------------------------------------------------------------------


def test_cvar_examples():
    losses = [0.01 * i for i in range(19)] + [0.7]
    assert cvar(losses, 0.95) == pytest.approx(0.7)
    assert cvar([-0.1, -0.3, -0.2], 0.95) == 0.0
    assert cvar([0.0] * 10) == 0.0


@given(st.lists(st.floats(-10, 10), min_size=1, max_size=60))
def test_cvar_monotone_in_alpha(losses):
    assert cvar(losses, 0.99) >= cvar(losses, 0.90) - 1e-12


def test_identity_scenarios_give_zero_dispersion():
    inst = two_pool_instance()
    ev = Evaluator(inst, scenarios=ScenarioSet.identity(["p1", "p2"], 10))
    assert ev.dispersion(genome(("p1", 0.5), ("p2", 0.5))) == 0.0


def test_dispersion_is_cvar_of_scenario_losses():
    inst = generate_instance("small_medium_mixed_medium", 3)
    ev = Evaluator(inst, n_scenarios=20)
    g = RouteGenome.single(enumerate_paths(build_graph(inst.pools), inst.order.src, inst.order.dst, 2)[0])
    base = ev.surplus(g)
    losses = sorted((base - ev.surplus(g, m) for m in ev.scenario_markets), reverse=True)
    assert ev.dispersion(g) == pytest.approx(max(0.0, losses[0]), rel=1e-12, abs=1e-15)


def test_scenarios_are_seeded():
    a = ScenarioSet.generate(["x", "y"], 12, seed=5)
    b = ScenarioSet.generate(["y", "x"], 12, seed=5)
    assert a.scenarios == b.scenarios
    assert all(p > 0 and d > 0 for sc in a.scenarios for p, d in sc.values())


# risk ------------------------------------------------------------------------


def test_risk_example():
    # one hop at utilisation 0.1 on a 100-unit reserve
    toks = (Token("A"), Token("B"))
    inst = Instance("r", toks, (UniV2Pool("p1", "A", "B", 100.0, 100.0, 0.0),), Order("A", "B", 10.0))
    ev = Evaluator(inst, risk=RiskParams(0.1, 0.05, 0.05))
    assert ev.risk_score(genome(("p1", 1.0))) == pytest.approx(0.1 * 0.01 + 0.05 * 2)


def test_risk_sandwich_term_is_quadratic():
    toks = (Token("A"), Token("B"))
    pool = (UniV2Pool("p1", "A", "B", 1000.0, 1000.0, 0.0),)
    r = RiskParams(1.0, 0.0, 0.0)
    small = Evaluator(Instance("r", toks, pool, Order("A", "B", 10.0)), risk=r).risk_score(genome(("p1", 1.0)))
    big = Evaluator(Instance("r", toks, pool, Order("A", "B", 20.0)), risk=r).risk_score(genome(("p1", 1.0)))
    assert big == pytest.approx(4 * small)


def test_risk_counts_stressed_hops():
    toks = (Token("A"), Token("B"))
    inst = Instance("r", toks, (UniV2Pool("p1", "A", "B", 10.0, 10.0, 0.0),), Order("A", "B", 6.0))
    ev = Evaluator(inst, risk=RiskParams(0.0, 0.0, 1.0))
    assert ev.risk_score(genome(("p1", 1.0))) == 1.0


# vector, dominance, scalarisation -------------------------------------------


def test_vector_composes_parts():
    inst = generate_instance("small_low_homo_low", 1)
    ev = Evaluator(inst)
    paths = enumerate_paths(build_graph(inst.pools), inst.order.src, inst.order.dst, 4)
    for p in paths[:5]:
        g = RouteGenome.single(p)
        v = Evaluator(inst).evaluate(g)
        assert v.S == pytest.approx(evaluate_surplus(g, inst.pool_map, inst), rel=1e-12, abs=1e-15)
        assert v.G == pytest.approx(evaluate_gas(g, GasModel(inst.gas_price_gwei)))
        assert v.Sigma == pytest.approx(ev.dispersion(g), abs=1e-15)
        assert v.R == pytest.approx(ev.risk_score(g))
        assert v.net == pytest.approx(v.S - v.G)
        assert v.G >= 0 and v.Sigma >= 0 and v.R >= 0


def test_evaluator_cache_counts_unique_genomes():
    inst = two_pool_instance()
    ev = Evaluator(inst)
    g = genome(("p1", 1.0))
    ev.evaluate(g)
    ev.evaluate(g)
    assert ev.evaluations == 1


def test_dominance_examples():
    assert dominates(ObjectiveVector(2, 1, 0, 0), ObjectiveVector(1, 2, 0, 0))
    assert not dominates(ObjectiveVector(2, 1, 0, 0), ObjectiveVector(2, 1, 0, 0))
    assert not dominates(ObjectiveVector(2, 1, 0, 0), ObjectiveVector(1, 0.5, 0, 0))
    with pytest.raises(InvalidVector):
        dominates(ObjectiveVector(math.nan, 0, 0, 0), ObjectiveVector(0, 0, 0, 0))


vectors = st.builds(ObjectiveVector, *(st.integers(0, 3).map(float) for _ in range(4)))


@given(vectors, vectors, vectors)
def test_dominance_is_strict_partial_order(a, b, c):
    assert not dominates(a, a)
    assert not (dominates(a, b) and dominates(b, a))
    if dominates(a, b) and dominates(b, c):
        assert dominates(a, c)


def test_scalarize_examples():
    v = ObjectiveVector(2.0, 1.0, 0.3, 0.4)
    assert scalarize(v, (1, 0, 0, 0)) == 2.0
    assert scalarize(v, (0.5, 0.5, 0, 0)) == pytest.approx(0.5)
    scaled = ObjectiveVector(6.0, 3.0, 0.9, 1.2)
    th = default_theta("high")
    assert scalarize(scaled, th) == pytest.approx(3 * scalarize(v, th))
    with pytest.raises(NegativeTheta):
        scalarize(v, (1.1, -0.1, 0, 0))


def test_default_theta_normalised():
    for regime in ("low", "medium", "high"):
        th = default_theta(regime)
        assert sum(th) == pytest.approx(1.0)
    assert default_theta("high")[1] > default_theta("low")[1]


# split-flow optimality -------------------------------------------------------


def test_split_surplus_peaks_at_half():
    inst = two_pool_instance(q=50.0)
    ev = Evaluator(inst)
    grid = [i / 100 for i in range(1, 100)]
    s = [ev.surplus(genome(("p1", w), ("p2", 1 - w))) for w in grid]
    assert grid[s.index(max(s))] == pytest.approx(0.5)


def test_marginal_surplus_equalised_at_grid_optimum():
    toks = (Token("A"), Token("B"))
    pools = (UniV2Pool("p1", "A", "B", 1000.0, 1000.0, 0.003), UniV2Pool("p2", "A", "B", 2000.0, 2000.0, 0.003))
    inst = Instance("split", toks, pools, Order("A", "B", 100.0))
    ev = Evaluator(inst)
    grid = [i / 10000 for i in range(1, 10000)]
    best = max(grid, key=lambda w: ev.surplus(genome(("p1", w), ("p2", 1 - w))))
    q, h = 100.0, 1e-4

    def out(pool, amt):
        return pool.swap("A", "B", amt).amount_out

    m1 = (out(pools[0], best * q + h) - out(pools[0], best * q - h)) / (2 * h)
    m2 = (out(pools[1], (1 - best) * q + h) - out(pools[1], (1 - best) * q - h)) / (2 * h)
    assert m1 == pytest.approx(m2, rel=1e-3)


def test_zero_dispersion_scenarios_leave_only_s_g_r():
    inst = two_pool_instance()
    ev = Evaluator(inst, scenarios=ScenarioSet.identity(["p1", "p2"], 5))
    v = ev.evaluate(genome(("p1", 0.5), ("p2", 0.5)))
    th = default_theta("medium")
    assert scalarize(v, th) == pytest.approx(th[0] * v.S - th[1] * v.G - th[3] * v.R)
