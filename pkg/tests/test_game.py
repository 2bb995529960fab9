"""Best-response solvers and the joint fixed point.

The dense-grid oracle re-derives the payoff surface from the raw
bookkeeping (output coefficient times Cobb-Douglas level, minus capital
charge and wage bill) with numpy broadcasting, then cross-checks random
grid points against expected_payoff so the two derivations cannot
drift apart.
"""

import numpy as np
import pytest

from chainsim import (
    Economy,
    FirmParameters,
    FirmState,
    GameConfig,
    InvestmentDecision,
    NoConcaveOptimum,
    PayoffContext,
    TransactionNetwork,
    best_response,
    best_response_closed_form,
    best_response_ga,
    expected_payoff,
    nash_solve,
    steady_state_inputs,
)
from chainsim.game import _firm_seed

WIDE = GameConfig(decision_bounds=(1e-4, 1e4))


def ctx_of(revenue=100.0, capital=1.0, labor=1.0, customer_terms=0.0,
           alpha=0.3, beta=0.3, cost_coeff=0.5, interest_rate=0.05):
    p = FirmParameters(alpha=alpha, beta=beta, cost_coeff=cost_coeff,
                       interest_rate=interest_rate, noise_sigma=0.0)
    return PayoffContext(revenue=revenue, capital=capital, labor=labor,
                         customer_terms=customer_terms, params=p)


def grid_payoff(ctx, config, n=400):
    """Payoff on an n-by-n log grid over the decision box."""
    p = ctx.params
    lo, hi = config.decision_bounds
    K = np.exp(np.linspace(np.log(lo * ctx.capital),
                           np.log(hi * ctx.capital), n))
    L = np.exp(np.linspace(np.log(lo * ctx.labor),
                           np.log(hi * ctx.labor), n))
    B = ctx.revenue / (ctx.capital ** p.alpha * ctx.labor ** p.beta) - p.cost_coeff
    level = np.outer(K ** p.alpha, L ** p.beta)
    pay = (B * level - p.interest_rate * K[:, None] - L[None, :]
           + ctx.revenue * ctx.customer_terms)
    return K, L, pay


def grid_argmax(ctx, config, n=400):
    K, L, pay = grid_payoff(ctx, config, n)
    flat = int(np.argmax(pay))  # first hit = smallest K then smallest L
    i, j = divmod(flat, n)
    return K[i], L[j], pay[i, j], np.log(K[1] / K[0]), np.log(L[1] / L[0])


class TestExpectedPayoff:
    def test_hold_current_inputs(self):
        ctx = ctx_of()
        dec = InvestmentDecision(capital=1.0, labor=1.0)
        assert expected_payoff(ctx, dec) == pytest.approx(98.45)

    def test_double_capital(self):
        ctx = ctx_of()
        dec = InvestmentDecision(capital=2.0, labor=1.0)
        expected = 100.0 * 2 ** 0.3 - 0.5 * 2 ** 0.3 - 0.1 - 1.0
        assert expected_payoff(ctx, dec) == pytest.approx(expected)

    def test_no_production_no_cost(self):
        # all ratios 1, zero cost and interest: revenue minus wage bill
        ctx = ctx_of(cost_coeff=0.0, interest_rate=0.0, alpha=0.0, beta=0.0,
                     labor=30.0)
        dec = InvestmentDecision(capital=1.0, labor=30.0)
        assert expected_payoff(ctx, dec) == pytest.approx(70.0)

    def test_customer_terms_shift_revenue(self):
        ctx = ctx_of(customer_terms=0.025, alpha=0.0, beta=0.0,
                     cost_coeff=0.0, interest_rate=0.0)
        dec = InvestmentDecision(capital=1.0, labor=1.0)
        assert expected_payoff(ctx, dec) == pytest.approx(100.0 * 1.025 - 1.0)


class TestClosedForm:
    def test_capital_only_instance(self):
        # maximize K^0.5 - 0.05 K: optimum at K = 100
        ctx = ctx_of(revenue=1.5, cost_coeff=0.5, alpha=0.5, beta=0.0)
        dec = best_response_closed_form(ctx, WIDE)
        assert dec.capital == pytest.approx(100.0, rel=1e-9)
        assert dec.labor == pytest.approx(1e-4)  # pure cost, pinned low

    def test_labor_only_instance(self):
        # maximize L^0.5 - L: optimum at L = 0.25
        ctx = ctx_of(revenue=1.5, cost_coeff=0.5, alpha=0.0, beta=0.5)
        dec = best_response_closed_form(ctx, WIDE)
        assert dec.labor == pytest.approx(0.25, rel=1e-9)
        assert dec.capital == pytest.approx(1e-4)

    def test_rejects_nonconcave_elasticities(self):
        with pytest.raises(NoConcaveOptimum):
            best_response_closed_form(ctx_of(alpha=0.6, beta=0.5))

    def test_rejects_cost_dominated_firm(self):
        # cost coefficient above the firm's revenue level: B <= 0
        with pytest.raises(NoConcaveOptimum):
            best_response_closed_form(ctx_of(revenue=0.4, cost_coeff=0.5))

    def test_interior_matches_grid(self):
        rng = np.random.default_rng(7)
        config = GameConfig()
        for _ in range(5):
            a = rng.uniform(0.15, 0.5)
            b = rng.uniform(0.15, min(0.9 - a, 0.5))
            ctx = ctx_of(revenue=rng.uniform(50, 150),
                         capital=rng.uniform(50, 400),
                         labor=rng.uniform(20, 200),
                         alpha=a, beta=b,
                         cost_coeff=rng.uniform(0.1, 0.5),
                         interest_rate=0.05)
            dec = best_response_closed_form(ctx, config)
            gk, gl, gpay, dk, dl = grid_argmax(ctx, config)
            assert abs(np.log(dec.capital / gk)) <= dk + 1e-12
            assert abs(np.log(dec.labor / gl)) <= dl + 1e-12
            assert expected_payoff(ctx, dec) >= gpay - 1e-9

    def test_grid_oracle_agrees_with_payoff_function(self):
        ctx = ctx_of(revenue=120.0, capital=80.0, labor=40.0,
                     customer_terms=0.01)
        config = GameConfig()
        K, L, pay = grid_payoff(ctx, config, n=50)
        rng = np.random.default_rng(3)
        for _ in range(20):
            i = int(rng.integers(50))
            j = int(rng.integers(50))
            dec = InvestmentDecision(capital=float(K[i]), labor=float(L[j]))
            assert pay[i, j] == pytest.approx(expected_payoff(ctx, dec),
                                              rel=1e-12, abs=1e-9)

    def test_degenerate_box_returns_the_point(self):
        pin = GameConfig(decision_bounds=(1.0, 1.0))
        dec = best_response_closed_form(ctx_of(capital=3.0, labor=2.0), pin)
        assert (dec.capital, dec.labor) == (3.0, 2.0)


class TestGeneticSearch:
    def test_tracks_closed_form(self):
        ctx = ctx_of(revenue=120.0, capital=80.0, labor=40.0)
        config = GameConfig()
        exact = best_response_closed_form(ctx, config)
        ga = best_response_ga(ctx, config, seed=5)
        assert ga.capital == pytest.approx(exact.capital, rel=0.01)
        assert ga.labor == pytest.approx(exact.labor, rel=0.01)
        best = expected_payoff(ctx, exact)
        assert expected_payoff(ctx, ga) >= best - 0.01 * abs(best)

    def test_deterministic_per_seed(self):
        ctx = ctx_of(revenue=120.0, capital=80.0, labor=40.0)
        a = best_response_ga(ctx, seed=9)
        b = best_response_ga(ctx, seed=9)
        assert (a.capital, a.labor) == (b.capital, b.labor)
        c = best_response_ga(ctx, seed=10)
        assert (a.capital, a.labor) != (c.capital, c.labor)

    def test_never_worse_than_incumbent(self):
        rng = np.random.default_rng(21)
        for trial in range(6):
            # includes increasing-returns instances the closed form rejects
            ctx = ctx_of(revenue=rng.uniform(1, 200),
                         capital=rng.uniform(0.5, 300),
                         labor=rng.uniform(0.5, 300),
                         alpha=rng.uniform(0.0, 0.8),
                         beta=rng.uniform(0.0, 0.8),
                         cost_coeff=rng.uniform(0.0, 2.0),
                         interest_rate=rng.uniform(0.0, 0.2))
            hold = InvestmentDecision(capital=ctx.capital, labor=ctx.labor)
            ga = best_response_ga(ctx, seed=trial)
            assert expected_payoff(ctx, ga) >= expected_payoff(ctx, hold) - 1e-12

    def test_degenerate_box(self):
        pin = GameConfig(decision_bounds=(1.0, 1.0))
        dec = best_response_ga(ctx_of(capital=3.0, labor=2.0), pin, seed=0)
        assert (dec.capital, dec.labor) == (3.0, 2.0)

    def test_dispatcher_prefers_closed_form_but_survives_fallback(self):
        concave = ctx_of(revenue=120.0, capital=80.0, labor=40.0)
        assert best_response(concave, seed=1) == best_response_closed_form(
            concave, GameConfig())
        spiky = ctx_of(alpha=0.7, beta=0.6)  # closed form refuses
        dec = best_response(spiky, seed=1)
        assert dec.capital > 0 and dec.labor > 0


def interior_chain():
    ids = ("A", "B", "C")
    revs = {"A": 100.0, "B": 130.0, "C": 80.0}
    params = {}
    states = {}
    for i, f in enumerate(ids):
        p = FirmParameters(alpha=0.30 + 0.04 * i, beta=0.35 - 0.03 * i,
                           cost_coeff=0.2 + 0.05 * i, interest_rate=0.05,
                           noise_sigma=0.0)
        k, l = steady_state_inputs(p, revs[f])
        params[f] = p
        states[f] = FirmState(revenue=revs[f], prev_revenue=revs[f] / 1.01,
                              capital=k, labor=l, equity=25.0)
    net = TransactionNetwork(firms=ids,
                             edges=(("A", "B", 0.15), ("B", "C", 0.2)))
    return Economy(params=params, states=states), net


class TestNash:
    def test_single_firm_equals_best_response(self):
        eco, _ = (lambda e, n: (e, n))(*interior_chain())
        one = Economy(params={"A": eco.params["A"]},
                      states={"A": eco.states["A"]})
        res = nash_solve(one, TransactionNetwork(firms=("A",)), 1.02)
        st = one.states["A"]
        ctx = PayoffContext(revenue=st.revenue, capital=st.capital,
                            labor=st.labor, customer_terms=0.0,
                            params=one.params["A"])
        expect = best_response(ctx, seed=_firm_seed(0, "A"))
        assert res.converged
        assert res.decisions["A"] == expect

    def test_zero_coupling_decouples(self):
        eco, net = interior_chain()
        loose = net.with_strengths({("A", "B"): 0.0, ("B", "C"): 0.0})
        res = nash_solve(eco, loose, 1.02)
        for f in eco.firm_ids:
            st = eco.states[f]
            ctx = PayoffContext(revenue=st.revenue, capital=st.capital,
                                labor=st.labor, customer_terms=0.0,
                                params=eco.params[f])
            assert res.decisions[f] == best_response(ctx, seed=_firm_seed(0, f))

    def test_fixed_point_self_consistent(self):
        eco, net = interior_chain()
        res = nash_solve(eco, net, 1.02)
        assert res.converged
        # replay each firm's response against the frozen books
        from chainsim import customer_terms_sum
        for f in eco.firm_ids:
            st = eco.states[f]
            cts = customer_terms_sum(f, net, eco.states, 1.02)
            ctx = PayoffContext(revenue=st.revenue, capital=st.capital,
                                labor=st.labor, customer_terms=cts,
                                params=eco.params[f])
            again = best_response(ctx, seed=_firm_seed(0, f))
            assert again.capital == pytest.approx(res.decisions[f].capital,
                                                  rel=1e-9)
            assert again.labor == pytest.approx(res.decisions[f].labor,
                                                rel=1e-9)

    def test_firm_order_does_not_matter(self):
        eco, net = interior_chain()
        flipped = Economy(
            params={f: eco.params[f] for f in reversed(eco.firm_ids)},
            states={f: eco.states[f] for f in reversed(eco.firm_ids)})
        a = nash_solve(eco, net, 1.02)
        b = nash_solve(flipped, net, 1.02)
        assert a.decisions == b.decisions
        assert a.converged == b.converged

    def test_repeat_runs_identical(self):
        eco, net = interior_chain()
        a = nash_solve(eco, net, 1.02, seed=4)
        b = nash_solve(eco, net, 1.02, seed=4)
        assert a.decisions == b.decisions

    def test_refuses_bankrupt_firm(self):
        eco, net = interior_chain()
        eco.mark_bankrupt("B")
        with pytest.raises(ValueError):
            nash_solve(eco, net, 1.02)


def test_firm_seed_is_stable_and_distinct():
    assert _firm_seed(3, "F0001") == _firm_seed(3, "F0001")
    assert _firm_seed(3, "F0001") != _firm_seed(4, "F0001")
    assert _firm_seed(3, "F0001") != _firm_seed(3, "F0002")
    assert 0 <= _firm_seed(123456, "anything") < 2 ** 63
