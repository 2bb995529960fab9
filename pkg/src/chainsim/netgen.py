"""Synthetic economy generation and forward simulation.

Builds firm populations with random parameters, wires them into a
transaction network (uniform random or preferential attachment), draws
a GDP path, and rolls the revenue/profit/equity recursion forward with
decisions taken from the investment game each period.

Initial capital and labor are placed at each firm's profit-maximizing
steady state (then perturbed), which keeps best responses interior and
the economy stationary instead of exploding against the decision
bounds. Applied decisions carry lognormal implementation jitter; the
revenue identity is evaluated at the realized inputs, so noiseless
panels still satisfy it exactly, while capital and labor paths gain
the independent variation that makes the elasticities identifiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calibration import FirmSeries, PanelSeries
from .econ import (
    Economy,
    FirmParameters,
    FirmState,
    InvestmentDecision,
    MacroSeries,
    TransactionNetwork,
    ZERO_REVENUE,
    REVENUE_FLOOR_FRAC,
    customer_terms_sum,
    equity_end_of_term,
    floor_revenue,
    material_cost,
    production_ratio,
    profit,
    revenue_next,
)
from .game import GameConfig, PayoffContext, _firm_seed, best_response

EDGE_MODELS = ("random", "scale-free")


@dataclass(frozen=True)
class GeneratorConfig:
    """Everything that defines a synthetic economy draw."""

    n_firms: int = 100
    horizon: int = 11
    edge_model: str = "random"
    mean_out_degree: float = 2.0
    alpha_range: tuple[float, float] = (0.1, 0.6)
    beta_range: tuple[float, float] = (0.1, 0.6)
    elasticity_sum_max: float = 0.95   # redraw while alpha + beta >= this
    strength_range: tuple[float, float] = (0.0, 0.3)
    cost_coeff_range: tuple[float, float] = (0.1, 0.5)
    interest_rate: float = 0.05
    noise_sigma: float = 0.02
    revenue_range: tuple[float, float] = (50.0, 150.0)
    equity_frac_range: tuple[float, float] = (0.05, 0.4)
    start_jitter: float = 0.2      # lognormal spread of initial K, L
    decision_jitter: float = 0.8   # lognormal implementation noise
    gdp_start: float = 100.0
    gdp_growth: float = 0.02
    gdp_volatility: float = 0.01
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_firms < 1:
            raise ValueError("n_firms must be >= 1")
        if self.horizon < 3:
            raise ValueError("horizon must be >= 3")
        if self.edge_model not in EDGE_MODELS:
            raise ValueError(f"edge_model must be one of {EDGE_MODELS}")
        if self.gdp_start <= 0.0:
            raise ValueError("gdp_start must be > 0")


def firm_ids(n: int) -> tuple[str, ...]:
    width = max(4, len(str(n - 1)))
    return tuple(f"F{i:0{width}d}" for i in range(n))


def _draw_elasticities(config: GeneratorConfig, rng) -> tuple[float, float]:
    while True:
        a = rng.uniform(*config.alpha_range)
        b = rng.uniform(*config.beta_range)
        if a + b < config.elasticity_sum_max:
            return float(a), float(b)


def steady_state_inputs(params: FirmParameters, revenue: float) -> tuple[float, float]:
    """Capital and labor at which the best response reproduces itself.

    Solves the stationary first-order condition by bisection on log
    capital; the equation is monotone, so the root is unique. Needs
    positive elasticities and interest rate.
    """
    a, b, r = params.alpha, params.beta, params.interest_rate
    A = params.cost_coeff
    if a <= 0.0 or b <= 0.0 or r <= 0.0:
        raise ValueError("steady state needs alpha, beta, interest_rate > 0")
    if a + b >= 1.0:
        raise ValueError("steady state needs alpha + beta < 1")
    c = b * r / a
    s = a + b

    def gap(ln_k: float) -> float:
        k = math.exp(ln_k)
        return (r * k ** (1.0 - s) / a + A * c ** b
                - revenue * k ** (-s))

    lo, hi = math.log(1e-9), math.log(1e12)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gap(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    k = math.exp(0.5 * (lo + hi))
    return k, c * k


def generate_params(config: GeneratorConfig, rng) -> dict[str, FirmParameters]:
    out = {}
    for fid in firm_ids(config.n_firms):
        a, b = _draw_elasticities(config, rng)
        out[fid] = FirmParameters(
            alpha=a,
            beta=b,
            cost_coeff=float(rng.uniform(*config.cost_coeff_range)),
            interest_rate=config.interest_rate,
            noise_sigma=config.noise_sigma,
        )
    return out


def generate_network(config: GeneratorConfig, rng) -> TransactionNetwork:
    """Directed supplier->customer network under the configured model.

    random: every ordered pair gets an edge independently with
    probability mean_out_degree/(n-1). scale-free: firms join one at a
    time and pick customers among earlier firms preferentially by how
    many suppliers those firms already have.
    """
    ids = firm_ids(config.n_firms)
    n = config.n_firms
    triples = []
    if config.edge_model == "random":
        if n > 1:
            p = min(1.0, config.mean_out_degree / (n - 1))
            hit = rng.random((n, n)) < p
            np.fill_diagonal(hit, False)
            rows, cols = np.nonzero(hit)
            ks = rng.uniform(*config.strength_range, size=rows.size)
            triples = [(ids[i], ids[j], float(k))
                       for i, j, k in zip(rows, cols, ks)]
    else:  # scale-free
        m = max(1, round(config.mean_out_degree))
        in_deg = np.zeros(n)
        for i in range(1, n):
            n_pick = min(i, m)
            weights = in_deg[:i] + 1.0
            targets = rng.choice(i, size=n_pick, replace=False,
                                 p=weights / weights.sum())
            for j in sorted(int(t) for t in targets):
                triples.append((ids[i], ids[j],
                                float(rng.uniform(*config.strength_range))))
                in_deg[j] += 1.0
    return TransactionNetwork(ids, triples)


def generate_gdp(config: GeneratorConfig, rng) -> MacroSeries:
    """GDP path with multiplicative growth shocks, kept positive.

    A draw that would push GDP non-positive is rejected and redrawn.
    """
    values = [config.gdp_start]
    for _ in range(config.horizon - 1):
        while True:
            growth = 1.0 + config.gdp_growth + config.gdp_volatility * rng.normal()
            nxt = values[-1] * growth
            if nxt > 0.0:
                break
        values.append(nxt)
    return MacroSeries(gdp=tuple(values))


def generate_states(config: GeneratorConfig, params: dict[str, FirmParameters],
                    rng) -> dict[str, FirmState]:
    states = {}
    for fid in sorted(params):
        p = params[fid]
        revenue = float(rng.uniform(*config.revenue_range))
        k_star, l_star = steady_state_inputs(p, revenue)
        capital = k_star * math.exp(config.start_jitter * rng.normal())
        labor = l_star * math.exp(config.start_jitter * rng.normal())
        equity = float(rng.uniform(*config.equity_frac_range)) * revenue
        states[fid] = FirmState(
            revenue=revenue,
            prev_revenue=revenue / (1.0 + config.gdp_growth),
            capital=capital,
            labor=labor,
            equity=equity,
        )
    return states


def generate_economy(config: GeneratorConfig
                     ) -> tuple[Economy, TransactionNetwork, MacroSeries]:
    """Draw parameters, wiring, GDP and initial books for one economy.

    Independent substreams per component, all derived from the config
    seed: the same config reproduces the same economy bit for bit.
    """
    params = generate_params(config, np.random.default_rng([config.seed, 1]))
    network = generate_network(config, np.random.default_rng([config.seed, 2]))
    macro = generate_gdp(config, np.random.default_rng([config.seed, 3]))
    states = generate_states(config, params,
                             np.random.default_rng([config.seed, 4]))
    return Economy(params=params, states=states), network, macro


@dataclass(frozen=True)
class SimulationResult:
    """Forward-simulation output: the panel plus bookkeeping."""

    panel: PanelSeries
    floor_events: tuple[tuple[str, int], ...]
    final_states: dict[str, FirmState] = field(repr=False, default_factory=dict)


def forward_simulate(economy: Economy, network: TransactionNetwork,
                     macro: MacroSeries, *,
                     game_config: GameConfig = GameConfig(),
                     noise_on: bool = True,
                     decision_jitter: float = 0.0,
                     seed: int = 0,
                     policy: str = ZERO_REVENUE,
                     floor_frac: float = REVENUE_FLOOR_FRAC) -> SimulationResult:
    """Roll the economy forward over the macro series' horizon.

    Each period every firm best-responds to the books on record, the
    applied inputs get optional lognormal jitter, revenue follows the
    growth identity (with the idiosyncratic shock when noise_on), and
    equity rolls by the term's profit. All firms advance on a period
    barrier, so the result does not depend on firm iteration order.
    A revenue outcome at or below zero is floored and flagged.
    """
    T = len(macro)
    ids = economy.firm_ids
    n = len(ids)
    noise_rng = np.random.default_rng([seed, 101])
    jitter_rng = np.random.default_rng([seed, 102])
    states = dict(economy.states)
    rows_r = {f: [] for f in ids}
    rows_k = {f: [] for f in ids}
    rows_l = {f: [] for f in ids}
    rows_e = {f: [] for f in ids}
    floor_events: list[tuple[str, int]] = []

    for t in range(T - 1):
        for f in ids:
            st = states[f]
            rows_r[f].append(st.revenue)
            rows_k[f].append(st.capital)
            rows_l[f].append(st.labor)
            rows_e[f].append(st.equity)
        # interactions use the growth already on the books; before the
        # first recorded ratio exists, next period's serves as a stand-in
        g_lag = macro.ratio(t) if t >= 1 else macro.ratio(1)
        shocks = noise_rng.normal(size=n) if noise_on else np.zeros(n)
        if decision_jitter > 0.0:
            jit = jitter_rng.normal(size=(n, 2))
        else:
            jit = np.zeros((n, 2))
        fresh = {}
        for idx, f in enumerate(ids):
            st = states[f]
            p = economy.params[f]
            cts = customer_terms_sum(f, network, states, g_lag, policy)
            ctx = PayoffContext(st.revenue, st.capital, st.labor, cts, p)
            dec = best_response(ctx, game_config, seed=_firm_seed(seed, f))
            applied = InvestmentDecision(
                dec.capital * math.exp(decision_jitter * jit[idx, 0]),
                dec.labor * math.exp(decision_jitter * jit[idx, 1]),
            )
            growth = production_ratio(applied, st, p.alpha, p.beta)
            raw = revenue_next(st.revenue, growth, cts,
                               p.noise_sigma * shocks[idx])
            rev, floored = floor_revenue(raw, st.revenue, floor_frac)
            if floored:
                floor_events.append((f, t + 1))
            cost = material_cost(p.cost_coeff, applied, p.alpha, p.beta)
            term_profit = profit(rev, cost, p.interest_rate, applied)
            fresh[f] = FirmState(
                revenue=rev,
                prev_revenue=st.revenue,
                capital=applied.capital,
                labor=applied.labor,
                equity=equity_end_of_term(st.equity, term_profit),
            )
        states = fresh

    for f in ids:
        st = states[f]
        rows_r[f].append(st.revenue)
        rows_k[f].append(st.capital)
        rows_l[f].append(st.labor)
        rows_e[f].append(st.equity)

    firms = {f: FirmSeries(np.array(rows_r[f]), np.array(rows_k[f]),
                           np.array(rows_l[f])) for f in ids}
    equity = {f: np.array(rows_e[f]) for f in ids}
    panel = PanelSeries(firms=firms, gdp=np.array(macro.gdp),
                        periods=macro.periods, equity=equity)
    return SimulationResult(panel=panel, floor_events=tuple(floor_events),
                            final_states=states)


def simulate_economy(config: GeneratorConfig, *, noise_on: bool = True,
                     game_config: GameConfig = GameConfig()
                     ) -> tuple[Economy, TransactionNetwork, MacroSeries,
                                SimulationResult]:
    """Generate an economy and simulate it over its horizon."""
    economy, network, macro = generate_economy(config)
    result = forward_simulate(
        economy, network, macro,
        game_config=game_config,
        noise_on=noise_on,
        decision_jitter=config.decision_jitter,
        seed=config.seed,
    )
    return economy, network, macro, result


def economy_from_panel(panel: PanelSeries,
                       params: dict[str, FirmParameters],
                       position: int = -1) -> Economy:
    """Firm states read off a panel row, ready for a cascade.

    position indexes the panel periods (negative counts from the end)
    and must leave one earlier period for the growth ratio. The panel
    must carry equity.
    """
    T = panel.n_periods
    pos = position % T
    if pos < 1:
        raise ValueError("position must leave a previous period for ratios")
    if panel.equity is None:
        raise ValueError("panel carries no equity; cascade needs beginning equity")
    missing = [f for f in panel.firm_ids if f not in params]
    if missing:
        raise ValueError(f"no parameters for firms {missing[:5]}")
    states = {}
    for fid in panel.firm_ids:
        s = panel.firm(fid)
        states[fid] = FirmState(
            revenue=float(s.revenue[pos]),
            prev_revenue=float(s.revenue[pos - 1]),
            capital=float(s.capital[pos]),
            labor=float(s.labor[pos]),
            equity=float(panel.equity[fid][pos]),
        )
    return Economy(params={f: params[f] for f in panel.firm_ids},
                   states=states)
