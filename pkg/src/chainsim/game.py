"""Investment game: each firm picks next-term capital and labor to
maximize next-term profit, holding everyone else's books fixed.

The payoff is next-term profit with the noise term at zero. Decisions
are searched inside a multiplicative box around the firm's current
inputs. A closed form solves the concave case; a seeded genetic
algorithm covers the rest.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np

from .econ import (
    Economy,
    FirmParameters,
    InvestmentDecision,
    TransactionNetwork,
    ZERO_REVENUE,
    customer_terms_sum,
    material_cost,
    profit,
    revenue_next,
)


class NoConcaveOptimum(Exception):
    """Raised when the profit surface has no concave interior optimum."""


@dataclass(frozen=True)
class GameConfig:
    """Knobs for the best-response search.

    decision_bounds are multiplicative: a firm with capital K may pick
    next-term capital in [lower * K, upper * K], same for labor.
    """

    decision_bounds: tuple[float, float] = (0.25, 4.0)
    ga_population: int = 64
    ga_generations: int = 200
    ga_tournament: int = 4
    ga_mutation_scale: float = 0.05   # fraction of the log box width
    ga_mutation_prob: float = 0.25    # per-gene mutation probability
    ga_crossover_prob: float = 0.9
    ga_elite: int = 1
    br_tolerance: float = 1e-9
    br_max_rounds: int = 20

    def __post_init__(self) -> None:
        lo, hi = self.decision_bounds
        if not (0.0 < lo <= hi):
            raise ValueError(f"bad decision_bounds {self.decision_bounds!r}")


@dataclass(frozen=True)
class PayoffContext:
    """Everything a firm needs to price a candidate decision.

    customer_terms is the precomputed sum of interaction terms over the
    firm's customers; it does not depend on the decision.
    """

    revenue: float
    capital: float
    labor: float
    customer_terms: float
    params: FirmParameters


def expected_payoff(ctx: PayoffContext, decision: InvestmentDecision) -> float:
    """Next-term profit of a candidate decision, noise at zero."""
    p = ctx.params
    growth = ((decision.capital / ctx.capital) ** p.alpha
              * (decision.labor / ctx.labor) ** p.beta)
    rev = revenue_next(ctx.revenue, growth, ctx.customer_terms)
    cost = material_cost(p.cost_coeff, decision, p.alpha, p.beta)
    return profit(rev, cost, p.interest_rate, decision)


def _net_output_coeff(ctx: PayoffContext) -> float:
    """Coefficient B in payoff = B*K^a*L^b - r*K - L + const.

    Revenue per unit of current production level, net of material cost.
    """
    p = ctx.params
    level = ctx.capital ** p.alpha * ctx.labor ** p.beta
    return ctx.revenue / level - p.cost_coeff


def _box(ctx: PayoffContext, config: GameConfig):
    lo, hi = config.decision_bounds
    return (lo * ctx.capital, hi * ctx.capital, lo * ctx.labor, hi * ctx.labor)


def best_response_closed_form(ctx: PayoffContext,
                              config: GameConfig = GameConfig()) -> InvestmentDecision:
    """Exact argmax of the payoff over the decision box.

    Requires alpha + beta < 1 and positive net output coefficient, else
    the surface has no concave interior optimum and NoConcaveOptimum is
    raised (callers fall back to the GA). The first-order conditions
    give the interior point; when it falls outside the box the best of
    the four edge-restricted optima is returned instead. Ties break
    toward smaller capital, then smaller labor.
    """
    p = ctx.params
    a, b, r = p.alpha, p.beta, p.interest_rate
    B = _net_output_coeff(ctx)
    if a + b >= 1.0 or B <= 0.0:
        raise NoConcaveOptimum(
            f"alpha+beta={a + b:g}, net output coeff={B:g}")
    k_lo, k_hi, l_lo, l_hi = _box(ctx, config)
    if k_lo == k_hi and l_lo == l_hi:
        return InvestmentDecision(k_lo, l_lo)

    # Unconstrained stationary point; None marks "grows without bound"
    # in that coordinate (zero marginal cost), handled by the box edges.
    interior = None
    if a > 0.0 and b > 0.0 and r > 0.0:
        c = b * r / a
        k_star = (a * B * c ** b / r) ** (1.0 / (1.0 - a - b))
        interior = (k_star, c * k_star)
    elif a > 0.0 and b == 0.0 and r > 0.0:
        interior = ((a * B / r) ** (1.0 / (1.0 - a)), l_lo)
    elif a == 0.0 and b > 0.0:
        # payoff flat (r=0) or decreasing in K, so K sits at the floor
        interior = (k_lo, (b * B) ** (1.0 / (1.0 - b)))
    elif a == 0.0 and b == 0.0:
        interior = (k_lo, l_lo)

    if interior is not None:
        k_star, l_star = interior
        if k_lo <= k_star <= k_hi and l_lo <= l_star <= l_hi:
            return InvestmentDecision(k_star, l_star)

    def best_labor_given(k: float) -> float:
        if b == 0.0:
            return l_lo  # wages only drag the payoff down
        l = (b * B * k ** a) ** (1.0 / (1.0 - b))
        return min(max(l, l_lo), l_hi)

    def best_capital_given(l: float) -> float:
        if a == 0.0:
            return k_lo
        if r == 0.0:
            return k_hi  # free capital, payoff increasing in K
        k = (a * B * l ** b / r) ** (1.0 / (1.0 - a))
        return min(max(k, k_lo), k_hi)

    candidates = []
    for k in (k_lo, k_hi):
        candidates.append((k, best_labor_given(k)))
    for l in (l_lo, l_hi):
        candidates.append((best_capital_given(l), l))
    best = None
    best_key = None
    for k, l in candidates:
        pay = expected_payoff(ctx, InvestmentDecision(k, l))
        key = (-pay, k, l)
        if best_key is None or key < best_key:
            best_key = key
            best = (k, l)
    return InvestmentDecision(*best)


def best_response_ga(ctx: PayoffContext, config: GameConfig = GameConfig(),
                     seed: int = 0) -> InvestmentDecision:
    """Genetic-algorithm best response over the decision box.

    Real-valued encoding of (log K, log L); tournament selection, blend
    crossover, Gaussian mutation scaled to the box width, elitism. The
    incumbent decision (hold current inputs) is seeded into the initial
    population, so the result never pays off worse than standing still.
    Same seed, same answer.
    """
    k_lo, k_hi, l_lo, l_hi = _box(ctx, config)
    if k_lo == k_hi and l_lo == l_hi:
        return InvestmentDecision(k_lo, l_lo)
    rng = np.random.default_rng(seed)
    p = ctx.params
    lo = np.log([k_lo, l_lo])
    hi = np.log([k_hi, l_hi])
    width = hi - lo
    sigma = config.ga_mutation_scale * width

    def payoff_of(pop: np.ndarray) -> np.ndarray:
        cap = np.exp(pop[:, 0])
        lab = np.exp(pop[:, 1])
        growth = ((cap / ctx.capital) ** p.alpha
                  * (lab / ctx.labor) ** p.beta)
        rev = ctx.revenue * (growth + ctx.customer_terms)
        cost = p.cost_coeff * cap ** p.alpha * lab ** p.beta
        return rev - cost - p.interest_rate * cap - lab

    n = config.ga_population
    pop = lo + rng.random((n, 2)) * width
    pop[0] = np.log([ctx.capital, ctx.labor])  # incumbent
    np.clip(pop, lo, hi, out=pop)

    best_genome = None
    best_pay = -np.inf
    for _ in range(config.ga_generations + 1):
        pay = payoff_of(pop)
        # rank with deterministic tie-break: payoff desc, then K, then L
        order = np.lexsort((pop[:, 1], pop[:, 0], -pay))
        top = order[0]
        if (pay[top] > best_pay
                or (pay[top] == best_pay
                    and tuple(pop[top]) < tuple(best_genome))):
            best_pay = float(pay[top])
            best_genome = pop[top].copy()
        elite = pop[order[: config.ga_elite]]

        # tournament parents for the rest of the next generation
        n_children = n - config.ga_elite
        picks = rng.integers(0, n, size=(2 * n_children, config.ga_tournament))
        winners = picks[np.arange(2 * n_children),
                        np.argmax(pay[picks], axis=1)]
        p1 = pop[winners[:n_children]]
        p2 = pop[winners[n_children:]]
        u = rng.random((n_children, 2))
        children = np.where(
            rng.random((n_children, 1)) < config.ga_crossover_prob,
            u * p1 + (1.0 - u) * p2,
            p1,
        )
        mutate = rng.random((n_children, 2)) < config.ga_mutation_prob
        children = children + mutate * rng.normal(0.0, 1.0, (n_children, 2)) * sigma
        np.clip(children, lo, hi, out=children)
        pop = np.vstack([elite, children])

    return InvestmentDecision(float(np.exp(best_genome[0])),
                              float(np.exp(best_genome[1])))


def best_response(ctx: PayoffContext, config: GameConfig = GameConfig(),
                  seed: int = 0) -> InvestmentDecision:
    """Closed form when the surface is concave, GA otherwise."""
    try:
        return best_response_closed_form(ctx, config)
    except NoConcaveOptimum:
        return best_response_ga(ctx, config, seed=seed)


@dataclass(frozen=True)
class NashResult:
    """Joint decisions plus how the iteration ended."""

    decisions: dict[str, InvestmentDecision]
    converged: bool
    rounds: int


def _firm_seed(seed: int, firm: str) -> int:
    # stable per-firm GA stream, independent of iteration order
    return (seed * 0x1_0000_0000 + zlib.crc32(firm.encode())) % (2 ** 63)


def nash_solve(economy: Economy, network: TransactionNetwork,
               gdp_growth: float, config: GameConfig = GameConfig(),
               seed: int = 0, policy: str = ZERO_REVENUE) -> NashResult:
    """Simultaneous best responses iterated to a fixed point.

    Each firm's payoff depends on the others only through revenues
    already on the books, so the game decouples: one round finds the
    fixed point and the next confirms it. The loop still guards with a
    tolerance and round cap. Result is independent of firm ordering.
    """
    firms = economy.firm_ids
    for f in firms:
        if economy.states[f].bankrupt:
            raise ValueError(f"firm {f!r} is bankrupt; cascade handles that case")
    contexts = {}
    for f in firms:
        st = economy.states[f]
        cts = customer_terms_sum(f, network, economy.states, gdp_growth, policy)
        contexts[f] = PayoffContext(st.revenue, st.capital, st.labor,
                                    cts, economy.params[f])
    decisions = {f: InvestmentDecision(economy.states[f].capital,
                                       economy.states[f].labor)
                 for f in firms}
    converged = False
    rounds = 0
    for rounds in range(1, config.br_max_rounds + 1):
        fresh = {f: best_response(contexts[f], config, seed=_firm_seed(seed, f))
                 for f in firms}
        delta = 0.0
        for f in firms:
            old, new = decisions[f], fresh[f]
            delta = max(delta,
                        abs(new.capital - old.capital) / old.capital,
                        abs(new.labor - old.labor) / old.labor)
        decisions = fresh
        if delta <= config.br_tolerance:
            converged = True
            break
    return NashResult(decisions=decisions, converged=converged, rounds=rounds)
