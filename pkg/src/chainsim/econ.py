"""Core firm-level accounting: revenue growth, costs, profit, and solvency.

Firms sell to downstream customers over a directed transaction network.
A firm's revenue growth tracks its own production growth plus a coupling
term per customer (customer revenue growth measured against GDP growth).
End-of-term equity below zero means bankruptcy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

# Treatment of a bankrupt customer inside the interaction term.
ZERO_REVENUE = "zero-revenue"  # customer growth ratio read as 0.0
PURE_LOSS = "pure-loss"        # interaction term forced to -k
POLICIES = (ZERO_REVENUE, PURE_LOSS)

# Relative floor applied when the revenue recursion turns non-positive.
REVENUE_FLOOR_FRAC = 1e-6


@dataclass(frozen=True)
class FirmParameters:
    """Structural parameters of one firm.

    alpha and beta are the capital and labor output elasticities,
    cost_coeff scales material cost, interest_rate prices capital, and
    noise_sigma scales the idiosyncratic revenue shock.
    """

    alpha: float
    beta: float
    cost_coeff: float
    interest_rate: float
    noise_sigma: float = 0.0

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "cost_coeff", "interest_rate", "noise_sigma"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class FirmState:
    """One firm's books at the start of a term.

    prev_revenue is the revenue one term earlier; customers' growth
    ratios need it. Live firms must have strictly positive revenue,
    capital and labor. Equity may legitimately be negative only on a
    firm already flagged bankrupt.
    """

    revenue: float
    prev_revenue: float
    capital: float
    labor: float
    equity: float
    bankrupt: bool = False

    def __post_init__(self) -> None:
        if not self.bankrupt:
            for name in ("revenue", "prev_revenue", "capital", "labor"):
                value = getattr(self, name)
                if not math.isfinite(value) or value <= 0.0:
                    raise ValueError(
                        f"live firm needs positive {name}, got {value!r}"
                    )
        if not math.isfinite(self.equity):
            raise ValueError(f"equity must be finite, got {self.equity!r}")

    @property
    def growth_ratio(self) -> float:
        """Observed revenue growth ratio over the last completed term."""
        return self.revenue / self.prev_revenue


@dataclass(frozen=True)
class InvestmentDecision:
    """Next-term capital and labor chosen by a firm."""

    capital: float
    labor: float

    def __post_init__(self) -> None:
        for name in ("capital", "labor"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")


class TransactionNetwork:
    """Directed supplier->customer graph with a coupling strength per edge.

    Product flows supplier -> customer; money flows the opposite way.
    At most one edge per ordered pair, no self-loops, endpoints must be
    declared firms.
    """

    def __init__(self, firms, edges=()) -> None:
        self._firms = tuple(sorted(set(firms)))
        known = set(self._firms)
        self._out: dict[str, dict[str, float]] = {f: {} for f in self._firms}
        self._in: dict[str, dict[str, float]] = {f: {} for f in self._firms}
        for supplier, customer, k in edges:
            if supplier not in known or customer not in known:
                raise ValueError(f"edge ({supplier!r}, {customer!r}) references unknown firm")
            if supplier == customer:
                raise ValueError(f"self-loop on {supplier!r}")
            if customer in self._out[supplier]:
                raise ValueError(f"duplicate edge ({supplier!r}, {customer!r})")
            if not math.isfinite(k):
                raise ValueError(f"edge ({supplier!r}, {customer!r}) has non-finite k")
            self._out[supplier][customer] = float(k)
            self._in[customer][supplier] = float(k)

    @property
    def firms(self) -> tuple[str, ...]:
        return self._firms

    def __contains__(self, firm: str) -> bool:
        return firm in self._out

    def n_edges(self) -> int:
        return sum(len(d) for d in self._out.values())

    def edges(self):
        """Yield (supplier, customer, k) in sorted order."""
        for supplier in self._firms:
            for customer in sorted(self._out[supplier]):
                yield supplier, customer, self._out[supplier][customer]

    def customers_of(self, firm: str) -> tuple[tuple[str, float], ...]:
        """(customer, k) pairs for a supplier, sorted by customer id."""
        return tuple(sorted(self._out[firm].items()))

    def suppliers_of(self, firm: str) -> tuple[tuple[str, float], ...]:
        """(supplier, k) pairs for a customer, sorted by supplier id."""
        return tuple(sorted(self._in[firm].items()))

    def strength(self, supplier: str, customer: str) -> float:
        return self._out[supplier][customer]

    def with_strengths(self, overrides) -> "TransactionNetwork":
        """Copy of the network with k replaced on the given (s, c) pairs."""
        overrides = dict(overrides)
        triples = []
        for s, c, k in self.edges():
            triples.append((s, c, overrides.get((s, c), k)))
        return TransactionNetwork(self._firms, triples)


@dataclass(frozen=True)
class MacroSeries:
    """Economy-wide GDP per period, strictly positive."""

    gdp: tuple[float, ...]
    periods: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        gdp = tuple(float(g) for g in self.gdp)
        object.__setattr__(self, "gdp", gdp)
        if not gdp:
            raise ValueError("gdp series is empty")
        if any(not math.isfinite(g) or g <= 0.0 for g in gdp):
            raise ValueError("gdp values must be finite and > 0")
        periods = self.periods or tuple(range(len(gdp)))
        if len(periods) != len(gdp):
            raise ValueError("periods and gdp lengths differ")
        object.__setattr__(self, "periods", tuple(int(p) for p in periods))

    def __len__(self) -> int:
        return len(self.gdp)

    def ratio(self, t: int) -> float:
        """GDP growth ratio over periods t-1 -> t (positional index)."""
        if t < 1 or t >= len(self.gdp):
            raise IndexError(f"no growth ratio at position {t}")
        return self.gdp[t] / self.gdp[t - 1]


@dataclass
class Economy:
    """Per-firm parameters and current states, keyed by firm id."""

    params: dict[str, FirmParameters]
    states: dict[str, FirmState]

    def __post_init__(self) -> None:
        if set(self.params) != set(self.states):
            raise ValueError("params and states cover different firm ids")

    @property
    def firm_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.params))

    def mark_bankrupt(self, firm: str) -> None:
        self.states[firm] = replace(self.states[firm], bankrupt=True)


def production_ratio(decision: InvestmentDecision, state: FirmState,
                     alpha: float, beta: float) -> float:
    """Output growth factor implied by next-term capital and labor.

    (K_next/K)^alpha * (L_next/L)^beta; equals 1 when inputs are held.
    """
    return ((decision.capital / state.capital) ** alpha
            * (decision.labor / state.labor) ** beta)


def interaction_term(strength: float, customer_growth: float,
                     gdp_growth: float) -> float:
    """Coupling contribution of one customer to a supplier's revenue growth.

    Proportional to how much the customer's revenue growth beats or lags
    GDP growth; zero for a customer tracking GDP exactly.
    """
    return strength * (customer_growth - gdp_growth)


def bankrupt_interaction(strength: float, gdp_growth: float,
                         policy: str = ZERO_REVENUE) -> float:
    """Interaction term contributed by a bankrupt customer.

    zero-revenue reads the dead customer's growth ratio as 0 (it pays
    nothing this term); pure-loss writes off the coupling outright.
    """
    if policy == ZERO_REVENUE:
        return interaction_term(strength, 0.0, gdp_growth)
    if policy == PURE_LOSS:
        return -strength
    raise ValueError(f"unknown policy {policy!r}")


def customer_terms_sum(firm: str, network: TransactionNetwork,
                       states: dict[str, FirmState], gdp_growth: float,
                       policy: str = ZERO_REVENUE) -> float:
    """Sum of interaction terms over a firm's customers.

    Live customers contribute via their observed growth ratio; bankrupt
    ones via the bankrupt-customer policy.
    """
    total = 0.0
    for customer, k in network.customers_of(firm):
        cust = states[customer]
        if cust.bankrupt:
            total += bankrupt_interaction(k, gdp_growth, policy)
        else:
            total += interaction_term(k, cust.growth_ratio, gdp_growth)
    return total


def revenue_next(revenue: float, production_growth: float,
                 customer_terms: float, noise: float = 0.0) -> float:
    """Next-term revenue before any floor is applied.

    Current revenue scaled by production growth plus customer coupling
    plus an idiosyncratic shock. May come out non-positive under a
    severe shock; see floor_revenue.
    """
    return revenue * (production_growth + customer_terms + noise)


def floor_revenue(value: float, revenue: float,
                  floor_frac: float = REVENUE_FLOOR_FRAC) -> tuple[float, bool]:
    """Clamp a non-positive revenue outcome to a small positive floor.

    Returns (possibly clamped value, whether the floor fired). Keeps
    later growth ratios well defined.
    """
    if value > 0.0:
        return value, False
    return floor_frac * revenue, True


def material_cost(cost_coeff: float, decision: InvestmentDecision,
                  alpha: float, beta: float) -> float:
    """Material cost of running next-term production."""
    return cost_coeff * decision.capital ** alpha * decision.labor ** beta


def profit(revenue: float, cost: float, interest_rate: float,
           decision: InvestmentDecision) -> float:
    """Operating result: revenue less material cost, capital charge, wages.

    Wages carry a unit coefficient, so labor enters at face value.
    """
    return revenue - cost - interest_rate * decision.capital - decision.labor


def equity_end_of_term(equity_begin: float, term_profit: float) -> float:
    """End-of-term equity: beginning equity plus the term's profit."""
    return equity_begin + term_profit


def is_bankrupt(equity_end: float) -> bool:
    """Capital deficit test; exactly zero still counts as solvent."""
    return equity_end < 0.0
