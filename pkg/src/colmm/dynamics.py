"""State variables on the tenor grid and their no-arbitrage drifts.

Model summary
-------------
Everything is driven by a d-dimensional Brownian motion under the measure
whose numeraire is the base currency's discrete collateral account.  Per
bucket m (period [T_m, T_{m+1}], accrual delta_m) the simulated quantities
are

- c_m: one-period collateral rate of a currency (normal increments),
- y_m: one-period funding spread of an ordered pair (normal),
- B_m: simple LIBOR-OIS spread for the period starting at T_m (lognormal),
- S_m: equity forward maturing at T_{m+1} (lognormal),

plus one lognormal spot FX per pair against the base currency and the
discrete accounts, which compound only at node crossings:
C(T_{n+1}) = C(T_n) * exp(delta_n * c_n(T_n)).

Freezing: c_m, y_m and B_m stop diffusing at T_m (the value then is the
fixing); the equity forward S_m lives through its final interval and stops
at its own maturity T_{m+1}.  Inside the interval (T_{k-1}, T_k] the live
buckets are exactly m >= k for c/y/B and m >= k-1 for S.

Volatility loadings are deterministic vectors, constant per bucket, so all
drifts below are deterministic within an interval and the one-step Euler
update over a whole interval reproduces the exact node distribution of the
Gaussian components; lognormal quantities use the exact exponential scheme.

The spot-FX drift uses the currently accruing bucket rates c_{k-1}(T_{k-1})
(and the pair's y_{k-1}) as the short rates inside the interval; these are
known at the interval start, which keeps the FX accrual consistent with the
discrete accounts.

Foreign-measure (quanto) rule: a non-base currency's drift is the domestic
formula with the leading bracketed sum shifted by -sigma_X(base, currency);
for funding spreads of a foreign pair the shift applies to the first
bracket only.

`half_variance_sign` scales the +1/2 delta |sigma|^2 convexity term of the
collateral-rate drift.  It exists so diagnostics can prove that a corrupted
drift is detected (flip it to -1); production code never passes anything
else.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curves import CurveSet, forward_collateral_rate, forward_funding_spread
from .errors import ConfigurationError
from .tenor import TenorStructure

# Relative slack when deciding that a step has landed on a grid node; the
# engine builds step sizes by dividing accruals, so accumulated time can sit
# a few ulps off the node value.
_NODE_SNAP = 1e-12


@dataclass
class VolatilitySpec:
    """Deterministic factor loadings per currency, pair, and bucket.

    Bucket-indexed entries accept shape (n_buckets, d) or a single (d,)
    vector applied to every bucket; with d = 1 a scalar is also accepted.
    Spot FX loadings are one (d,) vector per ordered pair.

    Missing entries mean zero loadings.  Reversed pairs default to the
    negated loading of the stored orientation: the spread of (j,i) is the
    negative of the spread of (i,j), and log FX of (j,i) is minus log FX of
    (i,j), so a single stored orientation keeps both directions coherent.
    Same-currency keys are rejected; those loadings are identically zero.
    """

    n_factors: int
    n_buckets: int
    collateral: dict = field(default_factory=dict)
    libor_ois: dict = field(default_factory=dict)
    equity: dict = field(default_factory=dict)
    funding: dict = field(default_factory=dict)
    fx: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_factors < 1:
            raise ValueError("need at least one factor")
        if self.n_buckets < 1:
            raise ValueError("need at least one bucket")
        for name in ("collateral", "libor_ois", "equity"):
            d = getattr(self, name)
            setattr(self, name, {k: self._bucket_matrix(v, f"{name}[{k}]")
                                 for k, v in d.items()})
        for pair in list(self.funding) + list(self.fx):
            if not (isinstance(pair, tuple) and len(pair) == 2):
                raise ValueError(f"pair keys must be (ccy, ccy) tuples, got {pair!r}")
            if pair[0] == pair[1]:
                raise ValueError(f"same-currency pair {pair} must be omitted (zero)")
        self.funding = {k: self._bucket_matrix(v, f"funding[{k}]")
                        for k, v in self.funding.items()}
        self.fx = {k: self._vector(v, f"fx[{k}]") for k, v in self.fx.items()}

    def _bucket_matrix(self, value, what: str) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            if self.n_factors != 1:
                raise ValueError(f"{what}: scalar loading needs n_factors=1")
            arr = arr.reshape(1)
        if arr.ndim == 1:
            if arr.size != self.n_factors:
                raise ValueError(
                    f"{what}: expected {self.n_factors} factor loadings, "
                    f"got {arr.size}"
                )
            arr = np.tile(arr, (self.n_buckets, 1))
        if arr.shape != (self.n_buckets, self.n_factors):
            raise ValueError(
                f"{what}: expected shape ({self.n_buckets},{self.n_factors}), "
                f"got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{what}: loadings must be finite")
        return arr.copy()

    def _vector(self, value, what: str) -> np.ndarray:
        arr = np.asarray(value, dtype=float)
        if arr.ndim == 0:
            if self.n_factors != 1:
                raise ValueError(f"{what}: scalar loading needs n_factors=1")
            arr = arr.reshape(1)
        if arr.shape != (self.n_factors,):
            raise ValueError(
                f"{what}: expected one vector of length {self.n_factors}, "
                f"got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise ValueError(f"{what}: loadings must be finite")
        return arr.copy()

    def _zero_matrix(self) -> np.ndarray:
        return np.zeros((self.n_buckets, self.n_factors))

    def collateral_loadings(self, currency: str) -> np.ndarray:
        return self.collateral.get(currency, self._zero_matrix())

    def libor_ois_loadings(self, currency: str) -> np.ndarray:
        return self.libor_ois.get(currency, self._zero_matrix())

    def equity_loadings(self, currency: str) -> np.ndarray:
        return self.equity.get(currency, self._zero_matrix())

    def funding_loadings(self, currency: str, collateral: str) -> np.ndarray:
        if currency == collateral:
            return self._zero_matrix()
        if (currency, collateral) in self.funding:
            return self.funding[(currency, collateral)]
        if (collateral, currency) in self.funding:
            return -self.funding[(collateral, currency)]
        return self._zero_matrix()

    def fx_loadings(self, currency: str, other: str) -> np.ndarray:
        if currency == other:
            return np.zeros(self.n_factors)
        if (currency, other) in self.fx:
            return self.fx[(currency, other)]
        if (other, currency) in self.fx:
            return -self.fx[(other, currency)]
        return np.zeros(self.n_factors)


def quanto_adjustment(vols: VolatilitySpec, base: str, currency: str) -> np.ndarray:
    """Vector subtracted from a foreign currency's bracketed drift sums.

    Equals the spot-FX loading of (base, currency); zero for the base
    currency itself, which makes the domestic formulas a special case.
    """
    if base is None or base == currency:
        return np.zeros(vols.n_factors)
    return vols.fx_loadings(base, currency)


def _cum_from(weighted: np.ndarray, k: int) -> np.ndarray:
    """Partial sums over buckets: out[n] = sum_{m=k}^{n-1} weighted[m].

    Returns shape (n_buckets + 1, d); rows at or below k are zero.
    """
    out = np.zeros((weighted.shape[0] + 1, weighted.shape[1]))
    if k < weighted.shape[0]:
        out[k + 1:] = np.cumsum(weighted[k:], axis=0)
    return out


def collateral_drift_vector(k: int, vols: VolatilitySpec, ts: TenorStructure,
                            currency: str, measure_currency: str | None = None,
                            half_variance_sign: float = 1.0) -> np.ndarray:
    """Drifts of all collateral-rate buckets for sums starting at bucket k.

    Entry n (valid for n >= k) is
    sigma_n . (sum_{m=k}^{n-1} delta_m sigma_m - shift)
    + half_variance_sign * 1/2 delta_n |sigma_n|^2.
    """
    sig = vols.collateral_loadings(currency)
    deltas = ts.deltas
    cum = _cum_from(deltas[:, None] * sig, k)[:-1]
    shift = quanto_adjustment(vols, measure_currency, currency)
    lin = np.einsum("nd,nd->n", sig, cum) - sig @ shift
    conv = 0.5 * half_variance_sign * deltas * np.einsum("nd,nd->n", sig, sig)
    return lin + conv


def funding_drift_vector(k: int, vols: VolatilitySpec, ts: TenorStructure,
                         currency: str, collateral: str,
                         measure_currency: str | None = None) -> np.ndarray:
    """Drifts of all funding-spread buckets of (currency, collateral).

    Entry n (valid for n >= k) is
    sigma_y,n . (sum_{m=k}^{n-1} delta_m (sigma_y,m + sigma_m) - shift)
    + sigma_n . (sum_{m=k}^{n-1} delta_m sigma_y,m)
    + 1/2 delta_n |sigma_y,n|^2 + delta_n sigma_y,n . sigma_n,
    with the quanto shift in the first bracket only.
    """
    sy = vols.funding_loadings(currency, collateral)
    sc = vols.collateral_loadings(currency)
    deltas = ts.deltas
    cum_both = _cum_from(deltas[:, None] * (sy + sc), k)[:-1]
    cum_y = _cum_from(deltas[:, None] * sy, k)[:-1]
    shift = quanto_adjustment(vols, measure_currency, currency)
    out = np.einsum("nd,nd->n", sy, cum_both) - sy @ shift
    out += np.einsum("nd,nd->n", sc, cum_y)
    out += 0.5 * deltas * np.einsum("nd,nd->n", sy, sy)
    out += deltas * np.einsum("nd,nd->n", sy, sc)
    return out


def _terminal_drift_vector(k: int, own: np.ndarray, vols: VolatilitySpec,
                           ts: TenorStructure, currency: str,
                           measure_currency: str | None) -> np.ndarray:
    """Lognormal drifts sigma . (sum_{m=k}^{idx} delta_m sigma_m - shift).

    Shared by LIBOR-OIS spreads and equity forwards: entry idx covers the
    collateral-rate buckets k..idx inclusive, i.e. the discount-bond
    exposure out to node idx+1.  Valid from idx = k-1 (empty sum) upward.
    """
    sc = vols.collateral_loadings(currency)
    cum_incl = _cum_from(ts.deltas[:, None] * sc, k)[1:]
    shift = quanto_adjustment(vols, measure_currency, currency)
    return np.einsum("nd,nd->n", own, cum_incl) - own @ shift


def libor_ois_drift_vector(k: int, vols: VolatilitySpec, ts: TenorStructure,
                           currency: str,
                           measure_currency: str | None = None) -> np.ndarray:
    """Lognormal drifts of the LIBOR-OIS spreads, indexed by start bucket."""
    return _terminal_drift_vector(
        k, vols.libor_ois_loadings(currency), vols, ts, currency, measure_currency
    )


def equity_drift_vector(k: int, vols: VolatilitySpec, ts: TenorStructure,
                        currency: str,
                        measure_currency: str | None = None) -> np.ndarray:
    """Lognormal drifts of the equity forwards, indexed by maturity bucket."""
    return _terminal_drift_vector(
        k, vols.equity_loadings(currency), vols, ts, currency, measure_currency
    )


def drift_c(n: int, t: float, vols: VolatilitySpec, ts: TenorStructure,
            currency: str, measure_currency: str | None = None,
            half_variance_sign: float = 1.0) -> float:
    """Drift of the collateral-rate bucket n at time t (bucket still live)."""
    k = ts.q_index(t)
    if not k <= n < ts.n_buckets:
        raise ValueError(f"bucket {n} is frozen or absent at t={t} (q={k})")
    return float(collateral_drift_vector(
        k, vols, ts, currency, measure_currency, half_variance_sign)[n])


def drift_B(n: int, t: float, vols: VolatilitySpec, ts: TenorStructure,
            currency: str, measure_currency: str | None = None) -> float:
    """Lognormal drift of the LIBOR-OIS spread for the period ending at node n."""
    k = ts.q_index(t)
    if not (1 <= n <= ts.n_buckets and n - 1 >= k):
        raise ValueError(
            f"period ending at node {n} is frozen or absent at t={t} (q={k})"
        )
    return float(libor_ois_drift_vector(k, vols, ts, currency,
                                        measure_currency)[n - 1])


def drift_y(n: int, t: float, vols: VolatilitySpec, ts: TenorStructure,
            currency: str, collateral: str,
            measure_currency: str | None = None) -> float:
    """Drift of the funding-spread bucket n of (currency, collateral) at t."""
    k = ts.q_index(t)
    if not k <= n < ts.n_buckets:
        raise ValueError(f"bucket {n} is frozen or absent at t={t} (q={k})")
    return float(funding_drift_vector(k, vols, ts, currency, collateral,
                                      measure_currency)[n])


class PathState:
    """Batched market state: every stored array has a leading path axis.

    One instance represents a block of scenarios; the scalar case is a
    block of size one.  Arrays are owned by the block's worker and mutated
    in place by evolve_step.
    """

    def __init__(self, ts, base, n_paths, c, y, b, s, s_mask, fx,
                 log_account, log_pair_account, time=0.0):
        self.ts = ts
        self.base = base
        self.n_paths = n_paths
        self.time = time
        self.c = c                      # ccy -> (P, N)
        self.y = y                      # (ccy, collateral) -> (P, N)
        self.b = b                      # ccy -> (P, N), period start bucket
        self.s = s                      # ccy -> (P, N), maturity T_{m+1}
        self.s_mask = s_mask            # ccy -> (N,) bool
        self.fx = fx                    # (base, ccy) -> (P,)
        self.log_account = log_account  # ccy -> (P,)
        self.log_pair_account = log_pair_account  # (ccy, collateral) -> (P,)

    @classmethod
    def initial(cls, ts: TenorStructure, curves: CurveSet, vols: VolatilitySpec,
                base: str, n_paths: int) -> "PathState":
        if n_paths < 1:
            raise ValueError("need at least one path")
        if vols.n_buckets != ts.n_buckets:
            raise ConfigurationError(
                f"volatility spec has {vols.n_buckets} buckets, grid has "
                f"{ts.n_buckets}"
            )
        if base not in curves.discounts:
            raise ConfigurationError(f"base currency {base!r} has no discount curve")
        horizon = ts.horizon
        n = ts.n_buckets

        def full(vec):
            return np.tile(np.asarray(vec, dtype=float), (n_paths, 1))

        c = {}
        for ccy, curve in curves.discounts.items():
            if curve.last_pillar < horizon:
                raise ConfigurationError(
                    f"discount curve {ccy} ends at {curve.last_pillar}, "
                    f"grid needs {horizon}"
                )
            c[ccy] = full([forward_collateral_rate(curve, ts, m) for m in range(n)])

        # Simulated pairs: anything with an initial spread curve or funding
        # loadings, plus (base, ccy) for every non-base currency so the FX
        # drift and the pair accounts are always available.
        pair_keys = set(curves.spreads) | set(vols.funding)
        pair_keys |= {(base, ccy) for ccy in curves.discounts if ccy != base}
        y = {}
        for pair in sorted(pair_keys):
            pay, col = pair
            if pay not in curves.discounts:
                raise ConfigurationError(
                    f"pair {pair}: pay currency {pay!r} has no discount curve"
                )
            spread = curves.spread_curve(pay, col, missing_ok=True)
            if not spread.is_identity and spread.last_pillar < horizon:
                raise ConfigurationError(
                    f"spread curve {pair} ends at {spread.last_pillar}, "
                    f"grid needs {horizon}"
                )
            y[pair] = full(
                [forward_funding_spread(spread, ts, m) for m in range(n)]
            )

        b = {}
        for ccy in curves.discounts:
            fix = curves.fixings.get(ccy)
            has_vol = ccy in vols.libor_ois
            if fix is None and not has_vol:
                continue
            values = fix.values if fix is not None else np.zeros(n)
            if values.size != n:
                raise ConfigurationError(
                    f"LIBOR-OIS fixings for {ccy} have {values.size} periods, "
                    f"grid has {n}"
                )
            b[ccy] = full(values)

        s = {}
        s_mask = {}
        for ccy, eq in curves.equities.items():
            if ccy not in curves.discounts:
                raise ConfigurationError(
                    f"equity curve {ccy!r} has no matching discount curve"
                )
            vals, mask = eq.grid_values(ts)
            s[ccy] = full(np.where(mask, vals, 1.0))
            s_mask[ccy] = mask

        fx = {}
        for ccy in curves.discounts:
            if ccy == base:
                continue
            fx[(base, ccy)] = np.full(n_paths, curves.fx_rate(base, ccy))

        log_account = {ccy: np.zeros(n_paths) for ccy in curves.discounts}
        log_pair_account = {pair: np.zeros(n_paths) for pair in y}
        return cls(ts, base, n_paths, c, y, b, s, s_mask, fx,
                   log_account, log_pair_account)

    # -- accessors used by payoffs and diagnostics --------------------------

    def node_index_now(self) -> int:
        return self.ts.node_index(self.time)

    def _require_currency(self, currency: str) -> np.ndarray:
        try:
            return self.c[currency]
        except KeyError:
            raise ConfigurationError(f"currency {currency!r} is not simulated")

    def zcb(self, currency: str, maturity: float) -> np.ndarray:
        """D(t, T) reconstructed from live bucket rates; t must be a node."""
        k = self.node_index_now()
        n = self.ts.node_index(maturity)
        if n < k:
            raise ValueError(f"maturity {maturity} before current time {self.time}")
        rates = self._require_currency(currency)
        acc = rates[:, k:n] @ self.ts.deltas[k:n]
        return np.exp(-acc)

    def spread_zcb(self, currency: str, collateral: str,
                   maturity: float) -> np.ndarray:
        """D(t,T) * Y(t,T) of (currency, collateral) from live bucket rates."""
        if currency == collateral:
            return self.zcb(currency, maturity)
        k = self.node_index_now()
        n = self.ts.node_index(maturity)
        if n < k:
            raise ValueError(f"maturity {maturity} before current time {self.time}")
        rates = self._require_currency(currency)
        try:
            spreads = self.y[(currency, collateral)]
        except KeyError:
            raise ConfigurationError(
                f"funding pair ({currency},{collateral}) is not simulated"
            )
        acc = (rates[:, k:n] + spreads[:, k:n]) @ self.ts.deltas[k:n]
        return np.exp(-acc)

    def account(self, currency: str) -> np.ndarray:
        """Discrete collateral account C(t) at the current node."""
        try:
            return np.exp(self.log_account[currency])
        except KeyError:
            raise ConfigurationError(f"currency {currency!r} is not simulated")

    def pair_account(self, currency: str, collateral: str) -> np.ndarray:
        """Discrete account accruing c + y of the pair; C itself if same ccy."""
        if currency == collateral:
            return self.account(currency)
        try:
            return np.exp(self.log_pair_account[(currency, collateral)])
        except KeyError:
            raise ConfigurationError(
                f"pair account ({currency},{collateral}) is not simulated"
            )

    def fx_rate(self, currency: str, other: str) -> np.ndarray:
        """Spot FX path values: price of one unit of `other` in `currency`."""
        if currency == other:
            return np.ones(self.n_paths)
        if (currency, other) in self.fx:
            return self.fx[(currency, other)]
        if (other, currency) in self.fx:
            return 1.0 / self.fx[(other, currency)]
        # Both legs quoted against the base currency.
        try:
            num = self.fx[(self.base, other)]
            den = self.fx[(self.base, currency)]
        except KeyError:
            raise ConfigurationError(
                f"no simulated FX linking {currency} and {other}"
            )
        return num / den

    def libor_ois(self, currency: str, end_node: int) -> np.ndarray:
        """LIBOR-OIS spread for the period ending at node end_node."""
        try:
            arr = self.b[currency]
        except KeyError:
            raise ConfigurationError(
                f"no LIBOR-OIS spreads simulated for {currency!r}"
            )
        if not 1 <= end_node <= self.ts.n_buckets:
            raise ValueError(f"period end node {end_node} outside the grid")
        return arr[:, end_node - 1]

    def equity_forward(self, currency: str, maturity: float) -> np.ndarray:
        """Equity forward S(t, maturity)."""
        n = self.ts.node_index(maturity)
        if n < 1:
            raise ValueError("equity forwards start at the first node")
        try:
            arr = self.s[currency]
            mask = self.s_mask[currency]
        except KeyError:
            raise ConfigurationError(f"no equity forwards simulated for {currency!r}")
        if not mask[n - 1]:
            raise ConfigurationError(
                f"equity curve {currency} has no pillar coverage at T={maturity}"
            )
        return arr[:, n - 1]


def evolve_step(state: PathState, dt: float, dW: np.ndarray,
                vols: VolatilitySpec, ts: TenorStructure,
                half_variance_sign: float = 1.0) -> PathState:
    """Advance the whole state by one Euler step inside a single interval.

    dW must be the Brownian increment over dt, shape (n_paths, d); steps
    must not cross grid nodes (the scheduler splits at every node).  When
    the step lands on a node the discrete accounts compound and frozen
    buckets stop receiving updates from the next step on.
    """
    if dt <= 0.0:
        raise ValueError(f"step size must be positive, got {dt}")
    dW = np.asarray(dW, dtype=float)
    if dW.shape != (state.n_paths, vols.n_factors):
        raise ValueError(
            f"dW must have shape ({state.n_paths},{vols.n_factors}), "
            f"got {dW.shape}"
        )
    t0 = state.time
    t1 = t0 + dt
    nodes = ts.nodes
    # Accumulated substep times can land an ulp past a node; snap before
    # classifying the interval so roundoff cannot look like a node crossing.
    j = int(np.searchsorted(nodes, t1))
    for cand in (j - 1, j):
        if 0 < cand < nodes.size and (
                abs(t1 - nodes[cand]) <= _NODE_SNAP * max(1.0, abs(nodes[cand]))):
            t1 = float(nodes[cand])
            break
    if t1 > nodes[-1]:
        raise ValueError(f"step to t={t1} leaves the grid")
    k = ts.q_index(t1)
    if k < 1:
        raise ValueError(f"step to t={t1} does not move forward")
    if t0 < nodes[k - 1] - _NODE_SNAP * max(1.0, nodes[k - 1]):
        raise ValueError(
            f"step from {t0} to {t1} crosses the node at {nodes[k - 1]}"
        )
    base = state.base
    deltas = ts.deltas

    for ccy, rates in state.c.items():
        alpha = collateral_drift_vector(k, vols, ts, ccy, base,
                                        half_variance_sign)
        sig = vols.collateral_loadings(ccy)
        rates[:, k:] += alpha[k:] * dt + dW @ sig[k:].T

    for (pay, col), spreads in state.y.items():
        alpha = funding_drift_vector(k, vols, ts, pay, col, base)
        sig = vols.funding_loadings(pay, col)
        spreads[:, k:] += alpha[k:] * dt + dW @ sig[k:].T

    for ccy, arr in state.b.items():
        g = libor_ois_drift_vector(k, vols, ts, ccy, base)
        sig = vols.libor_ois_loadings(ccy)
        var = np.einsum("nd,nd->n", sig, sig)
        arr[:, k:] *= np.exp((g[k:] - 0.5 * var[k:]) * dt + dW @ sig[k:].T)

    for ccy, arr in state.s.items():
        g = equity_drift_vector(k, vols, ts, ccy, base)
        sig = vols.equity_loadings(ccy)
        var = np.einsum("nd,nd->n", sig, sig)
        live = np.flatnonzero(state.s_mask[ccy])
        live = live[live >= k - 1]
        if live.size:
            arr[:, live] *= np.exp(
                (g[live] - 0.5 * var[live]) * dt + dW @ sig[live].T
            )

    for (pay, ccy), spot in state.fx.items():
        sig = vols.fx_loadings(pay, ccy)
        carry = (state.c[pay][:, k - 1] - state.c[ccy][:, k - 1]
                 + state.y[(pay, ccy)][:, k - 1])
        spot *= np.exp((carry - 0.5 * float(sig @ sig)) * dt + dW @ sig)

    if t1 == nodes[k]:
        state.time = float(nodes[k])
        d_prev = deltas[k - 1]
        for ccy, rates in state.c.items():
            state.log_account[ccy] += d_prev * rates[:, k - 1]
        for (pay, col), spreads in state.y.items():
            state.log_pair_account[(pay, col)] += d_prev * (
                state.c[pay][:, k - 1] + spreads[:, k - 1]
            )
    else:
        state.time = t1
    return state


def rollover_fx_forward(state: PathState, pair: tuple, collateral: str) -> np.ndarray:
    """Forward FX for delivery at the next node, struck at the current one.

    At node T_n this is spot * Ytilde_foreign / Ytilde_pay over the single
    bucket n, with Ytilde(T_n, T_{n+1}) = exp(-delta_n (c_n + y_n)) built
    from the rates fixed at T_n.  This is the per-period reset value of a
    rolling FX forward collateralized in `collateral`.
    """
    pay, foreign = pair
    n = state.node_index_now()
    if n >= state.ts.n_buckets:
        raise ValueError("no next period at the final node")
    d_n = state.ts.deltas[n]
    spot = state.fx_rate(pay, foreign)
    c_pay = state._require_currency(pay)[:, n]
    c_for = state._require_currency(foreign)[:, n]

    def pair_spread(ccy):
        if ccy == collateral:
            return 0.0
        try:
            return state.y[(ccy, collateral)][:, n]
        except KeyError:
            raise ConfigurationError(
                f"funding pair ({ccy},{collateral}) is not simulated"
            )

    accr_pay = c_pay + pair_spread(pay)
    accr_for = c_for + pair_spread(foreign)
    return spot * np.exp(-d_n * (accr_for - accr_pay))
