"""Multi-currency collateralized market model on a fixed tenor grid.

Discrete forward collateral rates, funding spreads, LIBOR-OIS spreads,
FX and equity forwards evolve under one base-currency measure; curve
bootstrapping, martingale diagnostics, and analytic/Monte Carlo pricers
sit on top.
"""

from .curves import (
    CurveSet,
    DiscountCurve,
    EquityForwardCurve,
    SpreadCurve,
    SpreadFixings,
    bootstrap_discount_curve,
    bootstrap_spread_curve,
    forward_collateral_rate,
    forward_funding_spread,
    ois_par_rate,
)
from .dynamics import (
    PathState,
    VolatilitySpec,
    drift_B,
    drift_c,
    drift_y,
    evolve_step,
    quanto_adjustment,
    rollover_fx_forward,
)
from .engine import (
    GridPayoff,
    Model,
    PriceEstimate,
    SimulationConfig,
    gaussian_increments,
    simulate,
    simulate_many,
)
from .errors import CalibrationError, ConfigurationError, InputError
from .market_data import (
    Instrument,
    MarketDataFile,
    build_curve_set,
    build_volatility,
    load_curve_set,
    load_vol_config,
    parse_instruments,
    parse_market_csv,
    repricing_residuals,
    save_curve_set,
)
from .pricers import (
    FxForwardSpec,
    FxOptionSpec,
    collateralized_zcb,
    equity_forward,
    forward_fx_total_stdev,
    fx_forward,
    fx_option_black,
    fx_option_mc,
)
from .tenor import TenorStructure

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "ConfigurationError",
    "CurveSet",
    "DiscountCurve",
    "EquityForwardCurve",
    "FxForwardSpec",
    "FxOptionSpec",
    "GridPayoff",
    "InputError",
    "Instrument",
    "MarketDataFile",
    "Model",
    "PathState",
    "PriceEstimate",
    "SimulationConfig",
    "SpreadCurve",
    "SpreadFixings",
    "TenorStructure",
    "VolatilitySpec",
    "bootstrap_discount_curve",
    "bootstrap_spread_curve",
    "build_curve_set",
    "build_volatility",
    "collateralized_zcb",
    "drift_B",
    "drift_c",
    "drift_y",
    "equity_forward",
    "evolve_step",
    "forward_collateral_rate",
    "forward_funding_spread",
    "forward_fx_total_stdev",
    "fx_forward",
    "fx_option_black",
    "fx_option_mc",
    "gaussian_increments",
    "load_curve_set",
    "load_vol_config",
    "ois_par_rate",
    "parse_instruments",
    "parse_market_csv",
    "quanto_adjustment",
    "repricing_residuals",
    "rollover_fx_forward",
    "save_curve_set",
    "simulate",
    "simulate_many",
]
