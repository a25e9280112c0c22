//! Loading macro and firm panels and building derived series.

pub mod aggregates;
pub mod calendar;
pub mod firm;
pub mod interpolate;
pub mod macro_panel;
pub mod shocks;

pub use aggregates::{load_aggregate_controls, AggregateControls};
pub use calendar::{Month, Quarter};
pub use firm::{
    build_firm_regressors, load_firm_panel, standardize_leverage, winsorize_growth, FirmPanel,
    FirmRecord, LeverageDef, RowFlags,
};
pub use interpolate::{interpolate_quarterly_to_monthly, interpolators, Interpolator};
pub use macro_panel::{load_macro_panel, MacroPanel, MacroSchema, GLOBAL_COUNTRY};
pub use shocks::{
    aggregate_shocks, aggregators, compute_fff_surprise, load_shock_events, DatedShock,
    FffConvention, Frequency, PeriodSeries, ShockAggregator, ShockEvent, SurpriseWindow,
};
