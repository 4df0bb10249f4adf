//! Short-term hourly electricity load forecasting: data handling, the
//! averaging, ARMA-on-residuals, double seasonal Holt-Winters and NARX random
//! forest models, and rolling-origin evaluation.

pub mod arima;
pub mod baseline;
pub mod dshw;
pub mod error;
pub mod eval;
pub mod narxrf;
pub mod optimize;
pub mod seed;
pub mod series;
pub mod synth;

pub use error::{Error, Result};
pub use series::{HourlySeries, SeriesMeta};
