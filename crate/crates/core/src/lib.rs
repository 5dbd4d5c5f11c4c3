//! Densities, parameter derivatives and distribution functions of
//! infinitely divisible laws recovered from closed-form characteristic
//! functions with the fractional FFT, plus Variance-Gamma fitting by the
//! method of moments and Newton–Raphson maximum likelihood, and
//! goodness-of-fit testing.

pub mod data;
pub mod error;
pub mod fft;
pub mod frft;
pub mod gof;
pub mod grid;
pub mod mle;
pub mod models;
pub mod moments;
pub mod table;

pub use data::{filter_outliers, load_prices, log_returns, summarize, OutlierRule, PriceColumns, PriceSeries, ReturnSeries};
pub use error::{Error, Result};
pub use frft::{frft, invert_cf, FrftPlan, Inverter};
pub use gof::{cdf_from_cf, fit_clm, ks_null_mc, ks_statistic, lr_test, ClmFit, GofReport, KsNullDistribution, KsStatistic, LrTest};
pub use grid::GridSpec;
pub use models::{CharacteristicFunction, CpnParams, CumulantSummary, Model, NormalParams, VgParam, VgParams};
pub use mle::{build_tables, fit_mle, fit_mle_restricted, loglik_score_info, FitOptions, FitResult, FitTrace, LikelihoodState, StopReason, VgTables};
pub use moments::{fit_moments_avg, fit_moments_svg, sample_moments, SampleMoments};
pub use table::{DensityTable, Interpolator, Shape, SlopeRule, TableKind};
