pub mod bootstrap;
pub mod distributions;
pub mod error;
pub mod es_estimation;
pub mod experiments;
pub mod kde;
pub mod optim;
pub mod qmle;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod volatility;

pub use bootstrap::{BootstrapContext, BootstrapReplicate, Interval, IntervalSet};
pub use distributions::{DistKind, InnovationDist, TailQuantities};
pub use error::{Error, Result};
pub use es_estimation::{AsymptoticInterval, EsEstimate, GammaHat};
pub use experiments::{IntervalKind, Outcome, Scenario, StudySummary, TrajectoryRecord};
pub use qmle::{FitResult, QmleOptions};
pub use volatility::{FilterOutput, GarchParams, InitScheme, VolatilityModel};
