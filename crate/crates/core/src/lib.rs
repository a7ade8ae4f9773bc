//! Low-rank multivariate autoregressive (LR-MAR) factor decomposition of
//! time series.
//!
//! The autoregression coefficients `B_i` of an order-`P` MAR model are
//! factored as `W_i V` with rank `Q`, which induces a `Q`-dimensional latent
//! signal. Inference is mean-field variational Bayes with ARD priors on the
//! rows of `W` and `V`; the free energy drives model selection over `(P, Q)`.
//!
//! Modules:
//! * [`series`], [`design`], [`spec`]: data, lag embedding and model specification
//! * [`vb`]: updates, free energy, fitting, prediction
//! * [`extensions`]: multi-lag targets and the two-view windowed CCA model
//! * [`selection`]: free-energy grid search over `(P, Q)`
//! * [`bench`]: synthetic sinusoid data, PCA baseline and metrics
//! * [`persist`]: JSON model formats
//! * [`cli`]: the `lrmar` command line front end

pub mod bench;
pub mod cli;
pub mod design;
pub mod error;
pub mod extensions;
pub mod linalg;
pub mod persist;
pub mod selection;
pub mod series;
pub mod spec;
pub mod vb;

pub use design::{embed_lags, LaggedDesign};
pub use error::{LrmarError, Result};
pub use series::{center, TimeSeries};
pub use spec::{InitMethod, ModelSpec, Rates};
pub use vb::{fit, FittedModel};
