//! Generalizations of the base model: targets spanning several future lags,
//! and the two-view windowed CCA model for joint smoothing and
//! dimensionality reduction.

mod multilag;
mod wcca;

pub use multilag::{fit_multilag, readout_block};
pub use wcca::{fit_two_view, fit_wcca, wcca_free_energy, WccaPosterior};
