//! Targets spanning several future samples. For a first-order process the
//! readout block of lag 2 is the lag-1 block pushed through the dynamics.

use lrmar::extensions::{fit_multilag, readout_block};
use lrmar::{ModelSpec, TimeSeries};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> lrmar::Result<()> {
    let b = DMatrix::from_row_slice(2, 2, &[0.6, 0.3, 0.6, 0.3]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut y = DMatrix::zeros(5000, 2);
    for t in 1..y.nrows() {
        let e = DMatrix::from_fn(1, 2, |_, _| StandardNormal.sample(&mut rng));
        let next = y.rows(t - 1, 1) * &b + e;
        y.set_row(t, &next.row(0));
    }
    let series = TimeSeries::new(y)?;
    let spec = ModelSpec::new(1, 1).with_lags(3).with_max_iter(20_000).with_acceleration(true);
    let model = fit_multilag(&series, &spec)?;

    let mut expected = readout_block(&model, 1)?;
    for lag in 1..=spec.l {
        let block = readout_block(&model, lag)?;
        println!("lag {lag}: fitted {:.3?}  propagated {:.3?}", block.as_slice(), expected.as_slice());
        expected = &block * &b;
    }
    Ok(())
}
