mod common;

use common::white_noise;
use lrmar::selection::{grid_select, SelectOptions};
use lrmar::ModelSpec;

fn template() -> ModelSpec {
    ModelSpec::new(1, 1).with_max_iter(20_000).with_acceleration(true)
}

#[test]
fn single_cell_grid_picks_that_cell() {
    let s = white_noise(1, 300, 3);
    let grid = grid_select(&s, &[2], &[1], &template(), SelectOptions { repeats: 1, workers: 1 }).unwrap();
    assert_eq!(grid.best().unwrap(), (2, 1));
    assert_eq!(grid.cells.len(), 1);
}

#[test]
fn worker_count_does_not_change_results() {
    let s = white_noise(2, 300, 3);
    let opts = |workers| SelectOptions { repeats: 2, workers };
    let a = grid_select(&s, &[1, 2], &[1, 2], &template(), opts(1)).unwrap();
    let b = grid_select(&s, &[1, 2], &[1, 2], &template(), opts(3)).unwrap();
    assert_eq!(a.best, b.best);
    for (x, y) in a.cells.iter().zip(&b.cells) {
        assert_eq!((x.p, x.q, x.free_energy, x.converged), (y.p, y.q, y.free_energy, y.converged));
    }
}

#[test]
fn white_noise_selects_a_single_component() {
    for seed in 0..10 {
        let s = white_noise(100 + seed, 500, 3);
        let grid = grid_select(&s, &[1], &[1, 2, 3], &template(), SelectOptions { repeats: 2, workers: 1 }).unwrap();
        let f1 = grid.cell(1, 1).unwrap().free_energy;
        for q in [2, 3] {
            let fq = grid.cell(1, q).unwrap().free_energy;
            assert!(fq >= f1 && fq - f1 < 1e-2 * f1.abs(), "seed {seed}: F(Q={q}) = {fq}, F(Q=1) = {f1}");
        }
        assert_eq!(grid.best().unwrap(), (1, 1), "seed {seed}");
    }
}

#[test]
fn csv_has_one_row_per_restart() {
    let s = white_noise(3, 200, 2);
    let grid = grid_select(&s, &[1, 2], &[1, 2], &template(), SelectOptions { repeats: 3, workers: 1 }).unwrap();
    let mut out = Vec::new();
    grid.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let data_rows = text.lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert_eq!(data_rows, 12);
    assert!(text.lines().any(|l| l.starts_with("# best")));
}
