//! Missing-value injection: a fixed fraction of rows receive missing cells,
//! with coordinates deleted independently at rate 1/2 conditioned on the row
//! keeping at least one observed and one missing value.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Returns a copy of `data` with NaN marking deleted cells. Exactly
/// round(rate * n) distinct rows are affected; deterministic under the seed.
pub fn inject_mar(data: &DMatrix<f64>, rate: f64, seed: u64) -> DMatrix<f64> {
    assert!((0.0..1.0).contains(&rate), "rate must lie in [0, 1)");
    let n = data.nrows();
    let p = data.ncols();
    let mut out = data.clone();
    let k = (rate * n as f64).round() as usize;
    if k == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = sample(&mut rng, n, k);
    for ri in rows.iter() {
        loop {
            let mask: Vec<bool> = (0..p).map(|_| rng.gen_bool(0.5)).collect();
            let missing = mask.iter().filter(|&&m| m).count();
            if missing == 0 || missing == p {
                continue;
            }
            for (j, &m) in mask.iter().enumerate() {
                if m {
                    out[(ri, j)] = f64::NAN;
                }
            }
            break;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count_missing_rows(m: &DMatrix<f64>) -> usize {
        (0..m.nrows())
            .filter(|&i| (0..m.ncols()).any(|j| m[(i, j)].is_nan()))
            .count()
    }

    #[test]
    fn zero_rate_is_identity() {
        let data = DMatrix::from_fn(50, 2, |i, j| (i + j) as f64);
        let out = inject_mar(&data, 0.0, 7);
        assert_eq!(out, data);
    }

    #[test]
    fn exact_row_count_and_one_missing_coordinate_in_2d() {
        let data = DMatrix::from_fn(200, 2, |i, j| (i * 2 + j) as f64);
        let out = inject_mar(&data, 0.2, 99);
        assert_eq!(count_missing_rows(&out), 40);
        for i in 0..200 {
            let miss = (0..2).filter(|&j| out[(i, j)].is_nan()).count();
            assert!(miss <= 1, "row {i} has {miss} missing cells");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let data = DMatrix::from_fn(100, 3, |i, j| (i * 3 + j) as f64);
        let a = inject_mar(&data, 0.4, 5);
        let b = inject_mar(&data, 0.4, 5);
        for i in 0..100 {
            for j in 0..3 {
                assert_eq!(a[(i, j)].is_nan(), b[(i, j)].is_nan());
            }
        }
    }

    #[test]
    fn per_column_missing_frequency() {
        // at rate 0.4 each column loses cells at frequency ~0.2
        let data = DMatrix::from_fn(100, 2, |i, j| (i + j) as f64);
        let trials = 1000;
        let mut missing = [0usize; 2];
        for s in 0..trials {
            let out = inject_mar(&data, 0.4, s as u64);
            for j in 0..2 {
                missing[j] += (0..100).filter(|&i| out[(i, j)].is_nan()).count();
            }
        }
        let total_cells = (trials * 100) as f64;
        for (j, &m) in missing.iter().enumerate() {
            let freq = m as f64 / total_cells;
            let se = (0.2f64 * 0.8 / total_cells).sqrt();
            assert!(
                (freq - 0.2).abs() <= 3.0 * se,
                "column {j}: frequency {freq} vs 0.2 (se {se})"
            );
        }
    }

    #[test]
    fn never_all_missing_and_untouched_rows_intact() {
        let data = DMatrix::from_fn(100, 4, |i, j| (i * 4 + j) as f64);
        let out = inject_mar(&data, 0.5, 11);
        for i in 0..100 {
            let miss = (0..4).filter(|&j| out[(i, j)].is_nan()).count();
            assert!(miss < 4);
            if miss == 0 {
                for j in 0..4 {
                    assert_eq!(out[(i, j)], data[(i, j)]);
                }
            }
        }
    }
}
