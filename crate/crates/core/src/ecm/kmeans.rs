//! Seeded k-means (k-means++ start, Lloyd iterations) used for
//! initialization only.

use nalgebra::DMatrix;
use rand::Rng;

/// Runs k-means with `restarts` independent starts and returns the labels of
/// the lowest within-cluster sum of squares.
pub fn kmeans<R: Rng + ?Sized>(
    data: &DMatrix<f64>,
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> (Vec<usize>, f64) {
    let mut best_labels = vec![0usize; data.nrows()];
    let mut best_wss = f64::INFINITY;
    for _ in 0..restarts.max(1) {
        let (labels, wss) = kmeans_once(data, k, rng);
        if wss < best_wss {
            best_wss = wss;
            best_labels = labels;
        }
    }
    (best_labels, best_wss)
}

fn kmeans_once<R: Rng + ?Sized>(data: &DMatrix<f64>, k: usize, rng: &mut R) -> (Vec<usize>, f64) {
    let n = data.nrows();
    let p = data.ncols();
    let mut centers: DMatrix<f64> = DMatrix::zeros(k, p);

    // k-means++ seeding
    let first = rng.gen_range(0..n);
    centers.set_row(0, &data.row(first));
    let mut dist2 = vec![f64::INFINITY; n];
    for c in 1..k {
        for i in 0..n {
            let d = (data.row(i) - centers.row(c - 1)).norm_squared();
            if d < dist2[i] {
                dist2[i] = d;
            }
        }
        let total: f64 = dist2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in dist2.iter().enumerate() {
                target -= d;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..n)
        };
        centers.set_row(c, &data.row(pick));
    }

    let mut labels = vec![0usize; n];
    let mut wss = f64::INFINITY;
    for _ in 0..100 {
        // assignment
        let mut changed = false;
        let mut new_wss = 0.0;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for c in 0..k {
                let d = (data.row(i) - centers.row(c)).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
            new_wss += best_d;
        }
        // update
        let mut counts = vec![0usize; k];
        let mut sums: DMatrix<f64> = DMatrix::zeros(k, p);
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..p {
                sums[(labels[i], j)] += data[(i, j)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for j in 0..p {
                    centers[(c, j)] = sums[(c, j)] / counts[c] as f64;
                }
            } else {
                // re-seed an empty cluster at the worst-fit point
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = (data.row(a) - centers.row(labels[a])).norm_squared();
                        let db = (data.row(b) - centers.row(labels[b])).norm_squared();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap_or(0);
                centers.set_row(c, &data.row(far));
            }
        }
        wss = new_wss;
        if !changed {
            break;
        }
    }
    (labels, wss)
}
