//! Monte Carlo cross-check of the tabulated order-statistic moments.

use concentric_pc::order_stats::{gaussian_order_stats, DEFAULT_TOL};
use concentric_pc::rng::{GaussianStream, Moments};

#[test]
fn tabulated_moments_match_simulation() {
    for n in [2, 5, 8] {
        let table = gaussian_order_stats(n, 1.0, DEFAULT_TOL).unwrap();
        let stream = GaussianStream::new(99, "order-stats-oracle", n, 10_000_000, 1.0);
        let blocks = stream.map_blocks(|_, block| {
            let mut acc = vec![Moments::default(); 4 * n];
            let mut row = vec![0.0; n];
            let mut mag = vec![0.0; n];
            for x in block.chunks_exact(n) {
                row.copy_from_slice(x);
                row.sort_by(|a, b| b.total_cmp(a));
                mag.iter_mut().zip(x).for_each(|(m, v)| *m = v.abs());
                mag.sort_by(|a, b| b.total_cmp(a));
                for l in 0..n {
                    acc[l].push(row[l]);
                    acc[n + l].push(row[l] * row[l]);
                    acc[2 * n + l].push(mag[l]);
                    acc[3 * n + l].push(mag[l] * mag[l]);
                }
            }
            acc
        });
        let mut total = vec![Moments::default(); 4 * n];
        for b in &blocks {
            total.iter_mut().zip(b).for_each(|(t, m)| t.merge(m));
        }
        let columns = [&table.mean_xi, &table.second_xi, &table.mean_eta, &table.second_eta];
        for (c, col) in columns.iter().enumerate() {
            for l in 0..n {
                let m = &total[c * n + l];
                let z = (m.mean - col[l]).abs() / m.stderr();
                assert!(z < 5.0, "n={n}, column {c}, entry {l}: table {} vs simulated {} ± {}", col[l], m.mean, m.stderr());
            }
        }
    }
}
