//! Expected order statistics of a Gaussian vector and of its magnitudes.

use concentric_pc::order_stats::{gaussian_order_stats, DEFAULT_TOL};

fn main() -> concentric_pc::error::Result<()> {
    let n = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(7);
    let table = gaussian_order_stats(n, 1.0, DEFAULT_TOL)?;
    println!("{:>3} {:>12} {:>12} {:>12} {:>12}", "l", "E[xi]", "E[xi^2]", "E[eta]", "E[eta^2]");
    for l in 0..n {
        println!(
            "{:>3} {:>12.8} {:>12.8} {:>12.8} {:>12.8}",
            l + 1,
            table.mean_xi[l],
            table.second_xi[l],
            table.mean_eta[l],
            table.second_eta[l]
        );
    }
    println!("E[eta] convex in l: {}", table.eta_mean_is_convex(0.0));
    table.write_csv(std::io::stdout().lock())?;
    Ok(())
}
