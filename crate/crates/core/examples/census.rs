//! Distinct fixed-rate operating points reachable with J spheres.

use concentric_pc::combinatorics::{rate_point_census, DEFAULT_CENSUS_LIMIT};

fn main() -> concentric_pc::error::Result<()> {
    println!("{:>3} {:>8} {:>8} {:>8} {:>8}", "n", "J=1", "J=2", "J=3", "J=4");
    for n in 2..=9 {
        let counts = (1..=4)
            .map(|j| rate_point_census(n, j, DEFAULT_CENSUS_LIMIT).map(|c| c.count()))
            .collect::<Result<Vec<_>, _>>()?;
        println!("{n:>3} {:>8} {:>8} {:>8} {:>8}", counts[0], counts[1], counts[2], counts[3]);
    }
    let c = rate_point_census(7, 2, DEFAULT_CENSUS_LIMIT)?;
    let rates: Vec<String> = c.distinct_sums.iter().take(8).map(|m| format!("{:.3}", concentric_pc::combinatorics::log2_biguint(m) / 7.0)).collect();
    println!("lowest fixed rates at n=7, J=2: {}", rates.join(" "));
    Ok(())
}
