//! Predicted convergence rates for every supported pair, smooth and
//! singular data.
//!
//! ```text
//! cargo run --example rate_tables
//! ```

use lsfem::analysis::{expected_rates, supported_pairs, Norm};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let norms: Vec<Norm> = Norm::PLAIN.iter().chain(&Norm::SUPER).copied().collect();
    let header: Vec<&str> = norms.iter().map(|n| n.key()).collect();
    for (title, regularity, omega) in [
        ("smooth, omega = 1", f64::INFINITY, 1.0),
        ("smooth, omega = 0", f64::INFINITY, 0.0),
        ("singular", 0.25, 0.0),
    ] {
        println!(
            "{title}\n{:<8} {}",
            "pair",
            header
                .iter()
                .map(|h| format!("{h:>10}"))
                .collect::<String>()
        );
        for pair in supported_pairs() {
            let rates = expected_rates(pair, regularity, omega)?;
            let row: String = norms
                .iter()
                .map(|&n| {
                    format!(
                        "{:>10}",
                        rates.get(n).map_or("-".into(), |e| e.display_value())
                    )
                })
                .collect();
            println!("{:<8} {row}", pair.to_string());
        }
        println!();
    }
    Ok(())
}
