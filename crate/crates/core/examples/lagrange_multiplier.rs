//! Solve the simplex-constrained state update for a few predictions.

use dnmf::dynamic::solve_multiplier;

fn main() -> dnmf::Result<()> {
    let counts = [4.0, 3.0, 2.0, 1.0];
    let predictions: [(&str, [f64; 4]); 3] = [
        ("flat", [1.0, 1.0, 1.0, 1.0]),
        ("favour last", [0.01, 0.01, 0.01, 1.0]),
        ("near-empty", [1e-12, 0.5, 0.5, 0.5]),
    ];
    for (name, eta) in predictions {
        let s = solve_multiplier(&counts, &eta)?;
        let h: Vec<String> = s.h.iter().map(|v| format!("{v:.4}")).collect();
        println!("{name:12} beta {:>10.4}  h [{}]  ({} iterations)", s.beta, h.join(", "), s.iterations);
    }
    Ok(())
}
