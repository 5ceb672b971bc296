//! Fit static PLCA to a matrix with known low-rank structure.

use dnmf::plca::{fit_static_plca, reconstruct};
use dnmf::NonnegMatrix;

fn main() -> dnmf::Result<()> {
    let w = NonnegMatrix::from_rows(&[
        vec![0.7, 0.0, 0.1],
        vec![0.2, 0.1, 0.1],
        vec![0.1, 0.3, 0.1],
        vec![0.0, 0.6, 0.7],
    ])?;
    let h = NonnegMatrix::from_fn(3, 12, |i, t| ((i * 5 + t * 3) % 7) as f64 + 1.0);
    let x = w.matmul(&h)?;

    let (w_hat, h_hat) = fit_static_plca(&x, 3, 500, 0)?;
    let x_hat = reconstruct(&w_hat, &h_hat, &x.column_sums())?;
    let err: f64 = x.as_slice().iter().zip(x_hat.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = x.as_slice().iter().map(|a| a * a).sum::<f64>().sqrt();
    println!("relative reconstruction error: {:.3e}", err / norm);
    println!("d_IS: {:.3e}", dnmf::is_divergence(&x, &x_hat)?);
    for i in 0..3 {
        let col: Vec<String> = w_hat.column(i).iter().map(|v| format!("{v:.3}")).collect();
        println!("basis {i}: [{}]", col.join(", "));
    }
    Ok(())
}
