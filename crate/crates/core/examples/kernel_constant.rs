//! Recovers the kernel constant c(a) of (-Δ)^a u = c ∫ (u(x) − u(y))/|x − y|^{1+2a} dy
//! numerically and compares it with the Gamma-function formula.

use fraclab::symbols::{closed_form_normalization, estimate_normalization_with, NormalizationConfig};
use fraclab::FractionalOrder;

fn main() -> fraclab::Result<()> {
    println!("{:>5} {:>20} {:>20} {:>10}", "a", "estimated", "closed form", "rel diff");
    for a in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let a = FractionalOrder::new(a)?;
        let est = estimate_normalization_with(a, &NormalizationConfig::default())?;
        let exact = closed_form_normalization(a);
        println!(
            "{:>5} {:>20.15} {:>20.15} {:>10.2e}",
            a.value(),
            est.constant,
            exact,
            (est.constant - exact).abs() / exact
        );
    }
    Ok(())
}
