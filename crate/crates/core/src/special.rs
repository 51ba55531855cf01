//! Special functions used by the force oracles and the arrest bound.

/// Modified Bessel function `I₀` by its power series, accurate to about 1e-15
/// relative for moderate arguments.
pub fn bessel_i0(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * k);
        sum += term;
        if term <= 1e-17 * sum {
            break sum;
        }
        k += 1.0;
    }
}

/// Error function.
pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}
