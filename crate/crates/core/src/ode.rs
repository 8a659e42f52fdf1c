//! Fixed-step classical Runge-Kutta.

/// One RK4 step of `y' = f(t, y)`.
pub fn rk4_step<E>(
    f: &mut impl FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    t: f64,
    y: &[f64],
    dt: f64,
) -> Result<Vec<f64>, E> {
    let shifted =
        |k: &[f64], c: f64| -> Vec<f64> { y.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &shifted(&k1, 0.5 * dt))?;
    let k3 = f(t + 0.5 * dt, &shifted(&k2, 0.5 * dt))?;
    let k4 = f(t + dt, &shifted(&k3, dt))?;
    Ok((0..y.len())
        .map(|i| y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Number of equal substeps of size at most `step` covering `span`.
pub fn substeps(span: f64, step: f64) -> usize {
    let n = (span.abs() / step - 1e-9).ceil();
    if n < 1.0 {
        1
    } else {
        n as usize
    }
}

/// Advances `y` from `t0` to `t1` in `n` equal RK4 steps.
pub fn integrate<E>(
    f: &mut impl FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
    t0: f64,
    t1: f64,
    y: &[f64],
    n: usize,
) -> Result<Vec<f64>, E> {
    let dt = (t1 - t0) / n as f64;
    let mut y = y.to_vec();
    for i in 0..n {
        y = rk4_step(f, t0 + i as f64 * dt, &y, dt)?;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn exponential_decay_error_scales_as_fourth_power() {
        let mut f = |_t: f64, y: &[f64]| Ok::<_, Infallible>(vec![-y[0]]);
        let exact = (-1.0f64).exp();
        let e1 = (integrate(&mut f, 0.0, 1.0, &[1.0], 10).unwrap()[0] - exact).abs();
        let e2 = (integrate(&mut f, 0.0, 1.0, &[1.0], 20).unwrap()[0] - exact).abs();
        let p = (e1 / e2).log2();
        assert!(p > 3.8 && p < 4.2, "order {p}");
    }

    #[test]
    fn substep_count_rounds_up() {
        assert_eq!(substeps(1.0, 0.3), 4);
        assert_eq!(substeps(1.0, 0.25), 4);
        assert_eq!(substeps(0.0, 0.1), 1);
    }
}
