//! Finite-difference weights on arbitrary nodes (Fornberg's recursion).

/// `w[m][j]` is the weight of node `j` in the `m`-th derivative at `z`,
/// for `m = 0..=max_deriv`.
pub fn fornberg_weights(z: f64, nodes: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = nodes.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - z;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Picks `width` consecutive indices out of `0..len`, centred on `i` where
/// possible and shifted inward near the ends.
pub fn window(i: usize, len: usize, width: usize) -> std::ops::Range<usize> {
    let width = width.min(len);
    let start = i.saturating_sub(width / 2).min(len - width);
    start..start + width
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn central_five_point_weights() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for j in 0..5 {
            assert_abs_diff_eq!(w[1][j], d1[j], epsilon = 1e-14);
            assert_abs_diff_eq!(w[2][j], d2[j], epsilon = 1e-14);
        }
        assert_abs_diff_eq!(w[0][2], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn one_sided_weights_differentiate_polynomials_exactly() {
        let nodes: Vec<f64> = (0..6).map(|k| 0.3 * k as f64).collect();
        let w = fornberg_weights(0.1, &nodes, 3);
        let f = |x: f64| x.powi(5) - 2.0 * x * x;
        let d3: f64 = nodes.iter().zip(&w[3]).map(|(&x, c)| c * f(x)).sum();
        assert_abs_diff_eq!(d3, 60.0 * 0.1 * 0.1, epsilon = 1e-9);
    }

    #[test]
    fn window_shifts_near_edges() {
        assert_eq!(window(0, 20, 9), 0..9);
        assert_eq!(window(10, 20, 9), 6..15);
        assert_eq!(window(19, 20, 9), 11..20);
        assert_eq!(window(1, 3, 9), 0..3);
    }
}
