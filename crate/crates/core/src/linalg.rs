//! Small dense linear algebra over [`Scalar`]. Pivoting decisions are made on
//! plain values so the same elimination order is used for every coefficient of
//! a jet.

use crate::exprparse::Scalar;

pub type Mat<S> = Vec<Vec<S>>;

pub fn zeros<S: Scalar>(rows: usize, cols: usize) -> Mat<S> {
    vec![vec![S::zero(); cols]; rows]
}

pub fn identity<S: Scalar>(n: usize) -> Mat<S> {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = S::one();
    }
    m
}

pub fn lift<S: Scalar>(v: &[f64]) -> Vec<S> {
    v.iter().map(|&x| S::from_f64(x)).collect()
}

pub fn values<S: Scalar>(v: &[S]) -> Vec<f64> {
    v.iter().map(Scalar::value).collect()
}

pub fn mat_values<S: Scalar>(m: &Mat<S>) -> Mat<f64> {
    m.iter().map(|r| values(r)).collect()
}

pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

pub fn mat_vec<S: Scalar>(m: &Mat<S>, v: &[S]) -> Vec<S> {
    m.iter().map(|row| dot(row, v)).collect()
}

/// `aᵀ M b`.
pub fn bilinear<S: Scalar>(m: &Mat<S>, a: &[S], b: &[S]) -> S {
    dot(a, &mat_vec(m, b))
}

pub fn add<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() + y.clone())
        .collect()
}

pub fn sub<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() - y.clone())
        .collect()
}

pub fn scale<S: Scalar>(a: &[S], k: &S) -> Vec<S> {
    a.iter().map(|x| x.clone() * k.clone()).collect()
}

/// `a + k b`.
pub fn axpy<S: Scalar>(a: &[S], k: &S, b: &[S]) -> Vec<S> {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.clone() + k.clone() * y.clone())
        .collect()
}

pub fn cross3<S: Scalar>(a: &[S], b: &[S]) -> Vec<S> {
    vec![
        a[1].clone() * b[2].clone() - a[2].clone() * b[1].clone(),
        a[2].clone() * b[0].clone() - a[0].clone() * b[2].clone(),
        a[0].clone() * b[1].clone() - a[1].clone() * b[0].clone(),
    ]
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn transpose<S: Scalar>(m: &Mat<S>) -> Mat<S> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len())
        .map(|j| m.iter().map(|row| row[j].clone()).collect())
        .collect()
}

/// Determinant by partial-pivot elimination.
pub fn det<S: Scalar>(m: &Mat<S>) -> S {
    let n = m.len();
    let mut a = m.clone();
    let mut d = S::one();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .unwrap();
        if a[piv][col].value() == 0.0 {
            return S::zero();
        }
        if piv != col {
            a.swap(piv, col);
            d = -d;
        }
        let p = a[col][col].clone();
        d = d * p.clone();
        for r in col + 1..n {
            let f = a[r][col].clone() / p.clone();
            for c in col..n {
                let v = a[col][c].clone();
                a[r][c] = a[r][c].clone() - f.clone() * v;
            }
        }
    }
    d
}

/// Inverse by Gauss-Jordan elimination; `None` when a pivot vanishes.
pub fn inverse<S: Scalar>(m: &Mat<S>) -> Option<Mat<S>> {
    let n = m.len();
    let mut a = m.clone();
    let mut inv = identity::<S>(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))?;
        if a[piv][col].value() == 0.0 {
            return None;
        }
        a.swap(piv, col);
        inv.swap(piv, col);
        let p = a[col][col].clone();
        for c in 0..n {
            a[col][c] = a[col][c].clone() / p.clone();
            inv[col][c] = inv[col][c].clone() / p.clone();
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col].clone();
            for c in 0..n {
                let av = a[col][c].clone();
                let iv = inv[col][c].clone();
                a[r][c] = a[r][c].clone() - f.clone() * av;
                inv[r][c] = inv[r][c].clone() - f.clone() * iv;
            }
        }
    }
    Some(inv)
}

/// Solves `m x = b`.
pub fn solve<S: Scalar>(m: &Mat<S>, b: &[S]) -> Option<Vec<S>> {
    inverse(m).map(|inv| mat_vec(&inv, b))
}

/// Eigenvalues of a small symmetric matrix (cyclic Jacobi).
pub fn symmetric_eigenvalues(m: &Mat<f64>) -> Vec<f64> {
    let n = m.len();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Number of negative eigenvalues of a symmetric matrix.
pub fn negative_index(m: &Mat<f64>) -> usize {
    symmetric_eigenvalues(m)
        .into_iter()
        .filter(|&e| e < 0.0)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprparse::Jet;
    use approx::assert_abs_diff_eq;

    #[test]
    fn inverse_and_det_of_indefinite_matrix() {
        let m = vec![
            vec![-1.0, 0.5, 0.0],
            vec![0.5, 2.0, 1.0],
            vec![0.0, 1.0, 3.0],
        ];
        let inv = inverse(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let p: f64 = (0..3).map(|k| m[i][k] * inv[k][j]).sum();
                assert_abs_diff_eq!(p, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
        assert_abs_diff_eq!(det(&m), -(6.0 - 1.0) - 0.5 * 1.5, epsilon = 1e-14);
        assert!(inverse(&vec![vec![1.0, 2.0], vec![2.0, 4.0]]).is_none());
    }

    #[test]
    fn inverse_of_jet_matrix_differentiates_correctly() {
        // d/ds (A + s I)^{-1} at s=0 equals -A^{-2}
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let m: Mat<Jet> = (0..2)
            .map(|i| {
                (0..2)
                    .map(|j| {
                        if i == j {
                            Jet::variable(a[i][j], 1)
                        } else {
                            Jet::constant(a[i][j])
                        }
                    })
                    .collect()
            })
            .collect();
        let inv = inverse(&m).unwrap();
        let ai = inverse(&a).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let sq: f64 = (0..2).map(|k| ai[i][k] * ai[k][j]).sum();
                assert_abs_diff_eq!(inv[i][j].coeff(1), -sq, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn index_counts_negative_directions() {
        let m = vec![
            vec![-1.0, 0.0, 0.0],
            vec![0.0, -2.0, 0.3],
            vec![0.0, 0.3, 1.0],
        ];
        assert_eq!(negative_index(&m), 2);
    }
}
