//! Ginzburg-Landau bulk potential.

/// `f(d) = (|d|^2 - 1) d / eps^2`, the gradient of [`potential_value`].
pub fn compute_f(d: &[f64], epsilon: f64) -> Vec<f64> {
    let s = (norm_sq(d) - 1.0) / (epsilon * epsilon);
    d.iter().map(|v| s * v).collect()
}

/// `F(d) = (|d|^2 - 1)^2 / (4 eps^2)`.
pub fn potential_value(d: &[f64], epsilon: f64) -> f64 {
    let a = norm_sq(d) - 1.0;
    a * a / (4.0 * epsilon * epsilon)
}

/// `f'(d*) phi = (2 (d* . phi) d* + |d*|^2 phi - phi) / eps^2`. The Jacobian is
/// symmetric, so this is also its transpose action.
pub fn f_prime_apply(d_star: &[f64], phi: &[f64], epsilon: f64) -> Vec<f64> {
    let e2 = epsilon * epsilon;
    let dp: f64 = d_star.iter().zip(phi).map(|(a, b)| a * b).sum();
    let s = norm_sq(d_star) - 1.0;
    d_star
        .iter()
        .zip(phi)
        .map(|(d, p)| (2.0 * dp * d + s * p) / e2)
        .collect()
}

fn norm_sq(d: &[f64]) -> f64 {
    d.iter().map(|v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_examples() {
        assert_eq!(compute_f(&[1.0, 0.0], 1.0), vec![0.0, 0.0]);
        assert_eq!(compute_f(&[2.0, 0.0], 1.0), vec![6.0, 0.0]);
        assert_eq!(compute_f(&[1.0, 1.0], 1.0), vec![1.0, 1.0]);
        assert_eq!(compute_f(&[0.0, 0.0], 0.3), vec![0.0, 0.0]);
        assert_eq!(compute_f(&[2.0, 0.0], 0.5), vec![24.0, 0.0]);
    }

    #[test]
    fn potential_examples() {
        assert_eq!(potential_value(&[1.0, 0.0], 1.0), 0.0);
        assert_eq!(potential_value(&[0.0, 0.0], 1.0), 0.25);
        assert_eq!(potential_value(&[2.0, 0.0], 1.0), 2.25);
    }

    #[test]
    fn f_prime_examples() {
        assert_eq!(f_prime_apply(&[1.0, 0.0], &[1.0, 0.0], 1.0), vec![2.0, 0.0]);
        assert_eq!(f_prime_apply(&[0.0, 0.0], &[0.3, -0.7], 1.0), vec![-0.3, 0.7]);
        assert_eq!(f_prime_apply(&[0.0, 1.0], &[1.0, 0.0], 1.0), vec![0.0, 0.0]);
    }

    #[test]
    fn f_is_gradient_of_potential() {
        let h = 1e-6;
        for d in [[0.3, -0.8, 0.1], [1.2, 0.4, -0.5], [0.0, 0.0, 0.9]] {
            for eps in [1.0, 0.4] {
                let f = compute_f(&d, eps);
                for m in 0..3 {
                    let (mut a, mut b) = (d, d);
                    a[m] += h;
                    b[m] -= h;
                    let fd = (potential_value(&a, eps) - potential_value(&b, eps)) / (2.0 * h);
                    assert!((fd - f[m]).abs() < 1e-7 * (1.0 + f[m].abs()), "{fd} vs {}", f[m]);
                }
            }
        }
    }

    #[test]
    fn f_prime_is_jacobian_of_f() {
        let h = 1e-6;
        let d = [0.7, -0.2, 0.4];
        let phi = [0.3, 1.1, -0.6];
        let eps = 0.8;
        let plus: Vec<f64> = d.iter().zip(&phi).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = d.iter().zip(&phi).map(|(a, b)| a - h * b).collect();
        let fp = compute_f(&plus, eps);
        let fm = compute_f(&minus, eps);
        let lin = f_prime_apply(&d, &phi, eps);
        for m in 0..3 {
            let fd = (fp[m] - fm[m]) / (2.0 * h);
            assert!((fd - lin[m]).abs() < 1e-8);
        }
    }
}
