//! Small dense linear-algebra helpers shared across the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::RANK_REL_THRESHOLD;

pub type CMatrix = DMatrix<Complex<f64>>;
pub type CVector = DVector<Complex<f64>>;
pub type RMatrix = DMatrix<f64>;
pub type RVector = DVector<f64>;

/// Numerical rank via singular values, cutoff relative to the largest one.
pub fn rank_with_threshold(m: &RMatrix, rel: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel * max).count()
}

/// Numerical rank with the crate default relative threshold.
pub fn rank(m: &RMatrix) -> usize {
    rank_with_threshold(m, RANK_REL_THRESHOLD)
}

/// Orthonormal basis of the kernel, columns of the returned matrix.
pub fn nullspace(m: &RMatrix, rel: f64) -> RMatrix {
    let ncols = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv = &svd.singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let r = if max == 0.0 {
        0
    } else {
        sv.iter().filter(|&&s| s > rel * max).count()
    };
    // Rows r.. of V^T span the kernel; V^T may have fewer rows than ncols.
    let mut cols: Vec<RVector> = Vec::new();
    for i in r..v_t.nrows() {
        cols.push(v_t.row(i).transpose());
    }
    // Complete with an orthonormal extension when V^T was truncated.
    if v_t.nrows() < ncols {
        let mut basis: Vec<RVector> = (0..v_t.nrows()).map(|i| v_t.row(i).transpose()).collect();
        for k in 0..ncols {
            let mut e = RVector::zeros(ncols);
            e[k] = 1.0;
            for b in &basis {
                let c = b.dot(&e);
                e -= b * c;
            }
            if e.norm() > 1e-8 {
                e /= e.norm();
                basis.push(e.clone());
                cols.push(e);
            }
        }
    }
    let mut out = RMatrix::zeros(ncols, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Frobenius defect of unitarity, ||u* u - I||.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.ncols();
    let id = CMatrix::identity(n, n);
    (u.adjoint() * u - id).norm()
}

/// Haar-ish random unitary matrix from a complex Gaussian QR.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| {
        Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix the phase ambiguity so the distribution does not favour a corner.
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for i in 0..n {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Random real orthogonal matrix (QR of a Gaussian sample).
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RMatrix {
    let m = RMatrix::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Exponential of a skew-Hermitian matrix through the Hermitian eigenproblem
/// of -i*x; the result is unitary to machine precision.
pub fn skew_hermitian_exp(x: &CMatrix) -> CMatrix {
    let n = x.nrows();
    let h = x.map(|z| z * Complex::new(0.0, -1.0));
    let eig = h.symmetric_eigen();
    let mut d = CMatrix::zeros(n, n);
    for k in 0..n {
        let theta = eig.eigenvalues[k];
        d[(k, k)] = Complex::new(theta.cos(), theta.sin());
    }
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// Inverse square root of a symmetric positive-definite matrix.
pub fn sym_inverse_sqrt(g: &RMatrix) -> Option<RMatrix> {
    let eig = g.clone().symmetric_eigen();
    let n = g.nrows();
    let mut d = RMatrix::zeros(n, n);
    for k in 0..n {
        let ev = eig.eigenvalues[k];
        if ev <= 0.0 {
            return None;
        }
        d[(k, k)] = 1.0 / ev.sqrt();
    }
    Some(&eig.eigenvectors * d * eig.eigenvectors.transpose())
}

/// Eigenangles of a symmetric unitary matrix.
///
/// Such a matrix splits as A + iB with A, B real symmetric and commuting, so
/// both are diagonalized by one real orthogonal matrix; the angles are
/// atan2 of the paired eigenvalues. Returned unsorted, in the order produced
/// by the shared eigenbasis.
pub fn symmetric_unitary_eigenangles(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let a = m.map(|z| z.re);
    let b = m.map(|z| z.im);
    let eig_a = a.clone().symmetric_eigen();
    // Group nearly-equal eigenvalues of A and re-diagonalize B inside each
    // group; outside degeneracies the groups are singletons.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig_a.eigenvalues[i].partial_cmp(&eig_a.eigenvalues[j]).unwrap());
    let mut q = RMatrix::zeros(n, n);
    for (new, &old) in order.iter().enumerate() {
        q.set_column(new, &eig_a.eigenvectors.column(old).into_owned());
    }
    let vals: Vec<f64> = order.iter().map(|&i| eig_a.eigenvalues[i]).collect();
    let mut angles = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end] - vals[start]).abs() < 1e-8 {
            end += 1;
        }
        let block = q.columns(start, end - start).into_owned();
        let b_block = block.transpose() * &b * &block;
        let eig_b = b_block.symmetric_eigen();
        let refined = &block * &eig_b.eigenvectors;
        for k in 0..(end - start) {
            let col = refined.column(k);
            let alpha = (col.transpose() * &a * col)[(0, 0)];
            let beta = eig_b.eigenvalues[k];
            angles.push(beta.atan2(alpha));
        }
        start = end;
    }
    angles
}

/// Classical adjugate via cofactor expansion; exact for singular matrices,
/// intended for the small sizes used here.
pub fn adjugate<T: nalgebra::ComplexField>(m: &DMatrix<T>) -> DMatrix<T> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "adjugate needs a square matrix");
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if n == 1 {
        return DMatrix::from_element(1, 1, T::one());
    }
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = m.clone().remove_row(i).remove_column(j);
            let cof = minor.determinant();
            let sign = if (i + j) % 2 == 0 { T::one() } else { -T::one() };
            // adj = transpose of the cofactor matrix
            adj[(j, i)] = sign * cof;
        }
    }
    adj
}

/// Wrap an angle into (-pi, pi].
pub fn wrap_angle(t: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = t % two_pi;
    if a <= -std::f64::consts::PI {
        a += two_pi;
    } else if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        /// wrap_angle lands in (-pi, pi] and preserves the circle point.
        #[test]
        fn wrap_angle_contract(t in -1.0e4f64..1.0e4) {
            let w = wrap_angle(t);
            prop_assert!(w > -std::f64::consts::PI && w <= std::f64::consts::PI);
            // Same point on the circle, up to accumulated roundoff of the
            // modular reduction.
            prop_assert!(((t - w) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0) < 1e-9
                || ((t - w) / (2.0 * std::f64::consts::PI)).rem_euclid(1.0) > 1.0 - 1e-9);
        }
    }

    #[test]
    fn rank_of_rect_matrices() {
        let m = RMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(rank(&m), 2);
        let z = RMatrix::zeros(3, 2);
        assert_eq!(rank(&z), 0);
    }

    #[test]
    fn nullspace_is_orthonormal_kernel() {
        let m = RMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let k = nullspace(&m, 1e-10);
        assert_eq!(k.ncols(), 2);
        assert!((k.transpose() * &k - RMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((m * &k).norm() < 1e-12);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=4 {
            let u = random_unitary(n, &mut rng);
            assert!(unitarity_defect(&u) < 1e-12);
        }
    }

    #[test]
    fn skew_exp_is_unitary_and_matches_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_unitary(3, &mut rng);
        // Build a skew-Hermitian matrix from a random one.
        let x = (&a - a.adjoint()) * Complex::new(0.3, 0.0);
        let e = skew_hermitian_exp(&x);
        assert!(unitarity_defect(&e) < 1e-12);
        // Compare against a truncated series for a small argument.
        let mut series = CMatrix::identity(3, 3);
        let mut term = CMatrix::identity(3, 3);
        for k in 1..20 {
            term = &term * &x / Complex::new(k as f64, 0.0);
            series += &term;
        }
        assert!((e - series).norm() < 1e-12);
    }

    #[test]
    fn eigenangles_of_diagonal_unitary() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex::from_polar(1.0, 0.4),
            Complex::from_polar(1.0, -1.2),
        ]));
        let mut angles = symmetric_unitary_eigenangles(&m);
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((angles[0] + 1.2).abs() < 1e-12);
        assert!((angles[1] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn eigenangles_survive_orthogonal_conjugation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let o = random_orthogonal(3, &mut rng);
        let oc = o.map(|x| Complex::new(x, 0.0));
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![
            Complex::from_polar(1.0, 0.9),
            Complex::from_polar(1.0, 0.9),
            Complex::from_polar(1.0, -2.0),
        ]));
        let m = &oc * d * oc.transpose();
        let mut angles = symmetric_unitary_eigenangles(&m);
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((angles[0] + 2.0).abs() < 1e-10);
        assert!((angles[1] - 0.9).abs() < 1e-10);
        assert!((angles[2] - 0.9).abs() < 1e-10);
    }
}
