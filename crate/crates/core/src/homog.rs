//! Momentum maps and commuting integrals on the homogeneous 7-manifold
//! families: the sphere-product cotangent bundle T*(S^5 x S^3) carrying the
//! weighted circle action of the Witten-Kreck-Stolz construction, and the
//! left-trivialized T*SU(3) carrying two-sided torus actions for Eschenburg
//! and Aloff-Wallach parameters, with argument-shift integrals pulled back
//! through the product momentum map.

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{FlowConfig, Tolerances, FD_STEP, RANK_REL_THRESHOLD};
use crate::lie::{
    argument_shift_family, AlgebraPoint, CasimirSpec, CoalgebraField, Factor, FactorCasimir,
    Flavor, LieAlgebraElement, ProductAlgebraElement,
};
use crate::linalg::{nullspace, rank_with_threshold, random_unitary, skew_hermitian_exp, CMatrix, CVector, RMatrix, RVector};
use crate::poisson::{
    hamiltonian_flow, independence_rank, independence_rank_excluding, involution_matrix,
    ConstraintSet, ScalarField,
};
use crate::topo7::EschenburgQuartet;
use crate::{Error, Result};

/// Phase-space dimension of the ambient space of T*(S^5 x S^3).
pub const SPHERE_PHASE_DIM: usize = 20;

/// Ambient-coordinate point of T*(S^5 x S^3): x, y in C^3 and w, z in C^2
/// subject to |x| = 1, Re(y*x) = 0, |w| = 1, Re(z*w) = 0.
#[derive(Debug, Clone)]
pub struct SphereCotangentPoint {
    pub x: CVector,
    pub y: CVector,
    pub w: CVector,
    pub z: CVector,
}

impl SphereCotangentPoint {
    pub fn new(x: CVector, y: CVector, w: CVector, z: CVector, tol: f64) -> Result<Self> {
        if x.len() != 3 || y.len() != 3 || w.len() != 2 || z.len() != 2 {
            return Err(Error::DimensionMismatch(
                "expected x, y in C^3 and w, z in C^2".into(),
            ));
        }
        let p = Self { x, y, w, z };
        let r = p.constraint_residual();
        if r > tol {
            return Err(Error::OffManifold { residual: r, tol });
        }
        Ok(p)
    }

    pub fn constraint_residual(&self) -> f64 {
        let sphere_x = (self.x.dotc(&self.x).re - 1.0).abs();
        let ortho_y = self.y.dotc(&self.x).re.abs();
        let sphere_w = (self.w.dotc(&self.w).re - 1.0).abs();
        let ortho_z = self.z.dotc(&self.w).re.abs();
        sphere_x.max(ortho_y).max(sphere_w).max(ortho_z)
    }

    /// Flat layout: base [Re x, Im x, Re w, Im w], fiber [Re y, Im y, Re z, Im z].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(SPHERE_PHASE_DIM);
        p.extend(self.x.iter().map(|c| c.re));
        p.extend(self.x.iter().map(|c| c.im));
        p.extend(self.w.iter().map(|c| c.re));
        p.extend(self.w.iter().map(|c| c.im));
        p.extend(self.y.iter().map(|c| c.re));
        p.extend(self.y.iter().map(|c| c.im));
        p.extend(self.z.iter().map(|c| c.re));
        p.extend(self.z.iter().map(|c| c.im));
        p
    }

    pub fn from_flat(p: &[f64]) -> Result<Self> {
        if p.len() != SPHERE_PHASE_DIM {
            return Err(Error::DimensionMismatch(format!(
                "expected {SPHERE_PHASE_DIM} coordinates, got {}",
                p.len()
            )));
        }
        let cvec = |re: &[f64], im: &[f64]| {
            CVector::from_iterator(re.len(), re.iter().zip(im).map(|(&a, &b)| Complex::new(a, b)))
        };
        Ok(Self {
            x: cvec(&p[0..3], &p[3..6]),
            y: cvec(&p[10..13], &p[13..16]),
            w: cvec(&p[6..8], &p[8..10]),
            z: cvec(&p[16..18], &p[18..20]),
        })
    }

    /// The base verification point (2/3, 1/3, 2/3; i, -4i, i; 3/5, 4/5; 4i, -3i).
    pub fn base_point() -> Self {
        let x = CVector::from_vec(vec![
            Complex::new(2.0 / 3.0, 0.0),
            Complex::new(1.0 / 3.0, 0.0),
            Complex::new(2.0 / 3.0, 0.0),
        ]);
        let y = CVector::from_vec(vec![
            Complex::new(0.0, 1.0),
            Complex::new(0.0, -4.0),
            Complex::new(0.0, 1.0),
        ]);
        let w = CVector::from_vec(vec![Complex::new(0.6, 0.0), Complex::new(0.8, 0.0)]);
        let z = CVector::from_vec(vec![Complex::new(0.0, 4.0), Complex::new(0.0, -3.0)]);
        Self { x, y, w, z }
    }

    /// Gaussian sample projected exactly onto the constraint set.
    pub fn random_on_shell<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let gauss = |n: usize, rng: &mut R| {
            CVector::from_iterator(
                n,
                (0..n).map(|_| {
                    Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
                }),
            )
        };
        let mut x = gauss(3, rng);
        x /= Complex::new(x.norm(), 0.0);
        let mut y = gauss(3, rng);
        let overlap = y.dotc(&x).re;
        y -= x.map(|c| c * overlap);
        let mut w = gauss(2, rng);
        w /= Complex::new(w.norm(), 0.0);
        let mut z = gauss(2, rng);
        let overlap = z.dotc(&w).re;
        z -= w.map(|c| c * overlap);
        Self { x, y, w, z }
    }

    /// Acts by (u3, u2): (x, y, w, z) -> (u3 x, u3 y, u2 w, u2 z).
    pub fn acted_on(&self, u3: &CMatrix, u2: &CMatrix) -> Self {
        Self {
            x: u3 * &self.x,
            y: u3 * &self.y,
            w: u2 * &self.w,
            z: u2 * &self.z,
        }
    }
}

/// Value of the product momentum map: the u(3) and u(2) components.
#[derive(Debug, Clone)]
pub struct MomentumValue {
    pub xi: LieAlgebraElement,
    pub eta: LieAlgebraElement,
}

fn outer(a: &CVector, b: &CVector) -> CMatrix {
    let n = a.len();
    CMatrix::from_fn(n, n, |i, j| a[i] * b[j].conj())
}

/// Momentum of the unitary product action: (xy* - yx*)/2 + (wz* - zw*)/2.
pub fn psi_g(p: &SphereCotangentPoint) -> Result<MomentumValue> {
    let xi = (outer(&p.x, &p.y) - outer(&p.y, &p.x)) * Complex::new(0.5, 0.0);
    let eta = (outer(&p.w, &p.z) - outer(&p.z, &p.w)) * Complex::new(0.5, 0.0);
    Ok(MomentumValue {
        xi: LieAlgebraElement::new(Flavor::U, xi)?,
        eta: LieAlgebraElement::new(Flavor::U, eta)?,
    })
}

/// Momentum of the weighted circle action: k (y*x) + l (z*w); purely
/// imaginary on the constraint set.
pub fn psi_v(k: i64, l: i64, p: &SphereCotangentPoint) -> Result<Complex<f64>> {
    let v = p.y.dotc(&p.x) * Complex::new(k as f64, 0.0)
        + p.z.dotc(&p.w) * Complex::new(l as f64, 0.0);
    if v.re.abs() > 1e-9 * (1.0 + v.norm()) {
        return Err(Error::OffManifold {
            residual: v.re.abs(),
            tol: 1e-9,
        });
    }
    Ok(v)
}

/// The eight invariant scalars of a momentum value; indices 1..=8.
/// Odd-trace entries are real because corners and traces of skew-Hermitian
/// matrices are purely imaginary.
pub fn invariant_scalar(index: u8, value: &MomentumValue) -> Result<f64> {
    let xi = value.xi.matrix();
    let eta = value.eta.matrix();
    let v = match index {
        1 => xi[(2, 2)].im,
        2 => (xi[(1, 1)] + xi[(2, 2)]).im,
        3 => xi.trace().im,
        4 => {
            let b = xi.view((1, 1), (2, 2));
            0.5 * (b * b).trace().re
        }
        5 => 0.5 * (xi * xi).trace().re,
        6 => eta[(1, 1)].im,
        7 => eta.trace().im,
        8 => 0.5 * (eta * eta).trace().re,
        _ => return Err(Error::InvalidInput(format!("scalar index {index} not in 1..=8"))),
    };
    Ok(v)
}

/// H_a at a sphere-cotangent point: the a-th scalar of the momentum value.
pub fn momentum_hamiltonian(index: u8, p: &SphereCotangentPoint) -> Result<f64> {
    invariant_scalar(index, &psi_g(p)?)
}

/// H_a as a flat-coordinate scalar field.
pub fn hamiltonian_field(index: u8) -> ScalarField {
    ScalarField::new(SPHERE_PHASE_DIM, move |p| {
        let pt = SphereCotangentPoint::from_flat(p).expect("arity checked");
        momentum_hamiltonian(index, &pt).expect("valid index")
    })
}

/// The circle momentum as a real scalar field (imaginary part).
pub fn circle_momentum_field(k: i64, l: i64) -> ScalarField {
    ScalarField::new(SPHERE_PHASE_DIM, move |p| {
        let pt = SphereCotangentPoint::from_flat(p).expect("arity checked");
        (pt.y.dotc(&pt.x) * Complex::new(k as f64, 0.0)
            + pt.z.dotc(&pt.w) * Complex::new(l as f64, 0.0))
        .im
    })
}

/// The four constraint fields of the sphere product, with analytic gradients.
pub fn sphere_constraints() -> ConstraintSet {
    let c1 = ScalarField::new(SPHERE_PHASE_DIM, |p| {
        p[0..6].iter().map(|v| v * v).sum::<f64>() - 1.0
    })
    .with_gradient(|p| {
        let mut g = vec![0.0; SPHERE_PHASE_DIM];
        for i in 0..6 {
            g[i] = 2.0 * p[i];
        }
        g
    });
    let c2 = ScalarField::new(SPHERE_PHASE_DIM, |p| {
        (0..6).map(|i| p[10 + i] * p[i]).sum::<f64>()
    })
    .with_gradient(|p| {
        let mut g = vec![0.0; SPHERE_PHASE_DIM];
        g[..6].copy_from_slice(&p[10..16]);
        g[10..16].copy_from_slice(&p[..6]);
        g
    });
    let c3 = ScalarField::new(SPHERE_PHASE_DIM, |p| {
        p[6..10].iter().map(|v| v * v).sum::<f64>() - 1.0
    })
    .with_gradient(|p| {
        let mut g = vec![0.0; SPHERE_PHASE_DIM];
        for i in 6..10 {
            g[i] = 2.0 * p[i];
        }
        g
    });
    let c4 = ScalarField::new(SPHERE_PHASE_DIM, |p| {
        (0..4).map(|i| p[16 + i] * p[6 + i]).sum::<f64>()
    })
    .with_gradient(|p| {
        let mut g = vec![0.0; SPHERE_PHASE_DIM];
        g[6..10].copy_from_slice(&p[16..20]);
        g[16..20].copy_from_slice(&p[6..10]);
        g
    });
    ConstraintSet::new(vec![c1, c2, c3, c4])
}

/// Direction of the weighted circle action at a flat point:
/// d/dt (e^{ikt} x, e^{ikt} y, e^{ilt} w, e^{ilt} z) at t = 0.
pub fn circle_direction(k: i64, l: i64, p: &[f64]) -> Vec<f64> {
    let mut v = vec![0.0; SPHERE_PHASE_DIM];
    let (kf, lf) = (k as f64, l as f64);
    // i k c: Re -> -k Im c, Im -> k Re c.
    for i in 0..3 {
        v[i] = -kf * p[3 + i];
        v[3 + i] = kf * p[i];
        v[10 + i] = -kf * p[13 + i];
        v[13 + i] = kf * p[10 + i];
    }
    for i in 0..2 {
        v[6 + i] = -lf * p[8 + i];
        v[8 + i] = lf * p[6 + i];
        v[16 + i] = -lf * p[18 + i];
        v[18 + i] = lf * p[16 + i];
    }
    v
}

/// Verification report for the sphere-product commuting system.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WksSystemReport {
    pub k: i64,
    pub l: i64,
    /// Max |{H_a, H_b}|_Dirac over the sampled on-shell points.
    pub involution_max: f64,
    /// Rank of the eight Hamiltonians at the base verification point.
    pub independence_rank: usize,
    /// Rank of the seven (index 3 removed) on the zero level of the circle
    /// momentum, modulo the circle direction.
    pub reduced_rank: usize,
    /// Circle momentum at the base point (must vanish for every k, l).
    pub circle_momentum_at_base: f64,
    /// Max |H_5 + H_8 + (|y|^2 + |z|^2 - (y*x)^2 - (z*w)^2)/4| over samples.
    pub kinetic_identity_residual: f64,
    /// Max |H_5 + H_8 + (H_3^2 + H_7^2)/4 + (|y|^2 + |z|^2)/4| over samples.
    pub shifted_identity_residual: f64,
    /// Max |Psi_V - (i k H_3 + i l H_7)| over samples.
    pub momentum_combination_residual: f64,
    /// Max equivariance defect of the product momentum map over samples.
    pub equivariance_residual: f64,
    /// Max drift of any H_a along the constrained flow of H_5 + H_8.
    pub conservation_drift: f64,
    /// Max constraint residual along that flow.
    pub flow_constraint_residual: f64,
}

impl WksSystemReport {
    pub fn pass(&self, tol: &Tolerances) -> bool {
        self.involution_max < tol.involution
            && self.independence_rank == 8
            && self.reduced_rank == 7
            && self.circle_momentum_at_base.abs() < tol.identity
            && self.kinetic_identity_residual < tol.identity
            && self.shifted_identity_residual < tol.identity
            && self.momentum_combination_residual < tol.identity
            && self.equivariance_residual < tol.identity
            && self.conservation_drift < tol.conservation
            && self.flow_constraint_residual < 1e-7
    }
}

/// Runs the full verification of the eight commuting Hamiltonians for the
/// weighted circle parameters (k, l): involution under the Dirac bracket,
/// independence at the base point, descent rank on the circle-momentum zero
/// level, the algebraic identities, equivariance, and conservation along the
/// constrained kinetic flow.
pub fn wks_integrable_system<R: Rng + ?Sized>(
    k: i64,
    l: i64,
    samples: usize,
    rng: &mut R,
) -> Result<WksSystemReport> {
    if crate::topo7::gcd(k, l) != 1 || k == 0 || l == 0 {
        return Err(Error::InvalidInput(format!(
            "need coprime nonzero parameters, got ({k}, {l})"
        )));
    }
    let constraints = sphere_constraints();
    let fields: Vec<ScalarField> = (1..=8).map(hamiltonian_field).collect();

    let points: Vec<Vec<f64>> = (0..samples)
        .map(|_| SphereCotangentPoint::random_on_shell(rng).to_flat())
        .collect();
    let involution = involution_matrix(&fields, &points, Some(&constraints))?;

    // Identities and equivariance on the same samples.
    let mut kinetic_identity_residual = 0.0_f64;
    let mut shifted_identity_residual = 0.0_f64;
    let mut momentum_combination_residual = 0.0_f64;
    let mut equivariance_residual = 0.0_f64;
    for flat in &points {
        let pt = SphereCotangentPoint::from_flat(flat)?;
        let h: Vec<f64> = (1..=8)
            .map(|a| momentum_hamiltonian(a, &pt))
            .collect::<Result<_>>()?;
        let y2 = pt.y.dotc(&pt.y).re;
        let z2 = pt.z.dotc(&pt.z).re;
        let yx = pt.y.dotc(&pt.x);
        let zw = pt.z.dotc(&pt.w);
        let kinetic = -(y2 + z2 - (yx * yx).re - (zw * zw).re) / 4.0;
        kinetic_identity_residual =
            kinetic_identity_residual.max((h[4] + h[7] - kinetic).abs());
        let shifted = h[4] + h[7] + 0.25 * (h[2] * h[2] + h[6] * h[6]);
        shifted_identity_residual =
            shifted_identity_residual.max((shifted + 0.25 * (y2 + z2)).abs());
        let psi = psi_v(k, l, &pt)?;
        let combo = Complex::new(0.0, k as f64) * h[2] + Complex::new(0.0, l as f64) * h[6];
        momentum_combination_residual = momentum_combination_residual.max((psi - combo).norm());

        let u3 = random_unitary(3, rng);
        let u2 = random_unitary(2, rng);
        let moved = psi_g(&pt.acted_on(&u3, &u2))?;
        let here = psi_g(&pt)?;
        let conj_xi = &u3 * here.xi.matrix() * u3.adjoint();
        let conj_eta = &u2 * here.eta.matrix() * u2.adjoint();
        equivariance_residual = equivariance_residual
            .max((moved.xi.matrix() - conj_xi).norm())
            .max((moved.eta.matrix() - conj_eta).norm());
    }

    // Independence of the eight at the base point.
    let base = SphereCotangentPoint::base_point();
    let base_flat = base.to_flat();
    let independence_rank = independence_rank(&fields, &base_flat, Some(&constraints))?;

    // The seven with index 3 removed, on the circle-momentum zero level,
    // modulo the circle direction.
    let mut level_constraints = sphere_constraints();
    level_constraints
        .constraints
        .push(circle_momentum_field(k, l));
    let seven: Vec<ScalarField> = [1u8, 2, 4, 5, 6, 7, 8]
        .iter()
        .map(|&a| hamiltonian_field(a))
        .collect();
    let circle = circle_direction(k, l, &base_flat);
    let reduced_rank = independence_rank_excluding(
        &seven,
        &base_flat,
        Some(&level_constraints),
        &[circle],
    )?;

    let circle_momentum_at_base = psi_v(k, l, &base)?.norm();

    // Conservation along the constrained flow of the kinetic Hamiltonian.
    let h5 = hamiltonian_field(5);
    let h8 = hamiltonian_field(8);
    let kinetic = ScalarField::new(SPHERE_PHASE_DIM, move |p| h5.eval(p) + h8.eval(p));
    let traj = hamiltonian_flow(
        &kinetic,
        &base_flat,
        2.0,
        2000,
        Some(&constraints),
        &FlowConfig::default(),
    )?;
    let conservation_drift = fields
        .iter()
        .map(|f| traj.observable_drift(f))
        .fold(0.0, f64::max);

    Ok(WksSystemReport {
        k,
        l,
        involution_max: involution.max_abs,
        independence_rank,
        reduced_rank,
        circle_momentum_at_base,
        kinetic_identity_residual,
        shifted_identity_residual,
        momentum_combination_residual,
        equivariance_residual,
        conservation_drift,
        flow_constraint_residual: traj.max_constraint_residual(),
    })
}

// ---------------------------------------------------------------------------
// Left-trivialized T*SU(3)
// ---------------------------------------------------------------------------

/// Point of T*SU(3) in left trivialization: a group element and a fiber
/// element of the algebra.
#[derive(Debug, Clone)]
pub struct TrivializedCotangentPoint {
    pub g: CMatrix,
    pub x: LieAlgebraElement,
}

const GROUP_TOL: f64 = 1e-8;

impl TrivializedCotangentPoint {
    pub fn new(g: CMatrix, x: LieAlgebraElement) -> Result<Self> {
        if g.nrows() != 3 || g.ncols() != 3 {
            return Err(Error::DimensionMismatch("expected a 3 x 3 group element".into()));
        }
        let unit_defect = (g.adjoint() * &g - CMatrix::identity(3, 3)).norm();
        let det_defect = (g.determinant() - Complex::new(1.0, 0.0)).norm();
        if unit_defect > GROUP_TOL || det_defect > GROUP_TOL {
            return Err(Error::InvalidInput(format!(
                "group element defect: unitary {unit_defect:.2e}, det {det_defect:.2e}"
            )));
        }
        if x.flavor != Flavor::Su || x.n != 3 {
            return Err(Error::InvalidInput("fiber must lie in su(3)".into()));
        }
        Ok(Self { g, x })
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self {
            g: special_unitary(3, rng),
            x: LieAlgebraElement::random(Flavor::Su, 3, rng),
        }
    }
}

/// Haar-ish random special unitary matrix.
pub fn special_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let u = random_unitary(n, rng);
    let d = u.determinant();
    // Divide one column by the determinant to land in the special group.
    let mut out = u;
    for i in 0..n {
        out[(i, 0)] /= d;
    }
    out
}

/// Momentum of left translations in the left trivialization: Ad-conjugated
/// fiber, g x g^{-1}.
pub fn psi_g_plus(p: &TrivializedCotangentPoint) -> LieAlgebraElement {
    let m = &p.g * p.x.matrix() * p.g.adjoint();
    LieAlgebraElement::new(Flavor::Su, LieAlgebraElement::project(Flavor::Su, &m))
        .expect("conjugation stays in the algebra")
}

/// Momentum of right translations: the fiber itself.
pub fn psi_g_minus(p: &TrivializedCotangentPoint) -> LieAlgebraElement {
    p.x.clone()
}

/// The product momentum (left, -right) into su(3) x su(3).
pub fn momentum_product(p: &TrivializedCotangentPoint) -> ProductAlgebraElement {
    ProductAlgebraElement::new(psi_g_plus(p), psi_g_minus(p).scale(-1.0))
}

/// Scalar field on the trivialized cotangent bundle.
pub trait PhaseField: Send + Sync {
    fn eval(&self, p: &TrivializedCotangentPoint) -> f64;
}

impl<F: Fn(&TrivializedCotangentPoint) -> f64 + Send + Sync> PhaseField for F {
    fn eval(&self, p: &TrivializedCotangentPoint) -> f64 {
        self(p)
    }
}

fn su3_basis() -> Vec<LieAlgebraElement> {
    LieAlgebraElement::zero(Flavor::Su, 3).basis()
}

/// Directional derivatives of a phase field: 8 group directions (right
/// translation by basis exponentials) followed by 8 fiber directions.
pub fn phase_differential(f: &dyn PhaseField, p: &TrivializedCotangentPoint) -> Vec<f64> {
    let basis = su3_basis();
    let mut out = Vec::with_capacity(16);
    for e in &basis {
        let step = e.matrix() * Complex::new(FD_STEP, 0.0);
        let fwd = TrivializedCotangentPoint {
            g: &p.g * skew_hermitian_exp(&step),
            x: p.x.clone(),
        };
        let bwd = TrivializedCotangentPoint {
            g: &p.g * skew_hermitian_exp(&(-&step)),
            x: p.x.clone(),
        };
        out.push((f.eval(&fwd) - f.eval(&bwd)) / (2.0 * FD_STEP));
    }
    for e in &basis {
        let fwd = TrivializedCotangentPoint {
            g: p.g.clone(),
            x: p.x.add_scaled(e, FD_STEP),
        };
        let bwd = TrivializedCotangentPoint {
            g: p.g.clone(),
            x: p.x.add_scaled(e, -FD_STEP),
        };
        out.push((f.eval(&fwd) - f.eval(&bwd)) / (2.0 * FD_STEP));
    }
    out
}

fn bracket_from_differentials(
    df: &[f64],
    dk: &[f64],
    x: &LieAlgebraElement,
    basis: &[LieAlgebraElement],
) -> f64 {
    let mut mixed = 0.0;
    for i in 0..8 {
        mixed += df[i] * dk[8 + i] - dk[i] * df[8 + i];
    }
    let mut a = x.zero_like();
    let mut b = x.zero_like();
    for i in 0..8 {
        a = a.add_scaled(&basis[i], df[8 + i]);
        b = b.add_scaled(&basis[i], dk[8 + i]);
    }
    mixed - x.pair(&a.commutator(&b))
}

/// Canonical cotangent bracket in left trivialization. The fiber term's sign
/// is pinned by the validation contract: pullbacks through the left and
/// right momenta commute, and each momentum is a Poisson map onto the
/// (+/-)-Lie-Poisson structure.
pub fn trivialized_bracket(
    f: &dyn PhaseField,
    k: &dyn PhaseField,
    p: &TrivializedCotangentPoint,
) -> Result<f64> {
    let df = phase_differential(f, p);
    let dk = phase_differential(k, p);
    if df.iter().chain(dk.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("phase differential".into()));
    }
    Ok(bracket_from_differentials(&df, &dk, &p.x, &su3_basis()))
}

/// The five commuting scalars on su(3): the two corner torus generators, the
/// corner-block quadratic, the full quadratic and the determinant.
fn su3_scalar(index: usize, m: &CMatrix) -> f64 {
    match index {
        0 => m[(2, 2)].im,
        1 => (m[(1, 1)] + m[(2, 2)]).im,
        2 => {
            let b = m.view((1, 1), (2, 2));
            0.5 * (b * b).trace().re
        }
        3 => 0.5 * (m * m).trace().re,
        4 => m.determinant().im,
        _ => unreachable!(),
    }
}

/// Names and evaluators of the ten two-sided integrals on T*SU(3): the five
/// scalars composed with each of the left/right momenta.
pub fn su3_integral_fields() -> Vec<(String, Box<dyn PhaseField>)> {
    let names = ["corner", "corner-trace", "block-quadratic", "quadratic", "determinant"];
    let mut out: Vec<(String, Box<dyn PhaseField>)> = Vec::new();
    for (idx, name) in names.iter().enumerate() {
        out.push((
            format!("{name}+"),
            Box::new(move |p: &TrivializedCotangentPoint| {
                su3_scalar(idx, psi_g_plus(p).matrix())
            }),
        ));
        out.push((
            format!("{name}-"),
            Box::new(move |p: &TrivializedCotangentPoint| {
                su3_scalar(idx, psi_g_minus(p).matrix())
            }),
        ));
    }
    out
}

/// Values of the two-sided integrals at a point.
pub fn su3_integral_set(p: &TrivializedCotangentPoint) -> Vec<(String, f64)> {
    su3_integral_fields()
        .into_iter()
        .map(|(name, f)| {
            let v = f.eval(p);
            (name, v)
        })
        .collect()
}

/// One-parameter torus direction of an Eschenburg quartet inside the product
/// of diagonal tori (both factors traceless).
pub fn torus_direction(u: &EschenburgQuartet) -> Result<ProductAlgebraElement> {
    let plus = LieAlgebraElement::diag_imag(
        Flavor::Su,
        &[u.k as f64, u.l as f64, -(u.k + u.l) as f64],
    )?;
    let minus = LieAlgebraElement::diag_imag(
        Flavor::Su,
        &[u.p as f64, u.q as f64, -(u.p + u.q) as f64],
    )?;
    Ok(ProductAlgebraElement::new(plus, minus))
}

/// The default regular shift direction in the product of diagonal tori.
pub fn default_shift_direction() -> ProductAlgebraElement {
    let plus = LieAlgebraElement::diag_imag(Flavor::Su, &[1.0, 2.0, -3.0]).unwrap();
    let minus = LieAlgebraElement::diag_imag(Flavor::Su, &[5.0, 7.0, -12.0]).unwrap();
    ProductAlgebraElement::new(plus, minus)
}

/// Exact phase differential of f composed with the product momentum map.
///
/// With (gamma_+, gamma_-) the dual-side gradient of f at Psi_H(P) and
/// w = g^{-1} gamma_+ g, the group-direction derivative along e is
/// <[x, w], e> and the fiber-direction derivative is <w - gamma_-, e>.
pub fn momentum_pullback_differential(
    f: &dyn CoalgebraField<ProductAlgebraElement>,
    p: &TrivializedCotangentPoint,
) -> Vec<f64> {
    let basis = su3_basis();
    let h = momentum_product(p);
    let grad = f.gradient(&h);
    let conj = p.g.adjoint() * grad.plus.matrix() * &p.g;
    let w = LieAlgebraElement::new(
        Flavor::Su,
        LieAlgebraElement::project(Flavor::Su, &conj),
    )
    .expect("conjugation stays in the algebra");
    let group_part = p.x.commutator(&w);
    let fiber_part = w.add_scaled(&grad.minus, -1.0);
    let mut out = Vec::with_capacity(16);
    for e in &basis {
        out.push(e.pair(&group_part));
    }
    for e in &basis {
        out.push(e.pair(&fiber_part));
    }
    out
}

/// Verification report for the pulled-back argument-shift integrals of an
/// Eschenburg or Aloff-Wallach parameter set.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EschenburgReport {
    pub quartet: EschenburgQuartet,
    /// The shift direction passed the regularity test.
    pub shift_is_regular: bool,
    /// Max pairwise bracket over the family (including the circle momentum)
    /// at the sampled points.
    pub involution_max: f64,
    /// Rank of the family differentials at a regular point (dim of the
    /// group expected).
    pub differential_dimension: usize,
    /// Rank on the circle-momentum zero level modulo the orbit direction
    /// (dim of the quotient expected).
    pub reduced_rank: usize,
}

impl EschenburgReport {
    pub fn pass(&self, tol: &Tolerances) -> bool {
        self.shift_is_regular
            && self.involution_max < tol.involution
            && self.differential_dimension == 8
            && self.reduced_rank == 7
    }
}

/// Tangent vector of the quartet's circle orbit through `p`, in the same
/// 16 coordinates as [`phase_differential`].
fn orbit_direction(
    zeta: &ProductAlgebraElement,
    p: &TrivializedCotangentPoint,
) -> Vec<f64> {
    let basis = su3_basis();
    // Base motion in the body frame: g^{-1} zeta_+ g - zeta_-; fiber motion:
    // [zeta_-, x].
    let conj = p.g.adjoint() * zeta.plus.matrix() * &p.g;
    let base = LieAlgebraElement::new(
        Flavor::Su,
        LieAlgebraElement::project(Flavor::Su, &conj),
    )
    .expect("conjugated torus direction")
    .add_scaled(&zeta.minus, -1.0);
    let fiber = zeta.minus.commutator(&p.x);
    let mut out = Vec::with_capacity(16);
    for e in &basis {
        out.push(e.pair(&base));
    }
    for e in &basis {
        out.push(e.pair(&fiber));
    }
    out
}

/// Builds the argument-shift family on the product dual, pulls it back
/// through the product momentum map, adjoins the circle momentum of the
/// quartet, and reports involution and the two rank targets.
pub fn eschenburg_integral_report<R: Rng + ?Sized>(
    u: &EschenburgQuartet,
    sample_points: usize,
    rng: &mut R,
) -> Result<EschenburgReport> {
    if !crate::topo7::admissible(u) {
        return Err(Error::InvalidInput(format!("{u:?} is not admissible")));
    }
    let a = default_shift_direction();
    let casimirs: Vec<std::sync::Arc<dyn CoalgebraField<ProductAlgebraElement>>> = vec![
        std::sync::Arc::new(FactorCasimir { factor: Factor::Plus, spec: CasimirSpec::TraceSquare }),
        std::sync::Arc::new(FactorCasimir { factor: Factor::Plus, spec: CasimirSpec::TraceCube }),
        std::sync::Arc::new(FactorCasimir { factor: Factor::Minus, spec: CasimirSpec::TraceSquare }),
        std::sync::Arc::new(FactorCasimir { factor: Factor::Minus, spec: CasimirSpec::TraceCube }),
    ];
    let family = argument_shift_family(&casimirs, &a, &[0.0, 1.0, 2.0]);
    let zeta = torus_direction(u)?;
    let mut fields: Vec<std::sync::Arc<dyn CoalgebraField<ProductAlgebraElement>>> = family
        .members
        .iter()
        .map(|m| {
            std::sync::Arc::new(m.clone()) as std::sync::Arc<dyn CoalgebraField<ProductAlgebraElement>>
        })
        .collect();
    fields.push(std::sync::Arc::new(crate::lie::LinearForm { a: zeta.clone() }));

    let basis = su3_basis();
    // Involution over random points, with cached analytic differentials.
    let mut involution_max = 0.0_f64;
    for _ in 0..sample_points.max(1) {
        let p = TrivializedCotangentPoint::random(rng);
        let diffs: Vec<Vec<f64>> = fields
            .iter()
            .map(|f| momentum_pullback_differential(f.as_ref(), &p))
            .collect();
        for i in 0..diffs.len() {
            for j in (i + 1)..diffs.len() {
                let v = bracket_from_differentials(&diffs[i], &diffs[j], &p.x, &basis).abs();
                involution_max = involution_max.max(v);
            }
        }
    }

    // Differential dimension at a regular point.
    let regular = find_regular_point(rng, None)?;
    let diffs: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| momentum_pullback_differential(f.as_ref(), &regular))
        .collect();
    let mut mat = RMatrix::zeros(diffs.len(), 16);
    for (i, d) in diffs.iter().enumerate() {
        for j in 0..16 {
            mat[(i, j)] = d[j];
        }
    }
    let differential_dimension = rank_with_threshold(&mat, RANK_REL_THRESHOLD);

    // Reduced rank on the circle-momentum zero level modulo the orbit.
    let on_level = find_regular_point(rng, Some(&zeta))?;
    let psi_u = crate::lie::LinearForm { a: zeta.clone() };
    let d_psi = momentum_pullback_differential(&psi_u, &on_level);
    let orbit = orbit_direction(&zeta, &on_level);
    let mut rows = RMatrix::zeros(2, 16);
    for j in 0..16 {
        rows[(0, j)] = d_psi[j];
        rows[(1, j)] = orbit[j];
    }
    let admissible_dirs = nullspace(&rows, RANK_REL_THRESHOLD);
    let diffs_level: Vec<Vec<f64>> = fields
        .iter()
        .map(|f| momentum_pullback_differential(f.as_ref(), &on_level))
        .collect();
    let mut proj = RMatrix::zeros(diffs_level.len(), admissible_dirs.ncols());
    for (i, d) in diffs_level.iter().enumerate() {
        let dv = RVector::from_vec(d.clone());
        for c in 0..admissible_dirs.ncols() {
            proj[(i, c)] = admissible_dirs.column(c).dot(&dv);
        }
    }
    let reduced_rank = rank_with_threshold(&proj, RANK_REL_THRESHOLD);

    Ok(EschenburgReport {
        quartet: *u,
        shift_is_regular: family.shift_is_regular,
        involution_max,
        differential_dimension,
        reduced_rank,
    })
}

/// Random point with a regular fiber element, optionally constrained to the
/// zero level of the quartet's circle momentum. Bounded rejection sampling.
fn find_regular_point<R: Rng + ?Sized>(
    rng: &mut R,
    level_of: Option<&ProductAlgebraElement>,
) -> Result<TrivializedCotangentPoint> {
    for _ in 0..10_000 {
        let g = special_unitary(3, rng);
        let mut x = LieAlgebraElement::random(Flavor::Su, 3, rng);
        if let Some(zeta) = level_of {
            // Psi_U(g, x) = <x, g^{-1} zeta_+ g - zeta_->: project x onto the
            // kernel of that linear form.
            let conj = g.adjoint() * zeta.plus.matrix() * &g;
            let w = LieAlgebraElement::new(
                Flavor::Su,
                LieAlgebraElement::project(Flavor::Su, &conj),
            )?
            .add_scaled(&zeta.minus, -1.0);
            let norm2 = w.pair(&w);
            if norm2 < 1e-12 {
                continue;
            }
            let overlap = x.pair(&w);
            x = x.add_scaled(&w, -overlap / norm2);
        }
        if crate::lie::stabilizer_dimension(&x) == 2 {
            return TrivializedCotangentPoint::new(g, x);
        }
    }
    Err(Error::SearchExhausted(
        "no regular point found in 10^4 draws".into(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::ShiftFamilyMember;
    use crate::poisson::{dirac_from_gradients, gradient};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn base_point_is_on_shell() {
        let p = SphereCotangentPoint::base_point();
        assert!(p.constraint_residual() < 1e-12);
        // The printed coordinates scaled by 3 would be far off the sphere.
        let bad = SphereCotangentPoint::new(
            p.x.map(|c| c / Complex::new(3.0, 0.0)),
            p.y.clone(),
            p.w.clone(),
            p.z.clone(),
            1e-8,
        );
        assert!(matches!(bad, Err(Error::OffManifold { .. })));
    }

    #[test]
    fn momentum_map_hand_values() {
        // x = e1, y = i e1, w = e1, z = i e1: both blocks equal -i E_11.
        let e1c3 = CVector::from_vec(vec![
            Complex::new(1.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
        ]);
        let e1c2 = CVector::from_vec(vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)]);
        let p = SphereCotangentPoint::new(
            e1c3.clone(),
            e1c3.map(|c| c * Complex::new(0.0, 1.0)),
            e1c2.clone(),
            e1c2.map(|c| c * Complex::new(0.0, 1.0)),
            1e-10,
        )
        .unwrap();
        let m = psi_g(&p).unwrap();
        assert!((m.xi.matrix()[(0, 0)] - Complex::new(0.0, -1.0)).norm() < 1e-14);
        assert!(m.xi.matrix().norm() - 1.0 < 1e-12);
        assert!((m.eta.matrix()[(0, 0)] - Complex::new(0.0, -1.0)).norm() < 1e-14);
        // Circle momentum with weights (2, 3): -2i - 3i = -5i.
        let v = psi_v(2, 3, &p).unwrap();
        assert!((v - Complex::new(0.0, -5.0)).norm() < 1e-12);
        // Scalars of xi = -i E11: corner 0, trace -1, half quadratic -1/2.
        assert_eq!(invariant_scalar(1, &m).unwrap(), 0.0);
        assert!((invariant_scalar(3, &m).unwrap() + 1.0).abs() < 1e-14);
        assert!((invariant_scalar(5, &m).unwrap() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn zero_fiber_gives_zero_momentum() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut p = SphereCotangentPoint::random_on_shell(&mut rng);
        p.y = CVector::zeros(3);
        p.z = CVector::zeros(2);
        let m = psi_g(&p).unwrap();
        assert_eq!(m.xi.matrix().norm(), 0.0);
        assert_eq!(m.eta.matrix().norm(), 0.0);
        assert_eq!(psi_v(3, 5, &p).unwrap().norm(), 0.0);
        for a in 1..=8 {
            assert_eq!(invariant_scalar(a, &m).unwrap(), 0.0);
        }
    }

    #[test]
    fn equivariance_of_product_momentum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let p = SphereCotangentPoint::random_on_shell(&mut rng);
            let u3 = random_unitary(3, &mut rng);
            let u2 = random_unitary(2, &mut rng);
            let moved = psi_g(&p.acted_on(&u3, &u2)).unwrap();
            let here = psi_g(&p).unwrap();
            let conj_xi = &u3 * here.xi.matrix() * u3.adjoint();
            let conj_eta = &u2 * here.eta.matrix() * u2.adjoint();
            assert!((moved.xi.matrix() - conj_xi).norm() < 1e-9);
            assert!((moved.eta.matrix() - conj_eta).norm() < 1e-9);
        }
    }

    #[test]
    fn base_point_sits_on_every_circle_momentum_level() {
        // Both fiber products vanish at the base point, so the circle
        // momentum is zero there for every weight pair.
        let p = SphereCotangentPoint::base_point();
        for (k, l) in [(1i64, 4i64), (2, 3), (-7, 5), (11, -13)] {
            assert!(psi_v(k, l, &p).unwrap().norm() < 1e-14, "({k}, {l})");
        }
    }

    #[test]
    fn momentum_combination_identity_bulk() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = SphereCotangentPoint::random_on_shell(&mut rng);
            let psi = psi_v(2, 3, &p).unwrap();
            let h3 = momentum_hamiltonian(3, &p).unwrap();
            let h7 = momentum_hamiltonian(7, &p).unwrap();
            let combo = Complex::new(0.0, 2.0) * h3 + Complex::new(0.0, 3.0) * h7;
            assert!((psi - combo).norm() < 1e-9);
        }
    }

    #[test]
    fn kinetic_identity_bulk() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let p = SphereCotangentPoint::random_on_shell(&mut rng);
            let h5 = momentum_hamiltonian(5, &p).unwrap();
            let h8 = momentum_hamiltonian(8, &p).unwrap();
            let y2 = p.y.dotc(&p.y).re;
            let z2 = p.z.dotc(&p.z).re;
            let yx = p.y.dotc(&p.x);
            let zw = p.z.dotc(&p.w);
            let expected = -(y2 + z2 - (yx * yx).re - (zw * zw).re) / 4.0;
            assert!((h5 + h8 - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn wks_system_report_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let tol = Tolerances::default();
        let report = wks_integrable_system(1, 4, 6, &mut rng).unwrap();
        assert!(report.involution_max < tol.involution, "{report:?}");
        assert_eq!(report.independence_rank, 8, "{report:?}");
        assert_eq!(report.reduced_rank, 7, "{report:?}");
        assert!(report.circle_momentum_at_base < 1e-12);
        assert!(report.pass(&tol), "{report:?}");
    }

    #[test]
    fn shifted_kinetic_flow_preserves_fiber_norm() {
        // H' = H5 + H8 + (H3^2 + H7^2)/4 equals -(|y|^2 + |z|^2)/4, so its
        // constrained flow preserves the fiber norm to integrator tolerance.
        let constraints = sphere_constraints();
        let h5 = hamiltonian_field(5);
        let h8 = hamiltonian_field(8);
        let h3 = hamiltonian_field(3);
        let h7 = hamiltonian_field(7);
        let shifted = ScalarField::new(SPHERE_PHASE_DIM, move |p| {
            h5.eval(p) + h8.eval(p) + 0.25 * (h3.eval(p).powi(2) + h7.eval(p).powi(2))
        });
        let fiber_norm = ScalarField::new(SPHERE_PHASE_DIM, |p| {
            p[10..20].iter().map(|v| v * v).sum::<f64>()
        });
        let p0 = SphereCotangentPoint::base_point().to_flat();
        let traj = hamiltonian_flow(
            &shifted,
            &p0,
            1.0,
            1000,
            Some(&constraints),
            &FlowConfig::default(),
        )
        .unwrap();
        let drift = traj.observable_drift(&fiber_norm);
        assert!(drift < 1e-8, "fiber norm drift {drift}");
        // And the identity itself along the whole trajectory.
        for state in traj.states.iter().step_by(100) {
            let v = shifted.eval(state) + 0.25 * fiber_norm.eval(state);
            assert!(v.abs() < 1e-9, "identity residual {v}");
        }
    }

    #[test]
    fn circle_momentum_commutes_with_all_hamiltonians() {
        let constraints = sphere_constraints();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let psi = circle_momentum_field(2, 3);
        for _ in 0..5 {
            let p = SphereCotangentPoint::random_on_shell(&mut rng).to_flat();
            let gp = gradient(&psi, &p).unwrap();
            let cgrads: Vec<Vec<f64>> = constraints
                .constraints
                .iter()
                .map(|c| gradient(c, &p).unwrap())
                .collect();
            for a in 1..=8u8 {
                let ga = gradient(&hamiltonian_field(a), &p).unwrap();
                let v = dirac_from_gradients(&ga, &gp, &cgrads).unwrap();
                assert!(v.abs() < 1e-5, "H_{a} against circle momentum: {v}");
            }
        }
    }

    #[test]
    fn wks_rejects_bad_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        assert!(wks_integrable_system(2, 4, 2, &mut rng).is_err());
        assert!(wks_integrable_system(1, 0, 2, &mut rng).is_err());
    }

    #[test]
    fn trivialized_bracket_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let p = TrivializedCotangentPoint::random(&mut rng);
            let alpha = LieAlgebraElement::random(Flavor::Su, 3, &mut rng);
            let beta = LieAlgebraElement::random(Flavor::Su, 3, &mut rng);
            let fa = alpha.clone();
            let fb = beta.clone();
            let plus_a = move |q: &TrivializedCotangentPoint| fa.pair(&psi_g_plus(q));
            let minus_b = move |q: &TrivializedCotangentPoint| fb.pair(&psi_g_minus(q));
            // Left and right pullbacks commute.
            let mixed = trivialized_bracket(&plus_a, &minus_b, &p).unwrap();
            assert!(mixed.abs() < 1e-6, "mixed bracket {mixed}");
            // Plus is a Poisson map onto the plus structure.
            let fb2 = beta.clone();
            let plus_b = move |q: &TrivializedCotangentPoint| fb2.pair(&psi_g_plus(q));
            let lhs = trivialized_bracket(&plus_a, &plus_b, &p).unwrap();
            let lp = psi_g_plus(&p).pair(&alpha.commutator(&beta));
            assert!((lhs - lp).abs() < 1e-6, "plus: {lhs} vs {lp}");
            // Minus is anti-Poisson.
            let fa3 = alpha.clone();
            let minus_a = move |q: &TrivializedCotangentPoint| fa3.pair(&psi_g_minus(q));
            let rhs = trivialized_bracket(&minus_a, &minus_b, &p).unwrap();
            let lp_minus = psi_g_minus(&p).pair(&alpha.commutator(&beta));
            assert!((rhs + lp_minus).abs() < 1e-6, "minus: {rhs} vs {lp_minus}");
        }
    }

    #[test]
    fn left_translation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let p = TrivializedCotangentPoint::random(&mut rng);
            let h = special_unitary(3, &mut rng);
            let moved = TrivializedCotangentPoint::new(&h * &p.g, p.x.clone()).unwrap();
            let lhs = psi_g_plus(&moved);
            let rhs = &h * psi_g_plus(&p).matrix() * h.adjoint();
            assert!((lhs.matrix() - rhs).norm() < 1e-9);
            // The right momentum is untouched by left translation.
            assert!((psi_g_minus(&moved).matrix() - psi_g_minus(&p).matrix()).norm() < 1e-14);
        }
    }

    #[test]
    fn casimir_pullbacks_agree_on_both_sides() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let p = TrivializedCotangentPoint::random(&mut rng);
            let plus = psi_g_plus(&p);
            let minus = psi_g_minus(&p);
            for spec in [CasimirSpec::TraceSquare, CasimirSpec::Determinant] {
                let a = spec.eval(&plus);
                let b = spec.eval(&minus);
                assert!((a - b).abs() < 1e-10, "{spec:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn su3_integrals_involution_and_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let fields = su3_integral_fields();
        let mut max = 0.0_f64;
        for _ in 0..3 {
            let p = TrivializedCotangentPoint::random(&mut rng);
            let basis = su3_basis();
            let diffs: Vec<Vec<f64>> = fields
                .iter()
                .map(|(_, f)| phase_differential(f.as_ref(), &p))
                .collect();
            for i in 0..diffs.len() {
                for j in (i + 1)..diffs.len() {
                    max = max.max(
                        bracket_from_differentials(&diffs[i], &diffs[j], &p.x, &basis).abs(),
                    );
                }
            }
        }
        assert!(max < 1e-5, "involution max {max}");

        // Zero fiber: every trace polynomial vanishes.
        let mut rng2 = ChaCha8Rng::seed_from_u64(11);
        let p0 = TrivializedCotangentPoint::new(
            special_unitary(3, &mut rng2),
            LieAlgebraElement::zero(Flavor::Su, 3),
        )
        .unwrap();
        for (name, value) in su3_integral_set(&p0) {
            assert!(value.abs() < 1e-14, "{name} at zero fiber: {value}");
        }

        // Ad-invariant members agree on both sides.
        let p = TrivializedCotangentPoint::random(&mut rng);
        let values: std::collections::HashMap<String, f64> =
            su3_integral_set(&p).into_iter().collect();
        assert!((values["quadratic+"] - values["quadratic-"]).abs() < 1e-10);
        assert!((values["determinant+"] - values["determinant-"]).abs() < 1e-10);

        // Invariance under the quartet torus action for (-1, -1, -2, 0).
        let u = EschenburgQuartet::new(-1, -1, -2, 0);
        let zeta = torus_direction(&u).unwrap();
        for t in [0.3, 1.1] {
            let u1 = skew_hermitian_exp(&(zeta.plus.matrix() * Complex::new(t, 0.0)));
            let u2 = skew_hermitian_exp(&(zeta.minus.matrix() * Complex::new(t, 0.0)));
            let moved = TrivializedCotangentPoint::new(
                &u1 * &p.g * u2.adjoint(),
                p.x.conjugated(&u2),
            )
            .unwrap();
            for ((name, before), (_, after)) in
                su3_integral_set(&p).iter().zip(su3_integral_set(&moved).iter())
            {
                assert!(
                    (before - after).abs() < 1e-9,
                    "{name}: {before} vs {after} under torus action"
                );
            }
        }
    }

    #[test]
    fn pullback_differentials_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let a = default_shift_direction();
        let member = ShiftFamilyMember {
            casimir: std::sync::Arc::new(FactorCasimir {
                factor: Factor::Plus,
                spec: CasimirSpec::TraceCube,
            }) as std::sync::Arc<dyn CoalgebraField<ProductAlgebraElement>>,
            lambda: 1.0,
            a,
        };
        for _ in 0..3 {
            let p = TrivializedCotangentPoint::random(&mut rng);
            let analytic = momentum_pullback_differential(&member, &p);
            let m = member.clone();
            let as_phase = move |q: &TrivializedCotangentPoint| m.eval(&momentum_product(q));
            let fd = phase_differential(&as_phase, &p);
            let scale = analytic.iter().fold(1.0_f64, |s, v| s.max(v.abs()));
            for (x, y) in analytic.iter().zip(fd.iter()) {
                assert!((x - y).abs() < 1e-5 * scale, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn eschenburg_report_aloff_wallach() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let tol = Tolerances::default();
        let u = EschenburgQuartet::new(0, 0, 1, 2);
        let report = eschenburg_integral_report(&u, 2, &mut rng).unwrap();
        assert!(report.shift_is_regular);
        assert!(report.involution_max < tol.involution, "{report:?}");
        assert_eq!(report.differential_dimension, 8, "{report:?}");
        assert_eq!(report.reduced_rank, 7, "{report:?}");
    }

    #[test]
    fn eschenburg_report_generic_quartet() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let tol = Tolerances::default();
        let u = EschenburgQuartet::new(-1, -1, -2, 0);
        let report = eschenburg_integral_report(&u, 2, &mut rng).unwrap();
        assert!(report.pass(&tol), "{report:?}");
    }

    #[test]
    fn product_shift_family_meets_integrability_counts() {
        // ddim = (16 + 4)/2 = 10 and drank = (16 - 4)/2 = 6 on the product
        // dual at a regular point.
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = default_shift_direction();
        assert!(crate::lie::is_regular(&a));
        let casimirs: Vec<std::sync::Arc<dyn CoalgebraField<ProductAlgebraElement>>> = vec![
            std::sync::Arc::new(FactorCasimir { factor: Factor::Plus, spec: CasimirSpec::TraceSquare }),
            std::sync::Arc::new(FactorCasimir { factor: Factor::Plus, spec: CasimirSpec::TraceCube }),
            std::sync::Arc::new(FactorCasimir { factor: Factor::Minus, spec: CasimirSpec::TraceSquare }),
            std::sync::Arc::new(FactorCasimir { factor: Factor::Minus, spec: CasimirSpec::TraceCube }),
        ];
        let family = argument_shift_family(&casimirs, &a, &[0.0, 1.0, 2.0]);
        let x = loop {
            let cand = ProductAlgebraElement::new(
                LieAlgebraElement::random(Flavor::Su, 3, &mut rng),
                LieAlgebraElement::random(Flavor::Su, 3, &mut rng),
            );
            if crate::lie::is_regular(&cand) {
                break cand;
            }
        };
        let refs: Vec<&dyn CoalgebraField<ProductAlgebraElement>> = family
            .members
            .iter()
            .map(|m| m as &dyn CoalgebraField<ProductAlgebraElement>)
            .collect();
        assert_eq!(crate::lie::differential_dimension(&refs, &x), 10);
        assert_eq!(crate::lie::differential_rank(&refs, &x, 1e-5).unwrap(), 6);
    }

    #[test]
    fn product_shift_family_is_torus_invariant() {
        // Members with a diagonal shift direction are unchanged under the
        // coadjoint action of the product diagonal torus.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = default_shift_direction();
        let casimirs: Vec<std::sync::Arc<dyn CoalgebraField<ProductAlgebraElement>>> = vec![
            std::sync::Arc::new(FactorCasimir { factor: Factor::Plus, spec: CasimirSpec::TraceCube }),
            std::sync::Arc::new(FactorCasimir { factor: Factor::Minus, spec: CasimirSpec::TraceSquare }),
        ];
        let family = argument_shift_family(&casimirs, &a, &[0.0, 1.3]);
        for _ in 0..5 {
            let x = ProductAlgebraElement::new(
                LieAlgebraElement::random(Flavor::Su, 3, &mut rng),
                LieAlgebraElement::random(Flavor::Su, 3, &mut rng),
            );
            let angles: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let u_plus = skew_hermitian_exp(
                LieAlgebraElement::diag_imag(Flavor::Su, &[angles[0], angles[1], -angles[0] - angles[1]])
                    .unwrap()
                    .matrix(),
            );
            let u_minus = skew_hermitian_exp(
                LieAlgebraElement::diag_imag(Flavor::Su, &[angles[2], angles[3], -angles[2] - angles[3]])
                    .unwrap()
                    .matrix(),
            );
            let moved = ProductAlgebraElement::new(
                x.plus.conjugated(&u_plus),
                x.minus.conjugated(&u_minus),
            );
            for m in &family.members {
                let before = m.eval(&x);
                let after = m.eval(&moved);
                assert!((before - after).abs() < 1e-9, "{before} vs {after}");
            }
        }
    }

    #[test]
    fn product_scalar_family_meets_dual_integrability_count() {
        // The eight invariant scalars are abelian on the dual of the product
        // algebra; adjoining the u(3) determinant Casimir reaches the
        // complete-integrability count (dim + rank)/2 = (13 + 5)/2 = 9 with
        // centre-field rank (dim - rank)/2 = 4 at regular points.
        struct Scalar(u8);
        impl CoalgebraField<ProductAlgebraElement> for Scalar {
            fn eval(&self, x: &ProductAlgebraElement) -> f64 {
                let v = MomentumValue {
                    xi: x.plus.clone(),
                    eta: x.minus.clone(),
                };
                invariant_scalar(self.0, &v).unwrap()
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let fields: Vec<Scalar> = (1..=8).map(Scalar).collect();
        let det_plus = FactorCasimir {
            factor: Factor::Plus,
            spec: CasimirSpec::Determinant,
        };
        let mut refs: Vec<&dyn CoalgebraField<ProductAlgebraElement>> =
            fields.iter().map(|f| f as _).collect();
        let x = loop {
            let cand = ProductAlgebraElement::new(
                LieAlgebraElement::random(Flavor::U, 3, &mut rng),
                LieAlgebraElement::random(Flavor::U, 2, &mut rng),
            );
            if crate::lie::is_regular(&cand) {
                break cand;
            }
        };
        assert_eq!(crate::lie::differential_dimension(&refs, &x), 8);
        refs.push(&det_plus);
        assert_eq!(crate::lie::differential_dimension(&refs, &x), 9);
        assert_eq!(crate::lie::differential_rank(&refs, &x, 1e-5).unwrap(), 4);
        let mut max = 0.0_f64;
        for i in 0..refs.len() {
            for j in (i + 1)..refs.len() {
                max = max.max(
                    crate::lie::lie_poisson_bracket(refs[i], refs[j], &x)
                        .unwrap()
                        .abs(),
                );
            }
        }
        assert!(max < 1e-6, "dual-side involution max {max}");
    }

    #[test]
    fn disjoint_hamiltonians_commute_exactly() {
        // H_3 depends on (x, y) only, H_7 on (w, z) only.
        let constraints = sphere_constraints();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let p = SphereCotangentPoint::random_on_shell(&mut rng).to_flat();
        let h3 = hamiltonian_field(3);
        let h7 = hamiltonian_field(7);
        let g3 = gradient(&h3, &p).unwrap();
        let g7 = gradient(&h7, &p).unwrap();
        let cgrads: Vec<Vec<f64>> = constraints
            .constraints
            .iter()
            .map(|c| gradient(c, &p).unwrap())
            .collect();
        let v = dirac_from_gradients(&g3, &g7, &cgrads).unwrap();
        assert!(v.abs() < 1e-9, "{v}");
    }
}
