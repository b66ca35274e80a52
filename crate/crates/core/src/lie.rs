//! Matrix Lie algebra arithmetic on u(n) and su(n) and their products: the
//! Ad-invariant pairing, the Lie-Poisson bracket on duals, Casimir functions
//! and the argument-shift family of commuting integrals.
//!
//! The dual g* is identified with g through the pairing <A, B> = -Re tr(AB),
//! which is symmetric, positive definite on skew-Hermitian matrices and
//! Ad-invariant; gradients of scalar fields are taken with respect to it.

use std::sync::Arc;

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::{FD_STEP, RANK_REL_THRESHOLD};
use crate::linalg::{adjugate, rank_with_threshold, CMatrix, RMatrix};
use crate::{Error, Result};

/// Which compact matrix algebra an element belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    /// Skew-Hermitian n x n matrices.
    U,
    /// Traceless skew-Hermitian n x n matrices.
    Su,
}

/// Element of u(n) or su(n).
#[derive(Debug, Clone)]
pub struct LieAlgebraElement {
    pub n: usize,
    pub flavor: Flavor,
    entries: CMatrix,
}

const SKEW_TOL: f64 = 1e-10;

impl LieAlgebraElement {
    pub fn new(flavor: Flavor, entries: CMatrix) -> Result<Self> {
        let n = entries.nrows();
        if entries.ncols() != n {
            return Err(Error::DimensionMismatch("algebra element must be square".into()));
        }
        let skew_defect = (&entries + entries.adjoint()).norm();
        if skew_defect > SKEW_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not skew-Hermitian (defect {skew_defect:.3e})"
            )));
        }
        if flavor == Flavor::Su && entries.trace().norm() > SKEW_TOL {
            return Err(Error::InvalidInput(format!(
                "su({n}) element must be traceless, |trace| = {:.3e}",
                entries.trace().norm()
            )));
        }
        Ok(Self { n, flavor, entries })
    }

    pub fn zero(flavor: Flavor, n: usize) -> Self {
        Self {
            n,
            flavor,
            entries: CMatrix::zeros(n, n),
        }
    }

    /// Diagonal element i * diag(values); for su the values must sum to zero.
    pub fn diag_imag(flavor: Flavor, values: &[f64]) -> Result<Self> {
        let n = values.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(0.0, values[i])
            } else {
                Complex::new(0.0, 0.0)
            }
        });
        Self::new(flavor, m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    /// Orthogonal projection of an arbitrary complex matrix onto the algebra.
    pub fn project(flavor: Flavor, m: &CMatrix) -> CMatrix {
        let n = m.nrows();
        let skew = (m - m.adjoint()) / Complex::new(2.0, 0.0);
        match flavor {
            Flavor::U => skew,
            Flavor::Su => {
                let t = skew.trace() / Complex::new(n as f64, 0.0);
                let mut out = skew;
                for i in 0..n {
                    out[(i, i)] -= t;
                }
                out
            }
        }
    }

    /// Gaussian random element, entry scale O(1).
    pub fn random<R: Rng + ?Sized>(flavor: Flavor, n: usize, rng: &mut R) -> Self {
        let raw = CMatrix::from_fn(n, n, |_, _| {
            Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        Self {
            n,
            flavor,
            entries: Self::project(flavor, &raw),
        }
    }

    /// Conjugation u x u^{-1}; the coadjoint action in our identification.
    pub fn conjugated(&self, u: &CMatrix) -> Self {
        Self {
            n: self.n,
            flavor: self.flavor,
            entries: LieAlgebraElement::project(self.flavor, &(u * &self.entries * u.adjoint())),
        }
    }
}

/// Ad-invariant pairing <A, B> = -Re tr(A B).
pub fn pairing(a: &LieAlgebraElement, b: &LieAlgebraElement) -> Result<f64> {
    if a.n != b.n || a.flavor != b.flavor {
        return Err(Error::DimensionMismatch(format!(
            "pairing of {:?}({}) with {:?}({})",
            a.flavor, a.n, b.flavor, b.n
        )));
    }
    Ok(-(a.entries.clone() * &b.entries).trace().re)
}

/// Common interface of u(n)/su(n) elements and their two-factor products, as
/// points of the dual. Scalar fields and brackets are generic over it.
pub trait AlgebraPoint: Clone {
    /// Real dimension of the algebra.
    fn dim(&self) -> usize;
    /// Rank (dimension of a maximal torus).
    fn algebra_rank(&self) -> usize;
    /// Orthonormal basis with respect to the pairing.
    fn basis(&self) -> Vec<Self>;
    fn add_scaled(&self, other: &Self, c: f64) -> Self;
    fn scale(&self, c: f64) -> Self;
    fn pair(&self, other: &Self) -> f64;
    fn commutator(&self, other: &Self) -> Self;
    fn zero_like(&self) -> Self;
}

fn u_basis(n: usize) -> Vec<CMatrix> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        let mut m = CMatrix::zeros(n, n);
        m[(j, j)] = Complex::new(0.0, 1.0);
        out.push(m);
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mut re = CMatrix::zeros(n, n);
            re[(j, k)] = Complex::new(s, 0.0);
            re[(k, j)] = Complex::new(-s, 0.0);
            out.push(re);
            let mut im = CMatrix::zeros(n, n);
            im[(j, k)] = Complex::new(0.0, s);
            im[(k, j)] = Complex::new(0.0, s);
            out.push(im);
        }
    }
    out
}

fn su_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n - 1);
    // Traceless diagonal directions, Gell-Mann style.
    for j in 1..n {
        let norm = 1.0 / ((j * (j + 1)) as f64).sqrt();
        let mut m = CMatrix::zeros(n, n);
        for i in 0..j {
            m[(i, i)] = Complex::new(0.0, norm);
        }
        m[(j, j)] = Complex::new(0.0, -(j as f64) * norm);
        out.push(m);
    }
    out.extend(u_basis(n).into_iter().skip(n));
    out
}

impl AlgebraPoint for LieAlgebraElement {
    fn dim(&self) -> usize {
        match self.flavor {
            Flavor::U => self.n * self.n,
            Flavor::Su => self.n * self.n - 1,
        }
    }

    fn algebra_rank(&self) -> usize {
        match self.flavor {
            Flavor::U => self.n,
            Flavor::Su => self.n - 1,
        }
    }

    fn basis(&self) -> Vec<Self> {
        let mats = match self.flavor {
            Flavor::U => u_basis(self.n),
            Flavor::Su => su_basis(self.n),
        };
        mats.into_iter()
            .map(|entries| Self {
                n: self.n,
                flavor: self.flavor,
                entries,
            })
            .collect()
    }

    fn add_scaled(&self, other: &Self, c: f64) -> Self {
        Self {
            n: self.n,
            flavor: self.flavor,
            entries: &self.entries + &other.entries * Complex::new(c, 0.0),
        }
    }

    fn scale(&self, c: f64) -> Self {
        Self {
            n: self.n,
            flavor: self.flavor,
            entries: &self.entries * Complex::new(c, 0.0),
        }
    }

    fn pair(&self, other: &Self) -> f64 {
        -(self.entries.clone() * &other.entries).trace().re
    }

    fn commutator(&self, other: &Self) -> Self {
        let c = &self.entries * &other.entries - &other.entries * &self.entries;
        Self {
            n: self.n,
            flavor: self.flavor,
            entries: c,
        }
    }

    fn zero_like(&self) -> Self {
        Self::zero(self.flavor, self.n)
    }
}

/// Element of a two-factor product algebra g_+ x g_-.
#[derive(Debug, Clone)]
pub struct ProductAlgebraElement {
    pub plus: LieAlgebraElement,
    pub minus: LieAlgebraElement,
}

impl ProductAlgebraElement {
    pub fn new(plus: LieAlgebraElement, minus: LieAlgebraElement) -> Self {
        Self { plus, minus }
    }
}

impl AlgebraPoint for ProductAlgebraElement {
    fn dim(&self) -> usize {
        self.plus.dim() + self.minus.dim()
    }

    fn algebra_rank(&self) -> usize {
        self.plus.algebra_rank() + self.minus.algebra_rank()
    }

    fn basis(&self) -> Vec<Self> {
        let mut out = Vec::with_capacity(self.dim());
        for b in self.plus.basis() {
            out.push(Self {
                plus: b,
                minus: self.minus.zero_like(),
            });
        }
        for b in self.minus.basis() {
            out.push(Self {
                plus: self.plus.zero_like(),
                minus: b,
            });
        }
        out
    }

    fn add_scaled(&self, other: &Self, c: f64) -> Self {
        Self {
            plus: self.plus.add_scaled(&other.plus, c),
            minus: self.minus.add_scaled(&other.minus, c),
        }
    }

    fn scale(&self, c: f64) -> Self {
        Self {
            plus: self.plus.scale(c),
            minus: self.minus.scale(c),
        }
    }

    fn pair(&self, other: &Self) -> f64 {
        self.plus.pair(&other.plus) + self.minus.pair(&other.minus)
    }

    fn commutator(&self, other: &Self) -> Self {
        Self {
            plus: self.plus.commutator(&other.plus),
            minus: self.minus.commutator(&other.minus),
        }
    }

    fn zero_like(&self) -> Self {
        Self {
            plus: self.plus.zero_like(),
            minus: self.minus.zero_like(),
        }
    }
}

/// Real-valued scalar field on the dual, with a gradient taken with respect
/// to the pairing; the default gradient is central finite differences in an
/// orthonormal basis.
pub trait CoalgebraField<P: AlgebraPoint>: Send + Sync {
    fn eval(&self, x: &P) -> f64;

    fn gradient(&self, x: &P) -> P {
        let basis = x.basis();
        let mut grad = x.zero_like();
        for e in &basis {
            let xp = x.add_scaled(e, FD_STEP);
            let xm = x.add_scaled(e, -FD_STEP);
            let d = (self.eval(&xp) - self.eval(&xm)) / (2.0 * FD_STEP);
            grad = grad.add_scaled(e, d);
        }
        grad
    }
}

/// Linear form <a, .>.
#[derive(Clone)]
pub struct LinearForm<P: AlgebraPoint> {
    pub a: P,
}

impl<P: AlgebraPoint + Send + Sync> CoalgebraField<P> for LinearForm<P> {
    fn eval(&self, x: &P) -> f64 {
        self.a.pair(x)
    }

    fn gradient(&self, _x: &P) -> P {
        self.a.clone()
    }
}

/// Ad-invariant polynomial kinds; all evaluate to real numbers on
/// skew-Hermitian matrices (odd-degree traces and odd-size determinants are
/// purely imaginary there, so those take the imaginary part).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CasimirSpec {
    /// g(x) = 1/2 tr(x^2)
    TraceSquare,
    /// g(x) = Im tr(x^3)
    TraceCube,
    /// g(x) = Re tr(x^k) for even k, Im tr(x^k) for odd k
    TraceK(u32),
    /// g(x) = Re det(x) for even n, Im det(x) for odd n
    Determinant,
    /// g(x) = Im tr(x)
    LinearTrace,
}

impl CasimirSpec {
    pub fn eval_matrix(&self, m: &CMatrix) -> f64 {
        match self {
            CasimirSpec::TraceSquare => 0.5 * (m * m).trace().re,
            CasimirSpec::TraceCube => (m * m * m).trace().im,
            CasimirSpec::TraceK(k) => {
                let mut p = CMatrix::identity(m.nrows(), m.ncols());
                for _ in 0..*k {
                    p = &p * m;
                }
                let t = p.trace();
                if k % 2 == 0 {
                    t.re
                } else {
                    t.im
                }
            }
            CasimirSpec::Determinant => {
                let d = m.determinant();
                if m.nrows().is_multiple_of(2) {
                    d.re
                } else {
                    d.im
                }
            }
            CasimirSpec::LinearTrace => m.trace().im,
        }
    }

    /// Gradient with respect to the pairing, projected to the flavor.
    pub fn gradient_matrix(&self, flavor: Flavor, m: &CMatrix) -> CMatrix {
        let i = Complex::new(0.0, 1.0);
        let raw: CMatrix = match self {
            CasimirSpec::TraceSquare => -m.clone(),
            CasimirSpec::TraceCube => (m * m).map(|z| z * 3.0 * i),
            CasimirSpec::TraceK(k) => {
                let n = m.nrows();
                let mut p = CMatrix::identity(n, n);
                for _ in 0..(k.saturating_sub(1)) {
                    p = &p * m;
                }
                if k % 2 == 0 {
                    p.map(|z| z * -(*k as f64))
                } else {
                    p.map(|z| z * (*k as f64) * i)
                }
            }
            CasimirSpec::Determinant => {
                let adj = adjugate(m);
                if m.nrows().is_multiple_of(2) {
                    -adj
                } else {
                    adj.map(|z| z * i)
                }
            }
            CasimirSpec::LinearTrace => {
                CMatrix::identity(m.nrows(), m.ncols()).map(|z| z * i)
            }
        };
        LieAlgebraElement::project(flavor, &raw)
    }
}

impl CoalgebraField<LieAlgebraElement> for CasimirSpec {
    fn eval(&self, x: &LieAlgebraElement) -> f64 {
        self.eval_matrix(&x.entries)
    }

    fn gradient(&self, x: &LieAlgebraElement) -> LieAlgebraElement {
        LieAlgebraElement {
            n: x.n,
            flavor: x.flavor,
            entries: self.gradient_matrix(x.flavor, &x.entries),
        }
    }
}

/// Which factor of a product algebra a Casimir lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Plus,
    Minus,
}

/// Casimir of one factor, viewed as a function on the product dual.
#[derive(Debug, Clone, Copy)]
pub struct FactorCasimir {
    pub factor: Factor,
    pub spec: CasimirSpec,
}

impl CoalgebraField<ProductAlgebraElement> for FactorCasimir {
    fn eval(&self, x: &ProductAlgebraElement) -> f64 {
        match self.factor {
            Factor::Plus => self.spec.eval(&x.plus),
            Factor::Minus => self.spec.eval(&x.minus),
        }
    }

    fn gradient(&self, x: &ProductAlgebraElement) -> ProductAlgebraElement {
        match self.factor {
            Factor::Plus => ProductAlgebraElement {
                plus: self.spec.gradient(&x.plus),
                minus: x.minus.zero_like(),
            },
            Factor::Minus => ProductAlgebraElement {
                plus: x.plus.zero_like(),
                minus: self.spec.gradient(&x.minus),
            },
        }
    }
}

/// One member x -> g(x + lambda a) of an argument-shift family.
#[derive(Clone)]
pub struct ShiftFamilyMember<P: AlgebraPoint> {
    pub casimir: Arc<dyn CoalgebraField<P>>,
    pub lambda: f64,
    pub a: P,
}

impl<P: AlgebraPoint + Send + Sync> CoalgebraField<P> for ShiftFamilyMember<P> {
    fn eval(&self, x: &P) -> f64 {
        self.casimir.eval(&x.add_scaled(&self.a, self.lambda))
    }

    fn gradient(&self, x: &P) -> P {
        self.casimir.gradient(&x.add_scaled(&self.a, self.lambda))
    }
}

/// Lie-Poisson bracket {f, g}(x) = <x, [grad f(x), grad g(x)]>.
pub fn lie_poisson_bracket<P: AlgebraPoint>(
    f: &dyn CoalgebraField<P>,
    g: &dyn CoalgebraField<P>,
    x: &P,
) -> Result<f64> {
    let gf = f.gradient(x);
    let gg = g.gradient(x);
    let v = x.pair(&gf.commutator(&gg));
    if !v.is_finite() {
        return Err(Error::NonFinite("Lie-Poisson bracket".into()));
    }
    Ok(v)
}

/// Hamiltonian vector of `f` at `x` for the Lie-Poisson structure (sign fixed
/// up to convention; only spans are consumed downstream).
pub fn lie_poisson_field<P: AlgebraPoint>(f: &dyn CoalgebraField<P>, x: &P) -> P {
    x.commutator(&f.gradient(x))
}

/// Dimension of the kernel of ad_a, computed in an orthonormal basis.
pub fn stabilizer_dimension<P: AlgebraPoint>(a: &P) -> usize {
    let basis = a.basis();
    let d = basis.len();
    let mut m = RMatrix::zeros(d, d);
    for (j, e) in basis.iter().enumerate() {
        let br = a.commutator(e);
        for (i, f) in basis.iter().enumerate() {
            m[(i, j)] = f.pair(&br);
        }
    }
    d - rank_with_threshold(&m, RANK_REL_THRESHOLD)
}

/// A regular element has stabilizer dimension equal to the algebra rank.
pub fn is_regular<P: AlgebraPoint>(a: &P) -> bool {
    stabilizer_dimension(a) == a.algebra_rank()
}

/// Argument-shift family {x -> g(x + lambda a)} over the given Casimirs and
/// shift sizes.
pub struct ShiftFamily<P: AlgebraPoint> {
    pub members: Vec<ShiftFamilyMember<P>>,
    /// False when the shift direction failed the regularity test; the family
    /// is still returned (regularity is only needed for completeness).
    pub shift_is_regular: bool,
}

pub fn argument_shift_family<P: AlgebraPoint>(
    casimirs: &[Arc<dyn CoalgebraField<P>>],
    a: &P,
    lambdas: &[f64],
) -> ShiftFamily<P> {
    let mut members = Vec::with_capacity(casimirs.len() * lambdas.len());
    for c in casimirs {
        for &lambda in lambdas {
            members.push(ShiftFamilyMember {
                casimir: Arc::clone(c),
                lambda,
                a: a.clone(),
            });
        }
    }
    ShiftFamily {
        members,
        shift_is_regular: is_regular(a),
    }
}

/// Rank of the gradients of `fields` at `x`: the differential dimension.
pub fn differential_dimension<P: AlgebraPoint>(
    fields: &[&dyn CoalgebraField<P>],
    x: &P,
) -> usize {
    if fields.is_empty() {
        return 0;
    }
    let basis = x.basis();
    let mut m = RMatrix::zeros(fields.len(), basis.len());
    for (i, f) in fields.iter().enumerate() {
        let g = f.gradient(x);
        for (j, e) in basis.iter().enumerate() {
            m[(i, j)] = e.pair(&g);
        }
    }
    rank_with_threshold(&m, RANK_REL_THRESHOLD)
}

/// Dimension of the span of the Hamiltonian vectors of the centre members at
/// `x`. Members whose bracket with every other member stays below `tol` at
/// `x` count as central.
pub fn differential_rank<P: AlgebraPoint>(
    fields: &[&dyn CoalgebraField<P>],
    x: &P,
    tol: f64,
) -> Result<usize> {
    if fields.is_empty() {
        return Ok(0);
    }
    let mut central: Vec<usize> = Vec::new();
    for i in 0..fields.len() {
        let mut max = 0.0_f64;
        for j in 0..fields.len() {
            if i != j {
                max = max.max(lie_poisson_bracket(fields[i], fields[j], x)?.abs());
            }
        }
        if max < tol {
            central.push(i);
        }
    }
    let basis = x.basis();
    let mut m = RMatrix::zeros(central.len(), basis.len());
    for (row, &i) in central.iter().enumerate() {
        let v = lie_poisson_field(fields[i], x);
        for (j, e) in basis.iter().enumerate() {
            m[(row, j)] = e.pair(&v);
        }
    }
    Ok(rank_with_threshold(&m, RANK_REL_THRESHOLD))
}
