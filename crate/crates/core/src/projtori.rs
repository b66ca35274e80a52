//! The commuting-integral system of projectively equivalent model metrics on
//! the n-torus: the comparison tensor of a metric pair, the polynomial family
//! of integrals in momentum form, its Hamiltonian vector field, the image of
//! the first-integral map, Liouville-torus covectors and Maslov-cycle analysis
//! of coordinate loops on those tori.
//!
//! Model metrics are g = sum Pi_i dx_i^2, gbar = sum rho_i Pi_i dx_i^2 with
//! Pi_i = prod_{j != i} |lambda_i - lambda_j| and rho_i^{-1} = lambda_i *
//! lambda_1 ... lambda_n, where each eigenfunction lambda_i depends on the
//! i-th coordinate alone and the eigenfunction ranges are strictly separated.
//! Pi_i is taken positive so that g is riemannian; the value of every
//! integral below is internally cross-checked against the tensor pipeline.

use nalgebra::DMatrix;

use crate::config::{FlowConfig, Tolerances, RANK_REL_THRESHOLD};
use crate::linalg::{adjugate, nullspace, RMatrix, RVector};
use crate::maslov::{LagrangianFrame, LagrangianLoop};
use crate::poisson::{hamiltonian_flow, ScalarField, Trajectory};
use crate::{Error, Result};

/// Periodic real function on [0, 1) given by trigonometric coefficients.
#[derive(Debug, Clone)]
pub struct TrigPolynomial {
    pub constant: f64,
    /// cos(2 pi k s) coefficients, k = 1..
    pub cos_coeffs: Vec<f64>,
    /// sin(2 pi k s) coefficients, k = 1..
    pub sin_coeffs: Vec<f64>,
}

impl TrigPolynomial {
    pub fn constant(c: f64) -> Self {
        Self {
            constant: c,
            cos_coeffs: vec![],
            sin_coeffs: vec![],
        }
    }

    /// c + amp * sin(2 pi k s)
    pub fn sinusoid(c: f64, amp: f64, harmonic: usize) -> Self {
        let mut sin_coeffs = vec![0.0; harmonic];
        sin_coeffs[harmonic - 1] = amp;
        Self {
            constant: c,
            cos_coeffs: vec![],
            sin_coeffs,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI;
        let mut v = self.constant;
        for (k, &a) in self.cos_coeffs.iter().enumerate() {
            v += a * (w * (k + 1) as f64 * s).cos();
        }
        for (k, &b) in self.sin_coeffs.iter().enumerate() {
            v += b * (w * (k + 1) as f64 * s).sin();
        }
        v
    }

    pub fn deriv(&self, s: f64) -> f64 {
        let w = 2.0 * std::f64::consts::PI;
        let mut v = 0.0;
        for (k, &a) in self.cos_coeffs.iter().enumerate() {
            let kw = w * (k + 1) as f64;
            v -= a * kw * (kw * s).sin();
        }
        for (k, &b) in self.sin_coeffs.iter().enumerate() {
            let kw = w * (k + 1) as f64;
            v += b * kw * (kw * s).cos();
        }
        v
    }
}

const VALIDATION_GRID: usize = 1024;

/// The separated eigenfunctions lambda_i with cached range data.
#[derive(Debug, Clone)]
pub struct SeparatedEigenfunctions {
    lambdas: Vec<TrigPolynomial>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl SeparatedEigenfunctions {
    /// Validates positivity (min lambda_1 > 0) and strict separation
    /// (max lambda_i < min lambda_{i+1}) on a 1024-point grid per coordinate.
    pub fn new(lambdas: Vec<TrigPolynomial>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::InvalidInput("need at least one eigenfunction".into()));
        }
        let mut lo = Vec::with_capacity(lambdas.len());
        let mut hi = Vec::with_capacity(lambdas.len());
        for l in &lambdas {
            let mut mn = f64::INFINITY;
            let mut mx = f64::NEG_INFINITY;
            for k in 0..VALIDATION_GRID {
                let v = l.eval(k as f64 / VALIDATION_GRID as f64);
                mn = mn.min(v);
                mx = mx.max(v);
            }
            lo.push(mn);
            hi.push(mx);
        }
        if lo[0] <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "eigenfunctions must be positive, min lambda_1 = {}",
                lo[0]
            )));
        }
        for i in 0..lambdas.len() - 1 {
            if hi[i] >= lo[i + 1] {
                return Err(Error::InvalidInput(format!(
                    "eigenfunction ranges {} and {} are not separated: [{}, {}] vs [{}, {}]",
                    i,
                    i + 1,
                    lo[i],
                    hi[i],
                    lo[i + 1],
                    hi[i + 1]
                )));
            }
        }
        Ok(Self { lambdas, lo, hi })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.lo[i]
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.hi[i]
    }
}

/// A pair of projectively equivalent model metrics on the torus.
#[derive(Debug, Clone)]
pub struct ModelMetricPair {
    pub eig: SeparatedEigenfunctions,
}

impl ModelMetricPair {
    pub fn new(eig: SeparatedEigenfunctions) -> Self {
        Self { eig }
    }

    pub fn n(&self) -> usize {
        self.eig.n()
    }

    pub fn lambda(&self, i: usize, s: f64) -> f64 {
        self.eig.lambdas[i].eval(s)
    }

    pub fn lambda_deriv(&self, i: usize, s: f64) -> f64 {
        self.eig.lambdas[i].deriv(s)
    }

    pub fn lambdas_at(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n()).map(|i| self.lambda(i, x[i])).collect()
    }

    /// Pi_i(x) = prod_{j != i} |lambda_i(x_i) - lambda_j(x_j)|, positive.
    pub fn pi_at(&self, x: &[f64]) -> Vec<f64> {
        let l = self.lambdas_at(x);
        (0..self.n())
            .map(|i| {
                (0..self.n())
                    .filter(|&j| j != i)
                    .map(|j| (l[i] - l[j]).abs())
                    .product::<f64>()
            })
            .collect()
    }

    /// rho_i(x) = 1 / (lambda_i * lambda_1 ... lambda_n).
    pub fn rho_at(&self, x: &[f64]) -> Vec<f64> {
        let l = self.lambdas_at(x);
        let prod: f64 = l.iter().product();
        l.iter().map(|li| 1.0 / (li * prod)).collect()
    }

    /// Coordinate matrices of (g, gbar) at x.
    pub fn metric_matrices(&self, x: &[f64]) -> (RMatrix, RMatrix) {
        let n = self.n();
        let pi = self.pi_at(x);
        let rho = self.rho_at(x);
        let g = RMatrix::from_fn(n, n, |i, j| if i == j { pi[i] } else { 0.0 });
        let gbar = RMatrix::from_fn(n, n, |i, j| if i == j { rho[i] * pi[i] } else { 0.0 });
        (g, gbar)
    }
}

/// (det(gbar)/det(g))^{1/(n+1)} * gbar^{-1} g for arbitrary coordinate
/// matrices of a metric pair.
pub fn comparison_tensor_from_matrices(g: &RMatrix, gbar: &RMatrix) -> Result<RMatrix> {
    let n = g.nrows();
    if gbar.nrows() != n || g.ncols() != n || gbar.ncols() != n {
        return Err(Error::DimensionMismatch("metric matrices must match".into()));
    }
    let det_g = g.determinant();
    let det_gbar = gbar.determinant();
    if det_g <= 0.0 || det_gbar <= 0.0 {
        return Err(Error::InvalidInput("metrics must be positive definite".into()));
    }
    let scale = (det_gbar / det_g).powf(1.0 / (n as f64 + 1.0));
    let inv = gbar
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::SingularParameter("gbar is not invertible".into()))?;
    Ok(inv * g * scale)
}

/// The comparison tensor of the model pair, evaluated through the general
/// determinant formula (not through the known diagonal simplification).
pub fn comparison_tensor(metrics: &ModelMetricPair, x: &[f64]) -> Result<RMatrix> {
    let (g, gbar) = metrics.metric_matrices(x);
    comparison_tensor_from_matrices(&g, &gbar)
}

/// Classical adjugate of (G - tau I); polynomial in tau, finite for every tau.
pub fn adjugate_tensor(metrics: &ModelMetricPair, x: &[f64], tau: f64) -> Result<RMatrix> {
    let g = comparison_tensor(metrics, x)?;
    let n = g.nrows();
    let shifted = g - RMatrix::identity(n, n) * tau;
    Ok(adjugate(&shifted))
}

/// Velocity-form integral <g S_tau v, v> on tangent vectors.
pub fn velocity_integral(
    metrics: &ModelMetricPair,
    x: &[f64],
    v: &[f64],
    tau: f64,
) -> Result<f64> {
    let n = metrics.n();
    if v.len() != n {
        return Err(Error::DimensionMismatch("tangent vector length".into()));
    }
    let (g, _) = metrics.metric_matrices(x);
    let s = adjugate_tensor(metrics, x, tau)?;
    let vv = RVector::from_column_slice(v);
    Ok((g * s * &vv).dot(&vv))
}

/// mu_i(tau; x) = prod_{j != i} (lambda_j(x_j) - tau).
pub fn mu_values(metrics: &ModelMetricPair, x: &[f64], tau: f64) -> Vec<f64> {
    let l = metrics.lambdas_at(x);
    (0..metrics.n())
        .map(|i| {
            (0..metrics.n())
                .filter(|&j| j != i)
                .map(|j| l[j] - tau)
                .product::<f64>()
        })
        .collect()
}

fn coordinate_integral(metrics: &ModelMetricPair, x: &[f64], y: &[f64], tau: f64) -> f64 {
    let mu = mu_values(metrics, x, tau);
    let pi = metrics.pi_at(x);
    (0..metrics.n()).map(|i| mu[i] * y[i] * y[i] / pi[i]).sum()
}

/// Momentum-form integral J_tau(x, y), evaluated both through the coordinate
/// formula and through the tensor pipeline pulled back with g^{-1}; the two
/// must agree, otherwise a convention bug is signalled.
pub fn momentum_integral(
    metrics: &ModelMetricPair,
    x: &[f64],
    y: &[f64],
    tau: f64,
) -> Result<f64> {
    let n = metrics.n();
    if x.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch("state length".into()));
    }
    let coord = coordinate_integral(metrics, x, y, tau);
    let pi = metrics.pi_at(x);
    let v: Vec<f64> = (0..n).map(|i| y[i] / pi[i]).collect();
    let tensor = velocity_integral(metrics, x, &v, tau)?;
    let tol = 1e-9 * coord.abs().max(1.0);
    if (coord - tensor).abs() > tol {
        return Err(Error::NonFinite(format!(
            "integral evaluations disagree: coordinate {coord} vs tensor {tensor}"
        )));
    }
    Ok(coord)
}

/// dJ_tau/dlambda_i, with the removable (lambda_i - tau) factor cancelled so
/// the expression stays finite at tau = lambda_i.
fn integral_lambda_derivative(
    lambdas: &[f64],
    pi: &[f64],
    y: &[f64],
    tau: f64,
    i: usize,
) -> f64 {
    let n = lambdas.len();
    let mut total = 0.0;
    for k in 0..n {
        if k == i {
            continue;
        }
        // mu_k / (lambda_i - tau), a genuine polynomial in tau.
        let mu_ki: f64 = (0..n)
            .filter(|&m| m != k && m != i)
            .map(|m| lambdas[m] - tau)
            .product();
        total += y[k] * y[k] / pi[k] * mu_ki * (lambdas[k] - tau) / (lambdas[k] - lambdas[i]);
    }
    let mu_i: f64 = (0..n)
        .filter(|&m| m != i)
        .map(|m| lambdas[m] - tau)
        .product();
    let log_pi_deriv: f64 = (0..n)
        .filter(|&j| j != i)
        .map(|j| 1.0 / (lambdas[i] - lambdas[j]))
        .sum();
    total -= mu_i * y[i] * y[i] / pi[i] * log_pi_deriv;
    total
}

fn field_components(metrics: &ModelMetricPair, state: &[f64], tau: f64) -> Vec<f64> {
    let n = metrics.n();
    let (x, y) = state.split_at(n);
    let lambdas = metrics.lambdas_at(x);
    let pi = metrics.pi_at(x);
    let mu = mu_values(metrics, x, tau);
    let mut out = vec![0.0; 2 * n];
    for i in 0..n {
        out[i] = 2.0 * mu[i] * y[i] / pi[i];
        let dj_dlambda = integral_lambda_derivative(&lambdas, &pi, y, tau, i);
        out[n + i] = -metrics.lambda_deriv(i, x[i]) * dj_dlambda;
    }
    out
}

/// Hamiltonian vector field of J_tau in separated coordinates:
/// xdot_i = 2 mu_i y_i / Pi_i, ydot_i = -lambda_i' dJ/dlambda_i.
pub fn integral_vector_field(
    metrics: &ModelMetricPair,
    state: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    let n = metrics.n();
    if state.len() != 2 * n {
        return Err(Error::DimensionMismatch("phase state length".into()));
    }
    let lambdas = metrics.lambdas_at(&state[..n]);
    for (i, l) in lambdas.iter().enumerate() {
        if (l - tau).abs() < 1e-8 {
            return Err(Error::SingularParameter(format!(
                "tau = {tau} is within 1e-8 of eigenvalue lambda_{i} = {l}"
            )));
        }
    }
    Ok(field_components(metrics, state, tau))
}

/// J_tau as a phase-space scalar field with its analytic gradient; suitable
/// for flows and bracket checks through the poisson module.
pub fn momentum_integral_field(metrics: &ModelMetricPair, tau: f64) -> ScalarField {
    let n = metrics.n();
    let m_eval = metrics.clone();
    let m_grad = metrics.clone();
    ScalarField::new(2 * n, move |p| {
        let (x, y) = p.split_at(n);
        coordinate_integral(&m_eval, x, y, tau)
    })
    .with_gradient(move |p| {
        // The symplectic flip of the field components: grad = (dJ/dx, dJ/dy).
        let v = field_components(&m_grad, p, tau);
        let mut g = vec![0.0; 2 * n];
        for i in 0..n {
            g[i] = -v[n + i];
            g[n + i] = v[i];
        }
        g
    })
}

/// Same field without the analytic gradient (pure finite differences).
pub fn momentum_integral_field_fd(metrics: &ModelMetricPair, tau: f64) -> ScalarField {
    let n = metrics.n();
    let m_eval = metrics.clone();
    ScalarField::new(2 * n, move |p| {
        let (x, y) = p.split_at(n);
        coordinate_integral(&m_eval, x, y, tau)
    })
}

/// Weights a_i summing to 1 that make sum a_i mu_i vanish at the prescribed
/// roots: a_i = sigma(t_i) / mu_i(t_i) with sigma(t) = prod (root_k - t).
///
/// ```
/// use integrable::projtori::lagrange_root_weights;
/// let rw = lagrange_root_weights(&[1.0, 3.0], &[2.0]).unwrap();
/// assert_eq!(rw.weights, vec![0.5, 0.5]);
/// assert!(rw.interlacing);
/// ```
#[derive(Debug, Clone)]
pub struct RootWeights {
    pub weights: Vec<f64>,
    /// True when every sorted root lies in its node interval [t_i, t_{i+1}],
    /// which is equivalent to all weights being non-negative.
    pub interlacing: bool,
}

pub fn lagrange_root_weights(nodes: &[f64], roots: &[f64]) -> Result<RootWeights> {
    let n = nodes.len();
    if roots.len() + 1 != n {
        return Err(Error::DimensionMismatch(format!(
            "{} roots against {} nodes",
            roots.len(),
            n
        )));
    }
    let scale = nodes.iter().fold(1.0_f64, |m, t| m.max(t.abs()));
    for i in 0..n {
        for j in (i + 1)..n {
            if (nodes[i] - nodes[j]).abs() < 1e-12 * scale {
                return Err(Error::CoincidentNodes);
            }
        }
    }
    let mut sorted_roots = roots.to_vec();
    sorted_roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut sorted_nodes = nodes.to_vec();
    sorted_nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let sigma: f64 = sorted_roots.iter().map(|r| r - sorted_nodes[i]).product();
            let mu: f64 = (0..n)
                .filter(|&j| j != i)
                .map(|j| sorted_nodes[j] - sorted_nodes[i])
                .product();
            sigma / mu
        })
        .collect();
    let interlacing = (0..n - 1)
        .all(|i| sorted_roots[i] >= sorted_nodes[i] && sorted_roots[i] <= sorted_nodes[i + 1]);
    Ok(RootWeights { weights, interlacing })
}

/// Polynomial value of the first-integral map: leading coefficient times the
/// product of (root_i - tau).
#[derive(Debug, Clone)]
pub struct FirstIntegralPolynomial {
    pub leading: f64,
    /// Sorted ascending.
    pub roots: Vec<f64>,
}

impl FirstIntegralPolynomial {
    pub fn from_roots(leading: f64, roots: Vec<f64>) -> Self {
        let mut roots = roots;
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self { leading, roots }
    }

    /// Recovers (leading, roots) from dense coefficients c_0 + c_1 tau + ...;
    /// fails when a root carries a non-negligible imaginary part.
    pub fn from_coefficients(coeffs: &[f64]) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("empty coefficient list".into()));
        }
        let mut c = coeffs.to_vec();
        while c.len() > 1 && c.last().copied() == Some(0.0) {
            c.pop();
        }
        let deg = c.len() - 1;
        if deg == 0 {
            return Ok(Self {
                leading: c[0],
                roots: vec![],
            });
        }
        // q(tau) = a prod (root - tau) has leading coefficient a (-1)^deg.
        let leading = c[deg] * if deg.is_multiple_of(2) { 1.0 } else { -1.0 };
        // Companion matrix of the monic version.
        let monic: Vec<f64> = c[..deg].iter().map(|v| v / c[deg]).collect();
        let mut comp = RMatrix::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            comp[(i, deg - 1)] = -monic[i];
        }
        let eigs = comp.complex_eigenvalues();
        let scale = c.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut roots = Vec::with_capacity(deg);
        for e in eigs.iter() {
            if e.im.abs() > 1e-8 * scale.max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "polynomial has a non-real root {} + {}i",
                    e.re, e.im
                )));
            }
            roots.push(e.re);
        }
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { leading, roots })
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.leading * self.roots.iter().map(|r| r - tau).product::<f64>()
    }

    /// Dense coefficients c_0 + c_1 tau + ... of the polynomial.
    pub fn coefficients(&self) -> Vec<f64> {
        let mut c = vec![self.leading];
        for &r in &self.roots {
            // multiply by (r - tau)
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k] += ck * r;
                next[k + 1] -= ck;
            }
            c = next;
        }
        c
    }
}

/// Classification of a polynomial against the image of the first-integral map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImageClass {
    /// Every root strictly inside a spectral gap: the level is a torus
    /// projecting diffeomorphically to the base.
    InteriorDiffeo,
    /// On the boundary of the image.
    Boundary,
    /// Some root strictly inside an eigenfunction range: regular level with a
    /// non-trivial Maslov cycle.
    NontrivialMaslov,
    /// Not a value of the integral map.
    Outside,
}

/// Classifies `q` against the image box/gap/range semantics: the i-th sorted
/// root belongs to the box [lo_i, hi_{i+1}]; gaps are (hi_i, lo_{i+1}) and
/// ranges are [lo_i, hi_i].
pub fn image_membership(metrics: &ModelMetricPair, q: &FirstIntegralPolynomial) -> ImageClass {
    let n = metrics.n();
    if q.roots.len() + 1 != n {
        return ImageClass::Outside;
    }
    if q.leading < 0.0 {
        return ImageClass::Outside;
    }
    if q.leading == 0.0 {
        return ImageClass::Boundary;
    }
    let eig = &metrics.eig;
    let mut all_in_gap = true;
    let mut any_in_range = false;
    for (idx, &root) in q.roots.iter().enumerate() {
        let lo_i = eig.lo(idx);
        let hi_i = eig.hi(idx);
        let lo_next = eig.lo(idx + 1);
        let hi_next = eig.hi(idx + 1);
        if root < lo_i || root > hi_next {
            return ImageClass::Outside;
        }
        let in_gap = root > hi_i && root < lo_next;
        if !in_gap {
            all_in_gap = false;
        }
        if (root > lo_i && root < hi_i) || (root > lo_next && root < hi_next) {
            any_in_range = true;
        }
    }
    if all_in_gap {
        ImageClass::InteriorDiffeo
    } else if any_in_range {
        ImageClass::NontrivialMaslov
    } else {
        ImageClass::Boundary
    }
}

/// Covector y over base point x on the level set J = q, taking the positive
/// branch y_i = sqrt(leading a_i Pi_i); errors when some weight is negative
/// (no real solution over this base point).
pub fn liouville_torus_point(
    metrics: &ModelMetricPair,
    q: &FirstIntegralPolynomial,
    x: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let n = metrics.n();
    let nodes = metrics.lambdas_at(x);
    let rw = lagrange_root_weights(&nodes, &q.roots)?;
    let pi = metrics.pi_at(x);
    let mut y = vec![0.0; n];
    for i in 0..n {
        let a = q.leading * rw.weights[i];
        if a < -1e-12 {
            return Err(Error::NoRealSolution { index: i, value: a });
        }
        y[i] = (a.max(0.0) * pi[i]).sqrt();
    }
    // Probe agreement with q at n parameter values.
    for tau in default_probes(metrics) {
        let jval = momentum_integral(metrics, x, &y, tau)?;
        if (jval - q.eval(tau)).abs() > tol.probe_consistency * q.eval(tau).abs().max(1.0) {
            return Err(Error::NonFinite(format!(
                "level-set probe mismatch at tau = {tau}: J = {jval}, q = {}",
                q.eval(tau)
            )));
        }
    }
    Ok(y)
}

/// Determinant of the n x n matrix [mu_j(t_i)] at x; nonzero whenever the
/// probes are distinct, by linear independence of the mu polynomials.
pub fn nondegeneracy_determinant(
    metrics: &ModelMetricPair,
    x: &[f64],
    probes: &[f64],
) -> Result<f64> {
    let n = metrics.n();
    if probes.len() != n {
        return Err(Error::DimensionMismatch("need n probe values".into()));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (probes[i] - probes[j]).abs() < 1e-12 {
                return Err(Error::CoincidentNodes);
            }
        }
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, &t) in probes.iter().enumerate() {
        let mu = mu_values(metrics, x, t);
        for j in 0..n {
            m[(i, j)] = mu[j];
        }
    }
    Ok(m.determinant())
}

/// Probe parameters clear of every eigenfunction range: one below the
/// spectrum and the midpoint of each gap.
pub fn default_probes(metrics: &ModelMetricPair) -> Vec<f64> {
    let eig = &metrics.eig;
    let mut probes = vec![eig.lo(0) - 1.0];
    for i in 0..metrics.n() - 1 {
        probes.push(0.5 * (eig.hi(i) + eig.lo(i + 1)));
    }
    probes
}

/// Orthonormal Lagrangian frame spanning the tangent space of the Liouville
/// torus at `state`: the span of the commuting Hamiltonian vectors of the
/// probe integrals, completed from the level-set kernel when the spanning
/// vectors degenerate (which happens exactly on the Maslov cycle y_i = 0).
pub fn torus_tangent_frame(
    metrics: &ModelMetricPair,
    state: &[f64],
    probes: &[f64],
    tol: &Tolerances,
) -> Result<LagrangianFrame> {
    let n = metrics.n();
    if state.len() != 2 * n || probes.len() != n {
        return Err(Error::DimensionMismatch("state/probe lengths".into()));
    }
    let mut span = RMatrix::zeros(2 * n, n);
    for (k, &t) in probes.iter().enumerate() {
        let v = field_components(metrics, state, t);
        let col = RVector::from_vec(v);
        let norm = col.norm();
        if norm > 0.0 {
            span.set_column(k, &(col / norm));
        }
    }
    let sv = span.clone().svd(false, false).singular_values;
    let max_sv = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min_sv = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cols = if max_sv > 0.0 && min_sv / max_sv > 1e-6 {
        span
    } else {
        // Tangent space of the joint level set: kernel of the probe-integral
        // Jacobian, which stays n-dimensional at regular points.
        let mut jac = RMatrix::zeros(n, 2 * n);
        for (k, &t) in probes.iter().enumerate() {
            let v = field_components(metrics, state, t);
            // gradient = symplectic flip of the field
            for i in 0..n {
                jac[(k, i)] = -v[n + i];
                jac[(k, n + i)] = v[i];
            }
        }
        let kernel = nullspace(&jac, RANK_REL_THRESHOLD);
        if kernel.ncols() != n {
            return Err(Error::RankDeficient {
                rank: kernel.ncols(),
                expected: n,
            });
        }
        kernel
    };
    LagrangianFrame::from_real_span(&cols, tol.lagrangian_residual)
}

/// Loop kind produced by the coordinate-circle construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopKind {
    /// Full rotation of the coordinate circle (no turning points).
    Rotation,
    /// Libration between two turning points on the Maslov cycle.
    Libration,
}

pub struct CoordinateLoop {
    pub kind: LoopKind,
    pub lagrangian_loop: LagrangianLoop,
}

/// Lift of the i-th coordinate circle to the level torus of `q`, following
/// the continuous branch of y; on crossing levels the lift librates between
/// the turning points where the branch weight vanishes, visiting the Maslov
/// cycle twice.
pub fn coordinate_loop(
    metrics: &ModelMetricPair,
    q: &FirstIntegralPolynomial,
    coord: usize,
    samples: usize,
    tol: &Tolerances,
) -> Result<CoordinateLoop> {
    let n = metrics.n();
    if coord >= n {
        return Err(Error::InvalidInput(format!("coordinate {coord} out of range")));
    }
    let samples = samples.max(64).next_multiple_of(4);
    match image_membership(metrics, q) {
        ImageClass::Outside => {
            return Err(Error::InvalidInput("polynomial is outside the image".into()))
        }
        ImageClass::Boundary => {
            return Err(Error::DegenerateCrossing { index: 0, dim: 0 });
        }
        _ => {}
    }
    let probes = default_probes(metrics);
    // Fixed coordinates must sit where the level torus actually projects: on
    // crossing levels the projection misses part of the base, so place each
    // fixed coordinate at the maximum of its branch weight.
    let mut base = vec![0.3; n];
    for j in 0..n {
        if j == coord {
            continue;
        }
        let mut best = (f64::NEG_INFINITY, base[j]);
        for k in 0..128 {
            let s = k as f64 / 128.0;
            let mut x = base.clone();
            x[j] = s;
            let nodes = metrics.lambdas_at(&x);
            let w = lagrange_root_weights(&nodes, &q.roots)?.weights[j] * q.leading;
            if w > best.0 {
                best = (w, s);
            }
        }
        if best.0 <= 0.0 {
            return Err(Error::NoRealSolution {
                index: j,
                value: best.0,
            });
        }
        base[j] = best.1;
    }
    let weight = |s: f64| -> f64 {
        let mut x = base.clone();
        x[coord] = s.rem_euclid(1.0);
        let nodes = metrics.lambdas_at(&x);
        let rw = lagrange_root_weights(&nodes, &q.roots).expect("separated nodes");
        q.leading * rw.weights[coord]
    };
    // Locate sign changes of the branch weight around the coordinate circle.
    let grid = 4096;
    let mut zeros = Vec::new();
    let mut prev = weight(0.0);
    for k in 1..=grid {
        let s = k as f64 / grid as f64;
        let cur = weight(s);
        if prev.signum() != cur.signum() {
            let (mut a, mut b) = ((k - 1) as f64 / grid as f64, s);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if weight(a).signum() == weight(mid).signum() {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            zeros.push(0.5 * (a + b));
        }
        prev = cur;
    }

    let make_state = |s: f64, sign_i: f64| -> Result<Vec<f64>> {
        let mut x = base.clone();
        x[coord] = s.rem_euclid(1.0);
        let nodes = metrics.lambdas_at(&x);
        let rw = lagrange_root_weights(&nodes, &q.roots)?;
        let pi = metrics.pi_at(&x);
        let mut state = vec![0.0; 2 * n];
        state[..n].copy_from_slice(&x);
        for j in 0..n {
            let a = q.leading * rw.weights[j];
            if a < -1e-9 {
                return Err(Error::NoRealSolution { index: j, value: a });
            }
            let mag = (a.max(0.0) * pi[j]).sqrt();
            state[n + j] = if j == coord { sign_i * mag } else { mag };
        }
        Ok(state)
    };

    if zeros.is_empty() {
        if weight(0.0) <= 0.0 {
            return Err(Error::NoRealSolution {
                index: coord,
                value: weight(0.0),
            });
        }
        // Rotation: full circle on the positive branch.
        let mut frames = Vec::with_capacity(samples + 1);
        for k in 0..=samples {
            let s = k as f64 / samples as f64;
            let state = make_state(s, 1.0)?;
            frames.push(torus_tangent_frame(metrics, &state, &probes, tol)?);
        }
        return Ok(CoordinateLoop {
            kind: LoopKind::Rotation,
            lagrangian_loop: LagrangianLoop::new(frames)?,
        });
    }

    // Libration: pick a band where the weight is positive.
    let mut band = None;
    for w in 0..zeros.len() {
        let s0 = zeros[w];
        let s1 = if w + 1 < zeros.len() {
            zeros[w + 1]
        } else {
            zeros[0] + 1.0
        };
        let mid = 0.5 * (s0 + s1);
        if weight(mid.rem_euclid(1.0)) > 0.0 {
            band = Some((s0, s1));
            break;
        }
    }
    let (s0, s1) = band.ok_or(Error::NoRealSolution {
        index: coord,
        value: weight(zeros[0] + 1e-6),
    })?;
    // Simple-degeneracy check: the weight must cross transversally.
    for &z in &[s0, s1] {
        let h = 1e-5;
        let slope = (weight(z + h) - weight(z - h)) / (2.0 * h);
        if slope.abs() < 1e-6 {
            return Err(Error::DegenerateCrossing { index: 0, dim: 2 });
        }
    }
    // Uniformizing angle phi: s = s0 + (s1 - s0)(1 - cos phi)/2, branch sign
    // +/- on the two passes; starting at phi = pi/2 keeps the turning points
    // away from the loop endpoints.
    let mut frames = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let phi =
            std::f64::consts::FRAC_PI_2 + 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
        let phi_mod = phi.rem_euclid(2.0 * std::f64::consts::PI);
        let (s, sign) = if phi_mod <= std::f64::consts::PI {
            (s0 + (s1 - s0) * (1.0 - phi_mod.cos()) / 2.0, 1.0)
        } else {
            let back = 2.0 * std::f64::consts::PI - phi_mod;
            (s0 + (s1 - s0) * (1.0 - back.cos()) / 2.0, -1.0)
        };
        let state = make_state(s, sign)?;
        frames.push(torus_tangent_frame(metrics, &state, &probes, tol)?);
    }
    Ok(CoordinateLoop {
        kind: LoopKind::Libration,
        lagrangian_loop: LagrangianLoop::new(frames)?,
    })
}

/// Maslov index of the lifted coordinate loop.
pub fn coordinate_loop_index(
    metrics: &ModelMetricPair,
    q: &FirstIntegralPolynomial,
    coord: usize,
    samples: usize,
    tol: &Tolerances,
) -> Result<i64> {
    let lp = coordinate_loop(metrics, q, coord, samples, tol)?;
    crate::maslov::maslov_index(&lp.lagrangian_loop)
}

/// Integrates the flow of J_0 from a point of the level torus of `q` and
/// returns sampled torus tangent frames along the orbit segment.
/// Base point over which the level torus of `q` has a real covector with all
/// branch weights maximal (coordinate-wise grid ascent).
pub fn interior_base_point(
    metrics: &ModelMetricPair,
    q: &FirstIntegralPolynomial,
) -> Result<Vec<f64>> {
    let n = metrics.n();
    let mut x = vec![0.3; n];
    for j in 0..n {
        let mut best = (f64::NEG_INFINITY, x[j]);
        for k in 0..128 {
            let s = k as f64 / 128.0;
            let mut probe = x.clone();
            probe[j] = s;
            let nodes = metrics.lambdas_at(&probe);
            let w = lagrange_root_weights(&nodes, &q.roots)?.weights[j] * q.leading;
            if w > best.0 {
                best = (w, s);
            }
        }
        if best.0 <= 0.0 {
            return Err(Error::NoRealSolution {
                index: j,
                value: best.0,
            });
        }
        x[j] = best.1;
    }
    Ok(x)
}

pub fn orbit_frames(
    metrics: &ModelMetricPair,
    q: &FirstIntegralPolynomial,
    duration: f64,
    steps: usize,
    stride: usize,
    tol: &Tolerances,
) -> Result<(Trajectory, Vec<LagrangianFrame>)> {
    let x0 = interior_base_point(metrics, q)?;
    let y0 = liouville_torus_point(metrics, q, &x0, tol)?;
    let mut p0 = x0;
    p0.extend_from_slice(&y0);
    let h = momentum_integral_field(metrics, 0.0);
    let traj = hamiltonian_flow(&h, &p0, duration, steps, None, &FlowConfig::default())?;
    let probes = default_probes(metrics);
    let mut frames = Vec::new();
    for state in traj.states.iter().step_by(stride.max(1)) {
        frames.push(torus_tangent_frame(metrics, state, &probes, tol)?);
    }
    Ok((traj, frames))
}

/// Standard two-band example: lambda_1 oscillating in [2-amp, 2+amp] and the
/// higher eigenfunctions constant.
pub fn example_metrics(n: usize, amp: f64) -> Result<ModelMetricPair> {
    let mut lambdas = vec![TrigPolynomial::sinusoid(2.0, amp, 1)];
    for i in 1..n {
        lambdas.push(TrigPolynomial::constant(2.0 + 3.0 * i as f64));
    }
    Ok(ModelMetricPair::new(SeparatedEigenfunctions::new(lambdas)?))
}

/// Nonflat example with every eigenfunction oscillating.
pub fn wavy_metrics(n: usize) -> Result<ModelMetricPair> {
    let lambdas: Vec<TrigPolynomial> = (0..n)
        .map(|i| TrigPolynomial::sinusoid(2.0 + 3.0 * i as f64, 0.25, 1 + i % 2))
        .collect();
    Ok(ModelMetricPair::new(SeparatedEigenfunctions::new(lambdas)?))
}
