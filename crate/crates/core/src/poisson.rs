//! Numerical Poisson geometry on coordinate cotangent spaces.
//!
//! Phase points live in R^{2N} with the split (x^1..x^N, y_1..y_N); the
//! canonical bracket follows the flow convention X_H = {H, .}, that is
//! xdot^i = dH/dy_i and ydot_i = -dH/dx^i. Constrained symplectic
//! submanifolds are handled through the Dirac bracket.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::config::{FlowConfig, FD_STEP, RANK_REL_THRESHOLD};
use crate::linalg::{nullspace, rank_with_threshold, RMatrix, RVector};
use crate::{Error, Result};

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type GradFn = dyn Fn(&[f64]) -> Vec<f64> + Send + Sync;

/// Scalar field on R^{2N}, optionally carrying an analytic gradient.
#[derive(Clone)]
pub struct ScalarField {
    /// Ambient dimension 2N.
    pub arity: usize,
    eval: Arc<EvalFn>,
    grad: Option<Arc<GradFn>>,
}

impl ScalarField {
    pub fn new(arity: usize, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            arity,
            eval: Arc::new(eval),
            grad: None,
        }
    }

    pub fn with_gradient(
        mut self,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(grad));
        self
    }

    pub fn eval(&self, p: &[f64]) -> f64 {
        (self.eval)(p)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.grad.is_some()
    }

    /// A coordinate function selecting the `index`-th component.
    pub fn coordinate(arity: usize, index: usize) -> Self {
        Self::new(arity, move |p| p[index]).with_gradient(move |p| {
            let mut g = vec![0.0; p.len()];
            g[index] = 1.0;
            g
        })
    }

    pub fn constant(arity: usize, value: f64) -> Self {
        Self::new(arity, move |_| value).with_gradient(move |p| vec![0.0; p.len()])
    }
}

/// Gradient of `f` at `p`: analytic when the field advertises one, otherwise
/// central differences with step h = FD_STEP * max(1, |p_i|) per coordinate.
pub fn gradient(f: &ScalarField, p: &[f64]) -> Result<Vec<f64>> {
    if let Some(g) = &f.grad {
        let out = g(p);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("analytic gradient".into()));
        }
        return Ok(out);
    }
    let mut out = vec![0.0; p.len()];
    let mut q = p.to_vec();
    for i in 0..p.len() {
        let h = FD_STEP * p[i].abs().max(1.0);
        let orig = q[i];
        q[i] = orig + h;
        let fp = f.eval(&q);
        q[i] = orig - h;
        let fm = f.eval(&q);
        q[i] = orig;
        let d = (fp - fm) / (2.0 * h);
        if !d.is_finite() {
            return Err(Error::NonFinite(format!("gradient component {i}")));
        }
        out[i] = d;
    }
    Ok(out)
}

fn split(grad: &[f64]) -> (&[f64], &[f64]) {
    let n = grad.len() / 2;
    (&grad[..n], &grad[n..])
}

/// Canonical bracket {f, g} = sum_i (df/dy_i dg/dx^i - df/dx^i dg/dy_i).
pub fn canonical_bracket(f: &ScalarField, g: &ScalarField, p: &[f64]) -> Result<f64> {
    let gf = gradient(f, p)?;
    let gg = gradient(g, p)?;
    Ok(bracket_from_gradients(&gf, &gg))
}

/// Same bracket, from precomputed gradients.
pub fn bracket_from_gradients(gf: &[f64], gg: &[f64]) -> f64 {
    let (fx, fy) = split(gf);
    let (gx, gy) = split(gg);
    let mut s = 0.0;
    for i in 0..fx.len() {
        s += fy[i] * gx[i] - fx[i] * gy[i];
    }
    s
}

/// Constraint functions whose common zero set is a symplectic submanifold.
#[derive(Clone)]
pub struct ConstraintSet {
    pub constraints: Vec<ScalarField>,
}

impl ConstraintSet {
    pub fn new(constraints: Vec<ScalarField>) -> Self {
        Self { constraints }
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Max-abs constraint residual at `p`.
    pub fn residual(&self, p: &[f64]) -> f64 {
        self.constraints
            .iter()
            .map(|c| c.eval(p).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_on_shell(&self, p: &[f64], tol: f64) -> Result<()> {
        let r = self.residual(p);
        if r > tol {
            return Err(Error::OffManifold { residual: r, tol });
        }
        Ok(())
    }

    /// Jacobian of the constraints, m x 2N.
    pub fn jacobian(&self, p: &[f64]) -> Result<RMatrix> {
        let m = self.constraints.len();
        let mut jac = RMatrix::zeros(m, p.len());
        for (a, c) in self.constraints.iter().enumerate() {
            let g = gradient(c, p)?;
            for j in 0..p.len() {
                jac[(a, j)] = g[j];
            }
        }
        Ok(jac)
    }

    /// Mutual-bracket matrix M_ab = {C_a, C_b} at `p`.
    pub fn bracket_matrix(&self, p: &[f64]) -> Result<RMatrix> {
        let m = self.constraints.len();
        let grads: Vec<Vec<f64>> = self
            .constraints
            .iter()
            .map(|c| gradient(c, p))
            .collect::<Result<_>>()?;
        let mut mat = RMatrix::zeros(m, m);
        for a in 0..m {
            for b in (a + 1)..m {
                let v = bracket_from_gradients(&grads[a], &grads[b]);
                mat[(a, b)] = v;
                mat[(b, a)] = -v;
            }
        }
        Ok(mat)
    }

    /// Newton projection back onto the constraint set (Gauss-Newton on the
    /// constraint residual, minimum-norm correction).
    pub fn project(&self, p: &mut [f64], tol: f64, max_iters: usize) -> Result<()> {
        if self.is_empty() {
            return Ok(());
        }
        for _ in 0..max_iters {
            let res: Vec<f64> = self.constraints.iter().map(|c| c.eval(p)).collect();
            let worst = res.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if worst < tol {
                return Ok(());
            }
            let jac = self.jacobian(p)?;
            let jjt = &jac * jac.transpose();
            let rhs = RVector::from_vec(res);
            let delta = jjt
                .lu()
                .solve(&rhs)
                .ok_or(Error::ConstraintDegeneracy)?;
            let corr = jac.transpose() * delta;
            for i in 0..p.len() {
                p[i] -= corr[i];
            }
        }
        let worst = self.residual(p);
        if worst < tol {
            Ok(())
        } else {
            Err(Error::OffManifold {
                residual: worst,
                tol,
            })
        }
    }
}

/// Dirac bracket {f,g}_D = {f,g} - {f,C_a} (M^-1)_ab {C_b,g} at an on-shell
/// point; reduces to the canonical bracket when the constraint set is empty.
pub fn dirac_bracket(
    f: &ScalarField,
    g: &ScalarField,
    p: &[f64],
    constraints: &ConstraintSet,
) -> Result<f64> {
    dirac_bracket_with_tol(f, g, p, constraints, 1e-8)
}

pub fn dirac_bracket_with_tol(
    f: &ScalarField,
    g: &ScalarField,
    p: &[f64],
    constraints: &ConstraintSet,
    on_shell_tol: f64,
) -> Result<f64> {
    if constraints.is_empty() {
        return canonical_bracket(f, g, p);
    }
    constraints.check_on_shell(p, on_shell_tol)?;
    let gf = gradient(f, p)?;
    let gg = gradient(g, p)?;
    let cgrads: Vec<Vec<f64>> = constraints
        .constraints
        .iter()
        .map(|c| gradient(c, p))
        .collect::<Result<_>>()?;
    dirac_from_gradients(&gf, &gg, &cgrads)
}

/// Dirac bracket from cached gradients (the hot path of involution scans).
pub fn dirac_from_gradients(gf: &[f64], gg: &[f64], cgrads: &[Vec<f64>]) -> Result<f64> {
    let plain = bracket_from_gradients(gf, gg);
    if cgrads.is_empty() {
        return Ok(plain);
    }
    let m = cgrads.len();
    let mut mat = RMatrix::zeros(m, m);
    for a in 0..m {
        for b in (a + 1)..m {
            let v = bracket_from_gradients(&cgrads[a], &cgrads[b]);
            mat[(a, b)] = v;
            mat[(b, a)] = -v;
        }
    }
    let fc = RVector::from_iterator(m, cgrads.iter().map(|c| bracket_from_gradients(gf, c)));
    let cg = RVector::from_iterator(m, cgrads.iter().map(|c| bracket_from_gradients(c, gg)));
    let lu = mat.lu();
    let sol = lu.solve(&cg).ok_or(Error::ConstraintDegeneracy)?;
    Ok(plain - fc.dot(&sol))
}

/// Entry (i,j) is the max over `points` of |{f_i, f_j}| (Dirac bracket when
/// constraints are supplied). Also returns the overall maximum.
pub struct InvolutionMatrix {
    pub matrix: RMatrix,
    pub max_abs: f64,
}

pub fn involution_matrix(
    fns: &[ScalarField],
    points: &[Vec<f64>],
    constraints: Option<&ConstraintSet>,
) -> Result<InvolutionMatrix> {
    let k = fns.len();
    let mut matrix = RMatrix::zeros(k, k);
    for p in points {
        if let Some(c) = constraints {
            c.check_on_shell(p, 1e-8)?;
        }
        let grads: Vec<Vec<f64>> = fns.iter().map(|f| gradient(f, p)).collect::<Result<_>>()?;
        let cgrads: Vec<Vec<f64>> = match constraints {
            Some(c) => c
                .constraints
                .iter()
                .map(|cf| gradient(cf, p))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        for i in 0..k {
            for j in (i + 1)..k {
                let v = dirac_from_gradients(&grads[i], &grads[j], &cgrads)?.abs();
                if v > matrix[(i, j)] {
                    matrix[(i, j)] = v;
                    matrix[(j, i)] = v;
                }
            }
        }
    }
    let max_abs = matrix.iter().cloned().fold(0.0, f64::max);
    Ok(InvolutionMatrix { matrix, max_abs })
}

/// Rank of the gradients at `p`, projected onto the tangent space of the
/// constraint set when one is given.
pub fn independence_rank(
    fns: &[ScalarField],
    p: &[f64],
    constraints: Option<&ConstraintSet>,
) -> Result<usize> {
    independence_rank_excluding(fns, p, constraints, &[])
}

/// Same as [`independence_rank`], additionally quotienting out the span of
/// `excluded` directions (used for ranks modulo group-orbit directions).
pub fn independence_rank_excluding(
    fns: &[ScalarField],
    p: &[f64],
    constraints: Option<&ConstraintSet>,
    excluded: &[Vec<f64>],
) -> Result<usize> {
    if fns.is_empty() {
        return Ok(0);
    }
    let dim = p.len();
    let grads: Vec<Vec<f64>> = fns.iter().map(|f| gradient(f, p)).collect::<Result<_>>()?;
    // Basis of the admissible directions: tangent to the constraints and
    // orthogonal to the excluded span.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    if let Some(c) = constraints {
        c.check_on_shell(p, 1e-8)?;
        let jac = c.jacobian(p)?;
        for a in 0..jac.nrows() {
            rows.push(jac.row(a).iter().cloned().collect());
        }
    }
    for e in excluded {
        rows.push(e.clone());
    }
    let basis = if rows.is_empty() {
        RMatrix::identity(dim, dim)
    } else {
        let m = RMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j]);
        nullspace(&m, RANK_REL_THRESHOLD)
    };
    let mut proj = RMatrix::zeros(fns.len(), basis.ncols());
    for (i, g) in grads.iter().enumerate() {
        let gv = RVector::from_vec(g.clone());
        for j in 0..basis.ncols() {
            proj[(i, j)] = basis.column(j).dot(&gv);
        }
    }
    Ok(rank_with_threshold(&proj, RANK_REL_THRESHOLD))
}

/// Integrated trajectory with per-step diagnostics.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// |H(p_t) - H(p_0)| per stored state.
    pub energy_drift: Vec<f64>,
    /// Max-abs constraint residual per stored state.
    pub constraint_residual: Vec<f64>,
}

impl Trajectory {
    pub fn max_energy_drift(&self) -> f64 {
        self.energy_drift.iter().cloned().fold(0.0, f64::max)
    }

    pub fn max_constraint_residual(&self) -> f64 {
        self.constraint_residual.iter().cloned().fold(0.0, f64::max)
    }

    /// Max drift of an arbitrary observable along the trajectory.
    pub fn observable_drift(&self, f: &ScalarField) -> f64 {
        let f0 = f.eval(&self.states[0]);
        self.states
            .iter()
            .map(|s| (f.eval(s) - f0).abs())
            .fold(0.0, f64::max)
    }
}

/// Hamiltonian vector field of `h`, Dirac-corrected when constraints are given.
pub fn hamiltonian_field(
    h: &ScalarField,
    p: &[f64],
    constraints: Option<&ConstraintSet>,
) -> Result<Vec<f64>> {
    let gh = gradient(h, p)?;
    let n = p.len() / 2;
    let field_of = |g: &[f64]| {
        let (gx, gy) = split(g);
        let mut v = vec![0.0; 2 * n];
        for i in 0..n {
            v[i] = gy[i];
            v[n + i] = -gx[i];
        }
        v
    };
    let mut v = field_of(&gh);
    if let Some(c) = constraints {
        if !c.is_empty() {
            let cgrads: Vec<Vec<f64>> = c
                .constraints
                .iter()
                .map(|cf| gradient(cf, p))
                .collect::<Result<_>>()?;
            let m = cgrads.len();
            let mut mat = RMatrix::zeros(m, m);
            for a in 0..m {
                for b in (a + 1)..m {
                    let val = bracket_from_gradients(&cgrads[a], &cgrads[b]);
                    mat[(a, b)] = val;
                    mat[(b, a)] = -val;
                }
            }
            let hc = RVector::from_iterator(
                m,
                cgrads.iter().map(|cg| bracket_from_gradients(&gh, cg)),
            );
            // {H, phi}_D = {H, phi} - {H, C_a} (M^-1)_ab {C_b, phi}
            let coeff = mat
                .transpose()
                .lu()
                .solve(&hc)
                .ok_or(Error::ConstraintDegeneracy)?;
            for (b, cg) in cgrads.iter().enumerate() {
                let xb = field_of(cg);
                for i in 0..2 * n {
                    v[i] -= coeff[b] * xb[i];
                }
            }
        }
    }
    Ok(v)
}

/// Classical fixed-step RK4 flow of X_H with post-step projection onto the
/// constraint set; diagnostics record energy and constraint residuals.
pub fn hamiltonian_flow(
    h: &ScalarField,
    p0: &[f64],
    duration: f64,
    steps: usize,
    constraints: Option<&ConstraintSet>,
    cfg: &FlowConfig,
) -> Result<Trajectory> {
    if steps == 0 {
        return Err(Error::InvalidInput("steps must be positive".into()));
    }
    if let Some(c) = constraints {
        c.check_on_shell(p0, cfg.projection_tol.max(1e-8))?;
    }
    let dt = duration / steps as f64;
    let h0 = h.eval(p0);
    let mut state = p0.to_vec();
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut energy = Vec::with_capacity(steps + 1);
    let mut residual = Vec::with_capacity(steps + 1);
    let record = |t: f64,
                  s: &Vec<f64>,
                  times: &mut Vec<f64>,
                  states: &mut Vec<Vec<f64>>,
                  energy: &mut Vec<f64>,
                  residual: &mut Vec<f64>| {
        times.push(t);
        states.push(s.clone());
        energy.push((h.eval(s) - h0).abs());
        residual.push(constraints.map_or(0.0, |c| c.residual(s)));
    };
    record(0.0, &state, &mut times, &mut states, &mut energy, &mut residual);

    let add_scaled = |p: &[f64], v: &[f64], c: f64| -> Vec<f64> {
        p.iter().zip(v).map(|(a, b)| a + c * b).collect()
    };
    for step in 1..=steps {
        let k1 = hamiltonian_field(h, &state, constraints)?;
        let k2 = hamiltonian_field(h, &add_scaled(&state, &k1, dt / 2.0), constraints)?;
        let k3 = hamiltonian_field(h, &add_scaled(&state, &k2, dt / 2.0), constraints)?;
        let k4 = hamiltonian_field(h, &add_scaled(&state, &k3, dt), constraints)?;
        for i in 0..state.len() {
            state[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if !state[i].is_finite() {
                return Err(Error::NonFinite(format!("state component {i} at step {step}")));
            }
        }
        if let Some(c) = constraints {
            let mut projected = state.clone();
            c.project(&mut projected, cfg.projection_tol, cfg.projection_iters)?;
            state = projected;
        }
        let drift = (h.eval(&state) - h0).abs();
        if drift > cfg.energy_drift_bound {
            return Err(Error::EnergyDrift {
                step,
                drift,
                bound: cfg.energy_drift_bound,
            });
        }
        record(
            dt * step as f64,
            &state,
            &mut times,
            &mut states,
            &mut energy,
            &mut residual,
        );
    }
    Ok(Trajectory {
        times,
        states,
        energy_drift: energy,
        constraint_residual: residual,
    })
}

/// Fiberwise Hessian of `h` in the y-coordinates, a convexity diagnostic:
/// returns the smallest eigenvalue of the matrix d2H/dy_i dy_j at `p`.
pub fn fiber_hessian_min_eigenvalue(h: &ScalarField, p: &[f64]) -> Result<f64> {
    let n = p.len() / 2;
    let mut hess = DMatrix::zeros(n, n);
    let mut q = p.to_vec();
    for i in 0..n {
        let hi = FD_STEP.sqrt() * p[n + i].abs().max(1.0);
        for j in i..n {
            let hj = FD_STEP.sqrt() * p[n + j].abs().max(1.0);
            let mut value = 0.0;
            for (si, sj, w) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                q[n + i] += si * hi;
                q[n + j] += sj * hj;
                value += w * h.eval(&q);
                q[n + i] = p[n + i];
                q[n + j] = p[n + j];
            }
            let d = value / (4.0 * hi * hj);
            hess[(i, j)] = d;
            hess[(j, i)] = d;
        }
    }
    if hess.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("fiber Hessian".into()));
    }
    Ok(hess
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min))
}
