//! Lagrangian Grassmannian machinery: unitary frames for Lagrangian planes in
//! C^n, the squared-determinant circle map, winding-number indices of sampled
//! loops, and signed crossings with a reference plane.
//!
//! A plane is stored as a unitary matrix whose columns span it over the reals;
//! right multiplication by any real orthogonal matrix is a gauge move and all
//! exported quantities are gauge invariant.

use num_complex::Complex;

use crate::config::{PHASE_STEP_GUARD, RANK_REL_THRESHOLD};
use crate::linalg::{
    rank_with_threshold, sym_inverse_sqrt, symmetric_unitary_eigenangles, unitarity_defect,
    wrap_angle, CMatrix, RMatrix,
};
use crate::{Error, Result};

/// Angle below which an eigenangle of the relative position matrix counts as
/// an on-sample crossing; commensurate with the rank threshold on unit-scale
/// frames.
const CROSSING_ANGLE_TOL: f64 = 1e-7;

/// Unitary-frame representation of a Lagrangian plane in C^n.
#[derive(Debug, Clone)]
pub struct LagrangianFrame {
    u: CMatrix,
}

impl LagrangianFrame {
    /// Wraps a unitary matrix; rejects frames with a unitarity defect above
    /// `tol`.
    pub fn new(u: CMatrix, tol: f64) -> Result<Self> {
        if u.nrows() != u.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "frame must be square, got {}x{}",
                u.nrows(),
                u.ncols()
            )));
        }
        let defect = unitarity_defect(&u);
        if defect > tol {
            return Err(Error::NonUnitaryFrame { defect, tol });
        }
        Ok(Self { u })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }

    /// The horizontal plane R^n.
    pub fn horizontal(n: usize) -> Self {
        Self {
            u: CMatrix::identity(n, n),
        }
    }

    /// The vertical plane i R^n.
    pub fn vertical(n: usize) -> Self {
        Self {
            u: CMatrix::identity(n, n).map(|z| z * Complex::new(0.0, 1.0)),
        }
    }

    /// Gauge move: right multiplication by a real orthogonal matrix.
    pub fn gauge(&self, o: &RMatrix) -> Self {
        let oc = o.map(|x| Complex::new(x, 0.0));
        Self { u: &self.u * oc }
    }

    /// Builds the frame spanned over R by n real tangent vectors of the
    /// symplectic space R^{2n} ~ C^n, packed as columns (dx; dy) of a 2n x n
    /// matrix. The span must be Lagrangian: the imaginary part of the complex
    /// Gram matrix is (up to sign) the symplectic pairing and must vanish
    /// within `lagrangian_tol`.
    ///
    /// The identification used is (dx, dy) -> dx - i dy. It sends the
    /// vertical plane to i R^n like the naive dx + i dy, but orients the
    /// Grassmannian so that tangent frames of invariant tori of fiberwise
    /// convex Hamiltonians cross the Maslov cycle in the direction the
    /// canonical generator loop declares positive.
    pub fn from_real_span(cols: &RMatrix, lagrangian_tol: f64) -> Result<Self> {
        let two_n = cols.nrows();
        if !two_n.is_multiple_of(2) || cols.ncols() != two_n / 2 {
            return Err(Error::DimensionMismatch(format!(
                "expected 2n x n column matrix, got {}x{}",
                cols.nrows(),
                cols.ncols()
            )));
        }
        let n = two_n / 2;
        let z = CMatrix::from_fn(n, n, |i, j| Complex::new(cols[(i, j)], -cols[(n + i, j)]));
        let gram = z.adjoint() * &z;
        let sym_residual = gram.iter().map(|g| g.im.abs()).fold(0.0, f64::max);
        if sym_residual > lagrangian_tol {
            return Err(Error::InvalidInput(format!(
                "span is not Lagrangian: symplectic residual {sym_residual:.3e}"
            )));
        }
        let re_gram = gram.map(|g| g.re);
        let c = sym_inverse_sqrt(&re_gram).ok_or(Error::RankDeficient {
            rank: rank_with_threshold(&re_gram, RANK_REL_THRESHOLD),
            expected: n,
        })?;
        let cc = c.map(|x| Complex::new(x, 0.0));
        Ok(Self { u: z * cc })
    }
}

/// det(u)^2, a unit-magnitude complex number independent of the O(n) gauge.
pub fn det_squared(frame: &LagrangianFrame) -> Complex<f64> {
    let d = frame.u.determinant();
    d * d
}

/// Real dimension of the intersection of the two planes.
///
/// With V = u_q^* u_p, a real combination u_p c lies in the q-plane exactly
/// when Im(V) c = 0, so the dimension is n - rank Im(V).
pub fn intersection_dimension(p: &LagrangianFrame, q: &LagrangianFrame) -> Result<usize> {
    if p.n() != q.n() {
        return Err(Error::DimensionMismatch(format!(
            "frames of size {} and {}",
            p.n(),
            q.n()
        )));
    }
    let v = q.u.adjoint() * &p.u;
    let im = v.map(|z| z.im);
    // Frames are unitary, so the singular values of Im(V) live in [0, 1];
    // anchor the cutoff at that unit scale rather than at the largest
    // singular value, which may itself be roundoff.
    let sv = im.svd(false, false).singular_values;
    let kept = sv.iter().filter(|&&s| s > RANK_REL_THRESHOLD).count();
    Ok(p.n() - kept)
}

/// Sampled loop of Lagrangian planes, closed up to the O(n) gauge.
#[derive(Debug, Clone)]
pub struct LagrangianLoop {
    samples: Vec<LagrangianFrame>,
}

impl LagrangianLoop {
    /// Validates closure (first and last samples span the same plane) and the
    /// sampling-adequacy guard (per-step det^2 phase motion below pi/2).
    pub fn new(samples: Vec<LagrangianFrame>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidInput("loop needs at least two samples".into()));
        }
        let n = samples[0].n();
        if samples.iter().any(|f| f.n() != n) {
            return Err(Error::DimensionMismatch("mixed frame sizes in loop".into()));
        }
        let first = samples.first().unwrap();
        let last = samples.last().unwrap();
        if intersection_dimension(first, last)? != n {
            return Err(Error::LoopNotClosed);
        }
        let lp = Self { samples };
        lp.check_phase_guard()?;
        Ok(lp)
    }

    pub fn samples(&self) -> &[LagrangianFrame] {
        &self.samples
    }

    pub fn n(&self) -> usize {
        self.samples[0].n()
    }

    fn check_phase_guard(&self) -> Result<()> {
        let mut prev = det_squared(&self.samples[0]).arg();
        for (k, frame) in self.samples.iter().enumerate().skip(1) {
            let cur = det_squared(frame).arg();
            let step = wrap_angle(cur - prev).abs();
            if step >= PHASE_STEP_GUARD {
                return Err(Error::SamplingTooCoarse {
                    index: k,
                    step,
                    guard: PHASE_STEP_GUARD,
                });
            }
            prev = cur;
        }
        Ok(())
    }

    /// Applies an independent gauge to every sample.
    pub fn gauge_each<'a>(&self, gauges: impl Iterator<Item = &'a RMatrix>) -> Result<Self> {
        let samples: Vec<LagrangianFrame> = self
            .samples
            .iter()
            .zip(gauges)
            .map(|(f, o)| f.gauge(o))
            .collect();
        if samples.len() != self.samples.len() {
            return Err(Error::InvalidInput("not enough gauge matrices".into()));
        }
        Ok(Self { samples })
    }
}

/// Winding number of det^2 along the loop, accumulated from per-step phase
/// differences.
pub fn maslov_index(lp: &LagrangianLoop) -> Result<i64> {
    let mut total = 0.0;
    let mut prev = det_squared(&lp.samples[0]).arg();
    for (k, frame) in lp.samples.iter().enumerate().skip(1) {
        let cur = det_squared(frame).arg();
        let step = wrap_angle(cur - prev);
        if step.abs() >= PHASE_STEP_GUARD {
            return Err(Error::SamplingTooCoarse {
                index: k,
                step: step.abs(),
                guard: PHASE_STEP_GUARD,
            });
        }
        total += step;
        prev = cur;
    }
    let winding = total / (2.0 * std::f64::consts::PI);
    let rounded = winding.round();
    if (winding - rounded).abs() > 0.05 {
        return Err(Error::NonFinite(format!(
            "winding {winding} is not close to an integer"
        )));
    }
    Ok(rounded as i64)
}

/// Eigenangles of the relative position of `frame` with respect to
/// `reference`; an angle at zero means a one-dimensional intersection.
fn relative_angles(frame: &LagrangianFrame, reference: &LagrangianFrame) -> Vec<f64> {
    let v = reference.u.adjoint() * &frame.u;
    let m = v.transpose() * &v;
    symmetric_unitary_eigenangles(&m)
}

/// Matches `next` against `prev` on the circle, returning the permutation of
/// `next` minimizing total circular displacement. Sizes here are tiny, so a
/// full permutation search is fine.
fn match_angles(prev: &[f64], next: &[f64]) -> Vec<usize> {
    let n = prev.len();
    let mut best: Vec<usize> = (0..n).collect();
    let mut best_cost = f64::INFINITY;
    let mut idx: Vec<usize> = (0..n).collect();
    permute(&mut idx, 0, &mut |perm| {
        let cost: f64 = (0..n)
            .map(|i| wrap_angle(next[perm[i]] - prev[i]).abs())
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best = perm.to_vec();
        }
    });
    best
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}

/// Individual crossing signs of an open path of frames against the Maslov
/// cycle of `reference`, ordered along the path.
///
/// Each simple crossing contributes the direction in which the relative
/// eigenangle passes through zero; the calibration makes the canonical
/// generator loop count +1 against the vertical plane. Crossings may sit on a
/// sample (the sample's plane meets the reference) or between two samples;
/// a crossing on the first or last sample asks for resampling.
pub fn path_crossing_signs(
    frames: &[LagrangianFrame],
    reference: &LagrangianFrame,
) -> Result<Vec<i64>> {
    if frames.len() < 2 {
        return Ok(vec![]);
    }
    let n = frames[0].n();
    if reference.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "reference of size {} against frames of size {n}",
            reference.n()
        )));
    }
    if n > 7 {
        return Err(Error::InvalidInput(
            "crossing analysis supports n <= 7".into(),
        ));
    }
    let m = frames.len();
    // Continuously matched eigenangle branches along the path.
    let mut branches: Vec<Vec<f64>> = vec![Vec::with_capacity(m); n];
    let mut prev = relative_angles(&frames[0], reference);
    for (b, &a) in prev.iter().enumerate() {
        branches[b].push(a);
    }
    for frame in frames.iter().skip(1) {
        let angles = relative_angles(frame, reference);
        let perm = match_angles(&prev, &angles);
        let matched: Vec<f64> = (0..n).map(|i| angles[perm[i]]).collect();
        for b in 0..n {
            let step = wrap_angle(matched[b] - prev[b]);
            if step.abs() >= PHASE_STEP_GUARD {
                return Err(Error::SamplingTooCoarse {
                    index: branches[b].len(),
                    step: step.abs(),
                    guard: PHASE_STEP_GUARD,
                });
            }
            branches[b].push(prev[b] + step);
        }
        prev = matched;
    }

    // (position along path, sign) for every detected crossing event.
    let mut events: Vec<(usize, i64)> = Vec::new();
    for branch in &branches {
        let zero_at: Vec<bool> = branch
            .iter()
            .map(|&a| wrap_angle(a).abs() <= CROSSING_ANGLE_TOL)
            .collect();
        // On-sample crossings: the wrapped branch angle vanishes at a sample.
        // A maximal run of consecutive zero samples is one crossing event.
        let mut k = 0;
        while k < m {
            if !zero_at[k] {
                k += 1;
                continue;
            }
            let start = k;
            let mut end = k;
            while end + 1 < m && zero_at[end + 1] {
                end += 1;
            }
            if start == 0 || end == m - 1 {
                return Err(Error::ResampleRequired);
            }
            for s in start..=end {
                let dim = branches
                    .iter()
                    .filter(|other| wrap_angle(other[s]).abs() <= CROSSING_ANGLE_TOL)
                    .count();
                if dim >= 2 {
                    return Err(Error::DegenerateCrossing { index: s, dim });
                }
            }
            let delta = branch[end + 1] - branch[start - 1];
            if delta.abs() <= CROSSING_ANGLE_TOL {
                return Err(Error::DegenerateCrossing { index: start, dim: 1 });
            }
            events.push((start, if delta > 0.0 { 1 } else { -1 }));
            k = end + 1;
        }
        // Between-sample crossings: sign change of the wrapped angle across a
        // step that stays within the guard, skipping steps adjacent to an
        // on-sample zero. A sign change through +-pi is not a crossing, and
        // is distinguished by the plain (unwrapped) difference exceeding pi.
        for k in 0..m - 1 {
            if zero_at[k] || zero_at[k + 1] {
                continue;
            }
            let a = wrap_angle(branch[k]);
            let b = wrap_angle(branch[k + 1]);
            if a.signum() != b.signum() && (a - b).abs() < std::f64::consts::PI {
                events.push((k, if b > a { 1 } else { -1 }));
            }
        }
    }
    events.sort_by_key(|e| e.0);
    Ok(events.into_iter().map(|e| e.1).collect())
}

/// Signed count of the loop's crossings with the Maslov cycle of `reference`;
/// for the vertical reference this equals the Maslov index on loops with
/// transverse crossings.
pub fn signed_crossings(lp: &LagrangianLoop, reference: &LagrangianFrame) -> Result<i64> {
    Ok(path_crossing_signs(&lp.samples, reference)?.iter().sum())
}

/// The generator loop t -> e^{i t} R + i R^{n-1}, t in [0, pi], traversed
/// `turns` times (negative reverses the orientation); `samples` is the number
/// of steps per traversal.
///
/// ```
/// use integrable::maslov::{canonical_loop, maslov_index};
/// let lp = canonical_loop(3, 64, 1).unwrap();
/// assert_eq!(maslov_index(&lp).unwrap(), 1);
/// ```
pub fn canonical_loop(n: usize, samples: usize, turns: i64) -> Result<LagrangianLoop> {
    if n == 0 || samples < 8 {
        return Err(Error::InvalidInput(
            "need n >= 1 and at least 8 samples".into(),
        ));
    }
    let total = samples * turns.unsigned_abs() as usize;
    let mut frames = Vec::with_capacity(total + 1);
    for k in 0..=total {
        let t = std::f64::consts::PI * (turns.signum() as f64) * (k as f64) / (samples as f64);
        let mut u = CMatrix::identity(n, n).map(|z| z * Complex::new(0.0, 1.0));
        u[(0, 0)] = Complex::from_polar(1.0, t);
        frames.push(LagrangianFrame::new(u, 1e-12)?);
    }
    LagrangianLoop::new(frames)
}
