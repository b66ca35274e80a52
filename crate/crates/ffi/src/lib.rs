//! C ABI over the integrable toolkit: opaque handles, status codes and a
//! thread-local error message. The header is generated into
//! `include/integrable.h` at build time.

use std::cell::RefCell;
use std::os::raw::c_char;

use integrable::config::Tolerances;
use integrable::maslov::{canonical_loop, maslov_index, LagrangianFrame, LagrangianLoop};
use integrable::projtori::{
    coordinate_loop_index, image_membership, momentum_integral, momentum_integral_field_fd,
    FirstIntegralPolynomial, ImageClass, ModelMetricPair, SeparatedEigenfunctions,
    TrigPolynomial,
};
use integrable::{poisson, topo7};
use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Status code of every fallible call.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrableStatus {
    Ok = 0,
    /// A pointer argument was null.
    NullPointer = 1,
    /// Arguments failed validation.
    InvalidArgument = 2,
    /// A numerical degeneracy or singularity was hit.
    Numerical = 3,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(msg: impl Into<String>, code: IntegrableStatus) -> IntegrableStatus {
    set_error(msg);
    code
}

fn from_error(e: integrable::Error) -> IntegrableStatus {
    let code = match &e {
        integrable::Error::InvalidInput(_) | integrable::Error::DimensionMismatch(_) => {
            IntegrableStatus::InvalidArgument
        }
        _ => IntegrableStatus::Numerical,
    };
    fail(e.to_string(), code)
}

/// Copies the message of the most recent error on this thread into `buf`
/// (NUL-terminated, truncated to `len`); returns the full message length.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null (then only the
/// length is returned).
#[no_mangle]
pub unsafe extern "C" fn integrable_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

// ---------------------------------------------------------------------------
// Integer classifiers
// ---------------------------------------------------------------------------

/// 1 when the quartet satisfies the six freeness gcd conditions, else 0.
#[no_mangle]
pub extern "C" fn integrable_eschenburg_admissible(k: i64, l: i64, p: i64, q: i64) -> i32 {
    topo7::admissible(&topo7::EschenburgQuartet::new(k, l, p, q)) as i32
}

/// 1 when (k, l) satisfies the maximal-smooth-structure hypothesis, else 0.
#[no_mangle]
pub extern "C" fn integrable_wks_hypothesis(k: i64, l: i64) -> i32 {
    topo7::wks_hypothesis(k, l) as i32
}

/// Homeomorphism congruence against the (1, 4) space; `out` receives 0 or 1.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn integrable_wks14_homeomorphic(
    k: i64,
    l: i64,
    out: *mut i32,
) -> IntegrableStatus {
    if out.is_null() {
        return fail("null output pointer", IntegrableStatus::NullPointer);
    }
    match topo7::wks14_homeomorphic(k, l) {
        Ok(v) => {
            *out = v as i32;
            IntegrableStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Diffeomorphism congruence against the (1, 4) space; `out` receives 0 or 1.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn integrable_wks14_diffeomorphic(
    k: i64,
    l: i64,
    out: *mut i32,
) -> IntegrableStatus {
    if out.is_null() {
        return fail("null output pointer", IntegrableStatus::NullPointer);
    }
    match topo7::wks14_diffeomorphic(k, l) {
        Ok(v) => {
            *out = v as i32;
            IntegrableStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Verifies the embedded 28-row reference table; `admissible_rows` receives
/// the number of rows passing the gcd conditions.
///
/// # Safety
/// `admissible_rows` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn integrable_table_verify(
    admissible_rows: *mut u32,
) -> IntegrableStatus {
    if admissible_rows.is_null() {
        return fail("null output pointer", IntegrableStatus::NullPointer);
    }
    match topo7::verify_reference_table() {
        Ok(report) => {
            *admissible_rows = report.admissible_rows as u32;
            if report.pass() {
                IntegrableStatus::Ok
            } else {
                fail("reference table verification failed", IntegrableStatus::Numerical)
            }
        }
        Err(e) => from_error(e),
    }
}

// ---------------------------------------------------------------------------
// Maslov indices
// ---------------------------------------------------------------------------

/// Winding index of the canonical generator loop traversed `turns` times.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn integrable_canonical_maslov_index(
    n: usize,
    samples: usize,
    turns: i64,
    out: *mut i64,
) -> IntegrableStatus {
    if out.is_null() {
        return fail("null output pointer", IntegrableStatus::NullPointer);
    }
    match canonical_loop(n, samples, turns).and_then(|lp| maslov_index(&lp)) {
        Ok(idx) => {
            *out = idx;
            IntegrableStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Winding index of a sampled loop of unitary frames. `frames` holds
/// `n_samples` row-major n x n complex matrices as interleaved re/im pairs,
/// 2 n^2 doubles per sample; the first and last sample must span the same
/// plane.
///
/// # Safety
/// `frames` must point to `n_samples * 2 * n * n` doubles and `out` must be
/// a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn integrable_maslov_index_from_frames(
    n: usize,
    n_samples: usize,
    frames: *const f64,
    out: *mut i64,
) -> IntegrableStatus {
    if frames.is_null() || out.is_null() {
        return fail("null pointer argument", IntegrableStatus::NullPointer);
    }
    if n == 0 || n_samples < 2 {
        return fail("need n >= 1 and at least two samples", IntegrableStatus::InvalidArgument);
    }
    let stride = 2 * n * n;
    let data = std::slice::from_raw_parts(frames, n_samples * stride);
    let mut samples = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let block = &data[s * stride..(s + 1) * stride];
        let u = nalgebra::DMatrix::from_fn(n, n, |i, j| {
            let at = 2 * (i * n + j);
            Complex::new(block[at], block[at + 1])
        });
        match LagrangianFrame::new(u, 1e-8) {
            Ok(f) => samples.push(f),
            Err(e) => return from_error(e),
        }
    }
    match LagrangianLoop::new(samples).and_then(|lp| maslov_index(&lp)) {
        Ok(idx) => {
            *out = idx;
            IntegrableStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

// ---------------------------------------------------------------------------
// Model metric handles
// ---------------------------------------------------------------------------

/// Opaque handle of a separated model-metric pair on the n-torus.
pub struct IntegrableMetrics {
    inner: ModelMetricPair,
}

/// Builds a metric pair from per-coordinate eigenfunctions
/// constant_i + amplitude_i * sin(2 pi harmonic_i s). Returns null on
/// validation failure (separation or positivity).
///
/// # Safety
/// The three arrays must each hold `n` entries.
#[no_mangle]
pub unsafe extern "C" fn integrable_metrics_new(
    n: usize,
    constants: *const f64,
    amplitudes: *const f64,
    harmonics: *const usize,
) -> *mut IntegrableMetrics {
    if n == 0 || constants.is_null() || amplitudes.is_null() || harmonics.is_null() {
        set_error("null or empty eigenfunction data");
        return std::ptr::null_mut();
    }
    let constants = std::slice::from_raw_parts(constants, n);
    let amplitudes = std::slice::from_raw_parts(amplitudes, n);
    let harmonics = std::slice::from_raw_parts(harmonics, n);
    let lambdas: Vec<TrigPolynomial> = (0..n)
        .map(|i| {
            if amplitudes[i] == 0.0 {
                TrigPolynomial::constant(constants[i])
            } else {
                TrigPolynomial::sinusoid(constants[i], amplitudes[i], harmonics[i].max(1))
            }
        })
        .collect();
    match SeparatedEigenfunctions::new(lambdas) {
        Ok(eig) => Box::into_raw(Box::new(IntegrableMetrics {
            inner: ModelMetricPair::new(eig),
        })),
        Err(e) => {
            set_error(e.to_string());
            std::ptr::null_mut()
        }
    }
}

/// Releases a metric handle; a null pointer is ignored.
///
/// # Safety
/// `m` must come from `integrable_metrics_new` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn integrable_metrics_free(m: *mut IntegrableMetrics) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Evaluates the momentum-form integral J_tau at (x, y), both of length n.
///
/// # Safety
/// `m` must be a live handle; `x`, `y` must hold n doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn integrable_metrics_integral(
    m: *const IntegrableMetrics,
    x: *const f64,
    y: *const f64,
    tau: f64,
    out: *mut f64,
) -> IntegrableStatus {
    if m.is_null() || x.is_null() || y.is_null() || out.is_null() {
        return fail("null pointer argument", IntegrableStatus::NullPointer);
    }
    let metrics = &(*m).inner;
    let n = metrics.n();
    let x = std::slice::from_raw_parts(x, n);
    let y = std::slice::from_raw_parts(y, n);
    match momentum_integral(metrics, x, y, tau) {
        Ok(v) => {
            *out = v;
            IntegrableStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Classification of a polynomial level against the integral-map image.
#[repr(i32)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IntegrableImageClass {
    InteriorDiffeo = 0,
    Boundary = 1,
    NontrivialMaslov = 2,
    Outside = 3,
}

/// Classifies the polynomial with the given leading coefficient and real
/// roots (length n - 1).
///
/// # Safety
/// `m` must be a live handle; `roots` must hold `n_roots` doubles; `out`
/// must be valid.
#[no_mangle]
pub unsafe extern "C" fn integrable_metrics_classify(
    m: *const IntegrableMetrics,
    leading: f64,
    roots: *const f64,
    n_roots: usize,
    out: *mut IntegrableImageClass,
) -> IntegrableStatus {
    if m.is_null() || out.is_null() || (roots.is_null() && n_roots > 0) {
        return fail("null pointer argument", IntegrableStatus::NullPointer);
    }
    let metrics = &(*m).inner;
    if n_roots + 1 != metrics.n() {
        return fail(
            format!("expected {} roots, got {n_roots}", metrics.n() - 1),
            IntegrableStatus::InvalidArgument,
        );
    }
    let roots = if n_roots == 0 {
        vec![]
    } else {
        std::slice::from_raw_parts(roots, n_roots).to_vec()
    };
    let q = FirstIntegralPolynomial::from_roots(leading, roots);
    *out = match image_membership(metrics, &q) {
        ImageClass::InteriorDiffeo => IntegrableImageClass::InteriorDiffeo,
        ImageClass::Boundary => IntegrableImageClass::Boundary,
        ImageClass::NontrivialMaslov => IntegrableImageClass::NontrivialMaslov,
        ImageClass::Outside => IntegrableImageClass::Outside,
    };
    IntegrableStatus::Ok
}

/// Maslov index of the lifted coordinate loop on the level torus of the
/// polynomial (leading, roots).
///
/// # Safety
/// Pointer arguments as in `integrable_metrics_classify`.
#[no_mangle]
pub unsafe extern "C" fn integrable_metrics_loop_index(
    m: *const IntegrableMetrics,
    leading: f64,
    roots: *const f64,
    n_roots: usize,
    coordinate: usize,
    samples: usize,
    out: *mut i64,
) -> IntegrableStatus {
    if m.is_null() || out.is_null() || (roots.is_null() && n_roots > 0) {
        return fail("null pointer argument", IntegrableStatus::NullPointer);
    }
    let metrics = &(*m).inner;
    if n_roots + 1 != metrics.n() {
        return fail(
            format!("expected {} roots, got {n_roots}", metrics.n() - 1),
            IntegrableStatus::InvalidArgument,
        );
    }
    let roots = if n_roots == 0 {
        vec![]
    } else {
        std::slice::from_raw_parts(roots, n_roots).to_vec()
    };
    let q = FirstIntegralPolynomial::from_roots(leading, roots);
    match coordinate_loop_index(metrics, &q, coordinate, samples, &Tolerances::default()) {
        Ok(idx) => {
            *out = idx;
            IntegrableStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Max pairwise Poisson bracket of `n_taus` probe integrals over `states`
/// seeded random phase points.
///
/// # Safety
/// `m` must be a live handle; `taus` must hold `n_taus` doubles; `out` valid.
#[no_mangle]
pub unsafe extern "C" fn integrable_metrics_involution_max(
    m: *const IntegrableMetrics,
    taus: *const f64,
    n_taus: usize,
    states: usize,
    seed: u64,
    out: *mut f64,
) -> IntegrableStatus {
    if m.is_null() || taus.is_null() || out.is_null() {
        return fail("null pointer argument", IntegrableStatus::NullPointer);
    }
    if n_taus < 2 || states == 0 {
        return fail(
            "need at least two probes and one state",
            IntegrableStatus::InvalidArgument,
        );
    }
    let metrics = &(*m).inner;
    let n = metrics.n();
    let taus = std::slice::from_raw_parts(taus, n_taus);
    let fields: Vec<poisson::ScalarField> = taus
        .iter()
        .map(|&t| momentum_integral_field_fd(metrics, t))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..states)
        .map(|_| {
            (0..2 * n)
                .map(|i| {
                    if i < n {
                        rng.gen_range(0.0..1.0)
                    } else {
                        rng.gen_range(-1.5..1.5)
                    }
                })
                .collect()
        })
        .collect();
    match poisson::involution_matrix(&fields, &points, None) {
        Ok(inv) => {
            *out = inv.max_abs;
            IntegrableStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classifiers_round_trip() {
        assert_eq!(integrable_eschenburg_admissible(-1, -1, -2, 0), 1);
        assert_eq!(integrable_eschenburg_admissible(1, 1, 1, 0), 0);
        assert_eq!(integrable_wks_hypothesis(1, 4), 1);
        assert_eq!(integrable_wks_hypothesis(1, 8), 0);
        unsafe {
            let mut out = -1;
            assert_eq!(
                integrable_wks14_homeomorphic(33, 4, &mut out),
                IntegrableStatus::Ok
            );
            assert_eq!(out, 1);
            assert_eq!(
                integrable_wks14_diffeomorphic(33, 4, &mut out),
                IntegrableStatus::Ok
            );
            assert_eq!(out, 0);
            // Non-coprime pair: error with a readable message.
            let status = integrable_wks14_homeomorphic(2, 4, &mut out);
            assert_eq!(status, IntegrableStatus::InvalidArgument);
            let mut buf = [0i8; 128];
            let len = integrable_last_error_message(buf.as_mut_ptr(), buf.len());
            assert!(len > 0);
        }
    }

    #[test]
    fn table_verifies_through_ffi() {
        unsafe {
            let mut rows = 0u32;
            assert_eq!(integrable_table_verify(&mut rows), IntegrableStatus::Ok);
            assert_eq!(rows, 28);
        }
    }

    #[test]
    fn canonical_index_through_ffi() {
        unsafe {
            let mut idx = 0i64;
            for n in [1usize, 2, 3, 5] {
                assert_eq!(
                    integrable_canonical_maslov_index(n, 64, 1, &mut idx),
                    IntegrableStatus::Ok
                );
                assert_eq!(idx, 1);
            }
            assert_eq!(
                integrable_canonical_maslov_index(2, 64, -2, &mut idx),
                IntegrableStatus::Ok
            );
            assert_eq!(idx, -2);
        }
    }

    #[test]
    fn frames_buffer_index() {
        // Canonical n = 1 loop passed through the flat buffer interface.
        let samples = 64usize;
        let mut data = Vec::with_capacity((samples + 1) * 2);
        for k in 0..=samples {
            let t = std::f64::consts::PI * k as f64 / samples as f64;
            data.push(t.cos());
            data.push(t.sin());
        }
        unsafe {
            let mut idx = 0i64;
            assert_eq!(
                integrable_maslov_index_from_frames(1, samples + 1, data.as_ptr(), &mut idx),
                IntegrableStatus::Ok
            );
            assert_eq!(idx, 1);
        }
    }

    #[test]
    fn metrics_handle_lifecycle() {
        unsafe {
            let constants = [2.0, 5.0];
            let amplitudes = [0.1, 0.0];
            let harmonics = [1usize, 1];
            let handle = integrable_metrics_new(
                2,
                constants.as_ptr(),
                amplitudes.as_ptr(),
                harmonics.as_ptr(),
            );
            assert!(!handle.is_null());

            let mut value = 0.0;
            let x = [0.25, 0.5];
            let y = [1.0, 1.0];
            assert_eq!(
                integrable_metrics_integral(handle, x.as_ptr(), y.as_ptr(), 0.0, &mut value),
                IntegrableStatus::Ok
            );
            assert!(value.is_finite());

            let mut class = IntegrableImageClass::Outside;
            let roots = [2.0];
            assert_eq!(
                integrable_metrics_classify(handle, 1.0, roots.as_ptr(), 1, &mut class),
                IntegrableStatus::Ok
            );
            assert_eq!(class, IntegrableImageClass::NontrivialMaslov);

            let mut idx = 0i64;
            assert_eq!(
                integrable_metrics_loop_index(handle, 1.0, roots.as_ptr(), 1, 0, 256, &mut idx),
                IntegrableStatus::Ok
            );
            assert_ne!(idx, 0);

            let taus = [-1.0, 0.0, 3.3];
            let mut inv = f64::NAN;
            assert_eq!(
                integrable_metrics_involution_max(handle, taus.as_ptr(), 3, 5, 0, &mut inv),
                IntegrableStatus::Ok
            );
            assert!(inv < 1e-5);

            integrable_metrics_free(handle);
        }
        // Overlapping eigenfunctions are refused with a null handle.
        unsafe {
            let constants = [2.0, 2.5];
            let amplitudes = [1.0, 0.0];
            let harmonics = [1usize, 1];
            let handle = integrable_metrics_new(
                2,
                constants.as_ptr(),
                amplitudes.as_ptr(),
                harmonics.as_ptr(),
            );
            assert!(handle.is_null());
        }
    }

    #[test]
    fn header_was_generated() {
        let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/integrable.h");
        let text = std::fs::read_to_string(header).expect("header exists");
        assert!(text.contains("integrable_canonical_maslov_index"));
        assert!(text.contains("IntegrableStatus"));
        assert!(text.contains("IntegrableMetrics"));
    }
}
