//! Spec-file driven command line: one JSON run spec in, one report out.
//!
//! The run spec selects a command and its parameters; the only process flags
//! are `--spec`, `--seed`, `--out` and `--format`. Identical (spec, seed)
//! pairs produce byte-identical reports apart from the wall-time field.
//!
//! Exit codes: 0 all assertions pass, 1 an assertion failed, 2 schema or
//! parse violation, 3 numerical singularity.

use std::io::Read;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::config::Tolerances;
use crate::report::RunReport;
use crate::topo7::EschenburgQuartet;
use crate::{homog, maslov, poisson, projtori, topo7, Error};

/// Parsed and validated run specification.
#[derive(Debug, Clone, Deserialize)]
pub struct RunSpec {
    pub command: String,
    #[serde(default)]
    pub parameters: Value,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// The full command enum; every module verification report is reachable from
/// exactly one of these.
pub const COMMANDS: [&str; 11] = [
    "maslov-index",
    "involution",
    "independence",
    "flow",
    "proj-tori",
    "image-of-j",
    "wks-verify",
    "eschenburg-verify",
    "esch-enumerate",
    "wks-classify",
    "table-verify",
];

/// Failure modes of a run, mapped to process exit codes.
#[derive(Debug)]
pub enum RunError {
    /// Malformed spec, unknown command or invalid parameters (exit 2).
    Schema(String),
    /// Numerical singularity or degeneracy during execution (exit 3).
    Numerical(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Schema(_) => 2,
            RunError::Numerical(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            RunError::Schema(m) | RunError::Numerical(m) => m,
        }
    }
}

fn numerical(e: Error) -> RunError {
    match e {
        Error::InvalidInput(m) | Error::DimensionMismatch(m) => RunError::Schema(m),
        other => RunError::Numerical(other.to_string()),
    }
}

fn params<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T, RunError> {
    let v = if v.is_null() { json!({}) } else { v.clone() };
    serde_json::from_value(v).map_err(|e| RunError::Schema(format!("invalid parameters: {e}")))
}

/// Parses a run spec from JSON text, reporting parse errors with location.
pub fn load_spec(text: &str) -> Result<RunSpec, RunError> {
    let spec: RunSpec = serde_json::from_str(text).map_err(|e| {
        RunError::Schema(format!(
            "spec parse error at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })?;
    if !COMMANDS.contains(&spec.command.as_str()) {
        return Err(RunError::Schema(format!(
            "unknown command '{}'; expected one of {:?}",
            spec.command, COMMANDS
        )));
    }
    Ok(spec)
}

/// Reads the spec from a path or, for "-", from standard input.
pub fn load_spec_from(path: &str) -> Result<RunSpec, RunError> {
    let text = if path == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| RunError::Schema(format!("reading stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| RunError::Schema(format!("reading {path}: {e}")))?
    };
    load_spec(&text)
}

fn default_metrics(n: usize, amp: f64) -> Result<projtori::ModelMetricPair, RunError> {
    if amp == 0.0 {
        let lambdas = (0..n)
            .map(|i| projtori::TrigPolynomial::constant(2.0 + 3.0 * i as f64))
            .collect();
        projtori::SeparatedEigenfunctions::new(lambdas)
            .map(projtori::ModelMetricPair::new)
            .map_err(numerical)
    } else {
        projtori::example_metrics(n, amp).map_err(numerical)
    }
}

fn run_maslov_index(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default = "default_preset")]
        preset: String,
        #[serde(default = "two")]
        n: usize,
        #[serde(default = "sixty_four")]
        samples: usize,
        #[serde(default = "one")]
        turns: i64,
    }
    fn default_preset() -> String {
        "canonical".into()
    }
    fn two() -> usize {
        2
    }
    fn sixty_four() -> usize {
        64
    }
    fn one() -> i64 {
        1
    }
    let p: P = params(&spec.parameters)?;
    if p.preset != "canonical" {
        return Err(RunError::Schema(format!("unknown preset '{}'", p.preset)));
    }
    let mut report = RunReport::new(
        &spec.command,
        json!({"preset": p.preset, "n": p.n, "samples": p.samples, "turns": p.turns}),
    );
    let lp = maslov::canonical_loop(p.n, p.samples, p.turns).map_err(numerical)?;
    let index = maslov::maslov_index(&lp).map_err(numerical)?;
    report.results = json!({ "index": index });
    report.assert(
        "index-matches-turns",
        index == p.turns,
        format!("index {index} for {} traversals", p.turns),
    );
    Ok(report)
}

fn run_involution(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields, tag = "system", rename_all = "kebab-case")]
    enum P {
        ProjTori {
            #[serde(default = "two")]
            n: usize,
            #[serde(default = "five")]
            taus: usize,
            #[serde(default = "twenty")]
            states: usize,
        },
        Wks {
            k: i64,
            l: i64,
            #[serde(default = "ten")]
            points: usize,
        },
        Su3 {
            #[serde(default = "three")]
            points: usize,
        },
    }
    fn two() -> usize {
        2
    }
    fn five() -> usize {
        5
    }
    fn twenty() -> usize {
        20
    }
    fn ten() -> usize {
        10
    }
    fn three() -> usize {
        3
    }
    let p: P = params(&spec.parameters)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tol = &spec.tolerances;
    match p {
        P::ProjTori { n, taus, states } => {
            let mut report = RunReport::new(
                &spec.command,
                json!({"system": "proj-tori", "n": n, "taus": taus, "states": states}),
            );
            let metrics = projtori::wavy_metrics(n).map_err(numerical)?;
            let lo = metrics.eig.lo(0);
            let hi = metrics.eig.hi(n - 1);
            let fields: Vec<poisson::ScalarField> = (0..taus)
                .map(|k| {
                    let t = lo - 2.0 + (hi - lo + 4.0) * k as f64 / taus.max(1) as f64;
                    projtori::momentum_integral_field_fd(&metrics, t)
                })
                .collect();
            use rand::Rng;
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
            let inv = poisson::involution_matrix(&fields, &points, None).map_err(numerical)?;
            report.results = json!({ "involution_max": inv.max_abs });
            report.assert(
                "involution-below-tolerance",
                inv.max_abs < tol.involution,
                format!("max |{{J_s, J_t}}| = {:.3e}", inv.max_abs),
            );
            Ok(report)
        }
        P::Wks { k, l, points } => {
            let mut report = RunReport::new(
                &spec.command,
                json!({"system": "wks", "k": k, "l": l, "points": points}),
            );
            let r = homog::wks_integrable_system(k, l, points, &mut rng)
                .map_err(numerical)?;
            report.results = serde_json::to_value(&r).unwrap();
            report.assert(
                "involution-below-tolerance",
                r.involution_max < tol.involution,
                format!("max Dirac bracket {:.3e}", r.involution_max),
            );
            Ok(report)
        }
        P::Su3 { points } => {
            let mut report =
                RunReport::new(&spec.command, json!({"system": "su3", "points": points}));
            let fields = homog::su3_integral_fields();
            let mut max = 0.0_f64;
            for _ in 0..points {
                let pt = homog::TrivializedCotangentPoint::random(&mut rng);
                for i in 0..fields.len() {
                    for j in (i + 1)..fields.len() {
                        let v = homog::trivialized_bracket(
                            fields[i].1.as_ref(),
                            fields[j].1.as_ref(),
                            &pt,
                        )
                        .map_err(numerical)?;
                        max = max.max(v.abs());
                    }
                }
            }
            report.results = json!({ "involution_max": max });
            report.assert(
                "involution-below-tolerance",
                max < tol.involution,
                format!("max bracket {max:.3e}"),
            );
            Ok(report)
        }
    }
}

fn run_independence(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields, tag = "system", rename_all = "kebab-case")]
    enum P {
        Wks {
            #[serde(default = "one")]
            k: i64,
            #[serde(default = "four")]
            l: i64,
        },
        ProjTori {
            #[serde(default = "two")]
            n: usize,
        },
    }
    fn one() -> i64 {
        1
    }
    fn four() -> i64 {
        4
    }
    fn two() -> usize {
        2
    }
    let p: P = params(&spec.parameters)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match p {
        P::Wks { k, l } => {
            let mut report =
                RunReport::new(&spec.command, json!({"system": "wks", "k": k, "l": l}));
            let r = homog::wks_integrable_system(k, l, 2, &mut rng).map_err(numerical)?;
            report.results = json!({
                "independence_rank": r.independence_rank,
                "reduced_rank": r.reduced_rank,
            });
            report.assert(
                "rank-eight-at-base",
                r.independence_rank == 8,
                format!("rank {}", r.independence_rank),
            );
            report.assert(
                "rank-seven-reduced",
                r.reduced_rank == 7,
                format!("reduced rank {}", r.reduced_rank),
            );
            Ok(report)
        }
        P::ProjTori { n } => {
            let mut report =
                RunReport::new(&spec.command, json!({"system": "proj-tori", "n": n}));
            let metrics = projtori::wavy_metrics(n).map_err(numerical)?;
            let probes = projtori::default_probes(&metrics);
            let fields: Vec<poisson::ScalarField> = probes
                .iter()
                .map(|&t| projtori::momentum_integral_field(&metrics, t))
                .collect();
            use rand::Rng;
            let state: Vec<f64> = (0..2 * n)
                .map(|i| {
                    if i < n {
                        rng.gen_range(0.0..1.0)
                    } else {
                        rng.gen_range(0.3..1.5)
                    }
                })
                .collect();
            let rank = poisson::independence_rank(&fields, &state, None).map_err(numerical)?;
            report.results = json!({ "rank": rank, "expected": n });
            report.assert("full-rank", rank == n, format!("rank {rank} of {n}"));
            Ok(report)
        }
    }
}

fn run_flow(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields, tag = "system", rename_all = "kebab-case")]
    enum P {
        ProjTori {
            #[serde(default = "two")]
            n: usize,
            #[serde(default = "ten_f")]
            duration: f64,
            #[serde(default = "ten_thousand")]
            steps: usize,
        },
        Wks {
            #[serde(default = "one")]
            k: i64,
            #[serde(default = "four")]
            l: i64,
            #[serde(default = "two_f")]
            duration: f64,
            #[serde(default = "two_thousand")]
            steps: usize,
        },
    }
    fn two() -> usize {
        2
    }
    fn ten_f() -> f64 {
        10.0
    }
    fn two_f() -> f64 {
        2.0
    }
    fn ten_thousand() -> usize {
        10_000
    }
    fn two_thousand() -> usize {
        2_000
    }
    fn one() -> i64 {
        1
    }
    fn four() -> i64 {
        4
    }
    let p: P = params(&spec.parameters)?;
    let tol = &spec.tolerances;
    match p {
        P::ProjTori { n, duration, steps } => {
            let mut report = RunReport::new(
                &spec.command,
                json!({"system": "proj-tori", "n": n, "duration": duration, "steps": steps}),
            );
            let metrics = projtori::wavy_metrics(n).map_err(numerical)?;
            let h = projtori::momentum_integral_field(&metrics, 0.0);
            let mut p0: Vec<f64> = vec![0.2; n];
            p0.extend(vec![0.8; n]);
            let traj = poisson::hamiltonian_flow(
                &h,
                &p0,
                duration,
                steps,
                None,
                &crate::config::FlowConfig::default(),
            )
            .map_err(numerical)?;
            let probes = projtori::default_probes(&metrics);
            let max_drift = probes
                .iter()
                .map(|&t| traj.observable_drift(&projtori::momentum_integral_field(&metrics, t)))
                .fold(0.0, f64::max);
            report.results = json!({
                "max_probe_drift": max_drift,
                "energy_drift": traj.max_energy_drift(),
            });
            report.assert(
                "probe-integrals-conserved",
                max_drift < tol.conservation,
                format!("max drift {max_drift:.3e}"),
            );
            Ok(report)
        }
        P::Wks { k, l, duration, steps } => {
            let mut report = RunReport::new(
                &spec.command,
                json!({"system": "wks", "k": k, "l": l, "duration": duration, "steps": steps}),
            );
            if topo7::gcd(k, l) != 1 {
                return Err(RunError::Schema(format!("non-coprime pair ({k}, {l})")));
            }
            let constraints = homog::sphere_constraints();
            let h5 = homog::hamiltonian_field(5);
            let h8 = homog::hamiltonian_field(8);
            let kinetic = poisson::ScalarField::new(homog::SPHERE_PHASE_DIM, move |q| {
                h5.eval(q) + h8.eval(q)
            });
            let p0 = homog::SphereCotangentPoint::base_point().to_flat();
            let traj = poisson::hamiltonian_flow(
                &kinetic,
                &p0,
                duration,
                steps,
                Some(&constraints),
                &crate::config::FlowConfig::default(),
            )
            .map_err(numerical)?;
            let drift = (1..=8u8)
                .map(|a| traj.observable_drift(&homog::hamiltonian_field(a)))
                .fold(0.0, f64::max);
            report.results = json!({
                "max_hamiltonian_drift": drift,
                "constraint_residual": traj.max_constraint_residual(),
            });
            report.assert(
                "integrals-conserved",
                drift < tol.conservation,
                format!("max drift {drift:.3e}"),
            );
            report.assert(
                "constraints-preserved",
                traj.max_constraint_residual() < 1e-7,
                format!("residual {:.3e}", traj.max_constraint_residual()),
            );
            Ok(report)
        }
    }
}

fn run_proj_tori(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default = "two")]
        n: usize,
        #[serde(default = "hundred")]
        consistency_states: usize,
        #[serde(default = "thousand")]
        weight_cases: usize,
    }
    fn two() -> usize {
        2
    }
    fn hundred() -> usize {
        100
    }
    fn thousand() -> usize {
        1000
    }
    let p: P = params(&spec.parameters)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut report = RunReport::new(
        &spec.command,
        json!({"n": p.n, "consistency_states": p.consistency_states, "weight_cases": p.weight_cases}),
    );
    use rand::Rng;
    let metrics = projtori::wavy_metrics(p.n).map_err(numerical)?;

    // Tensor-vs-coordinate agreement; the evaluation itself asserts 1e-9.
    let mut consistency_ok = 0usize;
    for _ in 0..p.consistency_states {
        let x: Vec<f64> = (0..p.n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let y: Vec<f64> = (0..p.n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let tau = rng.gen_range(-3.0..12.0);
        projtori::momentum_integral(&metrics, &x, &y, tau).map_err(numerical)?;
        consistency_ok += 1;
    }
    report.assert(
        "tensor-coordinate-agreement",
        consistency_ok == p.consistency_states,
        format!("{consistency_ok} states agreed at 1e-9"),
    );

    // Randomized weight suite.
    let mut sum_max: f64 = 0.0;
    let mut root_max: f64 = 0.0;
    let mut equivalence_ok = true;
    for _ in 0..p.weight_cases {
        let n = rng.gen_range(2..=5usize);
        let mut nodes: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if (0..n - 1).any(|i| nodes[i + 1] - nodes[i] < 1e-3) {
            continue;
        }
        let interlace: bool = rng.gen();
        let roots: Vec<f64> = (0..n - 1)
            .map(|i| {
                if interlace {
                    rng.gen_range(nodes[i]..nodes[i + 1])
                } else {
                    rng.gen_range(-8.0..8.0)
                }
            })
            .collect();
        let rw = projtori::lagrange_root_weights(&nodes, &roots).map_err(numerical)?;
        let sum: f64 = rw.weights.iter().sum();
        sum_max = sum_max.max((sum - 1.0).abs());
        let mut sorted = roots.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let scale = nodes
            .iter()
            .fold(1.0_f64, |m, v| m.max(v.abs()))
            .powi(n as i32 - 1);
        for &r in &sorted {
            let value: f64 = (0..n)
                .map(|i| {
                    let mu: f64 = (0..n)
                        .filter(|&j| j != i)
                        .map(|j| nodes[j] - r)
                        .product();
                    rw.weights[i] * mu
                })
                .sum();
            root_max = root_max.max(value.abs() / scale);
        }
        let all_nonneg = rw.weights.iter().all(|&a| a >= -1e-12);
        equivalence_ok &= all_nonneg == rw.interlacing;
    }
    report.results = json!({
        "weight_sum_residual": sum_max,
        "prescribed_root_residual": root_max,
    });
    report.assert(
        "weights-sum-to-one",
        sum_max < spec.tolerances.weight_sum,
        format!("max residual {sum_max:.3e}"),
    );
    report.assert(
        "prescribed-roots-vanish",
        root_max < spec.tolerances.root_residual,
        format!("max residual {root_max:.3e}"),
    );
    report.assert(
        "nonnegative-iff-interlacing",
        equivalence_ok,
        "two-sided equivalence held on every case",
    );
    Ok(report)
}

fn run_image_of_j(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default = "two")]
        n: usize,
        #[serde(default = "amp_default")]
        amp: f64,
        #[serde(default)]
        coefficients: Option<Vec<f64>>,
        #[serde(default = "one_f")]
        leading: f64,
        #[serde(default)]
        roots: Option<Vec<f64>>,
        #[serde(default = "samples_default")]
        loop_samples: usize,
    }
    fn two() -> usize {
        2
    }
    fn amp_default() -> f64 {
        0.1
    }
    fn one_f() -> f64 {
        1.0
    }
    fn samples_default() -> usize {
        512
    }
    let p: P = params(&spec.parameters)?;
    let metrics = default_metrics(p.n, p.amp)?;
    let q = match (&p.coefficients, &p.roots) {
        (Some(c), None) => match projtori::FirstIntegralPolynomial::from_coefficients(c) {
            Ok(q) => q,
            Err(_) => {
                // Non-real roots cannot be in the image.
                let mut report = RunReport::new(
                    &spec.command,
                    json!({"n": p.n, "amp": p.amp, "coefficients": c}),
                );
                report.results = json!({ "class": "outside" });
                return Ok(report);
            }
        },
        (None, Some(r)) => projtori::FirstIntegralPolynomial::from_roots(p.leading, r.clone()),
        _ => {
            return Err(RunError::Schema(
                "give exactly one of 'coefficients' or 'roots'".into(),
            ))
        }
    };
    let mut report = RunReport::new(
        &spec.command,
        json!({"n": p.n, "amp": p.amp, "leading": q.leading, "roots": q.roots}),
    );
    let class = projtori::image_membership(&metrics, &q);
    let mut results = json!({ "class": class });
    let tol = &spec.tolerances;
    match class {
        projtori::ImageClass::InteriorDiffeo => {
            let mut indices = Vec::new();
            for coord in 0..p.n {
                let idx = projtori::coordinate_loop_index(&metrics, &q, coord, p.loop_samples, tol)
                    .map_err(numerical)?;
                indices.push(idx);
            }
            report.assert(
                "interior-loops-trivial",
                indices.iter().all(|&i| i == 0),
                format!("coordinate loop indices {indices:?}"),
            );
            results["loop_indices"] = json!(indices);
        }
        projtori::ImageClass::NontrivialMaslov => {
            let out = projtori::coordinate_loop(&metrics, &q, 0, p.loop_samples, tol)
                .map_err(numerical)?;
            let idx = maslov::maslov_index(&out.lagrangian_loop).map_err(numerical)?;
            let vertical = maslov::LagrangianFrame::vertical(p.n);
            let crossings = maslov::signed_crossings(&out.lagrangian_loop, &vertical)
                .map_err(numerical)?;
            report.assert("crossing-loop-nontrivial", idx != 0, format!("index {idx}"));
            report.assert(
                "crossings-match-winding",
                crossings == idx,
                format!("signed crossings {crossings}, winding {idx}"),
            );
            results["loop_index"] = json!(idx);
            results["signed_crossings"] = json!(crossings);
        }
        _ => {}
    }
    report.results = results;
    Ok(report)
}

fn run_wks_verify(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        #[serde(default = "one")]
        k: i64,
        #[serde(default = "four")]
        l: i64,
        #[serde(default = "ten")]
        points: usize,
    }
    fn one() -> i64 {
        1
    }
    fn four() -> i64 {
        4
    }
    fn ten() -> usize {
        10
    }
    let p: P = params(&spec.parameters)?;
    if topo7::gcd(p.k, p.l) != 1 || p.k == 0 || p.l == 0 {
        return Err(RunError::Schema(format!(
            "need coprime nonzero (k, l), got ({}, {})",
            p.k, p.l
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut report =
        RunReport::new(&spec.command, json!({"k": p.k, "l": p.l, "points": p.points}));
    let r = homog::wks_integrable_system(p.k, p.l, p.points, &mut rng).map_err(numerical)?;
    let tol = &spec.tolerances;
    report.assert(
        "involution",
        r.involution_max < tol.involution,
        format!("max Dirac bracket {:.3e}", r.involution_max),
    );
    report.assert(
        "independence-rank-eight",
        r.independence_rank == 8,
        format!("rank {}", r.independence_rank),
    );
    report.assert(
        "reduced-rank-seven",
        r.reduced_rank == 7,
        format!("rank {}", r.reduced_rank),
    );
    report.assert(
        "kinetic-identity",
        r.kinetic_identity_residual < tol.identity,
        format!("residual {:.3e}", r.kinetic_identity_residual),
    );
    report.assert(
        "momentum-combination-identity",
        r.momentum_combination_residual < tol.identity,
        format!("residual {:.3e}", r.momentum_combination_residual),
    );
    report.assert(
        "conservation",
        r.conservation_drift < tol.conservation,
        format!("drift {:.3e}", r.conservation_drift),
    );
    report.results = serde_json::to_value(&r).unwrap();
    Ok(report)
}

fn run_eschenburg_verify(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        k: i64,
        l: i64,
        p: i64,
        q: i64,
        #[serde(default = "two")]
        points: usize,
    }
    fn two() -> usize {
        2
    }
    let p: P = params(&spec.parameters)?;
    let quartet = EschenburgQuartet::new(p.k, p.l, p.p, p.q);
    if !topo7::admissible(&quartet) {
        return Err(RunError::Schema(format!("{quartet:?} is not admissible")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut report = RunReport::new(
        &spec.command,
        json!({"k": p.k, "l": p.l, "p": p.p, "q": p.q, "points": p.points}),
    );
    let r = homog::eschenburg_integral_report(&quartet, p.points, &mut rng).map_err(numerical)?;
    let tol = &spec.tolerances;
    report.assert("shift-regular", r.shift_is_regular, "stabilizer has torus rank");
    report.assert(
        "involution",
        r.involution_max < tol.involution,
        format!("max bracket {:.3e}", r.involution_max),
    );
    report.assert(
        "differential-dimension-eight",
        r.differential_dimension == 8,
        format!("ddim {}", r.differential_dimension),
    );
    report.assert(
        "reduced-rank-seven",
        r.reduced_rank == 7,
        format!("rank {}", r.reduced_rank),
    );
    report.results = serde_json::to_value(&r).unwrap();
    Ok(report)
}

fn run_esch_enumerate(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        min: i64,
        max: i64,
    }
    let p: P = params(&spec.parameters)?;
    if p.max - p.min > 40 {
        return Err(RunError::Schema("box side exceeds 40".into()));
    }
    let mut report = RunReport::new(&spec.command, json!({"min": p.min, "max": p.max}));
    let listed = topo7::enumerate_admissible(topo7::Box4 {
        min: p.min,
        max: p.max,
    });
    let ordered = listed
        .windows(2)
        .all(|w| (w[0].k, w[0].l, w[0].p, w[0].q) < (w[1].k, w[1].l, w[1].p, w[1].q));
    report.assert("lexicographic-order", ordered, "stream sorted and duplicate-free");
    report.assert(
        "all-admissible",
        listed.iter().all(topo7::admissible),
        "every emitted quartet passes the gcd conditions",
    );
    report.results = json!({
        "count": listed.len(),
        "quartets": listed,
    });
    Ok(report)
}

fn run_wks_classify(spec: &RunSpec) -> Result<RunReport, RunError> {
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct P {
        k: i64,
        l: i64,
    }
    let p: P = params(&spec.parameters)?;
    if topo7::gcd(p.k, p.l) != 1 {
        return Err(RunError::Schema(format!(
            "classification needs coprime parameters, gcd({}, {}) = {}",
            p.k,
            p.l,
            topo7::gcd(p.k, p.l)
        )));
    }
    let mut report = RunReport::new(&spec.command, json!({"k": p.k, "l": p.l}));
    let hypothesis = topo7::wks_hypothesis(p.k, p.l);
    let homeo = topo7::wks14_homeomorphic(p.k, p.l).map_err(numerical)?;
    let diffeo = topo7::wks14_diffeomorphic(p.k, p.l).map_err(numerical)?;
    report.results = json!({
        "max_smooth_structures_hypothesis": hypothesis,
        "homeomorphic_to_1_4": homeo,
        "diffeomorphic_to_1_4": diffeo,
    });
    report.assert(
        "diffeomorphic-implies-homeomorphic",
        !diffeo || homeo,
        "congruence consistency",
    );
    Ok(report)
}

fn run_table_verify(spec: &RunSpec) -> Result<RunReport, RunError> {
    let mut report = RunReport::new(&spec.command, json!({}));
    let r = topo7::verify_reference_table().map_err(numerical)?;
    report.assert("twenty-eight-rows", r.rows == 28, format!("{} rows", r.rows));
    report.assert(
        "all-rows-admissible",
        r.admissible_rows == r.rows,
        format!("{}/{} admissible", r.admissible_rows, r.rows),
    );
    report.assert(
        "invariant-column-matches",
        r.invariant_column_matches,
        "printed values equal i/28 to six decimals",
    );
    report.assert(
        "invariants-distinct",
        r.invariants_distinct,
        "no collision mod 1",
    );
    report.results = serde_json::to_value(&r).unwrap();
    Ok(report)
}

/// Dispatches a validated spec to the owning module. The report echoes the
/// parameters, the seed and the effective tolerances.
pub fn execute(spec: &RunSpec) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let mut report = match spec.command.as_str() {
        "maslov-index" => run_maslov_index(spec),
        "involution" => run_involution(spec),
        "independence" => run_independence(spec),
        "flow" => run_flow(spec),
        "proj-tori" => run_proj_tori(spec),
        "image-of-j" => run_image_of_j(spec),
        "wks-verify" => run_wks_verify(spec),
        "eschenburg-verify" => run_eschenburg_verify(spec),
        "esch-enumerate" => run_esch_enumerate(spec),
        "wks-classify" => run_wks_classify(spec),
        "table-verify" => run_table_verify(spec),
        other => Err(RunError::Schema(format!("unknown command '{other}'"))),
    }?;
    report.inputs = json!({
        "parameters": report.inputs,
        "seed": spec.seed,
        "tolerances": spec.tolerances,
    });
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(report)
}

/// CSV rendering for the tabular commands; other commands get a key,value
/// flattening of their results.
pub fn to_csv(report: &RunReport) -> String {
    let mut out = String::new();
    match report.command.as_str() {
        "esch-enumerate" => {
            out.push_str("k,l,p,q\n");
            if let Some(rows) = report.results.get("quartets").and_then(|v| v.as_array()) {
                for r in rows {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        r["k"], r["l"], r["p"], r["q"]
                    ));
                }
            }
        }
        "table-verify" => {
            out.push_str("key,value\n");
            if let Some(obj) = report.results.as_object() {
                for (k, v) in obj {
                    out.push_str(&format!("{k},{v}\n"));
                }
            }
        }
        _ => {
            out.push_str("key,value\n");
            if let Some(obj) = report.results.as_object() {
                for (k, v) in obj {
                    out.push_str(&format!("{k},{v}\n"));
                }
            }
            for a in &report.assertions {
                out.push_str(&format!("assert:{},{}\n", a.name, a.pass));
            }
        }
    }
    out
}
