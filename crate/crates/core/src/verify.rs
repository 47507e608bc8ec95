//! Independent certificate verification: exact level-set extrema of quadratic
//! forms over boxes, deterministic low-discrepancy sampling of every
//! certificate condition, spectral checks, Monte Carlo closed-loop rollouts,
//! and (test-only) consistency against sealed truth models.

use crate::datarep::DataRepresentation;
use crate::matcore::{self, Mat};
use crate::plant::PlantModel;
use crate::synth::{Certificate, Controller, SafetyProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Default sample count per region.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// Absolute tolerance on sampled condition violations.
pub const VIOLATION_TOL: f64 = 1e-6;

/// Tolerance on the spectral k-step check.
pub const EIG_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("level-set oracle refuses n = {0} (vertex enumeration blowup)")]
    TooManyDims(usize),
    #[error("degenerate box in coordinate {0}")]
    DegenerateBox(usize),
    #[error("plant does not expose a sealed truth model")]
    NoTruth,
    #[error(transparent)]
    Mat(#[from] matcore::MatError),
}

const PRIMES: [usize; 20] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
];

/// Halton radical-inverse in the given base.
fn halton(mut index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Deterministic sample of a box: Halton points plus all vertices.
fn box_samples(bounds: &[(f64, f64)], count: usize) -> Vec<Vec<f64>> {
    let n = bounds.len();
    let mut out = Vec::with_capacity(count + (1 << n.min(20)));
    for i in 1..=count {
        out.push(
            bounds
                .iter()
                .enumerate()
                .map(|(d, (lo, hi))| lo + halton(i, PRIMES[d % PRIMES.len()]) * (hi - lo))
                .collect(),
        );
    }
    if n <= 20 {
        for mask in 0..(1usize << n) {
            out.push(
                bounds
                    .iter()
                    .enumerate()
                    .map(|(d, (lo, hi))| if mask >> d & 1 == 1 { *hi } else { *lo })
                    .collect(),
            );
        }
    }
    out
}

// ---------------------------------------------------------------------------
// level-set oracle

#[derive(Debug, Clone)]
pub struct LevelSetExtrema {
    pub max: f64,
    pub argmax: Vec<f64>,
    pub min: f64,
    pub argmin: Vec<f64>,
}

fn qform(p: &Mat, x: &[f64]) -> f64 {
    let px = p.matvec(x);
    x.iter().zip(px).map(|(a, b)| a * b).sum()
}

/// Exact extrema of `x' P x` over a box. The max of a convex quadratic is
/// attained at a vertex; the min is found by enumerating all faces (each
/// coordinate at its lower bound, upper bound, or free) and solving the
/// stationarity system on the free block.
pub fn level_set_oracle(
    p: &Mat,
    bounds: &[(f64, f64)],
) -> Result<LevelSetExtrema, VerifyError> {
    let n = bounds.len();
    if n > 20 {
        return Err(VerifyError::TooManyDims(n));
    }
    for (i, (lo, hi)) in bounds.iter().enumerate() {
        if !(lo < hi) {
            return Err(VerifyError::DegenerateBox(i));
        }
    }
    assert_eq!(p.rows(), n);

    let mut max = f64::NEG_INFINITY;
    let mut argmax = vec![0.0; n];
    let mut min = f64::INFINITY;
    let mut argmin = vec![0.0; n];
    let mut consider_min = |v: f64, x: &[f64]| {
        if v < min {
            min = v;
            argmin = x.to_vec();
        }
    };

    // vertices: candidates for both extrema
    for mask in 0..(1usize << n) {
        let x: Vec<f64> = bounds
            .iter()
            .enumerate()
            .map(|(d, (lo, hi))| if mask >> d & 1 == 1 { *hi } else { *lo })
            .collect();
        let v = qform(p, &x);
        if v > max {
            max = v;
            argmax = x.clone();
        }
        consider_min(v, &x);
    }

    // faces with at least one free coordinate: 3^n assignments, skipping
    // all-fixed (already covered by vertices)
    let mut assign = vec![0u8; n]; // 0 = lo, 1 = hi, 2 = free
    loop {
        let free: Vec<usize> = (0..n).filter(|&d| assign[d] == 2).collect();
        if !free.is_empty() {
            let fixed: Vec<usize> = (0..n).filter(|&d| assign[d] != 2).collect();
            // stationarity on the face: P_FF x_F = -P_FE x_E
            let nf = free.len();
            let mut pff = Mat::zeros(nf, nf);
            for (a, &i) in free.iter().enumerate() {
                for (b, &j) in free.iter().enumerate() {
                    pff.set(a, b, p.get(i, j));
                }
            }
            let mut rhs = Mat::zeros(nf, 1);
            for (a, &i) in free.iter().enumerate() {
                let mut acc = 0.0;
                for &j in &fixed {
                    let xj = if assign[j] == 1 { bounds[j].1 } else { bounds[j].0 };
                    acc -= p.get(i, j) * xj;
                }
                rhs.set(a, 0, acc);
            }
            let (xf, _) = matcore::solve_lstsq(&pff, &rhs);
            let mut x = vec![0.0; n];
            for &j in &fixed {
                x[j] = if assign[j] == 1 { bounds[j].1 } else { bounds[j].0 };
            }
            let mut feasible = true;
            for (a, &i) in free.iter().enumerate() {
                let v = xf.get(a, 0);
                if v < bounds[i].0 - 1e-12 || v > bounds[i].1 + 1e-12 {
                    feasible = false;
                    break;
                }
                x[i] = v.clamp(bounds[i].0, bounds[i].1);
            }
            if feasible {
                consider_min(qform(p, &x), &x);
            }
        }
        // next ternary assignment
        let mut d = 0;
        loop {
            if d == n {
                return Ok(LevelSetExtrema {
                    max,
                    argmax,
                    min,
                    argmin,
                });
            }
            assign[d] += 1;
            if assign[d] <= 2 {
                break;
            }
            assign[d] = 0;
            d += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// condition sampling

#[derive(Debug, Clone)]
pub struct ConditionCheck {
    pub name: String,
    pub max_violation: f64,
    pub argmax: Vec<f64>,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct ConditionChecks {
    pub checks: Vec<ConditionCheck>,
    /// `lambda_max((Acl^k)' P Acl^k - P)`.
    pub eig_check: f64,
}

impl ConditionChecks {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.max_violation <= VIOLATION_TOL)
            && self.eig_check <= EIG_TOL
    }

    /// The worst offender: (condition name, violation).
    pub fn worst(&self) -> (String, f64) {
        let mut name = "eig".to_string();
        let mut worst = self.eig_check;
        for c in &self.checks {
            if c.max_violation > worst {
                worst = c.max_violation;
                name = c.name.clone();
            }
        }
        (name, worst)
    }
}

fn sample_condition(
    name: &str,
    bounds: &[(f64, f64)],
    count: usize,
    f: impl Fn(&[f64]) -> f64,
) -> ConditionCheck {
    let pts = box_samples(bounds, count);
    let mut max_violation = f64::NEG_INFINITY;
    let mut argmax = vec![0.0; bounds.len()];
    for x in &pts {
        let v = f(x);
        if v > max_violation {
            max_violation = v;
            argmax = x.clone();
        }
    }
    ConditionCheck {
        name: name.into(),
        max_violation,
        argmax,
        samples: pts.len(),
    }
}

/// Sample every certificate condition on its region (Halton + vertices) and
/// run the spectral k-step test. Violations are reported, never thrown.
pub fn check_conditions(
    cert: &Certificate,
    rep: &DataRepresentation,
    prob: &SafetyProblem,
    samples: usize,
) -> ConditionChecks {
    let p = &cert.p;
    let a_cl = &rep.a_cl;
    let mut checks = Vec::new();

    let bi = prob.x_i.box_bounds.as_ref().expect("X_I is a box");
    checks.push(sample_condition("initial", bi, samples, |x| {
        qform(p, x) - cert.gamma
    }));
    for (i, comp) in prob.x_u.iter().enumerate() {
        let bu = comp.box_bounds.as_ref().expect("X_U is a box");
        checks.push(sample_condition(
            &format!("unsafe{i}"),
            bu,
            samples,
            |x| cert.lambda_ - qform(p, x),
        ));
    }
    let bx = prob.x.box_bounds.as_ref().expect("X is a box");
    checks.push(sample_condition("step", bx, samples, |x| {
        let next = a_cl.matvec(x);
        qform(p, &next) - qform(p, x) - cert.epsilon
    }));

    let ak = matcore::mat_power(a_cl, cert.k);
    let diff = ak.transpose().matmul(p).matmul(&ak).sub(p).symmetrize();
    let eig_check = matcore::sym_eig(&diff)
        .map(|e| e.eigenvalues.last().copied().unwrap_or(0.0))
        .unwrap_or(f64::INFINITY);

    ConditionChecks { checks, eig_check }
}

// ---------------------------------------------------------------------------
// Monte Carlo rollouts

#[derive(Debug, Clone)]
pub struct MonteCarloStats {
    pub trajectories: usize,
    pub horizon: usize,
    /// Trajectories that entered any unsafe component (or diverged).
    pub violations: usize,
    pub diverged: usize,
    /// Minimum distance from any visited state to the unsafe region.
    pub min_distance: f64,
}

fn box_distance(x: &[f64], bounds: &[(f64, f64)]) -> f64 {
    x.iter()
        .zip(bounds)
        .map(|(&v, (lo, hi))| (lo - v).max(v - hi).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// One closed-loop rollout including the initial state.
pub fn rollout(
    plant: &PlantModel,
    ctrl: &Controller,
    x0: &[f64],
    horizon: usize,
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(horizon + 1);
    let mut x = x0.to_vec();
    out.push(x.clone());
    for _ in 0..horizon {
        let u = ctrl.eval(&x);
        x = plant.step(&x, &u);
        out.push(x.clone());
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    out
}

/// Roll `runs` closed-loop trajectories from uniform initial states in X_I
/// and count entries into the unsafe region. Reproducible: run `r` uses
/// stream `r` of the seeded generator.
pub fn monte_carlo(
    plant: &PlantModel,
    ctrl: &Controller,
    prob: &SafetyProblem,
    runs: usize,
    horizon: usize,
    seed: u64,
) -> MonteCarloStats {
    let bi = prob.x_i.box_bounds.as_ref().expect("X_I is a box");
    let unsafe_boxes: Vec<&Vec<(f64, f64)>> = prob
        .x_u
        .iter()
        .map(|c| c.box_bounds.as_ref().expect("X_U is a box"))
        .collect();
    let mut violations = 0usize;
    let mut diverged = 0usize;
    let mut min_distance = f64::INFINITY;
    for r in 0..runs {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let x0: Vec<f64> = bi
            .iter()
            .map(|(lo, hi)| if hi > lo { rng.gen_range(*lo..*hi) } else { *lo })
            .collect();
        let traj = rollout(plant, ctrl, &x0, horizon);
        let mut violated = false;
        for x in &traj {
            if x.iter().any(|v| !v.is_finite()) {
                diverged += 1;
                violated = true;
                break;
            }
            for b in &unsafe_boxes {
                let d = box_distance(x, b);
                if d < min_distance {
                    min_distance = d;
                }
                if d == 0.0 {
                    violated = true;
                }
            }
            if violated {
                break;
            }
        }
        if violated {
            violations += 1;
        }
    }
    MonteCarloStats {
        trajectories: runs,
        horizon,
        violations,
        diverged,
        min_distance,
    }
}

// ---------------------------------------------------------------------------
// truth consistency (test oracles)

/// Compare the data-based closed loop against the sealed truth model:
/// linear case returns `||(A + B K) - Acl||_F`; lifted case returns the max
/// over sampled states of `||A M(x) + B u(x) - Acl x||` (cancellation must
/// annihilate the nonlinear block).
pub fn truth_consistency(
    rep: &DataRepresentation,
    plant: &PlantModel,
    ctrl_dict: &crate::plant::DictionarySpec,
    bounds: &[(f64, f64)],
    samples: usize,
) -> Result<f64, VerifyError> {
    let truth = plant.sealed_truth().ok_or(VerifyError::NoTruth)?;
    let n = plant.state_dim();
    if truth.dict.total_terms() == n && ctrl_dict.total_terms() == n {
        let model = truth.a.add(&truth.b.matmul(&rep.k_gain));
        return Ok(model.sub(&rep.a_cl).frob_norm());
    }
    let mut worst: f64 = 0.0;
    for i in 1..=samples {
        let x: Vec<f64> = bounds
            .iter()
            .enumerate()
            .map(|(d, (lo, hi))| lo + halton(i, PRIMES[d % PRIMES.len()]) * (hi - lo))
            .collect();
        let u = rep.k_gain.matvec(&ctrl_dict.lift_state(&x));
        let mut next = truth.a.matvec(&truth.dict.lift_state(&x));
        for (nx, bu) in next.iter_mut().zip(truth.b.matvec(&u)) {
            *nx += bu;
        }
        let lin = rep.a_cl.matvec(&x);
        let err = next
            .iter()
            .zip(lin)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Max infinity-norm of the controller over sampled states in the box.
pub fn controller_sup(ctrl: &Controller, bounds: &[(f64, f64)], samples: usize) -> f64 {
    box_samples(bounds, samples)
        .iter()
        .map(|x| {
            ctrl.eval(x)
                .iter()
                .map(|v| v.abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// full report

#[derive(Debug, Clone)]
pub struct LevelSetSummary {
    /// Exact max of the barrier over X_I; certified gamma must dominate it.
    pub exact_initial_max: f64,
    /// Exact min of the barrier over each unsafe component; certified lambda
    /// must not exceed any of them (up to tolerance).
    pub exact_unsafe_min: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub condition_checks: ConditionChecks,
    pub level_set: Option<LevelSetSummary>,
    pub monte_carlo: Option<MonteCarloStats>,
    pub controller_sup: f64,
    pub pass: bool,
}

/// Assemble the full verification report: sampled conditions, spectral test,
/// exact level-set cross-check, controller magnitude, and (when a plant is
/// supplied) Monte Carlo rollouts.
pub fn verify_certificate(
    cert: &Certificate,
    ctrl: &Controller,
    rep: &DataRepresentation,
    prob: &SafetyProblem,
    plant: Option<&PlantModel>,
    runs: usize,
    horizon: usize,
    seed: u64,
    samples: usize,
) -> VerificationReport {
    let condition_checks = check_conditions(cert, rep, prob, samples);
    let mut pass = condition_checks.pass();

    let level_set = if prob.n <= 20 {
        let bi = prob.x_i.box_bounds.as_ref().expect("X_I is a box");
        let init = level_set_oracle(&cert.p, bi).ok();
        let mut unsafe_min = Vec::new();
        let mut ok = true;
        for comp in &prob.x_u {
            let bu = comp.box_bounds.as_ref().expect("X_U is a box");
            match level_set_oracle(&cert.p, bu) {
                Ok(e) => unsafe_min.push(e.min),
                Err(_) => ok = false,
            }
        }
        match (init, ok) {
            (Some(init), true) => {
                if cert.gamma + VIOLATION_TOL < init.max {
                    pass = false;
                }
                for &m in &unsafe_min {
                    if cert.lambda_ > m + VIOLATION_TOL {
                        pass = false;
                    }
                }
                Some(LevelSetSummary {
                    exact_initial_max: init.max,
                    exact_unsafe_min: unsafe_min,
                })
            }
            _ => None,
        }
    } else {
        None
    };

    let monte_carlo = plant.map(|pl| monte_carlo(pl, ctrl, prob, runs, horizon, seed));
    if let Some(mc) = &monte_carlo {
        if mc.violations > 0 {
            pass = false;
        }
    }

    let bx = prob.x.box_bounds.as_ref().expect("X is a box");
    let controller_sup = controller_sup(ctrl, bx, samples.min(2000));

    VerificationReport {
        condition_checks,
        level_set,
        monte_carlo,
        controller_sup,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::DictionarySpec;
    use crate::poly::box_to_set;
    use crate::synth::{SafetyProblem, SynthOptions};

    fn rlc_paper_p() -> Mat {
        Mat::from_rows(&[&[3.36, -0.2943], &[-0.2943, 0.1285]])
    }

    #[test]
    fn oracle_identity_box() {
        let e = level_set_oracle(&Mat::identity(2), &[(-1.0, 1.0), (-1.0, 1.0)]).unwrap();
        assert!((e.max - 2.0).abs() < 1e-12);
        assert!(e.min.abs() < 1e-12);
    }

    #[test]
    fn oracle_rlc_initial_max() {
        let e = level_set_oracle(&rlc_paper_p(), &[(0.0, 0.5), (0.0, 1.0)]).unwrap();
        assert!((e.max - 0.84).abs() < 1e-9, "max {}", e.max);
        assert!((e.argmax[0] - 0.5).abs() < 1e-12);
        assert!(e.argmax[1].abs() < 1e-12);
    }

    #[test]
    fn oracle_rlc_unsafe_min() {
        let e = level_set_oracle(&rlc_paper_p(), &[(1.0, 2.0), (-4.0, 4.0)]).unwrap();
        assert!((e.min - 2.68607).abs() < 1e-4, "min {}", e.min);
        assert!((e.argmin[0] - 1.0).abs() < 1e-9);
        assert!((e.argmin[1] - 2.2901).abs() < 1e-3, "argmin {:?}", e.argmin);
        // paper levels respect the bound directions
        assert!(0.84 <= 1.4105);
        assert!(2.1842 <= e.min);
    }

    #[test]
    fn oracle_refuses_huge_dimension() {
        let bounds = vec![(-1.0, 1.0); 21];
        assert!(matches!(
            level_set_oracle(&Mat::identity(21), &bounds),
            Err(VerifyError::TooManyDims(21))
        ));
    }

    #[test]
    fn oracle_interior_minimum() {
        // min of x'x over a box containing the origin is 0 at the origin
        let e = level_set_oracle(&Mat::identity(3), &[(-1.0, 2.0), (-0.5, 1.0), (-2.0, 0.5)])
            .unwrap();
        assert!(e.min.abs() < 1e-12);
        assert!(e.argmin.iter().all(|v| v.abs() < 1e-9));
    }

    fn scalar_problem() -> SafetyProblem {
        SafetyProblem::new(
            1,
            1,
            box_to_set(&[-1.0], &[1.0]).unwrap(),
            box_to_set(&[-0.1], &[0.1]).unwrap(),
            vec![box_to_set(&[0.8], &[1.0]).unwrap()],
            1,
            DictionarySpec::linear(1),
            SynthOptions::default(),
        )
        .unwrap()
    }

    fn scalar_rep(a: f64) -> DataRepresentation {
        DataRepresentation {
            q: Mat::identity(1),
            q1: Mat::identity(1),
            q2: Mat::zeros(1, 0),
            a_cl: Mat::from_rows(&[&[a]]),
            k_gain: Mat::zeros(1, 1),
            cancellation_residual: 0.0,
            h: None,
            e: None,
        }
    }

    #[test]
    fn check_conditions_trivially_safe_scalar() {
        let prob = scalar_problem();
        let cert = Certificate {
            p: Mat::identity(1),
            gamma: 0.01,
            lambda_: 0.64,
            epsilon: 0.0,
            k: 1,
            margin: 0.63,
        };
        let checks = check_conditions(&cert, &scalar_rep(0.5), &prob, 500);
        assert!(checks.pass(), "violations: {:?}", checks.worst());
    }

    #[test]
    fn check_conditions_loose_lambda_still_passes() {
        let prob = scalar_problem();
        let cert = Certificate {
            p: Mat::identity(1),
            gamma: 0.01,
            lambda_: 0.1, // far below the exact min 0.64; one-sided, still fine
            epsilon: 0.0,
            k: 1,
            margin: 0.09,
        };
        let checks = check_conditions(&cert, &scalar_rep(0.5), &prob, 500);
        assert!(checks.pass());
    }

    #[test]
    fn check_conditions_reports_gamma_violation() {
        let prob = scalar_problem();
        let cert = Certificate {
            p: Mat::identity(1),
            gamma: 0.005, // below the exact max 0.01 on X_I
            lambda_: 0.64,
            epsilon: 0.0,
            k: 1,
            margin: 0.6,
        };
        let checks = check_conditions(&cert, &scalar_rep(0.5), &prob, 500);
        assert!(!checks.pass());
        let initial = &checks.checks[0];
        assert_eq!(initial.name, "initial");
        assert!((initial.max_violation - 0.005).abs() < 1e-9);
        assert!((initial.argmax[0].abs() - 0.1).abs() < 1e-9);
    }

    #[test]
    fn monte_carlo_empty_unsafe_region() {
        let mut prob = scalar_problem();
        prob.x_u.clear();
        let plant = PlantModel::custom_linear(
            "half",
            Mat::from_rows(&[&[0.5]]),
            Mat::from_rows(&[&[1.0]]),
        )
        .unwrap();
        let ctrl = Controller {
            k_gain: Mat::zeros(1, 1),
            dictionary: DictionarySpec::linear(1),
        };
        let stats = monte_carlo(&plant, &ctrl, &prob, 50, 50, 7);
        assert_eq!(stats.violations, 0);
    }

    #[test]
    fn monte_carlo_reproducible() {
        let prob = scalar_problem();
        let plant = PlantModel::custom_linear(
            "half",
            Mat::from_rows(&[&[0.5]]),
            Mat::from_rows(&[&[1.0]]),
        )
        .unwrap();
        let ctrl = Controller {
            k_gain: Mat::zeros(1, 1),
            dictionary: DictionarySpec::linear(1),
        };
        let a = monte_carlo(&plant, &ctrl, &prob, 20, 30, 3);
        let b = monte_carlo(&plant, &ctrl, &prob, 20, 30, 3);
        assert_eq!(a.violations, b.violations);
        assert_eq!(a.min_distance, b.min_distance);
    }

    #[test]
    fn monte_carlo_open_loop_lorenz_violates() {
        let plant = crate::plant::make_plant("lorenz").unwrap();
        let prob = SafetyProblem::new(
            3,
            3,
            box_to_set(&[-5.0; 3], &[5.0; 3]).unwrap(),
            box_to_set(&[-2.0; 3], &[2.0; 3]).unwrap(),
            vec![
                box_to_set(&[2.5; 3], &[5.0; 3]).unwrap(),
                box_to_set(&[-5.0; 3], &[-2.5; 3]).unwrap(),
            ],
            2,
            DictionarySpec::linear(3),
            SynthOptions::default(),
        )
        .unwrap();
        let ctrl = Controller {
            k_gain: Mat::zeros(3, 3),
            dictionary: DictionarySpec::linear(3),
        };
        // unforced diverging dynamics must eventually cross the unsafe corners
        let stats = monte_carlo(&plant, &ctrl, &prob, 100, 4000, 0);
        assert!(stats.violations >= 1, "violations {}", stats.violations);
    }

    #[test]
    fn truth_consistency_linear_and_corrupted() {
        let plant = crate::plant::make_plant("rlc").unwrap();
        let exc = crate::plant::Excitation::symmetric(2, 0.5, 1);
        let data = crate::plant::collect(&plant, &[0.25, 0.5], &exc, 30).unwrap();
        let rep = crate::datarep::linear_rep(&data).unwrap();
        let dict = DictionarySpec::linear(2);
        let bounds = [(-2.0, 2.0), (-4.0, 4.0)];
        let res = truth_consistency(&rep, &plant, &dict, &bounds, 100).unwrap();
        assert!(res <= 1e-8, "residual {res}");

        let mut bad = rep.clone();
        bad.a_cl.set(0, 1, bad.a_cl.get(0, 1) + 0.1);
        let res_bad = truth_consistency(&bad, &plant, &dict, &bounds, 100).unwrap();
        assert!(res_bad > 1e-3);
    }

    #[test]
    fn rayleigh_cross_validation() {
        // sampled Rayleigh quotient of (Acl^k)' P Acl^k - P approaches the
        // spectral maximum reported by eig_check
        let prob = scalar_problem();
        let cert = Certificate {
            p: Mat::identity(1),
            gamma: 0.01,
            lambda_: 0.64,
            epsilon: 1.0,
            k: 2,
            margin: 0.1,
        };
        let rep = scalar_rep(0.9);
        let checks = check_conditions(&cert, &rep, &prob, 100);
        // 1-D: Rayleigh quotient is constant = a^{2k} - 1
        let expected = 0.9f64.powi(4) - 1.0;
        assert!((checks.eig_check - expected).abs() < 1e-10);
    }

    #[test]
    fn controller_sup_linear_gain() {
        let ctrl = Controller {
            k_gain: Mat::from_rows(&[&[2.0, 0.0], &[0.0, -3.0]]),
            dictionary: DictionarySpec::linear(2),
        };
        let sup = controller_sup(&ctrl, &[(-1.0, 1.0), (-1.0, 1.0)], 500);
        assert!((sup - 3.0).abs() < 1e-9);
    }
}
