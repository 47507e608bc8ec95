//! Certificate and controller synthesis: builds the barrier programs over a
//! data-based closed-loop representation and orchestrates the staged search
//! (stability LMI with nonlinearity cancellation, level-set feasibility at
//! k = 1, then the relaxed k-inductive program with the gain frozen).
//!
//! Every certified result is re-checked by the independent routines in
//! [`crate::verify`] before it is reported; synthesis never self-certifies.

use crate::datarep::{self, DataRepError, DataRepresentation};
use crate::matcore::{self, Mat};
use crate::plant::{check_excitation, lift, DictionarySpec, TrajectoryData};
use crate::poly::{AffinePoly, Mono, PolyError, SemiAlgebraicSet, SosConstraint};
use crate::sdp::{
    self, BlockId, LinExpr, ScalarId, SdpBuildError, SdpOptions, SdpProblem, SdpStatus, VarRef,
};
use crate::verify;
use thiserror::Error;

/// Smallest acceptable separation margin `lambda - gamma - (k-1) epsilon`.
pub const MARGIN_FLOOR: f64 = 1e-6;

/// Positive-definiteness shift: the synthesized `P` satisfies `P >= DELTA I`.
pub const P_SHIFT: f64 = 1e-6;
/// Relative strict-contraction margin required of the k-step decrease LMI:
/// the default relaxation accepts a certificate only if P - (Acl^k)' P Acl^k
/// is at least KSTEP_MARGIN * n / R^2(X) positive definite (R the largest
/// state norm over X, so the threshold is scale-invariant under the
/// trace(P) = n normalization). Near-marginal closed loops cannot contract
/// this much in one step but can over several, which is exactly the regime
/// the k-induction relaxation is for.
pub const KSTEP_MARGIN: f64 = 0.2;
/// Absolute floor on the k-step LMI shift; must exceed the solver's PSD
/// tolerance so boundary solutions still pass the independent recheck.
pub const KSTEP_SHIFT_FLOOR: f64 = 3e-7;
/// Relative tightening of the level/step inequalities (scaled by the level
/// cap). Solver equality slop is proportional to the constraint coefficient
/// scale; without the tightening boundary solutions can violate the exact
/// conditions by a few parts in 1e6 and fail the independent recheck.
pub const LEVEL_TIGHTEN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid safety problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Build(#[from] SdpBuildError),
    #[error(transparent)]
    DataRep(#[from] DataRepError),
    #[error(transparent)]
    Plant(#[from] crate::plant::PlantError),
}

/// Tuning knobs for the synthesis programs.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    /// S-procedure multiplier degree: 0 (nonnegative constants) or 2.
    pub multiplier_degree: usize,
    /// Upper bound on the one-step slack epsilon; `None` = 10% of the
    /// worst-case barrier level over the initial set under the trace
    /// normalization.
    pub eps_max: Option<f64>,
    /// Required certified margin.
    pub margin_floor: f64,
    pub sdp: SdpOptions,
    /// Random restarts for the right-inverse stabilization fallback on the
    /// linear path (0 disables it).
    pub stabilize_attempts: usize,
    /// Closed-loop spectral radius at which the stabilization search stops.
    /// Kept just below one so the fallback perturbs the gain as little as
    /// possible.
    pub stabilize_target: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        // certificate programs on raw trajectory data plateau long before
        // they converge, so the budgets start well above the solver defaults
        let sdp = SdpOptions {
            max_iters: 60_000,
            stagnation_window: 10_000,
            ..SdpOptions::default()
        };
        SynthOptions {
            multiplier_degree: 0,
            eps_max: None,
            margin_floor: MARGIN_FLOOR,
            sdp,
            // off by default: re-searching the right inverse changes the gain
            // family and can mask genuine infeasibility at the requested k
            stabilize_attempts: 0,
            stabilize_target: 0.97,
        }
    }
}

/// The safety synthesis instance: state space X, initial set X_I, unsafe
/// region (a union of components), induction depth k, and the lifting
/// dictionary.
#[derive(Debug, Clone)]
pub struct SafetyProblem {
    pub n: usize,
    pub m: usize,
    pub x: SemiAlgebraicSet,
    pub x_i: SemiAlgebraicSet,
    pub x_u: Vec<SemiAlgebraicSet>,
    pub k: usize,
    pub dictionary: DictionarySpec,
    pub options: SynthOptions,
}

impl SafetyProblem {
    pub fn new(
        n: usize,
        m: usize,
        x: SemiAlgebraicSet,
        x_i: SemiAlgebraicSet,
        x_u: Vec<SemiAlgebraicSet>,
        k: usize,
        dictionary: DictionarySpec,
        options: SynthOptions,
    ) -> Result<Self, SynthError> {
        if k == 0 {
            return Err(SynthError::InvalidProblem("k must be >= 1".into()));
        }
        if dictionary.state_dim() != n {
            return Err(SynthError::InvalidProblem(
                "dictionary state dimension must match n".into(),
            ));
        }
        let outer = x.box_bounds.as_ref().ok_or_else(|| {
            SynthError::InvalidProblem("state space X must be a box".into())
        })?;
        let inside = |inner: &SemiAlgebraicSet, label: &str| -> Result<(), SynthError> {
            let b = inner.box_bounds.as_ref().ok_or_else(|| {
                SynthError::InvalidProblem(format!("{label} must be a box"))
            })?;
            if b.len() != n || outer.len() != n {
                return Err(SynthError::InvalidProblem(format!(
                    "{label} dimension mismatch"
                )));
            }
            for (i, ((lo, hi), (olo, ohi))) in b.iter().zip(outer).enumerate() {
                if lo < olo || hi > ohi {
                    return Err(SynthError::InvalidProblem(format!(
                        "{label} exceeds X in coordinate {i}"
                    )));
                }
            }
            Ok(())
        };
        inside(&x_i, "X_I")?;
        for (idx, comp) in x_u.iter().enumerate() {
            inside(comp, &format!("X_U[{idx}]"))?;
        }
        Ok(SafetyProblem {
            n,
            m,
            x,
            x_i,
            x_u,
            k,
            dictionary,
            options,
        })
    }

    /// Default epsilon cap: 10% of `n * max ||x||^2` over the initial box,
    /// the worst barrier level X_I can reach under `trace(P) = n`.
    pub fn eps_max(&self) -> f64 {
        if let Some(e) = self.options.eps_max {
            return e;
        }
        let b = self.x_i.box_bounds.as_ref().expect("X_I is a box");
        let r2: f64 = b
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum();
        0.1 * (self.n as f64) * r2.max(1e-6)
    }

    /// Upper bound on any barrier level over X under `trace(P) = n`.
    fn level_cap(&self) -> f64 {
        let b = self.x.box_bounds.as_ref().expect("X is a box");
        let r2: f64 = b
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum();
        (self.n as f64) * r2.max(1.0)
    }

    /// Strict-contraction shift applied to the k-step decrease LMI.
    fn kstep_shift(&self) -> f64 {
        let b = self.x.box_bounds.as_ref().expect("X is a box");
        let r2: f64 = b
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum();
        (KSTEP_MARGIN * self.n as f64 / r2.max(1.0)).max(KSTEP_SHIFT_FLOOR)
    }
}

/// A k-inductive barrier certificate `B(x) = x' P x`.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub p: Mat,
    pub gamma: f64,
    pub lambda_: f64,
    pub epsilon: f64,
    pub k: usize,
    pub margin: f64,
}

impl Certificate {
    /// Structural invariants: `P >= 1e-6 I`, the side condition
    /// `lambda > gamma + (k-1) epsilon`, and sign constraints.
    pub fn validate(&self) -> Result<(), String> {
        let eig = matcore::sym_eig(&self.p).map_err(|e| e.to_string())?;
        let min_eig = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if min_eig < P_SHIFT * 0.999 {
            return Err(format!("P has eigenvalue {min_eig} below {P_SHIFT}"));
        }
        if self.epsilon < 0.0 || self.gamma < 0.0 {
            return Err("gamma and epsilon must be nonnegative".into());
        }
        let side = self.lambda_ - self.gamma - (self.k as f64 - 1.0) * self.epsilon;
        if side <= 0.0 {
            return Err(format!("side condition violated: slack {side}"));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let px = self.p.matvec(x);
        x.iter().zip(px).map(|(a, b)| a * b).sum()
    }
}

/// State-feedback controller `u(x) = K M(x)` over the dictionary.
#[derive(Debug, Clone)]
pub struct Controller {
    pub k_gain: Mat,
    pub dictionary: DictionarySpec,
}

impl Controller {
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.k_gain.matvec(&self.dictionary.lift_state(x))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthStatus {
    Certified,
    NotFoundAtK,
    DataError,
}

#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    /// Which stage produced the result ("linear", "stability-lmi", "k-cbc").
    pub stage: String,
    pub sdp_iterations: usize,
    pub lmi_margin: Option<f64>,
    pub cancellation_residual: Option<f64>,
    pub messages: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SynthesisReport {
    pub status: SynthStatus,
    pub certificate: Option<Certificate>,
    pub controller: Option<Controller>,
    pub rep: Option<DataRepresentation>,
    pub diagnostics: Diagnostics,
}

impl SynthesisReport {
    fn failure(status: SynthStatus, stage: &str, message: String) -> Self {
        SynthesisReport {
            status,
            certificate: None,
            controller: None,
            rep: None,
            diagnostics: Diagnostics {
                stage: stage.into(),
                messages: vec![message],
                ..Diagnostics::default()
            },
        }
    }
}

/// Handles into the assembled certificate program.
pub struct KcbcProgram {
    pub problem: SdpProblem,
    pub p_block: BlockId,
    pub gamma: ScalarId,
    pub lambda: ScalarId,
    pub epsilon: ScalarId,
    pub mu: ScalarId,
}

/// Build the joint certificate program for a fixed closed loop `Acl`:
/// initial/unsafe/one-step conditions as S-procedure SOS constraints, the
/// k-step matrix condition as an LMI, `P >= 1e-6 I` via a shifted PSD block,
/// the scale normalization `trace(P) = n`, and the separation margin as the
/// maximized objective.
pub fn build_kcbc_program(
    rep: &DataRepresentation,
    prob: &SafetyProblem,
    _fixed_gain: bool,
) -> Result<KcbcProgram, SynthError> {
    let n = prob.n;
    let a_cl = &rep.a_cl;
    if a_cl.rows() != n || a_cl.cols() != n {
        return Err(SynthError::InvalidProblem(
            "representation closed loop must be n x n".into(),
        ));
    }
    let cap = prob.level_cap();
    let mut problem = SdpProblem::new();
    let p_block = problem.add_block("P", n)?;
    let gamma = problem.add_scalar("gamma", 0.0, cap);
    let lambda = problem.add_scalar("lambda", 0.0, cap);
    let epsilon = problem.add_scalar("epsilon", 0.0, prob.eps_max());
    let mu = problem.add_scalar("mu", 0.0, cap);

    // P = Pblock + delta I
    let p_expr: Vec<Vec<LinExpr>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut e = LinExpr::var(VarRef::Entry(p_block, i.min(j), i.max(j)));
                    if i == j {
                        e = e.add(&LinExpr::constant(P_SHIFT));
                    }
                    e
                })
                .collect()
        })
        .collect();

    // trace(P) = n
    let mut tr = LinExpr::constant(P_SHIFT * n as f64 - n as f64);
    for i in 0..n {
        tr = tr.add(&LinExpr::var(VarRef::Entry(p_block, i, i)));
    }
    problem.add_equality(tr)?;

    let barrier = AffinePoly::quadratic_form_sym(&p_expr);
    let tighten = LEVEL_TIGHTEN * cap.max(1.0);

    // initial condition: (gamma - s) - B(x) >= 0 on X_I
    let mut init = AffinePoly::zero(n);
    init.add_coeff(
        Mono(vec![0; n]),
        LinExpr::var(VarRef::Scalar(gamma)).add(&LinExpr::constant(-tighten)),
    );
    let init = init.sub(&barrier);
    crate::poly::compile_sos(
        &mut problem,
        &SosConstraint {
            name: "init".into(),
            target: init,
            set: Some(&prob.x_i),
            multiplier_degree: prob.options.multiplier_degree,
        },
    )?;

    // unsafe condition per component: B(x) - (lambda + s) >= 0 on X_U[i]
    for (i, comp) in prob.x_u.iter().enumerate() {
        let mut uns = AffinePoly::zero(n);
        uns.add_coeff(
            Mono(vec![0; n]),
            LinExpr::var(VarRef::Scalar(lambda))
                .scale(-1.0)
                .add(&LinExpr::constant(-tighten)),
        );
        let uns = barrier.add(&uns);
        crate::poly::compile_sos(
            &mut problem,
            &SosConstraint {
                name: format!("unsafe{i}"),
                target: uns,
                set: Some(comp),
                multiplier_degree: prob.options.multiplier_degree,
            },
        )?;
    }

    // one-step slack: B(x) + (eps - s) - B(Acl x) >= 0 on X
    let stepped = AffinePoly::quadratic_form_sym(&crate::poly::congruence(a_cl, &p_expr));
    let mut dec = barrier.sub(&stepped);
    dec.add_coeff(
        Mono(vec![0; n]),
        LinExpr::var(VarRef::Scalar(epsilon)).add(&LinExpr::constant(-tighten)),
    );
    crate::poly::compile_sos(
        &mut problem,
        &SosConstraint {
            name: "step".into(),
            target: dec,
            set: Some(&prob.x),
            multiplier_degree: prob.options.multiplier_degree,
        },
    )?;

    // k-step matrix condition with the strict-contraction margin:
    // P - (Acl^k)' P Acl^k >= kstep_shift * I. The shift also absorbs
    // solver slop so accepted solutions clear the independent recheck.
    let ak = datarep::k_power(a_cl, prob.k)?;
    let shifted = crate::poly::congruence(&ak, &p_expr);
    let kshift = prob.kstep_shift();
    let mut lmi = vec![vec![LinExpr::constant(0.0); n]; n];
    for i in 0..n {
        for j in 0..n {
            lmi[i][j] = p_expr[i][j].sub(&shifted[i][j]);
            if i == j {
                lmi[i][j] = lmi[i][j].sub(&LinExpr::constant(kshift));
            }
        }
    }
    problem.assemble_lmi("kstep", &lmi)?;

    // margin: lambda - gamma - (k-1) eps - mu = 0, maximize mu
    let mut margin = LinExpr::var(VarRef::Scalar(lambda))
        .sub(&LinExpr::var(VarRef::Scalar(gamma)))
        .sub(&LinExpr::var(VarRef::Scalar(mu)));
    if prob.k > 1 {
        margin = margin.sub(&LinExpr::var(VarRef::Scalar(epsilon)).scale(prob.k as f64 - 1.0));
    }
    problem.add_equality(margin)?;
    problem.set_objective(LinExpr::var(VarRef::Scalar(mu)))?;

    Ok(KcbcProgram {
        problem,
        p_block,
        gamma,
        lambda,
        epsilon,
        mu,
    })
}

/// Solve an assembled certificate program and extract the certificate when
/// the margin clears the floor.
fn solve_kcbc(
    prog: &KcbcProgram,
    prob: &SafetyProblem,
) -> (Option<Certificate>, SdpStatus, usize) {
    let sol = sdp::solve(&prog.problem, prob.options.sdp);
    let ok = matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible);
    if !ok {
        return (None, sol.status, sol.iterations);
    }
    let margin = sol.scalar_values[prog.mu.0];
    if margin < prob.options.margin_floor {
        return (None, sol.status, sol.iterations);
    }
    let n = prob.n;
    let mut p = sol.block_values[prog.p_block.0].clone().symmetrize();
    for i in 0..n {
        p.set(i, i, p.get(i, i) + P_SHIFT);
    }
    let cert = Certificate {
        p,
        gamma: sol.scalar_values[prog.gamma.0],
        lambda_: sol.scalar_values[prog.lambda.0],
        epsilon: sol.scalar_values[prog.epsilon.0],
        k: prob.k,
        margin,
    };
    (Some(cert), sol.status, sol.iterations)
}

/// Stage-2 program: `P` fixed, find levels `gamma, lambda` separating X_I
/// from X_U with margin `mu = lambda - gamma` maximized. On success the
/// stability LMI already guarantees one-step decrease, so the result is a
/// certificate at k = 1 with epsilon = 0.
fn solve_levels_fixed_p(
    p: &Mat,
    prob: &SafetyProblem,
) -> Result<(Option<Certificate>, usize), SynthError> {
    let n = prob.n;
    let cap = {
        // bound levels by the largest value of x' P x over X
        let b = prob.x.box_bounds.as_ref().expect("X is a box");
        let r2: f64 = b
            .iter()
            .map(|(lo, hi)| lo.abs().max(hi.abs()).powi(2))
            .sum();
        let eig = matcore::sym_eig(p).map_err(DataRepError::from)?;
        eig.eigenvalues.last().copied().unwrap_or(1.0) * r2.max(1.0)
    };
    let mut problem = SdpProblem::new();
    let gamma = problem.add_scalar("gamma", 0.0, cap);
    let lambda = problem.add_scalar("lambda", 0.0, cap);
    let mu = problem.add_scalar("mu", 0.0, cap);

    let barrier = AffinePoly::from_poly(&crate::poly::quadratic_form(p)?);
    let tighten = LEVEL_TIGHTEN * cap.max(1.0);

    let mut init = AffinePoly::zero(n);
    init.add_coeff(
        Mono(vec![0; n]),
        LinExpr::var(VarRef::Scalar(gamma)).add(&LinExpr::constant(-tighten)),
    );
    let init = init.sub(&barrier);
    crate::poly::compile_sos(
        &mut problem,
        &SosConstraint {
            name: "init".into(),
            target: init,
            set: Some(&prob.x_i),
            multiplier_degree: prob.options.multiplier_degree,
        },
    )?;
    for (i, comp) in prob.x_u.iter().enumerate() {
        let mut uns = AffinePoly::zero(n);
        uns.add_coeff(
            Mono(vec![0; n]),
            LinExpr::var(VarRef::Scalar(lambda))
                .scale(-1.0)
                .add(&LinExpr::constant(-tighten)),
        );
        let uns = barrier.add(&uns);
        crate::poly::compile_sos(
            &mut problem,
            &SosConstraint {
                name: format!("unsafe{i}"),
                target: uns,
                set: Some(comp),
                multiplier_degree: prob.options.multiplier_degree,
            },
        )?;
    }
    let margin = LinExpr::var(VarRef::Scalar(lambda))
        .sub(&LinExpr::var(VarRef::Scalar(gamma)))
        .sub(&LinExpr::var(VarRef::Scalar(mu)));
    problem.add_equality(margin)?;
    problem.set_objective(LinExpr::var(VarRef::Scalar(mu)))?;

    let sol = sdp::solve(&problem, prob.options.sdp);
    let ok = matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible);
    let m = sol.scalar_values[mu.0];
    if !ok || m < prob.options.margin_floor {
        return Ok((None, sol.iterations));
    }
    Ok((
        Some(Certificate {
            p: p.clone(),
            gamma: sol.scalar_values[gamma.0],
            lambda_: sol.scalar_values[lambda.0],
            epsilon: 0.0,
            k: 1,
            margin: m,
        }),
        sol.iterations,
    ))
}

/// Independent recheck; downgrades a candidate instead of certifying when
/// anything fails.
fn certify(
    cert: Certificate,
    rep: DataRepresentation,
    prob: &SafetyProblem,
    stage: &str,
    iterations: usize,
    extra: Diagnostics,
) -> SynthesisReport {
    if let Err(msg) = cert.validate() {
        return SynthesisReport::failure(
            SynthStatus::NotFoundAtK,
            stage,
            format!("candidate rejected: {msg}"),
        );
    }
    let checks = verify::check_conditions(&cert, &rep, prob, verify::DEFAULT_SAMPLES);
    if !checks.pass() {
        let worst = checks.worst();
        return SynthesisReport::failure(
            SynthStatus::NotFoundAtK,
            stage,
            format!(
                "candidate failed independent recheck: {} violation {:.3e}",
                worst.0, worst.1
            ),
        );
    }
    let controller = Controller {
        k_gain: rep.k_gain.clone(),
        dictionary: prob.dictionary.clone(),
    };
    SynthesisReport {
        status: SynthStatus::Certified,
        certificate: Some(cert),
        controller: Some(controller),
        rep: Some(rep),
        diagnostics: Diagnostics {
            stage: stage.into(),
            sdp_iterations: iterations,
            ..extra
        },
    }
}

/// Linear-path synthesis: minimum-norm right inverse, then the joint
/// certificate program at the requested k, with an optional stabilizing
/// re-search over the right-inverse family if the first attempt fails.
pub fn synthesize_linear(
    data: &TrajectoryData,
    prob: &SafetyProblem,
) -> Result<SynthesisReport, SynthError> {
    if prob.dictionary.total_terms() != prob.n {
        return Err(SynthError::InvalidProblem(
            "linear path requires the trivial dictionary".into(),
        ));
    }
    let check = check_excitation(&data.x0, prob.n);
    if !check.ok {
        return Ok(SynthesisReport::failure(
            SynthStatus::DataError,
            "linear",
            format!(
                "excitation check failed: rank {} of {} required",
                check.rank, prob.n
            ),
        ));
    }
    let rep = datarep::linear_rep(data)?;
    let prog = build_kcbc_program(&rep, prob, false)?;
    let (cert, status, iters) = solve_kcbc(&prog, prob);
    if let Some(cert) = cert {
        return Ok(certify(cert, rep, prob, "linear", iters, Diagnostics::default()));
    }

    // the gain re-search is a fallback for the relaxed (k > 1) program only;
    // the conventional k = 1 attempt always uses the canonical right inverse
    if prob.k > 1 && prob.options.stabilize_attempts > 0 {
        let rep2 = datarep::linear_rep_stabilized(
            data,
            prob.options.stabilize_attempts,
            0,
            prob.options.stabilize_target,
        )?;
        if rep2.a_cl.sub(&rep.a_cl).max_abs() > 0.0 {
            let prog2 = build_kcbc_program(&rep2, prob, false)?;
            let (cert2, _, iters2) = solve_kcbc(&prog2, prob);
            if let Some(cert2) = cert2 {
                let diag = Diagnostics {
                    messages: vec!["used stabilized right inverse".into()],
                    ..Diagnostics::default()
                };
                return Ok(certify(cert2, rep2, prob, "linear", iters2, diag));
            }
        }
    }

    Ok(SynthesisReport::failure(
        SynthStatus::NotFoundAtK,
        "linear",
        format!("feasible solution not found with given k (solver status {status:?})"),
    ))
}

/// Nonlinear-path synthesis per the staged strategy: cancellation + stability
/// LMI; level search with the resulting `P` (k = 1); then the joint program
/// at the requested k with the gain frozen.
pub fn synthesize_nonlinear(
    data: &TrajectoryData,
    prob: &SafetyProblem,
) -> Result<SynthesisReport, SynthError> {
    let lifted = lift(data, &prob.dictionary)?;
    let nn = prob.dictionary.total_terms();
    let check = check_excitation(&lifted.m0, nn);
    if !check.ok {
        return Ok(SynthesisReport::failure(
            SynthStatus::DataError,
            "stability-lmi",
            format!(
                "excitation check failed: rank {} of {} required",
                check.rank, nn
            ),
        ));
    }
    let q2 = match datarep::cancel_nonlinearity(&lifted.m0, &data.x1) {
        Ok(q2) => q2,
        Err(e @ DataRepError::CancellationResidual { .. }) => {
            return Ok(SynthesisReport::failure(
                SynthStatus::DataError,
                "stability-lmi",
                e.to_string(),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    let cancellation_residual = data.x1.matmul(&q2).frob_norm();

    let lmi = match datarep::solve_stability_lmi(&lifted.m0, &data.x1, &data.u0, prob.options.sdp)
    {
        Ok(l) => l,
        Err(DataRepError::LmiNotSolved { status, margin }) => {
            return Ok(SynthesisReport::failure(
                SynthStatus::NotFoundAtK,
                "stability-lmi",
                format!(
                    "feasible solution not found with given k (stability LMI status {status:?}, margin {margin:.1e})"
                ),
            ));
        }
        Err(e) => return Err(e.into()),
    };
    let lmi_margin = lmi.margin;
    let lmi_iters = lmi.iterations;
    let p_fixed = lmi.p.clone();
    let rep = lmi.into_representation(q2, &data.u0, &data.x1);
    let diag = Diagnostics {
        lmi_margin: Some(lmi_margin),
        cancellation_residual: Some(cancellation_residual),
        ..Diagnostics::default()
    };

    // stage 2: keep P, search levels; valid as a k = 1 certificate
    let (stage2, iters2) = solve_levels_fixed_p(&p_fixed, prob)?;
    if let Some(cert) = stage2 {
        return Ok(certify(
            cert,
            rep,
            prob,
            "stability-lmi",
            lmi_iters + iters2,
            diag,
        ));
    }

    // at k = 1 the level search with the identified P *is* the conventional
    // CBC attempt; the joint relaxed program is only a fallback for k > 1
    if prob.k == 1 {
        let mut d = diag;
        d.stage = "stability-lmi".into();
        d.messages
            .push("conventional certificate not found with the identified P".into());
        return Ok(SynthesisReport {
            status: SynthStatus::NotFoundAtK,
            certificate: None,
            controller: None,
            rep: Some(rep),
            diagnostics: d,
        });
    }

    // stage 3: gain frozen, joint program at the requested k
    let prog = build_kcbc_program(&rep, prob, true)?;
    let (cert, status, iters3) = solve_kcbc(&prog, prob);
    if let Some(cert) = cert {
        return Ok(certify(
            cert,
            rep,
            prob,
            "k-cbc",
            lmi_iters + iters2 + iters3,
            diag,
        ));
    }
    Ok(SynthesisReport::failure(
        SynthStatus::NotFoundAtK,
        "k-cbc",
        format!("feasible solution not found with given k (solver status {status:?})"),
    ))
}

/// Try `k = 1..=k_max` in order and return the first certified report,
/// or the last failure.
pub fn synthesize_sweep(
    data: &TrajectoryData,
    prob: &SafetyProblem,
    k_max: usize,
    nonlinear: bool,
) -> Result<SynthesisReport, SynthError> {
    let mut last = None;
    for k in 1..=k_max.max(1) {
        let mut p = prob.clone();
        p.k = k;
        let report = if nonlinear {
            synthesize_nonlinear(data, &p)?
        } else {
            synthesize_linear(data, &p)?
        };
        if report.status == SynthStatus::Certified {
            return Ok(report);
        }
        last = Some(report);
    }
    Ok(last.expect("k_max >= 1"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::{collect_excited, DictionarySpec, Excitation, PlantModel};
    use crate::poly::box_to_set;

    /// Stable scalar plant x+ = 0.5 x + u.
    fn scalar_data() -> crate::plant::TrajectoryData {
        let a = Mat::from_rows(&[&[0.5]]);
        let b = Mat::from_rows(&[&[1.0]]);
        let pl = PlantModel::custom_linear("scalar", a, b).unwrap();
        let exc = Excitation::symmetric(1, 0.5, 42);
        let dict = DictionarySpec::linear(1);
        collect_excited(&pl, &[0.1], &exc, 8, &dict, 5).unwrap().0
    }

    fn scalar_problem(
        x_i: (f64, f64),
        x_u: (f64, f64),
        k: usize,
    ) -> SafetyProblem {
        SafetyProblem::new(
            1,
            1,
            box_to_set(&[-1.0], &[1.0]).unwrap(),
            box_to_set(&[x_i.0], &[x_i.1]).unwrap(),
            vec![box_to_set(&[x_u.0], &[x_u.1]).unwrap()],
            k,
            DictionarySpec::linear(1),
            SynthOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn rejects_k_zero_and_dictionary_mismatch() {
        let err = SafetyProblem::new(
            1,
            1,
            box_to_set(&[-1.0], &[1.0]).unwrap(),
            box_to_set(&[0.0], &[0.1]).unwrap(),
            vec![box_to_set(&[0.8], &[1.0]).unwrap()],
            0,
            DictionarySpec::linear(1),
            SynthOptions::default(),
        );
        assert!(matches!(err, Err(SynthError::InvalidProblem(_))));

        let err = SafetyProblem::new(
            1,
            1,
            box_to_set(&[-1.0], &[1.0]).unwrap(),
            box_to_set(&[0.0], &[0.1]).unwrap(),
            vec![box_to_set(&[0.8], &[1.0]).unwrap()],
            1,
            DictionarySpec::linear(2),
            SynthOptions::default(),
        );
        assert!(matches!(err, Err(SynthError::InvalidProblem(_))));
    }

    #[test]
    fn certifies_separated_sets_on_a_stable_scalar_plant() {
        let data = scalar_data();
        let prob = scalar_problem((0.0, 0.2), (0.8, 1.0), 1);
        let rep = synthesize_linear(&data, &prob).unwrap();
        assert_eq!(rep.status, SynthStatus::Certified, "{:?}", rep.diagnostics);
        let cert = rep.certificate.unwrap();
        assert!(cert.lambda_ > cert.gamma);
        cert.validate().unwrap();
    }

    #[test]
    fn overlapping_initial_and_unsafe_sets_cannot_certify() {
        // X_I and X_U share [0.3, 0.5]: B <= gamma and B >= lambda > gamma
        // cannot hold simultaneously there.
        let data = scalar_data();
        let prob = scalar_problem((0.0, 0.5), (0.3, 1.0), 1);
        let rep = synthesize_linear(&data, &prob).unwrap();
        assert_eq!(rep.status, SynthStatus::NotFoundAtK, "{:?}", rep.diagnostics);
        assert!(rep.certificate.is_none());
    }

    #[test]
    fn sweep_returns_the_first_feasible_k() {
        let data = scalar_data();
        let prob = scalar_problem((0.0, 0.2), (0.8, 1.0), 3);
        let rep = synthesize_sweep(&data, &prob, 3, false).unwrap();
        assert_eq!(rep.status, SynthStatus::Certified);
        assert_eq!(rep.certificate.unwrap().k, 1);
    }

    #[test]
    fn kstep_shift_is_scale_invariant() {
        // doubling the box halves the required contraction margin density
        let small = scalar_problem((0.0, 0.2), (0.8, 1.0), 1);
        let big = SafetyProblem::new(
            1,
            1,
            box_to_set(&[-2.0], &[2.0]).unwrap(),
            box_to_set(&[0.0], &[0.4]).unwrap(),
            vec![box_to_set(&[1.6], &[2.0]).unwrap()],
            1,
            DictionarySpec::linear(1),
            SynthOptions::default(),
        )
        .unwrap();
        let ratio = small.kstep_shift() / big.kstep_shift();
        assert!((ratio - 4.0).abs() < 1e-12, "ratio {ratio}");
        assert!(big.kstep_shift() >= KSTEP_SHIFT_FLOOR);
    }

    #[test]
    fn rank_deficient_data_is_a_data_error() {
        // constant zero input and equilibrium start: X0 has rank 0
        let a = Mat::from_rows(&[&[0.5]]);
        let b = Mat::from_rows(&[&[1.0]]);
        let pl = PlantModel::custom_linear("flat", a, b).unwrap();
        let exc = Excitation {
            lo: vec![0.0],
            hi: vec![0.0],
            seed: 0,
        };
        let data = crate::plant::collect(&pl, &[0.0], &exc, 8).unwrap();
        let prob = scalar_problem((0.0, 0.2), (0.8, 1.0), 1);
        let rep = synthesize_linear(&data, &prob).unwrap();
        assert_eq!(rep.status, SynthStatus::DataError);
    }

    #[test]
    fn certificate_validate_rejects_bad_values() {
        let good = Certificate {
            p: Mat::identity(2),
            gamma: 1.0,
            lambda_: 3.0,
            epsilon: 0.5,
            k: 2,
            margin: 1e-3,
        };
        good.validate().unwrap();

        let mut side = good.clone();
        side.lambda_ = 1.2; // 1.2 <= 1.0 + 0.5
        assert!(side.validate().is_err());

        let mut indef = good.clone();
        indef.p = Mat::from_rows(&[&[1.0, 0.0], &[0.0, -0.1]]);
        assert!(indef.validate().is_err());

        let mut neg = good;
        neg.epsilon = -0.1;
        assert!(neg.validate().is_err());
    }
}
