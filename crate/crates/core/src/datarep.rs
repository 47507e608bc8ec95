//! Data-driven system representations built from a single excited trajectory:
//! right-inverse closed-loop parametrizations, nonlinearity cancellation, and
//! the data-based stability LMI used to seed controller synthesis.

use crate::matcore::{self, Mat};
use crate::plant::TrajectoryData;
use crate::sdp::{self, LinExpr, ScalarId, SdpOptions, SdpProblem, SdpStatus, VarRef};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataRepError {
    #[error("data matrix rank {rank} below required {required}; trajectory is not sufficiently exciting")]
    RankDeficient { rank: usize, required: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("nonlinearity cancellation residual {residual:.3e} exceeds tolerance {tol:.3e}; the input channels cannot absorb the dictionary nonlinearities")]
    CancellationResidual { residual: f64, tol: f64 },
    #[error("matrix power requires k >= 1")]
    ZeroPower,
    #[error("stability LMI did not yield a usable solution (status {status:?}, margin {margin:.3e})")]
    LmiNotSolved { status: SdpStatus, margin: f64 },
    #[error("sdp build error: {0}")]
    Build(#[from] sdp::SdpBuildError),
    #[error(transparent)]
    Mat(#[from] matcore::MatError),
}

/// Residual tolerance for exact nonlinearity cancellation.
pub const CANCELLATION_TOL: f64 = 1e-8;

/// Acceptance floor on the LMI positivity margin.
pub const LMI_MARGIN_FLOOR: f64 = 1e-6;

/// A data-based closed-loop representation shared by the linear and lifted
/// paths: `Q = [Q1 Q2]` (T x N; `Q2` empty in the linear case), the realized
/// closed loop `Acl = X1 Q1`, and the controller gain `K = U0 Q` acting on
/// the full dictionary vector.
#[derive(Debug, Clone)]
pub struct DataRepresentation {
    pub q: Mat,
    pub q1: Mat,
    pub q2: Mat,
    pub a_cl: Mat,
    pub k_gain: Mat,
    pub cancellation_residual: f64,
    /// Present when produced by the stability-LMI path.
    pub h: Option<Mat>,
    /// `P^{-1}` from the stability-LMI path.
    pub e: Option<Mat>,
}

/// Minimum-norm linear representation: `Q = pinv(X0)` so that `X0 Q = I`,
/// `Acl = X1 Q`, `K = U0 Q`.
pub fn linear_rep(data: &TrajectoryData) -> Result<DataRepresentation, DataRepError> {
    let n = data.x0.rows();
    let t = data.x0.cols();
    let rank = matcore::numerical_rank(&data.x0, None);
    if rank < n || t <= n {
        return Err(DataRepError::RankDeficient { rank, required: n });
    }
    let q = matcore::pinv(&data.x0);
    Ok(DataRepresentation {
        a_cl: data.x1.matmul(&q),
        k_gain: data.u0.matmul(&q),
        q1: q.clone(),
        q2: Mat::zeros(t, 0),
        q,
        cancellation_residual: 0.0,
        h: None,
        e: None,
    })
}

/// Linear representation with a derivative-free search over the right-inverse
/// family `Q = Q0 + Null(X0) W`, minimizing the spectral radius of `X1 Q`.
/// Useful when the minimum-norm gain fails to contract an unstable plant.
pub fn linear_rep_stabilized(
    data: &TrajectoryData,
    attempts: usize,
    seed: u64,
    rho_target: f64,
) -> Result<DataRepresentation, DataRepError> {
    use rand::{Rng, SeedableRng};
    let mut rep = linear_rep(data)?;
    let n = data.x0.rows();
    let t = data.x0.cols();
    // null-space basis of X0: orthonormalize the columns of the projector
    // I - X0^+ X0 (the thin SVD does not expose trailing right singular
    // vectors, so the basis is recovered by Gram-Schmidt on the projector)
    let rank = matcore::numerical_rank(&data.x0, None);
    let null_dim = t - rank;
    if null_dim == 0 || attempts == 0 {
        return Ok(rep);
    }
    let projector = Mat::identity(t).sub(&matcore::pinv(&data.x0).matmul(&data.x0));
    let mut basis_cols: Vec<Vec<f64>> = Vec::with_capacity(null_dim);
    for j in 0..t {
        let mut col: Vec<f64> = (0..t).map(|i| projector.get(i, j)).collect();
        for b in &basis_cols {
            let dot: f64 = col.iter().zip(b).map(|(a, c)| a * c).sum();
            for (ci, bi) in col.iter_mut().zip(b) {
                *ci -= dot * bi;
            }
        }
        let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-10 {
            for v in &mut col {
                *v /= norm;
            }
            basis_cols.push(col);
            if basis_cols.len() == null_dim {
                break;
            }
        }
    }
    let null_dim = basis_cols.len();
    let mut null_basis = Mat::zeros(t, null_dim);
    for (j, col) in basis_cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            null_basis.set(i, j, v);
        }
    }
    let mut best_q = rep.q.clone();
    let mut best_rho = matcore::spectral_radius(&rep.a_cl, 64);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut scale = 1.0 / (1.0 + data.x1.frob_norm());
    // stop as soon as the closed loop meets the requested radius: the gain
    // should stay as close to the unmodified right inverse as possible
    for _ in 0..attempts {
        if best_rho <= rho_target {
            break;
        }
        let mut w = Mat::zeros(null_dim, n);
        for i in 0..null_dim {
            for j in 0..n {
                w.set(i, j, rng.gen_range(-1.0..1.0) * scale);
            }
        }
        let q = best_q.add(&null_basis.matmul(&w));
        let rho = matcore::spectral_radius(&data.x1.matmul(&q), 64);
        if rho < best_rho {
            best_rho = rho;
            best_q = q;
        } else {
            scale *= 0.97;
        }
    }
    rep.q = best_q.clone();
    rep.q1 = best_q.clone();
    rep.a_cl = data.x1.matmul(&best_q);
    rep.k_gain = data.u0.matmul(&best_q);
    Ok(rep)
}

/// Recover the input gain realized by a right-inverse `Q`: `K = U0 Q`.
pub fn recover_gain(u0: &Mat, q: &Mat) -> Mat {
    u0.matmul(q)
}

/// Reconstruct the closed-loop representation realized by a stored gain
/// `K` (m x N, acting on the dictionary vector) from the raw trajectory:
/// solve `[M0; U0] Q = [I_N; K]` in least squares, so `X1 Q = A + B K` in
/// lifted coordinates. The state block of `X1 Q` is the closed loop; the
/// dictionary block is the realized cancellation residual.
pub fn rep_from_gain(
    data: &TrajectoryData,
    m0: &Mat,
    k_gain: &Mat,
) -> Result<DataRepresentation, DataRepError> {
    let n = data.x1.rows();
    let nn = m0.rows();
    let t = m0.cols();
    if k_gain.cols() != nn || data.u0.cols() != t || data.x1.cols() != t {
        return Err(DataRepError::DimensionMismatch(
            "gain must be m x N and data matrices must share the horizon".into(),
        ));
    }
    let g = m0.vstack(&data.u0);
    let required = nn + data.u0.rows();
    let rank = matcore::numerical_rank(&g, None);
    if rank < required {
        return Err(DataRepError::RankDeficient { rank, required });
    }
    let rhs = Mat::identity(nn).vstack(k_gain);
    let (q, residual) = matcore::solve_lstsq(&g, &rhs);
    let scale = g.frob_norm().max(1.0);
    if residual > 1e-6 * scale {
        return Err(DataRepError::DimensionMismatch(format!(
            "gain is inconsistent with the trajectory (residual {residual:.3e})"
        )));
    }
    let acl_full = data.x1.matmul(&q);
    let a_cl = acl_full.submatrix(0, 0, n, n);
    let cancellation_residual = if nn > n {
        acl_full.submatrix(0, n, n, nn - n).frob_norm()
    } else {
        0.0
    };
    Ok(DataRepresentation {
        q1: q.submatrix(0, 0, t, n),
        q2: q.submatrix(0, n.min(nn), t, nn - n),
        q,
        a_cl,
        k_gain: k_gain.clone(),
        cancellation_residual,
        h: None,
        e: None,
    })
}

/// `A^k` with an explicit guard on `k = 0`.
pub fn k_power(a: &Mat, k: usize) -> Result<Mat, DataRepError> {
    if k == 0 {
        return Err(DataRepError::ZeroPower);
    }
    Ok(matcore::mat_power(a, k))
}

/// Solve for `Q2` (T x (N-n)) with `M0 Q2 = [0; I]` and `X1 Q2 = 0`, so that
/// the input component `U0 Q2` exactly cancels the dictionary nonlinearities
/// in closed loop. Returns an error when the stacked residual exceeds
/// [`CANCELLATION_TOL`] relative to the data scale.
pub fn cancel_nonlinearity(m0: &Mat, x1: &Mat) -> Result<Mat, DataRepError> {
    let nn = m0.rows();
    let n = x1.rows();
    let t = m0.cols();
    if x1.cols() != t || nn < n {
        return Err(DataRepError::DimensionMismatch(
            "M0 must be N x T with N >= n and X1 must be n x T".into(),
        ));
    }
    let extra = nn - n;
    if extra == 0 {
        return Ok(Mat::zeros(t, 0));
    }
    let stacked = m0.vstack(x1);
    let mut rhs = Mat::zeros(nn + n, extra);
    for j in 0..extra {
        rhs.set(n + j, j, 1.0);
    }
    let (q2, residual) = matcore::solve_lstsq(&stacked, &rhs);
    let scale = 1.0_f64.max(stacked.frob_norm());
    let tol = CANCELLATION_TOL * scale;
    if residual > tol {
        return Err(DataRepError::CancellationResidual { residual, tol });
    }
    Ok(q2)
}

/// Result of the data-based stability LMI: `E = P^{-1}` and `H` with
/// `M0 H = [E; 0]`, a positivity margin, and the derived closed-loop pieces
/// `Q1 = H P`, `Acl = X1 Q1`, `K = U0 Q1`.
#[derive(Debug, Clone)]
pub struct StabilityLmiSolution {
    pub e: Mat,
    pub h: Mat,
    pub p: Mat,
    pub q1: Mat,
    pub a_cl: Mat,
    pub k_gain: Mat,
    pub margin: f64,
    pub status: SdpStatus,
    pub iterations: usize,
}

impl StabilityLmiSolution {
    /// Combine with the cancellation component `Q2` into the full closed-loop
    /// representation `Q = [Q1 Q2]`, `K = U0 Q`, `Acl = X1 Q1`.
    pub fn into_representation(self, q2: Mat, u0: &Mat, x1: &Mat) -> DataRepresentation {
        let q = self.q1.hstack(&q2);
        DataRepresentation {
            k_gain: u0.matmul(&q),
            cancellation_residual: x1.matmul(&q2).frob_norm(),
            a_cl: self.a_cl,
            q1: self.q1,
            q2,
            q,
            h: Some(self.h),
            e: Some(self.e),
        }
    }
}

/// Descending contraction margins tried in order; the first feasible one wins.
/// Margin maximization would be far more expensive than a few feasibility
/// solves, and any margin above [`LMI_MARGIN_FLOOR`] suffices downstream.
const MARGIN_LADDER: [f64; 4] = [0.5, 0.1, 1e-2, LMI_MARGIN_FLOOR];

/// Build and solve the data-based LMI
/// `M0 H = [E; 0]`, `trace(E) = n`, `[[E, X1 H], [H' X1', E]] >= mu I`
/// for the largest margin `mu` on a fixed ladder. The trace normalization
/// fixes the scale of the otherwise homogeneous problem, so `mu <= 1`.
pub fn solve_stability_lmi(
    m0: &Mat,
    x1: &Mat,
    u0: &Mat,
    opts: SdpOptions,
) -> Result<StabilityLmiSolution, DataRepError> {
    let nn = m0.rows();
    let n = x1.rows();
    let t = m0.cols();
    if x1.cols() != t || u0.cols() != t || nn < n {
        return Err(DataRepError::DimensionMismatch(
            "M0 (N x T), X1 (n x T), U0 (m x T) must share T and have N >= n".into(),
        ));
    }
    let rank = matcore::numerical_rank(m0, None);
    if rank < nn || t <= nn {
        return Err(DataRepError::RankDeficient {
            rank,
            required: nn,
        });
    }

    // contraction LMIs on raw data plateau before converging; give the solver
    // room before trusting a stagnation-based infeasibility call
    let mut opts = opts;
    opts.max_iters = opts.max_iters.max(150_000);
    opts.stagnation_window = opts.stagnation_window.max(30_000);

    let mut last = (SdpStatus::NumericalFailure, 0.0);
    for &margin in &MARGIN_LADDER {
        let (prob, e_block, h_ids) = build_margin_lmi(m0, x1, margin)?;
        let sol = sdp::solve(&prob, opts);
        if !matches!(sol.status, SdpStatus::Optimal | SdpStatus::Feasible) {
            last = (sol.status, margin);
            continue;
        }
        let e = sol.block_values[e_block.0].clone().symmetrize();
        let mut h = Mat::zeros(t, n);
        for r in 0..t {
            for c in 0..n {
                h.set(r, c, sol.scalar_values[h_ids[r][c].0]);
            }
        }
        let p = matcore::spd_inverse(&e)?;
        let q1 = h.matmul(&p);
        return Ok(StabilityLmiSolution {
            a_cl: x1.matmul(&q1),
            k_gain: u0.matmul(&q1),
            e,
            h,
            p,
            q1,
            margin,
            status: sol.status,
            iterations: sol.iterations,
        });
    }
    Err(DataRepError::LmiNotSolved {
        status: last.0,
        margin: last.1,
    })
}

fn build_margin_lmi(
    m0: &Mat,
    x1: &Mat,
    margin: f64,
) -> Result<(SdpProblem, sdp::BlockId, Vec<Vec<ScalarId>>), DataRepError> {
    let nn = m0.rows();
    let n = x1.rows();
    let t = m0.cols();
    let mut prob = SdpProblem::new();
    let e_block = prob.add_block("E", n)?;
    let mut h_ids: Vec<Vec<ScalarId>> = Vec::with_capacity(t);
    for r in 0..t {
        let row = (0..n)
            .map(|c| prob.add_scalar(&format!("h_{r}_{c}"), f64::NEG_INFINITY, f64::INFINITY))
            .collect();
        h_ids.push(row);
    }

    // M0 H = [E; 0]
    for r in 0..nn {
        for c in 0..n {
            let mut expr = LinExpr::constant(0.0);
            for k in 0..t {
                let coef = m0.get(r, k);
                if coef != 0.0 {
                    expr = expr.add(&LinExpr::var(VarRef::Scalar(h_ids[k][c])).scale(coef));
                }
            }
            if r < n {
                expr = expr.sub(&LinExpr::var(VarRef::Entry(e_block, r.min(c), r.max(c))));
            }
            prob.add_equality(expr)?;
        }
    }

    // trace(E) = n
    let mut tr = LinExpr::constant(-(n as f64));
    for i in 0..n {
        tr = tr.add(&LinExpr::var(VarRef::Entry(e_block, i, i)));
    }
    prob.add_equality(tr)?;

    // [[E - mu I, X1 H], [(X1 H)', E - mu I]] >= 0
    let x1h = |i: usize, j: usize| {
        let mut expr = LinExpr::constant(0.0);
        for k in 0..t {
            let coef = x1.get(i, k);
            if coef != 0.0 {
                expr = expr.add(&LinExpr::var(VarRef::Scalar(h_ids[k][j])).scale(coef));
            }
        }
        expr
    };
    let dim = 2 * n;
    let mut lmi = vec![vec![LinExpr::constant(0.0); dim]; dim];
    for i in 0..dim {
        for j in i..dim {
            let expr = if i < n && j < n {
                let mut e = LinExpr::var(VarRef::Entry(e_block, i, j));
                if i == j {
                    e = e.add(&LinExpr::constant(-margin));
                }
                e
            } else if i < n && j >= n {
                x1h(i, j - n)
            } else {
                let mut e = LinExpr::var(VarRef::Entry(e_block, i - n, j - n));
                if i == j {
                    e = e.add(&LinExpr::constant(-margin));
                }
                e
            };
            lmi[i][j] = expr.clone();
            lmi[j][i] = expr;
        }
    }
    prob.assemble_lmi("schur", &lmi)?;
    Ok((prob, e_block, h_ids))
}
