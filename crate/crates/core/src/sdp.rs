//! Small dense semidefinite-program solver.
//!
//! Problems are feasibility or linear-objective maximization over a product
//! of symmetric PSD blocks and box-bounded free scalars, tied together by
//! affine equality constraints. This is the backend for every LMI and SOS
//! condition in the toolkit.
//!
//! The algorithm is operator splitting: Douglas-Rachford iterations
//! alternating projection onto the affine subspace `{A v = b}` and the
//! product cone (PSD blocks plus scalar boxes). A linear objective is
//! maximized by bisection on a level constraint attached to an auxiliary
//! scalar, warm-starting each probe. A final least-squares refinement of the
//! scalar variables polishes the equality residual without leaving the cone.
//!
//! Every solution reported `Feasible`/`Optimal` passes an independent
//! recheck (re-evaluated equalities, eigenvalue test per block); the recheck
//! is part of the public contract, not just a test.

use crate::matcore::{pinv, psd_projection, sym_eig, Mat};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdpBuildError {
    #[error("nonlinear expression: product of two decision variables")]
    NonlinearExpression,
    #[error("expression references undeclared variable")]
    UndeclaredVariable,
    #[error("block side length must be >= 1")]
    EmptyBlock,
    #[error("non-finite coefficient in expression")]
    NonFiniteCoefficient,
    #[error("LMI expression matrix must be square")]
    NotSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ScalarId(pub usize);

/// Reference to a decision variable: a free scalar or a symmetric block
/// entry (stored with `row <= col`; the mirrored entry is the same variable).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarRef {
    Scalar(ScalarId),
    Entry(BlockId, usize, usize),
}

impl VarRef {
    fn canonical(self) -> VarRef {
        match self {
            VarRef::Entry(b, r, c) if r > c => VarRef::Entry(b, c, r),
            other => other,
        }
    }
}

/// Affine expression in the declared decision variables.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub constant: f64,
    pub terms: Vec<(VarRef, f64)>,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        LinExpr {
            constant: c,
            terms: vec![],
        }
    }

    pub fn var(v: VarRef) -> Self {
        LinExpr {
            constant: 0.0,
            terms: vec![(v.canonical(), 1.0)],
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &LinExpr) -> LinExpr {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        LinExpr {
            constant: self.constant + other.constant,
            terms,
        }
        .normalized()
    }

    pub fn sub(&self, other: &LinExpr) -> LinExpr {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> LinExpr {
        LinExpr {
            constant: self.constant * s,
            terms: self.terms.iter().map(|(v, c)| (*v, c * s)).collect(),
        }
    }

    /// Product of two affine expressions; at least one side must be constant,
    /// otherwise the result would be nonlinear in the decision variables.
    pub fn mul(&self, other: &LinExpr) -> Result<LinExpr, SdpBuildError> {
        if self.is_constant() {
            Ok(other.scale(self.constant))
        } else if other.is_constant() {
            Ok(self.scale(other.constant))
        } else {
            Err(SdpBuildError::NonlinearExpression)
        }
    }

    fn normalized(mut self) -> LinExpr {
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut out: Vec<(VarRef, f64)> = Vec::with_capacity(self.terms.len());
        for (v, c) in self.terms {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc += c,
                _ => out.push((v, c)),
            }
        }
        out.retain(|(_, c)| *c != 0.0);
        self.terms = out;
        self
    }
}

#[derive(Debug, Clone)]
struct BlockSpec {
    name: String,
    dim: usize,
}

#[derive(Debug, Clone)]
struct ScalarSpec {
    name: String,
    lb: f64,
    ub: f64,
}

/// Symmetric-block conic problem with affine equality constraints.
#[derive(Debug, Clone, Default)]
pub struct SdpProblem {
    blocks: Vec<BlockSpec>,
    scalars: Vec<ScalarSpec>,
    equalities: Vec<LinExpr>,
    objective: LinExpr,
}

impl SdpProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_block(&mut self, name: &str, dim: usize) -> Result<BlockId, SdpBuildError> {
        if dim == 0 {
            return Err(SdpBuildError::EmptyBlock);
        }
        self.blocks.push(BlockSpec {
            name: name.to_string(),
            dim,
        });
        Ok(BlockId(self.blocks.len() - 1))
    }

    pub fn add_scalar(&mut self, name: &str, lb: f64, ub: f64) -> ScalarId {
        self.scalars.push(ScalarSpec {
            name: name.to_string(),
            lb,
            ub,
        });
        ScalarId(self.scalars.len() - 1)
    }

    pub fn set_scalar_bounds(&mut self, id: ScalarId, lb: f64, ub: f64) {
        self.scalars[id.0].lb = lb;
        self.scalars[id.0].ub = ub;
    }

    /// Constrain `expr == 0`.
    pub fn add_equality(&mut self, expr: LinExpr) -> Result<(), SdpBuildError> {
        self.validate(&expr)?;
        self.equalities.push(expr.normalized());
        Ok(())
    }

    /// Linear functional to maximize; empty for pure feasibility.
    pub fn set_objective(&mut self, expr: LinExpr) -> Result<(), SdpBuildError> {
        self.validate(&expr)?;
        self.objective = expr.normalized();
        Ok(())
    }

    /// Add one PSD block constrained entrywise equal to the given symmetric
    /// matrix of affine expressions (only the upper triangle is read).
    pub fn assemble_lmi(
        &mut self,
        name: &str,
        exprs: &[Vec<LinExpr>],
    ) -> Result<BlockId, SdpBuildError> {
        let dim = exprs.len();
        for row in exprs {
            if row.len() != dim {
                return Err(SdpBuildError::NotSquare);
            }
        }
        let block = self.add_block(name, dim)?;
        for i in 0..dim {
            for j in i..dim {
                self.validate(&exprs[i][j])?;
                let tie = LinExpr::var(VarRef::Entry(block, i, j)).sub(&exprs[i][j]);
                self.equalities.push(tie.normalized());
            }
        }
        Ok(block)
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self, id: BlockId) -> usize {
        self.blocks[id.0].dim
    }

    pub fn num_scalars(&self) -> usize {
        self.scalars.len()
    }

    pub fn num_equalities(&self) -> usize {
        self.equalities.len()
    }

    fn validate(&self, expr: &LinExpr) -> Result<(), SdpBuildError> {
        if !expr.constant.is_finite() {
            return Err(SdpBuildError::NonFiniteCoefficient);
        }
        for (v, c) in &expr.terms {
            if !c.is_finite() {
                return Err(SdpBuildError::NonFiniteCoefficient);
            }
            match v {
                VarRef::Scalar(ScalarId(i)) => {
                    if *i >= self.scalars.len() {
                        return Err(SdpBuildError::UndeclaredVariable);
                    }
                }
                VarRef::Entry(BlockId(b), r, c) => {
                    if *b >= self.blocks.len()
                        || *r >= self.blocks[*b].dim
                        || *c >= self.blocks[*b].dim
                    {
                        return Err(SdpBuildError::UndeclaredVariable);
                    }
                }
            }
        }
        Ok(())
    }

    /// Debug dump: one equality per line in sparse triplet form
    /// `block row col coeff` (scalars use block id `s<i>` with row/col 0),
    /// constant last. For cross-checking against external solvers.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for (bi, b) in self.blocks.iter().enumerate() {
            out.push_str(&format!("# block {} {} dim {}\n", bi, b.name, b.dim));
        }
        for (si, s) in self.scalars.iter().enumerate() {
            out.push_str(&format!(
                "# scalar {} {} lb {:.17e} ub {:.17e}\n",
                si, s.name, s.lb, s.ub
            ));
        }
        for eq in &self.equalities {
            let mut parts: Vec<String> = Vec::new();
            for (v, c) in &eq.terms {
                match v {
                    VarRef::Entry(BlockId(b), r, cc) => {
                        parts.push(format!("{} {} {} {:.17e}", b, r, cc, c))
                    }
                    VarRef::Scalar(ScalarId(i)) => {
                        parts.push(format!("s{} 0 0 {:.17e}", i, c))
                    }
                }
            }
            parts.push(format!("const {:.17e}", eq.constant));
            out.push_str(&parts.join("  "));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Feasible,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SdpStatus,
    pub block_values: Vec<Mat>,
    pub scalar_values: Vec<f64>,
    pub objective_value: f64,
    pub max_equality_residual: f64,
    pub min_block_eigenvalue: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct SdpOptions {
    pub eq_tol: f64,
    pub psd_tol: f64,
    /// Iteration budget per feasibility probe.
    pub max_iters: usize,
    /// Violation level above which stagnation means infeasibility.
    pub infeas_threshold: f64,
    /// Iterations without improvement before declaring stagnation.
    pub stagnation_window: usize,
    /// Absolute bisection tolerance on the objective level.
    pub obj_tol: f64,
    /// Maximum number of bisection probes for the objective.
    pub max_probes: usize,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            eq_tol: 1e-7,
            psd_tol: 1e-7,
            max_iters: 20000,
            infeas_threshold: 1e-4,
            stagnation_window: 2000,
            obj_tol: 1e-6,
            max_probes: 80,
        }
    }
}

// ---------------------------------------------------------------------------
// internal vectorized representation

struct Vectorizer {
    block_dims: Vec<usize>,
    block_offsets: Vec<usize>,
    scalar_offset: usize,
    scalar_lb: Vec<f64>,
    scalar_ub: Vec<f64>,
    dim: usize,
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

impl Vectorizer {
    fn new(p: &SdpProblem) -> Self {
        let mut offsets = Vec::with_capacity(p.blocks.len());
        let mut off = 0usize;
        for b in &p.blocks {
            offsets.push(off);
            off += b.dim * (b.dim + 1) / 2;
        }
        let scalar_offset = off;
        Vectorizer {
            block_dims: p.blocks.iter().map(|b| b.dim).collect(),
            block_offsets: offsets,
            scalar_offset,
            scalar_lb: p.scalars.iter().map(|s| s.lb).collect(),
            scalar_ub: p.scalars.iter().map(|s| s.ub).collect(),
            dim: scalar_offset + p.scalars.len(),
        }
    }

    fn tri_index(d: usize, r: usize, c: usize) -> usize {
        // upper triangle, row-major: (r,c) with r <= c
        r * d - r * (r + 1) / 2 + c
    }

    /// Coordinate index and svec scaling factor for an entry variable.
    /// The internal coordinate stores sqrt(2)*X_rc for off-diagonal entries
    /// so Frobenius projection of the matrix equals Euclidean projection of
    /// the coordinates.
    fn entry_coord(&self, b: usize, r: usize, c: usize) -> (usize, f64) {
        let d = self.block_dims[b];
        let idx = self.block_offsets[b] + Self::tri_index(d, r, c);
        if r == c {
            (idx, 1.0)
        } else {
            (idx, SQRT2)
        }
    }

    fn var_coord(&self, v: &VarRef) -> (usize, f64) {
        match v {
            VarRef::Entry(BlockId(b), r, c) => self.entry_coord(*b, *r, *c),
            VarRef::Scalar(ScalarId(i)) => (self.scalar_offset + i, 1.0),
        }
    }

    fn block_to_mat(&self, v: &[f64], b: usize) -> Mat {
        let d = self.block_dims[b];
        let off = self.block_offsets[b];
        let mut m = Mat::zeros(d, d);
        for r in 0..d {
            for c in r..d {
                let coord = v[off + Self::tri_index(d, r, c)];
                let val = if r == c { coord } else { coord / SQRT2 };
                m.set(r, c, val);
                m.set(c, r, val);
            }
        }
        m
    }

    fn mat_to_block(&self, m: &Mat, v: &mut [f64], b: usize) {
        let d = self.block_dims[b];
        let off = self.block_offsets[b];
        for r in 0..d {
            for c in r..d {
                let val = m.get(r, c);
                v[off + Self::tri_index(d, r, c)] = if r == c { val } else { val * SQRT2 };
            }
        }
    }

    fn project_cone(&self, v: &mut [f64]) {
        for b in 0..self.block_dims.len() {
            let m = self.block_to_mat(v, b);
            let p = psd_projection(&m);
            self.mat_to_block(&p, v, b);
        }
        for (i, x) in v[self.scalar_offset..].iter_mut().enumerate() {
            *x = x.clamp(self.scalar_lb[i], self.scalar_ub[i]);
        }
    }
}

/// Sparse row of the equality system `A v = b`.
struct EqRow {
    coords: Vec<(usize, f64)>,
    rhs: f64,
}

struct AffineProjector {
    rows: Vec<EqRow>,
    /// pinv(A A^T), dense
    gram_pinv: Mat,
    dim: usize,
}

impl AffineProjector {
    fn new(rows: Vec<EqRow>, dim: usize) -> Self {
        let m = rows.len();
        let mut gram = Mat::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                // sparse dot product (coords are sorted by index)
                let mut s = 0.0;
                let (a, b) = (&rows[i].coords, &rows[j].coords);
                let (mut ia, mut ib) = (0usize, 0usize);
                while ia < a.len() && ib < b.len() {
                    match a[ia].0.cmp(&b[ib].0) {
                        std::cmp::Ordering::Less => ia += 1,
                        std::cmp::Ordering::Greater => ib += 1,
                        std::cmp::Ordering::Equal => {
                            s += a[ia].1 * b[ib].1;
                            ia += 1;
                            ib += 1;
                        }
                    }
                }
                gram.set(i, j, s);
                gram.set(j, i, s);
            }
        }
        let gram_pinv = if m > 0 { pinv(&gram) } else { Mat::zeros(0, 0) };
        AffineProjector {
            rows,
            gram_pinv,
            dim,
        }
    }

    fn residual_vec(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| {
                let mut s = -r.rhs;
                for (i, c) in &r.coords {
                    s += c * v[*i];
                }
                s
            })
            .collect()
    }

    fn max_residual(&self, v: &[f64]) -> f64 {
        self.residual_vec(v)
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()))
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        if self.rows.is_empty() {
            return v.to_vec();
        }
        let r = self.residual_vec(v);
        let y = self.gram_pinv.matvec(&r);
        let mut out = v.to_vec();
        debug_assert_eq!(out.len(), self.dim);
        for (row, yi) in self.rows.iter().zip(&y) {
            for (i, c) in &row.coords {
                out[*i] -= c * yi;
            }
        }
        out
    }
}

enum ProbeOutcome {
    Feasible(Vec<f64>),
    Stagnant,
    Budget,
    NonFinite,
}

/// Solve the problem. Deterministic given identical problem and options.
pub fn solve(p: &SdpProblem, opts: SdpOptions) -> SdpSolution {
    let vz = Vectorizer::new(p);

    // objective as internal coordinate functional
    let obj_coords: Vec<(usize, f64)> = p
        .objective
        .terms
        .iter()
        .map(|(v, c)| {
            let (idx, s) = vz.var_coord(v);
            (idx, c / s)
        })
        .collect();
    let has_objective = !obj_coords.is_empty();
    let eval_obj = |v: &[f64]| -> f64 {
        p.objective.constant + obj_coords.iter().map(|(i, c)| c * v[*i]).sum::<f64>()
    };

    // equality rows, row-normalized for the projector
    let mut rows: Vec<EqRow> = Vec::with_capacity(p.equalities.len() + 1);
    for eq in &p.equalities {
        let mut coords: Vec<(usize, f64)> = eq
            .terms
            .iter()
            .map(|(v, c)| {
                let (idx, s) = vz.var_coord(v);
                (idx, c / s)
            })
            .collect();
        coords.sort_by_key(|(i, _)| *i);
        // merge duplicates (distinct VarRefs can map to one coord only via
        // mirrored entries, which canonicalization already merged)
        let mut rhs = -eq.constant;
        let scale = coords
            .iter()
            .map(|(_, c)| c.abs())
            .fold(rhs.abs(), f64::max)
            .max(1e-300);
        for (_, c) in coords.iter_mut() {
            *c /= scale;
        }
        rhs /= scale;
        rows.push(EqRow { coords, rhs });
    }

    // objective handled as a level variable: append coordinate t with
    // equality t - obj(v) = 0 and bisect on its lower bound
    let mut dim = vz.dim;
    let level_idx = if has_objective {
        let idx = dim;
        dim += 1;
        let mut coords = obj_coords.clone();
        coords.push((idx, -1.0));
        coords.sort_by_key(|(i, _)| *i);
        let scale = coords
            .iter()
            .map(|(_, c)| c.abs())
            .fold(1e-300, f64::max);
        let coords = coords.iter().map(|(i, c)| (*i, c / scale)).collect();
        rows.push(EqRow {
            coords,
            rhs: -p.objective.constant / scale,
        });
        Some(idx)
    } else {
        None
    };

    let aff = AffineProjector::new(rows, dim);

    // cone projection with the level bound folded in
    struct LevelVec<'v> {
        vz: &'v Vectorizer,
        level_idx: Option<usize>,
    }
    impl<'v> LevelVec<'v> {
        fn project(&self, v: &mut [f64], level_lb: f64) {
            let n = self.vz.dim;
            self.vz.project_cone(&mut v[..n]);
            if let Some(idx) = self.level_idx {
                if v[idx] < level_lb {
                    v[idx] = level_lb;
                }
            }
        }
    }

    // wrap Splitter by hand because the cone now includes the level bound
    let run_probe = |z: &mut Vec<f64>,
                     level_lb: f64,
                     budget: usize,
                     iters: &mut usize|
     -> ProbeOutcome {
        let lv = LevelVec {
            vz: &vz,
            level_idx,
        };
        let mut best = f64::INFINITY;
        let mut since_best = 0usize;
        for it in 0..budget {
            *iters += 1;
            let x = aff.project(z);
            let mut y: Vec<f64> = x.iter().zip(z.iter()).map(|(a, b)| 2.0 * a - b).collect();
            lv.project(&mut y, level_lb);
            for i in 0..z.len() {
                z[i] += y[i] - x[i];
            }
            if it % 5 == 0 || it == budget - 1 {
                let viol = aff.max_residual(&y);
                if !viol.is_finite() {
                    return ProbeOutcome::NonFinite;
                }
                if viol <= opts.eq_tol * 0.5 {
                    return ProbeOutcome::Feasible(y);
                }
                if viol < best * (1.0 - 1e-4) {
                    best = viol;
                    since_best = 0;
                } else {
                    since_best += 5;
                }
                if since_best >= opts.stagnation_window && best > opts.infeas_threshold {
                    return ProbeOutcome::Stagnant;
                }
            }
        }
        ProbeOutcome::Budget
    };

    let mut iterations = 0usize;
    let mut z = vec![0.0f64; dim];
    // unconstrained first probe
    let first = run_probe(&mut z, f64::NEG_INFINITY, opts.max_iters, &mut iterations);
    let mut best_point = match first {
        ProbeOutcome::Feasible(v) => v,
        ProbeOutcome::Stagnant => {
            return finish(p, &vz, &aff, None, SdpStatus::Infeasible, iterations, opts)
        }
        ProbeOutcome::Budget => {
            return finish(
                p,
                &vz,
                &aff,
                None,
                SdpStatus::MaxIterations,
                iterations,
                opts,
            )
        }
        ProbeOutcome::NonFinite => {
            return finish(
                p,
                &vz,
                &aff,
                None,
                SdpStatus::NumericalFailure,
                iterations,
                opts,
            )
        }
    };

    if !has_objective {
        return finish(
            p,
            &vz,
            &aff,
            Some(best_point),
            SdpStatus::Feasible,
            iterations,
            opts,
        );
    }

    // expansion phase: find an infeasible upper level
    let mut lo = eval_obj(&best_point);
    let mut step = opts.obj_tol.max(1e-3) * lo.abs().max(1.0);
    let mut hi = None;
    let mut probes = 0usize;
    while probes < opts.max_probes {
        probes += 1;
        let level = lo + step;
        let mut zt = z.clone();
        match run_probe(&mut zt, level, opts.max_iters, &mut iterations) {
            ProbeOutcome::Feasible(v) => {
                lo = eval_obj(&v).max(level);
                best_point = v;
                z = zt;
                step *= 4.0;
            }
            ProbeOutcome::Stagnant | ProbeOutcome::Budget => {
                hi = Some(level);
                break;
            }
            ProbeOutcome::NonFinite => {
                return finish(
                    p,
                    &vz,
                    &aff,
                    Some(best_point),
                    SdpStatus::NumericalFailure,
                    iterations,
                    opts,
                );
            }
        }
    }

    let mut hi = match hi {
        Some(h) => h,
        // never hit an infeasible level: report best found
        None => {
            return finish(
                p,
                &vz,
                &aff,
                Some(best_point),
                SdpStatus::Feasible,
                iterations,
                opts,
            )
        }
    };

    // bisection phase
    while hi - lo > opts.obj_tol && probes < opts.max_probes {
        probes += 1;
        let mid = 0.5 * (lo + hi);
        let mut zt = z.clone();
        match run_probe(&mut zt, mid, opts.max_iters, &mut iterations) {
            ProbeOutcome::Feasible(v) => {
                lo = eval_obj(&v).max(mid);
                best_point = v;
                z = zt;
            }
            ProbeOutcome::Stagnant | ProbeOutcome::Budget => {
                hi = mid;
            }
            ProbeOutcome::NonFinite => break,
        }
    }

    finish(
        p,
        &vz,
        &aff,
        Some(best_point),
        SdpStatus::Optimal,
        iterations,
        opts,
    )
}

/// Scalar refinement + independent recheck, then assemble the solution.
fn finish(
    p: &SdpProblem,
    vz: &Vectorizer,
    aff: &AffineProjector,
    point: Option<Vec<f64>>,
    status: SdpStatus,
    iterations: usize,
    opts: SdpOptions,
) -> SdpSolution {
    let mut v = point.unwrap_or_else(|| vec![0.0; aff.dim]);
    v.resize(aff.dim, 0.0);

    let mut status = status;
    if matches!(status, SdpStatus::Feasible | SdpStatus::Optimal) {
        refine_scalars(vz, aff, &mut v);
    }

    // independent recheck on the original (unscaled) equalities and blocks
    let block_values: Vec<Mat> = (0..p.blocks.len()).map(|b| vz.block_to_mat(&v, b)).collect();
    let scalar_values: Vec<f64> = v[vz.scalar_offset..vz.dim].to_vec();

    let eval = |expr: &LinExpr| -> f64 {
        let mut s = expr.constant;
        for (vr, c) in &expr.terms {
            let val = match vr {
                VarRef::Entry(BlockId(b), r, cc) => block_values[*b].get(*r, *cc),
                VarRef::Scalar(ScalarId(i)) => scalar_values[*i],
            };
            s += c * val;
        }
        s
    };
    // residuals are measured relative to each row's coefficient scale so
    // that large-coefficient rows (box quadratics) are judged consistently
    // with the row-normalized rows the probes converge on
    let mut max_eq = 0.0f64;
    for eq in &p.equalities {
        let scale = eq
            .terms
            .iter()
            .map(|(_, c)| c.abs())
            .fold(eq.constant.abs().max(1.0), f64::max);
        max_eq = max_eq.max(eval(eq).abs() / scale);
    }
    let mut min_eig = f64::INFINITY;
    for b in &block_values {
        if let Ok(e) = sym_eig(b) {
            min_eig = min_eig.min(*e.eigenvalues.first().unwrap_or(&f64::INFINITY));
        } else {
            min_eig = f64::NEG_INFINITY;
        }
    }
    if block_values.is_empty() {
        min_eig = 0.0;
    }

    if matches!(status, SdpStatus::Feasible | SdpStatus::Optimal)
        && (max_eq > opts.eq_tol || min_eig < -opts.psd_tol)
    {
        status = SdpStatus::MaxIterations;
    }

    let objective_value = eval(&p.objective);
    SdpSolution {
        status,
        block_values,
        scalar_values,
        objective_value,
        max_equality_residual: max_eq,
        min_block_eigenvalue: min_eig,
        iterations,
    }
}

/// Least-squares correction restricted to the scalar coordinates: blocks stay
/// PSD-exact while the equality residual shrinks. Bound-violating corrections
/// are discarded.
fn refine_scalars(vz: &Vectorizer, aff: &AffineProjector, v: &mut [f64]) {
    let ns = vz.dim - vz.scalar_offset;
    if ns == 0 || aff.rows.is_empty() {
        return;
    }
    let m = aff.rows.len();
    let mut a = Mat::zeros(m, ns);
    for (ri, row) in aff.rows.iter().enumerate() {
        for (i, c) in &row.coords {
            if *i >= vz.scalar_offset && *i < vz.dim {
                a.set(ri, i - vz.scalar_offset, *c);
            }
        }
    }
    let r = aff.residual_vec(v);
    let rhs = Mat::new(m, 1, r.iter().map(|x| -x).collect()).unwrap();
    let (delta, _) = crate::matcore::solve_lstsq(&a, &rhs);
    let before = aff.max_residual(v);
    let mut cand = v.to_vec();
    for i in 0..ns {
        cand[vz.scalar_offset + i] += delta.get(i, 0);
        let (lb, ub) = (vz.scalar_lb[i], vz.scalar_ub[i]);
        if cand[vz.scalar_offset + i] < lb || cand[vz.scalar_offset + i] > ub {
            return; // correction leaves the box, keep the original point
        }
    }
    if aff.max_residual(&cand) < before {
        v.copy_from_slice(&cand);
    }
}
