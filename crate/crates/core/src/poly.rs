//! Multivariate polynomials, semi-algebraic sets, and the S-procedure /
//! SOS-to-SDP compiler.
//!
//! A nonnegativity requirement `p(x) >= 0 on {x : g_j(x) >= 0}` is certified
//! by nonnegative multipliers `sigma_j` such that `p - sum sigma_j g_j` is a
//! sum of squares; SOS membership is encoded as a Gram PSD block with
//! coefficient-matching equalities. Monomials are ordered graded-lex
//! throughout so Gram indices and printed output are deterministic.

use crate::matcore::Mat;
use crate::sdp::{BlockId, LinExpr, ScalarId, SdpBuildError, SdpProblem, VarRef};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("dimension mismatch: expected {expected} variables, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix must be symmetric")]
    AsymmetricMatrix,
    #[error("box bounds inverted at coordinate {0}")]
    BoundsInverted(usize),
    #[error("multiplier degree {0} not supported (must be 0 or 2)")]
    BadMultiplierDegree(usize),
    #[error("sdp build error: {0}")]
    Build(#[from] SdpBuildError),
}

/// Monomial as an exponent multi-index, ordered graded-lex (total degree
/// first, then lexicographic on the exponent vector).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        Mono(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Multivariate polynomial with real coefficients. Zero-coefficient terms
/// are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub num_vars: usize,
    pub terms: BTreeMap<Mono, f64>,
}

impl Polynomial {
    pub fn zero(num_vars: usize) -> Self {
        Polynomial {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(num_vars: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(num_vars);
        p.add_term(Mono(vec![0; num_vars]), c);
        p
    }

    pub fn var(num_vars: usize, i: usize) -> Self {
        let mut e = vec![0u32; num_vars];
        e[i] = 1;
        let mut p = Polynomial::zero(num_vars);
        p.add_term(Mono(e), 1.0);
        p
    }

    pub fn add_term(&mut self, m: Mono, c: f64) {
        debug_assert_eq!(m.0.len(), self.num_vars);
        let entry = self.terms.entry(m).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            let key = self
                .terms
                .iter()
                .find(|(_, &v)| v == 0.0)
                .map(|(k, _)| k.clone());
            if let Some(k) = key {
                self.terms.remove(&k);
            }
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, s: f64) -> Polynomial {
        let mut out = Polynomial::zero(self.num_vars);
        if s == 0.0 {
            return out;
        }
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c * s);
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.num_vars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.num_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        Ok(self.terms.iter().map(|(m, c)| c * m.eval(x)).sum())
    }

    pub fn coeff(&self, m: &Mono) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    /// Plain-text report format: one `coeff * x1^a1 ... xn^an` term per
    /// line, graded-lex sorted. Bit-exact ordering.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, c) in &self.terms {
            let mut line = format!("{:.17e}", c);
            for (i, &e) in m.0.iter().enumerate() {
                if e > 0 {
                    line.push_str(&format!(" * x{}^{}", i + 1, e));
                }
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Quadratic form `x^T P x` as a polynomial.
pub fn quadratic_form(p: &Mat) -> Result<Polynomial, PolyError> {
    if !p.is_symmetric(1e-12) {
        return Err(PolyError::AsymmetricMatrix);
    }
    let n = p.rows();
    let mut out = Polynomial::zero(n);
    for i in 0..n {
        for j in i..n {
            let c = if i == j { p.get(i, i) } else { 2.0 * p.get(i, j) };
            if c != 0.0 {
                let mut e = vec![0u32; n];
                e[i] += 1;
                e[j] += 1;
                out.add_term(Mono(e), c);
            }
        }
    }
    Ok(out)
}

/// Set `{x : g_j(x) >= 0 for all j}`.
#[derive(Debug, Clone)]
pub struct SemiAlgebraicSet {
    pub num_vars: usize,
    pub inequalities: Vec<Polynomial>,
    /// Present when the set is an axis-aligned box.
    pub box_bounds: Option<Vec<(f64, f64)>>,
}

/// Box `[lb_1,ub_1] x ... x [lb_n,ub_n]` as per-coordinate quadratics
/// `(x_i - lb_i)(ub_i - x_i) >= 0`.
pub fn box_to_set(lb: &[f64], ub: &[f64]) -> Result<SemiAlgebraicSet, PolyError> {
    assert_eq!(lb.len(), ub.len());
    let n = lb.len();
    let mut inequalities = Vec::with_capacity(n);
    for i in 0..n {
        if lb[i] > ub[i] {
            return Err(PolyError::BoundsInverted(i));
        }
        let xi = Polynomial::var(n, i);
        let g = xi
            .sub(&Polynomial::constant(n, lb[i]))
            .mul(&Polynomial::constant(n, ub[i]).sub(&xi));
        inequalities.push(g);
    }
    Ok(SemiAlgebraicSet {
        num_vars: n,
        inequalities,
        box_bounds: Some(lb.iter().zip(ub).map(|(&l, &u)| (l, u)).collect()),
    })
}

impl SemiAlgebraicSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.inequalities
            .iter()
            .all(|g| g.eval(x).map(|v| v >= 0.0).unwrap_or(false))
    }
}

/// Polynomial whose coefficients are affine expressions in SDP decision
/// variables; the intermediate form of every certificate condition.
#[derive(Debug, Clone)]
pub struct AffinePoly {
    pub num_vars: usize,
    pub terms: BTreeMap<Mono, LinExpr>,
}

impl AffinePoly {
    pub fn zero(num_vars: usize) -> Self {
        AffinePoly {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_poly(p: &Polynomial) -> Self {
        AffinePoly {
            num_vars: p.num_vars,
            terms: p
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), LinExpr::constant(*c)))
                .collect(),
        }
    }

    pub fn add_coeff(&mut self, m: Mono, e: LinExpr) {
        match self.terms.get_mut(&m) {
            Some(cur) => *cur = cur.add(&e),
            None => {
                self.terms.insert(m, e);
            }
        }
    }

    pub fn add(&self, other: &AffinePoly) -> AffinePoly {
        let mut out = self.clone();
        for (m, e) in &other.terms {
            out.add_coeff(m.clone(), e.clone());
        }
        out
    }

    pub fn sub(&self, other: &AffinePoly) -> AffinePoly {
        let mut out = self.clone();
        for (m, e) in &other.terms {
            out.add_coeff(m.clone(), e.scale(-1.0));
        }
        out
    }

    /// Add `coeff * p` where `coeff` is an affine expression and `p` a fixed
    /// numeric polynomial (e.g. a multiplier scalar times a set inequality).
    pub fn add_scaled_poly(&mut self, coeff: &LinExpr, p: &Polynomial) {
        for (m, c) in &p.terms {
            self.add_coeff(m.clone(), coeff.scale(*c));
        }
    }

    /// Quadratic form `x^T M x` where `M` is a symmetric matrix of affine
    /// expressions.
    pub fn quadratic_form_sym(m: &[Vec<LinExpr>]) -> AffinePoly {
        let n = m.len();
        let mut out = AffinePoly::zero(n);
        for i in 0..n {
            for j in i..n {
                let mut e = vec![0u32; n];
                e[i] += 1;
                e[j] += 1;
                let coeff = if i == j {
                    m[i][i].clone()
                } else {
                    m[i][j].scale(2.0)
                };
                out.add_coeff(Mono(e), coeff);
            }
        }
        out
    }
}

/// Symmetric matrix of affine expressions `A^T P A` for numeric `A` and a
/// symmetric expression matrix `P`. Used for the one-step decrease condition.
pub fn congruence(a: &Mat, p: &[Vec<LinExpr>]) -> Vec<Vec<LinExpr>> {
    let n = a.rows();
    let m = a.cols();
    assert_eq!(p.len(), n);
    let mut out = vec![vec![LinExpr::constant(0.0); m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut acc = LinExpr::constant(0.0);
            for r in 0..n {
                for s in 0..n {
                    let c = a.get(r, i) * a.get(s, j);
                    if c != 0.0 {
                        acc = acc.add(&p[r][s].scale(c));
                    }
                }
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Monomials of total degree <= d in graded-lex order.
pub fn monomials_up_to(num_vars: usize, d: u32) -> Vec<Mono> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; num_vars];
    collect_monomials(num_vars, d, 0, &mut cur, &mut out);
    out.sort();
    out
}

fn collect_monomials(n: usize, d: u32, idx: usize, cur: &mut Vec<u32>, out: &mut Vec<Mono>) {
    if idx == n {
        out.push(Mono(cur.clone()));
        return;
    }
    let used: u32 = cur[..idx].iter().sum();
    for e in 0..=(d - used) {
        cur[idx] = e;
        collect_monomials(n, d, idx + 1, cur, out);
    }
    cur[idx] = 0;
}

/// An SOS nonnegativity requirement over a semi-algebraic set.
pub struct SosConstraint<'a> {
    pub name: String,
    /// Required to be SOS after subtracting the multiplier combination.
    pub target: AffinePoly,
    /// Supplies the inequalities `g_j`; `None` means global nonnegativity.
    pub set: Option<&'a SemiAlgebraicSet>,
    /// 0 (nonnegative constants) or 2 (SOS quadratics).
    pub multiplier_degree: usize,
}

/// Handle to the Gram block and per-inequality multipliers produced by
/// [`compile_sos`].
pub struct SosCompiled {
    pub gram_block: BlockId,
    pub gram_basis: Vec<Mono>,
    pub multiplier_scalars: Vec<ScalarId>,
    pub multiplier_blocks: Vec<BlockId>,
}

/// Compile one S-procedure constraint into the problem: subtract the
/// multiplier combination from the target, introduce one Gram PSD block for
/// the remainder, and add coefficient-matching equalities.
pub fn compile_sos(
    problem: &mut SdpProblem,
    c: &SosConstraint<'_>,
) -> Result<SosCompiled, PolyError> {
    if c.multiplier_degree != 0 && c.multiplier_degree != 2 {
        return Err(PolyError::BadMultiplierDegree(c.multiplier_degree));
    }
    let n = c.num_vars();
    let mut remainder = c.target.clone();
    let mut multiplier_scalars = Vec::new();
    let mut multiplier_blocks = Vec::new();

    if let Some(set) = c.set {
        for (j, g) in set.inequalities.iter().enumerate() {
            if c.multiplier_degree == 0 {
                let sid = problem.add_scalar(
                    &format!("{}_sigma{}", c.name, j),
                    0.0,
                    f64::INFINITY,
                );
                let coeff = LinExpr::var(VarRef::Scalar(sid)).scale(-1.0);
                remainder.add_scaled_poly(&coeff, g);
                multiplier_scalars.push(sid);
            } else {
                let basis = monomials_up_to(n, 1);
                let gb = problem.add_block(&format!("{}_L{}", c.name, j), basis.len())?;
                // sigma_j = b^T G_j b, subtract sigma_j * g_j
                for (ai, ma) in basis.iter().enumerate() {
                    for (bi, mb) in basis.iter().enumerate().skip(ai) {
                        let mult = if ai == bi { 1.0 } else { 2.0 };
                        let entry =
                            LinExpr::var(VarRef::Entry(gb, ai, bi)).scale(-mult);
                        let mono = ma.mul(mb);
                        for (gm, gc) in &g.terms {
                            remainder.add_coeff(mono.mul(gm), entry.scale(*gc));
                        }
                    }
                }
                multiplier_blocks.push(gb);
            }
        }
    }

    // Gram basis for the remainder: monomials up to half its (even) degree
    let max_deg = remainder
        .terms
        .keys()
        .map(|m| m.degree())
        .max()
        .unwrap_or(0);
    let half = max_deg.div_ceil(2);
    let basis = monomials_up_to(n, half.max(1));
    let gram = problem.add_block(&format!("{}_gram", c.name), basis.len())?;

    // coefficient matching: all product monomials plus all target monomials
    let mut eqs: BTreeMap<Mono, LinExpr> = BTreeMap::new();
    for (ai, ma) in basis.iter().enumerate() {
        for (bi, mb) in basis.iter().enumerate().skip(ai) {
            let mult = if ai == bi { 1.0 } else { 2.0 };
            let term = LinExpr::var(VarRef::Entry(gram, ai, bi)).scale(mult);
            let mono = ma.mul(mb);
            match eqs.get_mut(&mono) {
                Some(e) => *e = e.add(&term),
                None => {
                    eqs.insert(mono, term);
                }
            }
        }
    }
    for (m, coeff) in &remainder.terms {
        match eqs.get_mut(m) {
            Some(e) => *e = e.sub(coeff),
            None => {
                eqs.insert(m.clone(), coeff.scale(-1.0));
            }
        }
    }
    for (_, e) in eqs {
        problem.add_equality(e)?;
    }

    Ok(SosCompiled {
        gram_block: gram,
        gram_basis: basis,
        multiplier_scalars,
        multiplier_blocks,
    })
}

impl<'a> SosConstraint<'a> {
    fn num_vars(&self) -> usize {
        self.target.num_vars
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::{solve, SdpOptions, SdpStatus};

    #[test]
    fn box_to_set_1d_symmetric() {
        let s = box_to_set(&[-1.0], &[1.0]).unwrap();
        // g(x) = 1 - x^2
        let g = &s.inequalities[0];
        assert_eq!(g.coeff(&Mono(vec![0])), 1.0);
        assert_eq!(g.coeff(&Mono(vec![2])), -1.0);
        assert_eq!(g.coeff(&Mono(vec![1])), 0.0);
    }

    #[test]
    fn box_to_set_rlc_state_space() {
        let s = box_to_set(&[-2.0, -4.0], &[2.0, 4.0]).unwrap();
        // (x1+2)(2-x1) = 4 - x1^2, (x2+4)(4-x2) = 16 - x2^2
        assert_eq!(s.inequalities[0].coeff(&Mono(vec![0, 0])), 4.0);
        assert_eq!(s.inequalities[0].coeff(&Mono(vec![2, 0])), -1.0);
        assert_eq!(s.inequalities[1].coeff(&Mono(vec![0, 0])), 16.0);
        assert_eq!(s.inequalities[1].coeff(&Mono(vec![0, 2])), -1.0);
    }

    #[test]
    fn box_to_set_degenerate_point() {
        let s = box_to_set(&[3.0], &[3.0]).unwrap();
        assert!(s.contains(&[3.0]));
        assert!(!s.contains(&[3.1]));
        assert!(box_to_set(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn quadratic_form_identity_and_zero() {
        let p = quadratic_form(&Mat::identity(2)).unwrap();
        assert_eq!(p.coeff(&Mono(vec![2, 0])), 1.0);
        assert_eq!(p.coeff(&Mono(vec![0, 2])), 1.0);
        assert_eq!(p.terms.len(), 2);
        let z = quadratic_form(&Mat::zeros(3, 3)).unwrap();
        assert!(z.terms.is_empty());
        assert!(quadratic_form(&Mat::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]])).is_err());
    }

    #[test]
    fn quadratic_form_rlc_paper_p() {
        let p = Mat::from_rows(&[&[3.36, -0.2943], &[-0.2943, 0.1285]]);
        let b = quadratic_form(&p).unwrap();
        assert!((b.coeff(&Mono(vec![2, 0])) - 3.36).abs() < 1e-12);
        assert!((b.coeff(&Mono(vec![1, 1])) + 0.58856).abs() < 1e-4);
        assert!((b.coeff(&Mono(vec![0, 2])) - 0.1285).abs() < 1e-12);
        // B(0.5, 0) = 3.36 * 0.25 = 0.84
        assert!((b.eval(&[0.5, 0.0]).unwrap() - 0.84).abs() < 1e-12);
    }

    #[test]
    fn eval_cases() {
        let s = box_to_set(&[-1.0], &[1.0]).unwrap();
        assert_eq!(s.inequalities[0].eval(&[1.0]).unwrap(), 0.0);
        assert_eq!(Polynomial::zero(2).eval(&[5.0, -3.0]).unwrap(), 0.0);
        assert!(Polynomial::zero(2).eval(&[1.0]).is_err());
    }

    #[test]
    fn eval_matches_quadratic_form_random() {
        let p = Mat::from_rows(&[&[1.3, -0.4, 0.2], &[-0.4, 2.0, 0.7], &[0.2, 0.7, 0.9]]);
        let b = quadratic_form(&p).unwrap();
        for x in [[0.1, -0.2, 0.3], [1.0, 2.0, -1.0], [0.0, 0.0, 0.0]] {
            let direct = p.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
            assert!((b.eval(&x).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn sos_x_squared_globally() {
        let mut prob = SdpProblem::new();
        let mut target = Polynomial::zero(1);
        target.add_term(Mono(vec![2]), 1.0);
        let c = SosConstraint {
            name: "t".into(),
            target: AffinePoly::from_poly(&target),
            set: None,
            multiplier_degree: 0,
        };
        compile_sos(&mut prob, &c).unwrap();
        let sol = solve(&prob, SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::Feasible);
    }

    #[test]
    fn sos_exact_cancellation() {
        // (1 - x^2) - c (1 - x^2) over [-1,1], c >= 0: feasible with c = 1
        let set = box_to_set(&[-1.0], &[1.0]).unwrap();
        let mut prob = SdpProblem::new();
        let c = SosConstraint {
            name: "t".into(),
            target: AffinePoly::from_poly(&set.inequalities[0].clone()),
            set: Some(&set),
            multiplier_degree: 0,
        };
        compile_sos(&mut prob, &c).unwrap();
        let sol = solve(&prob, SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::Feasible);
    }

    #[test]
    fn sos_infeasible_needs_contradictory_multiplier() {
        // (0.5 - x^2) - c (1 - x^2): matching forces c >= 1 and c <= 0.5
        let set = box_to_set(&[-1.0], &[1.0]).unwrap();
        let mut target = Polynomial::zero(1);
        target.add_term(Mono(vec![0]), 0.5);
        target.add_term(Mono(vec![2]), -1.0);
        let mut prob = SdpProblem::new();
        let c = SosConstraint {
            name: "t".into(),
            target: AffinePoly::from_poly(&target),
            set: Some(&set),
            multiplier_degree: 0,
        };
        compile_sos(&mut prob, &c).unwrap();
        let sol = solve(&prob, SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::Infeasible);
    }

    #[test]
    fn sos_rejects_odd_multiplier_degree() {
        let set = box_to_set(&[-1.0], &[1.0]).unwrap();
        let mut prob = SdpProblem::new();
        let c = SosConstraint {
            name: "t".into(),
            target: AffinePoly::from_poly(&set.inequalities[0].clone()),
            set: Some(&set),
            multiplier_degree: 1,
        };
        assert!(compile_sos(&mut prob, &c).is_err());
    }

    #[test]
    fn gram_roundtrip_random_psd() {
        // b(x)^T G b(x) with G PSD must compile Feasible, and the recovered
        // Gram must reproduce the polynomial's coefficients.
        let basis = monomials_up_to(2, 1);
        let raw = Mat::from_rows(&[&[1.0, 0.3, -0.2], &[0.3, 0.8, 0.1], &[-0.2, 0.1, 1.2]]);
        let g = raw.matmul(&raw.transpose());
        let mut poly = Polynomial::zero(2);
        for (ai, ma) in basis.iter().enumerate() {
            for (bi, mb) in basis.iter().enumerate() {
                poly.add_term(ma.mul(mb), g.get(ai, bi));
            }
        }
        let mut prob = SdpProblem::new();
        let c = SosConstraint {
            name: "rt".into(),
            target: AffinePoly::from_poly(&poly),
            set: None,
            multiplier_degree: 0,
        };
        let compiled = compile_sos(&mut prob, &c).unwrap();
        let sol = solve(&prob, SdpOptions::default());
        assert_eq!(sol.status, SdpStatus::Feasible);
        let rec = &sol.block_values[compiled.gram_block.0];
        let mut recon = Polynomial::zero(2);
        for (ai, ma) in basis.iter().enumerate() {
            for (bi, mb) in basis.iter().enumerate() {
                recon.add_term(ma.mul(mb), rec.get(ai, bi));
            }
        }
        for (m, cf) in &poly.terms {
            assert!(
                (recon.coeff(m) - cf).abs() <= 1e-7,
                "coeff mismatch on {:?}",
                m
            );
        }
    }

    #[test]
    fn compile_invariant_under_inequality_reordering() {
        let set = box_to_set(&[-1.0, -2.0], &[1.0, 2.0]).unwrap();
        let mut rev = set.clone();
        rev.inequalities.reverse();
        let mut target = Polynomial::constant(2, 3.0);
        target.add_term(Mono(vec![2, 0]), -1.0);
        target.add_term(Mono(vec![0, 2]), -0.25);
        for s in [&set, &rev] {
            let mut prob = SdpProblem::new();
            let c = SosConstraint {
                name: "t".into(),
                target: AffinePoly::from_poly(&target),
                set: Some(s),
                multiplier_degree: 0,
            };
            compile_sos(&mut prob, &c).unwrap();
            let sol = solve(&prob, SdpOptions::default());
            assert_eq!(sol.status, SdpStatus::Feasible);
        }
    }

    #[test]
    fn monomial_order_graded_lex() {
        let ms = monomials_up_to(2, 2);
        let expect: Vec<Vec<u32>> = vec![
            vec![0, 0],
            vec![0, 1],
            vec![1, 0],
            vec![0, 2],
            vec![1, 1],
            vec![2, 0],
        ];
        assert_eq!(ms.iter().map(|m| m.0.clone()).collect::<Vec<_>>(), expect);
    }

    #[test]
    fn text_format_deterministic() {
        let mut p = Polynomial::zero(2);
        p.add_term(Mono(vec![2, 0]), 3.36);
        p.add_term(Mono(vec![1, 1]), -0.58856);
        p.add_term(Mono(vec![0, 2]), 0.1285);
        let t1 = p.to_text();
        let t2 = p.to_text();
        assert_eq!(t1, t2);
        assert_eq!(t1.lines().count(), 3);
    }
}
