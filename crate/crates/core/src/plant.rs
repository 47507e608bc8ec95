//! Benchmark plants ("unknown" systems), excitation-signal generation,
//! single-trajectory data collection, and dictionary lifting.
//!
//! Each named plant steps its difference equations directly; the matching
//! `(A, B, M)` truth model is kept behind a sealed accessor so that test
//! oracles can cross-check data-based representations without the synthesis
//! path ever touching it.

use crate::matcore::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("unknown plant name: {0}")]
    UnknownPlant(String),
    #[error("trajectory diverged (non-finite state) at step {step}")]
    DivergedTrajectory { step: usize },
    #[error("duplicate dictionary atom at position {0}")]
    DuplicateAtom(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("excitation rank check failed: rank {rank}, required {required} (T={horizon})")]
    ExcitationRank {
        rank: usize,
        required: usize,
        horizon: usize,
    },
    #[error("csv parse error: {0}")]
    CsvParse(String),
}

/// A nonlinear dictionary atom: a monomial in the states or a transcendental
/// of a single coordinate (zero-based state index in the serialized form).
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Atom {
    Monomial(Vec<u32>),
    Sin(usize),
    Cos(usize),
}

impl Atom {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Atom::Monomial(e) => e
                .iter()
                .zip(x)
                .map(|(&p, &xi)| xi.powi(p as i32))
                .product(),
            Atom::Sin(i) => x[*i].sin(),
            Atom::Cos(i) => x[*i].cos(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Atom::Monomial(e) => {
                let mut s = String::new();
                for (i, &p) in e.iter().enumerate() {
                    if p > 0 {
                        if !s.is_empty() {
                            s.push('*');
                        }
                        s.push_str(&format!("x{}^{}", i + 1, p));
                    }
                }
                s
            }
            Atom::Sin(i) => format!("sin(x{})", i + 1),
            Atom::Cos(i) => format!("cos(x{})", i + 1),
        }
    }
}

/// Ordered function dictionary `M(x) = [x; Z(x)]`: the first `n` terms are
/// always the state coordinates, followed by the nonlinear atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionarySpec {
    n: usize,
    atoms: Vec<Atom>,
}

/// How to build the nonlinear part of a dictionary.
#[derive(Debug, Clone)]
pub enum DictionaryRequest {
    /// All monomials of total degree 2..=d (plus the states).
    MaxDegree(u32),
    /// Explicit atom list appended after the states.
    Atoms(Vec<Atom>),
}

impl DictionarySpec {
    pub fn linear(n: usize) -> Self {
        DictionarySpec { n, atoms: vec![] }
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn total_terms(&self) -> usize {
        self.n + self.atoms.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn term_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = (0..self.n).map(|i| format!("x{}", i + 1)).collect();
        out.extend(self.atoms.iter().map(|a| a.label()));
        out
    }

    /// Evaluate the full lifted vector `M(x)` (length N).
    pub fn lift_state(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_terms());
        out.extend_from_slice(x);
        out.extend(self.atoms.iter().map(|a| a.eval(x)));
        out
    }
}

/// Build a dictionary. In max-degree mode the degree-g monomials follow the
/// benchmark convention: square-free cross terms first, then higher powers
/// (for n=3, d=2: x1x2, x1x3, x2x3, x1^2, x2^2, x3^2).
pub fn build_dictionary(n: usize, req: &DictionaryRequest) -> Result<DictionarySpec, PlantError> {
    let atoms = match req {
        DictionaryRequest::MaxDegree(d) => {
            let mut atoms = Vec::new();
            for g in 2..=*d {
                let mut degree_g: Vec<Vec<u32>> = Vec::new();
                enumerate_degree(n, g, 0, &mut vec![0; n], &mut degree_g);
                degree_g.sort_by(|a, b| {
                    let ma = a.iter().max().copied().unwrap_or(0);
                    let mb = b.iter().max().copied().unwrap_or(0);
                    ma.cmp(&mb).then_with(|| b.cmp(a))
                });
                atoms.extend(degree_g.into_iter().map(Atom::Monomial));
            }
            atoms
        }
        DictionaryRequest::Atoms(list) => list.clone(),
    };
    // reject duplicates and atoms that shadow a state coordinate
    for (i, a) in atoms.iter().enumerate() {
        if let Atom::Monomial(e) = a {
            if e.len() != n {
                return Err(PlantError::DimensionMismatch(format!(
                    "atom {} exponent length {} != n={}",
                    i,
                    e.len(),
                    n
                )));
            }
            if e.iter().sum::<u32>() <= 1 {
                return Err(PlantError::DuplicateAtom(i));
            }
        }
        if atoms[..i].contains(a) {
            return Err(PlantError::DuplicateAtom(i));
        }
    }
    Ok(DictionarySpec { n, atoms })
}

fn enumerate_degree(n: usize, d: u32, idx: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if idx == n {
        if cur.iter().sum::<u32>() == d {
            out.push(cur.clone());
        }
        return;
    }
    let used: u32 = cur[..idx].iter().sum();
    for e in 0..=(d - used) {
        cur[idx] = e;
        enumerate_degree(n, d, idx + 1, cur, out);
    }
    cur[idx] = 0;
}

/// Truth model `x+ = A M(x) + B u`, available only to test oracles.
#[derive(Debug, Clone)]
pub struct TruthModel {
    pub a: Mat,
    pub b: Mat,
    pub dict: DictionarySpec,
}

#[derive(Debug, Clone, PartialEq)]
enum PlantKind {
    Rlc,
    DcMotor,
    Car,
    Lorenz,
    Custom,
}

/// A discrete-time plant with a deterministic step map.
#[derive(Debug, Clone)]
pub struct PlantModel {
    name: String,
    kind: PlantKind,
    state_dim: usize,
    input_dim: usize,
    default_input_bound: f64,
    truth: Option<TruthModel>,
}

const RLC_TAU: f64 = 0.5;
const RLC_R: f64 = 2.0;
const RLC_L: f64 = 9.0;
const RLC_C: f64 = 0.5;

const DC_TAU: f64 = 0.01;
const DC_R: f64 = 1.0;
const DC_L: f64 = 0.01;
const DC_J: f64 = 0.01;
const DC_B: f64 = 1.0;
const DC_KDC: f64 = 0.01;

const CAR_TAU: f64 = 0.1;

const LORENZ_RHO: f64 = 28.0;
const LORENZ_SIGMA: f64 = 10.0;
const LORENZ_BETA: f64 = 8.0 / 3.0;
const LORENZ_TAU: f64 = 1e-3;

/// Construct one of the benchmark plants by name.
pub fn make_plant(name: &str) -> Result<PlantModel, PlantError> {
    match name {
        "rlc" => {
            let a = Mat::from_rows(&[
                &[1.0 - RLC_TAU * RLC_R / RLC_L, -1.0 / RLC_L],
                &[RLC_TAU / RLC_C, 1.0],
            ]);
            Ok(PlantModel {
                name: name.into(),
                kind: PlantKind::Rlc,
                state_dim: 2,
                input_dim: 2,
                // the oscillator is marginally stable; small probing inputs
                // keep the identified closed loop near the open loop
                default_input_bound: 0.05,
                truth: Some(TruthModel {
                    a,
                    b: Mat::identity(2),
                    dict: DictionarySpec::linear(2),
                }),
            })
        }
        "dcmotor" => {
            let a = Mat::from_rows(&[
                &[1.0 - DC_TAU * DC_R / DC_L, -DC_TAU * DC_KDC / DC_L],
                &[DC_TAU * DC_KDC / DC_J, 1.0 - DC_TAU * DC_B / DC_J],
            ]);
            Ok(PlantModel {
                name: name.into(),
                kind: PlantKind::DcMotor,
                state_dim: 2,
                input_dim: 2,
                default_input_bound: 0.5,
                truth: Some(TruthModel {
                    a,
                    b: Mat::identity(2),
                    dict: DictionarySpec::linear(2),
                }),
            })
        }
        "car" => {
            let t = CAR_TAU;
            let a = Mat::from_rows(&[
                &[1.0, 0.0, 0.0, t, 0.0],
                &[0.0, 1.0, 0.0, 0.0, t],
                &[0.0, 0.0, 1.0 + t, 0.0, 0.0],
            ]);
            let b = Mat::diag(&[t, t, t]);
            let dict = build_dictionary(3, &DictionaryRequest::Atoms(vec![Atom::Sin(2), Atom::Cos(2)]))?;
            Ok(PlantModel {
                name: name.into(),
                kind: PlantKind::Car,
                state_dim: 3,
                input_dim: 3,
                default_input_bound: 1.0,
                truth: Some(TruthModel { a, b, dict }),
            })
        }
        "lorenz" => {
            let t = LORENZ_TAU;
            let a = Mat::from_rows(&[
                &[1.0 + t * LORENZ_SIGMA, t * LORENZ_SIGMA, 0.0, 0.0, 0.0],
                &[t * LORENZ_RHO, 1.0 - t, 0.0, 0.0, -t],
                &[0.0, 0.0, 1.0 - t * LORENZ_BETA, t, 0.0],
            ]);
            let b = Mat::diag(&[t * LORENZ_SIGMA, t, t]);
            let dict = build_dictionary(
                3,
                &DictionaryRequest::Atoms(vec![
                    Atom::Monomial(vec![1, 1, 0]),
                    Atom::Monomial(vec![1, 0, 1]),
                ]),
            )?;
            Ok(PlantModel {
                name: name.into(),
                kind: PlantKind::Lorenz,
                state_dim: 3,
                input_dim: 3,
                default_input_bound: 1.0,
                truth: Some(TruthModel { a, b, dict }),
            })
        }
        other => Err(PlantError::UnknownPlant(other.into())),
    }
}

impl PlantModel {
    /// Plant in dictionary form `x+ = A M(x) + B u` from explicit matrices.
    pub fn custom(name: &str, a: Mat, b: Mat, dict: DictionarySpec) -> Result<Self, PlantError> {
        let n = a.rows();
        if a.cols() != dict.total_terms() || b.rows() != n {
            return Err(PlantError::DimensionMismatch(
                "A must be n x N and B n x m for the given dictionary".into(),
            ));
        }
        Ok(PlantModel {
            name: name.into(),
            kind: PlantKind::Custom,
            state_dim: n,
            input_dim: b.cols(),
            default_input_bound: 1.0,
            truth: Some(TruthModel { a, b, dict }),
        })
    }

    /// Linear plant `x+ = A x + B u`.
    pub fn custom_linear(name: &str, a: Mat, b: Mat) -> Result<Self, PlantError> {
        let n = a.rows();
        PlantModel::custom(name, a, b, DictionarySpec::linear(n))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn default_input_bound(&self) -> f64 {
        self.default_input_bound
    }

    /// One step of the (to the synthesis path, unknown) dynamics.
    pub fn step(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.state_dim);
        debug_assert_eq!(u.len(), self.input_dim);
        match self.kind {
            PlantKind::Rlc => vec![
                (1.0 - RLC_TAU * RLC_R / RLC_L) * x[0] - x[1] / RLC_L + u[0],
                x[1] + RLC_TAU * (x[0] / RLC_C) + u[1],
            ],
            PlantKind::DcMotor => vec![
                x[0] - DC_TAU * (DC_R / DC_L * x[0] + DC_KDC / DC_L * x[1]) + u[0],
                x[1] + DC_TAU * (DC_KDC / DC_J * x[0] - DC_B / DC_J * x[1]) + u[1],
            ],
            PlantKind::Car => vec![
                x[0] + CAR_TAU * x[2].sin() + CAR_TAU * u[0],
                x[1] + CAR_TAU * x[2].cos() + CAR_TAU * u[1],
                (1.0 + CAR_TAU) * x[2] + CAR_TAU * u[2],
            ],
            PlantKind::Lorenz => vec![
                x[0] + LORENZ_TAU * LORENZ_SIGMA * (x[0] + x[1] + u[0]),
                x[1] + LORENZ_TAU * LORENZ_RHO * x[0] - LORENZ_TAU * x[1]
                    - LORENZ_TAU * x[0] * x[2]
                    + LORENZ_TAU * u[1],
                x[2] + LORENZ_TAU * (x[0] * x[1] - LORENZ_BETA * x[2] + u[2]),
            ],
            PlantKind::Custom => {
                let t = self.truth.as_ref().expect("custom plant has truth");
                let lifted = t.dict.lift_state(x);
                let mut out = t.a.matvec(&lifted);
                let bu = t.b.matvec(u);
                for (o, v) in out.iter_mut().zip(bu) {
                    *o += v;
                }
                out
            }
        }
    }

    /// Truth matrices and dictionary for test oracles only; synthesis must
    /// never look behind this.
    #[doc(hidden)]
    pub fn sealed_truth(&self) -> Option<&TruthModel> {
        self.truth.as_ref()
    }
}

/// The collected matrices of a single input-state trajectory.
#[derive(Debug, Clone)]
pub struct TrajectoryData {
    /// m x T input samples.
    pub u0: Mat,
    /// n x T states.
    pub x0: Mat,
    /// n x T successor states.
    pub x1: Mat,
    pub horizon: usize,
    pub seed: Option<u64>,
}

/// Excitation policy: i.i.d. uniform inputs within per-coordinate bounds.
#[derive(Debug, Clone)]
pub struct Excitation {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub seed: u64,
}

impl Excitation {
    pub fn symmetric(m: usize, bound: f64, seed: u64) -> Self {
        Excitation {
            lo: vec![-bound; m],
            hi: vec![bound; m],
            seed,
        }
    }
}

/// Roll the plant for `horizon` steps from `x0` under uniform random inputs.
/// Bitwise reproducible for identical arguments.
pub fn collect(
    plant: &PlantModel,
    x_init: &[f64],
    excitation: &Excitation,
    horizon: usize,
) -> Result<TrajectoryData, PlantError> {
    assert!(horizon >= 1, "horizon must be >= 1");
    if x_init.len() != plant.state_dim() || excitation.lo.len() != plant.input_dim() {
        return Err(PlantError::DimensionMismatch(
            "x0/excitation dimensions must match the plant".into(),
        ));
    }
    let n = plant.state_dim();
    let m = plant.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(excitation.seed);
    let mut u0 = Mat::zeros(m, horizon);
    let mut x0 = Mat::zeros(n, horizon);
    let mut x1 = Mat::zeros(n, horizon);

    let mut x = x_init.to_vec();
    for t in 0..horizon {
        let u: Vec<f64> = (0..m)
            .map(|i| {
                if excitation.hi[i] > excitation.lo[i] {
                    rng.gen_range(excitation.lo[i]..excitation.hi[i])
                } else {
                    excitation.lo[i]
                }
            })
            .collect();
        let next = plant.step(&x, &u);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(PlantError::DivergedTrajectory { step: t });
        }
        u0.set_column(t, &u);
        x0.set_column(t, &x);
        x1.set_column(t, &next);
        x = next;
    }
    Ok(TrajectoryData {
        u0,
        x0,
        x1,
        horizon,
        seed: Some(excitation.seed),
    })
}

/// Lifted data matrix `M0` (N x T): states stacked over atom evaluations.
#[derive(Debug, Clone)]
pub struct LiftedData {
    pub m0: Mat,
}

pub fn lift(data: &TrajectoryData, dict: &DictionarySpec) -> Result<LiftedData, PlantError> {
    let n = data.x0.rows();
    if dict.state_dim() != n {
        return Err(PlantError::DimensionMismatch(format!(
            "dictionary has n={}, data has n={}",
            dict.state_dim(),
            n
        )));
    }
    let nn = dict.total_terms();
    let t = data.horizon;
    let mut m0 = Mat::zeros(nn, t);
    for col in 0..t {
        let x = data.x0.column(col);
        m0.set_column(col, &dict.lift_state(&x));
    }
    Ok(LiftedData { m0 })
}

/// Persistency-of-excitation check: full row rank and horizon strictly
/// longer than the required rank.
#[derive(Debug, Clone, Copy)]
pub struct ExcitationCheck {
    pub ok: bool,
    pub rank: usize,
    pub deficiency: usize,
}

pub fn check_excitation(data_matrix: &Mat, required_rank: usize) -> ExcitationCheck {
    let rank = crate::matcore::numerical_rank(data_matrix, None);
    let rows = data_matrix.rows();
    let t = data_matrix.cols();
    let ok = rank == rows && t > required_rank;
    ExcitationCheck {
        ok,
        rank,
        deficiency: rows.saturating_sub(rank),
    }
}

/// Collect with automatic reseeding (seed, seed+1, ...) until the lifted
/// data matrix passes the excitation check, up to `retries` attempts.
pub fn collect_excited(
    plant: &PlantModel,
    x_init: &[f64],
    excitation: &Excitation,
    horizon: usize,
    dict: &DictionarySpec,
    retries: usize,
) -> Result<(TrajectoryData, LiftedData), PlantError> {
    let mut last = None;
    for attempt in 0..=retries {
        let mut exc = excitation.clone();
        exc.seed = excitation.seed.wrapping_add(attempt as u64);
        let data = collect(plant, x_init, &exc, horizon)?;
        let lifted = lift(&data, dict)?;
        let check = check_excitation(&lifted.m0, dict.total_terms());
        if check.ok {
            return Ok((data, lifted));
        }
        last = Some(check);
    }
    let check = last.unwrap();
    Err(PlantError::ExcitationRank {
        rank: check.rank,
        required: dict.total_terms(),
        horizon,
    })
}

// ---------------------------------------------------------------------------
// trajectory CSV

/// Write the trajectory in the interchange CSV format:
/// header `t,u1..um,x1..xn,x1next..xnnext`, 17 significant digits.
pub fn trajectory_to_csv(data: &TrajectoryData) -> String {
    let m = data.u0.rows();
    let n = data.x0.rows();
    let mut out = String::from("t");
    for i in 0..m {
        out.push_str(&format!(",u{}", i + 1));
    }
    for i in 0..n {
        out.push_str(&format!(",x{}", i + 1));
    }
    for i in 0..n {
        out.push_str(&format!(",x{}next", i + 1));
    }
    out.push('\n');
    for t in 0..data.horizon {
        out.push_str(&format!("{}", t));
        for i in 0..m {
            out.push_str(&format!(",{:.16e}", data.u0.get(i, t)));
        }
        for i in 0..n {
            out.push_str(&format!(",{:.16e}", data.x0.get(i, t)));
        }
        for i in 0..n {
            out.push_str(&format!(",{:.16e}", data.x1.get(i, t)));
        }
        out.push('\n');
    }
    out
}

pub fn trajectory_from_csv(text: &str) -> Result<TrajectoryData, PlantError> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| PlantError::CsvParse("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let m = cols.iter().filter(|c| c.starts_with('u')).count();
    let n = cols
        .iter()
        .filter(|c| c.starts_with('x') && !c.ends_with("next"))
        .count();
    if cols.len() != 1 + m + 2 * n || m == 0 || n == 0 {
        return Err(PlantError::CsvParse(format!("bad header: {header}")));
    }
    let rows: Vec<Vec<f64>> = lines
        .map(|l| {
            l.split(',')
                .skip(1)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| PlantError::CsvParse(format!("bad value {v}: {e}")))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let horizon = rows.len();
    if horizon == 0 {
        return Err(PlantError::CsvParse("no data rows".into()));
    }
    let mut u0 = Mat::zeros(m, horizon);
    let mut x0 = Mat::zeros(n, horizon);
    let mut x1 = Mat::zeros(n, horizon);
    for (t, row) in rows.iter().enumerate() {
        if row.len() != m + 2 * n {
            return Err(PlantError::CsvParse(format!("row {t} has wrong arity")));
        }
        for i in 0..m {
            u0.set(i, t, row[i]);
        }
        for i in 0..n {
            x0.set(i, t, row[m + i]);
            x1.set(i, t, row[m + n + i]);
        }
    }
    Ok(TrajectoryData {
        u0,
        x0,
        x1,
        horizon,
        seed: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rlc_equilibrium_and_step() {
        let p = make_plant("rlc").unwrap();
        assert_eq!(p.step(&[0.0, 0.0], &[0.0, 0.0]), vec![0.0, 0.0]);
        let x = p.step(&[1.0, 0.0], &[0.0, 0.0]);
        assert!((x[0] - (1.0 - 0.5 * 2.0 / 9.0)).abs() < 1e-15);
        assert!((x[1] - 1.0).abs() < 1e-15);
        let y = p.step(&[0.0, 1.0], &[0.0, 0.0]);
        assert!((y[0] + 1.0 / 9.0).abs() < 1e-15);
        assert!((y[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn car_origin_step() {
        let p = make_plant("car").unwrap();
        let x = p.step(&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]);
        assert!((x[0] - 0.0).abs() < 1e-15);
        assert!((x[1] - 0.1).abs() < 1e-15);
        assert!((x[2] - 0.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_plant_errors() {
        assert!(make_plant("segway").is_err());
    }

    #[test]
    fn truth_model_matches_step_for_all_benchmarks() {
        // guards transcription of the difference equations into (A, B, M)
        for name in ["rlc", "dcmotor", "car", "lorenz"] {
            let p = make_plant(name).unwrap();
            let truth = p.sealed_truth().unwrap();
            let n = p.state_dim();
            let m = p.input_dim();
            let mut state = 0.37_f64;
            let mut next_val = move || {
                state = (state * 997.0 + 0.123).fract();
                state * 2.0 - 1.0
            };
            for _ in 0..25 {
                let x: Vec<f64> = (0..n).map(|_| next_val() * 2.0).collect();
                let u: Vec<f64> = (0..m).map(|_| next_val()).collect();
                let direct = p.step(&x, &u);
                let lifted = truth.dict.lift_state(&x);
                let mut model = truth.a.matvec(&lifted);
                for (o, v) in model.iter_mut().zip(truth.b.matvec(&u)) {
                    *o += v;
                }
                for (d, mv) in direct.iter().zip(&model) {
                    assert!((d - mv).abs() <= 1e-14, "{name}: {d} vs {mv}");
                }
            }
        }
    }

    #[test]
    fn collect_single_step() {
        let p = make_plant("rlc").unwrap();
        let exc = Excitation::symmetric(2, 0.5, 42);
        let d = collect(&p, &[0.2, 0.3], &exc, 1).unwrap();
        assert_eq!(d.u0.cols(), 1);
        let next = p.step(&d.x0.column(0), &d.u0.column(0));
        for (a, b) in next.iter().zip(d.x1.column(0)) {
            assert_eq!(*a, b);
        }
    }

    #[test]
    fn collect_reproducible_bitwise() {
        let p = make_plant("lorenz").unwrap();
        let exc = Excitation::symmetric(3, 1.0, 7);
        let d1 = collect(&p, &[1.0, 1.0, 1.0], &exc, 50).unwrap();
        let d2 = collect(&p, &[1.0, 1.0, 1.0], &exc, 50).unwrap();
        assert_eq!(d1.u0.data(), d2.u0.data());
        assert_eq!(d1.x1.data(), d2.x1.data());
    }

    #[test]
    fn collect_self_consistent() {
        let p = make_plant("car").unwrap();
        let exc = Excitation::symmetric(3, 1.0, 3);
        let d = collect(&p, &[-3.0, -3.0, 3.0], &exc, 20).unwrap();
        for t in 0..d.horizon {
            let next = p.step(&d.x0.column(t), &d.u0.column(t));
            for (a, b) in next.iter().zip(d.x1.column(t)) {
                assert_eq!(*a, b);
            }
        }
    }

    #[test]
    fn zero_excitation_from_origin_fails_rank() {
        let p = make_plant("rlc").unwrap();
        let exc = Excitation {
            lo: vec![0.0, 0.0],
            hi: vec![0.0, 0.0],
            seed: 1,
        };
        let d = collect(&p, &[0.0, 0.0], &exc, 10).unwrap();
        let check = check_excitation(&d.x0, 2);
        assert!(!check.ok);
        assert_eq!(check.rank, 0);
    }

    #[test]
    fn excitation_check_cases() {
        let x = Mat::identity(2).hstack(&Mat::zeros(2, 1));
        let c = check_excitation(&x, 2);
        assert!(c.ok);
        assert_eq!(c.rank, 2);
        // T = n fails the strict horizon requirement
        let c2 = check_excitation(&Mat::identity(2), 2);
        assert!(!c2.ok);
    }

    #[test]
    fn lorenz_m0_full_rank_t50() {
        let p = make_plant("lorenz").unwrap();
        let dict = build_dictionary(3, &DictionaryRequest::MaxDegree(2)).unwrap();
        let exc = Excitation::symmetric(3, 1.0, 11);
        let (_, lifted) = collect_excited(&p, &[1.0, -1.0, 1.5], &exc, 50, &dict, 10).unwrap();
        let check = check_excitation(&lifted.m0, 9);
        assert!(check.ok, "rank {}", check.rank);
    }

    #[test]
    fn dictionary_degree2_order_matches_benchmark() {
        let d = build_dictionary(3, &DictionaryRequest::MaxDegree(2)).unwrap();
        assert_eq!(d.total_terms(), 9);
        let labels = d.term_labels();
        assert_eq!(
            labels,
            vec![
                "x1", "x2", "x3", "x1^1*x2^1", "x1^1*x3^1", "x2^1*x3^1", "x1^2", "x2^2", "x3^2"
            ]
        );
    }

    #[test]
    fn dictionary_car_extended() {
        let d = build_dictionary(
            3,
            &DictionaryRequest::Atoms(vec![
                Atom::Sin(2),
                Atom::Cos(2),
                Atom::Monomial(vec![2, 0, 0]),
                Atom::Monomial(vec![0, 2, 0]),
            ]),
        )
        .unwrap();
        assert_eq!(d.total_terms(), 7);
    }

    #[test]
    fn dictionary_linear_and_duplicates() {
        let d = build_dictionary(2, &DictionaryRequest::MaxDegree(1)).unwrap();
        assert_eq!(d.total_terms(), 2);
        let dup = build_dictionary(
            2,
            &DictionaryRequest::Atoms(vec![Atom::Sin(0), Atom::Sin(0)]),
        );
        assert!(matches!(dup, Err(PlantError::DuplicateAtom(1))));
    }

    #[test]
    fn lift_cases() {
        // linear dictionary: M0 == X0
        let p = make_plant("rlc").unwrap();
        let exc = Excitation::symmetric(2, 0.5, 5);
        let d = collect(&p, &[0.1, 0.2], &exc, 8).unwrap();
        let lifted = lift(&d, &DictionarySpec::linear(2)).unwrap();
        assert_eq!(lifted.m0.data(), d.x0.data());

        // single column with product atom
        let dict = build_dictionary(
            2,
            &DictionaryRequest::Atoms(vec![Atom::Monomial(vec![1, 1])]),
        )
        .unwrap();
        let lifted_col = dict.lift_state(&[1.0, 2.0]);
        assert_eq!(lifted_col, vec![1.0, 2.0, 2.0]);

        // car dictionary at x3 = pi/2
        let car_dict = build_dictionary(
            3,
            &DictionaryRequest::Atoms(vec![
                Atom::Sin(2),
                Atom::Cos(2),
                Atom::Monomial(vec![2, 0, 0]),
                Atom::Monomial(vec![0, 2, 0]),
            ]),
        )
        .unwrap();
        let v = car_dict.lift_state(&[0.0, 0.0, std::f64::consts::FRAC_PI_2]);
        assert!((v[3] - 1.0).abs() < 1e-15);
        assert!(v[4].abs() < 1e-15);
        assert_eq!(&v[5..], &[0.0, 0.0]);
    }

    #[test]
    fn csv_roundtrip() {
        let p = make_plant("dcmotor").unwrap();
        let exc = Excitation::symmetric(2, 0.5, 9);
        let d = collect(&p, &[0.2, 0.3], &exc, 12).unwrap();
        let text = trajectory_to_csv(&d);
        let back = trajectory_from_csv(&text).unwrap();
        assert_eq!(back.horizon, 12);
        for t in 0..12 {
            for i in 0..2 {
                assert_eq!(back.u0.get(i, t), d.u0.get(i, t));
                assert_eq!(back.x0.get(i, t), d.x0.get(i, t));
                assert_eq!(back.x1.get(i, t), d.x1.get(i, t));
            }
        }
    }
}
