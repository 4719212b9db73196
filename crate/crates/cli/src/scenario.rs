//! JSON scenario files and their translation into toolkit objects.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, ensure, Context, Result};
use mfpmp::fields::{BasisField, ControlField, ControlLaw, CuckerSmale, InteractionKernel, LinearAttraction, ZeroKernel};
use mfpmp::functionals::{
    ConstraintIntegrand, MomentMap, Potential, RunningCost, RunningIntegrand, StateConstraint, TerminalFunctional,
};
use mfpmp::pmp::{ControlProblem, MultiplierSet};
use mfpmp::{DiscreteMeasure, Matrix, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub dimension: usize,
    pub horizon: f64,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    pub initial: InitialSpec,
    pub kernel: KernelSpec,
    pub control: ControlSpec,
    #[serde(default)]
    pub running: Option<RunningSpec>,
    pub terminal: TerminalSpec,
    #[serde(default)]
    pub inequality: Vec<TerminalSpec>,
    #[serde(default)]
    pub equality: Vec<TerminalSpec>,
    #[serde(default)]
    pub state_constraints: Vec<ConstraintSpec>,
    #[serde(default)]
    pub multipliers: Option<MultiplierSpec>,
    /// Competitor coefficient vectors on the control basis.
    #[serde(default)]
    pub dictionary: Vec<Vec<f64>>,
    #[serde(default)]
    pub checks: ChecksSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// Inline atoms; weights default to uniform.
    Atoms { points: Vec<Vec<f64>>, weights: Option<Vec<f64>> },
    /// A measure CSV (`# dim=d`, rows `w,x1..xd`), relative to the scenario file.
    File { path: PathBuf },
    /// Uniform atoms drawn in `[-spread, spread]^d` from the seed.
    Random { atoms: usize, spread: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub id: String,
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BasisSpec {
    Constant(Vec<f64>),
    Linear { a: Vec<Vec<f64>>, b: Vec<f64> },
    Tanh { a: Vec<Vec<f64>>, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    /// Defaults to the unit directions.
    #[serde(default)]
    pub basis: Option<Vec<BasisSpec>>,
    /// Rows `[cell, c1..cm]`, one per cell.
    #[serde(default)]
    pub coefficients: Option<Vec<Vec<f64>>>,
    /// Same coefficients on every cell.
    #[serde(default)]
    pub constant: Option<Vec<f64>>,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MomentSpec {
    Zero,
    Identity,
    SquaredNorm,
    Affine { a: Vec<Vec<f64>>, b: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum TerminalSpec {
    Variance,
    /// `∫ sum_p c_p x_k^p`; `derivative` overrides the derivative coefficients.
    Polynomial { coeffs: Vec<f64>, derivative: Option<Vec<f64>> },
    SupportDistance { targets: Vec<Vec<f64>> },
    Affine { a: Vec<f64>, b: f64 },
    Quadratic { center: Vec<f64> },
    PairQuadratic,
    PairGaussian { sigma: f64 },
    PairCross { a: Vec<Vec<f64>> },
    Triple,
    Shifted { inner: Box<TerminalSpec>, shift: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum IntegrandSpec {
    Effort,
    /// One reference row per cell, or a single row for all cells.
    Tracking { reference: Vec<Vec<f64>> },
    LinearPosition { a: Vec<f64> },
    MomentLinear { a: Vec<f64> },
    Attraction,
    QuadraticPosition { center: Vec<f64> },
    Sum { terms: Vec<(f64, IntegrandSpec)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunningSpec {
    pub integrand: IntegrandSpec,
    #[serde(default = "zero_moments")]
    pub moments: MomentSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintIntegrandSpec {
    Affine { a: Vec<f64>, #[serde(default)] c: Vec<f64>, b: f64, #[serde(default)] rate: f64 },
    Ball { center: Vec<f64>, velocity: Vec<f64>, radius: f64 },
    MomentQuadratic { target: Vec<f64>, b: f64 },
    Bilinear { s: f64 },
    Sum { terms: Vec<(f64, ConstraintIntegrandSpec)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    pub integrand: ConstraintIntegrandSpec,
    #[serde(default = "zero_moments")]
    pub moments: MomentSpec,
}

fn zero_moments() -> MomentSpec {
    MomentSpec::Zero
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiplierSpec {
    pub lambda0: f64,
    #[serde(default)]
    pub inequality: Vec<f64>,
    #[serde(default)]
    pub equality: Vec<f64>,
    /// Per state constraint, atoms `[time, mass]` on grid nodes.
    #[serde(default)]
    pub state: Vec<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksSpec {
    #[serde(default)]
    pub pmp: PmpCheckSpec,
    #[serde(default)]
    pub needle: Option<NeedleCheckSpec>,
    #[serde(default)]
    pub gradcheck: GradcheckSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmpCheckSpec {
    /// Negate the costates before checking; a built-in negative control.
    #[serde(default)]
    pub flip_costate: bool,
    /// `C` in `max K - min K <= C dt`.
    #[serde(default)]
    pub k_constancy: Option<f64>,
    /// Needle base times for the K tables.
    #[serde(default)]
    pub k_times: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeedleSpec {
    pub coefficients: Vec<f64>,
    pub time: f64,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeedleCheckSpec {
    pub needles: Vec<NeedleSpec>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Optional bound on the smallest residual ratio.
    #[serde(default)]
    pub max_final_ratio: Option<f64>,
}

fn default_levels() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradcheckSpec {
    #[serde(default = "default_clouds")]
    pub clouds: usize,
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_clouds() -> usize {
    20
}
fn default_atoms() -> usize {
    10
}
fn default_tolerance() -> f64 {
    1e-5
}

impl Default for GradcheckSpec {
    fn default() -> Self {
        Self {
            clouds: default_clouds(),
            atoms: default_atoms(),
            tolerance: default_tolerance(),
        }
    }
}

/// Everything a command needs, built from a scenario.
pub struct Setup {
    pub grid: TimeGrid<f64>,
    pub seed: u64,
    pub mu0: DiscreteMeasure<f64>,
    pub law: ControlLaw<f64>,
    pub problem: ControlProblem<f64>,
    pub multipliers: MultiplierSet<f64>,
    pub dictionary: Vec<ControlField<f64>>,
}

pub fn load(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read scenario {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid scenario {}", path.display()))
}

fn matrix(rows: &[Vec<f64>]) -> Result<Matrix<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    ensure!(rows.iter().all(|r| r.len() == cols), "matrix rows have different lengths");
    Ok(Matrix::from_rows(rows))
}

/// Maps per-cell rows of the original grid onto a new grid by sampling at cell midpoints.
fn resample<R: Clone>(rows: &[R], from: &TimeGrid<f64>, to: &TimeGrid<f64>) -> Result<Vec<R>> {
    if rows.len() != from.steps() || from == to {
        return Ok(rows.to_vec());
    }
    (0..to.steps())
        .map(|c| {
            let mid = to.time(c) + 0.5 * to.dt();
            Ok(rows[from.cell_at(mid)?].clone())
        })
        .collect()
}

/// The `type` tag of a functional declaration.
pub fn kind(spec: &impl Serialize) -> String {
    serde_json::to_value(spec).ok().and_then(|v| v.get("type")?.as_str().map(str::to_owned)).unwrap_or_default()
}

impl Scenario {
    fn kernel(&self) -> Result<Arc<dyn InteractionKernel<f64>>> {
        let d = self.dimension;
        let kappa = || self.kernel.kappa.ok_or_else(|| anyhow!("kernel `{}` needs `kappa`", self.kernel.id));
        Ok(match self.kernel.id.as_str() {
            "zero" => Arc::new(ZeroKernel { dim: d }),
            "linear_attraction" => Arc::new(LinearAttraction { dim: d, kappa: kappa()? }),
            "cucker_smale" => Arc::new(CuckerSmale { dim: d, kappa: kappa()?, beta: self.kernel.beta.unwrap_or(1.0) }),
            other => bail!("unknown kernel id `{other}` (known: zero, linear_attraction, cucker_smale)"),
        })
    }

    fn basis(&self) -> Result<Arc<Vec<BasisField<f64>>>> {
        let Some(specs) = &self.control.basis else {
            return Ok(mfpmp::fields::constant_basis(self.dimension));
        };
        ensure!(!specs.is_empty(), "control basis is empty");
        let fields = specs
            .iter()
            .map(|b| {
                Ok(match b {
                    BasisSpec::Constant(c) => BasisField::Constant(c.clone()),
                    BasisSpec::Linear { a, b } => BasisField::Linear { a: matrix(a)?, b: b.clone() },
                    BasisSpec::Tanh { a, b } => BasisField::Tanh { a: matrix(a)?, b: b.clone() },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Arc::new(fields))
    }

    fn law(&self, basis: Arc<Vec<BasisField<f64>>>, original: &TimeGrid<f64>, grid: &TimeGrid<f64>) -> Result<ControlLaw<f64>> {
        let c = &self.control;
        let rows = match (&c.coefficients, &c.constant) {
            (Some(table), None) => {
                let mut rows = vec![None; original.steps()];
                for row in table {
                    ensure!(!row.is_empty(), "empty coefficient row");
                    let cell = row[0];
                    ensure!(cell >= 0.0 && cell.fract() == 0.0 && (cell as usize) < original.steps(), "bad cell index {cell}");
                    ensure!(rows[cell as usize].replace(row[1..].to_vec()).is_none(), "cell {cell} listed twice");
                }
                let rows = rows
                    .into_iter()
                    .enumerate()
                    .map(|(k, r)| r.ok_or_else(|| anyhow!("no coefficients for cell {k}")))
                    .collect::<Result<Vec<_>>>()?;
                resample(&rows, original, grid)?
            }
            (None, Some(row)) => vec![row.clone(); grid.steps()],
            _ => bail!("control needs exactly one of `coefficients` and `constant`"),
        };
        Ok(ControlLaw::new(self.dimension, basis, *grid, rows, c.bound)?)
    }

    fn initial(&self, base: &Path, rng: &mut ChaCha8Rng) -> Result<DiscreteMeasure<f64>> {
        let d = self.dimension;
        let mu = match &self.initial {
            InitialSpec::Atoms { points, weights } => {
                let w = weights.clone().unwrap_or_else(|| vec![1.0 / points.len() as f64; points.len()]);
                DiscreteMeasure::new(d, points, w)?
            }
            InitialSpec::File { path } => {
                let full = base.join(path);
                let file = std::fs::File::open(&full).with_context(|| format!("cannot open {}", full.display()))?;
                DiscreteMeasure::read_csv(std::io::BufReader::new(file))?
            }
            InitialSpec::Random { atoms, spread } => {
                let pts = (0..atoms * d).map(|_| rng.gen_range(-spread..=*spread)).collect();
                DiscreteMeasure::uniform(d, pts)?
            }
        };
        ensure!(mu.dim() == d, "initial measure has dimension {}, scenario says {d}", mu.dim());
        Ok(mu)
    }

    pub fn setup(&self, base: &Path, dt_override: Option<f64>, seed_override: Option<u64>) -> Result<Setup> {
        let original = TimeGrid::new(self.horizon, self.steps)?;
        let grid = match dt_override {
            None => original,
            Some(dt) => {
                let n = self.horizon / dt;
                ensure!(dt > 0.0 && (n - n.round()).abs() <= 1e-9 * n.max(1.0), "dt {dt} does not divide the horizon");
                TimeGrid::new(self.horizon, n.round() as usize)?
            }
        };
        let seed = seed_override.unwrap_or(self.seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis = self.basis()?;
        let law = self.law(Arc::clone(&basis), &original, &grid)?;
        let running = match &self.running {
            None => RunningCost::zero(),
            Some(r) => RunningCost::new(integrand(&r.integrand, &original, &grid)?, moments(&r.moments)?),
        };
        running.validate(self.dimension, Some(grid.steps()))?;
        let mut problem = ControlProblem::new(self.kernel()?, running, terminal(&self.terminal, self.dimension)?);
        for t in &self.inequality {
            problem = problem.with_inequality(terminal(t, self.dimension)?);
        }
        for t in &self.equality {
            problem = problem.with_equality(terminal(t, self.dimension)?);
        }
        for c in &self.state_constraints {
            let sc = StateConstraint::new(constraint(&c.integrand), moments(&c.moments)?);
            sc.validate(self.dimension)?;
            problem = problem.with_state_constraint(sc);
        }
        let multipliers = match &self.multipliers {
            None => MultiplierSet::normal(self.inequality.len(), self.equality.len(), self.state_constraints.len()),
            Some(m) => MultiplierSet {
                lambda0: m.lambda0,
                inequality: m.inequality.clone(),
                equality: m.equality.clone(),
                state: m.state.clone(),
            },
        };
        problem.check_multipliers(&multipliers)?;
        let dictionary = self
            .dictionary
            .iter()
            .map(|c| Ok(ControlField::new(self.dimension, Arc::clone(&basis), c.clone())?))
            .collect::<Result<Vec<_>>>()?;
        let mu0 = self.initial(base, &mut rng)?;
        Ok(Setup { grid, seed, mu0, law, problem, multipliers, dictionary })
    }
}

fn moments(m: &MomentSpec) -> Result<MomentMap<f64>> {
    Ok(match m {
        MomentSpec::Zero => MomentMap::Zero { k: 0 },
        MomentSpec::Identity => MomentMap::Identity,
        MomentSpec::SquaredNorm => MomentMap::SquaredNorm,
        MomentSpec::Affine { a, b } => MomentMap::Affine { a: matrix(a)?, b: b.clone() },
    })
}

fn terminal(t: &TerminalSpec, dim: usize) -> Result<TerminalFunctional<f64>> {
    Ok(match t {
        TerminalSpec::Variance => TerminalFunctional::Variance,
        TerminalSpec::Polynomial { coeffs, derivative } => {
            TerminalFunctional::SeparablePolynomial { coeffs: coeffs.clone(), derivative: derivative.clone() }
        }
        TerminalSpec::SupportDistance { targets } => {
            ensure!(targets.iter().all(|p| p.len() == dim), "support targets must have dimension {dim}");
            TerminalFunctional::SupportDistance { dim, targets: targets.concat() }
        }
        TerminalSpec::Affine { a, b } => TerminalFunctional::NBody(Potential::Affine { a: a.clone(), b: *b }),
        TerminalSpec::Quadratic { center } => TerminalFunctional::NBody(Potential::Quadratic { center: center.clone() }),
        TerminalSpec::PairQuadratic => TerminalFunctional::NBody(Potential::PairQuadratic),
        TerminalSpec::PairGaussian { sigma } => TerminalFunctional::NBody(Potential::PairGaussian { sigma: *sigma }),
        TerminalSpec::PairCross { a } => TerminalFunctional::NBody(Potential::PairCross { a: matrix(a)? }),
        TerminalSpec::Triple => TerminalFunctional::NBody(Potential::Triple),
        TerminalSpec::Shifted { inner, shift } => TerminalFunctional::Shifted(Box::new(terminal(inner, dim)?), *shift),
    })
}

fn integrand(i: &IntegrandSpec, from: &TimeGrid<f64>, to: &TimeGrid<f64>) -> Result<RunningIntegrand<f64>> {
    Ok(match i {
        IntegrandSpec::Effort => RunningIntegrand::Effort,
        IntegrandSpec::Tracking { reference } => RunningIntegrand::Tracking { reference: resample(reference, from, to)? },
        IntegrandSpec::LinearPosition { a } => RunningIntegrand::LinearPosition { a: a.clone() },
        IntegrandSpec::MomentLinear { a } => RunningIntegrand::MomentLinear { a: a.clone() },
        IntegrandSpec::Attraction => RunningIntegrand::Attraction,
        IntegrandSpec::QuadraticPosition { center } => RunningIntegrand::QuadraticPosition { center: center.clone() },
        IntegrandSpec::Sum { terms } => RunningIntegrand::Sum(
            terms.iter().map(|(s, t)| Ok((*s, integrand(t, from, to)?))).collect::<Result<_>>()?,
        ),
    })
}

fn constraint(c: &ConstraintIntegrandSpec) -> ConstraintIntegrand<f64> {
    match c {
        ConstraintIntegrandSpec::Affine { a, c, b, rate } => {
            ConstraintIntegrand::Affine { a: a.clone(), c: c.clone(), b: *b, rate: *rate }
        }
        ConstraintIntegrandSpec::Ball { center, velocity, radius } => {
            ConstraintIntegrand::Ball { center: center.clone(), velocity: velocity.clone(), radius: *radius }
        }
        ConstraintIntegrandSpec::MomentQuadratic { target, b } => {
            ConstraintIntegrand::MomentQuadratic { target: target.clone(), b: *b }
        }
        ConstraintIntegrandSpec::Bilinear { s } => ConstraintIntegrand::Bilinear { s: *s },
        ConstraintIntegrandSpec::Sum { terms } => {
            ConstraintIntegrand::Sum(terms.iter().map(|(s, t)| (*s, constraint(t))).collect())
        }
    }
}
