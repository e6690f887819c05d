//! Linear Gaussian structural equation models with optional feedback.
//!
//! The model is
//!
//! ```text
//! X = kappa * tau * Y + Gamma' Z + T' C + sigma * N_X
//! Y = f . X + kappa * eps . C + sigma * N_Y
//! ```
//!
//! with exogenous `Z ~ N(0, z_cov)`, `C ~ N(0, c_cov)` and standard normal
//! noise. `tau = 0` gives the acyclic model. The `Z` block acts as an
//! instrument when `Gamma` is non-empty; whether downstream code treats it
//! as an instrument or as an augmentation parameter is recorded in
//! [`DatasetMeta::z_role`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::augmentation::DaOperator;
use crate::error::{check_dim, invalid, Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::math;
use crate::rng;

/// Parameters of the linear SEM.
#[derive(Debug, Clone, PartialEq)]
pub struct SemSpec {
    /// Feedback loading of `Y` on `X` (length `m`).
    pub tau: Vector,
    /// Causal effect of `X` on `Y` (length `m`).
    pub f: Vector,
    /// Instrument loading `Gamma'`, `m x k`.
    pub gamma_mat: Matrix,
    /// Confounder loading on `X`, `m x q`.
    pub conf_x: Matrix,
    /// Confounder loading on `Y` (length `q`).
    pub conf_y: Vector,
    pub sigma: f64,
    /// Confounding strength; also scales the feedback loop.
    pub kappa: f64,
    /// Covariance of `Z`; identity when `None`.
    pub z_cov: Option<Matrix>,
    /// Covariance of `C`; identity when `None`.
    pub c_cov: Option<Matrix>,
}

impl SemSpec {
    /// Acyclic model without instruments, `sigma = 1` and `kappa = 1`.
    pub fn new(f: Vector, conf_x: Matrix, conf_y: Vector) -> Self {
        let m = f.len();
        SemSpec {
            tau: Vector::zeros(m),
            f,
            gamma_mat: Matrix::zeros(m, 0),
            conf_x,
            conf_y,
            sigma: 1.0,
            kappa: 1.0,
            z_cov: None,
            c_cov: None,
        }
    }

    pub fn with_tau(mut self, tau: Vector) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_instruments(mut self, gamma_mat: Matrix) -> Self {
        self.gamma_mat = gamma_mat;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn m(&self) -> usize {
        self.f.len()
    }

    pub fn k(&self) -> usize {
        self.gamma_mat.ncols()
    }

    pub fn q(&self) -> usize {
        self.conf_x.ncols()
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let m = self.m();
        if m == 0 {
            return Err(invalid("treatment dimension m must be positive"));
        }
        check_dim("tau", m, self.tau.len())?;
        check_dim("gamma_mat rows", m, self.gamma_mat.nrows())?;
        check_dim("conf_x rows", m, self.conf_x.nrows())?;
        check_dim("conf_y", self.q(), self.conf_y.len())?;
        if let Some(cov) = &self.z_cov {
            check_dim("z_cov rows", self.k(), cov.nrows())?;
            check_dim("z_cov cols", self.k(), cov.ncols())?;
        }
        if let Some(cov) = &self.c_cov {
            check_dim("c_cov rows", self.q(), cov.nrows())?;
            check_dim("c_cov cols", self.q(), cov.ncols())?;
        }
        Ok(())
    }

    /// Loop gain `kappa * f . tau` of the feedback cycle.
    pub fn loop_gain(&self) -> f64 {
        self.kappa * self.f.dot(&self.tau)
    }

    pub fn is_solvable(&self) -> bool {
        math::abs(1.0 - self.loop_gain()) > SOLVABILITY_EPS
    }

    pub fn is_stable(&self) -> bool {
        math::abs(self.loop_gain()) < 1.0
    }

    fn require_solvable(&self) -> Result<()> {
        self.check_dimensions()?;
        if self.is_solvable() {
            Ok(())
        } else {
            Err(Error::Unsolvable {
                det: 1.0 - self.loop_gain(),
            })
        }
    }

    fn require_stable(&self) -> Result<()> {
        self.require_solvable()?;
        if self.is_stable() {
            Ok(())
        } else {
            Err(Error::Unstable {
                gain: math::abs(self.loop_gain()),
            })
        }
    }

    /// FNV-1a hash over dimensions and the bit patterns of every parameter.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |v: u64| {
            for b in v.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for d in [self.m(), self.k(), self.q()] {
            eat(d as u64);
        }
        let blocks: [&[f64]; 5] = [
            self.tau.as_slice(),
            self.f.as_slice(),
            self.gamma_mat.as_slice(),
            self.conf_x.as_slice(),
            self.conf_y.as_slice(),
        ];
        for block in blocks {
            for v in block {
                eat(v.to_bits());
            }
        }
        eat(self.sigma.to_bits());
        eat(self.kappa.to_bits());
        for cov in [&self.z_cov, &self.c_cov] {
            match cov {
                Some(c) => c.iter().for_each(|v| eat(v.to_bits())),
                None => eat(u64::MAX),
            }
        }
        h
    }

    /// Population covariance of `(X, Y)` (`(m+1) x (m+1)`, `Y` last) and its
    /// cross-covariance with `Z` (`(m+1) x k`).
    pub fn population_moments(&self) -> Result<PopulationMoments> {
        self.require_solvable()?;
        let m = self.m();
        let r = reduced_form_matrix(self)?;
        let mut b_z = Matrix::zeros(m + 1, self.k());
        b_z.view_mut((0, 0), (m, self.k())).copy_from(&self.gamma_mat);
        let mut b_c = Matrix::zeros(m + 1, self.q());
        b_c.view_mut((0, 0), (m, self.q())).copy_from(&self.conf_x);
        for j in 0..self.q() {
            b_c[(m, j)] = self.kappa * self.conf_y[j];
        }
        let sz = self
            .z_cov
            .clone()
            .unwrap_or_else(|| Matrix::identity(self.k(), self.k()));
        let sc = self
            .c_cov
            .clone()
            .unwrap_or_else(|| Matrix::identity(self.q(), self.q()));
        let noise = &b_z * &sz * b_z.transpose()
            + &b_c * sc * b_c.transpose()
            + Matrix::identity(m + 1, m + 1) * (self.sigma * self.sigma);
        let cov_w = &r * noise * r.transpose();
        let cov_wz = &r * b_z * sz;
        Ok(PopulationMoments { cov_w, cov_wz })
    }
}

const SOLVABILITY_EPS: f64 = 1e-12;

/// Population second moments of a solvable [`SemSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationMoments {
    /// Covariance of `(X, Y)`, `Y` in the last row/column.
    pub cov_w: Matrix,
    /// `Cov((X, Y), Z)`.
    pub cov_wz: Matrix,
}

impl PopulationMoments {
    pub fn m(&self) -> usize {
        self.cov_w.nrows() - 1
    }

    pub fn cov_x(&self) -> Matrix {
        let m = self.m();
        self.cov_w.view((0, 0), (m, m)).into_owned()
    }

    pub fn cov_xy(&self) -> Vector {
        let m = self.m();
        self.cov_w.view((0, m), (m, 1)).column(0).into_owned()
    }
}

/// One joint draw of the exogenous variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExogenousDraw {
    pub z: Vector,
    pub c: Vector,
    pub n_x: Vector,
    pub n_y: f64,
}

/// What the `z` block of a [`Dataset`] represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZRole {
    #[default]
    Instrument,
    /// Augmentation parameters `G`.
    DaParameter,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetMeta {
    pub seed: Option<u64>,
    pub spec_fingerprint: Option<u64>,
    pub centered: bool,
    pub z_role: ZRole,
}

/// Column-major sample table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// `n x m` treatments.
    pub x: Matrix,
    pub y: Vector,
    /// `n x k` instruments or augmentation parameters.
    pub z: Option<Matrix>,
    /// `n x q` confounders.
    pub c: Option<Matrix>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vector) -> Result<Self> {
        let data = Dataset {
            x,
            y,
            z: None,
            c: None,
            meta: DatasetMeta::default(),
        };
        data.validate()?;
        Ok(data)
    }

    pub fn with_z(mut self, z: Matrix, role: ZRole) -> Result<Self> {
        check_dim("z rows", self.n_samples(), z.nrows())?;
        self.z = Some(z);
        self.meta.z_role = role;
        Ok(self)
    }

    pub fn with_c(mut self, c: Matrix) -> Result<Self> {
        check_dim("c rows", self.n_samples(), c.nrows())?;
        self.c = Some(c);
        Ok(self)
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.x.nrows();
        if n == 0 {
            return Err(Error::Empty("dataset has no rows"));
        }
        check_dim("y length", n, self.y.len())?;
        if let Some(z) = &self.z {
            check_dim("z rows", n, z.nrows())?;
        }
        if let Some(c) = &self.c {
            check_dim("c rows", n, c.nrows())?;
        }
        Ok(())
    }

    /// Subtracts column means from every block.
    pub fn centered(&self) -> Dataset {
        let (x, _) = linalg::center_columns(&self.x);
        let (y, _) = linalg::center_vector(&self.y);
        let z = self.z.as_ref().map(|z| linalg::center_columns(z).0);
        let c = self.c.as_ref().map(|c| linalg::center_columns(c).0);
        let mut meta = self.meta.clone();
        meta.centered = true;
        Dataset { x, y, z, c, meta }
    }

    /// Rows selected by `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select_rows(rows.iter()),
            y: Vector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i])),
            z: self.z.as_ref().map(|z| z.select_rows(rows.iter())),
            c: self.c.as_ref().map(|c| c.select_rows(rows.iter())),
            meta: self.meta.clone(),
        }
    }
}

/// One named invariant check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub solvable: bool,
    /// Contraction condition for fixed-point sampling; does not affect
    /// [`ValidationReport::passed`].
    pub stable: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.name != "stability")
            .all(|c| c.passed)
    }
}

/// Checks every invariant of `spec` and reports instead of failing.
pub fn validate_spec(spec: &SemSpec) -> ValidationReport {
    let mut checks = Vec::new();
    let dims = spec.check_dimensions();
    checks.push(Check {
        name: "dimensions",
        passed: dims.is_ok(),
        detail: match &dims {
            Ok(()) => format!("m={} k={} q={}", spec.m(), spec.k(), spec.q()),
            Err(e) => format!("{e}"),
        },
    });
    checks.push(Check {
        name: "sigma",
        passed: spec.sigma > 0.0 && spec.sigma.is_finite(),
        detail: format!("sigma = {}", spec.sigma),
    });
    checks.push(Check {
        name: "kappa",
        passed: spec.kappa >= 0.0 && spec.kappa.is_finite(),
        detail: format!("kappa = {}", spec.kappa),
    });
    let finite = [
        spec.tau.as_slice(),
        spec.f.as_slice(),
        spec.gamma_mat.as_slice(),
        spec.conf_x.as_slice(),
        spec.conf_y.as_slice(),
    ]
    .iter()
    .all(|b| b.iter().all(|v| v.is_finite()));
    checks.push(Check {
        name: "finite",
        passed: finite,
        detail: String::from("all loadings finite"),
    });
    for (name, cov) in [("z_cov", &spec.z_cov), ("c_cov", &spec.c_cov)] {
        if let Some(cov) = cov {
            let res = linalg::psd_sqrt(cov);
            checks.push(Check {
                name,
                passed: res.is_ok(),
                detail: match res {
                    Ok(_) => String::from("symmetric PSD"),
                    Err(e) => format!("{e}"),
                },
            });
        }
    }
    let (solvable, stable) = if dims.is_ok() {
        (spec.is_solvable(), spec.is_stable())
    } else {
        (false, false)
    };
    let gain = if dims.is_ok() { spec.loop_gain() } else { f64::NAN };
    checks.push(Check {
        name: "solvability",
        passed: solvable,
        detail: format!("kappa * f.tau = {gain}, must differ from 1"),
    });
    checks.push(Check {
        name: "stability",
        passed: stable,
        detail: format!("|kappa * f.tau| = {}, must be < 1 for iterative sampling", math::abs(gain)),
    });
    ValidationReport {
        checks,
        solvable,
        stable,
    }
}

/// Inverse of the block matrix `[[I_m, -kappa tau], [-f', 1]]`.
///
/// Maps the exogenous offsets `(a, b)` to the equilibrium `(x, y)`.
pub fn reduced_form_matrix(spec: &SemSpec) -> Result<Matrix> {
    spec.require_solvable()?;
    let m = spec.m();
    let mut block = Matrix::identity(m + 1, m + 1);
    for i in 0..m {
        block[(i, m)] = -spec.kappa * spec.tau[i];
        block[(m, i)] = -spec.f[i];
    }
    block.try_inverse().ok_or(Error::Unsolvable {
        det: 1.0 - spec.loop_gain(),
    })
}

/// Precomputed square-root factors for exogenous draws.
#[derive(Debug, Clone)]
struct ExogenousSampler {
    k: usize,
    q: usize,
    m: usize,
    z_factor: Option<Matrix>,
    c_factor: Option<Matrix>,
}

impl ExogenousSampler {
    fn new(spec: &SemSpec) -> Result<Self> {
        Ok(ExogenousSampler {
            k: spec.k(),
            q: spec.q(),
            m: spec.m(),
            z_factor: spec.z_cov.as_ref().map(linalg::psd_sqrt).transpose()?,
            c_factor: spec.c_cov.as_ref().map(linalg::psd_sqrt).transpose()?,
        })
    }

    // Order is fixed: Z, C, N_X, N_Y.
    fn draw(&self, seed: u64, row: usize) -> ExogenousDraw {
        let mut rng = rng::row_stream(seed, row);
        let mut z = rng::standard_normals(&mut rng, self.k);
        if let Some(l) = &self.z_factor {
            z = l * z;
        }
        let mut c = rng::standard_normals(&mut rng, self.q);
        if let Some(l) = &self.c_factor {
            c = l * c;
        }
        let n_x = rng::standard_normals(&mut rng, self.m);
        let n_y = rng::standard_normal(&mut rng);
        ExogenousDraw { z, c, n_x, n_y }
    }
}

/// Draws the exogenous variables for rows `0..n` of `seed`.
pub fn draw_exogenous(spec: &SemSpec, n: usize, seed: u64) -> Result<Vec<ExogenousDraw>> {
    spec.check_dimensions()?;
    let sampler = ExogenousSampler::new(spec)?;
    Ok((0..n).map(|i| sampler.draw(seed, i)).collect())
}

/// Exogenous offsets `(a, b)`: `x = a + kappa tau y`, `y = f.x + b`.
fn offsets(spec: &SemSpec, draw: &ExogenousDraw) -> (Vector, f64) {
    let mut a = &spec.conf_x * &draw.c + &draw.n_x * spec.sigma;
    if spec.k() > 0 {
        a += &spec.gamma_mat * &draw.z;
    }
    let b = spec.kappa * spec.conf_y.dot(&draw.c) + spec.sigma * draw.n_y;
    (a, b)
}

/// Closed-form equilibrium for offsets `(a, b)`.
fn solve_equilibrium(spec: &SemSpec, a: &Vector, b: f64) -> (Vector, f64) {
    let y = (spec.f.dot(a) + b) / (1.0 - spec.loop_gain());
    let x = a + &spec.tau * (spec.kappa * y);
    (x, y)
}

/// Equilibrium `(x, y)` of one exogenous draw via the reduced form.
pub fn solve_draw(spec: &SemSpec, draw: &ExogenousDraw) -> Result<(Vector, f64)> {
    spec.require_solvable()?;
    check_draw(spec, draw)?;
    let (a, b) = offsets(spec, draw);
    Ok(solve_equilibrium(spec, &a, b))
}

fn check_draw(spec: &SemSpec, draw: &ExogenousDraw) -> Result<()> {
    check_dim("draw z", spec.k(), draw.z.len())?;
    check_dim("draw c", spec.q(), draw.c.len())?;
    check_dim("draw n_x", spec.m(), draw.n_x.len())
}

fn assemble(spec: &SemSpec, draws: &[ExogenousDraw], rows: Vec<(Vector, f64)>, seed: Option<u64>) -> Dataset {
    let n = rows.len();
    let m = spec.m();
    let x = Matrix::from_fn(n, m, |i, j| rows[i].0[j]);
    let y = Vector::from_fn(n, |i, _| rows[i].1);
    let z = (spec.k() > 0).then(|| Matrix::from_fn(n, spec.k(), |i, j| draws[i].z[j]));
    let c = (spec.q() > 0).then(|| Matrix::from_fn(n, spec.q(), |i, j| draws[i].c[j]));
    Dataset {
        x,
        y,
        z,
        c,
        meta: DatasetMeta {
            seed,
            spec_fingerprint: Some(spec.fingerprint()),
            centered: false,
            z_role: ZRole::Instrument,
        },
    }
}

/// Samples `n` i.i.d. rows from the observational distribution.
///
/// Also returns the exogenous draws so that interventional samplers can
/// reuse them.
pub fn sample(spec: &SemSpec, n: usize, seed: u64) -> Result<(Dataset, Vec<ExogenousDraw>)> {
    if n == 0 {
        return Err(invalid("sample size must be at least 1"));
    }
    spec.require_solvable()?;
    let draws = draw_exogenous(spec, n, seed)?;
    let rows = draws
        .iter()
        .map(|d| {
            let (a, b) = offsets(spec, d);
            solve_equilibrium(spec, &a, b)
        })
        .collect();
    Ok((assemble(spec, &draws, rows, Some(seed)), draws))
}

/// Fixed-point iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        FixedPointOptions {
            max_iters: 10_000,
            tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPoint {
    pub x: Vector,
    pub y: f64,
    pub iters: usize,
}

/// Iterates `x <- a + kappa tau y`, `y <- f.x + b` until the a-posteriori
/// error bound on the iterate drops below `tol` times its magnitude (at least 1).
///
/// With loop gain `g = |kappa f.tau| < 1` each sweep contracts the `y`
/// error by `g`, so the error of the current iterate is at most
/// `max(1, kappa |tau|_inf) * delta / (1 - g)` where `delta` is the max-norm
/// change of the last sweep.
fn iterate(spec: &SemSpec, a: &Vector, b: f64, x0: &Vector, y0: f64, opts: FixedPointOptions) -> Result<FixedPoint> {
    let gain = math::abs(spec.loop_gain());
    let bound_scale = (spec.kappa * linalg::max_abs(&spec.tau)).max(1.0) / (1.0 - gain);
    let mut x = x0.clone();
    let mut y = y0;
    for iter in 1..=opts.max_iters {
        let x_next = a + &spec.tau * (spec.kappa * y);
        let y_next = spec.f.dot(&x_next) + b;
        let delta = linalg::max_abs(&(&x_next - &x)).max(math::abs(y_next - y));
        x = x_next;
        y = y_next;
        let scale = linalg::max_abs(&x).max(math::abs(y)).max(1.0);
        if delta * bound_scale <= opts.tol * scale {
            return Ok(FixedPoint { x, y, iters: iter });
        }
    }
    Err(Error::NonConvergence {
        iters: opts.max_iters,
        last_x: x.as_slice().to_vec(),
        last_y: y,
    })
}

/// Equilibrium of one draw by iterating the structural assignments.
pub fn sample_iterative(
    spec: &SemSpec,
    draw: &ExogenousDraw,
    x0: &Vector,
    y0: f64,
    opts: FixedPointOptions,
) -> Result<FixedPoint> {
    spec.require_stable()?;
    check_draw(spec, draw)?;
    check_dim("x0", spec.m(), x0.len())?;
    let (a, b) = offsets(spec, draw);
    iterate(spec, &a, b, x0, y0, opts)
}

/// Samples the soft intervention that replaces the `X` mechanism by its
/// augmented version `x -> x + gamma Gamma' g`, sharing exogenous draws with
/// an observational sample.
///
/// For an outcome-invariant operator the result equals
/// `(x_obs + gamma Gamma' g, y_obs)` row by row.
pub fn sample_soft_do(spec: &SemSpec, da: &DaOperator, g_draws: &Matrix, exo: &[ExogenousDraw]) -> Result<Dataset> {
    spec.require_stable()?;
    check_dim("augmentation rows", spec.m(), da.gamma_mat.nrows())?;
    check_dim("g_draws rows", exo.len(), g_draws.nrows())?;
    check_dim("g_draws cols", da.k(), g_draws.ncols())?;
    if exo.is_empty() {
        return Err(Error::Empty("no exogenous draws"));
    }
    let deviation = da.invariance_deviation(&spec.f);
    if deviation > crate::augmentation::INVARIANCE_TOL {
        return Err(Error::NotInvariant { deviation });
    }
    let opts = FixedPointOptions::default();
    let x0 = Vector::zeros(spec.m());
    let mut rows = Vec::with_capacity(exo.len());
    for (i, draw) in exo.iter().enumerate() {
        check_draw(spec, draw)?;
        let (mut a, b) = offsets(spec, draw);
        if da.k() > 0 {
            let g = g_draws.row(i).transpose();
            a += &da.gamma_mat * g * da.strength;
        }
        let fp = iterate(spec, &a, b, &x0, 0.0, opts)?;
        rows.push((fp.x, fp.y));
    }
    let mut data = assemble(spec, exo, rows, None);
    data.z = (da.k() > 0).then(|| g_draws.clone());
    data.meta.z_role = ZRole::DaParameter;
    Ok(data)
}

/// Hard intervention `do(X := x_values)`.
///
/// Exogenous draws follow the same per-row order as [`sample`], so the
/// confounders match an observational sample with the same seed.
pub fn sample_hard_do(spec: &SemSpec, x_values: &Matrix, seed: u64) -> Result<Dataset> {
    spec.check_dimensions()?;
    check_dim("x_values columns", spec.m(), x_values.ncols())?;
    let n = x_values.nrows();
    if n == 0 {
        return Err(Error::Empty("no intervention rows"));
    }
    let sampler = ExogenousSampler::new(spec)?;
    let draws: Vec<ExogenousDraw> = (0..n).map(|i| sampler.draw(seed, i)).collect();
    let y = Vector::from_fn(n, |i, _| {
        let d = &draws[i];
        let fx: f64 = (0..spec.m()).map(|j| spec.f[j] * x_values[(i, j)]).sum();
        fx + spec.kappa * spec.conf_y.dot(&d.c) + spec.sigma * d.n_y
    });
    let c = (spec.q() > 0).then(|| Matrix::from_fn(n, spec.q(), |i, j| draws[i].c[j]));
    Ok(Dataset {
        x: x_values.clone(),
        y,
        z: None,
        c,
        meta: DatasetMeta {
            seed: Some(seed),
            spec_fingerprint: Some(spec.fingerprint()),
            centered: false,
            z_role: ZRole::Instrument,
        },
    })
}
