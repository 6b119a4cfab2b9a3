//! Path simulation: exponential-adapted Euler-Maruyama for Riemannian
//! Brownian motion and the OU process, the driving-noise representation the
//! MCMC re-uses, the exact Log-Euclidean coordinate simulator, and the
//! first-order horizontal-lift coefficient approximation.
//!
//! The OU process on SP(n) solves
//!
//!   dX_t = -(theta/2) grad d^2(X_t, M) dt + F_{X_t}(sigma dB_t),
//!
//! discretized as X_{t+dt} = Exp_X(theta Log_X(M) dt + sigma sum_j dB_j E_j(X)),
//! using theta Log_X(M) = -(theta/2) grad d^2(X, M).

mod kernel;

pub(crate) use kernel::{symmetrize_inplace, AiStepper};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{
    chart_h, chart_h_inv, exp_map, frame_apply, log_map, Christoffel, MetricKind, TangentVector,
};
use crate::rng::{domains, fill_standard_normal, stream};
use crate::symkernel::{
    basis_combine_into, vech, vech_entry_names, vech_len, EigenScratch, SpdMatrix, SymMatrix,
};

/// OU model parameters: mean-reversion rate theta, attractor M, squared
/// diffusivity sigma^2, and the cached coordinate vector mu = h(M).
///
/// theta = 0 is admitted as the Brownian-motion limit (no drift); the bridge
/// validation experiments condition pure Brownian motion.
#[derive(Clone, Debug)]
pub struct OuParams {
    theta: f64,
    attractor: SpdMatrix,
    sigma2: f64,
    mu: Vec<f64>,
}

impl OuParams {
    pub fn new(theta: f64, attractor: SpdMatrix, sigma2: f64) -> Result<Self> {
        if !theta.is_finite() || theta < 0.0 {
            return Err(Error::contract(format!("theta must be >= 0, got {theta}")));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::contract(format!("sigma2 must be > 0, got {sigma2}")));
        }
        let mu = chart_h(&attractor)?;
        Ok(OuParams {
            theta,
            attractor,
            sigma2,
            mu,
        })
    }

    /// Build from the coordinate vector mu, setting M = h^{-1}(mu).
    pub fn from_mu(theta: f64, mu: &[f64], sigma2: f64) -> Result<Self> {
        let attractor = chart_h_inv(mu)?;
        Self::new(theta, attractor, sigma2)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn attractor(&self) -> &SpdMatrix {
        &self.attractor
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn dim(&self) -> usize {
        self.attractor.dim()
    }

    pub fn tangent_dim(&self) -> usize {
        vech_len(self.dim())
    }
}

/// Observation grid plus per-interval imputation counts: interval j is
/// integrated with substeps[j] equal Euler-Maruyama sub-steps and only the
/// grid nodes are stored.
#[derive(Clone, Debug)]
pub struct SimGrid {
    times: Vec<f64>,
    substeps: Vec<usize>,
}

impl SimGrid {
    pub fn new(times: Vec<f64>, substeps: Vec<usize>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::contract("SimGrid needs at least two time points"));
        }
        if !times.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::contract("SimGrid times must be strictly increasing"));
        }
        if substeps.len() != times.len() - 1 {
            return Err(Error::contract(format!(
                "SimGrid: {} intervals need {} substep counts, got {}",
                times.len() - 1,
                times.len() - 1,
                substeps.len()
            )));
        }
        if substeps.iter().any(|&m| m == 0) {
            return Err(Error::contract("SimGrid substep counts must be >= 1"));
        }
        Ok(SimGrid { times, substeps })
    }

    /// `n_nodes` equally spaced observation times on [t0, t1], each interval
    /// integrated with `substeps` sub-steps.
    pub fn uniform(t0: f64, t1: f64, n_nodes: usize, substeps: usize) -> Result<Self> {
        if n_nodes < 2 || t1 <= t0 {
            return Err(Error::contract("SimGrid::uniform needs n_nodes >= 2 and t1 > t0"));
        }
        let times = (0..n_nodes)
            .map(|k| t0 + (t1 - t0) * k as f64 / (n_nodes - 1) as f64)
            .collect();
        Self::new(times, vec![substeps; n_nodes - 1])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn substeps(&self) -> &[usize] {
        &self.substeps
    }

    pub fn n_intervals(&self) -> usize {
        self.substeps.len()
    }
}

/// Diffusivity-independent innovations: one unit-variance standard normal
/// d-vector per sub-step, stored raw. sigma and sqrt(dt) scaling happen at
/// step time, so parameter updates re-drive the same innovations unchanged.
#[derive(Clone, Debug)]
pub struct NoiseBank {
    d: usize,
    seed: Option<u64>,
    intervals: Vec<Vec<f64>>,
}

impl NoiseBank {
    /// Draw a full bank for `grid`, one independent stream per interval.
    pub fn sample(grid: &SimGrid, d: usize, seed: u64) -> Self {
        let intervals = (0..grid.n_intervals())
            .map(|j| {
                let mut rng = stream(seed, domains::NOISE_INIT, j as u64, 0);
                let mut draws = vec![0.0; grid.substeps()[j] * d];
                fill_standard_normal(&mut rng, &mut draws);
                draws
            })
            .collect();
        NoiseBank {
            d,
            seed: Some(seed),
            intervals,
        }
    }

    pub fn from_draws(intervals: Vec<Vec<f64>>, d: usize) -> Result<Self> {
        if intervals.iter().any(|v| v.len() % d != 0 || v.is_empty()) {
            return Err(Error::contract(
                "NoiseBank: each interval needs a positive multiple of d draws",
            ));
        }
        Ok(NoiseBank {
            d,
            seed: None,
            intervals,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn n_intervals(&self) -> usize {
        self.intervals.len()
    }

    pub fn interval(&self, j: usize) -> &[f64] {
        &self.intervals[j]
    }

    pub fn interval_mut(&mut self, j: usize) -> &mut Vec<f64> {
        &mut self.intervals[j]
    }

    pub fn substeps_of(&self, j: usize) -> usize {
        self.intervals[j].len() / self.d
    }

    /// Draw for sub-step k of interval j.
    pub fn draw(&self, j: usize, k: usize) -> &[f64] {
        &self.intervals[j][k * self.d..(k + 1) * self.d]
    }

    fn matches(&self, grid: &SimGrid) -> bool {
        self.n_intervals() == grid.n_intervals()
            && (0..self.n_intervals()).all(|j| self.substeps_of(j) == grid.substeps()[j])
    }
}

/// A simulated path: strictly increasing times paired with SPD states.
#[derive(Clone, Debug)]
pub struct SdePath {
    pub times: Vec<f64>,
    pub states: Vec<SpdMatrix>,
    pub metric: MetricKind,
}

impl SdePath {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> &SpdMatrix {
        self.states.last().expect("paths are non-empty")
    }

    /// CSV rows `t, x11, x21, x22, ...` with entries in nu order.
    pub fn write_csv<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        let n = self.states[0].dim();
        write!(w, "t")?;
        for name in vech_entry_names(n) {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for v in vech(x.as_sym()) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// CSV rows `t, x11, ..., det, trace` for bridge diagnostics.
    pub fn write_csv_with_stats<W: std::io::Write>(&self, w: &mut W) -> Result<()> {
        let n = self.states[0].dim();
        write!(w, "t")?;
        for name in vech_entry_names(n) {
            write!(w, ",{name}")?;
        }
        writeln!(w, ",det,trace")?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for v in vech(x.as_sym()) {
                write!(w, ",{v}")?;
            }
            writeln!(w, ",{},{}", x.det(), x.trace())?;
        }
        Ok(())
    }
}

/// One exponential-adapted Euler-Maruyama step:
/// Exp_X(theta Log_X(M) dt + sigma sqrt(dt) sum_j z_j E_j(X) [+ pull dt]).
///
/// `pull`, when present, must be based at `x`; the bridge module uses it for
/// the guiding term Log_X(V)/(T-t).
pub fn em_step(
    metric: MetricKind,
    x: &SpdMatrix,
    params: &OuParams,
    dt: f64,
    z: &[f64],
    pull: Option<&TangentVector>,
) -> Result<SpdMatrix> {
    if !(dt > 0.0) {
        return Err(Error::contract(format!("em_step: dt must be > 0, got {dt}")));
    }
    if z.len() != vech_len(x.dim()) {
        return Err(Error::contract(format!(
            "em_step: expected {} noise coordinates, got {}",
            vech_len(x.dim()),
            z.len()
        )));
    }
    if x.dim() != params.dim() {
        return Err(Error::contract("em_step: state/parameter dimension mismatch"));
    }
    let mut total = if params.theta() == 0.0 {
        TangentVector::zero(x.clone())
    } else {
        log_map(metric, x, params.attractor())?.scaled(params.theta() * dt)
    };
    let noise = frame_apply(metric, x, z)?.scaled(params.sigma() * dt.sqrt());
    total = total.try_add(&noise)?;
    if let Some(p) = pull {
        if p.base() != x {
            return Err(Error::contract("em_step: pull is based at a different point"));
        }
        total = total.try_add(&p.scaled(dt))?;
    }
    exp_map(metric, &total)
}

/// Simulate the OU process on `grid`, storing the grid nodes. A pure
/// function of (params, x0, noise): identical inputs give identical paths,
/// which is what lets the MCMC re-drive stored innovations under new
/// parameters.
pub fn simulate_ou(
    metric: MetricKind,
    params: &OuParams,
    x0: &SpdMatrix,
    grid: &SimGrid,
    noise: &NoiseBank,
) -> Result<SdePath> {
    let n = params.dim();
    let d = params.tangent_dim();
    if x0.dim() != n {
        return Err(Error::contract("simulate_ou: x0 dimension mismatch"));
    }
    if noise.d() != d || !noise.matches(grid) {
        return Err(Error::contract("simulate_ou: noise bank is not sized to the grid"));
    }
    let states = match metric {
        MetricKind::Euclidean => sim_euclid(params, x0, grid, noise)?,
        MetricKind::LogEuclidean => sim_le(params, x0, grid, noise)?,
        MetricKind::AffineInvariant => sim_ai(params, x0, grid, noise)?,
    };
    Ok(SdePath {
        times: grid.times().to_vec(),
        states,
        metric,
    })
}

fn sim_euclid(
    params: &OuParams,
    x0: &SpdMatrix,
    grid: &SimGrid,
    noise: &NoiseBank,
) -> Result<Vec<SpdMatrix>> {
    let n = params.dim();
    let sigma = params.sigma();
    let mut x = x0.as_matrix().clone();
    let mut z = DMatrix::zeros(n, n);
    let mut states = Vec::with_capacity(grid.times().len());
    states.push(x0.clone());
    for j in 0..grid.n_intervals() {
        let m = grid.substeps()[j];
        let dt = (grid.times()[j + 1] - grid.times()[j]) / m as f64;
        let sdt = sigma * dt.sqrt();
        for k in 0..m {
            basis_combine_into(n, noise.draw(j, k), &mut z);
            let theta_dt = params.theta() * dt;
            for i in 0..n {
                for l in 0..n {
                    x[(i, l)] += theta_dt * (params.attractor().get(i, l) - x[(i, l)])
                        + sdt * z[(i, l)];
                }
            }
            // every sub-step must stay inside the cone
            match SpdMatrix::try_new(SymMatrix::from_matrix(x.clone())?) {
                Ok(state) => {
                    if k == m - 1 {
                        states.push(state);
                    }
                }
                Err(Error::Boundary { eigenvalue, floor, .. }) => {
                    let t = grid.times()[j] + dt * (k + 1) as f64;
                    return Err(Error::Boundary {
                        context: format!("Euclidean path left the SPD cone at t = {t}"),
                        eigenvalue,
                        floor,
                    });
                }
                Err(other) => return Err(other),
            }
        }
    }
    Ok(states)
}

fn sim_le(
    params: &OuParams,
    x0: &SpdMatrix,
    grid: &SimGrid,
    noise: &NoiseBank,
) -> Result<Vec<SpdMatrix>> {
    // Carried in h-coordinates: the LE Euler-Maruyama step collapses to the
    // Euclidean OU update on x = h(X), node states materialize through exp.
    let n = params.dim();
    let d = params.tangent_dim();
    let sigma = params.sigma();
    let mut x = chart_h(x0)?;
    let mut states = Vec::with_capacity(grid.times().len());
    states.push(x0.clone());
    let mut combined = DMatrix::zeros(n, n);
    let mut eig = EigenScratch::new(n);
    let mut fw = vec![0.0; n];
    for j in 0..grid.n_intervals() {
        let m = grid.substeps()[j];
        let dt = (grid.times()[j + 1] - grid.times()[j]) / m as f64;
        let sdt = sigma * dt.sqrt();
        let theta_dt = params.theta() * dt;
        for k in 0..m {
            let z = noise.draw(j, k);
            for i in 0..d {
                x[i] += theta_dt * (params.mu()[i] - x[i]) + sdt * z[i];
            }
        }
        basis_combine_into(n, &x, &mut combined);
        eig.factor(&combined)?;
        if eig.w[n - 1] > 709.0 {
            return Err(Error::NumericFailure(
                "LE simulation: exponential overflow materializing a node".into(),
            ));
        }
        for (f, &l) in fw.iter_mut().zip(eig.w.iter()) {
            *f = l.exp();
        }
        states.push(SpdMatrix::from_eigen(&eig.v, &fw, crate::symkernel::SPD_FLOOR)?);
    }
    Ok(states)
}

fn sim_ai(
    params: &OuParams,
    x0: &SpdMatrix,
    grid: &SimGrid,
    noise: &NoiseBank,
) -> Result<Vec<SpdMatrix>> {
    let n = params.dim();
    let sigma = params.sigma();
    let mut stepper = AiStepper::new(n);
    stepper.set_state(x0.as_matrix());
    let mut states = Vec::with_capacity(grid.times().len());
    states.push(x0.clone());
    for j in 0..grid.n_intervals() {
        let m = grid.substeps()[j];
        let dt = (grid.times()[j + 1] - grid.times()[j]) / m as f64;
        let sdt = sigma * dt.sqrt();
        for k in 0..m {
            stepper.factor_state()?;
            let cm = if params.theta() == 0.0 {
                0.0
            } else {
                stepper.load_log_m(params.attractor().as_matrix())?;
                params.theta() * dt
            };
            stepper.advance(cm, 0.0, sdt, noise.draw(j, k))?;
        }
        states.push(SpdMatrix::try_new(SymMatrix::from_matrix(stepper.x.clone())?)?);
    }
    Ok(states)
}

/// Exact-in-distribution Euclidean OU transitions in h-coordinates, the
/// distributional oracle for LE-metric manifold simulation. Consumes the
/// first d draws of each interval's noise block; mean and variance over an
/// interval of length D are mu + (x - mu) e^{-theta D} and
/// sigma^2 (1 - e^{-2 theta D}) / (2 theta) per coordinate.
pub fn simulate_le_exact(
    params: &OuParams,
    x0: &[f64],
    grid: &SimGrid,
    noise: &NoiseBank,
) -> Result<Vec<Vec<f64>>> {
    let d = params.tangent_dim();
    if x0.len() != d {
        return Err(Error::contract("simulate_le_exact: x0 has wrong length"));
    }
    if noise.d() != d || noise.n_intervals() != grid.n_intervals() {
        return Err(Error::contract(
            "simulate_le_exact: noise bank is not sized to the grid",
        ));
    }
    let theta = params.theta();
    let sigma2 = params.sigma2();
    let mut x = x0.to_vec();
    let mut path = Vec::with_capacity(grid.times().len());
    path.push(x.clone());
    for j in 0..grid.n_intervals() {
        let delta = grid.times()[j + 1] - grid.times()[j];
        let (decay, var) = ou_transition(theta, sigma2, delta);
        let sd = var.sqrt();
        let z = noise.draw(j, 0);
        for i in 0..d {
            let mean = params.mu()[i] + (x[i] - params.mu()[i]) * decay;
            x[i] = mean + sd * z[i];
        }
        path.push(x.clone());
    }
    Ok(path)
}

/// (e^{-theta D}, per-coordinate transition variance) of the Euclidean OU,
/// with the Brownian limit at theta = 0.
pub fn ou_transition(theta: f64, sigma2: f64, delta: f64) -> (f64, f64) {
    if theta == 0.0 {
        (1.0, sigma2 * delta)
    } else {
        let decay = (-theta * delta).exp();
        (decay, sigma2 * (1.0 - decay * decay) / (2.0 * theta))
    }
}

/// First-order horizontal-lift coefficients along an AI geodesic leaving in
/// direction alpha: zeta_j^i = delta_ij - t sum_l alpha_l Gamma_{li}^j,
/// exactly the identity at t = 0.
pub fn zeta_approx(gamma: &Christoffel, alpha: &[f64], t: f64) -> DMatrix<f64> {
    let d = gamma.dim();
    assert_eq!(alpha.len(), d, "zeta_approx: alpha must have length d");
    let mut out = DMatrix::identity(d, d);
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for (l, &al) in alpha.iter().enumerate() {
                s += al * gamma.get(l, i, j);
            }
            out[(i, j)] -= t * s;
        }
    }
    out
}
