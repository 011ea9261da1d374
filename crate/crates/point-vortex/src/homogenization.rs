//! Fast Ornstein–Uhlenbeck eigenvalue dynamics and the Green–Kubo
//! extraction of homogenised coefficients.
//!
//! The fast process solves dλ = −(A/ε²) λ dt + (D/ε) dW with every
//! eigenvalue of A in the right half plane. Sampling uses the exact Gaussian
//! transition λ_{k+1} = Φ λ_k + η_k, Φ = e^{−A Δt/ε²}, Cov η = Σ∞ − Φ Σ∞ Φᵀ,
//! where Σ∞ solves the Lyapunov equation A Σ∞ + Σ∞ Aᵀ = D Dᵀ. There is no
//! discretization bias; the error budget of everything downstream is purely
//! statistical.
//!
//! From an ε = 1 trajectory the bilinear operator
//!
//!   𝔅(u, v) = ∫₀^∞ ⟨u · v∘φ_s⟩ ds
//!
//! is estimated entrywise as E^{ij} = 𝔅(λⁱ, λʲ) by trapezoid lag sums up to
//! a cutoff, after centering each channel. E is not symmetric in general: it
//! splits into the Brownian covariance M = ½(E + Eᵀ) and the area anomaly
//! s′ = ½(E − Eᵀ). With the Cholesky factor M = LLᵀ the same dynamics can be
//! written over independent channels with anomaly s, where s′ = L s Lᵀ.
//! For the OU family the closed form E = Σ∞ A⁻ᵀ is an independent oracle,
//! since ⟨λ₀ ⊗ λ_s⟩ = Σ∞ e^{−Aᵀ s}.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::noise::substream_seed;
use crate::{Error, Result};

/// Fast Ornstein–Uhlenbeck dynamics: drift matrix A (all eigenvalues in the
/// right half plane), diffusion matrix D, and scale separation ε.
#[derive(Clone, Debug, PartialEq)]
pub struct FastOU {
    pub a: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub eps: f64,
}

impl FastOU {
    pub fn new(a: DMatrix<f64>, d: DMatrix<f64>, eps: f64) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::Config("drift matrix must be square".into()));
        }
        if d.shape() != a.shape() {
            return Err(Error::Config(format!(
                "diffusion is {}x{} but drift is {}x{}",
                d.nrows(),
                d.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!("scale separation {eps} must be positive")));
        }
        let ou = FastOU { a, d, eps };
        let rate = ou.min_decay_rate();
        if !(rate > 0.0) {
            return Err(Error::UnstableDrift { real_part: rate });
        }
        Ok(ou)
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    /// Smallest real part over the spectrum of A: the slowest relaxation
    /// rate of the ε = 1 process.
    pub fn min_decay_rate(&self) -> f64 {
        self.a
            .complex_eigenvalues()
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min)
    }

    /// Stationary covariance Σ∞, the solution of A Σ + Σ Aᵀ = D Dᵀ.
    pub fn stationary_covariance(&self) -> Result<DMatrix<f64>> {
        lyapunov(&self.a, &(&self.d * self.d.transpose()))
    }

    /// Ten relaxation times of the slowest mode: past this lag the
    /// autocorrelation has decayed below e⁻¹⁰.
    pub fn default_lag_cutoff(&self) -> f64 {
        10.0 * self.eps * self.eps / self.min_decay_rate()
    }
}

/// Solve A X + X Aᵀ = Q by vectorizing to (I ⊗ A + A ⊗ I) vec(X) = vec(Q).
/// Unique for stable A since the system's spectrum is {λᵢ + λⱼ}.
fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    let eye = DMatrix::<f64>::identity(m, m);
    let system = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_column_slice(q.as_slice());
    let x = system
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Config("Lyapunov system is singular".into()))?;
    let x = DMatrix::from_column_slice(m, m, x.as_slice());
    // Q symmetric makes the exact solution symmetric; clean the round-off.
    Ok(0.5 * (&x + x.transpose()))
}

/// B with B Bᵀ = mat for symmetric PSD mat; negative round-off eigenvalues
/// are clamped to zero, so the zero matrix is handled.
fn psd_sqrt(mat: &DMatrix<f64>) -> DMatrix<f64> {
    let se = mat.clone().symmetric_eigen();
    let scale = se.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let roots = se.eigenvalues.map(|v| if v > scale * 1e-14 { v.sqrt() } else { 0.0 });
    &se.eigenvectors * DMatrix::from_diagonal(&roots)
}

/// A realized fast trajectory sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FastPath {
    pub dt: f64,
    pub m: usize,
    /// values[k·m + i] is λⁱ at time k·Δt; k = 0 is the initial point.
    pub values: Vec<f64>,
}

impl FastPath {
    /// Number of time points (steps + 1).
    pub fn len(&self) -> usize {
        self.values.len() / self.m
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.m + i]
    }

    /// One channel as a contiguous series.
    pub fn channel(&self, i: usize) -> Vec<f64> {
        (0..self.len()).map(|k| self.value(k, i)).collect()
    }

    /// Rows `t,λ1,..,λm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for i in 0..self.m {
            write!(w, ",λ{}", i + 1)?;
        }
        writeln!(w)?;
        for k in 0..self.len() {
            write!(w, "{}", k as f64 * self.dt)?;
            for i in 0..self.m {
                write!(w, ",{}", self.value(k, i))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Parse the `t,λ1,..,λm` format back; the grid must be uniform.
    pub fn read_csv<R: std::io::BufRead>(r: R) -> Result<Self> {
        let parse_err = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut m = 0;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let text = line.trim();
            if idx == 0 {
                if !text.starts_with("t,") {
                    return Err(parse_err(1, "expected a t,λ1,.. header"));
                }
                m = text.split(',').count() - 1;
                if m == 0 {
                    return Err(parse_err(1, "no λ columns"));
                }
                continue;
            }
            if text.is_empty() {
                continue;
            }
            let fields: Vec<&str> = text.split(',').collect();
            if fields.len() != m + 1 {
                return Err(parse_err(idx + 1, "wrong number of columns"));
            }
            for (c, field) in fields.iter().enumerate() {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(idx + 1, "not a number"))?;
                if c == 0 {
                    times.push(v);
                } else {
                    values.push(v);
                }
            }
        }
        if times.len() < 2 {
            return Err(parse_err(times.len() + 1, "need at least two rows"));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(parse_err(3, "time must increase"));
        }
        for (k, &t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * (1.0 + t.abs()) {
                return Err(parse_err(k + 2, "non-uniform time grid"));
            }
        }
        Ok(FastPath { dt, m, values })
    }
}

/// Sample the fast process from a given starting point by exact transitions.
/// The time step must resolve the fast scale: dt ≤ ε²/(10‖A‖_F).
pub fn simulate_fast_from(
    ou: &FastOU,
    initial: &[f64],
    seed: u64,
    steps: usize,
    dt: f64,
) -> Result<FastPath> {
    if initial.len() != ou.m() {
        return Err(Error::Config(format!(
            "initial state has {} components, drift is {}x{}",
            initial.len(),
            ou.m(),
            ou.m()
        )));
    }
    sample_ou(ou, Some(initial), seed, steps, dt)
}

/// Sample the fast process from a stationary draw λ₀ ~ N(0, Σ∞).
pub fn simulate_fast(ou: &FastOU, seed: u64, steps: usize, dt: f64) -> Result<FastPath> {
    sample_ou(ou, None, seed, steps, dt)
}

fn sample_ou(
    ou: &FastOU,
    initial: Option<&[f64]>,
    seed: u64,
    steps: usize,
    dt: f64,
) -> Result<FastPath> {
    let bound = ou.eps * ou.eps / (10.0 * ou.a.norm());
    if !(dt > 0.0) || dt > bound * (1.0 + 1e-12) {
        return Err(Error::Config(format!(
            "dt = {dt} does not resolve the fast scale (needs dt ≤ {bound:.3e})"
        )));
    }
    let m = ou.m();
    let sigma_inf = ou.stationary_covariance()?;
    let phi = (-(&ou.a * (dt / (ou.eps * ou.eps)))).exp();
    let step_cov = &sigma_inf - &phi * &sigma_inf * phi.transpose();
    let step_root = psd_sqrt(&(0.5 * (&step_cov + step_cov.transpose())));

    // One sequential substream per call: the initial draw (when stationary)
    // and every transition draw come from it in order.
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 4, 0, 0));
    let draw = |rng: &mut ChaCha8Rng| {
        DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal))
    };
    let mut lam = match initial {
        Some(x0) => DVector::from_column_slice(x0),
        None => psd_sqrt(&sigma_inf) * draw(&mut rng),
    };

    let mut values = Vec::with_capacity((steps + 1) * m);
    values.extend(lam.iter().copied());
    for _ in 0..steps {
        lam = &phi * lam + &step_root * draw(&mut rng);
        values.extend(lam.iter().copied());
    }
    Ok(FastPath { dt, m, values })
}

/// Estimate E^{ij} = ∫₀^cutoff ⟨λⁱ(t) λʲ(t+s)⟩ ds by direct lag sums with
/// trapezoid weights, after centering each channel. The (i, j) order
/// matters: E is not symmetric when the dynamics rotate.
pub fn green_kubo(path: &FastPath, lag_cutoff: f64) -> Result<DMatrix<f64>> {
    let n = path.len();
    let m = path.m;
    if n < 2 || m == 0 {
        return Err(Error::Config("trajectory too short to correlate".into()));
    }
    let n_lags = (lag_cutoff / path.dt).round() as usize;
    if n_lags < 1 {
        return Err(Error::Config(format!(
            "lag cutoff {lag_cutoff} is shorter than one step {}",
            path.dt
        )));
    }
    if n_lags >= n {
        return Err(Error::StepMismatch {
            have: n - 1,
            need: n_lags,
        });
    }
    let channels: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut c = path.channel(i);
            let mu = c.iter().sum::<f64>() / n as f64;
            for v in &mut c {
                *v -= mu;
            }
            c
        })
        .collect();
    let mut e = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut total = 0.0;
            for lag in 0..=n_lags {
                let dot: f64 = channels[i][..n - lag]
                    .iter()
                    .zip(&channels[j][lag..])
                    .map(|(u, v)| u * v)
                    .sum();
                let corr = dot / (n - lag) as f64;
                let w = if lag == 0 || lag == n_lags { 0.5 } else { 1.0 };
                total += w * corr;
            }
            e[(i, j)] = total * path.dt;
        }
    }
    Ok(e)
}

/// Closed-form E = Σ∞ A⁻ᵀ for the OU family at ε = 1 scaling.
pub fn lyapunov_oracle(ou: &FastOU) -> Result<DMatrix<f64>> {
    let sigma_inf = ou.stationary_covariance()?;
    // E = Σ∞ A⁻ᵀ, i.e. Eᵀ solves A X = Σ∞.
    let x = ou
        .a
        .clone()
        .lu()
        .solve(&sigma_inf)
        .ok_or_else(|| Error::Config("drift matrix is singular".into()))?;
    Ok(x.transpose())
}

/// The Green–Kubo matrix split into its homogenised ingredients.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenKuboEstimate {
    /// E = M + s′, reassembled from the parts so the identity is bitwise.
    pub e: DMatrix<f64>,
    /// Symmetric PSD covariance ½(E + Eᵀ).
    pub m: DMatrix<f64>,
    /// Antisymmetric anomaly ½(E − Eᵀ).
    pub s_prime: DMatrix<f64>,
    /// Lower-triangular Cholesky factor of M.
    pub dchol: DMatrix<f64>,
    /// Anomaly in the independent-channel basis: s′ = Dchol s Dcholᵀ.
    pub s: DMatrix<f64>,
    pub lag_cutoff: f64,
    pub samples: usize,
}

/// Split E into covariance and anomaly and change the anomaly to the basis
/// of independent channels. Errors when the symmetric part is indefinite or
/// too degenerate to factor.
pub fn decompose(e: &DMatrix<f64>, lag_cutoff: f64, samples: usize) -> Result<GreenKuboEstimate> {
    if !e.is_square() || e.nrows() == 0 {
        return Err(Error::Config("E must be square".into()));
    }
    let n = e.nrows();
    let mut m_part = DMatrix::zeros(n, n);
    let mut s_prime = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m_part[(i, j)] = 0.5 * (e[(i, j)] + e[(j, i)]);
            s_prime[(i, j)] = 0.5 * (e[(i, j)] - e[(j, i)]);
        }
    }
    let min_eig = m_part
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    if min_eig < -1e-12 {
        return Err(Error::NotPositiveDefinite {
            context: format!("covariance part has eigenvalue {min_eig:.3e}"),
        });
    }
    let chol = nalgebra::Cholesky::new(m_part.clone()).ok_or(Error::NotPositiveDefinite {
        context: "covariance part is too degenerate to factor".into(),
    })?;
    let dchol = chol.l();
    let y = dchol
        .solve_lower_triangular(&s_prime)
        .ok_or(Error::NotPositiveDefinite {
            context: "Cholesky factor is singular".into(),
        })?;
    let w = dchol
        .solve_lower_triangular(&y.transpose())
        .ok_or(Error::NotPositiveDefinite {
            context: "Cholesky factor is singular".into(),
        })?;
    let raw = w.transpose();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = 0.5 * (raw[(i, j)] - raw[(j, i)]);
        }
    }
    Ok(GreenKuboEstimate {
        e: &m_part + &s_prime,
        m: m_part,
        s_prime,
        dchol,
        s,
        lag_cutoff,
        samples,
    })
}

/// Green–Kubo estimates over equal contiguous blocks of the trajectory,
/// computed concurrently. Block length must exceed the lag cutoff.
pub fn block_estimates(
    path: &FastPath,
    lag_cutoff: f64,
    blocks: usize,
) -> Result<Vec<DMatrix<f64>>> {
    if blocks < 2 {
        return Err(Error::Config("need at least two blocks".into()));
    }
    let len = path.len() / blocks;
    if (len as f64 - 1.0) * path.dt <= lag_cutoff {
        return Err(Error::Config(format!(
            "blocks of {len} points cannot hold a lag cutoff of {lag_cutoff}"
        )));
    }
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let sub = FastPath {
                dt: path.dt,
                m: path.m,
                values: path.values[b * len * path.m..(b + 1) * len * path.m].to_vec(),
            };
            green_kubo(&sub, lag_cutoff)
        })
        .collect()
}

/// Entrywise bootstrap standard errors for E and its antisymmetric part.
#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapErrors {
    pub se_e: DMatrix<f64>,
    pub se_s_prime: DMatrix<f64>,
    pub resamples: usize,
}

/// Block bootstrap: resample the per-block estimates with replacement and
/// read the spread of the resampled means.
pub fn bootstrap_errors(
    estimates: &[DMatrix<f64>],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapErrors> {
    if estimates.len() < 2 || resamples < 2 {
        return Err(Error::Config(
            "bootstrap needs at least two blocks and two resamples".into(),
        ));
    }
    let m = estimates[0].nrows();
    let blocks = estimates.len();
    let mut rng = ChaCha8Rng::seed_from_u64(substream_seed(seed, 5, 0, 0));
    let mut e_reps = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut mean = DMatrix::zeros(m, m);
        for _ in 0..blocks {
            mean += &estimates[rng.gen_range(0..blocks)];
        }
        mean /= blocks as f64;
        e_reps.push(mean);
    }
    let spread = |value: &dyn Fn(&DMatrix<f64>, usize, usize) -> f64| {
        DMatrix::from_fn(m, m, |i, j| {
            let mu = e_reps.iter().map(|r| value(r, i, j)).sum::<f64>() / resamples as f64;
            let ss = e_reps
                .iter()
                .map(|r| (value(r, i, j) - mu).powi(2))
                .sum::<f64>();
            (ss / (resamples as f64 - 1.0)).sqrt()
        })
    };
    let se_e = spread(&|r, i, j| r[(i, j)]);
    let se_s_prime = spread(&|r, i, j| 0.5 * (r[(i, j)] - r[(j, i)]));
    Ok(BootstrapErrors {
        se_e,
        se_s_prime,
        resamples,
    })
}

/// Full-trajectory estimate with its decomposition and bootstrap errors.
#[derive(Clone, Debug)]
pub struct GreenKuboRun {
    pub estimate: GreenKuboEstimate,
    pub errors: BootstrapErrors,
    pub blocks: usize,
    pub block_len: usize,
}

pub fn estimate_with_bootstrap(
    path: &FastPath,
    lag_cutoff: f64,
    blocks: usize,
    resamples: usize,
    seed: u64,
) -> Result<GreenKuboRun> {
    let e = green_kubo(path, lag_cutoff)?;
    let estimate = decompose(&e, lag_cutoff, path.len())?;
    let per_block = block_estimates(path, lag_cutoff, blocks)?;
    let errors = bootstrap_errors(&per_block, resamples, seed)?;
    Ok(GreenKuboRun {
        estimate,
        errors,
        blocks,
        block_len: path.len() / blocks,
    })
}
