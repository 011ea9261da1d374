//! Ensembles of stochastic vortex runs and their statistics.
//!
//! A member k of an ensemble with base seed s is driven by the path drawn
//! from the keyed member channel (s, k), so results are reproducible and
//! independent of scheduling: members are integrated in parallel and folded
//! back in member order no matter which worker finished first. On top of the
//! raw per-member diagnostics this module provides the pointwise envelope
//! (sample mean, standard deviation, twice the standard deviation), an
//! area-weighted occupation histogram over recorded vortex positions, and the
//! pathwise translation identities that each Stratonovich path satisfies
//! exactly in the continuum:
//!
//!   T_x(t) = T_x(0) + n b W²_t,      T_y(t) = T_y(0) − n a W²_t,
//!   H(t)   = H(0),                   dR = n (b x_c − a y_c) ∘ dW²,
//!
//! with n = ΣΓ the total strength. The R identity is checked by midpoint
//! quadrature on the recorded grid, so its residual carries an O(√Δt)
//! quadrature error while the first three are limited only by the scheme.

use std::io::Write;

use rayon::prelude::*;

use crate::fields::StreamParams;
use crate::geometry::{Vec2, VortexState};
use crate::integrators::{integrate, MethodName, MethodSpec, Trajectory};
use crate::noise::{brownian, fbm, member_seed, pure_area, zero_path, DrivingPath};
use crate::{Error, Result};

/// Full description of a multi-member experiment.
#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub members: usize,
    pub seed: u64,
    /// Time horizon T; T/dt must be an integer to within 1e-9.
    pub horizon: f64,
    pub dt: f64,
    pub method: MethodSpec,
    pub params: StreamParams,
    pub initial: VortexState,
    /// When set, every member is driven by the member-0 path. Runs that
    /// differ only in `method` then see the same realization, which is the
    /// setup for pathwise method comparisons.
    pub common_path: bool,
    pub record_every: usize,
    /// Hurst exponent for the fractional method; ignored by the others.
    pub hurst: Option<f64>,
}

impl EnsembleConfig {
    /// The benchmark configuration: 100 members of the unit triad over
    /// [0, 40] at dt = 1/250, recording every 10th step.
    pub fn benchmark(method: MethodSpec, seed: u64) -> Self {
        EnsembleConfig {
            members: 100,
            seed,
            horizon: 40.0,
            dt: 1.0 / 250.0,
            method,
            params: StreamParams::benchmark(),
            initial: VortexState::equilateral_triad(),
            common_path: false,
            record_every: 10,
            hurst: Some(0.4),
        }
    }

    /// Validated step count. Rejects empty ensembles, non-integral T/dt, and
    /// a fractional method without a Hurst exponent.
    pub fn steps(&self) -> Result<usize> {
        if self.members < 1 {
            return Err(Error::Config("ensemble needs at least one member".into()));
        }
        let ratio = self.horizon / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() > 1e-9 || rounded < 1.0 {
            return Err(Error::Config(format!(
                "horizon {} is not a positive integer multiple of dt {}",
                self.horizon, self.dt
            )));
        }
        if self.method.name == MethodName::Fbm {
            match self.hurst {
                None => {
                    return Err(Error::Config(
                        "the FBM method needs a Hurst exponent".into(),
                    ))
                }
                Some(h) if !(h > 1.0 / 3.0 && h < 1.0) => {
                    return Err(Error::BadHurst { hurst: h })
                }
                Some(_) => {}
            }
        }
        Ok(rounded as usize)
    }

    /// The driving path for one member. Noise-free methods get the zero
    /// path; the pure-area method gets zero increments with the drifting
    /// area s·Δt attached; the fractional method gets a fractional path.
    pub fn member_path(&self, member: usize) -> Result<DrivingPath> {
        let steps = self.steps()?;
        let channel = if self.common_path { 0 } else { member as u64 };
        let path_seed = member_seed(self.seed, channel);
        match self.method.name {
            MethodName::Deterministic => Ok(zero_path(steps, 2, self.dt)),
            MethodName::TypeIIAreaProcess => pure_area(steps, self.dt, self.params.s),
            MethodName::Fbm => {
                let h = self.hurst.expect("steps() checked the Hurst exponent");
                fbm(path_seed, steps, 2, self.dt, h)
            }
            _ => Ok(brownian(path_seed, steps, 2, self.dt)),
        }
    }
}

/// One member's run: the path seed that drove it and either the trajectory
/// or the error that stopped it.
#[derive(Debug)]
pub struct MemberOutcome {
    pub member: usize,
    pub path_seed: u64,
    pub result: Result<Trajectory>,
}

/// All member outcomes, in member order.
#[derive(Debug)]
pub struct EnsembleResult {
    pub outcomes: Vec<MemberOutcome>,
}

impl EnsembleResult {
    /// Members that completed, in member order.
    pub fn trajectories(&self) -> impl Iterator<Item = (usize, &Trajectory)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|t| (o.member, t)))
    }

    /// Members that failed, with their errors.
    pub fn failures(&self) -> Vec<(usize, &Error)> {
        self.outcomes
            .iter()
            .filter_map(|o| o.result.as_ref().err().map(|e| (o.member, e)))
            .collect()
    }

    /// Extract one diagnostic as (times, one series per completed member).
    pub fn series<F>(&self, f: F) -> Result<(Vec<f64>, Vec<Vec<f64>>)>
    where
        F: Fn(&crate::geometry::DiagnosticsRecord) -> f64,
    {
        let mut times = None;
        let mut rows = Vec::new();
        for (_, traj) in self.trajectories() {
            if times.is_none() {
                times = Some(traj.records.iter().map(|r| r.t).collect());
            }
            rows.push(traj.records.iter().map(&f).collect());
        }
        match times {
            Some(t) => Ok((t, rows)),
            None => Err(Error::Config("every ensemble member failed".into())),
        }
    }
}

/// Run every member, in parallel over the ambient rayon pool. Blow-ups are
/// recorded per member and do not stop the rest; configuration errors fail
/// the whole call. The fold is ordered by member index, so the output is a
/// pure function of the configuration alone.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    cfg.steps()?;
    let outcomes = (0..cfg.members)
        .into_par_iter()
        .map(|member| {
            let channel = if cfg.common_path { 0 } else { member as u64 };
            let path_seed = member_seed(cfg.seed, channel);
            let result = cfg.member_path(member).and_then(|path| {
                integrate(&cfg.method, &cfg.initial, &cfg.params, &path, cfg.record_every)
            });
            MemberOutcome {
                member,
                path_seed,
                result,
            }
        })
        .collect();
    Ok(EnsembleResult { outcomes })
}

/// Pointwise ensemble statistics of equal-length series.
#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub t: Vec<f64>,
    pub mean: Vec<f64>,
    /// Sample standard deviation with the (n−1) denominator; zero when a
    /// single series is given.
    pub std: Vec<f64>,
}

/// Mean and standard deviation at each time point across the given series.
pub fn envelope(t: &[f64], series: &[Vec<f64>]) -> Result<Envelope> {
    if series.is_empty() {
        return Err(Error::Config("envelope needs at least one series".into()));
    }
    for s in series {
        if s.len() != t.len() {
            return Err(Error::Config(format!(
                "envelope series has {} points, expected {}",
                s.len(),
                t.len()
            )));
        }
    }
    let n = series.len() as f64;
    let mut mean = vec![0.0; t.len()];
    let mut std = vec![0.0; t.len()];
    for k in 0..t.len() {
        let m = series.iter().map(|s| s[k]).sum::<f64>() / n;
        mean[k] = m;
        if series.len() > 1 {
            let ss = series.iter().map(|s| (s[k] - m).powi(2)).sum::<f64>();
            std[k] = (ss / (n - 1.0)).sqrt();
        }
    }
    Ok(Envelope {
        t: t.to_vec(),
        mean,
        std,
    })
}

/// Occupation histogram over a rectangular window. Counts are raw hits per
/// cell; the density normalizes by cell area and the number of binned
/// samples, so Σ density·cellArea = 1 whenever any sample fell in bounds.
/// Samples outside the window land in the overflow tally, and
/// in-bounds + overflow always equals the number of deposits.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramGrid {
    pub nx: usize,
    pub ny: usize,
    /// (xmin, xmax, ymin, ymax)
    pub bounds: (f64, f64, f64, f64),
    /// Row-major with x fastest: index j·nx + i.
    pub counts: Vec<u64>,
    pub density: Vec<f64>,
    pub overflow: u64,
    pub binned: u64,
}

impl HistogramGrid {
    pub const DEFAULT_NX: usize = 1024;
    pub const DEFAULT_NY: usize = 1024;

    pub fn new(nx: usize, ny: usize, bounds: (f64, f64, f64, f64)) -> Result<Self> {
        let (x0, x1, y0, y1) = bounds;
        if nx == 0 || ny == 0 {
            return Err(Error::Config("histogram needs at least one cell".into()));
        }
        if !(x1 > x0 && y1 > y0) || !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(Error::Config(format!(
                "degenerate histogram bounds ({x0}, {x1}) x ({y0}, {y1})"
            )));
        }
        Ok(HistogramGrid {
            nx,
            ny,
            bounds,
            counts: vec![0; nx * ny],
            density: vec![0.0; nx * ny],
            overflow: 0,
            binned: 0,
        })
    }

    /// Tight bounding box of the points, padded by 5% of each side length
    /// (or by 1/2 where the extent is zero). None when there are no points.
    pub fn auto_bounds(points: &[Vec2]) -> Option<(f64, f64, f64, f64)> {
        let first = points.first()?;
        let (mut x0, mut x1, mut y0, mut y1) = (first.x, first.x, first.y, first.y);
        for p in points {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let pad = |lo: f64, hi: f64| {
            let w = 0.05 * (hi - lo);
            if w > 0.0 {
                w
            } else {
                0.5
            }
        };
        let (px, py) = (pad(x0, x1), pad(y0, y1));
        Some((x0 - px, x1 + px, y0 - py, y1 + py))
    }

    pub fn cell_area(&self) -> f64 {
        let (x0, x1, y0, y1) = self.bounds;
        (x1 - x0) / self.nx as f64 * ((y1 - y0) / self.ny as f64)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        let (x0, x1, y0, y1) = self.bounds;
        (
            x0 + (i as f64 + 0.5) * (x1 - x0) / self.nx as f64,
            y0 + (j as f64 + 0.5) * (y1 - y0) / self.ny as f64,
        )
    }

    /// Bin one sample. The window is closed: points exactly on the upper
    /// edges land in the last cell rather than overflowing.
    pub fn deposit(&mut self, p: Vec2) {
        let (x0, x1, y0, y1) = self.bounds;
        if !(p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1) {
            self.overflow += 1;
            return;
        }
        let cell = |v: f64, lo: f64, hi: f64, n: usize| -> usize {
            let k = ((v - lo) / (hi - lo) * n as f64).floor() as usize;
            k.min(n - 1)
        };
        let i = cell(p.x, x0, x1, self.nx);
        let j = cell(p.y, y0, y1, self.ny);
        self.counts[j * self.nx + i] += 1;
        self.binned += 1;
    }

    /// Recompute the density from the counts.
    pub fn finalize(&mut self) {
        let norm = self.binned as f64 * self.cell_area();
        for (d, &c) in self.density.iter_mut().zip(&self.counts) {
            *d = if self.binned > 0 { c as f64 / norm } else { 0.0 };
        }
    }

    pub fn total_samples(&self) -> u64 {
        self.binned + self.overflow
    }

    /// Σ density·cellArea; 1 whenever any sample fell in bounds.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.cell_area()
    }
}

/// Histogram a bag of points. Bounds default to the padded bounding box of
/// the data, or to the unit window about the origin when there is no data.
pub fn histogram_points(
    points: &[Vec2],
    nx: usize,
    ny: usize,
    bounds: Option<(f64, f64, f64, f64)>,
) -> Result<HistogramGrid> {
    let bounds = bounds
        .or_else(|| HistogramGrid::auto_bounds(points))
        .unwrap_or((-1.0, 1.0, -1.0, 1.0));
    let mut grid = HistogramGrid::new(nx, ny, bounds)?;
    for &p in points {
        grid.deposit(p);
    }
    grid.finalize();
    Ok(grid)
}

/// Histogram every recorded vortex position of every trajectory.
pub fn histogram(
    trajectories: &[&Trajectory],
    nx: usize,
    ny: usize,
    bounds: Option<(f64, f64, f64, f64)>,
) -> Result<HistogramGrid> {
    let points: Vec<Vec2> = trajectories
        .iter()
        .flat_map(|t| t.states.iter())
        .flat_map(|s| s.positions.iter().copied())
        .collect();
    histogram_points(&points, nx, ny, bounds)
}

/// Residuals of the pathwise conservation identities along one trajectory,
/// one value per recorded time. Exact identities would make every series
/// vanish; the T and H residuals are limited by the scheme while the R
/// residual also carries the midpoint-quadrature error of its Stratonovich
/// integral, O(√Δt) on the recorded grid.
#[derive(Clone, Debug)]
pub struct IdentityResiduals {
    pub t: Vec<f64>,
    pub t_x: Vec<f64>,
    pub t_y: Vec<f64>,
    pub h: Vec<f64>,
    pub r: Vec<f64>,
}

/// Largest absolute value of a residual (or any) series; 0 for empty input.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Check a trajectory against the translation identities of the driving
/// path that produced it.
pub fn pathwise_identities(
    traj: &Trajectory,
    path: &DrivingPath,
    p: &StreamParams,
) -> Result<IdentityResiduals> {
    if path.m() < 2 {
        return Err(Error::ChannelMismatch {
            have: path.m(),
            need: 2,
        });
    }
    let last = *traj.steps.last().ok_or(Error::EmptyState)?;
    if last > path.steps() {
        return Err(Error::StepMismatch {
            have: path.steps(),
            need: last,
        });
    }
    let w2 = path.cumulative(1);
    let n_gamma = traj.states[0].total_strength();
    let first = &traj.records[0];

    let mut out = IdentityResiduals {
        t: Vec::with_capacity(traj.records.len()),
        t_x: Vec::with_capacity(traj.records.len()),
        t_y: Vec::with_capacity(traj.records.len()),
        h: Vec::with_capacity(traj.records.len()),
        r: Vec::with_capacity(traj.records.len()),
    };
    let integrand = |rec: &crate::geometry::DiagnosticsRecord| {
        n_gamma * (p.b * rec.x_c.x - p.a * rec.x_c.y)
    };
    let mut quad = 0.0;
    for (k, rec) in traj.records.iter().enumerate() {
        let w = w2[traj.steps[k]];
        if k > 0 {
            let prev = &traj.records[k - 1];
            let dw = w - w2[traj.steps[k - 1]];
            quad += 0.5 * (integrand(prev) + integrand(rec)) * dw;
        }
        out.t.push(rec.t);
        out.t_x.push(rec.t_x - first.t_x - n_gamma * p.b * w);
        out.t_y.push(rec.t_y - first.t_y + n_gamma * p.a * w);
        out.h.push(rec.h - first.h);
        out.r.push(rec.r - first.r - quad);
    }
    Ok(out)
}

/// Per-member diagnostics rows: `member,t,area,angle,Tx,Ty,R,H,xc_x,xc_y`.
/// Failed members contribute no rows.
pub fn write_member_diagnostics<W: Write>(mut w: W, result: &EnsembleResult) -> Result<()> {
    writeln!(w, "member,t,area,angle,Tx,Ty,R,H,xc_x,xc_y")?;
    for (member, traj) in result.trajectories() {
        for rec in &traj.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                member,
                rec.t,
                rec.area,
                rec.angle,
                rec.t_x,
                rec.t_y,
                rec.r,
                rec.h,
                rec.x_c.x,
                rec.x_c.y
            )?;
        }
    }
    Ok(())
}

/// Envelope rows: `t,mean,std,std2`.
pub fn write_envelope_csv<W: Write>(mut w: W, env: &Envelope) -> Result<()> {
    writeln!(w, "t,mean,std,std2")?;
    for k in 0..env.t.len() {
        writeln!(
            w,
            "{},{},{},{}",
            env.t[k],
            env.mean[k],
            env.std[k],
            2.0 * env.std[k]
        )?;
    }
    Ok(())
}

/// Histogram rows: `i,j,x_center,y_center,count,density`, empty cells
/// omitted. A leading comment line carries the grid shape, bounds, and
/// tallies so the full grid can be reconstructed.
pub fn write_histogram_csv<W: Write>(mut w: W, grid: &HistogramGrid) -> Result<()> {
    let (x0, x1, y0, y1) = grid.bounds;
    writeln!(
        w,
        "# nx={} ny={} xmin={} xmax={} ymin={} ymax={} binned={} overflow={}",
        grid.nx, grid.ny, x0, x1, y0, y1, grid.binned, grid.overflow
    )?;
    writeln!(w, "i,j,x_center,y_center,count,density")?;
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            let c = grid.counts[j * grid.nx + i];
            if c == 0 {
                continue;
            }
            let (xc, yc) = grid.cell_center(i, j);
            writeln!(
                w,
                "{},{},{},{},{},{}",
                i,
                j,
                xc,
                yc,
                c,
                grid.density[j * grid.nx + i]
            )?;
        }
    }
    Ok(())
}
