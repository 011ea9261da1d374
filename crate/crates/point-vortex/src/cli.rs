//! Configuration-driven experiment runner behind the thin command-line
//! binary.
//!
//! A [`RunConfig`] (TOML file plus flag overrides) selects one experiment:
//!
//! * `single`: one or several methods on a shared driving realization,
//!   one diagnostics CSV per method plus the driving-path dump;
//! * `ensemble`: many members of one method: per-member diagnostics,
//!   area/angle envelopes, an occupation histogram, and a summary JSON;
//! * `pathwise-compare`: several methods on the same realization with
//!   per-method deviation and identity-residual summaries;
//! * `homogenize`: fast Ornstein–Uhlenbeck simulation, Green–Kubo
//!   extraction with bootstrap errors, oracle comparison, JSON report;
//! * `fields-grid`: a named noise field sampled over a rectangle.
//!
//! Every command is idempotent given (config, seed): reruns produce
//! byte-identical files regardless of worker count. A `manifest.json` is
//! always written, recording the produced files and any per-member
//! failures; a run is `ok` only when nothing failed.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    envelope, histogram, max_abs, pathwise_identities, run_ensemble, write_envelope_csv,
    write_histogram_csv, write_member_diagnostics, EnsembleConfig, EnsembleResult,
    HistogramGrid, MemberOutcome,
};
use crate::fields::{ito_strat_correction, wz_commutator, xi1, xi2, StreamParams};
use crate::geometry::{center_of_vorticity, Vec2, VortexState};
use crate::homogenization::{
    estimate_with_bootstrap, lyapunov_oracle, simulate_fast, FastOU, FastPath,
};
use crate::integrators::{MethodName, MethodSpec, Trajectory};
use crate::noise::{brownian, member_seed};
use crate::{Error, Result};

/// Full experiment description. Every field has a default mirroring the
/// benchmark case study, so an empty config is already runnable.
#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// One of single, ensemble, pathwise-compare, homogenize, fields-grid.
    pub experiment: String,
    pub seed: u64,
    /// Output directory; created if absent.
    pub out: PathBuf,
    pub run: RunSection,
    pub params: ParamsSection,
    pub initial: InitialSection,
    pub fields_grid: FieldsGridSection,
    pub histogram: HistogramSection,
    pub homogenize: HomogenizeSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: "single".into(),
            seed: 42,
            out: PathBuf::from("out"),
            run: RunSection::default(),
            params: ParamsSection::default(),
            initial: InitialSection::default(),
            fields_grid: FieldsGridSection::default(),
            histogram: HistogramSection::default(),
            homogenize: HomogenizeSection::default(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub members: usize,
    pub horizon: f64,
    pub dt: f64,
    /// Method names or numbers; `single` and `pathwise-compare` run all of
    /// them on one shared realization, `ensemble` uses the first.
    pub methods: Vec<String>,
    pub record_every: usize,
    pub common_path: bool,
    pub hurst: f64,
    /// Lévy-area truncation depth for the area-augmented method.
    pub k_terms: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            members: 100,
            horizon: 40.0,
            dt: 1.0 / 250.0,
            methods: vec!["stratonovich".into()],
            record_every: 10,
            common_path: false,
            hurst: 0.4,
            k_terms: crate::noise::DEFAULT_LEVY_TERMS,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub a_rot: f64,
    pub rate: f64,
    pub a: f64,
    pub b: f64,
    pub s12: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            a_rot: 0.5,
            rate: 1.0,
            a: 1.0,
            b: -1.0,
            s12: 1.0,
        }
    }
}

impl ParamsSection {
    fn stream_params(&self) -> StreamParams {
        StreamParams::new(self.a_rot, self.rate, self.a, self.b, self.s12)
    }
}

/// Initial vortex configuration; defaults to unit strengths at the cube
/// roots of −1.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSection {
    pub positions: Option<Vec<[f64; 2]>>,
    pub strengths: Option<Vec<f64>>,
}

impl InitialSection {
    fn state(&self) -> Result<VortexState> {
        match &self.positions {
            None => {
                if self.strengths.is_some() {
                    return Err(Error::Config(
                        "initial strengths given without positions".into(),
                    ));
                }
                Ok(VortexState::equilateral_triad())
            }
            Some(pos) => {
                let positions: Vec<Vec2> = pos.iter().map(|p| Vec2::new(p[0], p[1])).collect();
                let strengths = self
                    .strengths
                    .clone()
                    .unwrap_or_else(|| vec![1.0; positions.len()]);
                VortexState::new(positions, strengths)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldsGridSection {
    /// xi1 | xi2 | ito-correction | wz-commutator
    pub field: String,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Default for FieldsGridSection {
    fn default() -> Self {
        FieldsGridSection {
            field: "wz-commutator".into(),
            xmin: -2.0,
            xmax: 2.0,
            ymin: -2.0,
            ymax: 2.0,
            nx: 41,
            ny: 41,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HistogramSection {
    pub nx: usize,
    pub ny: usize,
    /// xmin, xmax, ymin, ymax; auto-fit with 5% padding when omitted.
    pub bounds: Option<[f64; 4]>,
}

impl Default for HistogramSection {
    fn default() -> Self {
        HistogramSection {
            nx: HistogramGrid::DEFAULT_NX,
            ny: HistogramGrid::DEFAULT_NY,
            bounds: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HomogenizeSection {
    pub a: Vec<Vec<f64>>,
    pub d: Vec<Vec<f64>>,
    pub eps: f64,
    pub horizon: f64,
    pub dt: f64,
    /// Defaults to ten relaxation times of the slowest mode.
    pub lag_cutoff: Option<f64>,
    pub blocks: usize,
    pub resamples: usize,
    /// Externally supplied λ trajectory; when set, simulation is skipped
    /// and no oracle comparison is reported.
    pub trajectory_csv: Option<PathBuf>,
    /// Also dump the simulated fast trajectory as CSV.
    pub dump_trajectory: bool,
}

impl Default for HomogenizeSection {
    fn default() -> Self {
        HomogenizeSection {
            a: vec![vec![1.0, 1.0], vec![-1.0, 1.0]],
            d: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            eps: 1.0,
            horizon: 10_000.0,
            dt: 0.05,
            lag_cutoff: None,
            blocks: 50,
            resamples: 200,
            trajectory_csv: None,
            dump_trajectory: false,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    /// Flag overrides, applied after loading.
    pub fn apply_overrides(
        &mut self,
        experiment: Option<String>,
        seed: Option<u64>,
        out: Option<PathBuf>,
        methods: Option<Vec<String>>,
    ) {
        if let Some(e) = experiment {
            self.experiment = e;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out = o;
        }
        if let Some(m) = methods {
            self.run.methods = m;
        }
    }

    fn method_specs(&self) -> Result<Vec<MethodSpec>> {
        if self.run.methods.is_empty() {
            return Err(Error::Config("no methods requested".into()));
        }
        self.run
            .methods
            .iter()
            .map(|name| {
                let mut spec = MethodSpec::parse(name)?;
                if spec.uses_levy_area {
                    spec.k_terms = Some(self.run.k_terms);
                }
                Ok(spec)
            })
            .collect()
    }

    fn ensemble_config(&self, method: MethodSpec, members: usize) -> Result<EnsembleConfig> {
        Ok(EnsembleConfig {
            members,
            seed: self.seed,
            horizon: self.run.horizon,
            dt: self.run.dt,
            method,
            params: self.params.stream_params(),
            initial: self.initial.state()?,
            common_path: self.run.common_path,
            record_every: self.run.record_every,
            hurst: Some(self.run.hurst),
        })
    }
}

/// What a run produced: file paths relative to the output directory and
/// the failures that occurred without aborting the run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub seed: u64,
    pub ok: bool,
    pub files: Vec<String>,
    pub failures: Vec<String>,
}

#[derive(Serialize)]
struct MinMax {
    min: f64,
    max: f64,
}

#[derive(Serialize)]
struct EnsembleSummary {
    method: String,
    members: usize,
    failed_members: usize,
    area: MinMax,
    angle: MinMax,
}

#[derive(Serialize)]
struct IdentitySups {
    t_x: f64,
    t_y: f64,
    h: f64,
    r: f64,
}

#[derive(Serialize)]
struct PathwiseMethodReport {
    method: String,
    max_area_deviation: f64,
    max_angle_deviation: f64,
    identity_residuals: IdentitySups,
}

#[derive(Serialize)]
struct HomogenizeReport {
    e: Vec<Vec<f64>>,
    m: Vec<Vec<f64>>,
    s_prime: Vec<Vec<f64>>,
    dchol: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    se_e: Vec<Vec<f64>>,
    se_s_prime: Vec<Vec<f64>>,
    lag_cutoff: f64,
    samples: usize,
    blocks: usize,
    block_len: usize,
    resamples: usize,
    oracle_e: Option<Vec<Vec<f64>>>,
    /// Every E entry within three bootstrap standard errors of the oracle.
    consistent_with_oracle: Option<bool>,
    /// Every anomaly entry within three standard errors of zero.
    anomaly_consistent_with_zero: bool,
}

fn rows(mat: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..mat.nrows())
        .map(|i| (0..mat.ncols()).map(|j| mat[(i, j)]).collect())
        .collect()
}

struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(OutDir {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write<F>(&mut self, name: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        body(&mut w)?;
        w.flush()?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)
                .map_err(|e| Error::Config(format!("serialize {name}: {e}")))?;
            writeln!(w)?;
            Ok(())
        })
    }
}

/// Run the configured experiment, write its artifacts and the manifest,
/// and report what happened. `Err` means the configuration itself was
/// unusable; member-level failures land in the summary instead.
pub fn execute(config: &RunConfig) -> Result<RunSummary> {
    let mut out = OutDir::create(&config.out)?;
    let failures = match config.experiment.as_str() {
        "single" => cmd_single(config, &mut out)?,
        "ensemble" => cmd_ensemble(config, &mut out)?,
        "pathwise-compare" => cmd_pathwise_compare(config, &mut out)?,
        "homogenize" => cmd_homogenize(config, &mut out)?,
        "fields-grid" => cmd_fields_grid(config, &mut out)?,
        other => {
            return Err(Error::Config(format!(
                "unknown experiment {other:?} (want single, ensemble, pathwise-compare, homogenize, or fields-grid)"
            )))
        }
    };
    let mut summary = RunSummary {
        experiment: config.experiment.clone(),
        seed: config.seed,
        ok: failures.is_empty(),
        files: out.files.clone(),
        failures,
    };
    summary.files.push("manifest.json".into());
    out.write_json("manifest.json", &summary)?;
    Ok(summary)
}

/// One trajectory per method, all sharing the member-0 realization.
fn single_runs(config: &RunConfig) -> Result<Vec<(MethodSpec, Trajectory)>> {
    let specs = config.method_specs()?;
    let mut runs = Vec::new();
    for spec in specs {
        let mut cfg = config.ensemble_config(spec.clone(), 1)?;
        cfg.common_path = true;
        let result = run_ensemble(&cfg)?;
        let outcome = result.outcomes.into_iter().next().expect("one member");
        runs.push((spec, outcome.result?));
    }
    Ok(runs)
}

fn diagnostics_file_name(spec: &MethodSpec) -> String {
    format!("diagnostics-{}.csv", spec.label().to_lowercase())
}

fn write_single_diagnostics(
    out: &mut OutDir,
    spec: &MethodSpec,
    trajectory: Trajectory,
) -> Result<()> {
    let solo = EnsembleResult {
        outcomes: vec![MemberOutcome {
            member: 0,
            path_seed: 0,
            result: Ok(trajectory),
        }],
    };
    out.write(&diagnostics_file_name(spec), |w| {
        write_member_diagnostics(w, &solo)
    })
}

fn dump_driving_paths(config: &RunConfig, out: &mut OutDir, specs: &[MethodSpec]) -> Result<()> {
    let any_brownian = specs.iter().any(|s| {
        !matches!(
            s.name,
            MethodName::Deterministic | MethodName::TypeIIAreaProcess | MethodName::Fbm
        )
    });
    let template = config.ensemble_config(specs[0].clone(), 1)?;
    let steps = template.steps()?;
    if any_brownian {
        let path = brownian(member_seed(config.seed, 0), steps, 2, config.run.dt);
        out.write("driving-path.csv", |w| path.write_csv(w))?;
    }
    for spec in specs {
        let tag = match spec.name {
            MethodName::Fbm => "fbm",
            MethodName::TypeIIAreaProcess => "pure-area",
            _ => continue,
        };
        let mut cfg = config.ensemble_config(spec.clone(), 1)?;
        cfg.common_path = true;
        let path = cfg.member_path(0)?;
        out.write(&format!("driving-path-{tag}.csv"), |w| path.write_csv(w))?;
    }
    Ok(())
}

fn cmd_single(config: &RunConfig, out: &mut OutDir) -> Result<Vec<String>> {
    let runs = single_runs(config)?;
    let specs: Vec<MethodSpec> = runs.iter().map(|(s, _)| s.clone()).collect();
    dump_driving_paths(config, out, &specs)?;
    for (spec, trajectory) in runs {
        write_single_diagnostics(out, &spec, trajectory)?;
    }
    Ok(Vec::new())
}

fn cmd_pathwise_compare(config: &RunConfig, out: &mut OutDir) -> Result<Vec<String>> {
    let runs = single_runs(config)?;
    let specs: Vec<MethodSpec> = runs.iter().map(|(s, _)| s.clone()).collect();
    dump_driving_paths(config, out, &specs)?;
    let params = config.params.stream_params();
    let mut reports = Vec::new();
    for (spec, trajectory) in runs {
        let mut cfg = config.ensemble_config(spec.clone(), 1)?;
        cfg.common_path = true;
        let path = cfg.member_path(0)?;
        let residuals = pathwise_identities(&trajectory, &path, &params)?;
        let first = &trajectory.records[0];
        let (mut area_dev, mut angle_dev) = (0.0f64, 0.0f64);
        for rec in &trajectory.records {
            area_dev = area_dev.max((rec.area - first.area).abs());
            angle_dev = angle_dev.max((rec.angle - first.angle).abs());
        }
        reports.push(PathwiseMethodReport {
            method: spec.label().to_string(),
            max_area_deviation: area_dev,
            max_angle_deviation: angle_dev,
            identity_residuals: IdentitySups {
                t_x: max_abs(&residuals.t_x),
                t_y: max_abs(&residuals.t_y),
                h: max_abs(&residuals.h),
                r: max_abs(&residuals.r),
            },
        });
        write_single_diagnostics(out, &spec, trajectory)?;
    }
    out.write_json("pathwise-summary.json", &reports)?;
    Ok(Vec::new())
}

fn cmd_ensemble(config: &RunConfig, out: &mut OutDir) -> Result<Vec<String>> {
    let spec = config
        .method_specs()?
        .into_iter()
        .next()
        .expect("method_specs validates non-emptiness");
    let cfg = config.ensemble_config(spec.clone(), config.run.members)?;
    let result = run_ensemble(&cfg)?;
    let failures: Vec<String> = result
        .failures()
        .iter()
        .map(|(member, err)| format!("member {member}: {err}"))
        .collect();
    if failures.len() == result.outcomes.len() {
        return Err(Error::Config("every ensemble member failed".into()));
    }

    out.write("members.csv", |w| write_member_diagnostics(w, &result))?;

    let (t, areas) = result.series(|r| r.area)?;
    let (_, angles) = result.series(|r| r.angle)?;
    let area_env = envelope(&t, &areas)?;
    let angle_env = envelope(&t, &angles)?;
    out.write("envelope-area.csv", |w| write_envelope_csv(w, &area_env))?;
    out.write("envelope-angle.csv", |w| write_envelope_csv(w, &angle_env))?;

    let trajectories: Vec<&Trajectory> = result.trajectories().map(|(_, t)| t).collect();
    let bounds = config
        .histogram
        .bounds
        .map(|b| (b[0], b[1], b[2], b[3]));
    let grid = histogram(
        &trajectories,
        config.histogram.nx,
        config.histogram.ny,
        bounds,
    )?;
    out.write("histogram.csv", |w| write_histogram_csv(w, &grid))?;

    let span = |rows: &[Vec<f64>]| {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for row in rows {
            for &v in row {
                min = min.min(v);
                max = max.max(v);
            }
        }
        MinMax { min, max }
    };
    out.write_json(
        "summary.json",
        &EnsembleSummary {
            method: spec.label().to_string(),
            members: config.run.members,
            failed_members: failures.len(),
            area: span(&areas),
            angle: span(&angles),
        },
    )?;
    Ok(failures)
}

fn cmd_fields_grid(config: &RunConfig, out: &mut OutDir) -> Result<Vec<String>> {
    let g = &config.fields_grid;
    if g.nx < 2 || g.ny < 2 || !(g.xmax > g.xmin) || !(g.ymax > g.ymin) {
        return Err(Error::Config("degenerate fields grid".into()));
    }
    let params = config.params.stream_params();
    let x_c = center_of_vorticity(&config.initial.state()?)?;
    let eval: fn(Vec2, Vec2, &StreamParams) -> Vec2 = match g.field.as_str() {
        "xi1" => |x, c, p| xi1(x, c, p),
        "xi2" => |_, _, p| xi2(p),
        "ito-correction" => |x, c, p| ito_strat_correction(x, c, p),
        "wz-commutator" => |x, c, p| wz_commutator(x, c, p),
        other => {
            return Err(Error::Config(format!(
                "unknown field {other:?} (want xi1, xi2, ito-correction, or wz-commutator)"
            )))
        }
    };
    out.write(&format!("fields-{}.csv", g.field), |w| {
        writeln!(w, "x,y,u,v")?;
        for j in 0..g.ny {
            let y = g.ymin + (g.ymax - g.ymin) * j as f64 / (g.ny - 1) as f64;
            for i in 0..g.nx {
                let x = g.xmin + (g.xmax - g.xmin) * i as f64 / (g.nx - 1) as f64;
                let v = eval(Vec2::new(x, y), x_c, &params);
                writeln!(w, "{},{},{},{}", x, y, v.x, v.y)?;
            }
        }
        Ok(())
    })?;
    Ok(Vec::new())
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let m = rows.len();
    if m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Config(format!("{what} must be square")));
    }
    Ok(DMatrix::from_row_iterator(
        m,
        m,
        rows.iter().flatten().copied(),
    ))
}

fn cmd_homogenize(config: &RunConfig, out: &mut OutDir) -> Result<Vec<String>> {
    let h = &config.homogenize;
    let (path, ou) = match &h.trajectory_csv {
        Some(file) => {
            let reader = std::io::BufReader::new(File::open(file)?);
            (FastPath::read_csv(reader)?, None)
        }
        None => {
            let ou = FastOU::new(
                matrix_from_rows(&h.a, "drift")?,
                matrix_from_rows(&h.d, "diffusion")?,
                h.eps,
            )?;
            let steps = (h.horizon / h.dt).round() as usize;
            let path = simulate_fast(&ou, config.seed, steps, h.dt)?;
            (path, Some(ou))
        }
    };
    let lag_cutoff = match (h.lag_cutoff, &ou) {
        (Some(c), _) => c,
        (None, Some(ou)) => ou.default_lag_cutoff(),
        (None, None) => {
            return Err(Error::Config(
                "an external trajectory needs an explicit lag_cutoff".into(),
            ))
        }
    };
    if h.dump_trajectory {
        out.write("fast-path.csv", |w| path.write_csv(w))?;
    }
    let run = estimate_with_bootstrap(&path, lag_cutoff, h.blocks, h.resamples, config.seed)?;
    let oracle = ou.as_ref().map(lyapunov_oracle).transpose()?;

    let est = &run.estimate;
    let within = |value: f64, target: f64, se: f64| (value - target).abs() <= 3.0 * se;
    let consistent_with_oracle = oracle.as_ref().map(|oracle| {
        (0..est.e.nrows()).all(|i| {
            (0..est.e.ncols())
                .all(|j| within(est.e[(i, j)], oracle[(i, j)], run.errors.se_e[(i, j)]))
        })
    });
    let anomaly_consistent_with_zero = (0..est.e.nrows()).all(|i| {
        (0..est.e.ncols())
            .all(|j| within(est.s_prime[(i, j)], 0.0, run.errors.se_s_prime[(i, j)]))
    });
    out.write_json(
        "homogenize-report.json",
        &HomogenizeReport {
            e: rows(&est.e),
            m: rows(&est.m),
            s_prime: rows(&est.s_prime),
            dchol: rows(&est.dchol),
            s: rows(&est.s),
            se_e: rows(&run.errors.se_e),
            se_s_prime: rows(&run.errors.se_s_prime),
            lag_cutoff: est.lag_cutoff,
            samples: est.samples,
            blocks: run.blocks,
            block_len: run.block_len,
            resamples: run.errors.resamples,
            oracle_e: oracle.as_ref().map(rows),
            consistent_with_oracle,
            anomaly_consistent_with_zero,
        },
    )?;
    Ok(Vec::new())
}
