//! Explicit additive Runge–Kutta stepping with split drift/diffusion
//! tableaux, the seven named methods, and the Lévy-area correction.
//!
//! One step of the scheme evaluates s explicit stages
//!
//! ```text
//! Q^k = q + Σ_{j<k} a_{kj} f(Q^j) Δt + Σ_{j<k} ã_{kj} Σᵢ gᵢ(Q^j) ΔWⁱ,
//! q′  = q + Σ_k b_k f(Q^k) Δt + Σ_k b̃_k Σᵢ gᵢ(Q^k) ΔWⁱ,
//! ```
//!
//! so the drift and the diffusion each carry their own tableau. The seven
//! methods differ only in tableau choice, drift assembly, driving path, and
//! the optional post-step area correction:
//!
//! | # | name              | tableaux   | drift              | extras            |
//! |---|-------------------|------------|--------------------|-------------------|
//! | 1 | Deterministic     | rk4 / zero | u                  |                   |
//! | 2 | Stratonovich      | rk4 / rk4  | u                  |                   |
//! | 3 | Ito               | rk4 / euler| u                  |                   |
//! | 4 | TypeI-WZ          | rk4 / rk4  | u + s¹²[ξ₁,ξ₂]     |                   |
//! | 5 | TypeII-AreaProcess| rk4 / zero | u + s¹²[ξ₁,ξ₂]     |                   |
//! | 6 | Stratonovich-NLA  | rk4 / rk4  | u                  | per-step area add |
//! | 7 | FBM               | rk4 / rk4  | u                  | fractional path   |
//!
//! The Itô interpretation comes entirely from the Euler diffusion tableau
//! (the noise enters through the start-of-step state only), never from a
//! correction drift.

use crate::fields::{assemble, wz_commutator, NoiseModel, StateVector, StreamParams};
use crate::geometry::{center_of_vorticity, diagnostics, DiagnosticsRecord, VortexState};
use crate::noise::{area_rng, levy_area, AntisymMat, DrivingPath, DEFAULT_LEVY_TERMS};
use crate::{Error, Result};

/// Paired drift/diffusion Butcher tableaux of an explicit scheme.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleButcherTableau {
    pub stages: usize,
    pub c: Vec<f64>,
    pub b: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub c_tilde: Vec<f64>,
    pub b_tilde: Vec<f64>,
    pub a_tilde: Vec<Vec<f64>>,
}

fn check_lower_triangular(name: &str, a: &[Vec<f64>], s: usize) -> Result<()> {
    for (k, row) in a.iter().enumerate() {
        if row.len() != s {
            return Err(Error::Config(format!("{name} tableau row {k} has wrong length")));
        }
        for (j, &v) in row.iter().enumerate() {
            if j >= k && v != 0.0 {
                return Err(Error::Config(format!(
                    "{name} tableau is not strictly lower triangular at ({k},{j})"
                )));
            }
        }
    }
    Ok(())
}

fn check_row_sums(name: &str, a: &[Vec<f64>], c: &[f64]) -> Result<()> {
    for (k, row) in a.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - c[k]).abs() > 1e-14 {
            return Err(Error::Config(format!(
                "{name} tableau row {k} sums to {sum}, expected c = {}",
                c[k]
            )));
        }
    }
    Ok(())
}

impl DoubleButcherTableau {
    /// Validated constructor: both coefficient matrices strictly lower
    /// triangular, Σb = 1 for the drift tableau, row sums matching c on both
    /// sides. The diffusion weights may sum to anything (zero disables noise).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c: Vec<f64>,
        b: Vec<f64>,
        a: Vec<Vec<f64>>,
        c_tilde: Vec<f64>,
        b_tilde: Vec<f64>,
        a_tilde: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let s = c.len();
        if [b.len(), a.len(), c_tilde.len(), b_tilde.len(), a_tilde.len()] != [s; 5] {
            return Err(Error::Config("tableau vectors disagree on stage count".into()));
        }
        check_lower_triangular("drift", &a, s)?;
        check_lower_triangular("diffusion", &a_tilde, s)?;
        check_row_sums("drift", &a, &c)?;
        check_row_sums("diffusion", &a_tilde, &c_tilde)?;
        let bsum: f64 = b.iter().sum();
        if (bsum - 1.0).abs() > 1e-14 {
            return Err(Error::Config(format!(
                "drift tableau weights sum to {bsum}, expected 1"
            )));
        }
        Ok(DoubleButcherTableau {
            stages: s,
            c,
            b,
            a,
            c_tilde,
            b_tilde,
            a_tilde,
        })
    }

    /// Build from two registered tableau names; see [`tableau_coefficients`].
    pub fn named(drift: &str, diffusion: &str) -> Result<Self> {
        let (c, b, a) = tableau_coefficients(drift)?;
        let (c_t, b_t, a_t) = tableau_coefficients(diffusion)?;
        DoubleButcherTableau::new(c, b, a, c_t, b_t, a_t)
    }
}

/// Registered 4-stage tableaux, by name:
/// - `"rk4"`: the classical scheme, c = (0, ½, ½, 1), b = (1/6, 1/3, 1/3, 1/6);
/// - `"euler"`: the start-point scheme padded to 4 stages, c = (0, 1, 0, 0),
///   a₂₁ = 1, b = (1, 0, 0, 0);
/// - `"zero"`: all coefficients zero (disables that side entirely).
#[allow(clippy::type_complexity)]
pub fn tableau_coefficients(name: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<Vec<f64>>)> {
    let z4 = vec![0.0; 4];
    match name {
        "rk4" => Ok((
            vec![0.0, 0.5, 0.5, 1.0],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            vec![
                z4.clone(),
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
        )),
        "euler" => Ok((
            vec![0.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0, 0.0],
            vec![
                z4.clone(),
                vec![1.0, 0.0, 0.0, 0.0],
                z4.clone(),
                z4.clone(),
            ],
        )),
        "zero" => Ok((z4.clone(), z4.clone(), vec![z4; 4])),
        other => Err(Error::Config(format!("unknown tableau name {other:?}"))),
    }
}

/// The seven method identities.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodName {
    Deterministic,
    Stratonovich,
    Ito,
    TypeIWz,
    TypeIIAreaProcess,
    StratonovichNla,
    Fbm,
}

/// A fully specified stepping method: identity, tableaux, and the Lévy-area
/// options of the area-corrected scheme.
#[derive(Clone, Debug)]
pub struct MethodSpec {
    pub name: MethodName,
    pub tableau: DoubleButcherTableau,
    pub uses_levy_area: bool,
    /// Truncation depth for per-step area sampling when the driving path
    /// carries no precomputed areas.
    pub k_terms: Option<usize>,
}

impl MethodSpec {
    /// The methods by their conventional numbering 1–7.
    pub fn by_number(number: u8) -> Result<Self> {
        let (name, diffusion) = match number {
            1 => (MethodName::Deterministic, "zero"),
            2 => (MethodName::Stratonovich, "rk4"),
            3 => (MethodName::Ito, "euler"),
            4 => (MethodName::TypeIWz, "rk4"),
            5 => (MethodName::TypeIIAreaProcess, "zero"),
            6 => (MethodName::StratonovichNla, "rk4"),
            7 => (MethodName::Fbm, "rk4"),
            other => {
                return Err(Error::Config(format!(
                    "method number {other} outside 1..=7"
                )))
            }
        };
        Ok(MethodSpec {
            name,
            tableau: DoubleButcherTableau::named("rk4", diffusion)?,
            uses_levy_area: name == MethodName::StratonovichNla,
            k_terms: (name == MethodName::StratonovichNla).then_some(DEFAULT_LEVY_TERMS),
        })
    }

    /// Parse a number ("3") or a name ("Ito", case-insensitive).
    pub fn parse(text: &str) -> Result<Self> {
        if let Ok(n) = text.parse::<u8>() {
            return MethodSpec::by_number(n);
        }
        let lower = text.to_ascii_lowercase();
        let number = match lower.as_str() {
            "deterministic" => 1,
            "stratonovich" => 2,
            "ito" => 3,
            "typei-wz" => 4,
            "typeii-areaprocess" => 5,
            "stratonovich-nla" => 6,
            "fbm" => 7,
            _ => {
                return Err(Error::Config(format!(
                    "unknown method {text:?}; use 1-7 or a method name"
                )))
            }
        };
        MethodSpec::by_number(number)
    }

    pub fn number(&self) -> u8 {
        match self.name {
            MethodName::Deterministic => 1,
            MethodName::Stratonovich => 2,
            MethodName::Ito => 3,
            MethodName::TypeIWz => 4,
            MethodName::TypeIIAreaProcess => 5,
            MethodName::StratonovichNla => 6,
            MethodName::Fbm => 7,
        }
    }

    pub fn label(&self) -> &'static str {
        match self.name {
            MethodName::Deterministic => "Deterministic",
            MethodName::Stratonovich => "Stratonovich",
            MethodName::Ito => "Ito",
            MethodName::TypeIWz => "TypeI-WZ",
            MethodName::TypeIIAreaProcess => "TypeII-AreaProcess",
            MethodName::StratonovichNla => "Stratonovich-NLA",
            MethodName::Fbm => "FBM",
        }
    }

    /// How the drift and diffusion columns are assembled for this method.
    pub fn noise_model(&self) -> NoiseModel {
        match self.name {
            MethodName::Deterministic => NoiseModel::Deterministic,
            MethodName::Ito => NoiseModel::Ito,
            MethodName::TypeIWz => NoiseModel::StratonovichWz,
            MethodName::TypeIIAreaProcess => NoiseModel::PureArea,
            MethodName::Stratonovich | MethodName::StratonovichNla | MethodName::Fbm => {
                NoiseModel::Stratonovich
            }
        }
    }
}

/// One explicit ARK step. `eval` produces the drift and the m diffusion
/// columns at a stage state; `dw` holds the m channel increments. `step` and
/// `t` only label blow-up errors.
pub fn ark_step(
    q: &StateVector,
    dt: f64,
    dw: &[f64],
    tab: &DoubleButcherTableau,
    step: usize,
    t: f64,
    mut eval: impl FnMut(&StateVector) -> Result<(StateVector, Vec<StateVector>)>,
) -> Result<StateVector> {
    let s = tab.stages;
    let mut drifts: Vec<StateVector> = Vec::with_capacity(s);
    let mut diffusions: Vec<Vec<StateVector>> = Vec::with_capacity(s);

    for k in 0..s {
        let mut stage = q.clone();
        for j in 0..k {
            let akj = tab.a[k][j];
            if akj != 0.0 {
                stage.axpy(akj * dt, &drifts[j]);
            }
            let atkj = tab.a_tilde[k][j];
            if atkj != 0.0 {
                for (i, col) in diffusions[j].iter().enumerate() {
                    stage.axpy(atkj * dw[i], col);
                }
            }
        }
        if !stage.is_finite() {
            return Err(Error::BlowUp { step, t });
        }
        let (f, g) = eval(&stage)?;
        debug_assert_eq!(g.len(), dw.len());
        drifts.push(f);
        diffusions.push(g);
    }

    let mut out = q.clone();
    for k in 0..s {
        if tab.b[k] != 0.0 {
            out.axpy(tab.b[k] * dt, &drifts[k]);
        }
        if tab.b_tilde[k] != 0.0 {
            for (i, col) in diffusions[k].iter().enumerate() {
                out.axpy(tab.b_tilde[k] * dw[i], col);
            }
        }
    }
    Ok(out)
}

/// Post-step area correction: displace every vortex by
/// Σ_{j₁<j₂} [field_{j₁}, field_{j₂}](𝒙_α) · A_{j₁j₂}. With the two built-in
/// fields this is [ξ₁, ξ₂](𝒙_α) · A₁₂ (negating both fields leaves the
/// bracket unchanged). The center is taken from the input state and frozen.
pub fn nla_correction(
    state: &VortexState,
    area: &AntisymMat,
    p: &StreamParams,
) -> Result<VortexState> {
    let x_c = center_of_vorticity(state)?;
    let a12 = area.get(0, 1);
    let mut out = state.clone();
    for x in &mut out.positions {
        *x += wz_commutator(*x, x_c, p) * a12;
    }
    Ok(out)
}

/// A recorded trajectory: states and diagnostics at the recording stride
/// (step 0 and the final step always included).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub steps: Vec<usize>,
    pub states: Vec<VortexState>,
    pub records: Vec<DiagnosticsRecord>,
}

impl Trajectory {
    pub fn final_state(&self) -> &VortexState {
        self.states.last().expect("trajectory has at least t = 0")
    }

    pub fn final_record(&self) -> &DiagnosticsRecord {
        self.records.last().expect("trajectory has at least t = 0")
    }
}

/// Integrate a method along a driving path, recording diagnostics every
/// `record_every` steps. Pure in (method, state0, p, path): repeated calls
/// return identical results.
pub fn integrate(
    method: &MethodSpec,
    state0: &VortexState,
    p: &StreamParams,
    path: &DrivingPath,
    record_every: usize,
) -> Result<Trajectory> {
    if record_every == 0 {
        return Err(Error::Config("record_every must be at least 1".into()));
    }
    let model = method.noise_model();
    let needs_noise = !matches!(model, NoiseModel::Deterministic | NoiseModel::PureArea);
    if needs_noise && path.m() != 2 {
        return Err(Error::ChannelMismatch {
            have: path.m(),
            need: 2,
        });
    }
    if method.uses_levy_area && path.areas.is_none() && method.k_terms.is_none() {
        return Err(Error::MissingAreas {
            method: method.label().to_string(),
        });
    }
    if method.name == MethodName::Fbm && path.hurst.is_none() {
        return Err(Error::Config(
            "the FBM method needs a fractional driving path (hurst set)".into(),
        ));
    }

    let steps = path.steps();
    let dt = path.dt;
    let w2 = if path.m() >= 2 {
        path.cumulative(1)
    } else {
        vec![0.0; steps + 1]
    };

    let mut state = state0.clone();
    let mut q = StateVector::from_positions(&state.positions);
    let mut scratch = state0.clone();
    let mut traj = Trajectory {
        steps: Vec::new(),
        states: Vec::new(),
        records: Vec::new(),
    };
    let record = |step: usize, state: &VortexState, traj: &mut Trajectory| -> Result<()> {
        let t = step as f64 * dt;
        traj.steps.push(step);
        traj.states.push(state.clone());
        traj.records
            .push(diagnostics(state, t, w2[step], p.a, p.b)?);
        Ok(())
    };
    record(0, &state, &mut traj)?;

    let no_noise = vec![0.0; path.m()];
    for step in 0..steps {
        let t = step as f64 * dt;
        let dw = if needs_noise {
            &path.increments[step]
        } else {
            &no_noise
        };
        q = ark_step(&q, dt, dw, &method.tableau, step, t, |stage| {
            for (k, x) in scratch.positions.iter_mut().enumerate() {
                *x = stage.position(k);
            }
            assemble(&scratch, p, model)
        })?;

        if method.uses_levy_area {
            let area = match &path.areas {
                Some(stored) => stored[step].clone(),
                None => {
                    let mut rng = area_rng(path.seed, step);
                    levy_area(&mut rng, &path.increments[step], dt, method.k_terms.unwrap())
                }
            };
            for (k, x) in state.positions.iter_mut().enumerate() {
                *x = q.position(k);
            }
            state = nla_correction(&state, &area, p)?;
            q = StateVector::from_positions(&state.positions);
        }

        if !q.is_finite() {
            return Err(Error::BlowUp {
                step,
                t: (step + 1) as f64 * dt,
            });
        }

        let done = step + 1;
        if done % record_every == 0 || done == steps {
            for (k, x) in state.positions.iter_mut().enumerate() {
                *x = q.position(k);
            }
            record(done, &state, &mut traj)?;
        }
    }
    Ok(traj)
}
