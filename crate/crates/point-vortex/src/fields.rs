//! Spatial vector fields: Biot–Savart velocity with adaptive regularization,
//! the two noise fields, and the drift corrections that distinguish the noise
//! interpretations.
//!
//! The fields, in the frame x̃ = x − x_c of the center of vorticity:
//!
//! ```text
//! K(d)        = (−d_y, d_x)/(2π‖d‖²)                         Biot–Savart kernel
//! ξ₁(x)       = A r e^{−r‖x̃‖²/2} (ỹ, −x̃)                    localized rotation
//! ξ₂          = (−b, a)                                      rigid translation
//! ½(ξ₁·∇)ξ₁   = ½ A²r² e^{−r‖x̃‖²} (−x̃, −ỹ)                  Itô–Stratonovich correction
//! [ξ₁,ξ₂](x)  = A r e^{−r‖x̃‖²/2} (−rbx̃ỹ + a(rỹ²−1),
//!                                  −rax̃ỹ + b(rx̃²−1))        Lie bracket
//! ```
//!
//! The center x_c is recomputed from the current state at every stage
//! evaluation but treated as frozen during spatial differentiation. All
//! formulas here are cross-checked against central finite differences in the
//! tests, which pins sign conventions once and for all.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{center_of_vorticity, Vec2, VortexState};
use crate::{Error, Result};

/// Parameters of the two stream-function fields and the Lévy-area
/// perturbation. `s` must be antisymmetric exactly; use the constructors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamParams {
    /// Rotation amplitude A > 0.
    pub a_rot: f64,
    /// Gaussian decay rate r > 0 of the rotation field.
    pub rate: f64,
    /// Translation parameters: ξ₂ = (−b, a).
    pub a: f64,
    pub b: f64,
    /// Antisymmetric 2×2 Lévy-area perturbation matrix.
    pub s: [[f64; 2]; 2],
}

impl StreamParams {
    pub fn new(a_rot: f64, rate: f64, a: f64, b: f64, s12: f64) -> Self {
        StreamParams {
            a_rot,
            rate,
            a,
            b,
            s: [[0.0, s12], [-s12, 0.0]],
        }
    }

    /// The standard experiment parameters: A = ½, r = 1, a = 1, b = −1,
    /// s = [[0, 1], [−1, 0]].
    pub fn benchmark() -> Self {
        StreamParams::new(0.5, 1.0, 1.0, -1.0, 1.0)
    }

    pub fn s12(&self) -> f64 {
        self.s[0][1]
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.s[0][0] == 0.0 && self.s[1][1] == 0.0 && self.s[0][1] == -self.s[1][0]
    }
}

/// Flat state vector q = (x₁..x_n, y₁..y_n).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StateVector {
    pub q: Vec<f64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        StateVector { q: vec![0.0; 2 * n] }
    }

    pub fn from_positions(positions: &[Vec2]) -> Self {
        let n = positions.len();
        let mut q = vec![0.0; 2 * n];
        for (k, p) in positions.iter().enumerate() {
            q[k] = p.x;
            q[n + k] = p.y;
        }
        StateVector { q }
    }

    pub fn n(&self) -> usize {
        self.q.len() / 2
    }

    pub fn position(&self, k: usize) -> Vec2 {
        Vec2::new(self.q[k], self.q[self.n() + k])
    }

    pub fn positions(&self) -> Vec<Vec2> {
        (0..self.n()).map(|k| self.position(k)).collect()
    }

    /// self += c · v, the only arithmetic the stage recursion needs.
    pub fn axpy(&mut self, c: f64, v: &StateVector) {
        debug_assert_eq!(self.q.len(), v.q.len());
        for (a, b) in self.q.iter_mut().zip(&v.q) {
            *a += c * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().all(|c| c.is_finite())
    }
}

/// Which drift/diffusion assembly a method integrates. Lévy-area and fBM
/// variants reuse the Stratonovich assembly; they differ only in how the
/// driving path is produced and corrected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoiseModel {
    Deterministic,
    Ito,
    Stratonovich,
    /// Stratonovich drift with the Wong–Zakai anomaly absorbed into f.
    StratonovichWz,
    /// Deterministic flow of u + s¹²[ξ₁,ξ₂]; diffusion switched off.
    PureArea,
}

/// Radial Newtonian potential G(sep) = −ln(sep)/2π.
pub fn greens(sep: f64) -> Result<f64> {
    if sep <= 0.0 {
        return Err(Error::NonpositiveSeparation { sep });
    }
    Ok(-sep.ln() / (2.0 * PI))
}

/// Biot–Savart kernel with adaptive mollification: the regularized form is
/// used only inside the ball ‖d‖ ≤ δ₁, so well-separated dynamics see the
/// exact kernel.
pub fn bs_kernel(d: Vec2, delta1: f64) -> Vec2 {
    let d2 = d.norm_sq();
    let denom = if d2 <= delta1 * delta1 {
        2.0 * PI * (d2 + delta1 * delta1)
    } else {
        2.0 * PI * d2
    };
    d.perp() / denom
}

/// Velocity induced at vortex `alpha` by all the others:
/// u_α = Σ_{β≠α} Γ_β K_δ₁(𝒙_α − 𝒙_β).
pub fn deterministic_velocity(state: &VortexState, alpha: usize) -> Vec2 {
    let x_a = state.positions[alpha];
    let mut u = Vec2::ZERO;
    for (beta, (x_b, gamma)) in state.positions.iter().zip(&state.strengths).enumerate() {
        if beta != alpha {
            u += *gamma * bs_kernel(x_a - *x_b, state.reg_delta1);
        }
    }
    u
}

/// Velocity the configuration induces at an arbitrary field point (used for
/// grid visualization; the regularized kernel handles points on a vortex).
pub fn induced_velocity(state: &VortexState, x: Vec2) -> Vec2 {
    let mut u = Vec2::ZERO;
    for (x_b, gamma) in state.positions.iter().zip(&state.strengths) {
        u += *gamma * bs_kernel(x - *x_b, state.reg_delta1);
    }
    u
}

/// Localized rotation field about the (frozen) center x_c.
pub fn xi1(x: Vec2, x_c: Vec2, p: &StreamParams) -> Vec2 {
    let d = x - x_c;
    let amp = p.a_rot * p.rate * (-0.5 * p.rate * d.norm_sq()).exp();
    Vec2::new(amp * d.y, -amp * d.x)
}

/// Constant translation field ξ₂ = (−b, a).
pub fn xi2(p: &StreamParams) -> Vec2 {
    Vec2::new(-p.b, p.a)
}

/// Itô-to-Stratonovich drift correction ½ Σ_k (ξ_k·∇)ξ_k. Only ξ₁
/// contributes; the constant field has no self-advection.
pub fn ito_strat_correction(x: Vec2, x_c: Vec2, p: &StreamParams) -> Vec2 {
    let d = x - x_c;
    let c = 0.5 * p.a_rot * p.a_rot * p.rate * p.rate * (-p.rate * d.norm_sq()).exp();
    Vec2::new(-c * d.x, -c * d.y)
}

/// Closed-form divergence of the Itô–Stratonovich correction,
/// A²r²(r‖x̃‖² − 1)e^{−r‖x̃‖²}. Vanishes exactly on the circle r‖x̃‖² = 1.
pub fn correction_divergence(x: Vec2, x_c: Vec2, p: &StreamParams) -> f64 {
    let d2 = (x - x_c).norm_sq();
    let a2r2 = p.a_rot * p.a_rot * p.rate * p.rate;
    a2r2 * (p.rate * d2 - 1.0) * (-p.rate * d2).exp()
}

/// Lie bracket [ξ₁, ξ₂] = (ξ₁·∇)ξ₂ − (ξ₂·∇)ξ₁ in closed form.
pub fn wz_commutator(x: Vec2, x_c: Vec2, p: &StreamParams) -> Vec2 {
    let d = x - x_c;
    let amp = p.a_rot * p.rate * (-0.5 * p.rate * d.norm_sq()).exp();
    let rxy = p.rate * d.x * d.y;
    Vec2::new(
        amp * (-p.b * rxy + p.a * (p.rate * d.y * d.y - 1.0)),
        amp * (-p.a * rxy + p.b * (p.rate * d.x * d.x - 1.0)),
    )
}

/// Wong–Zakai anomaly drift ½ Σ_{ij} s^{ij}[ξ_i, ξ_j] = s¹²[ξ₁, ξ₂].
pub fn wz_drift(x: Vec2, x_c: Vec2, p: &StreamParams) -> Vec2 {
    p.s12() * wz_commutator(x, x_c, p)
}

/// Stream function of the rotation field: ψ₁ = A e^{−r‖x−x_c‖²/2}. Its
/// advection field (∂_yψ₁, −∂_xψ₁) is −ξ₁, the first diffusion column.
pub fn psi1(x: Vec2, x_c: Vec2, p: &StreamParams) -> f64 {
    p.a_rot * (-0.5 * p.rate * (x - x_c).norm_sq()).exp()
}

/// Stream function of the translation field: ψ₂ = a·x + b·y. Its advection
/// field (∂_yψ₂, −∂_xψ₂) = (b, −a) is −ξ₂, the second diffusion column.
pub fn psi2(x: Vec2, p: &StreamParams) -> f64 {
    p.a * x.x + p.b * x.y
}

/// Stream function of the anomaly drift:
/// ψ_wz = A r (b x̃ − a ỹ) e^{−r‖x̃‖²/2} with x̃ = x − x_c. Its advection
/// field (∂_yψ_wz, −∂_xψ_wz) equals [ξ₁, ξ₂] exactly, so the pure-area flow
/// u + s¹²[ξ₁, ξ₂] conserves H + s¹² Σ_α ψ_wz(𝒙_α) for equal strengths.
pub fn psi_wz(x: Vec2, x_c: Vec2, p: &StreamParams) -> f64 {
    let d = x - x_c;
    p.a_rot * p.rate * (p.b * d.x - p.a * d.y) * (-0.5 * p.rate * d.norm_sq()).exp()
}

/// Assemble the state-space drift f and diffusion columns G = [g₁ g₂] for one
/// stage evaluation. The Itô model shares the Stratonovich drift: the
/// interpretation is realized by the integrator's diffusion tableau, never by
/// drift modification.
///
/// The diffusion columns are the Hamiltonian advection fields −ξ₁ and −ξ₂:
/// every flow in the system moves vortices by (∂_yψ, −∂_xψ)/Γ for its stream
/// function ψ, the negative of the perpendicular gradient (−∂_yψ, ∂_xψ) that
/// the displayed ξ's equal. This sign gives the impulse evolutions
/// dT_x = nb∘dW², dT_y = −na∘dW² (frame-conserved T̂_x, T̂_y) and makes the
/// anomaly drift the advection field of Σψ_wz, so H + Σψ_wz is conserved.
/// The Lie bracket, Itô correction, and anomaly drift are unchanged by
/// negating both fields, so those closed forms apply verbatim.
pub fn assemble(
    state: &VortexState,
    p: &StreamParams,
    model: NoiseModel,
) -> Result<(StateVector, Vec<StateVector>)> {
    let n = state.n();
    let mut f = StateVector::zeros(n);
    let mut g = vec![StateVector::zeros(n), StateVector::zeros(n)];

    let needs_xc = !matches!(model, NoiseModel::Deterministic);
    let x_c = if needs_xc {
        center_of_vorticity(state)?
    } else {
        Vec2::ZERO
    };

    for k in 0..n {
        let x = state.positions[k];
        let mut drift = deterministic_velocity(state, k);
        if matches!(model, NoiseModel::StratonovichWz | NoiseModel::PureArea) {
            drift += wz_drift(x, x_c, p);
        }
        f.q[k] = drift.x;
        f.q[n + k] = drift.y;

        let diffusing = matches!(
            model,
            NoiseModel::Ito | NoiseModel::Stratonovich | NoiseModel::StratonovichWz
        );
        if diffusing {
            let g1 = -xi1(x, x_c, p);
            let g2 = -xi2(p);
            g[0].q[k] = g1.x;
            g[0].q[n + k] = g1.y;
            g[1].q[k] = g2.x;
            g[1].q[n + k] = g2.y;
        }
    }
    Ok((f, g))
}
