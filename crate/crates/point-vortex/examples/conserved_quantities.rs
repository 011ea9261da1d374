//! Noise-free benchmark: three unit vortices at the cube roots of −1 form a
//! relative equilibrium, so every shape and impulse diagnostic should sit
//! still for the whole run. Prints the worst drift of each over [0, 40].

use point_vortex::ensemble::max_abs;
use point_vortex::fields::StreamParams;
use point_vortex::geometry::VortexState;
use point_vortex::integrators::{integrate, MethodSpec};
use point_vortex::noise::zero_path;

fn main() -> point_vortex::Result<()> {
    let dt = 1.0 / 250.0;
    let steps = 10_000;
    let method = MethodSpec::by_number(1)?;
    let path = zero_path(steps, 2, dt);
    let trajectory = integrate(
        &method,
        &VortexState::equilateral_triad(),
        &StreamParams::benchmark(),
        &path,
        10,
    )?;

    let first = trajectory.records[0];
    let drift = |f: fn(&point_vortex::geometry::DiagnosticsRecord) -> f64| {
        let base = f(&first);
        max_abs(
            &trajectory
                .records
                .iter()
                .map(|r| f(r) - base)
                .collect::<Vec<_>>(),
        )
    };

    println!("deterministic triad over [0, {}]:", steps as f64 * dt);
    println!("  initial area  {:.12} (3√3/4 = {:.12})", first.area, 3.0 * 3f64.sqrt() / 4.0);
    println!("  initial angle {:.12} (π/3   = {:.12})", first.angle, std::f64::consts::FRAC_PI_3);
    println!("  max |Δarea|  {:.3e}", drift(|r| r.area));
    println!("  max |Δangle| {:.3e}", drift(|r| r.angle));
    println!("  max |ΔT_x|   {:.3e}", drift(|r| r.t_x));
    println!("  max |ΔT_y|   {:.3e}", drift(|r| r.t_y));
    println!("  max |ΔR|     {:.3e}", drift(|r| r.r));
    println!("  max |ΔH|     {:.3e}", drift(|r| r.h));
    Ok(())
}
