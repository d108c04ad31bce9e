//! Model Poisson problems on the geometry presets.

use std::f64::consts::PI;

use crate::bspline::GeometryPreset;

/// `u = (ρ - 1)(ρ - 4) sin(πz) sin(7xy)` with `ρ = x² + y²`, and its
/// gradient. Vanishes on the whole boundary of the quarter annulus.
pub fn annulus_exact(p: [f64; 3]) -> (f64, [f64; 3]) {
    let [x, y, z] = p;
    let rho = x * x + y * y;
    let a = (rho - 1.0) * (rho - 4.0);
    let da = 2.0 * rho - 5.0;
    let (s, cz) = (PI * z).sin_cos();
    let (t, c) = (7.0 * x * y).sin_cos();
    let grad = [
        s * (2.0 * x * da * t + 7.0 * y * a * c),
        s * (2.0 * y * da * t + 7.0 * x * a * c),
        PI * cz * a * t,
    ];
    (a * s * t, grad)
}

/// `-Δu` for [`annulus_exact`].
pub fn annulus_load(p: [f64; 3]) -> f64 {
    let [x, y, z] = p;
    let rho = x * x + y * y;
    let a = (rho - 1.0) * (rho - 4.0);
    let da = 2.0 * rho - 5.0;
    let s = (PI * z).sin();
    let (t, c) = (7.0 * x * y).sin_cos();
    let lap_xy = t * (16.0 * rho - 20.0) + 56.0 * x * y * da * c - 49.0 * rho * a * t;
    -(s * lap_xy - PI * PI * a * s * t)
}

/// `u = sin(πx) sin(πy) sin(πz)` on the unit cube, and its gradient.
pub fn cube_exact(p: [f64; 3]) -> (f64, [f64; 3]) {
    let [(sx, cx), (sy, cy), (sz, cz)] = p.map(|t| (PI * t).sin_cos());
    (sx * sy * sz, [PI * cx * sy * sz, PI * sx * cy * sz, PI * sx * sy * cz])
}

/// `-Δu = 3π² u` for [`cube_exact`].
pub fn cube_load(p: [f64; 3]) -> f64 {
    3.0 * PI * PI * cube_exact(p).0
}

fn unit_load(_: [f64; 3]) -> f64 {
    1.0
}

/// Load used with each geometry preset: manufactured solutions on the cube
/// and the annulus, `f = 1` elsewhere.
pub fn preset_load(g: GeometryPreset) -> fn([f64; 3]) -> f64 {
    match g {
        GeometryPreset::UnitCube => cube_load,
        GeometryPreset::QuarterAnnulus => annulus_load,
        _ => unit_load,
    }
}

/// Value and gradient at a physical point.
pub type ExactSolution = fn([f64; 3]) -> (f64, [f64; 3]);

/// Exact solution for presets that have one.
pub fn preset_exact(g: GeometryPreset) -> Option<ExactSolution> {
    match g {
        GeometryPreset::UnitCube => Some(cube_exact),
        GeometryPreset::QuarterAnnulus => Some(annulus_exact),
        _ => None,
    }
}
