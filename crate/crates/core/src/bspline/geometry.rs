//! Analytic geometry maps `F: [0,1]³ → ℝ³` with closed-form Jacobians.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::sampling::halton;

/// A parametrization of the physical domain.
pub trait GeometryMap: Send + Sync {
    fn name(&self) -> &str;

    fn eval(&self, eta: [f64; 3]) -> [f64; 3];

    /// `J[a][k] = ∂F_a / ∂η_k`.
    fn jacobian(&self, eta: [f64; 3]) -> Matrix3<f64>;
}

/// Pulled-back diffusion tensor `Q = |det J| J⁻¹ J⁻ᵀ` and load weight
/// `ω = |det J| f(F(η))`.
pub fn metric_and_weight(
    geo: &dyn GeometryMap,
    eta: [f64; 3],
    f: &dyn Fn([f64; 3]) -> f64,
) -> Result<(Matrix3<f64>, f64)> {
    let (q, det) = metric(geo, eta)?;
    Ok((q, det * f(geo.eval(eta))))
}

/// `(Q(η), |det J(η)|)`.
pub fn metric(geo: &dyn GeometryMap, eta: [f64; 3]) -> Result<(Matrix3<f64>, f64)> {
    let j = geo.jacobian(eta);
    let (jinv, det) = invert_jacobian(&j, eta)?;
    let q = jinv * jinv.transpose() * det;
    Ok((0.5 * (q + q.transpose()), det))
}

/// `(J⁻¹, |det J|)` with an explicit error for singular Jacobians.
pub fn invert_jacobian(j: &Matrix3<f64>, eta: [f64; 3]) -> Result<(Matrix3<f64>, f64)> {
    let det = j.determinant();
    let scale = j.abs().max().powi(3);
    if !det.is_finite() || det.abs() <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::Geometry(format!(
            "singular Jacobian at η = {eta:?} (det = {det:e})"
        )));
    }
    let inv = j
        .try_inverse()
        .ok_or_else(|| Error::Geometry(format!("singular Jacobian at η = {eta:?}")))?;
    Ok((inv, det.abs()))
}

/// Checks the Jacobian on `samples` Halton points; returns the smallest
/// `|det J|` seen.
pub fn validate_geometry(geo: &dyn GeometryMap, samples: usize) -> Result<f64> {
    let mut min_det = f64::INFINITY;
    for k in 1..=samples {
        let eta = halton(k);
        let (_, det) = invert_jacobian(&geo.jacobian(eta), eta)?;
        min_det = min_det.min(det);
    }
    Ok(min_det)
}

/// Identity map of the unit cube.
#[derive(Clone, Debug, Default)]
pub struct UnitCube;

impl GeometryMap for UnitCube {
    fn name(&self) -> &str {
        "unit_cube"
    }
    fn eval(&self, eta: [f64; 3]) -> [f64; 3] {
        eta
    }
    fn jacobian(&self, _eta: [f64; 3]) -> Matrix3<f64> {
        Matrix3::identity()
    }
}

/// Uniform scaling `F(η) = s η`.
#[derive(Clone, Debug)]
pub struct Scaled(pub f64);

impl GeometryMap for Scaled {
    fn name(&self) -> &str {
        "scaled_cube"
    }
    fn eval(&self, eta: [f64; 3]) -> [f64; 3] {
        eta.map(|e| self.0 * e)
    }
    fn jacobian(&self, _eta: [f64; 3]) -> Matrix3<f64> {
        Matrix3::identity() * self.0
    }
}

/// Thick quarter annulus, radii 1 to 2, unit height:
/// `F(η) = ((1+η₁) cos(πη₂/2), (1+η₁) sin(πη₂/2), η₃)`.
#[derive(Clone, Debug, Default)]
pub struct QuarterAnnulus;

impl GeometryMap for QuarterAnnulus {
    fn name(&self) -> &str {
        "quarter_annulus"
    }
    fn eval(&self, eta: [f64; 3]) -> [f64; 3] {
        let r = 1.0 + eta[0];
        let (s, c) = (FRAC_PI_2 * eta[1]).sin_cos();
        [r * c, r * s, eta[2]]
    }
    fn jacobian(&self, eta: [f64; 3]) -> Matrix3<f64> {
        let r = 1.0 + eta[0];
        let (s, c) = (FRAC_PI_2 * eta[1]).sin_cos();
        Matrix3::new(
            c,
            -r * FRAC_PI_2 * s,
            0.0, //
            s,
            r * FRAC_PI_2 * c,
            0.0, //
            0.0,
            0.0,
            1.0,
        )
    }
}

/// Thick spherical shell segment, inner radius 1, outer radius 2, a quarter
/// turn in longitude and latitudes 0 to 60 degrees.
///
/// The direction field `d(η₁, η₂)` is the surface of revolution of a
/// polynomial (non-rational) quadratic Bézier arc, so it is close to but not
/// exactly on the unit sphere; the radius grows linearly in `η₃`:
/// `F(η) = (1 + η₃) d(η₁, η₂)`.
#[derive(Clone, Debug, Default)]
pub struct SphericalShell;

/// Quadratic Bézier arc from (1,0) to (cos θ, sin θ) with the middle control
/// point on the tangent intersection; returns point and derivative.
fn bezier_arc(t: f64, theta: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = theta.sin_cos();
    let m = (0.5 * theta).tan();
    let p = [[1.0, 0.0], [1.0, m], [c, s]];
    let u = 1.0 - t;
    let b = [u * u, 2.0 * t * u, t * t];
    let db = [-2.0 * u, 2.0 * (u - t), 2.0 * t];
    let mut x = [0.0; 2];
    let mut dx = [0.0; 2];
    for i in 0..3 {
        for a in 0..2 {
            x[a] += b[i] * p[i][a];
            dx[a] += db[i] * p[i][a];
        }
    }
    (x, dx)
}

impl SphericalShell {
    const LONGITUDE: f64 = FRAC_PI_2;
    const LATITUDE: f64 = std::f64::consts::FRAC_PI_3;

    fn direction(eta: [f64; 3]) -> ([f64; 3], [f64; 3], [f64; 3]) {
        let ([ca, sa], [dca, dsa]) = bezier_arc(eta[0], Self::LONGITUDE);
        let ([rp, zp], [drp, dzp]) = bezier_arc(eta[1], Self::LATITUDE);
        let d = [rp * ca, rp * sa, zp];
        let d1 = [rp * dca, rp * dsa, 0.0];
        let d2 = [drp * ca, drp * sa, dzp];
        (d, d1, d2)
    }
}

impl GeometryMap for SphericalShell {
    fn name(&self) -> &str {
        "spherical_shell"
    }
    fn eval(&self, eta: [f64; 3]) -> [f64; 3] {
        let rho = 1.0 + eta[2];
        Self::direction(eta).0.map(|v| rho * v)
    }
    fn jacobian(&self, eta: [f64; 3]) -> Matrix3<f64> {
        let rho = 1.0 + eta[2];
        let (d, d1, d2) = Self::direction(eta);
        Matrix3::from_fn(|a, k| match k {
            0 => rho * d1[a],
            1 => rho * d2[a],
            _ => d[a],
        })
    }
}

/// Column with square cross-section whose two `x`-faces bulge by a
/// quadratic in the height: `F(η) = ((η₁ - ½) w(η₃), η₂, η₃)` with
/// `w(z) = 1 + z(1 - z)`.
#[derive(Clone, Debug, Default)]
pub struct DeformedColumn;

impl GeometryMap for DeformedColumn {
    fn name(&self) -> &str {
        "deformed_column"
    }
    fn eval(&self, eta: [f64; 3]) -> [f64; 3] {
        let w = 1.0 + eta[2] * (1.0 - eta[2]);
        [(eta[0] - 0.5) * w, eta[1], eta[2]]
    }
    fn jacobian(&self, eta: [f64; 3]) -> Matrix3<f64> {
        let z = eta[2];
        let w = 1.0 + z * (1.0 - z);
        let dw = 1.0 - 2.0 * z;
        Matrix3::new(
            w,
            0.0,
            (eta[0] - 0.5) * dw, //
            0.0,
            1.0,
            0.0, //
            0.0,
            0.0,
            1.0,
        )
    }
}

/// Polynomial map in the monomial basis:
/// `F_a(η) = Σ c_a[i,j,k] η₁^i η₂^j η₃^k`.
///
/// Text layout, whitespace separated, `#` starts a comment:
///
/// ```text
/// degree d1 d2 d3
/// x <(d1+1)(d2+1)(d3+1) coefficients, i fastest, then j, then k>
/// y <...>
/// z <...>
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialMap {
    name: String,
    degree: [usize; 3],
    coeffs: [Vec<f64>; 3],
}

impl PolynomialMap {
    pub fn new(name: impl Into<String>, degree: [usize; 3], coeffs: [Vec<f64>; 3]) -> Result<Self> {
        let len = (degree[0] + 1) * (degree[1] + 1) * (degree[2] + 1);
        for (a, c) in coeffs.iter().enumerate() {
            if c.len() != len {
                return Err(Error::Parse(format!(
                    "component {a} has {} coefficients, expected {len}",
                    c.len()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            degree,
            coeffs,
        })
    }

    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut degree = None;
        let mut comps: [Option<Vec<f64>>; 3] = Default::default();
        let mut current: Option<usize> = None;
        for raw in text.lines() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace().peekable();
            let head = *parts.peek().unwrap();
            let slot = match head {
                "degree" => {
                    parts.next();
                    let d: Vec<usize> = parts
                        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad degree '{s}'"))))
                        .collect::<Result<_>>()?;
                    if d.len() != 3 {
                        return Err(Error::Parse("degree needs three integers".into()));
                    }
                    degree = Some([d[0], d[1], d[2]]);
                    current = None;
                    continue;
                }
                "x" => Some(0),
                "y" => Some(1),
                "z" => Some(2),
                _ => None,
            };
            if let Some(s) = slot {
                parts.next();
                current = Some(s);
                comps[s].get_or_insert_with(Vec::new);
            }
            let Some(s) = current else {
                return Err(Error::Parse(format!("unexpected record '{head}'")));
            };
            for tok in parts {
                let v = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad coefficient '{tok}'")))?;
                comps[s].as_mut().unwrap().push(v);
            }
        }
        let degree = degree.ok_or_else(|| Error::Parse("missing degree record".into()))?;
        let [x, y, z] = comps;
        let missing = |c: &str| Error::Parse(format!("missing component {c}"));
        Self::new(
            name,
            degree,
            [
                x.ok_or_else(|| missing("x"))?,
                y.ok_or_else(|| missing("y"))?,
                z.ok_or_else(|| missing("z"))?,
            ],
        )
    }

    fn powers(d: usize, x: f64) -> (Vec<f64>, Vec<f64>) {
        let mut p = vec![1.0; d + 1];
        let mut dp = vec![0.0; d + 1];
        for i in 1..=d {
            p[i] = p[i - 1] * x;
            dp[i] = i as f64 * p[i - 1];
        }
        (p, dp)
    }

    fn eval_with(&self, eta: [f64; 3], deriv: Option<usize>) -> [f64; 3] {
        let pw: Vec<(Vec<f64>, Vec<f64>)> = (0..3).map(|t| Self::powers(self.degree[t], eta[t])).collect();
        let pick = |t: usize, i: usize| if deriv == Some(t) { pw[t].1[i] } else { pw[t].0[i] };
        let [d0, d1, d2] = self.degree;
        let mut out = [0.0; 3];
        for (a, c) in self.coeffs.iter().enumerate() {
            let mut s = 0.0;
            let mut idx = 0;
            for k in 0..=d2 {
                for j in 0..=d1 {
                    let w = pick(2, k) * pick(1, j);
                    for i in 0..=d0 {
                        s += c[idx] * w * pick(0, i);
                        idx += 1;
                    }
                }
            }
            out[a] = s;
        }
        out
    }
}

impl GeometryMap for PolynomialMap {
    fn name(&self) -> &str {
        &self.name
    }
    fn eval(&self, eta: [f64; 3]) -> [f64; 3] {
        self.eval_with(eta, None)
    }
    fn jacobian(&self, eta: [f64; 3]) -> Matrix3<f64> {
        let cols: Vec<[f64; 3]> = (0..3).map(|k| self.eval_with(eta, Some(k))).collect();
        Matrix3::from_fn(|a, k| cols[k][a])
    }
}

/// Built-in geometry presets, selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeometryPreset {
    UnitCube,
    QuarterAnnulus,
    SphericalShell,
    DeformedColumn,
}

impl GeometryPreset {
    pub const ALL: [GeometryPreset; 4] = [
        GeometryPreset::UnitCube,
        GeometryPreset::QuarterAnnulus,
        GeometryPreset::SphericalShell,
        GeometryPreset::DeformedColumn,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeometryPreset::UnitCube => "unit_cube",
            GeometryPreset::QuarterAnnulus => "quarter_annulus",
            GeometryPreset::SphericalShell => "spherical_shell",
            GeometryPreset::DeformedColumn => "deformed_column",
        }
    }

    pub fn build(&self) -> Box<dyn GeometryMap> {
        match self {
            GeometryPreset::UnitCube => Box::new(UnitCube),
            GeometryPreset::QuarterAnnulus => Box::new(QuarterAnnulus),
            GeometryPreset::SphericalShell => Box::new(SphericalShell),
            GeometryPreset::DeformedColumn => Box::new(DeformedColumn),
        }
    }
}

impl fmt::Display for GeometryPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeometryPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown geometry '{s}'")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_jacobian(g: &dyn GeometryMap, eta: [f64; 3]) -> Matrix3<f64> {
        let h = 1e-6;
        Matrix3::from_fn(|a, k| {
            let mut p = eta;
            let mut m = eta;
            p[k] += h;
            m[k] -= h;
            (g.eval(p)[a] - g.eval(m)[a]) / (2.0 * h)
        })
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        let eta = [0.3, 0.55, 0.7];
        for p in GeometryPreset::ALL {
            let g = p.build();
            let diff = (g.jacobian(eta) - fd_jacobian(g.as_ref(), eta)).abs().max();
            assert!(diff < 1e-7, "{p}: {diff}");
        }
    }

    #[test]
    fn presets_are_regular_with_spd_metric() {
        for p in GeometryPreset::ALL {
            let g = p.build();
            assert!(validate_geometry(g.as_ref(), 1000).unwrap() > 0.0);
            for k in 1..=200 {
                let (q, _) = metric(g.as_ref(), halton(k)).unwrap();
                assert!((q - q.transpose()).abs().max() < 1e-14);
                assert!(q.symmetric_eigenvalues().min() > 0.0, "{p}");
            }
        }
    }

    #[test]
    fn scaling_metric() {
        let (q, w) = metric_and_weight(&Scaled(2.0), [0.1, 0.2, 0.3], &|_| 1.5).unwrap();
        assert!((q - Matrix3::identity() * 2.0).abs().max() < 1e-14);
        assert!((w - 12.0).abs() < 1e-13);
    }

    #[test]
    fn annulus_metric_closed_form() {
        let eta = [0.5, 0.5, 0.5];
        let (q, _) = metric(&QuarterAnnulus, eta).unwrap();
        let r = 1.5;
        let want = Matrix3::from_diagonal(&nalgebra::Vector3::new(
            r * FRAC_PI_2,
            1.0 / (r * FRAC_PI_2),
            r * FRAC_PI_2,
        ));
        assert!((q - want).abs().max() < 1e-14);
    }

    #[test]
    fn singular_map_is_rejected() {
        let flat = PolynomialMap::new("flat", [1, 0, 0], [vec![0.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(metric(&flat, [0.5; 3]), Err(Error::Geometry(_))));
    }

    #[test]
    fn polynomial_map_parses_identity() {
        let text = "degree 1 1 1\n# identity\nx 0 1 0 0 0 0 0 0\ny 0 0 1 0 0 0 0 0\nz 0 0 0 0 1 0 0 0\n";
        let g = PolynomialMap::parse("id", text).unwrap();
        let eta = [0.2, 0.4, 0.9];
        assert_eq!(g.eval(eta), eta);
        assert!((g.jacobian(eta) - Matrix3::identity()).abs().max() == 0.0);
        assert!(PolynomialMap::parse("bad", "degree 1 1\n").is_err());
    }
}
