//! Interpolating cubic splines through 3D control points.
//!
//! Chordal parameterisation with not-a-knot end conditions. Two control
//! points give a straight segment and three give the interpolating
//! parabola.

use crate::error::{Error, Result};
use crate::geom::Vec3;

pub fn spline_interpolate(control: &[Vec3], samples_per_segment: usize) -> Result<Vec<Vec3>> {
    if control.len() < 2 {
        return Err(Error::InvalidCenterline(format!(
            "spline needs at least 2 control points, got {}",
            control.len()
        )));
    }
    if samples_per_segment == 0 {
        return Err(Error::InvalidCenterline("samples_per_segment must be >= 1".into()));
    }
    let h: Vec<f64> = control.windows(2).map(|w| w[0].distance(w[1])).collect();
    if h.iter().any(|&d| d <= 0.0) {
        return Err(Error::InvalidCenterline("repeated consecutive control point".into()));
    }
    let m = second_derivatives(control, &h);

    let mut out = Vec::with_capacity(h.len() * samples_per_segment + 1);
    for (i, &hi) in h.iter().enumerate() {
        out.push(control[i]);
        for s in 1..samples_per_segment {
            let t = hi * s as f64 / samples_per_segment as f64;
            out.push(evaluate(control[i], control[i + 1], m[i], m[i + 1], hi, t));
        }
    }
    out.push(*control.last().expect("non-empty"));
    Ok(out)
}

/// Cubic on `[0, h]` with end values `a`, `b` and second derivatives `ma`, `mb`.
fn evaluate(a: Vec3, b: Vec3, ma: Vec3, mb: Vec3, h: f64, t: f64) -> Vec3 {
    let u = h - t;
    (ma * (u * u * u) + mb * (t * t * t)) / (6.0 * h)
        + (a / h - ma * (h / 6.0)) * u
        + (b / h - mb * (h / 6.0)) * t
}

fn second_derivatives(p: &[Vec3], h: &[f64]) -> Vec<Vec3> {
    let n = p.len();
    let slope = |i: usize| (p[i + 1] - p[i]) / h[i];
    match n {
        2 => return vec![Vec3::ZERO; 2],
        3 => {
            let m = (slope(1) - slope(0)) * (6.0 / (h[0] + h[1])) / 3.0;
            return vec![m; 3];
        }
        _ => {}
    }

    // Unknowns M1..M(n-2); M0 and M(n-1) follow from third-derivative
    // continuity at the second and second-to-last knots.
    let k = n - 2;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![Vec3::ZERO; k];
    for r in 0..k {
        let i = r + 1;
        sub[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        sup[r] = h[i];
        rhs[r] = (slope(i) - slope(i - 1)) * 6.0;
    }
    let (h0, h1) = (h[0], h[1]);
    diag[0] = 3.0 * h0 + 2.0 * h1 + h0 * h0 / h1;
    sup[0] = h1 - h0 * h0 / h1;
    let (ha, hb) = (h[n - 3], h[n - 2]);
    sub[k - 1] = ha - hb * hb / ha;
    diag[k - 1] = 2.0 * ha + 3.0 * hb + hb * hb / ha;

    let inner = solve_tridiagonal(&sub, &diag, &sup, &rhs);
    let mut m = Vec::with_capacity(n);
    m.push(inner[0] * (1.0 + h0 / h1) - inner[1] * (h0 / h1));
    m.extend_from_slice(&inner);
    m.push(inner[k - 1] * (1.0 + hb / ha) - inner[k - 2] * (hb / ha));
    m
}

/// Thomas algorithm; `sub[0]` and `sup[last]` are ignored.
fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[Vec3]) -> Vec<Vec3> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![Vec3::ZERO; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - d[i - 1] * sub[i]) / denom;
    }
    for i in (0..n - 1).rev() {
        d[i] = d[i] - d[i + 1] * c[i];
    }
    d
}
