//! Principal-value Stieltjes integrals by singularity subtraction.

use num_complex::Complex64 as c64;
use std::f64::consts::PI;

use super::gauss::GaussRule;

const PANEL_NODES: usize = 16;

/// PV ∫_a^b f(x)/(E − x) dx for a < E < b.
///
/// Uses ∫ (f(x) − f(E))/(E − x) dx + f(E)·ln((E − a)/(b − E)); the subtracted
/// integrand is smooth and is integrated on panels graded geometrically away
/// from E, so very long supports cost only logarithmically more nodes.
pub fn principal_value<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, energy: f64) -> f64 {
    assert!(a < energy && energy < b, "principal value needs a < E < b");
    let fe = f(energy);
    let rule = GaussRule::new(PANEL_NODES);
    let smooth = |x: f64| {
        let d = energy - x;
        if d == 0.0 { 0.0 } else { (f(x) - fe) / d }
    };
    let base = 1e-2 * (b - a).min(1.0);
    let mut total = 0.0;
    for (lo, hi) in graded_panels(energy, a, b, base) {
        total += rule.integrate_real(lo, hi, smooth);
    }
    total + fe * ((energy - a) / (b - energy)).ln()
}

/// Boundary value ∫ f(x)/(E + i0 − x) dx = PV − iπ f(E) (Plemelj).
pub fn stieltjes_boundary<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, energy: f64) -> c64 {
    let fe = f(energy);
    c64::new(principal_value(f, a, b, energy), -PI * fe)
}

/// Panels [E ± base·2^k] clipped to [a, b], covering [a, b].
pub(crate) fn graded_panels(center: f64, a: f64, b: f64, base: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for dir in [-1.0f64, 1.0] {
        let end = if dir < 0.0 { a } else { b };
        let mut inner = center;
        let mut width = base;
        while (end - inner) * dir > 0.0 {
            let mut outer = inner + dir * width;
            if (outer - end) * dir >= 0.0 || (end - outer).abs() < 0.5 * width {
                outer = end;
            }
            if dir < 0.0 {
                out.push((outer, inner));
            } else {
                out.push((inner, outer));
            }
            inner = outer;
            width *= 2.0;
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}
