//! Adaptive Simpson quadrature.

pub const DEFAULT_TOLERANCE: f64 = 1e-12;
const MAX_DEPTH: u32 = 48;

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Cumulative integrals `F(x_i) = int_{x_0}^{x_i} f` at sorted nodes.
pub fn cumulative<F: Fn(f64) -> f64>(f: &F, nodes: &[f64], tol: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut acc = 0.0;
    for (i, x) in nodes.iter().enumerate() {
        if i > 0 {
            acc += adaptive_simpson(f, nodes[i - 1], *x, tol);
        }
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_smooth_functions() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, DEFAULT_TOLERANCE);
        assert!((v - 2.0).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| (-x * x).exp(), -8.0, 8.0, DEFAULT_TOLERANCE);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-11);
        assert_eq!(adaptive_simpson(&|x: f64| x, 1.0, 1.0, 1e-12), 0.0);
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let nodes: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let c = cumulative(&|x: f64| x.cos(), &nodes, DEFAULT_TOLERANCE);
        for (x, v) in nodes.iter().zip(&c) {
            assert!((v - x.sin()).abs() < 1e-11);
        }
    }
}
