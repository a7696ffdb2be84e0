//! The auxiliary linear eigenproblem `alpha phi'' + i0 V phi = omega phi`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::field::Grid1D;
use crate::potential::Potential;

#[derive(Clone, Debug)]
pub struct LinearMode {
    /// Interior nodes of the Dirichlet grid.
    pub x: Vec<f64>,
    /// Positive eigenvector, max-normalized.
    pub phi: Vec<f64>,
    pub omega: f64,
}

/// Solves on the interior of a Dirichlet grid with `phi = 0` at both ends,
/// using the fourth-order central second difference with odd reflection
/// across the boundary. Modes are counted from the nodeless end of the
/// spectrum; only mode 0 is nodeless.
pub fn solve(alpha: f64, i0: f64, potential: &Potential, grid: &Grid1D, mode: usize) -> Result<LinearMode> {
    let m = grid.n - 2;
    if mode >= m {
        return Err(Error::InvalidParams(format!("mode {mode} exceeds {m} interior points")));
    }
    let h = grid.dx();
    let c = alpha / (12.0 * h * h);
    let x: Vec<f64> = (1..grid.n - 1).map(|i| grid.x(i)).collect();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        a[(i, i)] = -30.0 * c + i0 * potential.eval(x[i]);
        if i + 1 < m {
            a[(i, i + 1)] = 16.0 * c;
            a[(i + 1, i)] = 16.0 * c;
        }
        if i + 2 < m {
            a[(i, i + 2)] = -c;
            a[(i + 2, i)] = -c;
        }
    }
    a[(0, 0)] += c;
    a[(m - 1, m - 1)] += c;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m).collect();
    // alpha > 0 makes the second difference negative definite, so the
    // nodeless mode sits at the top of the spectrum.
    if alpha > 0.0 {
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    } else {
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    }
    let k = order[mode];
    let col = eig.eigenvectors.column(k);
    let peak = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
    let phi: Vec<f64> = col.iter().map(|v| v / peak).collect();
    let sign_changes = phi.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    if sign_changes > 0 || mode > 0 {
        return Err(Error::NodefulMode { mode });
    }
    if let Some((index, v)) = phi.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::NodeEncountered {
            index: index + 1,
            amplitude: v.abs(),
        });
    }
    Ok(LinearMode {
        x,
        phi,
        omega: eig.eigenvalues[k],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_ground_state_matches_gaussian() {
        // alpha phi'' - x^2 phi / 2 = omega phi with alpha = 1/2: phi = exp(-x^2 / 2), omega = -1/2
        let g = Grid1D::dirichlet(-6.0, 6.0, 241).unwrap();
        let sol = solve(0.5, -1.0, &Potential::Harmonic { kappa: 1.0 }, &g, 0).unwrap();
        assert!((sol.omega + 0.5).abs() < 1e-7, "{}", sol.omega);
        let mid = sol.x.len() / 2;
        for (x, p) in sol.x.iter().zip(&sol.phi).skip(mid - 50).take(100) {
            assert!((p - (-x * x / 2.0).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn excited_modes_are_refused() {
        let g = Grid1D::dirichlet(-8.0, 8.0, 101).unwrap();
        let err = solve(0.5, -1.0, &Potential::Harmonic { kappa: 1.0 }, &g, 1).unwrap_err();
        assert!(matches!(err, Error::NodefulMode { mode: 1 }));
    }
}
