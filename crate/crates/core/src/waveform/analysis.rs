use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Serialize};

use super::basis::{ElectrodeBasis, Frame};
use super::constraints::frequency_for_curvature;

/// Local Hessian analysis of the potential at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalModes {
    pub position: [f64; 2],
    /// (∂x, ∂z), V/µm.
    pub gradient: [f64; 2],
    /// Eigenvalues (V/µm²), ascending.
    pub curvatures: [f64; 2],
    /// Unit eigenvectors in (x, z), matching `curvatures`.
    pub axes: [[f64; 2]; 2],
}

impl LocalModes {
    pub fn frequencies_hz(&self, mass_kg: f64, charge_c: f64) -> [f64; 2] {
        self.curvatures.map(|c| frequency_for_curvature(c, mass_kg, charge_c))
    }
}

fn hessian_at(basis: &ElectrodeBasis, voltages: &[f64], p: [f64; 2]) -> (Vector2<f64>, Matrix2<f64>) {
    // Frame angle 0: s runs along z, t along x.
    let j = basis.moments_at(Frame::new(p, 0.0)).total(voltages);
    let g = Vector2::new(j.derivative(0, 1), j.derivative(1, 0));
    let h = Matrix2::new(j.derivative(0, 2), j.derivative(1, 1), j.derivative(1, 1), j.derivative(2, 0));
    (g, h)
}

pub fn local_modes(basis: &ElectrodeBasis, voltages: &[f64], p: [f64; 2]) -> LocalModes {
    let (g, h) = hessian_at(basis, voltages, p);
    let eig = SymmetricEigen::new(h);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let axis = |k: usize| [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]];
    LocalModes {
        position: p,
        gradient: [g[0], g[1]],
        curvatures: [eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]],
        axes: [axis(order[0]), axis(order[1])],
    }
}

/// Newton iteration for a local minimum of the total potential; `None`
/// if it leaves a 2·`max_travel` box or lands on a non-minimum.
pub fn find_minimum(basis: &ElectrodeBasis, voltages: &[f64], start: [f64; 2], max_travel: f64) -> Option<LocalModes> {
    let mut p = Vector2::new(start[0], start[1]);
    let origin = p;
    for _ in 0..200 {
        let (g, h) = hessian_at(basis, voltages, [p[0], p[1]]);
        let eig = SymmetricEigen::new(h);
        let step = if eig.eigenvalues.iter().all(|&l| l > 0.0) {
            -(h.try_inverse()? * g)
        } else {
            // Descend along the gradient with a curvature-scaled length.
            let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs())).max(1e-12);
            -g / scale
        };
        let len = step.norm();
        let step = if len > 5.0 { step * (5.0 / len) } else { step };
        p += step;
        if (p - origin).amax() > max_travel {
            return None;
        }
        if step.norm() < 1e-10 {
            let m = local_modes(basis, voltages, [p[0], p[1]]);
            return (m.curvatures[0] > 0.0).then_some(m);
        }
    }
    None
}

/// Local minima of the potential along a line through `center` in
/// direction `dir`, refined in two dimensions. Sorted by position along
/// the line.
pub fn minima_along(
    basis: &ElectrodeBasis,
    voltages: &[f64],
    center: [f64; 2],
    dir: [f64; 2],
    half_range: f64,
    spacing: f64,
) -> Vec<LocalModes> {
    let n = (2.0 * half_range / spacing).ceil() as usize;
    let at = |s: f64| [center[0] + dir[0] * s, center[1] + dir[1] * s];
    let s: Vec<f64> = (0..=n).map(|k| -half_range + k as f64 * spacing).collect();
    let v: Vec<f64> = s.iter().map(|&x| basis.potential(at(x), voltages)).collect();
    let mut out: Vec<(f64, LocalModes)> = Vec::new();
    for k in 1..n {
        if v[k] <= v[k - 1] && v[k] < v[k + 1] {
            if let Some(m) = find_minimum(basis, voltages, at(s[k]), 2.0 * spacing + 10.0) {
                let along = (m.position[0] - center[0]) * dir[0] + (m.position[1] - center[1]) * dir[1];
                if out.iter().all(|(a, _)| (a - along).abs() > 1e-6) {
                    out.push((along, m));
                }
            }
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out.into_iter().map(|(_, m)| m).collect()
}
