use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::{ElectrodeBasis, Frame};
use super::constraints::{ConstraintKind, PotentialConstraints};
use super::WaveformError;

/// Singular values below this fraction of the largest count as zero
/// (rows are normalized first).
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum QpError {
    /// Equality rows are linearly dependent; `null_dimension` of them are
    /// redundant.
    RankDeficient { null_dimension: usize },
    /// Bounds leave no room for the equalities; `row` has the largest
    /// residual (normalized units).
    Infeasible { row: usize, residual: f64 },
    /// The active set did not settle within the iteration limit.
    Cycling,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    /// Variables pinned to a bound at the optimum.
    pub active: Vec<usize>,
    pub iterations: usize,
}

struct Reduced {
    x: DVector<f64>,
    lambda: DVector<f64>,
    residual: DVector<f64>,
}

/// Minimum-norm solution of A_P x = r and the matching multipliers.
fn reduced_solve(a: &DMatrix<f64>, r: &DVector<f64>) -> Reduced {
    let m = a.nrows();
    if a.ncols() == 0 {
        return Reduced { x: DVector::zeros(0), lambda: DVector::zeros(m), residual: -r.clone() };
    }
    let svd = a.clone().svd(true, true);
    let (u, vt) = (svd.u.as_ref().unwrap(), svd.v_t.as_ref().unwrap());
    let smax = svd.singular_values.max();
    let ut_r = u.transpose() * r;
    let k = svd.singular_values.len();
    let mut y = DVector::zeros(k);
    let mut z = DVector::zeros(k);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > RANK_TOLERANCE * smax {
            y[i] = ut_r[i] / s;
            z[i] = ut_r[i] / (s * s);
        }
    }
    let x = vt.transpose() * y;
    let lambda = u * z;
    let residual = a * &x - r;
    Reduced { x, lambda, residual }
}

fn rank(a: &DMatrix<f64>) -> usize {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 0;
    }
    let s = a.clone().singular_values();
    let smax = s.max();
    s.iter().filter(|&&v| v > RANK_TOLERANCE * smax).count()
}

/// min ‖x‖² subject to A x = b and lo ≤ x ≤ hi, by active-set iteration
/// over the bound constraints. Variables are visited in index order so
/// ties resolve the same way every run.
pub fn min_norm_qp(a: &DMatrix<f64>, b: &DVector<f64>, lo: &[f64], hi: &[f64]) -> Result<QpSolution, QpError> {
    let (m, n) = a.shape();
    assert_eq!(b.len(), m);
    assert!(lo.len() == n && hi.len() == n);
    if let Some(j) = (0..n).find(|&j| lo[j] > hi[j]) {
        panic!("empty bound interval for variable {j}");
    }
    // Unit rows: same solution, better conditioning.
    let mut an = a.clone();
    let mut bn = b.clone();
    for i in 0..m {
        let norm = an.row(i).norm();
        if norm > 0.0 {
            an.row_mut(i).scale_mut(1.0 / norm);
            bn[i] /= norm;
        }
    }
    let r = rank(&an);
    if r < m {
        return Err(QpError::RankDeficient { null_dimension: m - r });
    }
    let scale = lo.iter().chain(hi).fold(0.0f64, |acc, v| acc.max(v.abs())).max(1e-300);
    let tol = 1e-12 * scale;
    let consistency = 1e-9 * bn.amax().max(1.0);

    // Some(value) when pinned to that bound.
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    let max_iter = 5 * n + 20;
    for iter in 0..max_iter {
        let free: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
        let mut rhs = bn.clone();
        for j in 0..n {
            if let Some(v) = fixed[j] {
                rhs -= an.column(j) * v;
            }
        }
        let ap = an.select_columns(&free);
        let red = reduced_solve(&ap, &rhs);
        if red.residual.amax() > consistency {
            let row = red.residual.iamax();
            return Err(QpError::Infeasible { row, residual: red.residual[row] });
        }
        let mut x = DVector::zeros(n);
        for (k, &j) in free.iter().enumerate() {
            x[j] = red.x[k];
        }
        for j in 0..n {
            if let Some(v) = fixed[j] {
                x[j] = v;
            }
        }

        let worst_free = free
            .iter()
            .map(|&j| (j, (x[j] - hi[j]).max(lo[j] - x[j])))
            .filter(|&(_, e)| e > tol)
            .fold(None, |best: Option<(usize, f64)>, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            });
        if let Some((j, _)) = worst_free {
            fixed[j] = Some(if x[j] > hi[j] { hi[j] } else { lo[j] });
            continue;
        }

        // Release a pinned variable whose unconstrained value would move
        // back inside its interval.
        let g = an.transpose() * &red.lambda;
        let worst_pinned = (0..n)
            .filter_map(|j| {
                let v = fixed[j]?;
                let pull = if v == hi[j] && v != lo[j] { hi[j] - g[j] } else { g[j] - lo[j] };
                (pull > tol).then_some((j, pull))
            })
            .fold(None, |best: Option<(usize, f64)>, c| match best {
                Some(b) if b.1 >= c.1 => Some(b),
                _ => Some(c),
            });
        if let Some((j, _)) = worst_pinned {
            fixed[j] = None;
            continue;
        }
        let active = (0..n).filter(|&j| fixed[j].is_some()).collect();
        return Ok(QpSolution { x, active, iterations: iter + 1 });
    }
    Err(QpError::Cycling)
}

/// What to do when the equality rows are dependent or outnumber the
/// electrodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overdetermined {
    #[default]
    Reject,
    /// Minimize Σ wᵢ² rᵢ² over unit-normalized rows, then the voltage norm.
    WeightedLeastSquares,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolveOptions {
    #[serde(default)]
    pub overdetermined: Overdetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub well: usize,
    pub kind: ConstraintKind,
    pub target: f64,
    pub achieved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageSolution {
    pub voltages: Vec<f64>,
    pub constraints: Vec<ConstraintReport>,
    /// Electrodes held at ±bound.
    pub at_bound: Vec<usize>,
    /// Whether every equality row is met exactly (false only for the
    /// weighted fallback).
    pub exact: bool,
}

impl VoltageSolution {
    pub fn norm(&self) -> f64 {
        self.voltages.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

struct System {
    a: DMatrix<f64>,
    b: DVector<f64>,
    weights: Vec<f64>,
    labels: Vec<(usize, ConstraintKind, f64)>,
}

fn assemble(basis: &ElectrodeBasis, constraints: &PotentialConstraints) -> System {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut b = Vec::new();
    let mut weights = Vec::new();
    let mut labels = Vec::new();
    for (w, well) in constraints.wells.iter().enumerate() {
        let m = basis.moments_at(Frame::new(well.position, well.weak_axis_angle));
        for (kind, target) in well.rows() {
            let (i, j) = kind.orders();
            rows.push(m.row(i, j));
            b.push(target - m.rf.derivative(i, j));
            weights.push(well.weight);
            labels.push((w, kind, target));
        }
    }
    let n = basis.len();
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    System { a, b: DVector::from_vec(b), weights, labels }
}

fn describe(labels: &[(usize, ConstraintKind, f64)], row: usize) -> String {
    let (w, kind, target) = labels[row];
    format!("well {w} {kind} = {target:e}")
}

/// Minimum-norm electrode voltages meeting every well constraint within
/// the voltage bound.
pub fn solve_voltages(
    basis: &ElectrodeBasis,
    constraints: &PotentialConstraints,
    options: SolveOptions,
) -> Result<VoltageSolution, WaveformError> {
    constraints.check()?;
    let sys = assemble(basis, constraints);
    let n = basis.len();
    let bound = constraints.voltage_bound;
    let (lo, hi) = (vec![-bound; n], vec![bound; n]);
    let (x, at_bound, exact) = match min_norm_qp(&sys.a, &sys.b, &lo, &hi) {
        Ok(sol) => (sol.x, sol.active, true),
        Err(QpError::RankDeficient { null_dimension }) => match options.overdetermined {
            Overdetermined::Reject => return Err(WaveformError::RankDeficient { null_dimension }),
            Overdetermined::WeightedLeastSquares => {
                let x = weighted_least_squares(&sys);
                if let Some(j) = (0..n).find(|&j| x[j].abs() > bound) {
                    return Err(WaveformError::Infeasible {
                        constraint: format!("electrode {} bound", basis.electrodes[j].name),
                        violation: x[j].abs() - bound,
                    });
                }
                (x, Vec::new(), false)
            }
        },
        Err(QpError::Infeasible { row, residual }) => {
            return Err(WaveformError::Infeasible { constraint: describe(&sys.labels, row), violation: residual.abs() })
        }
        Err(QpError::Cycling) => {
            return Err(WaveformError::Infeasible { constraint: "voltage bounds (active set cycled)".into(), violation: f64::NAN })
        }
    };
    let achieved = &sys.a * &x;
    let constraints = sys
        .labels
        .iter()
        .enumerate()
        .map(|(i, &(well, kind, target))| ConstraintReport {
            well,
            kind,
            target,
            achieved: achieved[i] + (target - sys.b[i]),
        })
        .collect();
    Ok(VoltageSolution { voltages: x.iter().copied().collect(), constraints, at_bound, exact })
}

fn weighted_least_squares(sys: &System) -> DVector<f64> {
    let mut a = sys.a.clone();
    let mut b = sys.b.clone();
    for i in 0..a.nrows() {
        let norm = a.row(i).norm();
        let s = if norm > 0.0 { sys.weights[i] / norm } else { 0.0 };
        a.row_mut(i).scale_mut(s);
        b[i] *= s;
    }
    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(&b, RANK_TOLERANCE * smax).expect("SVD has both factors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::waveform::constraints::WellConstraint;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Enumerate every lower/free/upper assignment and keep the smallest
    /// feasible norm.
    fn brute_force(a: &DMatrix<f64>, b: &DVector<f64>, lo: &[f64], hi: &[f64]) -> Option<DVector<f64>> {
        let n = a.ncols();
        let mut best: Option<DVector<f64>> = None;
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let mut state = vec![0u8; n];
            for s in state.iter_mut() {
                *s = (c % 3) as u8;
                c /= 3;
            }
            let free: Vec<usize> = (0..n).filter(|&j| state[j] == 1).collect();
            let mut x = DVector::zeros(n);
            for j in 0..n {
                x[j] = match state[j] {
                    0 => lo[j],
                    2 => hi[j],
                    _ => 0.0,
                };
            }
            let rhs = b - a * &x;
            let ap = a.select_columns(&free);
            let red = reduced_solve(&ap, &rhs);
            if red.residual.amax() > 1e-9 {
                continue;
            }
            for (k, &j) in free.iter().enumerate() {
                x[j] = red.x[k];
            }
            if (0..n).any(|j| x[j] < lo[j] - 1e-12 || x[j] > hi[j] + 1e-12) {
                continue;
            }
            if best.as_ref().is_none_or(|bx| x.norm() < bx.norm() - 1e-14) {
                best = Some(x);
            }
        }
        best
    }

    #[test]
    fn matches_active_set_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut bound_hit = 0;
        for _ in 0..300 {
            let n = rng.random_range(2..=6);
            let m = rng.random_range(1..n);
            let a = DMatrix::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
            let b = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
            let lo: Vec<f64> = (0..n).map(|_| -rng.random_range(0.05..1.5)).collect();
            let hi: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.5)).collect();
            let oracle = brute_force(&a, &b, &lo, &hi);
            match (min_norm_qp(&a, &b, &lo, &hi), oracle) {
                (Ok(sol), Some(o)) => {
                    assert!((sol.x.norm() - o.norm()).abs() < 1e-9, "{} vs {}", sol.x.norm(), o.norm());
                    assert!((&sol.x - &o).amax() < 1e-6);
                    bound_hit += usize::from(!sol.active.is_empty());
                }
                (Err(QpError::Infeasible { .. }), None) => {}
                (got, want) => panic!("solver {got:?} vs oracle {want:?}"),
            }
        }
        assert!(bound_hit > 20, "bounds rarely active: {bound_hit}");
    }

    #[test]
    fn unbounded_case_is_pseudo_inverse() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 2.0]);
        let b = DVector::from_vec(vec![9.0]);
        let big = [100.0; 3];
        let sol = min_norm_qp(&a, &b, &[-100.0; 3], &big).unwrap();
        assert!((&sol.x - DVector::from_vec(vec![1.0, 2.0, 2.0])).amax() < 1e-12);
        assert!(sol.active.is_empty());
    }

    #[test]
    fn dependent_rows_are_rank_deficient() {
        let a = DMatrix::from_row_slice(3, 4, &[1.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 2.0, 0.0, 1.0, 1.0, 0.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let err = min_norm_qp(&a, &b, &[-9.0; 4], &[9.0; 4]).unwrap_err();
        assert_eq!(err, QpError::RankDeficient { null_dimension: 1 });
    }

    #[test]
    fn tight_bounds_are_infeasible() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![3.0]);
        assert!(matches!(min_norm_qp(&a, &b, &[-1.0; 2], &[1.0; 2]), Err(QpError::Infeasible { row: 0, .. })));
    }

    #[test]
    fn symmetric_well_has_symmetric_voltages() {
        let basis = ElectrodeBasis::x_junction();
        let mut well = WellConstraint::harmonic([0.0, 0.0], 2.0e6, 0.0);
        well.transverse_curvature = Some(well.curvature.unwrap() * 2.0);
        let sol = solve_voltages(&basis, &PotentialConstraints::single(well), SolveOptions::default()).unwrap();
        let vmax = sol.voltages.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let find = |x: f64, z: f64| basis.electrodes.iter().position(|e| (e.x - x).abs() < 1e-9 && (e.z - z).abs() < 1e-9);
        for (k, e) in basis.electrodes.iter().enumerate() {
            for (mx, mz) in [(-e.x, e.z), (e.x, -e.z)] {
                let m = find(mx, mz).expect("basis is mirror symmetric");
                // Antisymmetric combinations vanish.
                assert!((sol.voltages[k] - sol.voltages[m]).abs() < 1e-9 * vmax, "{}", e.name);
            }
        }
    }

    #[test]
    fn equality_rows_met_and_overdetermined_handling() {
        let basis = ElectrodeBasis::x_junction();
        let mut c = PotentialConstraints::single(WellConstraint::harmonic([0.0, -710.0], 3.6e6, 0.0));
        let sol = solve_voltages(&basis, &c, SolveOptions::default()).unwrap();
        for r in &sol.constraints {
            let scale = r.target.abs().max(1e-6);
            assert!((r.achieved - r.target).abs() <= 1e-8 * scale, "{r:?}");
        }
        // The same well twice: four redundant rows.
        c.wells.push(c.wells[0].clone());
        match solve_voltages(&basis, &c, SolveOptions::default()) {
            Err(WaveformError::RankDeficient { null_dimension }) => assert_eq!(null_dimension, 4),
            other => panic!("{other:?}"),
        }
        let opts = SolveOptions { overdetermined: Overdetermined::WeightedLeastSquares };
        let ls = solve_voltages(&basis, &c, opts).unwrap();
        assert!(!ls.exact);
        assert!((ls.norm() - sol.norm()).abs() < 1e-9 * sol.norm());
    }

    #[test]
    fn impossible_well_reports_a_constraint() {
        let basis = ElectrodeBasis::x_junction();
        let mut c = PotentialConstraints::single(WellConstraint::harmonic([0.0, -710.0], 3.6e6, 0.0));
        c.voltage_bound = 1e-4;
        match solve_voltages(&basis, &c, SolveOptions::default()) {
            Err(WaveformError::Infeasible { constraint, .. }) => assert!(constraint.starts_with("well 0")),
            other => panic!("{other:?}"),
        }
    }
}
