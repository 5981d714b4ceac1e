use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use xjunction::constants::{BE9_MASS, ELEMENTARY_CHARGE};
use xjunction::waveform::{
    apply_filter, curvature_for_frequency, find_minimum, precompensate, read_waveform, sample_count, solve_voltages,
    write_waveform, ElectrodeBasis, FilterModel, Frame, PotentialConstraints, SolveOptions, Waveform,
    WellConstraint,
};

/// A point on one of the four arms and the weak-axis angle along it.
fn arm_point(arm: usize, r: f64) -> ([f64; 2], f64) {
    match arm {
        0 => ([0.0, -r], 0.0),
        1 => ([0.0, r], 0.0),
        2 => ([r, 0.0], std::f64::consts::FRAC_PI_2),
        _ => ([-r, 0.0], std::f64::consts::FRAC_PI_2),
    }
}

fn rows_at(basis: &ElectrodeBasis, well: &WellConstraint) -> DMatrix<f64> {
    let m = basis.moments_at(Frame::new(well.position, well.weak_axis_angle));
    let rows: Vec<Vec<f64>> = well
        .rows()
        .into_iter()
        .map(|(k, _)| {
            let (i, j) = k.orders();
            m.row(i, j)
        })
        .collect();
    DMatrix::from_fn(rows.len(), basis.len(), |r, c| rows[r][c])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solved_wells_meet_targets(arm in 0usize..4, r in 250.0..1000.0f64, f in 1.8e6..4.2e6f64) {
        let basis = ElectrodeBasis::x_junction();
        let (p, angle) = arm_point(arm, r);
        let well = WellConstraint::harmonic(p, f, angle);
        let sol = solve_voltages(&basis, &PotentialConstraints::single(well.clone()), SolveOptions::default()).unwrap();

        // Re-measure every constrained derivative from the moments.
        let m = basis.moments_at(Frame::new(p, angle)).total(&sol.voltages);
        let scale = curvature_for_frequency(f, BE9_MASS, ELEMENTARY_CHARGE);
        for (kind, target) in well.rows() {
            let (i, j) = kind.orders();
            let got = m.derivative(i, j);
            prop_assert!((got - target).abs() <= 1e-8 * scale.max(target.abs()), "{kind}: {got} vs {target}");
        }

        let found = find_minimum(&basis, &sol.voltages, p, 20.0).unwrap();
        let err = (found.position[0] - p[0]).hypot(found.position[1] - p[1]);
        prop_assert!(err < 0.1, "position error {err}");
        let weak = found.frequencies_hz(BE9_MASS, ELEMENTARY_CHARGE)[0];
        prop_assert!((weak - f).abs() / f < 0.005, "frequency {weak} vs {f}");
    }

    #[test]
    fn no_feasible_vector_is_shorter(arm in 0usize..4, r in 300.0..900.0f64, seed in any::<u64>()) {
        let basis = ElectrodeBasis::x_junction();
        let (p, angle) = arm_point(arm, r);
        let well = WellConstraint::harmonic(p, 3.0e6, angle);
        let sol = solve_voltages(&basis, &PotentialConstraints::single(well.clone()), SolveOptions::default()).unwrap();
        prop_assert!(sol.at_bound.is_empty());
        let a = rows_at(&basis, &well);
        let svd = a.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        // Remaining rows of Vᵀ beyond the rank span the null space; since
        // the thin SVD omits them, project random vectors instead.
        let v0 = DVector::from_vec(sol.voltages.clone());
        let mut s = seed;
        for _ in 0..20 {
            let z = DVector::from_fn(basis.len(), |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.2
            });
            let z = &z - vt.transpose() * (&vt * &z);
            let w = &v0 + z;
            prop_assert!((&a * &w - &a * &v0).norm() <= 1e-9 * (1.0 + (&a * &v0).norm()));
            prop_assert!(w.norm() >= v0.norm() - 1e-12);
        }
    }

    #[test]
    fn sample_count_is_exact(us in 1u32..5000, mhz in 1u32..100) {
        let d = us as f64 * 1e-6;
        let rate = mhz as f64 * 1e6;
        prop_assert_eq!(sample_count(d, rate), us as usize * mhz as usize);
        let w = Waveform::from_keyframes(vec!["e".into()], &[vec![0.0], vec![1.0]], d, rate, 10.0).unwrap();
        prop_assert_eq!(w.len(), us as usize * mhz as usize);
    }

    #[test]
    fn precompensation_round_trips(cut in 0.2e6..10e6f64, seed in any::<u64>()) {
        let n = 400;
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        };
        let keys: Vec<Vec<f64>> = (0..8).map(|_| vec![next() * 2.0 - 1.0, next() * 2.0 - 1.0]).collect();
        let w = Waveform::from_keyframes(vec!["a".into(), "b".into()], &keys, n as f64 / 5e7, 5e7, 1e3).unwrap();
        let f = FilterModel::new(cut, 5e7).unwrap();
        let pre = precompensate(&w, &f).unwrap();
        prop_assert!(pre.clipped.is_empty());
        let seen = apply_filter(&pre.waveform, &f).unwrap();
        for (a, b) in seen.samples.iter().zip(&w.samples).skip(1) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() < 1e-9 * w.voltage_bound);
            }
        }
    }
}

#[test]
fn waveform_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.csv");
    let w = Waveform::from_keyframes(
        vec!["x".into(), "y".into()],
        &[vec![0.1, -0.2], vec![1.0 / 3.0, 2.5], vec![0.0, 0.0]],
        2e-6,
        5e7,
        10.0,
    )
    .unwrap();
    write_waveform(&w, &path).unwrap();
    assert_eq!(read_waveform(&path).unwrap(), w);
}

#[test]
fn basis_files_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("basis.json");
    let basis = ElectrodeBasis::x_junction();
    std::fs::write(&path, basis.to_json()).unwrap();
    assert_eq!(ElectrodeBasis::load(&path).unwrap(), basis);
    std::fs::write(&path, "{\"electrodes\": []}").unwrap();
    assert!(ElectrodeBasis::load(&path).is_err());
}
