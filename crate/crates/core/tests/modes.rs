use std::f64::consts::PI;

use ductmode::env::*;
use ductmode::modes::*;
use proptest::prelude::*;

fn ideal_k(f: f64, c: f64, d: f64, m: usize) -> f64 {
    ((2.0 * PI * f / c).powi(2) - ((m as f64 - 0.5) * PI / d).powi(2)).sqrt()
}

/// Depth above which 90% of `∫ Ψ²` lies.
fn depth90(ms: &ModeSet, m: &Mode) -> f64 {
    let e: Vec<f64> = m.eigenfunction.iter().map(|v| v * v).collect();
    let total: f64 = e.iter().sum();
    let mut acc = 0.0;
    for (i, v) in e.iter().enumerate() {
        acc += v;
        if acc >= 0.9 * total {
            return i as f64 * ms.dz;
        }
    }
    ms.water_depth
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let ab: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let aa: f64 = a.iter().map(|x| x * x).sum();
    let bb: f64 = b.iter().map(|x| x * x).sum();
    (ab / (aa * bb).sqrt()).abs()
}

/// Group velocity by central differences of k over `f ± df`, matching modes by
/// eigenfunction correlation.
fn fd_group_velocity(wg: &Waveguide, f: f64, dz: f64, modes: usize) -> Vec<(f64, f64)> {
    let df = 0.1;
    let mid = solve_modes(wg, f, modes + 4, dz).unwrap();
    let lo = solve_modes(wg, f - df, modes + 4, dz).unwrap();
    let hi = solve_modes(wg, f + df, modes + 4, dz).unwrap();
    let matched = |set: &ModeSet, m: &Mode| {
        set.modes
            .iter()
            .max_by(|a, b| {
                correlation(&a.eigenfunction, &m.eigenfunction)
                    .total_cmp(&correlation(&b.eigenfunction, &m.eigenfunction))
            })
            .unwrap()
            .wavenumber
    };
    mid.modes
        .iter()
        .take(modes)
        .map(|m| {
            let dk = matched(&hi, m) - matched(&lo, m);
            (m.group_velocity, 2.0 * PI * 2.0 * df / dk)
        })
        .collect()
}

#[test]
fn ideal_waveguide_closed_form() {
    let wg = Waveguide::ideal_rigid(1500.0, 2000.0).unwrap();
    let f = 100.0;
    let ms = solve_modes(&wg, f, 10, default_dz(&wg, f)).unwrap();
    assert_eq!(ms.len(), 10);
    for m in &ms.modes {
        let k = ideal_k(f, 1500.0, 2000.0, m.index);
        assert!(((m.wavenumber - k) / k).abs() < 5e-4, "mode {}", m.index);
        // v_g = c^2 k / omega
        let vg = 1500.0f64.powi(2) * m.wavenumber / (2.0 * PI * f);
        assert!(((m.group_velocity - vg) / vg).abs() < 1e-3, "mode {}", m.index);
        assert!(m.group_velocity <= m.phase_speed(f));
    }
}

#[test]
fn below_cutoff_flagged() {
    let wg = Waveguide::ideal_rigid(1500.0, 100.0).unwrap();
    let ms = solve_modes(&wg, 1.0, 5, 1.0).unwrap();
    assert!(ms.is_empty() && ms.below_cutoff);
}

#[test]
fn coarse_grid_is_an_error() {
    let wg = Waveguide::ideal_rigid(1500.0, 100.0).unwrap();
    assert!(matches!(solve_modes(&wg, 100.0, 5, 5.0), Err(ModeError::GridTooCoarse { .. })));
}

#[test]
fn dual_channel_eigenfunction_depths_at_20hz() {
    let wg = Waveguide::dual_channel_fixture();
    let ms = solve_modes(&wg, 20.0, 3, 1.0).unwrap();
    let z1 = depth90(&ms, &ms.modes[0]);
    let z3 = depth90(&ms, &ms.modes[2]);
    assert!(z1 <= 500.0 * 1.3, "mode 1 90% depth {z1}");
    assert!((1500.0 * 0.7..=1500.0 * 1.3).contains(&z3), "mode 3 90% depth {z3}");
}

#[test]
fn perturbation_matches_finite_difference() {
    let ideal = Waveguide::ideal_rigid(1500.0, 2000.0).unwrap();
    let dual = Waveguide::dual_channel_fixture();
    for wg in [&ideal, &dual] {
        for f in [10.0, 40.0, 70.0, 100.0] {
            let dz = default_dz(wg, f + 0.1);
            for (i, (vp, vfd)) in fd_group_velocity(wg, f, dz, 5).into_iter().enumerate() {
                assert!(((vp - vfd) / vfd).abs() < 5e-3, "{f} Hz mode {}: {vp} vs {vfd}", i + 1);
            }
        }
    }
}

#[test]
fn perturbation_is_idempotent_on_solved_sets() {
    let wg = Waveguide::dual_channel_fixture();
    let ms = solve_modes(&wg, 50.0, 6, 1.0).unwrap();
    let again = group_velocity_perturbation(&ms, &wg);
    for (a, b) in ms.modes.iter().zip(&again.modes) {
        assert!((a.group_velocity - b.group_velocity).abs() < 1e-9 * a.group_velocity);
    }
}

#[test]
fn ideal_table_closed_form() {
    let wg = Waveguide::ideal_rigid(1500.0, 2000.0).unwrap();
    let t = dispersion_table(&wg, 5.0, 100.0, 1.0, 6).unwrap();
    for c in &t.curves {
        let vals: Vec<(f64, f64)> = t
            .frequencies
            .iter()
            .zip(&c.group_velocity)
            .filter_map(|(f, v)| v.map(|v| (*f, v)))
            .collect();
        assert!(vals.windows(2).all(|w| w[1].1 > w[0].1));
        for (f, v) in vals {
            let k = ideal_k(f, 1500.0, 2000.0, c.mode);
            let closed = 1500.0f64.powi(2) * k / (2.0 * PI * f);
            assert!(((v - closed) / closed).abs() < 1e-3, "mode {} at {f}", c.mode);
        }
    }
}

#[test]
fn dual_channel_mode1_crosses_mode3() {
    let wg = Waveguide::dual_channel_fixture();
    let t = dispersion_table(&wg, 20.0, 70.0, 1.0, 4).unwrap();
    let diff: Vec<f64> = (0..t.frequencies.len())
        .filter_map(|i| Some(t.vg(1, i)? - t.vg(3, i)?))
        .collect();
    assert!(diff.first().unwrap() < &0.0 && diff.last().unwrap() > &0.0);
    assert!(diff.windows(2).any(|w| w[0] < 0.0 && w[1] >= 0.0));
}

#[test]
fn table_sanity_bounds() {
    let wg = Waveguide::dual_channel_fixture();
    let t = dispersion_table(&wg, 10.0, 100.0, 5.0, 10).unwrap();
    let (cmin, cmax) = wg.speed_bounds();
    let hi = cmax.max(wg.bottom_speed);
    for c in &t.curves {
        for v in c.group_velocity.iter().flatten() {
            assert!(*v >= 0.8 * cmin && *v <= hi);
        }
        let ks: Vec<f64> = c.wavenumber.iter().flatten().copied().collect();
        assert!(ks.windows(2).all(|w| w[1] > w[0]), "mode {}", c.mode);
    }
}

#[test]
fn single_column_table() {
    let wg = Waveguide::ideal_rigid(1500.0, 500.0).unwrap();
    let t = dispersion_table(&wg, 20.0, 30.0, 50.0, 3).unwrap();
    assert_eq!(t.frequencies, vec![20.0]);
}

#[test]
fn table_is_deterministic() {
    let wg = Waveguide::dual_channel_fixture();
    let a = dispersion_table(&wg, 10.0, 60.0, 5.0, 6).unwrap();
    let b = dispersion_table(&wg, 10.0, 60.0, 5.0, 6).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cutoff_filter_examples() {
    let wg = Waveguide::dual_channel_fixture();
    let ms = solve_modes(&wg, 20.0, 5, 1.0).unwrap();
    assert_eq!(cutoff_filter(&ms, wg.water_depth, &wg).unwrap(), ms);
    assert!(cutoff_filter(&ms, 1e-3, &wg).unwrap().is_empty());
    assert!(cutoff_filter(&ms, 0.0, &wg).is_err());
    let kept = cutoff_filter(&ms, 800.0, &wg).unwrap();
    let idx: Vec<usize> = kept.modes.iter().map(|m| m.index).collect();
    assert!(idx.contains(&1) && !idx.contains(&3), "{idx:?}");
    // oracle: the deepest oscillatory depth, scanned on the sound speed profile
    for m in &ms.modes {
        let cp = m.phase_speed(20.0);
        let turning = (0..=2000)
            .map(f64::from)
            .filter(|&z| wg.speed_at(z) < cp)
            .fold(0.0, f64::max);
        assert_eq!(idx.contains(&m.index), turning <= 800.0, "mode {} turns at {turning}", m.index);
    }
}

#[test]
fn grid_convergence_at_100hz() {
    let wg = Waveguide::dual_channel_fixture();
    let a = solve_modes(&wg, 100.0, 8, 1.0).unwrap();
    let b = solve_modes(&wg, 100.0, 8, 0.5).unwrap();
    for (x, y) in a.modes.iter().zip(&b.modes) {
        assert!(((x.wavenumber - y.wavenumber) / y.wavenumber).abs() < 1e-4);
    }
}

#[test]
fn json_and_eigenfunction_exports() {
    let wg = Waveguide::dual_channel_fixture();
    let ms = solve_modes(&wg, 20.0, 3, 1.0).unwrap();
    let mut buf = Vec::new();
    ms.write_json(&mut buf).unwrap();
    let back: ModeSet = serde_json::from_slice(&buf).unwrap();
    assert_eq!(back.len(), 3);
    assert_eq!(back.frequency, 20.0);
    let mut csv = Vec::new();
    ms.write_eigenfunction_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z_m,psi_mode1,psi_mode2,psi_mode3"));
    assert_eq!(lines.count(), (wg.water_depth / ms.dz).round() as usize + 1);
}

fn check_set(ms: &ModeSet, wg: &Waveguide) -> Result<(), TestCaseError> {
    for (i, m) in ms.modes.iter().enumerate() {
        let interior = &m.eigenfunction[1..m.eigenfunction.len() - 1];
        prop_assert_eq!(zero_crossings(interior), m.index - 1);
        prop_assert!(m.eigenfunction[0] == 0.0 && m.eigenfunction[1] > 0.0);
        prop_assert!(m.group_velocity > 0.0);
        if i > 0 {
            prop_assert!(m.wavenumber < ms.modes[i - 1].wavenumber);
        }
        for n in &ms.modes {
            let ip = inner_product(ms, wg, m, n);
            let want = if m.index == n.index { 1.0 } else { 0.0 };
            prop_assert!((ip - want).abs() <= 1e-6, "<{},{}> = {}", m.index, n.index, ip);
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sturm_ordering_orthonormality_ideal(f in 5.0f64..100.0, depth in 200.0f64..2000.0) {
        let wg = Waveguide::ideal_rigid(1500.0, depth).unwrap();
        let ms = solve_modes(&wg, f, 8, default_dz(&wg, f)).unwrap();
        check_set(&ms, &wg)?;
        for m in &ms.modes {
            prop_assert!(m.group_velocity <= m.phase_speed(f));
        }
    }

    #[test]
    fn sturm_ordering_orthonormality_dual(f in 10.0f64..100.0) {
        let wg = Waveguide::dual_channel_fixture();
        let ms = solve_modes(&wg, f, 8, default_dz(&wg, f)).unwrap();
        check_set(&ms, &wg)?;
        let (cmin, _) = wg.speed_bounds();
        for m in &ms.modes {
            let cp = m.phase_speed(f);
            prop_assert!(cp >= cmin && cp <= wg.bottom_speed);
        }
    }
}
