use mallows_core::oracle::{
    exact_arc_marginal, exact_expected_cycles, exact_window_displacement, read_fixtures_csv,
    standard_fixtures,
};
use mallows_core::qseries::{
    arc_marginals, arc_transition_finite, arc_transition_infinite, ce_co_exact,
    displacement_pmf, expected_fixed_points_finite, m1_exact, mu2_exact, nu_stationary,
    z_partition, QParam,
};
use proptest::prelude::*;

fn q(v: f64) -> QParam {
    QParam::new(v).unwrap()
}

#[test]
fn frozen_oracle_values() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/oracle_values.csv");
    let frozen = read_fixtures_csv(std::fs::File::open(path).unwrap()).unwrap();
    let fresh = standard_fixtures().unwrap();
    assert_eq!(frozen.len(), fresh.len());
    for (a, b) in frozen.iter().zip(&fresh) {
        assert_eq!((a.n, a.q, &a.statistic), (b.n, b.q, &b.statistic));
        assert!(
            (a.value - b.value).abs() <= 1e-12 * a.value.abs().max(1.0),
            "{a:?} vs {b:?}"
        );
    }
}

#[test]
fn two_cycles_at_six() {
    let v = exact_expected_cycles(6, q(0.7), 2).unwrap();
    assert!((v - 0.531_988_685_106_568_8).abs() < 1e-13);
}

#[test]
fn arc_marginal_from_kernels() {
    let marg = arc_marginals(6, q(0.7)).unwrap();
    for t in 0..=6 {
        let exact = exact_arc_marginal(6, q(0.7), t).unwrap();
        for (k, &p) in marg[t].iter().enumerate() {
            let e = exact.get(&k).copied().unwrap_or(0.0);
            assert!((p - e).abs() < 1e-10, "t={t} k={k}: {p} vs {e}");
        }
    }
}

#[test]
fn finite_fixed_points_match_enumeration() {
    for n in 1..=8 {
        for qv in [0.2, 0.5, 0.9] {
            let a = expected_fixed_points_finite(n, q(qv)).unwrap();
            let b = exact_expected_cycles(n, q(qv), 1).unwrap();
            assert!((a - b).abs() < 1e-10, "n={n} q={qv}");
        }
    }
}

#[test]
fn finite_window_approaches_displacement_law() {
    let p0 = displacement_pmf(q(0.3), 1e-12).unwrap().prob(0);
    let w9 = exact_window_displacement(9, q(0.3), 0).unwrap();
    assert!((w9 - p0).abs() < 0.01);
    let w7 = exact_window_displacement(7, q(0.3), 0).unwrap();
    assert!((w9 - p0).abs() < (w7 - p0).abs());
}

#[test]
fn small_q_expansion() {
    for qv in [1e-3, 1e-2] {
        let m1 = m1_exact(q(qv), 1e-12).unwrap();
        assert!(m1 >= 1.0 - 2.0 * qv);
        assert!(m1 <= (1.0 - qv).powi(3) / (1.0 - qv + qv * qv) + qv * qv / (1.0 + qv));
    }
}

#[test]
fn large_q_constants() {
    let mu2 = mu2_exact(q(25.0), 1e-10).unwrap();
    assert!((0.4..=0.5).contains(&mu2));
    let (ce, co) = ce_co_exact(q(1.05), 1e-10).unwrap();
    assert!((ce - 0.5).abs() < 0.02 && (co - 0.5).abs() < 0.02);
}

#[test]
fn partition_function_growth() {
    let z = z_partition(30, q(0.9)).unwrap();
    let direct: f64 = (1..=30).map(|i| (1.0 - 0.9f64.powi(i)) / 0.1).product();
    assert!((z - direct).abs() <= 1e-12 * direct);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn displacement_pmf_shape(qv in 0.02f64..0.98) {
        let pmf = displacement_pmf(q(qv), 1e-10).unwrap();
        prop_assert!((pmf.total() - 1.0).abs() <= 1e-9);
        prop_assert!((pmf.even_mass() + pmf.odd_mass() - pmf.total()).abs() < 1e-14);
        let w = pmf.half_width() as i64;
        for d in 0..w {
            prop_assert_eq!(pmf.prob(d), pmf.prob(-d));
            let r = pmf.prob(d + 1) / pmf.prob(d);
            prop_assert!(r >= qv * (1.0 - 1e-9) && r <= 1.0 + 1e-12, "d={} r={}", d, r);
        }
        let m1 = m1_exact(q(qv), 1e-10).unwrap();
        prop_assert!((m1 - pmf.prob(0)).abs() <= 1e-8);
    }

    #[test]
    fn stationary_arc_law(qv in 0.02f64..0.95) {
        let nu = nu_stationary(q(qv), 1e-10).unwrap();
        let total: f64 = nu.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        // stationarity under the infinite kernel
        let w = nu.weights();
        for s in 0..w.len().saturating_sub(1) {
            let mut inflow = w[s] * arc_transition_infinite(s, q(qv)).unwrap().stay
                + w[s + 1] * arc_transition_infinite(s + 1, q(qv)).unwrap().down;
            if s > 0 {
                inflow += w[s - 1] * arc_transition_infinite(s - 1, q(qv)).unwrap().up;
            }
            prop_assert!((inflow - w[s]).abs() <= 1e-9, "s={}", s);
        }
    }

    #[test]
    fn kernel_rows_sum_to_one(qv in 0.01f64..0.99, n in 2usize..80, t_frac in 0.0f64..1.0) {
        let t = ((n - 1) as f64 * t_frac) as usize;
        for k in 0..=t.min(n - t) {
            let row = arc_transition_finite(k, t, n, q(qv)).unwrap();
            prop_assert!((row.row_sum() - 1.0).abs() <= 1e-12);
            prop_assert!(row.down >= 0.0 && row.stay >= -1e-15 && row.up >= -1e-15);
        }
        let row = arc_transition_infinite(n, q(qv)).unwrap();
        prop_assert!((row.row_sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn parity_constants_sum(qv in 1.01f64..200.0) {
        let (ce, co) = ce_co_exact(q(qv), 1e-10).unwrap();
        prop_assert!((ce + co - 1.0).abs() <= 1e-8);
        prop_assert!(ce >= 1.0 / (1.0 + qv) - 1e-12 && co <= qv / (1.0 + qv) + 1e-12);
        prop_assert!(co >= 1.0 / (1.0 + qv) - 1e-12 && ce <= qv / (1.0 + qv) + 1e-12);
    }
}
