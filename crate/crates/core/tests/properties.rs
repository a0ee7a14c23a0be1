use proptest::prelude::*;

use stiefel_norm::bounds::{self, GrowthParams};
use stiefel_norm::linalg::{abs_eigen_diag, SymmetricMatrix};
use stiefel_norm::partitions::{enumerate, Partition};
use stiefel_norm::series::{self, SeriesParams};
use stiefel_norm::stiefel_mc::{sample_orthogonal, sample_stiefel, stream_rng};
use stiefel_norm::verify::{self, CheckResult};

fn symmetric(n: usize, entries: &[f64]) -> SymmetricMatrix {
    let mut m = vec![0.0; n * n];
    let mut it = entries.iter().cycle();
    for i in 0..n {
        for j in i..n {
            let v = *it.next().unwrap();
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    SymmetricMatrix::from_row_major(n, m).unwrap()
}

fn pd(n: usize, entries: &[f64]) -> SymmetricMatrix {
    let g = symmetric(n, entries);
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = (0..n).map(|k| g.get(i, k) * g.get(k, j)).sum::<f64>() / n as f64 + if i == j { 0.05 } else { 0.0 };
        }
    }
    SymmetricMatrix::from_row_major(n, m).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectrum_survives_orthogonal_conjugation(n in 1usize..7, entries in prop::collection::vec(-3.0f64..3.0, 21), seed in 0u64..1000) {
        let s = symmetric(n, &entries);
        let h = sample_orthogonal(n, &mut stream_rng(seed, 0));
        let e1 = s.eigen().values;
        let e2 = s.conjugate(&h).eigen().values;
        for (a, b) in e1.iter().zip(&e2) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn frobenius_matches_spectrum(n in 1usize..7, entries in prop::collection::vec(-3.0f64..3.0, 21)) {
        let s = symmetric(n, &entries);
        let from_eigs = s.eigen().values.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((s.frobenius_norm() - from_eigs).abs() <= 1e-9 * from_eigs.max(1e-300));
    }

    #[test]
    fn abs_eigen_diag_is_idempotent(n in 1usize..6, entries in prop::collection::vec(-3.0f64..3.0, 15)) {
        let once = abs_eigen_diag(&symmetric(n, &entries));
        prop_assert_eq!(abs_eigen_diag(&once), once);
    }

    #[test]
    fn stiefel_samples_are_orthonormal(d in 1usize..9, p_off in 0usize..8, seed in 0u64..10_000) {
        let p = 1 + p_off % d;
        let x = sample_stiefel(d, p, &mut stream_rng(seed, 3));
        prop_assert!(x.orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn phi_partial_sums_nondecreasing_for_pd(d in 1usize..5, p_off in 0usize..3, ea in prop::collection::vec(-1.0f64..1.0, 6), es in prop::collection::vec(-1.0f64..1.0, 10)) {
        let p = 1 + p_off % d;
        let (a, s) = (pd(p, &ea), pd(d, &es));
        let table = series::table_for(8, p as u64, d as u64).unwrap();
        let mut prev = 0.0;
        for m in 1..=8 {
            let v = series::phi_truncated(&a, &s, &SeriesParams::new(d as u64, p as u64, m, m).unwrap(), &table).unwrap().value;
            prop_assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn phi_depends_on_spectra_only(d in 2usize..5, ea in prop::collection::vec(-1.0f64..1.0, 6), es in prop::collection::vec(-1.0f64..1.0, 10), seed in 0u64..1000) {
        let p = 2;
        let (a, s) = (symmetric(p, &ea), symmetric(d, &es));
        let mut rng = stream_rng(seed, 1);
        let (h, k) = (sample_orthogonal(d, &mut rng), sample_orthogonal(p, &mut rng));
        let params = SeriesParams::new(d as u64, p as u64, 7, 7).unwrap();
        let table = series::table_for(7, p as u64, d as u64).unwrap();
        let v0 = series::phi_truncated(&a, &s, &params, &table).unwrap().value;
        let v1 = series::phi_truncated(&a.conjugate(&k), &s.conjugate(&h), &params, &table).unwrap().value;
        prop_assert!((v0 - v1).abs() <= 1e-10 * v0.abs().max(1.0));
    }

    #[test]
    fn upper_bounds_decrease_in_d(p in 1u64..4, m in 2u32..10, gamma0 in 0.05f64..2.0, r in 0.0f64..0.9, d0 in 4u64..50) {
        let g = GrowthParams::new(gamma0, r).unwrap();
        let d0 = d0.max(p);
        let at = |d: u64| {
            let t = bounds::t_phi_from_trace(p as f64, d, p, g).unwrap();
            bounds::upper_from_t(m, t, p, bounds::n_dim(d), true).unwrap()
        };
        let (u0, u1) = (at(d0), at(2 * d0));
        prop_assert!(u1.ln_upper_series < u0.ln_upper_series);
        prop_assert!(u1.ln_upper_closed < u0.ln_upper_closed);
    }

    #[test]
    fn pochhammer_and_ratio_checks_pass(w in 2u32..9, d in 1u64..20, p_off in 0u64..4, pick in 0usize..64) {
        let p = 1 + p_off % d.min(4);
        let all = enumerate(w, p as usize);
        let kappa = &all[pick % all.len()];
        let (lo, hi) = verify::check_pochhammer_bounds(kappa, d, p).unwrap();
        prop_assert!(lo.passed && hi.passed);
        prop_assert!(verify::check_ratio_bound(kappa, d, p).unwrap().passed);
        prop_assert!(verify::check_scalar_tightness(kappa, d, p).unwrap().passed);
    }

    #[test]
    fn check_result_pass_rule(lhs in -1e3f64..1e3, rhs in -1e3f64..1e3) {
        let c = CheckResult::new("x", lhs, rhs, "");
        prop_assert_eq!(c.passed, lhs <= rhs + 1e-12 * rhs.abs());
        prop_assert_eq!(c.margin, rhs - lhs);
    }
}

#[test]
fn dual_growth_keeps_upper_bounded() {
    // (tr A_+)^2 p = d^{1-r} along d = 4^j, p = 2^j
    let g = GrowthParams::new(1.0, 0.0).unwrap();
    let vals: Vec<f64> = (1..=8u32)
        .map(|j| {
            let (d, p) = (4u64.pow(j), 2u64.pow(j));
            let tr = ((d as f64) / p as f64).sqrt();
            let t = bounds::t_phi_from_trace(tr, d, p, g).unwrap();
            bounds::upper_from_t(3, t, p, bounds::n_dim(d), true).unwrap().upper_series
        })
        .collect();
    let first = vals[0];
    assert!(vals.iter().all(|&v| v.is_finite() && v <= 1.5 * first), "{vals:?}");
}

#[test]
fn fk_ratio_falls_with_dimension() {
    let t = stiefel_norm::zonal::ZonalCoeffTable::build(2, 2, 2, 30).unwrap();
    let k = Partition::new(vec![1, 1]);
    let r: Vec<f64> = [4u64, 16, 64].iter().map(|&d| verify::spiked_fk_ratio(&k, d, &t).unwrap().ratio).collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]) && r[2] < 1.0, "{r:?}");
}
