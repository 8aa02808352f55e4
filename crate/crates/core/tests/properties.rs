mod common;

use chrono::{Days, NaiveDate};
use proptest::prelude::*;

use marketrmt::analysis::{compare_vectors, inverse_participation, ipr};
use marketrmt::correlation::{coefficient_stats, correlation_matrix, CorrelationMatrix};
use marketrmt::ingest::{align, slice_window, PricePanel, WindowSpec};
use marketrmt::matrix::SquareMatrix;
use marketrmt::returns::{log_returns, normalize, ReturnPanel};
use marketrmt::rmt::{mp_bounds, mp_density, gaussian_panel};
use marketrmt::spectral::eigendecompose;
use marketrmt::synthetic::FactorModel;

fn day(k: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2007, 1, 1).unwrap() + Days::new(k as u64)
}

/// Raw panels with random gaps; every ticker trades at least once.
fn raw_panel() -> impl Strategy<Value = PricePanel> {
    (2usize..7, 2usize..25).prop_flat_map(|(n, t)| {
        proptest::collection::vec(proptest::option::weighted(0.8, 1.0f64..500.0), n * t).prop_map(move |cells| {
            let mut rows: Vec<Vec<Option<f64>>> = cells.chunks(n).map(|c| c.to_vec()).collect();
            for j in 0..n {
                if rows.iter().all(|r| r[j].is_none()) {
                    rows[t - 1][j] = Some(10.0);
                }
            }
            PricePanel::new(
                (0..t).map(day).collect(),
                (0..n).map(|i| format!("T{i}")).collect(),
                rows,
            )
            .unwrap()
        })
    })
}

fn gaussian_corr(n: usize, t: usize, seed: u64) -> CorrelationMatrix {
    let tickers = (0..n).map(|i| format!("S{i}")).collect();
    let rp = ReturnPanel::from_rows(tickers, gaussian_panel(n, t, seed)).unwrap();
    correlation_matrix(&normalize(&rp).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn align_is_dense_idempotent_and_follows_theta(p in raw_panel(), theta in 0.0f64..=1.0) {
        let Ok(a) = align(&p, theta) else { return Ok(()); };
        let n = p.tickers().len();
        prop_assert!(a.len() <= p.dates().len());
        prop_assert!(a.rows().iter().flatten().all(|x| *x > 0.0));

        // Every retained date passes the threshold rule.
        for d in a.dates() {
            let t = p.dates().iter().position(|x| x == d).unwrap();
            let missing = p.rows()[t].iter().filter(|c| c.is_none()).count();
            prop_assert!(missing == 0 || (missing as f64 / n as f64) < theta);
        }
        // Every date that passes the rule and follows full coverage is retained.
        let first_covered = (0..p.dates().len())
            .find(|&t| (0..n).all(|j| (0..=t).any(|s| p.rows()[s][j].is_some())))
            .unwrap();
        for (t, d) in p.dates().iter().enumerate() {
            let missing = p.rows()[t].iter().filter(|c| c.is_none()).count();
            let passes = missing == 0 || (missing as f64 / n as f64) < theta - 1e-12;
            prop_assert_eq!(passes && t >= first_covered, a.dates().contains(d));
        }
        // Filled cells carry the most recent earlier price.
        for cell in a.fill_log() {
            let t = p.dates().iter().position(|x| *x == cell.date).unwrap();
            let j = p.tickers().iter().position(|x| *x == cell.ticker).unwrap();
            let prev = (0..t).rev().find_map(|s| p.rows()[s][j]).unwrap();
            let at = a.dates().iter().position(|x| *x == cell.date).unwrap();
            prop_assert_eq!(a.rows()[at][j], prev);
        }

        let raw_again = PricePanel::new(
            a.dates().to_vec(),
            a.tickers().to_vec(),
            a.rows().iter().map(|r| r.iter().copied().map(Some).collect()).collect(),
        ).unwrap();
        let twice = align(&raw_again, theta).unwrap();
        prop_assert_eq!(twice.rows(), a.rows());
        prop_assert_eq!(twice.dates(), a.dates());
        prop_assert!(twice.fill_log().is_empty());
    }

    #[test]
    fn windows_partition_rows(p in raw_panel(), cut in 0usize..30) {
        let Ok(a) = align(&p, 0.5) else { return Ok(()); };
        let first = a.dates()[0];
        let last = *a.dates().last().unwrap();
        let split = first + Days::new(cut as u64);
        let w1 = WindowSpec::new("a", first, split).unwrap();
        let w2 = WindowSpec::new("b", split + Days::new(1), last.max(split + Days::new(1))).unwrap();
        let mut rows = Vec::new();
        for w in [&w1, &w2] {
            if let Ok(s) = slice_window(&a, w) {
                rows.extend(s.dates().iter().copied());
            }
        }
        prop_assert_eq!(rows, a.dates().to_vec());
    }

    #[test]
    fn log_returns_ignore_price_scale(prices in proptest::collection::vec(0.5f64..2000.0, 2..40), c in 0.01f64..100.0) {
        let dates: Vec<NaiveDate> = (0..prices.len()).map(day).collect();
        let one = |scale: f64| {
            let rows = prices.iter().map(|p| vec![p * scale]).collect();
            let panel = marketrmt::ingest::AlignedPanel::new(dates.clone(), vec!["A".into()], rows).unwrap();
            log_returns(&panel).unwrap().returns()[0].clone()
        };
        for (a, b) in one(1.0).iter().zip(one(c)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn normalized_rows_have_unit_moments(seed in any::<u64>(), n in 1usize..6, t in 3usize..200) {
        let rp = ReturnPanel::from_rows((0..n).map(|i| i.to_string()).collect(), gaussian_panel(n, t, seed)).unwrap();
        let np = normalize(&rp).unwrap();
        for row in np.rows() {
            let m = row.iter().sum::<f64>() / t as f64;
            let second = row.iter().map(|x| x * x).sum::<f64>() / t as f64;
            let sd = (row.iter().map(|x| (x - m).powi(2)).sum::<f64>() / t as f64).sqrt();
            prop_assert!(m.abs() < 1e-12);
            prop_assert!((sd - 1.0).abs() < 1e-12);
            prop_assert!((second - 1.0).abs() < 1e-12);
        }
        let again = normalize(&ReturnPanel::from_rows(np.tickers().to_vec(), np.rows().to_vec()).unwrap()).unwrap();
        for (a, b) in again.rows().iter().flatten().zip(np.rows().iter().flatten()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_matches_loops_and_relabels(seed in any::<u64>(), n in 2usize..7, t in 5usize..80) {
        let raw = common::uniform_panel(n, t, seed);
        let tickers: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
        let np = normalize(&ReturnPanel::from_rows(tickers.clone(), raw.clone()).unwrap()).unwrap();
        let c = correlation_matrix(&np).unwrap();
        let oracle = common::naive_correlation(&common::standardize(&raw));
        for i in 0..n {
            prop_assert!((c.get(i, i) - 1.0).abs() < 1e-10);
            for j in 0..n {
                prop_assert!((c.get(i, j) - oracle[i][j]).abs() < 1e-12);
                prop_assert_eq!(c.get(i, j), c.get(j, i));
                prop_assert!(c.get(i, j).abs() <= 1.0 + 1e-12);
            }
        }

        let perm: Vec<usize> = (0..n).rev().collect();
        let permuted_rows: Vec<Vec<f64>> = perm.iter().map(|&i| raw[i].clone()).collect();
        let permuted_tickers: Vec<String> = perm.iter().map(|&i| tickers[i].clone()).collect();
        let cp = correlation_matrix(&normalize(&ReturnPanel::from_rows(permuted_tickers, permuted_rows).unwrap()).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((cp.get(i, j) - c.get(perm[i], perm[j])).abs() < 1e-14);
            }
        }

        let stats = coefficient_stats(&c, 0.05).unwrap();
        let flat: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| oracle[i][j]).collect();
        let mean = flat.iter().sum::<f64>() / flat.len() as f64;
        let std = (flat.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / flat.len() as f64).sqrt();
        prop_assert!((stats.mean - mean).abs() < 1e-12);
        prop_assert!((stats.std - std).abs() < 1e-12);
        let area: f64 = stats.histogram.iter().map(|b| b.density * stats.bin_width).sum();
        prop_assert!((area - 1.0).abs() < 1e-9);
        prop_assert!(stats.histogram.iter().all(|b| b.density >= 0.0));
    }

    #[test]
    fn decomposition_invariants(seed in any::<u64>(), n in 2usize..12, extra in 0usize..30) {
        let c = gaussian_corr(n, n / 2 + 2 + extra, seed);
        let sd = eigendecompose(&c).unwrap();
        prop_assert!(sd.reconstruct().max_abs_diff(c.matrix()) < 1e-8);
        let v = sd.vectors_matrix();
        prop_assert!(v.transpose().matmul(&v).max_abs_diff(&SquareMatrix::identity(n)) < 1e-8);
        prop_assert!(sd.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((sd.eigenvalues().iter().sum::<f64>() - n as f64).abs() < 1e-6);
        prop_assert!(*sd.eigenvalues().last().unwrap() >= -1e-10);
        for u in sd.eigenvectors() {
            let big = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let first = u.iter().find(|x| x.abs() == big).unwrap();
            prop_assert!(*first > 0.0);
        }

        // Relabeling: same spectrum, eigenvectors permuted up to sign.
        let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
        let mut sorted = perm.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() == n {
            let tickers: Vec<String> = perm.iter().map(|&i| c.tickers()[i].clone()).collect();
            let cp = CorrelationMatrix::from_matrix(tickers, c.matrix().permuted(&perm)).unwrap();
            let sp = eigendecompose(&cp).unwrap();
            for (a, b) in sd.eigenvalues().iter().zip(sp.eigenvalues()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
            let gaps_ok = |k: usize| {
                let l = sd.eigenvalues();
                (k == 0 || l[k - 1] - l[k] > 1e-6) && (k + 1 == n || l[k] - l[k + 1] > 1e-6)
            };
            for k in (0..n).filter(|&k| gaps_ok(k)) {
                let u = &sd.eigenvectors()[k];
                let w = &sp.eigenvectors()[k];
                let dot: f64 = perm.iter().enumerate().map(|(i, &src)| u[src] * w[i]).sum();
                prop_assert!((dot.abs() - 1.0).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn determinant_is_eigenvalue_product(seed in any::<u64>(), n in 2usize..=6) {
        let c = gaussian_corr(n, 4 * n, seed);
        let sd = eigendecompose(&c).unwrap();
        let product: f64 = sd.eigenvalues().iter().filter(|l| **l > 0.0).product();
        prop_assert!((product - common::lu_determinant(c.matrix())).abs() < 1e-8);
    }

    #[test]
    fn three_by_three_matches_characteristic_polynomial(seed in any::<u64>(), t in 2usize..12) {
        let c = gaussian_corr(3, t, seed);
        let sd = eigendecompose(&c).unwrap();
        for (got, want) in sd.eigenvalues().iter().zip(common::cubic_eigenvalues(c.matrix())) {
            prop_assert!((got - want).abs() < 1e-10, "{} vs {}", got, want);
        }
    }

    #[test]
    fn equicorrelated_spectrum(n in 2usize..30, rho in -0.03f64..0.99) {
        let m = SquareMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { rho });
        let c = CorrelationMatrix::from_matrix((0..n).map(|i| i.to_string()).collect(), m).unwrap();
        let sd = eigendecompose(&c).unwrap();
        let mut want: Vec<f64> = std::iter::once(1.0 + (n as f64 - 1.0) * rho)
            .chain(std::iter::repeat_n(1.0 - rho, n - 1))
            .collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (got, want) in sd.eigenvalues().iter().zip(want) {
            prop_assert!((got - want).abs() < 1e-10);
        }
    }

    #[test]
    fn ipr_bounds_and_symmetries(seed in any::<u64>(), n in 2usize..15) {
        let c = gaussian_corr(n, 3 * n, seed);
        let sd = eigendecompose(&c).unwrap();
        let series = ipr(&sd);
        for (e, u) in series.entries.iter().zip(sd.eigenvectors()) {
            prop_assert!(e.ipr >= 1.0 / n as f64 - 1e-12 && e.ipr <= 1.0 + 1e-12);
            let neg: Vec<f64> = u.iter().map(|x| -x).collect();
            prop_assert_eq!(inverse_participation(&neg), e.ipr);
            let mut rev = u.clone();
            rev.reverse();
            prop_assert!((inverse_participation(&rev) - e.ipr).abs() < 1e-15);
        }
    }

    #[test]
    fn flips_are_symmetric(seed_a in any::<u64>(), seed_b in any::<u64>(), n in 3usize..10, floor in 0.0f64..0.3) {
        let a = eigendecompose(&gaussian_corr(n, 40, seed_a)).unwrap();
        let b = eigendecompose(&gaussian_corr(n, 40, seed_b)).unwrap();
        for rank in 1..=n {
            let ab = compare_vectors(&a, &b, rank, floor).unwrap();
            let ba = compare_vectors(&b, &a, rank, floor).unwrap();
            prop_assert_eq!(ab.flipped_tickers(), ba.flipped_tickers());
            prop_assert_eq!(ab.indeterminate, ba.indeterminate);
            let count = ab.components.iter().filter(|c| c.a * c.b < 0.0 && c.a.abs() >= floor && c.b.abs() >= floor).count();
            prop_assert_eq!(ab.flipped, count);
        }
    }

    #[test]
    fn mp_algebraic_identities(q in 1.0f64..200.0) {
        let m = mp_bounds(q).unwrap();
        prop_assert!((m.lambda_plus * m.lambda_minus - (1.0 - 1.0 / q).powi(2)).abs() < 1e-12);
        prop_assert!((m.lambda_plus + m.lambda_minus - 2.0 * (1.0 + 1.0 / q)).abs() < 1e-12);
        prop_assert!(0.0 <= m.lambda_minus && m.lambda_minus < m.lambda_plus);
        for k in 1..50 {
            let x = m.lambda_minus + (m.lambda_plus - m.lambda_minus) * k as f64 / 50.0;
            prop_assert!(mp_density(&m, x) > 0.0);
        }
        for x in [-1.0, m.lambda_minus - 1e-9, m.lambda_plus + 1e-9, 1e3] {
            prop_assert_eq!(mp_density(&m, x), 0.0);
        }
    }

    #[test]
    fn one_factor_market_mode_is_positive(seed in any::<u64>()) {
        let model = FactorModel::one_factor(10, 1.0, 0.02, 0.01);
        let rp = ReturnPanel::from_rows((0..10).map(|i| i.to_string()).collect(), model.simulate(300, seed)).unwrap();
        let sd = eigendecompose(&correlation_matrix(&normalize(&rp).unwrap()).unwrap()).unwrap();
        prop_assert!(sd.eigenvectors()[0].iter().all(|x| *x > 0.0));
    }
}
