mod common;

use std::collections::BTreeSet;

use gibs::cluster::{minimax_cluster, DistanceMatrix};
use gibs::fdr::{adjust, FdrMethod};
use gibs::gibs::{run_gibs, summarize_selection, BasisDesign, GibsConfig};
use gibs::lasso::{capped_lasso, lambda_max, lasso_path};
use gibs::model_tests::backtest::{AlphaEstimate, WeeklyAlphas};
use gibs::model_tests::{
    alpha_backtest, half_indicator, period_grid_run, time_invariance_linear, varying_coefficient_test, LegRanking,
    TestReport,
};
use gibs::panel::{
    adjusted_prices, excess_returns, first_differences, load_panel, synthesize, write_panel, Layout, ReturnsPanel,
    RiskFreeSeries, SyntheticSpec,
};
use gibs::regression::{ols, project_out, with_intercept};
use gibs::vol::{anomaly_test, cumulative_capital, form_vol_portfolios, VolConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|t| gibs::panel::week_label(2001, t)).collect()
}

prop_compose! {
    fn returns_panel(max_t: usize, max_n: usize)(t in 2..max_t, n in 1..max_n, seed in any::<u64>()) -> ReturnsPanel {
        let mut r = common::rng(seed);
        let v = DMatrix::from_fn(t, n, |_, _| 0.03 * common::normal(&mut r));
        ReturnsPanel::dense(labels(t), (0..n).map(|j| format!("A{j}")).collect(), v).unwrap()
    }
}

prop_compose! {
    fn regression(max_n: usize, max_k: usize)(n in 8..max_n, k in 1..max_k, seed in any::<u64>())
        -> (DMatrix<f64>, DVector<f64>) {
        let mut r = common::rng(seed);
        (common::gaussian_matrix(&mut r, n, k), common::gaussian_vector(&mut r, n))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn zero_rate_excess_is_identity(p in returns_panel(30, 5)) {
        let rf = RiskFreeSeries::constant(p.timestamps().to_vec(), 0.0).unwrap();
        prop_assert_eq!(excess_returns(&p, &rf).unwrap(), p);
    }

    #[test]
    fn price_ratios_recover_returns(p in returns_panel(40, 4)) {
        let prices = adjusted_prices(&p, &vec![1.0; p.n_assets()]).unwrap();
        let y = prices.prices();
        for j in 0..p.n_assets() {
            for t in 0..p.n_periods() - 1 {
                let r = y[(t + 1, j)] / y[(t, j)] - 1.0;
                let want = p.values()[(t, j)];
                prop_assert!((r - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }

    #[test]
    fn differences_telescope(p in returns_panel(40, 4)) {
        let prices = adjusted_prices(&p, &vec![2.0; p.n_assets()]).unwrap();
        let d = first_differences(&prices).unwrap();
        prop_assert_eq!(d.n_periods(), p.n_periods() - 1);
        let y = prices.prices();
        for j in 0..p.n_assets() {
            let s: f64 = d.column(j).iter().sum();
            prop_assert!((s - (y[(p.n_periods() - 1, j)] - y[(0, j)])).abs() < 1e-12);
        }
    }

    #[test]
    fn panel_csv_round_trip(p in returns_panel(20, 4), long in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let layout = if long { Layout::Long } else { Layout::Wide };
        write_panel(&p, &path, layout).unwrap();
        let back = load_panel(&path, layout).unwrap();
        prop_assert_eq!(back.values().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        p.values().as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back.mask(), p.mask());
    }

    #[test]
    fn ols_residuals_are_orthogonal((x, y) in regression(60, 6), icpt in any::<bool>()) {
        let x = if icpt { with_intercept(&x) } else { x };
        prop_assume!(x.ncols() < x.nrows());
        let fit = ols(&x, &y).unwrap();
        prop_assert!((x.transpose() * &fit.residuals).amax() < 1e-8 * y.norm());
        prop_assert!(fit.adj_r2 <= fit.r2 + 1e-15);
        prop_assert!(fit.p_values.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn projection_is_orthogonal((x, y) in regression(50, 2)) {
        let d = x.column(0).into_owned();
        let r = project_out(&y, &d).unwrap();
        prop_assert!(r.dot(&d).abs() < 1e-10 * y.norm() * d.norm());
    }

    #[test]
    fn path_is_decreasing_and_starts_empty((x, y) in regression(60, 12)) {
        let path = lasso_path(&x, &y, 30, 1e-3).unwrap();
        prop_assert!(path.lambdas.windows(2).all(|w| w[0] > w[1]));
        prop_assert_eq!(path.support_sizes[0], 0);
        prop_assert!((path.lambdas[0] - lambda_max(&x, &y)).abs() <= 1e-12 * path.lambdas[0]);
        for (l, b) in path.lambdas.iter().zip(&path.coefs) {
            prop_assert!(common::kkt_violation(&x, &y, b, *l) < 1e-6);
        }
    }

    #[test]
    fn capped_rule_respects_cap((x, y) in regression(80, 30), cap in 1usize..6, seed in any::<u64>()) {
        prop_assume!(x.nrows() >= 20);
        let sel = capped_lasso(&x, &y, 5, cap, seed).unwrap();
        prop_assert!(sel.support.len() <= cap);
        prop_assert!(sel.curve.lambda_1se >= sel.curve.lambda_min);
        let min_err = sel.curve.mean_error.iter().cloned().fold(f64::INFINITY, f64::min);
        let at_min = sel.curve.lambdas.iter().position(|l| *l == sel.curve.lambda_min).unwrap();
        prop_assert_eq!(sel.curve.mean_error[at_min], min_err);
    }

    #[test]
    fn clustering_invariants(n in 2usize..30, seed in any::<u64>(), coarse in any::<bool>()) {
        let mut r = common::rng(seed);
        let d = common::random_distance(&mut r, n, coarse);
        let dend = minimax_cluster(&DistanceMatrix::new(d).unwrap());
        prop_assert_eq!(dend.merges.len(), n - 1);
        prop_assert!(dend.merges.windows(2).all(|w| w[0].height <= w[1].height));
        for (i, m) in dend.merges.iter().enumerate() {
            prop_assert!(dend.members(n + i).contains(&m.prototype));
        }
        for h in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let mut all: Vec<usize> = dend.cut_by_threshold(h).into_iter().flat_map(|c| c.members).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }

    #[test]
    fn clustering_is_permutation_equivariant(n in 2usize..15, seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let d = common::random_distance(&mut r, n, false);
        let perm: Vec<usize> = (0..n).rev().collect();
        let dp = DMatrix::from_fn(n, n, |i, j| d[(perm[i], perm[j])]);
        let a = minimax_cluster(&DistanceMatrix::new(d.clone()).unwrap());
        let b = minimax_cluster(&DistanceMatrix::new(dp).unwrap());
        // the trees agree until the first tied height, where index tie-breaks may diverge
        let merged = |dend: &gibs::cluster::Dendrogram, m: &gibs::cluster::Merge, map: &dyn Fn(usize) -> usize| {
            let mut s: Vec<usize> = dend.members(m.a).into_iter().chain(dend.members(m.b)).map(map).collect();
            s.sort_unstable();
            s
        };
        for (ma, mb) in a.merges.iter().zip(&b.merges) {
            prop_assert_eq!(ma.height, mb.height);
            let set = merged(&a, ma, &|k| k);
            if set != merged(&b, mb, &|k| perm[k]) {
                break;
            }
            // prototypes may differ under ties but must cover at the same height
            let cover = set.iter().map(|&k| d[(perm[mb.prototype], k)]).fold(0.0, f64::max);
            prop_assert_eq!(cover, ma.height);
        }
    }

    #[test]
    fn q_value_invariants(p in prop::collection::vec(0.0f64..=1.0, 1..60)) {
        let bh = adjust(&p, FdrMethod::Bh).unwrap().q_values;
        let bhy = adjust(&p, FdrMethod::Bhy).unwrap().q_values;
        for i in 0..p.len() {
            prop_assert!((0.0..=1.0).contains(&bh[i]));
            prop_assert!(bh[i] >= p[i] && bhy[i] >= bh[i], "i {} p {} bh {} bhy {}", i, p[i], bh[i], bhy[i]);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(bh[i] <= bh[j]);
                }
            }
        }
        let rejected = adjust(&p, FdrMethod::Bh).unwrap().rejected(0.05);
        prop_assert_eq!(rejected, common::step_up_reject(&p, 0.05, false));
    }

    #[test]
    fn report_orders_q_above_p(p in prop::collection::vec(prop::option::of(0.0f64..=1.0), 0..30)) {
        let rows = p.iter().enumerate().map(|(i, v)| (format!("E{i:03}"), *v)).collect();
        let rep = TestReport::new("x", rows).unwrap();
        for k in 0..rep.len() {
            if let (Some(p), Some(b), Some(y)) = (rep.p_values[k], rep.q_bh[k], rep.q_bhy[k]) {
                prop_assert!(y >= b && b >= p);
            } else {
                prop_assert!(rep.q_bh[k].is_none());
            }
        }
        let f = rep.reject_frac_at(0.05, FdrMethod::Bhy);
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn capital_compounds_exactly(r in prop::collection::vec(-0.5f64..0.5, 1..50)) {
        let c = cumulative_capital(&r).unwrap();
        prop_assert_eq!(c.values[0], 1.0);
        for t in 0..r.len() {
            prop_assert_eq!(c.values[t + 1], c.values[t] * (1.0 + r[t]));
        }
    }

    #[test]
    fn anomaly_test_is_antisymmetric(ab in prop::collection::vec((-0.05f64..0.05, -0.05f64..0.05), 3..40)) {
        let (a, b): (Vec<f64>, Vec<f64>) = ab.into_iter().unzip();
        let ab = anomaly_test(&a, &b).unwrap().p_value;
        let ba = anomaly_test(&b, &a).unwrap().p_value;
        prop_assert!((ab + ba - 1.0).abs() < 1e-10);
    }

    #[test]
    fn duplicated_halves_have_no_interaction(seed in any::<u64>(), m in 6usize..40, s in 1usize..3) {
        let mut r = common::rng(seed);
        let dv = common::gaussian_matrix(&mut r, m, s);
        let dy = common::gaussian_vector(&mut r, m);
        let dv2 = DMatrix::from_fn(2 * m, s, |t, j| dv[(t % m, j)]);
        let dy2 = DVector::from_fn(2 * m, |t, _| dy[t % m]);
        let f = time_invariance_linear(&dy2, &dv2, &half_indicator(2 * m)).unwrap();
        prop_assert!(f.f_stat.abs() < 1e-8);
    }

    #[test]
    fn stiff_spline_nests_constant_model(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let v = common::gaussian_matrix(&mut r, 80, 2);
        let y = &v * DVector::from_vec(vec![1.0, -0.5]) + common::gaussian_vector(&mut r, 80);
        let res = varying_coefficient_test(&y, &v, 6, 1e14).unwrap();
        prop_assert!((res.rss_alt - res.rss_null).abs() <= 1e-10 * res.rss_null);
    }

    #[test]
    fn backtest_legs_are_disjoint(seed in any::<u64>(), q in 0.1f64..1.0) {
        let mut r = common::rng(seed);
        let (t_len, n) = (12, 10);
        let ids: Vec<String> = (0..n).map(|j| format!("S{j}")).collect();
        let returns = ReturnsPanel::dense(labels(t_len), ids.clone(),
            DMatrix::from_fn(t_len, n, |_, _| 0.02 * common::normal(&mut r))).unwrap();
        let stream: Vec<WeeklyAlphas> = (2..t_len).map(|row| WeeklyAlphas {
            row,
            estimates: ids.iter().map(|s| AlphaEstimate {
                security: s.clone(),
                alpha: common::normal(&mut r),
                p_value: rand::Rng::gen::<f64>(&mut r) * 0.2,
            }).collect(),
        }).collect();
        for ranking in [LegRanking::WithinSignificant, LegRanking::Global] {
            let bt = alpha_backtest(&stream, &returns, q, 0.1, ranking).unwrap();
            for (l, s) in bt.long_members.iter().zip(&bt.short_members) {
                let l: BTreeSet<_> = l.iter().collect();
                prop_assert!(s.iter().all(|x| !l.contains(x)));
            }
            prop_assert_eq!(bt.weeks.len(), stream.len());
        }
    }

    #[test]
    fn skew_diagonals_have_fixed_span(first in 1990i32..2010, span in 0i32..12, min_len in 1usize..5) {
        let g = period_grid_run(first, first + span, min_len, |_, _| Ok(0.0));
        let y = (span + 1) as usize;
        let expected = if y >= min_len { (y - min_len + 1) * (y - min_len + 2) / 2 } else { 0 };
        prop_assert_eq!(g.populated(), expected);
        for k in 0..y {
            for ((s, e), _) in g.skew_diagonal(k) {
                prop_assert_eq!(e - s, (k + min_len - 1) as i32);
            }
        }
        prop_assert!(g.cells.keys().all(|(s, e)| (e - s + 1) as usize >= min_len));
    }

    #[test]
    fn vol_legs_are_disjoint_quartiles(seed in any::<u64>(), n in 8usize..30) {
        let mut r = common::rng(seed);
        let t_len = 70;
        let ids: Vec<String> = (0..n).map(|j| format!("S{j:02}")).collect();
        let scale: Vec<f64> = (0..n).map(|_| 0.01 + 0.04 * rand::Rng::gen::<f64>(&mut r)).collect();
        let panel = ReturnsPanel::dense(labels(t_len), ids,
            DMatrix::from_fn(t_len, n, |_, j| scale[j] * common::normal(&mut r))).unwrap();
        let rf = RiskFreeSeries::constant(labels(t_len), 0.0005).unwrap();
        let p = form_vol_portfolios(&panel, &rf, &VolConfig::default(), None).unwrap();
        for (lo, hi) in p.low.iter().zip(&p.high) {
            prop_assert_eq!(lo.len(), n / 4);
            prop_assert_eq!(hi.len(), n / 4);
            let lo: BTreeSet<_> = lo.iter().collect();
            prop_assert!(hi.iter().all(|x| !lo.contains(x)));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gibs_chain_and_reproducibility(seed in any::<u64>()) {
        let data = synthesize(&SyntheticSpec { n_obs: 150, n_securities: 4, n_basis: 20, seed, ..SyntheticSpec::default() }).unwrap();
        let design = BasisDesign::from_excess(&data.universe, &data.risk_free).unwrap();
        let y = excess_returns(&data.securities, &data.risk_free).unwrap();
        let cfg = GibsConfig { seed: 3, cv_folds: 5, ..GibsConfig::default() };
        let a = run_gibs(&y, &design, &cfg, None).unwrap();
        let b = run_gibs(&y, &design, &cfg, None).unwrap();
        for (ra, rb) in a.results.iter().zip(&b.results) {
            prop_assert_eq!(&ra.selected, &rb.selected);
            prop_assert_eq!(&ra.fit.coefficients, &rb.fit.coefficients);
            let support: BTreeSet<&String> = ra.selected.iter()
                .filter(|s| ra.coefficient(s).is_some_and(|c| c != 0.0)).collect();
            prop_assert!(ra.significant.iter().all(|s| support.contains(s)));
            prop_assert!(ra.selected.len() <= cfg.support_cap + 1);
        }
        let classes = y.assets().iter().map(|s| (s.clone(), if s.ends_with('0') { "a" } else { "b" }.to_string())).collect();
        let summary = summarize_selection(&a.results, &classes, data.universe.categories()).unwrap();
        for c in 0..summary.proportions.ncols() {
            let s: f64 = summary.proportions.column(c).sum();
            prop_assert!(s == 0.0 || (s - 1.0).abs() < 1e-12);
        }
    }
}
