mod common;

use hbac_core::stats::{chi2_2x2, chi2_sf, student_t_cdf, welch_t_test};

#[test]
fn welch_matches_oracle() {
    for (i, c) in common::oracle().welch.iter().enumerate() {
        let r = welch_t_test(&c.a, &c.b).unwrap();
        assert!(common::close(r.statistic, c.t, 1e-10), "case {i}: t {} vs {}", r.statistic, c.t);
        assert!(common::close(r.df, c.df, 1e-10), "case {i}: df {} vs {}", r.df, c.df);
        assert!(common::close_rel(r.p, c.p, 1e-8), "case {i}: p {} vs {}", r.p, c.p);
    }
}

#[test]
fn chi2_matches_oracle() {
    for (i, c) in common::oracle().chi2.iter().enumerate() {
        let r = chi2_2x2(c.table).unwrap();
        assert!(common::close(r.statistic, c.stat, 1e-10), "case {i}: stat {} vs {}", r.statistic, c.stat);
        assert!(common::close_rel(r.p, c.p, 1e-8), "case {i}: p {} vs {}", r.p, c.p);
    }
}

#[test]
fn distribution_functions_match_oracle() {
    let o = common::oracle();
    for c in &o.t_cdf {
        let got = student_t_cdf(c.x, c.df).unwrap();
        assert!(common::close_rel(got, c.cdf, 1e-9), "t cdf({}, {}) = {got} vs {}", c.x, c.df, c.cdf);
    }
    for c in &o.chi2_sf {
        let got = chi2_sf(c.x, c.df).unwrap();
        assert!(common::close_rel(got, c.sf, 1e-9), "chi2 sf({}, {}) = {got} vs {}", c.x, c.df, c.sf);
    }
}

#[test]
fn worked_examples() {
    let r = welch_t_test(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    assert_eq!(r.statistic, -1.0);
    assert!((r.p - 0.3466).abs() < 5e-5);
    let r = chi2_2x2([[30, 10], [10, 30]]).unwrap();
    assert!((r.statistic - 20.0).abs() < 1e-12);
    assert!((r.p - 7.74e-6).abs() < 5e-9);
}
