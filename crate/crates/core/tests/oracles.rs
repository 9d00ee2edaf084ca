//! Engine against printed closed forms at random parameter points.
//! Mismatches of the printed forms are findings; the assertions fix which
//! displays agree with the engine and which do not.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zhtorus::averaging::{Averager, QuadratureSpec};
use zhtorus::oracles::{
    case_a_g1_closed, case_a_g1_zero, case_b_display_records, case_b_f2, case_b_findings, DiscrepancyRecord,
    FindingsReport, Verdict, FIG1_DELTA_EXACT,
};
use zhtorus::lyapschmidt::{BranchChart, ZeroSearch};
use zhtorus::stability::case_b_analysis;
use zhtorus::systems::{CaseAFamily, CaseBFamily};

/// Random Case B family satisfying the branch constraints on `α₁`, `α₂`.
fn constrained(rng: &mut ChaCha8Rng) -> CaseBFamily {
    let w = loop {
        let w: f64 = rng.gen_range(0.6..2.2);
        if (w - 1.0).abs() > 0.1 && (w - 2f64.sqrt()).abs() > 0.1 {
            break w;
        }
    };
    let mut c = [[0.0; 5]; 3];
    for v in c.iter_mut().flatten() {
        *v = rng.gen_range(-1.0..1.0);
    }
    let [mut a, b, g] = c;
    a[0] = g[0] * (w * w - 1.0);
    a[1] = b[0] * g[0] + g[1] * (w * w - 1.0);
    CaseBFamily::new(w, a, b, g).unwrap()
}

fn get<'a>(rs: &'a [DiscrepancyRecord], q: &str) -> Vec<&'a DiscrepancyRecord> {
    rs.iter().filter(|r| r.quantity.starts_with(q)).collect()
}

#[test]
fn case_b_displays_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let q = QuadratureSpec::default();
    let mut report = FindingsReport::default();
    let mut g2_printed_mismatches = 0;
    for _ in 0..20 {
        let f = constrained(&mut rng);
        let (r, z) = (rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0));
        let rs = case_b_display_records(&f, r, z, &q).unwrap();
        for key in [
            "case_b.g1.",
            "case_b.g2.z_component",
            "case_b.g2_regrouped.",
            "case_b.g3.",
            "case_b.bif_corrected.",
            "case_b.bif_as_printed.f1",
            "case_b.bif_as_printed.f2",
            "case_b.bif_as_printed.f3",
            "case_b.bif_as_printed.gamma1",
            "case_b.bif_as_printed.gamma2",
        ] {
            for rec in get(&rs, key) {
                assert!(rec.is_match(), "{rec:?}");
            }
        }
        g2_printed_mismatches += get(&rs, "case_b.g2.r_component").iter().filter(|r| !r.is_match()).count();
        // the printed f₂ closed form carries the opposite sign
        let f2 = get(&rs, "case_b.f2")[0];
        assert!(((f2.printed.unwrap() + f2.engine) / f2.engine.abs().max(1.0)).abs() < 1e-8, "{f2:?}");
        assert!(get(&rs, "case_b.f1")[0].is_match());
        report.extend(rs);
    }
    assert!(g2_printed_mismatches > 0);
    assert!(report.mismatches() > 0);
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"verdict\":\"mismatch\""));
}

#[test]
fn fig1_findings() {
    let f = CaseBFamily::figure_one();
    let q = QuadratureSpec::default();
    let an = case_b_analysis(&f, &BranchChart::radial_axis(0.5, 100.0), &ZeroSearch::default(), &q).unwrap();
    let rep = case_b_findings(&f, &an.bifurcation, &an.ladder, true).unwrap();
    let v = |k: &str| rep.records.iter().find(|r| r.quantity == k).unwrap().clone();
    for k in ["case_b.r_star", "case_b.delta", "case_b.lambda1", "case_b.lambda2", "case_b.Lambda0_22", "case_b.Lambda2_11"] {
        assert!(v(k).is_match(), "{:?}", v(k));
    }
    assert_eq!(v("case_b.Lambda1_22").verdict, Verdict::Mismatch);
    assert_eq!(v("case_b.f2_slope_at_r_star").verdict, Verdict::Mismatch);
    assert!((v("case_b.f2_slope_at_r_star").printed.unwrap() + an.bifurcation.det_df).abs() < 1e-6);
    assert_eq!(v("case_b.delta.exact_rational").abs_gap, Some(0.0));
    assert!(v("case_b.delta.caption").rel_gap.unwrap() < 1e-4);
    assert!(v("case_b.lambda1.caption").abs_gap.unwrap() < 1e-4);
    assert!((FIG1_DELTA_EXACT - an.bifurcation.u_star[0].powi(2) * 3.0 / (16.0 * f.omega.powi(2))).abs() < 1e-8);
    assert!(case_b_f2(&f, an.bifurcation.u_star[0]).unwrap().abs() < 1e-7);
}

#[test]
fn case_a_first_order_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = QuadratureSpec::default();
    for _ in 0..20 {
        let abar = rng.gen_range(0.3..1.3) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (al, be, ga) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        let fam = CaseAFamily::new(abar, al, be, ga).unwrap();
        let sys = fam.standard_form().unwrap();
        let z = [rng.gen_range(0.3..3.0), rng.gen_range(-2.0..2.0)];
        let e = Averager { sys: &sys, quad: q }.g(&z, 1).unwrap();
        let p = case_a_g1_closed(abar, al, be, ga, z[0], z[1]).unwrap();
        for c in 0..2 {
            assert!((e[c] - p[c]).abs() <= 1e-9 * (1.0 + p[c].abs()), "{e:?} {p:?}");
        }
        if let Some(x) = case_a_g1_zero(abar, al, be, ga).unwrap() {
            if sys_contains(x) {
                let g = Averager { sys: &sys, quad: q }.g(&x, 1).unwrap();
                assert!(g[0].abs().max(g[1].abs()) <= 1e-8 * (1.0 + x[0].abs()), "{x:?} {g:?}");
            }
        }
    }
}

fn sys_contains(x: [f64; 2]) -> bool {
    x[0] > 1e-3 && x[0] < 100.0 && x[1].abs() < 100.0
}
