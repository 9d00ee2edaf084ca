//! Acceptance suite. One line per criterion with its tolerance and runtime
//! budget. Criteria listed in `KNOWN_RED` are expected to fail; the process
//! exits non-zero when any other criterion fails or a known-red one passes.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::Matrix2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zhtorus::averaging::{averaged_expansion, poincare_expansion_oracle, recursion_g, Averager, OracleFit, QuadratureSpec};
use zhtorus::jets::Jet;
use zhtorus::lyapschmidt::{bifurcation_f, BranchChart, ZeroSearch};
use zhtorus::oracles::{
    case_a_constants, case_a_findings, case_a_printed_jordan_map, case_b_delta, case_b_lambdas,
    case_b_r_star, standard_analysis_template, FIG1_CAPTION_DELTA, FIG1_CAPTION_LAMBDA1,
    FIG1_CAPTION_LAMBDA2, FIG1_DELTA_EXACT, FIG2_CAPTION_L1,
};
use zhtorus::stability::{case_b_analysis, case_b_section_orbit, log_log_slope, NewtonSpec, RosslerSectionMap, Section};
use zhtorus::systems::{CaseAFamily, CaseBFamily, RosslerEmbedding, ScalarLinear, TaylorBudget};
use zhtorus::torus::{
    case_a_hopf, find_crossing, jordan_normalize, lyapunov_l1, torus_regime_scan, ClosureFamily, CrossingSpec,
    CurveSpec, PlanarFamily, ScanSpec,
};
use zhtorus::Result;

/// Criteria whose failure is documented and expected.
const KNOWN_RED: [u32; 4] = [6, 7, 8, 9];

const FIG2_EPS: f64 = 0.0012;
const FIG1_EPS: f64 = 1.0 / 50.0;

fn fig1_section() -> Section {
    Section { axis: 0, value: 0.0, direction: -1, half_space: Some((1, 0.0, 1)) }
}

fn fig2_section() -> Section {
    Section { axis: 2, value: 0.0, direction: 1, half_space: Some((0, 0.0, 1)) }
}

fn fig2_base() -> CaseAFamily {
    CaseAFamily::new(-1.0, 41.0, -38.0, 4.299).expect("Fig-2 parameters")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict { pass, detail: detail.into() })
}

fn c1() -> Result<Verdict> {
    let s = ScalarLinear::default();
    let q = QuadratureSpec::default();
    let z = 1.7;
    let rec = recursion_g(&s, &[z], 5, &q)?;
    let ex = averaged_expansion(&s, &[z], TaylorBudget::default(), &q)?;
    let mut worst = 0.0f64;
    let mut fact = 1.0;
    for i in 1..=5u32 {
        fact *= f64::from(i);
        let want = (2.0 * PI).powi(i as i32) * z / fact;
        worst = worst.max(rel(rec[i as usize - 1][0], want));
        worst = worst.max(rel(ex.value(i)?[0], want));
    }
    verdict(worst <= 1e-10, format!("max rel err {worst:.2e} over recursion and jet flow (tol 1e-10)"))
}

fn rel_vec(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
}

fn random_case_b(rng: &mut ChaCha8Rng) -> CaseBFamily {
    let omega = loop {
        let w: f64 = rng.gen_range(0.6..2.2);
        if (w - 1.0).abs() > 0.1 && (w - 2f64.sqrt()).abs() > 0.1 {
            break w;
        }
    };
    let mut c = [[0.0; 5]; 3];
    for row in c.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
    CaseBFamily::new(omega, c[0], c[1], c[2]).expect("omega away from resonances")
}

fn c2() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = QuadratureSpec::default();
    let fit = OracleFit::default();
    // Case A series converge on a narrower epsilon interval.
    let fit_a = OracleFit { half_width: 0.005, ..fit };
    let tol = |i: usize| if i < 3 { 1e-6 } else { 1e-4 };
    let mut worst_a = 0.0f64;
    let mut worst_b = [0.0f64; 5];
    let mut pass = true;
    for _ in 0..20 {
        let abar = rng.gen_range(0.5..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let f = CaseAFamily::new(abar, rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0))?;
        let z = [rng.gen_range(0.5..2.0), rng.gen_range(-1.0..1.0)];
        let sys = f.standard_form()?;
        let e = rel_vec(&recursion_g(&sys, &z, 1, &q)?[0], &poincare_expansion_oracle(&sys, &z, 1, &fit_a)?[0]);
        worst_a = worst_a.max(e);
        pass &= e <= tol(0);
    }
    for _ in 0..20 {
        let f = random_case_b(&mut rng);
        let z = [rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0)];
        let sys = f.standard_form()?;
        let rec = recursion_g(&sys, &z, 5, &q)?;
        let orc = poincare_expansion_oracle(&sys, &z, 5, &fit)?;
        for i in 0..5 {
            let e = rel_vec(&rec[i], &orc[i]);
            worst_b[i] = worst_b[i].max(e);
            pass &= e <= tol(i);
        }
    }
    let b: Vec<String> = worst_b.iter().map(|e| format!("{e:.1e}")).collect();
    verdict(
        pass,
        format!("Case A g1 worst {worst_a:.1e}; Case B g1..g5 worst [{}] (tol 1e-6 for i<=3, 1e-4 for i=4,5)", b.join(", ")),
    )
}

fn c3() -> Result<Verdict> {
    let f = CaseBFamily::figure_one();
    let delta = case_b_delta(&f)?;
    let exact_ulps = (delta - FIG1_DELTA_EXACT).abs() / (FIG1_DELTA_EXACT * f64::EPSILON);
    let d_rel = rel(delta, FIG1_CAPTION_DELTA);
    let (l1, l2) = case_b_lambdas(&f)?;
    let exact = l1 == -527.0 / 1024.0 && l2 == -497.0 / 1024.0;
    let g1 = (l1 - FIG1_CAPTION_LAMBDA1).abs();
    let g2 = (l2 - FIG1_CAPTION_LAMBDA2).abs();
    verdict(
        exact_ulps <= 4.0 && d_rel <= 1e-4 && exact && g1 <= 1e-4 && g2 <= 1e-4,
        format!(
            "delta {delta:.12} vs exact {exact_ulps:.1} ulp, vs caption rel {d_rel:.1e} (tol 1e-4); \
             lambda exact {exact}; caption gaps {g1:.1e}, {g2:.1e} (tol 1e-4)"
        ),
    )
}

fn c4() -> Result<Verdict> {
    let f = CaseBFamily::figure_one();
    let sys = f.standard_form()?;
    let q = QuadratureSpec::default();
    let chart = BranchChart::radial_axis(0.5, 100.0);
    let mut f1_sup = 0.0f64;
    for k in 1..=100 {
        f1_sup = f1_sup.max(bifurcation_f(&sys, &chart, &[f64::from(k)], 1, &q)?[0].abs());
    }
    let grid: Vec<f64> = (0..=200).map(|k| 0.5 + 99.5 * f64::from(k) / 200.0).collect();
    let mut vals = Vec::with_capacity(grid.len());
    for &r in &grid {
        vals.push(bifurcation_f(&sys, &chart, &[r], 2, &q)?[0]);
    }
    let sign_changes = vals.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    let an = case_b_analysis(&f, &chart, &ZeroSearch::default(), &q)?;
    let u = an.bifurcation.u_star[0];
    let want = 4.0 * f.omega * (case_b_delta(&f)? / 3.0).sqrt();
    let printed = case_b_r_star(&f)?.value();
    let gap = (u - want).abs();
    verdict(
        f1_sup <= 1e-9 && sign_changes == 1 && gap <= 1e-6 && an.bifurcation.det_df.abs() > 0.0 && printed.is_some(),
        format!(
            "sup|f1| {f1_sup:.1e} (tol 1e-9); f2 sign changes on (0.5, 100] {sign_changes}; \
             zero {u:.12} vs 4 omega sqrt(delta/3) {want:.12}, gap {gap:.1e} (tol 1e-6); Df2 {:.4e}",
            an.bifurcation.det_df
        ),
    )
}

fn fig1_seeds() -> [[f64; 2]; 4] {
    [
        [425.0 / 1000.0, 39725.0 / 100000.0],
        [428.0 / 1000.0, 393.0 / 1000.0],
        [4471.0 / 10530.0, 751.0 / 1902.0],
        [4907.0 / 11449.0, 751.0 / 1902.0],
    ]
}

fn c5() -> Result<Verdict> {
    let f = CaseBFamily::figure_one();
    let q = QuadratureSpec::default();
    let chart = BranchChart::radial_axis(0.5, 100.0);
    let an = case_b_analysis(&f, &chart, &ZeroSearch::default(), &q)?;
    let newton = NewtonSpec { tol: 1e-12, max_iter: 40 };
    let (map, orbit) = case_b_section_orbit(&f, &an.z_series, FIG1_EPS, fig1_section(), &newton)?;
    let inside = orbit.multipliers.iter().all(|m| m.norm() < 1.0);
    let fp = [orbit.point[0], orbit.point[1]];
    let dist = |p: [f64; 2]| (p[0] - fp[0]).hypot(p[1] - fp[1]);
    let mut decreasing = true;
    let mut seeds = Vec::new();
    for s in fig1_seeds() {
        let d0 = dist(s);
        let mut p = s;
        let mut monotone = true;
        let mut prev = d0;
        for _ in 0..50 {
            p = map.apply(&p)?;
            let d = dist(p);
            monotone &= d < prev;
            prev = d;
        }
        decreasing &= prev < d0;
        seeds.push(format!("{d0:.2e}->{prev:.2e}{}", if monotone { "" } else { " (non-monotone)" }));
    }
    let mods: Vec<String> = orbit.multipliers.iter().map(|m| format!("{:.6}", m.norm())).collect();
    verdict(
        orbit.residual <= 1e-10 && inside && decreasing,
        format!(
            "fixed point ({:.6}, {:.6}) residual {:.1e} (tol 1e-10); |multipliers| [{}]; seed distances over 50 crossings {}",
            fp[0],
            fp[1],
            orbit.residual,
            mods.join(", "),
            seeds.join(", ")
        ),
    )
}

fn c6() -> Result<Verdict> {
    let f = CaseBFamily::figure_one();
    let q = QuadratureSpec::default();
    let chart = BranchChart::radial_axis(0.5, 100.0);
    let an = case_b_analysis(&f, &chart, &ZeroSearch::default(), &q)?;
    let newton = NewtonSpec { tol: 1e-12, max_iter: 40 };
    let mut big = Vec::new();
    let mut small = Vec::new();
    for eps in [1.0 / 50.0, 1.0 / 100.0, 1.0 / 200.0, 1.0 / 400.0] {
        let (_, orbit) = case_b_section_orbit(&f, &an.z_series, eps, fig1_section(), &newton)?;
        // sorted by decreasing distance from 1
        big.push((eps, (orbit.multipliers[0] - 1.0).norm()));
        small.push((eps, (orbit.multipliers[1] - 1.0).norm()));
    }
    let s1 = log_log_slope(&big);
    let s2 = log_log_slope(&small);
    verdict(
        (s1 - 1.0).abs() <= 0.05 && (s2 - 3.0).abs() <= 0.1,
        format!("slope lambda1 {s1:.4} (1 +- 0.05); slope lambda2 {s2:.4} (3 +- 0.1)"),
    )
}

fn fig2_hopf(quad: &QuadratureSpec) -> Result<zhtorus::torus::HopfAnalysis> {
    let base = fig2_base();
    let m = case_a_printed_jordan_map(base.abar, base.beta)?;
    case_a_hopf(
        &base,
        1.0,
        Some(Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])),
        quad,
        &CrossingSpec::default(),
    )
}

fn c7() -> Result<Verdict> {
    let base = fig2_base();
    let c = case_a_constants(base.abar, base.alpha, base.beta, base.gamma)?;
    let h = fig2_hopf(&QuadratureSpec::default())?;
    let cr = &h.crossing;
    let exact = base.gamma_bar() == 3.0;
    let mu_gap = (cr.mu0 - 3.0).abs();
    let om_gap = (cr.omega0 - 38.0).abs();
    let closed = c.d_re_lambda;
    let d_gap = (cr.d - closed).abs();
    verdict(
        exact && mu_gap <= 1e-8 && om_gap <= 1e-8 && closed == 0.5 && d_gap <= 1e-6,
        format!(
            "gamma_bar exact {exact}, engine {:.12} (tol 1e-8); omega0 {:.12} (tol 1e-8); \
             dRe lambda/dgamma finite difference {:.9} vs closed form {closed} (tol 1e-6)",
            cr.mu0, cr.omega0, cr.d
        ),
    )
}

fn c8() -> Result<Verdict> {
    let fam = ClosureFamily(|mu: f64, v: &[Jet; 2]| -> Result<[Jet; 2]> {
        let (x, y) = (&v[0], &v[1]);
        let r2 = x.try_mul(x)?.try_add(&y.try_mul(y)?)?;
        Ok([
            x.scale(mu).try_sub(y)?.try_sub(&x.try_mul(&r2)?)?,
            x.try_add(&y.scale(mu))?.try_sub(&y.try_mul(&r2)?)?,
        ])
    });
    let cr = find_crossing(&fam, (-0.5, 0.7), [0.0, 0.0], &CrossingSpec::default())?;
    let n = jordan_normalize(&fam.field_jets(cr.x0, cr.mu0, 3)?, None)?;
    let nf = lyapunov_l1(&n.field, n.omega0)?;
    let base = fig2_base();
    let c = case_a_constants(base.abar, base.alpha, base.beta, base.gamma)?;
    let h = fig2_hopf(&QuadratureSpec::default())?;
    verdict(
        (nf + 2.0).abs() <= 1e-9 && h.l1 > 0.0 && h.l1.signum() == c.ell.signum(),
        format!(
            "normal form l1 {nf:.12} (-2 +- 1e-9); Case A engine l1 {:.3e} (complex route {:.3e}); \
             closed-form ell {:.0}, l1 {:.6e}, caption {:.6e}",
            h.l1, h.l1_complex, c.ell, c.l1, FIG2_CAPTION_L1
        ),
    )
}

/// `|ℓ₁|` below this has no reliable sign.
const L1_SIGN_FLOOR: f64 = 1e-8;

fn c9() -> Result<Verdict> {
    let base = fig2_base();
    let sec = fig2_section();
    let fam = move |g: f64| -> Result<RosslerSectionMap> {
        Ok(RosslerSectionMap::new(base.with_gamma(g).standard_form()?.rossler_params(FIG2_EPS), sec))
    };
    let spec = ScanSpec {
        grid: (0..13).map(|k| 1.5 + 0.25 * f64::from(k)).collect(),
        seed_offsets: vec![[-0.0009, -0.0033], [-0.0028, 0.0052]],
        curve: CurveSpec { transient: 200_000, escape_ratio: 1e3, ..Default::default() },
        boundary_resolution: 1e-3,
        newton: NewtonSpec::default(),
    };
    let t = torus_regime_scan(fam, [0.0469, -0.0052], &spec)?;
    let h = fig2_hopf(&QuadratureSpec::default())?;
    let found: Vec<String> = t
        .rows
        .iter()
        .filter(|r| r.curve_found())
        .map(|r| format!("{:.2}", r.mu))
        .collect();
    let enough = t
        .rows
        .iter()
        .flat_map(|r| &r.outcomes)
        .filter(|o| o.confirmed)
        .all(|o| o.iterations >= 200 && o.closure_defect <= 1e-3 * o.diameter);
    let boundary_ok = t.boundary.is_some_and(|b| (b - 3.0).abs() <= 0.5);
    let signed = h.l1.abs() > L1_SIGN_FLOOR;
    let consistent = signed && t.consistent_with(h.l1);
    verdict(
        !found.is_empty() && enough && t.one_sided && boundary_ok && consistent,
        format!(
            "curves at gamma [{}], one-sided {}, attracting {:?}; boundary {:?} (3 +- 0.5); \
             l1 {:.2e} (sign floor {L1_SIGN_FLOOR:.0e}), consistent {consistent}",
            found.join(", "),
            t.one_sided,
            t.curve_attracting,
            t.boundary.map(|b| format!("{b:.4}")),
            h.l1
        ),
    )
}

fn c10() -> Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let q = QuadratureSpec::default();
    let mut worst = 0.0f64;
    let mut zero_ok = true;
    for l in 1..=4u32 {
        for k in 0..20 {
            let mut f = random_case_b(&mut rng);
            for i in 0..l as usize {
                f.alpha[i] = 0.0;
                f.gamma[i] = 0.0;
            }
            if k == 0 {
                f.alpha[l as usize] = 0.0;
                f.gamma[l as usize] = 0.0;
            }
            let t = standard_analysis_template(&f, l)?;
            let (r, z) = (rng.gen_range(0.5..3.0), rng.gen_range(-1.0..1.0));
            let sys = f.standard_form()?;
            let e = Averager { sys: &sys, quad: q }.g(&[r, z], l + 1)?;
            let want = t.eval(r, z);
            for c in 0..2 {
                worst = worst.max((e[c] - want[c]).abs() / want[c].abs().max(1.0));
            }
            if t.is_identically_zero() {
                zero_ok &= e.iter().all(|v| v.abs() <= 1e-8);
            } else if t.radial_factor() != 0.0 {
                zero_ok &= !t.has_zero_with_positive_radius() && e[0] != 0.0;
            }
        }
    }
    verdict(
        worst <= 1e-8 && zero_ok,
        format!("max gap to template {worst:.1e} (tol 1e-8); zero-set checks {zero_ok}"),
    )
}

fn c11() -> Result<Verdict> {
    let base = fig2_base();
    let q = QuadratureSpec::default();
    let h = fig2_hopf(&q)?;
    let rep = case_a_findings(&base, &h, Some(FIG2_CAPTION_L1), &q)?;
    let mut lines = Vec::new();
    let mut ok = true;
    for key in ["case_a.r_bar", "case_a.z_bar", "case_a.l1.closed_form", "case_a.ell", "case_a.l1.caption"] {
        match rep.records.iter().find(|r| r.quantity == key) {
            Some(r) => {
                let complete = r.engine.is_finite()
                    && match r.printed {
                        Some(p) => p.is_finite() && r.abs_gap.is_some(),
                        None => r.note.is_some(),
                    };
                ok &= complete;
                lines.push(format!(
                    "{key}: printed {} engine {:.6e} gap {} [{:?}]",
                    r.printed.map_or("invalid-domain".into(), |p| format!("{p:.6e}")),
                    r.engine,
                    r.abs_gap.map_or("n/a".into(), |g| format!("{g:.3e}")),
                    r.verdict
                ));
            }
            None => {
                ok = false;
                lines.push(format!("{key}: missing"));
            }
        }
    }
    verdict(ok, lines.join("; "))
}

type Criterion = (u32, &'static str, Duration, fn() -> Result<Verdict>);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (1, "scalar-linear exactness", Duration::from_secs(1), c1),
        (2, "oracle equivalence", Duration::from_secs(120), c2),
        (3, "Fig-1 constants", Duration::from_secs(1), c3),
        (4, "Case B bifurcation", Duration::from_secs(60), c4),
        (5, "Fig-1 periodic orbit", Duration::from_secs(120), c5),
        (6, "multiplier scaling ladder", Duration::from_secs(300), c6),
        (7, "Case A crossing", Duration::from_secs(10), c7),
        (8, "l1 sign and calibration", Duration::from_secs(10), c8),
        (9, "torus detection", Duration::from_secs(900), c9),
        (10, "standard-analysis template", Duration::from_secs(120), c10),
        (11, "discrepancy findings", Duration::from_secs(5), c11),
    ];
    let filter: Option<u32> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut unexpected = Vec::new();
    for (id, title, limit, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let t0 = Instant::now();
        let out = run();
        let dt = t0.elapsed();
        let (pass, detail) = match out {
            Ok(v) => (v.pass && dt <= limit, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_RED.contains(&id);
        println!(
            "[{}] C{id} {title}: {detail} [{:.2} s, limit {} s]{}",
            if pass { "PASS" } else { "FAIL" },
            dt.as_secs_f64(),
            limit.as_secs(),
            if known && !pass { " (known red)" } else { "" }
        );
        if pass == known {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all outcomes as expected; known red {KNOWN_RED:?}");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
