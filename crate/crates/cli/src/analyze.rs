use std::f64::consts::PI;

use anyhow::{bail, Result};
use nalgebra::Matrix2;
use serde_json::{json, Value};

use zhtorus::averaging::{averaged_expansion, poincare_expansion_oracle, recursion_g, OracleFit, QuadratureSpec};
use zhtorus::lyapschmidt::{BranchChart, ZeroSearch};
use zhtorus::oracles::{
    case_a_findings, case_a_g1_zero, case_a_printed_jordan_map, case_b_display_records, case_b_findings,
    FIG2_CAPTION_L1,
};
use zhtorus::stability::{
    case_b_analysis, case_b_section_orbit, classify_routh_hurwitz, log_log_slope, mean_field_coefficients,
    CaseBAnalysis, NewtonSpec, PeriodicOrbit, RosslerSectionMap, Section,
};
use zhtorus::systems::{
    rossler_rhs, CaseAFamily, CaseBFamily, RosslerEmbedding, ScalarLinear, StandardFormSystem, TaylorBudget,
};
use zhtorus::torus::{
    case_a_hopf, detect_invariant_curve, equilibrium, torus_regime_scan, CrossingSpec, CurveSpec, HopfAnalysis,
    MeanFieldFamily, ScanSpec, TimeDirection,
};

use crate::config::{Analysis, Parameters, RunConfig};
use crate::output::{measured, Cell, Outputs};

/// `|ℓ₁|` below this carries no sign.
const L1_SIGN_FLOOR: f64 = 1e-8;

fn fig1_section() -> Section {
    Section { axis: 0, value: 0.0, direction: -1, half_space: Some((1, 0.0, 1)) }
}

fn fig2_section() -> Section {
    Section { axis: 2, value: 0.0, direction: 1, half_space: Some((0, 0.0, 1)) }
}

pub fn case_b_family(p: &Parameters) -> Result<CaseBFamily> {
    let Parameters::B { omega, alpha, beta, gamma } = p else { bail!("not a Case B configuration") };
    let w2 = omega * omega;
    let a1 = alpha[0].unwrap_or(gamma[0] * (w2 - 1.0));
    let a2 = alpha[1].unwrap_or(beta[0] * gamma[0] + gamma[1] * (w2 - 1.0));
    let a = [a1, a2, alpha[2].unwrap_or(0.0), alpha[3].unwrap_or(0.0), alpha[4].unwrap_or(0.0)];
    Ok(CaseBFamily::new(*omega, a, *beta, *gamma)?)
}

fn case_a_family(p: &Parameters) -> Result<CaseAFamily> {
    let Parameters::A { abar, alpha, beta, gamma } = p else { bail!("not a Case A configuration") };
    Ok(CaseAFamily::new(*abar, *alpha, *beta, *gamma)?)
}

/// Outcome of one `analyze` run.
pub struct Run<'a> {
    cfg: &'a RunConfig,
    out: &'a mut Outputs,
    quad: QuadratureSpec,
    newton: NewtonSpec,
    /// Invariant checks that failed.
    pub failures: Vec<String>,
    case_b: Option<CaseBAnalysis>,
    hopf: Option<HopfAnalysis>,
}

impl<'a> Run<'a> {
    pub fn new(cfg: &'a RunConfig, out: &'a mut Outputs) -> Self {
        Self {
            cfg,
            out,
            quad: QuadratureSpec::default(),
            newton: NewtonSpec { tol: cfg.tolerances.newton, max_iter: 40 },
            failures: Vec::new(),
            case_b: None,
            hopf: None,
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.failures.push(what);
        }
    }

    pub fn execute(&mut self) -> Result<()> {
        for a in self.cfg.analyses.clone() {
            eprintln!("running {}", a.name());
            match a {
                Analysis::Averaging => self.averaging()?,
                Analysis::Bifurcation => self.bifurcation()?,
                Analysis::Stability => self.stability()?,
                Analysis::Orbit => self.orbit()?,
                Analysis::Torus => self.torus()?,
                Analysis::Findings => self.findings()?,
            }
        }
        Ok(())
    }

    fn averaging(&mut self) -> Result<()> {
        let v = match &self.cfg.parameters {
            Parameters::ScalarLinear => self.averaging_of(&ScalarLinear::default(), true)?,
            Parameters::A { .. } => self.averaging_of(&case_a_family(&self.cfg.parameters)?.standard_form()?, false)?,
            Parameters::B { .. } => self.averaging_of(&case_b_family(&self.cfg.parameters)?.standard_form()?, false)?,
        };
        self.out.json("averaging.json", &v)
    }

    fn averaging_of<S: StandardFormSystem>(&mut self, sys: &S, exact: bool) -> Result<Value> {
        let a = &self.cfg.averaging;
        let t = &self.cfg.tolerances;
        let rec = recursion_g(sys, &a.point, a.order, &self.quad)?;
        let ex = averaged_expansion(sys, &a.point, TaylorBudget::new(a.order, 0, a.order), &self.quad)?;
        let fit = OracleFit { half_width: a.oracle_half_width, ..OracleFit::default() };
        let orc = poincare_expansion_oracle(sys, &a.point, a.order, &fit)?;
        let mut orders = Vec::new();
        let mut rows = Vec::new();
        for i in 1..=a.order {
            let k = i as usize - 1;
            let jet = ex.value(i)?;
            let tol = if i <= 3 { t.oracle_low } else { t.oracle_high };
            let gap_orc = rel_gap(&rec[k], &orc[k]);
            let gap_jet = rel_gap(&rec[k], &jet);
            self.check(gap_orc <= tol, format!("averaging: g{i} recursion vs oracle {gap_orc:e} > {tol:e}"));
            self.check(gap_jet <= t.oracle_low, format!("averaging: g{i} recursion vs jet flow {gap_jet:e}"));
            let mut entry = json!({
                "order": i,
                "recursion": rec[k],
                "jet_flow": jet,
                "oracle": orc[k],
                "gap_recursion_oracle": measured(gap_orc, tol),
                "gap_recursion_jet_flow": measured(gap_jet, t.oracle_low),
            });
            if exact {
                let fact: f64 = (1..=i).map(f64::from).product();
                let want: Vec<f64> = a.point.iter().map(|z| (2.0 * PI).powi(i as i32) * z / fact).collect();
                let g = rel_gap(&rec[k], &want);
                self.check(g <= t.zero, format!("averaging: g{i} vs exact {g:e} > {:e}", t.zero));
                entry["exact"] = json!(want);
                entry["gap_exact"] = measured(g, t.zero);
            }
            for (c, _) in rec[k].iter().enumerate() {
                rows.push(vec![
                    Cell::Int(i64::from(i)),
                    Cell::Int(c as i64),
                    Cell::Num(rec[k][c]),
                    Cell::Num(jet[c]),
                    Cell::Num(orc[k][c]),
                    Cell::Num(tol),
                ]);
            }
            orders.push(entry);
        }
        self.out.csv("averaging.csv", &["order", "component", "recursion", "jet_flow", "oracle", "tolerance"], &rows)?;
        Ok(json!({
            "point": a.point,
            "oracle_fit": { "half_width": fit.half_width, "nodes": fit.nodes, "degree": fit.degree },
            "orders": orders,
        }))
    }

    fn case_b(&mut self) -> Result<&CaseBAnalysis> {
        if self.case_b.is_none() {
            let fam = case_b_family(&self.cfg.parameters)?;
            let search = ZeroSearch {
                residual_tol: self.cfg.tolerances.zero,
                lower_order_tol: self.cfg.tolerances.chart,
                ..ZeroSearch::default()
            };
            self.case_b = Some(case_b_analysis(&fam, &BranchChart::radial_axis(0.5, 100.0), &search, &self.quad)?);
        }
        Ok(self.case_b.as_ref().expect("set above"))
    }

    fn bifurcation(&mut self) -> Result<()> {
        let t = self.cfg.tolerances.clone();
        let an = self.case_b()?.clone();
        let b = &an.bifurcation;
        self.check(b.lower_order_sup <= t.chart, format!("bifurcation: sup |f1| {:e} > {:e}", b.lower_order_sup, t.chart));
        let v = json!({
            "order": b.order,
            "u_star": measured(b.u_star[0], t.zero),
            "z0": b.z0,
            "f_values": b.f_values,
            "c_values": b.c_values,
            "df_at_zero": measured(b.det_df, t.zero),
            "residual": measured(b.residual, t.zero),
            "lower_order_sup": measured(b.lower_order_sup, t.chart),
            "z_series": { "z0": an.z_series.z0, "z1": an.z_series.z1, "z2": an.z_series.z2, "tolerance": t.zero },
        });
        self.out.json("bifurcation.json", &v)
    }

    fn stability(&mut self) -> Result<()> {
        match self.cfg.parameters {
            Parameters::B { .. } => self.stability_b(),
            Parameters::A { .. } => self.stability_a(),
            Parameters::ScalarLinear => bail!("stability is not available for scalar-linear"),
        }
    }

    fn stability_b(&mut self) -> Result<()> {
        let fam = case_b_family(&self.cfg.parameters)?;
        let an = self.case_b()?.clone();
        let tol = self.cfg.tolerances.newton;
        let mut rows = Vec::new();
        let mut scaling = Vec::new();
        let (mut big, mut small) = (Vec::new(), Vec::new());
        for &eps in &self.cfg.ladder {
            let (_, orbit) = case_b_section_orbit(&fam, &an.z_series, eps, fig1_section(), &self.newton)?;
            self.check(orbit.residual <= tol, format!("stability: Newton residual {:e} at eps {eps}", orbit.residual));
            for (k, m) in orbit.multipliers.iter().enumerate() {
                rows.push(vec![Cell::Num(eps), Cell::Int(k as i64), Cell::Num(m.re), Cell::Num(m.im), Cell::Num(m.norm()), Cell::Num(tol)]);
            }
            let d1 = (orbit.multipliers[0] - 1.0).norm();
            let d2 = (orbit.multipliers[1] - 1.0).norm();
            big.push((eps, d1));
            small.push((eps, d2));
            scaling.push(vec![Cell::Num(eps), Cell::Num(eps.ln()), Cell::Num(d1.ln()), Cell::Num(d2.ln()), Cell::Num(tol)]);
        }
        self.out.csv("multipliers.csv", &["epsilon", "index", "re", "im", "modulus", "tolerance"], &rows)?;
        self.out.csv("scaling.csv", &["epsilon", "ln_epsilon", "ln_dist1", "ln_dist2", "tolerance"], &scaling)?;
        let slopes = (big.len() >= 2).then(|| json!({
            "lambda1": log_log_slope(&big),
            "lambda2": log_log_slope(&small),
            "expected_rates": [an.ladder.entries[0].multiplier_rate, an.ladder.entries[1].multiplier_rate],
            "tolerance": tol,
        }));
        let v = json!({
            "case": "B",
            "ladder": an.ladder,
            "ladder_tolerance": self.cfg.tolerances.zero,
            "eigenvalue_series": an.eigenvalue_series,
            "a_matrices": an.a,
            "classification": an.classification,
            "slopes": slopes,
        });
        self.out.json("stability.json", &v)
    }

    fn stability_a(&mut self) -> Result<()> {
        let base = case_a_family(&self.cfg.parameters)?;
        let fam = MeanFieldFamily { build: move |g: f64| base.with_gamma(g).standard_form(), quad: self.quad };
        let seed = case_a_g1_zero(base.abar, base.alpha, base.beta, base.gamma)?
            .ok_or_else(|| anyhow::anyhow!("no zero of g1 at gamma = {}", base.gamma))?;
        let (x, j) = equilibrium(&fam, base.gamma, seed, &self.newton)?;
        let dg = nalgebra::DMatrix::from_row_slice(2, 2, &[j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)]]);
        // `j` is already per unit time
        let (d1, d0) = mean_field_coefficients(&dg, 1.0);
        let (_, orbit) = self.case_a_section_orbit(&base)?;
        let v = json!({
            "case": "A",
            "mean_field": {
                "equilibrium": x,
                "d1": d1,
                "d0": d0,
                "classification": classify_routh_hurwitz(d1, d0),
                "tolerance": self.cfg.tolerances.zero,
            },
            "section_fixed_point": orbit_json(&orbit, self.cfg.tolerances.newton),
        });
        self.out.json("stability.json", &v)
    }

    fn case_a_section_orbit(&mut self, base: &CaseAFamily) -> Result<(RosslerSectionMap, PeriodicOrbit)> {
        let map = RosslerSectionMap::new(base.standard_form()?.rossler_params(self.cfg.epsilon), fig2_section());
        let orbit = map.locate_fixed_point(&self.cfg.torus.guess, &self.newton)?;
        self.check(orbit.residual <= self.cfg.tolerances.newton, format!("orbit: Newton residual {:e}", orbit.residual));
        Ok((map, orbit))
    }

    fn orbit(&mut self) -> Result<()> {
        let (map, orbit) = match self.cfg.parameters {
            Parameters::B { .. } => {
                let fam = case_b_family(&self.cfg.parameters)?;
                let zs = self.case_b()?.z_series.clone();
                let r = case_b_section_orbit(&fam, &zs, self.cfg.epsilon, fig1_section(), &self.newton)?;
                self.check(r.1.residual <= self.cfg.tolerances.newton, format!("orbit: Newton residual {:e}", r.1.residual));
                r
            }
            Parameters::A { .. } => {
                let base = case_a_family(&self.cfg.parameters)?;
                self.case_a_section_orbit(&base)?
            }
            Parameters::ScalarLinear => bail!("orbit is not available for scalar-linear"),
        };
        let tol = self.cfg.tolerances.newton;
        let fp = [orbit.point[0], orbit.point[1]];
        let mut rows = Vec::new();
        let mut seeds = Vec::new();
        for (s, seed) in self.cfg.orbit.seeds.iter().enumerate() {
            let dist = |p: [f64; 2]| (p[0] - fp[0]).hypot(p[1] - fp[1]);
            let mut p = *seed;
            let d0 = dist(p);
            rows.push(vec![Cell::Int(s as i64), Cell::Int(0), Cell::Num(p[0]), Cell::Num(p[1]), Cell::Num(d0), Cell::Num(tol)]);
            for k in 1..=self.cfg.orbit.crossings {
                p = map.apply(&p)?;
                rows.push(vec![Cell::Int(s as i64), Cell::Int(k as i64), Cell::Num(p[0]), Cell::Num(p[1]), Cell::Num(dist(p)), Cell::Num(tol)]);
            }
            seeds.push(json!({ "seed": seed, "initial_distance": d0, "final_distance": dist(p), "decreased": dist(p) < d0 }));
        }
        self.out.csv("crossings.csv", &["seed", "crossing", "u", "v", "distance", "tolerance"], &rows)?;

        let n = self.cfg.orbit.trajectory_samples.max(1);
        let params = map.params;
        let mut y = map.section.embed(&orbit.point).to_vec();
        let dt = orbit.period / n as f64;
        let mut traj = vec![vec![Cell::Num(0.0), Cell::Num(y[0]), Cell::Num(y[1]), Cell::Num(y[2]), Cell::Num(map.integ.rtol)]];
        for k in 0..n {
            let rhs = |_t: f64, s: &[f64], d: &mut [f64]| -> zhtorus::Result<()> {
                d.copy_from_slice(&rossler_rhs(&params, &[s[0], s[1], s[2]]));
                Ok(())
            };
            y = map.integ.integrate(rhs, k as f64 * dt, &y, (k + 1) as f64 * dt)?;
            traj.push(vec![Cell::Num((k + 1) as f64 * dt), Cell::Num(y[0]), Cell::Num(y[1]), Cell::Num(y[2]), Cell::Num(map.integ.rtol)]);
        }
        self.out.csv("trajectory.csv", &["t", "x", "y", "z", "tolerance"], &traj)?;
        let v = json!({
            "epsilon": self.cfg.epsilon,
            "section": map.section,
            "fixed_point": orbit_json(&orbit, tol),
            "seeds": seeds,
            "crossings": self.cfg.orbit.crossings,
        });
        self.out.json("orbit.json", &v)
    }

    fn hopf(&mut self) -> Result<&HopfAnalysis> {
        if self.hopf.is_none() {
            let base = case_a_family(&self.cfg.parameters)?;
            let m = case_a_printed_jordan_map(base.abar, base.beta)?;
            let cand = Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1]);
            self.hopf = Some(case_a_hopf(&base, self.cfg.torus.hopf_half_width, Some(cand), &self.quad, &CrossingSpec::default())?);
        }
        Ok(self.hopf.as_ref().expect("set above"))
    }

    fn torus(&mut self) -> Result<()> {
        let base = case_a_family(&self.cfg.parameters)?;
        let h = self.hopf()?.clone();
        let tc = self.cfg.torus.clone();
        let eps = self.cfg.epsilon;
        let sec = fig2_section();
        let fam = move |g: f64| -> zhtorus::Result<RosslerSectionMap> {
            Ok(RosslerSectionMap::new(base.with_gamma(g).standard_form()?.rossler_params(eps), sec))
        };
        let curve = CurveSpec {
            transient: tc.transient,
            iterates: tc.iterates,
            closure_tol: self.cfg.tolerances.closure,
            escape_ratio: tc.escape_ratio,
            ..CurveSpec::default()
        };
        let spec = ScanSpec {
            grid: tc.grid.clone(),
            seed_offsets: tc.seed_offsets.clone(),
            curve,
            boundary_resolution: tc.boundary_resolution,
            newton: self.newton,
        };
        let table = torus_regime_scan(&fam, tc.guess, &spec)?;
        let mut points = Vec::new();
        for row in table.rows.iter().filter(|r| r.curve_found()) {
            let o = row.outcomes.iter().find(|o| o.confirmed).expect("curve_found");
            let map = fam(row.mu)?;
            let rep = detect_invariant_curve(&map, row.fixed_point, o.seed, o.direction, &curve)?;
            let dir = match o.direction {
                TimeDirection::Forward => "forward",
                TimeDirection::Reverse => "reverse",
            };
            for (k, p) in rep.points.iter().enumerate() {
                points.push(vec![
                    Cell::Num(row.mu),
                    Cell::Text(dir.into()),
                    Cell::Int(k as i64),
                    Cell::Num(p[0]),
                    Cell::Num(p[1]),
                    Cell::Num(self.cfg.tolerances.closure * rep.diameter),
                ]);
            }
        }
        self.out.csv("curves.csv", &["gamma", "direction", "index", "u", "v", "tolerance"], &points)?;
        let regime: Vec<Vec<Cell>> = table
            .rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Num(r.mu),
                    Cell::Num(r.multiplier_modulus),
                    Cell::Int(i64::from(r.fixed_point_stable)),
                    Cell::Int(i64::from(r.curve_found())),
                    Cell::Num(self.cfg.tolerances.newton),
                ]
            })
            .collect();
        self.out.csv("regime.csv", &["gamma", "multiplier_modulus", "fixed_point_stable", "curve_found", "tolerance"], &regime)?;
        let signed = h.l1.abs() > L1_SIGN_FLOOR;
        let v = json!({
            "epsilon": eps,
            "hopf": {
                "gamma_bar": measured(h.crossing.mu0, 1e-10),
                "omega0": measured(h.crossing.omega0, 1e-10),
                "d_re_lambda": measured(h.crossing.d, 1e-8),
                "normalization": h.normalization,
                "used_fallback": h.used_fallback,
                "l1": measured(h.l1, L1_SIGN_FLOOR),
                "l1_complex": measured(h.l1_complex, L1_SIGN_FLOOR),
                "l1_has_sign": signed,
            },
            "scan": {
                "boundary": table.boundary.map(|b| measured(b, tc.boundary_resolution)),
                "existence_side": table.existence_side,
                "one_sided": table.one_sided,
                "curve_attracting": table.curve_attracting,
                "consistent_with_l1": signed && table.consistent_with(h.l1),
                "closure_tolerance": self.cfg.tolerances.closure,
                "rows": table.rows,
            },
        });
        self.out.json("torus.json", &v)
    }

    fn findings(&mut self) -> Result<()> {
        let rep = match self.cfg.parameters {
            Parameters::A { .. } => {
                let base = case_a_family(&self.cfg.parameters)?;
                let h = self.hopf()?.clone();
                let caption = is_figure_two(&base).then_some(FIG2_CAPTION_L1);
                case_a_findings(&base, &h, caption, &self.quad)?
            }
            Parameters::B { .. } => {
                let fam = case_b_family(&self.cfg.parameters)?;
                let an = self.case_b()?.clone();
                let mut rep = case_b_findings(&fam, &an.bifurcation, &an.ladder, is_figure_one(&fam))?;
                let p = &self.cfg.averaging.point;
                rep.extend(case_b_display_records(&fam, p[0], p[1], &self.quad)?);
                rep
            }
            Parameters::ScalarLinear => bail!("findings are not available for scalar-linear"),
        };
        self.out.json("findings.json", &serde_json::to_value(&rep)?)
    }
}

fn is_figure_one(f: &CaseBFamily) -> bool {
    *f == CaseBFamily::figure_one()
}

fn is_figure_two(f: &CaseAFamily) -> bool {
    (f.abar, f.alpha, f.beta, f.gamma) == (-1.0, 41.0, -38.0, 4.299)
}

fn orbit_json(o: &PeriodicOrbit, tol: f64) -> Value {
    json!({
        "point": o.point,
        "residual": measured(o.residual, tol),
        "iterations": o.iterations,
        "multipliers": o.multipliers.iter().map(|m| json!({ "re": m.re, "im": m.im, "modulus": m.norm() })).collect::<Vec<_>>(),
        "return_time": o.period,
        "condition": o.condition,
        "tolerance": tol,
    })
}

fn rel_gap(a: &[f64], b: &[f64]) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let d = a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    if scale == 0.0 {
        d
    } else {
        d / scale
    }
}
