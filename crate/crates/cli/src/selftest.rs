use std::collections::BTreeMap;
use std::f64::consts::PI;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use zhtorus::averaging::{recursion_g, QuadratureSpec};
use zhtorus::jets::{Jet, JetSpace, JetSpec};
use zhtorus::stability::{routh_hurwitz_2, NewtonSpec, RouthHurwitz};
use zhtorus::systems::ScalarLinear;
use zhtorus::torus::{torus_regime_scan, CurveSpec, NeimarkSackerNormalForm, ScanSpec, Side};

use crate::config::ConfigError;

/// Named tolerances a selftest run may override.
#[derive(Debug, Clone)]
pub struct SelftestTolerances(BTreeMap<&'static str, f64>);

impl Default for SelftestTolerances {
    fn default() -> Self {
        Self(BTreeMap::from([("jet", 1e-12), ("averaging", 1e-10), ("closure", 1e-3), ("boundary", 1e-4)]))
    }
}

impl SelftestTolerances {
    /// Applies `name=value`.
    pub fn set(&mut self, spec: &str) -> Result<(), ConfigError> {
        let bad = |reason: String| ConfigError::Invalid { section: "tolerance".into(), key: spec.into(), reason };
        let (name, value) = spec.split_once('=').ok_or_else(|| bad("expected name=value".into()))?;
        let v = crate::config::parse_number(value).map_err(bad)?;
        if !(v > 0.0) {
            return Err(bad(format!("tolerance must be > 0, got {v}")));
        }
        let known: Vec<&str> = self.0.keys().copied().collect();
        let slot = self.0.get_mut(name.trim()).ok_or_else(|| bad(format!("unknown tolerance (known: {})", known.join(", "))))?;
        *slot = v;
        Ok(())
    }

    fn get(&self, k: &str) -> f64 {
        self.0[k]
    }
}

pub struct Check {
    pub suite: &'static str,
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn within(suite: &'static str, name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { suite, name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    pub fn to_json(&self) -> Value {
        json!({ "suite": self.suite, "check": self.name, "value": self.value, "tolerance": self.tolerance, "pass": self.pass })
    }
}

fn max_gap(a: &Jet, b: &Jet) -> f64 {
    a.coeffs().iter().zip(b.coeffs()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs() / (1.0 + y.abs())))
}

fn jets(rng: &mut ChaCha8Rng, tol: f64) -> Result<Vec<Check>> {
    let sp = JetSpace::new(JetSpec::uniform(2, 4)?);
    let mut worst = [0.0f64; 4];
    for _ in 0..200 {
        let mut r = || {
            let c: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
            sp.from_terms(&[(&[0, 0], c[0]), (&[1, 0], c[1]), (&[0, 1], c[2]), (&[2, 0], c[3]), (&[1, 1], c[4]), (&[0, 2], c[5])])
        };
        let (x, y, z) = (r(), r(), r());
        worst[0] = worst[0].max(max_gap(&x.try_mul(&y)?, &y.try_mul(&x)?));
        worst[1] = worst[1].max(max_gap(&x.try_mul(&y)?.try_mul(&z)?, &x.try_mul(&y.try_mul(&z)?)?));
        worst[2] = worst[2].max(max_gap(&x.try_mul(&y.try_add(&z)?)?, &x.try_mul(&y)?.try_add(&x.try_mul(&z)?)?));
        let s = x.sin();
        let c = x.cos();
        worst[3] = worst[3].max(max_gap(&s.try_mul(&s)?.try_add(&c.try_mul(&c)?)?, &sp.constant(1.0)));
    }
    Ok(["commutativity", "associativity", "distributivity", "sin^2 + cos^2"]
        .iter()
        .zip(worst)
        .map(|(n, w)| Check::within("jets", *n, w, tol))
        .collect())
}

fn scalar_linear(tol: f64, perturb: bool) -> Result<Vec<Check>> {
    let z = 1.25;
    let g = recursion_g(&ScalarLinear::default(), &[z], 5, &QuadratureSpec::default())?;
    let mut out = Vec::new();
    for i in 1..=5i32 {
        let fact: f64 = (1..=i).map(f64::from).product();
        let mut want = (2.0 * PI).powi(i) * z / fact;
        if perturb && i == 3 {
            want *= 1.0 + 1e-6;
        }
        let gap = (g[i as usize - 1][0] - want).abs() / want.abs();
        out.push(Check::within("scalar-linear averaging", format!("g{i}"), gap, tol));
    }
    Ok(out)
}

fn routh_hurwitz(rng: &mut ChaCha8Rng) -> Vec<Check> {
    let mut disagreements = 0usize;
    for _ in 0..2000 {
        let (p, q): (f64, f64) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let disc = p * p - 4.0 * q;
        let max_re = if disc >= 0.0 { (-p + disc.sqrt()) / 2.0 } else { -p / 2.0 };
        if (routh_hurwitz_2(p, q) == RouthHurwitz::Stable) != (max_re < 0.0) {
            disagreements += 1;
        }
    }
    vec![Check::within("routh-hurwitz", "disagreements with root locations", disagreements as f64, 0.0)]
}

fn synthetic_scan(closure: f64, boundary_tol: f64) -> Result<Vec<Check>> {
    let spec = ScanSpec {
        grid: vec![-0.02, -0.01, 0.01, 0.02],
        seed_offsets: vec![[0.05, 0.0]],
        curve: CurveSpec { transient: 4000, iterates: 400, closure_tol: closure, ..CurveSpec::default() },
        boundary_resolution: boundary_tol,
        newton: NewtonSpec { tol: 1e-13, max_iter: 20 },
    };
    let fam = |mu: f64| -> zhtorus::Result<NeimarkSackerNormalForm> {
        Ok(NeimarkSackerNormalForm { mu, a: -1.0, theta: 0.1234, b: 0.3 })
    };
    let t = torus_regime_scan(fam, [0.01, -0.01], &spec)?;
    let flag = |ok: bool| if ok { 0.0 } else { 1.0 };
    Ok(vec![
        Check::within("synthetic scan", "boundary offset from 0", t.boundary.map_or(f64::INFINITY, f64::abs), boundary_tol),
        Check::within("synthetic scan", "curves only above the boundary", flag(t.one_sided && t.existence_side == Some(Side::Above)), 0.0),
        Check::within("synthetic scan", "curves attracting", flag(t.curve_attracting == Some(true)), 0.0),
        Check::within("synthetic scan", "consistent with negative l1", flag(t.consistent_with(-1.0)), 0.0),
    ])
}

pub fn run(tol: &SelftestTolerances, perturb: bool) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut all = jets(&mut rng, tol.get("jet"))?;
    all.extend(scalar_linear(tol.get("averaging"), perturb)?);
    all.extend(routh_hurwitz(&mut rng));
    all.extend(synthetic_scan(tol.get("closure"), tol.get("boundary"))?);
    Ok(all)
}
