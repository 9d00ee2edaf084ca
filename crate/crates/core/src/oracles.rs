//! Closed-form expressions for Cases A and B, transcribed as printed, plus
//! the record type used to compare them with the numerical engine.
//!
//! Nothing here feeds the engine. Every function is a cross-check.

use std::f64::consts::PI;

use nalgebra::Complex;
use serde::{Deserialize, Serialize};

use crate::averaging::{AveragedExpansion, Averager, QuadratureSpec};
use crate::error::{Error, Result};
use crate::lyapschmidt::{reduce, BifurcationReport, BranchChart};
use crate::stability::{Ladder, NewtonSpec};
use crate::systems::{CaseAFamily, CaseBFamily, TaylorBudget, DEFAULT_OMEGA_GUARD};
use crate::torus::{equilibrium, HopfAnalysis, MeanFieldFamily};

pub const MATCH_REL: f64 = 1e-6;
pub const MATCH_ABS: f64 = 1e-9;

/// Caption constant for the Fig-2 first Lyapunov coefficient.
pub const FIG2_CAPTION_L1: f64 = 2086808.0 * PI / 25.0;
/// Caption rationals for Fig 1.
pub const FIG1_CAPTION_DELTA: f64 = 30963.0 / 272.0;
pub const FIG1_CAPTION_LAMBDA1: f64 = -123.0 / 239.0;
pub const FIG1_CAPTION_LAMBDA2: f64 = -116.0 / 239.0;
/// `δ` at the Fig-1 coefficients by exact rational substitution.
pub const FIG1_DELTA_EXACT: f64 = 57933599.0 / 508928.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Match,
    Mismatch,
    PrintedFormulaInvalidDomain,
}

/// A printed closed form that may leave its real domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PrintedValue {
    Real { value: f64 },
    InvalidDomain { radicand: f64 },
}

impl PrintedValue {
    fn sqrt_of(radicand: f64, f: impl FnOnce(f64) -> f64) -> Self {
        if radicand >= 0.0 {
            PrintedValue::Real { value: f(radicand.sqrt()) }
        } else {
            PrintedValue::InvalidDomain { radicand }
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            PrintedValue::Real { value } => Some(*value),
            PrintedValue::InvalidDomain { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyRecord {
    pub quantity: String,
    pub printed: Option<f64>,
    pub engine: f64,
    pub abs_gap: Option<f64>,
    pub rel_gap: Option<f64>,
    pub verdict: Verdict,
    /// Tolerance of the engine value.
    pub engine_tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl DiscrepancyRecord {
    pub fn compare(quantity: impl Into<String>, printed: f64, engine: f64, engine_tolerance: f64) -> Self {
        let abs = (printed - engine).abs();
        let rel = abs / printed.abs().max(engine.abs()).max(f64::MIN_POSITIVE);
        let verdict = if rel <= MATCH_REL || abs <= MATCH_ABS {
            Verdict::Match
        } else {
            Verdict::Mismatch
        };
        Self {
            quantity: quantity.into(),
            printed: Some(printed),
            engine,
            abs_gap: Some(abs),
            rel_gap: Some(rel),
            verdict,
            engine_tolerance,
            note: None,
        }
    }

    pub fn from_printed(
        quantity: impl Into<String>,
        printed: PrintedValue,
        engine: f64,
        engine_tolerance: f64,
    ) -> Self {
        match printed {
            PrintedValue::Real { value } => Self::compare(quantity, value, engine, engine_tolerance),
            PrintedValue::InvalidDomain { radicand } => Self {
                quantity: quantity.into(),
                printed: None,
                engine,
                abs_gap: None,
                rel_gap: None,
                verdict: Verdict::PrintedFormulaInvalidDomain,
                engine_tolerance,
                note: Some(format!("negative radicand {radicand:.17e}")),
            },
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn is_match(&self) -> bool {
        self.verdict == Verdict::Match
    }
}

/// Findings emitted as one JSON document.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FindingsReport {
    pub records: Vec<DiscrepancyRecord>,
}

impl FindingsReport {
    pub fn push(&mut self, r: DiscrepancyRecord) {
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = DiscrepancyRecord>) {
        self.records.extend(rs);
    }

    pub fn find(&self, prefix: &str) -> impl Iterator<Item = &DiscrepancyRecord> {
        let p = prefix.to_string();
        self.records.iter().filter(move |r| r.quantity.starts_with(&p))
    }

    pub fn mismatches(&self) -> usize {
        self.records.iter().filter(|r| !r.is_match()).count()
    }
}

// ---------------------------------------------------------------- Case A

fn check_case_a(abar: f64) -> Result<()> {
    if abar == 0.0 || abar * abar >= 2.0 || !abar.is_finite() {
        return Err(Error::DomainViolation(format!(
            "Case A closed forms need abar != 0 and abar^2 < 2, got {abar}"
        )));
    }
    Ok(())
}

/// Printed first-order averaged function of Case A.
pub fn case_a_g1_closed(abar: f64, alpha: f64, beta: f64, gamma: f64, r: f64, z: f64) -> Result<[f64; 2]> {
    check_case_a(abar)?;
    let a = abar;
    let s = 2.0 - a * a;
    let amg = alpha - gamma;
    let g11 = -PI * r * (a * (beta + a * (amg + r * z)) - alpha + gamma) / s.powf(1.5);
    // line 1: ā⁴(−z)(α−γ+rz)
    // line 2: −3βā³z + ā²(r + z(α−γ)) + 6βāz + 2z(α−γ+2rz)
    let inner = a.powi(4) * (-z) * (amg + r * z) - 3.0 * beta * a.powi(3) * z
        + a * a * (r + z * amg)
        + 6.0 * beta * a * z
        + 2.0 * z * (amg + 2.0 * r * z);
    let g12 = PI / s.powf(2.5) * inner;
    Ok([g11, g12])
}

/// Zero of the printed `g₁` in `r > 0`, by eliminating `rz` between its
/// components. `None` when the pair has no real zero with `r > 0`.
pub fn case_a_g1_zero(abar: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Option<[f64; 2]>> {
    check_case_a(abar)?;
    let a2 = abar * abar;
    let amg = alpha - gamma;
    let k = (-abar * beta + amg * (1.0 - a2)) / a2;
    let m = -(amg + k) * a2 * a2 - 3.0 * beta * a2 * abar + a2 * amg + 6.0 * beta * abar + 2.0 * amg + 4.0 * k;
    if m == 0.0 {
        return Ok(None);
    }
    let z2 = -k * a2 / m;
    if !(z2 > 0.0) {
        return Ok(None);
    }
    let mut z = z2.sqrt();
    let mut r = -z * m / a2;
    if r < 0.0 {
        z = -z;
        r = -r;
    }
    Ok(Some([r, z]))
}

/// Printed Case A constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseAConstants {
    pub d0: f64,
    pub d1: f64,
    pub ell: f64,
    /// `ℓ/(√(2−ā²)(ā²+4)²)`.
    pub l1: f64,
    pub gamma_bar: f64,
    pub omega0: f64,
    /// `dRe λ/dγ` at `γ̄`.
    pub d_re_lambda: f64,
    pub r_plus: PrintedValue,
    pub r_minus: PrintedValue,
    pub z_plus: PrintedValue,
    pub z_minus: PrintedValue,
    /// The root the text assigns to the sign of `ā`.
    pub r_bar: PrintedValue,
    pub z_bar: PrintedValue,
    pub det_dg1: f64,
    /// `p(λ) = λ² + p1 λ + p0` in the stability form.
    pub charpoly_stability: [f64; 2],
    /// The same polynomial in the crossing form.
    pub charpoly_crossing: [f64; 2],
}

pub fn case_a_constants(abar: f64, alpha: f64, beta: f64, gamma: f64) -> Result<CaseAConstants> {
    check_case_a(abar)?;
    let a = abar;
    let a2 = a * a;
    let s = 2.0 - a2;
    let d0 = (gamma - alpha - beta * a * (a2 - 1.0)) * (alpha * (a2 - 1.0) + a * (beta - a * gamma) + gamma);
    let d1 = gamma - alpha + beta * a;
    // line 1: (β/ā)(16β(2β+1) + 3(1−2β)²ā⁶ + (−40β²+6β+9)ā⁴
    // line 2: + 2(2β+1)(4β+5)ā²)
    let ell = beta / a
        * (16.0 * beta * (2.0 * beta + 1.0)
            + 3.0 * (1.0 - 2.0 * beta).powi(2) * a.powi(6)
            + (-40.0 * beta * beta + 6.0 * beta + 9.0) * a.powi(4)
            + 2.0 * (2.0 * beta + 1.0) * (4.0 * beta + 5.0) * a2);
    let l1 = ell / (s.sqrt() * (a2 + 4.0).powi(2));
    let gamma_bar = alpha - a * beta;
    let omega0 = beta.abs() * a2 / s.powf(1.5);
    let d_re_lambda = 1.0 / (2.0 * a2 * s.sqrt());

    let p = alpha + beta * a * (a2 - 1.0) - gamma;
    let q = alpha * (a2 - 1.0) + a * (beta - a * gamma) + gamma;
    let r_rad = 2.0 * (a2 - 2.0) * p * q;
    let r_plus = PrintedValue::sqrt_of(r_rad, |v| v / a.powi(3));
    let r_minus = PrintedValue::sqrt_of(r_rad, |v| -v / a.powi(3));
    let z_num = -alpha + alpha * a2 - a2 * gamma + beta * a + gamma;
    let z_den = s * (alpha + beta * a.powi(3) - beta * a - gamma);
    let z_rad = z_num / z_den;
    let z_plus = PrintedValue::sqrt_of(z_rad, |v| a * v);
    let z_minus = PrintedValue::sqrt_of(z_rad, |v| -a * v);
    let (r_bar, z_bar) = if a > 0.0 { (r_plus, z_plus) } else { (r_minus, z_minus) };
    let det_dg1 = -4.0 * PI * PI * p * q / (a2 * (a2 - 2.0).powi(3));

    let charpoly_stability = [d1 / (a2 * s.sqrt()), d0 / (a2 * s.powi(3))];
    let charpoly_crossing = [
        -(a2 - 2.0).powi(3) * (beta * a - alpha + gamma) / (a2 * s.powf(3.5)),
        -(alpha + beta * a.powi(3) - beta * a - gamma)
            * (alpha * a2 - alpha - a2 * gamma + beta * a + gamma)
            / (a2 * (a2 - 2.0).powi(3)),
    ];
    Ok(CaseAConstants {
        d0,
        d1,
        ell,
        l1,
        gamma_bar,
        omega0,
        d_re_lambda,
        r_plus,
        r_minus,
        z_plus,
        z_minus,
        r_bar,
        z_bar,
        det_dg1,
        charpoly_stability,
        charpoly_crossing,
    })
}

/// Printed `dλ/dγ` evaluated at a root `λ` of the crossing polynomial.
pub fn case_a_dlambda_dgamma(abar: f64, alpha: f64, beta: f64, gamma: f64, lambda: Complex<f64>) -> Result<Complex<f64>> {
    check_case_a(abar)?;
    let a = abar;
    let a2 = a * a;
    let c3 = (a2 - 2.0).powi(3);
    let rs = (2.0 - a2).sqrt();
    let num = lambda * c3 + rs * (2.0 * (a2 - 1.0) * (alpha - gamma) + beta * a * (a2 * a2 - 2.0 * a2 + 2.0));
    let den = (lambda * (2.0 * a2 * rs) - alpha + beta * a + gamma) * c3;
    Ok(num / den)
}

/// Printed linear change `(r, z) = (−2β(ā²−2)(āv−2u)/(ā²+4), v)` as the
/// matrix taking `(u, v)` to `(r, z)`.
pub fn case_a_printed_jordan_map(abar: f64, beta: f64) -> Result<[[f64; 2]; 2]> {
    check_case_a(abar)?;
    let a2 = abar * abar;
    let k = -2.0 * beta * (a2 - 2.0) / (a2 + 4.0);
    Ok([[-2.0 * k, k * abar], [0.0, 1.0]])
}

// ---------------------------------------------------------------- Case B

fn check_omega(w: f64) -> Result<()> {
    let g = DEFAULT_OMEGA_GUARD;
    if !(w.is_finite() && w.abs() >= g) || (w - 1.0).abs() < g || (w - 2f64.sqrt()).abs() < g {
        return Err(Error::DomainViolation(format!(
            "omega = {w} is within {g:e} of 0, 1 or sqrt 2"
        )));
    }
    Ok(())
}

/// Quantities printed for Case B.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseBQuantity {
    G1,
    G2,
    G3,
    F1,
    F2,
    Delta,
}

/// Dispatches to the Case B closed forms; scalar results come back as a
/// single-element vector.
pub fn case_b_printed(f: &CaseBFamily, q: CaseBQuantity, r: f64, z: f64) -> Result<Vec<f64>> {
    Ok(match q {
        CaseBQuantity::G1 => case_b_g1(f, r, z)?.to_vec(),
        CaseBQuantity::G2 => case_b_g2(f, r, z)?.to_vec(),
        CaseBQuantity::G3 => case_b_g3(f, r, z)?.to_vec(),
        CaseBQuantity::F1 => vec![case_b_f1(f, r)?],
        CaseBQuantity::F2 => vec![case_b_f2(f, r)?],
        CaseBQuantity::Delta => vec![case_b_delta(f)?],
    })
}

pub fn case_b_g1(f: &CaseBFamily, r: f64, z: f64) -> Result<[f64; 2]> {
    let w = f.omega;
    check_omega(w)?;
    let (a1, g1) = (f.alpha[0], f.gamma[0]);
    let w2 = w * w;
    Ok([
        PI * r * (a1 + g1 * (1.0 - w2)) / w.powi(3),
        -2.0 * PI * z * (g1 + a1 * (1.0 - w2)) / w.powi(3),
    ])
}

pub fn case_b_g2(f: &CaseBFamily, r: f64, z: f64) -> Result<[f64; 2]> {
    case_b_g2_variant(f, r, z, DisplayVariant::AsPrinted)
}

/// `g₂` with the first component read as printed, or with `−2γ₂rω⁵` taken
/// outside the `ω³` bracket.
pub fn case_b_g2_variant(f: &CaseBFamily, r: f64, z: f64, variant: DisplayVariant) -> Result<[f64; 2]> {
    let w = f.omega;
    check_omega(w)?;
    let (a1, a2) = (f.alpha[0], f.alpha[1]);
    let b1 = f.beta[0];
    let (g1, g2) = (f.gamma[0], f.gamma[1]);
    let w2 = w * w;

    // g₂¹, line 1: πr(α₁+γ₁(1−ω²))² − ω³( r(α₁z − 2(α₂+γ₂) + γ₁(3z−β₁))
    // line 2:      − 2γ₂rω⁵ + 2z(α₁+γ₁)(2α₁+γ₁) ) + ω(α₁+γ₁)(r(4z−3β₁) + 6z(α₁+γ₁))
    let t1 = PI * r * (a1 + g1 * (1.0 - w2)).powi(2);
    let inner = r * (a1 * z - 2.0 * (a2 + g2) + g1 * (3.0 * z - b1)) + 2.0 * z * (a1 + g1) * (2.0 * a1 + g1);
    let t2 = match variant {
        DisplayVariant::AsPrinted => -w.powi(3) * (inner - 2.0 * g2 * r * w.powi(5)),
        DisplayVariant::Corrected => -w.powi(3) * inner - 2.0 * g2 * r * w.powi(5),
    };
    let t3 = w * (a1 + g1) * (r * (4.0 * z - 3.0 * b1) + 6.0 * z * (a1 + g1));
    let g21 = PI / (2.0 * w.powi(6)) * (t1 + t2 + t3);

    // g₂², line 1: r²(1−ω²)(α₁(ω²−1) + γ₁(2ω²−1)) + 2r(ω²−1)(α₁+γ₁)
    // line 2:      (α₁(2ω²−3) + γ₁(ω²−3)) + 2ωz( 2π(α₁(1−ω²)+γ₁)² + 2α₂ω⁵
    // line 3:      + ω³(α₁(z−β₁) − 2(α₂+γ₂)) − 3ω(α₁+γ₁)(z−β₁) )
    let s1 = r * r * (1.0 - w2) * (a1 * (w2 - 1.0) + g1 * (2.0 * w2 - 1.0));
    let s2 = 2.0 * r * (w2 - 1.0) * (a1 + g1) * (a1 * (2.0 * w2 - 3.0) + g1 * (w2 - 3.0));
    let s3 = 2.0
        * w
        * z
        * (2.0 * PI * (a1 * (1.0 - w2) + g1).powi(2) + 2.0 * a2 * w.powi(5)
            + w.powi(3) * (a1 * (z - b1) - 2.0 * (a2 + g2))
            - 3.0 * w * (a1 + g1) * (z - b1));
    let g22 = PI / (2.0 * w.powi(7)) * (s1 + s2 + s3);
    Ok([g21, g22])
}

pub fn case_b_g3(f: &CaseBFamily, r: f64, z: f64) -> Result<[f64; 2]> {
    let w = f.omega;
    check_omega(w)?;
    let a3 = f.alpha[2];
    let (b1, b2) = (f.beta[0], f.beta[1]);
    let (g1, g2, g3) = (f.gamma[0], f.gamma[1], f.gamma[2]);
    let w2 = w * w;
    let w4 = w2 * w2;

    // g₃¹, line 1: γ₁r³(1−ω²) + 16γ₁²r²(ω²−1) + 4r( 4ω²( α₃ − β₁γ₂ − β₂γ₁
    // line 2:      − 3γ₁³(ω⁴−3ω²+2) − γ₃ω² + γ₃ ) + γ₁(8−3ω²)z² + z( β₁γ₁(ω²−6)
    // line 3:      − 2ω(ω²−2)(πγ₁²(ω²−2) + γ₂ω) ) ) − 8γ₁ω²z( 2( β₁γ₁(ω²+2) + 2ω
    // line 4:      (ω²−2)(πγ₁²(ω²−2) + 2γ₂ω) ) + γ₁(11ω²−26)z )
    let u1 = g1 * r.powi(3) * (1.0 - w2) + 16.0 * g1 * g1 * r * r * (w2 - 1.0);
    let u2 = 4.0
        * r
        * (4.0 * w2 * (a3 - b1 * g2 - b2 * g1 - 3.0 * g1.powi(3) * (w4 - 3.0 * w2 + 2.0) - g3 * w2 + g3)
            + g1 * (8.0 - 3.0 * w2) * z * z
            + z * (b1 * g1 * (w2 - 6.0) - 2.0 * w * (w2 - 2.0) * (PI * g1 * g1 * (w2 - 2.0) + g2 * w)));
    let u3 = -8.0
        * g1
        * w2
        * z
        * (2.0 * (b1 * g1 * (w2 + 2.0) + 2.0 * w * (w2 - 2.0) * (PI * g1 * g1 * (w2 - 2.0) + 2.0 * g2 * w))
            + g1 * (11.0 * w2 - 26.0) * z);
    let g31 = PI / (16.0 * w.powi(5)) * (u1 + u2 + u3);

    // g₃², line 1: r²( 6ω²( β₁γ₁(ω²−3) − 2ω(ω²−1)(πγ₁²(ω²−2) + γ₂ω) )
    // line 2:      + γ₁(2ω⁶−29ω⁴+37ω²−10)z ) + 12γ₁rω²( 2( β₁γ₁(ω⁴+3ω²−6)
    // line 3:      + 2ω(ω⁴−3ω²+2)(πγ₁²(ω²−2) + 2γ₂ω) ) + 3γ₁(ω⁴−7ω²+6)z )
    // line 4:      + 2ω²z( 4ω²( 6α₃(ω²−1) − 3β₂γ₁(ω²−4) + γ₁(ω²−2)( γ₁²( 15(ω²−1)
    // line 5:      + 4π²(ω²−2)² ) + 12πγ₂ω(ω²−2) ) − 6γ₃ ) − 3β₁²γ₁(ω²+6) + 12β₁ω
    // line 6:      (2πγ₁²(ω⁴−4) − γ₂ω(ω²−4)) + 9γ₁(ω²−6)z² + 6z( 2ω(ω²−4)
    // line 7:      (3πγ₁²(ω²−2) + γ₂ω) − β₁γ₁(ω²−12) ) )
    let v1 = r
        * r
        * (6.0 * w2 * (b1 * g1 * (w2 - 3.0) - 2.0 * w * (w2 - 1.0) * (PI * g1 * g1 * (w2 - 2.0) + g2 * w))
            + g1 * (2.0 * w.powi(6) - 29.0 * w4 + 37.0 * w2 - 10.0) * z);
    let v2 = 12.0
        * g1
        * r
        * w2
        * (2.0
            * (b1 * g1 * (w4 + 3.0 * w2 - 6.0)
                + 2.0 * w * (w4 - 3.0 * w2 + 2.0) * (PI * g1 * g1 * (w2 - 2.0) + 2.0 * g2 * w))
            + 3.0 * g1 * (w4 - 7.0 * w2 + 6.0) * z);
    let inner4 = 6.0 * a3 * (w2 - 1.0) - 3.0 * b2 * g1 * (w2 - 4.0)
        + g1 * (w2 - 2.0)
            * (g1 * g1 * (15.0 * (w2 - 1.0) + 4.0 * PI * PI * (w2 - 2.0).powi(2))
                + 12.0 * PI * g2 * w * (w2 - 2.0))
        - 6.0 * g3;
    let v3 = 2.0
        * w2
        * z
        * (4.0 * w2 * inner4 - 3.0 * b1 * b1 * g1 * (w2 + 6.0)
            + 12.0 * b1 * w * (2.0 * PI * g1 * g1 * (w4 - 4.0) - g2 * w * (w2 - 4.0))
            + 9.0 * g1 * (w2 - 6.0) * z * z
            + 6.0 * z * (2.0 * w * (w2 - 4.0) * (3.0 * PI * g1 * g1 * (w2 - 2.0) + g2 * w) - b1 * g1 * (w2 - 12.0)));
    let g32 = PI / (24.0 * w.powi(7)) * (v1 + v2 + v3);
    Ok([g31, g32])
}

/// Printed first bifurcation function on the chart `(r, 0)`.
pub fn case_b_f1(f: &CaseBFamily, r: f64) -> Result<f64> {
    let w = f.omega;
    check_omega(w)?;
    Ok(PI * r * (f.alpha[1] - f.beta[0] * f.gamma[0] + f.gamma[1] * (1.0 - w * w)) / w.powi(3))
}

/// Printed second bifurcation function on the chart `(r, 0)`.
pub fn case_b_f2(f: &CaseBFamily, r: f64) -> Result<f64> {
    let w = f.omega;
    let delta = case_b_delta(f)?;
    let g1 = f.gamma[0];
    Ok(3.0 * PI * g1 * (w * w - 1.0) * r / (16.0 * w.powi(5)) * (r * r - 16.0 * w * w / 3.0 * delta))
}

pub fn case_b_delta(f: &CaseBFamily) -> Result<f64> {
    let w = f.omega;
    check_omega(w)?;
    let w2 = w * w;
    let (b1, b2) = (f.beta[0], f.beta[1]);
    let (g1, g2, g3) = (f.gamma[0], f.gamma[1], f.gamma[2]);
    let den = g1 * (1.0 - w2);
    if den == 0.0 {
        return Err(Error::DomainViolation("delta needs gamma_1 != 0".into()));
    }
    Ok((b1 * g2 + b2 * g1 + g1.powi(3) * (w2 * w2 - 3.0 * w2 + 2.0) + g3 * (w2 - 1.0) - f.alpha[2]) / den)
}

/// `r* = 4ω√(δ/3)`.
pub fn case_b_r_star(f: &CaseBFamily) -> Result<PrintedValue> {
    let d = case_b_delta(f)?;
    let w = f.omega;
    Ok(PrintedValue::sqrt_of(d / 3.0, |v| 4.0 * w * v))
}

/// `(λ₁, λ₂) = (γ₁(ω²−2), γ₁(1−ω²))`.
pub fn case_b_lambdas(f: &CaseBFamily) -> Result<(f64, f64)> {
    let w = f.omega;
    check_omega(w)?;
    let g1 = f.gamma[0];
    Ok((g1 * (w * w - 2.0), g1 * (1.0 - w * w)))
}

/// `Λ₀(22) = 2πγ₁(ω²−2)/ω`.
pub fn case_b_lambda0_22(f: &CaseBFamily) -> Result<f64> {
    let (l1, _) = case_b_lambdas(f)?;
    Ok(l1 * 2.0 * PI / f.omega)
}

/// Printed `Λ₁(22)`.
pub fn case_b_lambda1_22(f: &CaseBFamily) -> Result<f64> {
    let w = f.omega;
    let delta = case_b_delta(f)?;
    let w2 = w * w;
    let w4 = w2 * w2;
    let a3 = f.alpha[2];
    let (b1, b2) = (f.beta[0], f.beta[1]);
    let (g1, g2, g3) = (f.gamma[0], f.gamma[1], f.gamma[2]);
    // line 1
    let t1 = 2.0 * PI * g3 * (w2 - 1.0) * (2.0 * w.powi(6) - 13.0 * w4 + 4.0 * w2 - 20.0) * delta
        / (9.0 * w.powi(5) * (w2 - 2.0))
        + 2.0 * PI * PI * b1 * g1 * g1 * (w4 - 4.0) / w4;
    // line 2
    let t2 = -PI * g1 * (b1 * b1 * (w2 + 6.0) + 4.0 * w2 * (b2 * (w2 - 4.0) - 4.0 * PI * g2 * w * (w2 - 2.0).powi(2)))
        / (4.0 * w.powi(5));
    // line 3
    let t3 = PI * g1.powi(3) * (w2 - 2.0) * (9.0 * w2 + 4.0 * PI * PI * (w2 - 2.0).powi(2) - 9.0) / (3.0 * w.powi(3));
    // line 4
    let t4 = PI * (2.0 * a3 * (w2 - 1.0) - b1 * g2 * (w2 - 4.0) - 2.0 * g3) / w.powi(3);
    Ok(t1 + t2 + t3 + t4)
}

/// `Λ₂(11) = λ₂·2πδ/ω³`.
pub fn case_b_lambda2_11(f: &CaseBFamily) -> Result<f64> {
    let (_, l2) = case_b_lambdas(f)?;
    Ok(l2 * 2.0 * PI * case_b_delta(f)? / f.omega.powi(3))
}

/// Printed `T₁₂`, `T₂₁` as `[ε coefficient, ε² coefficient]` from the
/// entries of `A₀, A₁, A₂`.
pub fn printed_t_coefficients(a0_22: f64, a1: [[f64; 2]; 2], a2: [[f64; 2]; 2]) -> ([f64; 2], [f64; 2]) {
    let t12 = [
        -a1[0][1] / a0_22,
        (a1[0][1] * a1[1][1] - a0_22 * a2[0][1]) / (a0_22 * a0_22),
    ];
    let t21 = [
        a1[1][0] / a0_22,
        (-a1[1][0] * a1[1][1] + a0_22 * a2[1][0]) / (a0_22 * a0_22),
    ];
    (t12, t21)
}

// ------------------------------------------------- fifth-order template

/// `g_{l+1}(r, z)` when every lower-order coefficient vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardTemplate {
    pub l: u32,
    pub omega: f64,
    pub alpha_next: f64,
    pub gamma_next: f64,
}

impl StandardTemplate {
    pub fn eval(&self, r: f64, z: f64) -> [f64; 2] {
        let w = self.omega;
        let w2 = w * w;
        [
            PI * r * (self.alpha_next + self.gamma_next * (1.0 - w2)) / w.powi(3),
            -2.0 * PI * z * (self.gamma_next + self.alpha_next * (1.0 - w2)) / w.powi(3),
        ]
    }

    /// `α_{l+1} + γ_{l+1}(1−ω²)`, the factor of the first component.
    pub fn radial_factor(&self) -> f64 {
        self.alpha_next + self.gamma_next * (1.0 - self.omega * self.omega)
    }

    /// Whether the zero set meets `r > 0`. The first component forces
    /// `r = 0` unless its factor vanishes.
    pub fn has_zero_with_positive_radius(&self) -> bool {
        self.radial_factor() == 0.0
    }

    pub fn is_identically_zero(&self) -> bool {
        self.alpha_next == 0.0 && self.gamma_next == 0.0
    }
}

pub fn standard_analysis_template(f: &CaseBFamily, l: u32) -> Result<StandardTemplate> {
    check_omega(f.omega)?;
    if !(1..=4).contains(&l) {
        return Err(Error::Precondition(format!("template order l = {l} outside 1..=4")));
    }
    let l = l as usize;
    if f.alpha[..l].iter().chain(&f.gamma[..l]).any(|v| *v != 0.0) {
        return Err(Error::Precondition(format!(
            "alpha_i and gamma_i must vanish for i <= {l}"
        )));
    }
    Ok(StandardTemplate {
        l: l as u32,
        omega: f.omega,
        alpha_next: f.alpha[l],
        gamma_next: f.gamma[l],
    })
}

// --------------------------------------------- bifurcation-function displays

/// A long display evaluated as printed or with its known fixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisplayVariant {
    AsPrinted,
    Corrected,
}

/// `γ_1..γ_4` and `f_1..f_4` from the printed displays, for a chart with one
/// free coordinate `a` and one slaved coordinate `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrintedBifurcation {
    pub gamma: [f64; 4],
    pub f: [f64; 4],
}

/// Evaluates the displays from an expansion centred at `z_u`. The slaved
/// coordinate is the second one; `∂_b^k g_i` is read off the jets.
pub fn printed_bifurcation_functions(ex: &AveragedExpansion, variant: DisplayVariant) -> Result<PrintedBifurcation> {
    if ex.dim() != 2 {
        return Err(Error::UnsupportedShape("the displays are evaluated for n = 2, m = 1".into()));
    }
    if ex.max_order() < 5 {
        return Err(Error::OrderExceedsCap { order: 5, cap: ex.max_order() });
    }
    // d(i, c, k) = ∂ᵏ/∂bᵏ of component c of g_i.
    let d = |i: u32, c: usize, k: u32| -> Result<f64> {
        let j = &ex.g_jet(i)?[c];
        let fact: f64 = (1..=k).map(f64::from).product();
        Ok(j.coeff(&[0, k]) * fact)
    };
    let p = |i, k| d(i, 1, k);
    let q = |i, k| d(i, 0, k);
    let delta = p(1, 1)?;
    let gam = q(1, 1)?;
    if delta == 0.0 {
        return Err(Error::BranchDegeneracy("Delta_u is singular".into()));
    }
    let fixed = variant == DisplayVariant::Corrected;

    let c1 = -p(2, 0)? / delta;
    let f1 = gam * c1 + q(2, 0)?;

    let c2 = -(p(1, 2)? * c1 * c1 + 2.0 * p(2, 1)? * c1 + 2.0 * p(3, 0)?) / delta;
    let f2 = 0.5 * gam * c2 + 0.5 * q(1, 2)? * c1 * c1 + q(2, 1)? * c1 + q(3, 0)?;

    let k21 = if fixed { 3.0 } else { 2.0 };
    let c3 = -(p(1, 3)? * c1.powi(3)
        + 3.0 * p(1, 2)? * c1 * c2
        + 3.0 * p(2, 2)? * c1 * c1
        + k21 * p(2, 1)? * c2
        + 6.0 * p(3, 1)? * c1
        + 6.0 * p(4, 0)?)
        / delta;
    let f3 = gam * c3 / 6.0 + q(1, 3)? * c1.powi(3) / 6.0 + 0.5 * q(1, 2)? * c1 * c2 + 0.5 * q(2, 2)? * c1 * c1
        + 0.5 * q(2, 1)? * c2
        + q(3, 1)? * c1
        + q(4, 0)?;

    // line 1: ∂⁴π⊥g₁γ₁⁴ + 3∂²π⊥g₁γ₂² + 4∂²π⊥g₁γ₁
    // line 2: ⊙γ₃ + 6∂³π⊥g₁γ₁²⊙γ₂ + 4∂π⊥g₂γ₃
    // line 3: + 4∂³π⊥g₁γ₁³ + 12∂π⊥g₃γ₂ + 12∂²π⊥g₂γ₁
    // line 4: ⊙γ₂ + 12∂²π⊥g₃γ₁² + 24∂π⊥g₄γ₁
    let line3_lead = if fixed { p(2, 3)? } else { p(1, 3)? };
    let tail = if fixed { 24.0 * p(5, 0)? } else { 0.0 };
    let c4 = -(p(1, 4)? * c1.powi(4)
        + 3.0 * p(1, 2)? * c2 * c2
        + 4.0 * p(1, 2)? * c1 * c3
        + 6.0 * p(1, 3)? * c1 * c1 * c2
        + 4.0 * p(2, 1)? * c3
        + 4.0 * line3_lead * c1.powi(3)
        + 12.0 * p(3, 1)? * c2
        + 12.0 * p(2, 2)? * c1 * c2
        + 12.0 * p(3, 2)? * c1 * c1
        + 24.0 * p(4, 1)? * c1
        + tail)
        / delta;
    // line 1: Γγ₄/24 + ∂⁴πg₁γ₁⁴/24 + ∂³πg₁γ₁²⊙γ₂/4
    // line 2: + ∂²πg₁γ₂²/8 + ∂²πg₁γ₁⊙γ₃/6
    // line 3: + ∂³πg₂γ₁³/6 + ∂²πg₂γ₁⊙γ₂/2 + ∂πg₂γ₃/6
    // line 4: + ∂²πg₃γ₁²/2 + ∂πg₃γ₂/2 + ∂πg₄γ₁ + πg₅
    let f4 = gam * c4 / 24.0
        + q(1, 4)? * c1.powi(4) / 24.0
        + q(1, 3)? * c1 * c1 * c2 / 4.0
        + q(1, 2)? * c2 * c2 / 8.0
        + q(1, 2)? * c1 * c3 / 6.0
        + q(2, 3)? * c1.powi(3) / 6.0
        + q(2, 2)? * c1 * c2 / 2.0
        + q(2, 1)? * c3 / 6.0
        + q(3, 2)? * c1 * c1 / 2.0
        + q(3, 1)? * c2 / 2.0
        + q(4, 1)? * c1
        + q(5, 0)?;
    Ok(PrintedBifurcation {
        gamma: [c1, c2, c3, c4],
        f: [f1, f2, f3, f4],
    })
}

// ------------------------------------------------------------ findings

/// Tolerance attached to engine equilibria and averaged values.
const ENGINE_TOL: f64 = 1e-9;

/// Case A records at `base.gamma`, with the crossing data from `hopf`.
/// The caption constant is compared only when `caption_l1` is given.
pub fn case_a_findings(
    base: &CaseAFamily,
    hopf: &HopfAnalysis,
    caption_l1: Option<f64>,
    quad: &QuadratureSpec,
) -> Result<FindingsReport> {
    let (a, al, be, ga) = (base.abar, base.alpha, base.beta, base.gamma);
    let c = case_a_constants(a, al, be, ga)?;
    let mut rep = FindingsReport::default();
    let b = *base;
    let fam = MeanFieldFamily {
        build: move |g: f64| b.with_gamma(g).standard_form(),
        quad: *quad,
    };
    let seed = case_a_g1_zero(a, al, be, ga)?
        .ok_or_else(|| Error::NoZeroFound(format!("no zero of g1 at gamma = {ga}")))?;
    let newton = NewtonSpec { tol: 1e-12, max_iter: 40 };
    let (x, j) = equilibrium(&fam, ga, seed, &newton)?;
    rep.push(DiscrepancyRecord::from_printed("case_a.r_bar", c.r_bar, x[0], ENGINE_TOL));
    rep.push(DiscrepancyRecord::from_printed("case_a.z_bar", c.z_bar, x[1], ENGINE_TOL));
    if let PrintedValue::InvalidDomain { radicand } = c.r_bar {
        let v = radicand.abs().sqrt() / a.powi(3) * a.signum();
        rep.push(
            DiscrepancyRecord::compare("case_a.r_bar.reflected_radicand", v, x[0], ENGINE_TOL)
                .with_note("printed r_bar with the sign of its radicand reversed"),
        );
    }
    rep.push(DiscrepancyRecord::compare("case_a.zero_by_elimination.r", seed[0], x[0], ENGINE_TOL));
    rep.push(DiscrepancyRecord::compare("case_a.zero_by_elimination.z", seed[1], x[1], ENGINE_TOL));
    let g = case_a_g1_closed(a, al, be, ga, x[0], x[1])?;
    let e = Averager { sys: &base.standard_form()?, quad: *quad }.g(&x, 1)?;
    rep.push(DiscrepancyRecord::compare("case_a.g1.r_component", g[0], e[0], ENGINE_TOL));
    rep.push(DiscrepancyRecord::compare("case_a.g1.z_component", g[1], e[1], ENGINE_TOL));

    let two_pi = 2.0 * PI;
    let det_mean = j.determinant();
    let tr_mean = j.trace();
    rep.push(DiscrepancyRecord::compare("case_a.det_dg1", c.det_dg1, det_mean * two_pi * two_pi, ENGINE_TOL));
    rep.push(DiscrepancyRecord::compare("case_a.charpoly_stability.p1", c.charpoly_stability[0], -tr_mean, ENGINE_TOL));
    rep.push(DiscrepancyRecord::compare("case_a.charpoly_stability.p0", c.charpoly_stability[1], det_mean, ENGINE_TOL));
    rep.push(DiscrepancyRecord::compare("case_a.charpoly_crossing.p1", c.charpoly_crossing[0], -tr_mean, ENGINE_TOL));
    rep.push(DiscrepancyRecord::compare("case_a.charpoly_crossing.p0", c.charpoly_crossing[1], det_mean, ENGINE_TOL));
    rep.push(
        DiscrepancyRecord::compare("case_a.d0_sign", c.d0.signum(), (det_mean * a * a * (2.0 - a * a).powi(3)).signum(), 0.0)
            .with_note("sign of the printed d0 against the engine determinant"),
    );

    let cr = &hopf.crossing;
    rep.push(DiscrepancyRecord::compare("case_a.gamma_bar", c.gamma_bar, cr.mu0, 1e-10));
    rep.push(DiscrepancyRecord::compare("case_a.omega0", c.omega0, cr.omega0, 1e-10));
    rep.push(DiscrepancyRecord::compare("case_a.d_re_lambda", c.d_re_lambda, cr.d, 1e-8));
    let c0 = case_a_constants(a, al, be, c.gamma_bar)?;
    let dl = case_a_dlambda_dgamma(a, al, be, c.gamma_bar, Complex::new(0.0, c0.omega0))?;
    rep.push(
        DiscrepancyRecord::compare("case_a.d_re_lambda.printed_derivative_formula", dl.re, cr.d, 1e-8)
            .with_note("printed d lambda/d gamma at lambda = i omega0"),
    );
    let fd = printed_charpoly_crossing_slope(a, al, be, c.gamma_bar)?;
    rep.push(
        DiscrepancyRecord::compare("case_a.d_re_lambda.printed_charpoly_fd", fd, cr.d, 1e-8)
            .with_note("central difference of Re of the printed characteristic roots"),
    );
    rep.push(
        DiscrepancyRecord::compare("case_a.l1.closed_form", c.l1, hopf.l1, 1e-8)
            .with_note(format!("engine complex-coordinate route gives {:.17e}", hopf.l1_complex)),
    );
    rep.push(
        DiscrepancyRecord::compare("case_a.ell", c.ell, hopf.l1, 1e-8)
            .with_note("different normalization; only the sign is comparable"),
    );
    if let Some(cap) = caption_l1 {
        rep.push(DiscrepancyRecord::compare("case_a.l1.caption", cap, hopf.l1, 1e-8));
    }
    Ok(rep)
}

/// `dRe λ/dγ` at `γ` by central differences of the printed crossing-form
/// polynomial, with Richardson extrapolation.
pub fn printed_charpoly_crossing_slope(abar: f64, alpha: f64, beta: f64, gamma: f64) -> Result<f64> {
    let re = |g: f64| -> Result<f64> { Ok(-0.5 * case_a_constants(abar, alpha, beta, g)?.charpoly_crossing[0]) };
    let d = |h: f64| -> Result<f64> { Ok((re(gamma + h)? - re(gamma - h)?) / (2.0 * h)) };
    let h = 1e-3 * gamma.abs().max(1.0);
    Ok((4.0 * d(h / 2.0)? - d(h)?) / 3.0)
}

/// Printed Case B displays against the engine at `(r, z)`. `f₁`, `f₂` are
/// compared on the chart point `(r, 0)`.
pub fn case_b_display_records(f: &CaseBFamily, r: f64, z: f64, quad: &QuadratureSpec) -> Result<Vec<DiscrepancyRecord>> {
    let sys = f.standard_form()?;
    let av = Averager { sys: &sys, quad: *quad };
    let ex = av.expansion(&[r, z], TaylorBudget::new(3, 0, 3))?;
    let tag = format!("(r={r:.17e}, z={z:.17e})");
    let mut out = Vec::new();
    let mut push = |name: &str, printed: [f64; 2], engine: Vec<f64>| {
        for (k, comp) in ["r", "z"].iter().enumerate() {
            out.push(DiscrepancyRecord::compare(format!("case_b.{name}.{comp}_component"), printed[k], engine[k], ENGINE_TOL).with_note(tag.clone()));
        }
    };
    push("g1", case_b_g1(f, r, z)?, ex.value(1)?);
    push("g2", case_b_g2(f, r, z)?, ex.value(2)?);
    push("g2_regrouped", case_b_g2_variant(f, r, z, DisplayVariant::Corrected)?, ex.value(2)?);
    push("g3", case_b_g3(f, r, z)?, ex.value(3)?);
    let chart = BranchChart::radial_axis(0.5 * r, 2.0 * r);
    let red = reduce(&sys, &chart, &[r], quad)?;
    let note = format!("(r={r:.17e})");
    out.push(DiscrepancyRecord::compare("case_b.f1", case_b_f1(f, r)?, red.f(1)?[0], ENGINE_TOL).with_note(note.clone()));
    out.push(DiscrepancyRecord::compare("case_b.f2", case_b_f2(f, r)?, red.f(2)?[0], ENGINE_TOL).with_note(note.clone()));
    let ex5 = av.expansion(&[r, 0.0], TaylorBudget::default())?;
    for (variant, label) in [(DisplayVariant::AsPrinted, "as_printed"), (DisplayVariant::Corrected, "corrected")] {
        let pb = printed_bifurcation_functions(&ex5, variant)?;
        for i in 0..4 {
            out.push(
                DiscrepancyRecord::compare(format!("case_b.bif_{label}.f{}", i + 1), pb.f[i], red.f(i as u32 + 1)?[0], ENGINE_TOL)
                    .with_note(note.clone()),
            );
            out.push(
                DiscrepancyRecord::compare(format!("case_b.bif_{label}.gamma{}", i + 1), pb.gamma[i], red.c(i as u32 + 1)?[0], ENGINE_TOL)
                    .with_note(note.clone()),
            );
        }
    }
    Ok(out)
}

/// Case B constants against the engine's zero of `f₂` and its ladder.
pub fn case_b_findings(f: &CaseBFamily, bif: &BifurcationReport, ladder: &Ladder, captions: bool) -> Result<FindingsReport> {
    let mut rep = FindingsReport::default();
    let w = f.omega;
    let u = bif.u_star[0];
    let delta_engine = 3.0 * u * u / (16.0 * w * w);
    let delta = case_b_delta(f)?;
    rep.push(DiscrepancyRecord::from_printed("case_b.r_star", case_b_r_star(f)?, u, 1e-10));
    rep.push(DiscrepancyRecord::compare("case_b.delta", delta, delta_engine, 1e-10));
    let big = ladder.entries[0].series;
    let small = ladder.entries[1].series;
    let (l1, l2) = case_b_lambdas(f)?;
    let l1_engine = big[0] * w / (2.0 * PI);
    let l2_engine = small[2] * w.powi(3) / (2.0 * PI * delta_engine);
    rep.push(DiscrepancyRecord::compare("case_b.lambda1", l1, l1_engine, 1e-8));
    rep.push(DiscrepancyRecord::compare("case_b.lambda2", l2, l2_engine, 1e-6));
    rep.push(DiscrepancyRecord::compare("case_b.Lambda0_22", case_b_lambda0_22(f)?, big[0], 1e-8));
    rep.push(DiscrepancyRecord::compare("case_b.Lambda1_22", case_b_lambda1_22(f)?, big[1], 1e-6));
    rep.push(DiscrepancyRecord::compare("case_b.Lambda2_11", case_b_lambda2_11(f)?, small[2], 1e-6));
    rep.push(DiscrepancyRecord::compare("case_b.f2_slope_at_r_star", case_b_f2_slope(f, u)?, bif.det_df, 1e-8));
    if captions {
        rep.push(DiscrepancyRecord::compare("case_b.delta.caption", FIG1_CAPTION_DELTA, delta_engine, 1e-10));
        rep.push(DiscrepancyRecord::compare("case_b.delta.exact_rational", FIG1_DELTA_EXACT, delta, 0.0));
        rep.push(DiscrepancyRecord::compare("case_b.lambda1.caption", FIG1_CAPTION_LAMBDA1, l1_engine, 1e-8));
        rep.push(DiscrepancyRecord::compare("case_b.lambda2.caption", FIG1_CAPTION_LAMBDA2, l2_engine, 1e-6));
    }
    Ok(rep)
}

/// `f₂′(r)` of the printed closed form.
pub fn case_b_f2_slope(f: &CaseBFamily, r: f64) -> Result<f64> {
    let w = f.omega;
    let delta = case_b_delta(f)?;
    Ok(3.0 * PI * f.gamma[0] * (w * w - 1.0) / (16.0 * w.powi(5)) * (3.0 * r * r - 16.0 * w * w / 3.0 * delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn case_a_g1_substitution() {
        let g = case_a_g1_closed(1.0, 0.0, 1.0, 0.0, 1.0, 1.0).unwrap();
        assert!(close(g[0], -2.0 * PI, 1e-14) && close(g[1], 7.0 * PI, 1e-14), "{g:?}");
        let g = case_a_g1_closed(0.3, 1.0, 2.0, -1.0, 0.0, 0.7).unwrap();
        assert_eq!(g[0], 0.0);
        assert!(case_a_g1_closed(1.5, 0.0, 1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn figure_two_constants() {
        let c = case_a_constants(-1.0, 41.0, -38.0, 4.299).unwrap();
        assert!(close(c.d1, 1.299, 1e-12));
        assert!(close(c.d0, -1394.638, 1e-12));
        assert!(close(c.ell, 1043404.0, 1e-12));
        assert_eq!(c.gamma_bar, 3.0);
        assert!(close(c.omega0, 38.0, 1e-14));
        assert!(matches!(c.r_bar, PrintedValue::InvalidDomain { .. }));
        assert!(close(c.z_bar.value().unwrap().abs(), (38.0f64 / 36.701).sqrt(), 1e-12));
        assert!(close(c.l1, 1043404.0 / 25.0, 1e-12));
        let c0 = case_a_constants(0.7, 2.0, 0.0, 1.0).unwrap();
        assert_eq!(c0.ell, 0.0);
    }

    #[test]
    fn eliminated_zero_solves_printed_g1() {
        let [r, z] = case_a_g1_zero(-1.0, 41.0, -38.0, 4.299).unwrap().unwrap();
        let g = case_a_g1_closed(-1.0, 41.0, -38.0, 4.299, r, z).unwrap();
        assert!(g[0].abs() < 1e-9 && g[1].abs() < 1e-9, "{g:?}");
        assert!(r > 0.0);
        let (a, al, be, ga) = (-1.0f64, 41.0, -38.0, 4.299);
        assert!(close(a * a * r * z, -a * be + (al - ga) * (1.0 - a * a), 1e-12));
        let [r, z] = case_a_g1_zero(-1.0, 41.0, -38.0, 3.0).unwrap().unwrap();
        assert!(close(r, 38.0 * 2f64.sqrt(), 1e-12) && close(z, -0.5f64.sqrt(), 1e-12));
    }

    #[test]
    fn figure_one_rationals() {
        let f = CaseBFamily::figure_one();
        let d = case_b_delta(&f).unwrap();
        assert!((d - FIG1_DELTA_EXACT).abs() <= 4.0 * f64::EPSILON * d);
        assert!(((d - FIG1_CAPTION_DELTA) / d).abs() < 1e-4);
        let (l1, l2) = case_b_lambdas(&f).unwrap();
        assert_eq!(l1, -527.0 / 1024.0);
        assert_eq!(l2, -497.0 / 1024.0);
        assert!((l1 - FIG1_CAPTION_LAMBDA1).abs() < 1e-4);
        assert!((l2 - FIG1_CAPTION_LAMBDA2).abs() < 1e-4);
        let mut g = f.clone();
        g.gamma[0] = 0.0;
        assert!(case_b_delta(&g).is_err());
        g.omega = 1.0;
        assert!(case_b_g1(&g, 1.0, 0.0).is_err());
    }

    #[test]
    fn template_substitution() {
        let f = CaseBFamily {
            omega: 2.0,
            alpha: [0.0, 1.0, 0.0, 0.0, 0.0],
            beta: [0.0; 5],
            gamma: [0.0; 5],
        };
        let t = standard_analysis_template(&f, 1).unwrap();
        let g = t.eval(1.0, 1.0);
        assert!(close(g[0], PI / 8.0, 1e-15) && close(g[1], 3.0 * PI / 4.0, 1e-15));
        assert!(!t.has_zero_with_positive_radius());
        assert!(standard_analysis_template(&f, 2).is_err());
        let z = CaseBFamily { alpha: [0.0; 5], ..f };
        assert!(standard_analysis_template(&z, 4).unwrap().is_identically_zero());
    }

    #[test]
    fn invalid_domain_records() {
        let c = case_a_constants(-1.0, 41.0, -38.0, 4.299).unwrap();
        let rec = DiscrepancyRecord::from_printed("r_bar", c.r_bar, 53.74, 1e-9);
        assert_eq!(rec.verdict, Verdict::PrintedFormulaInvalidDomain);
        assert!(DiscrepancyRecord::compare("x", 1.0, 1.0 + 5e-7, 0.0).is_match());
        assert!(DiscrepancyRecord::compare("x", 1e-12, 5e-10, 0.0).is_match());
        assert!(!DiscrepancyRecord::compare("x", 1.0, 1.1, 0.0).is_match());
    }
}
