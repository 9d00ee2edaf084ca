//! Neimark–Sacker analysis: Hopf crossing of the mean field, real Jordan
//! normalization, the first Lyapunov coefficient, and numerical detection of
//! invariant closed curves of planar maps.

use std::f64::consts::PI;

use nalgebra::{Complex, Matrix2};
use serde::{Deserialize, Serialize};

use crate::averaging::{averaged_expansion, QuadratureSpec};
use crate::error::{Error, Result};
use crate::jets::{Jet, JetSpace, JetSpec};
use crate::stability::{NewtonSpec, RosslerSectionMap};
use crate::oracles::case_a_g1_zero;
use crate::systems::{CaseAFamily, StandardFormSystem, TaylorBudget};

/// Two-dimensional vector field family `x ↦ g(x; μ)`, delivered as jets.
pub trait PlanarFamily: Sync {
    /// Components of `g(x + δ; μ)` as polynomials in `δ` through `order`.
    fn field_jets(&self, x: [f64; 2], mu: f64, order: u32) -> Result<[Jet; 2]>;
}

/// Family given by a generic closure over jets.
pub struct ClosureFamily<F>(pub F);

impl<F> PlanarFamily for ClosureFamily<F>
where
    F: Fn(f64, &[Jet; 2]) -> Result<[Jet; 2]> + Sync,
{
    fn field_jets(&self, x: [f64; 2], mu: f64, order: u32) -> Result<[Jet; 2]> {
        let sp = JetSpace::new(JetSpec::uniform(2, order)?);
        let args = [sp.variable(0, x[0]), sp.variable(1, x[1])];
        (self.0)(mu, &args)
    }
}

/// Mean field `g₁/T` of a standard-form family built per parameter value.
pub struct MeanFieldFamily<F> {
    pub build: F,
    pub quad: QuadratureSpec,
}

impl<F, Sys> PlanarFamily for MeanFieldFamily<F>
where
    F: Fn(f64) -> Result<Sys> + Sync,
    Sys: StandardFormSystem,
{
    fn field_jets(&self, x: [f64; 2], mu: f64, order: u32) -> Result<[Jet; 2]> {
        let sys = (self.build)(mu)?;
        if sys.dim() != 2 {
            return Err(Error::UnsupportedShape("planar family needs dimension 2".into()));
        }
        let budget = TaylorBudget {
            eps: 1,
            state: order,
            total: order + 1,
        };
        let ex = averaged_expansion(&sys, &x, budget, &self.quad)?;
        let g = ex.g_jet(1)?;
        let t = sys.period();
        Ok([g[0].scale(1.0 / t), g[1].scale(1.0 / t)])
    }
}

fn jacobian_of(j: &[Jet; 2]) -> Matrix2<f64> {
    Matrix2::new(
        j[0].coeff(&[1, 0]),
        j[0].coeff(&[0, 1]),
        j[1].coeff(&[1, 0]),
        j[1].coeff(&[0, 1]),
    )
}

/// Equilibrium of `g(·; μ)` by Newton from `guess`.
pub fn equilibrium<P: PlanarFamily + ?Sized>(
    fam: &P,
    mu: f64,
    guess: [f64; 2],
    newton: &NewtonSpec,
) -> Result<([f64; 2], Matrix2<f64>)> {
    let mut x = guess;
    for _ in 0..newton.max_iter {
        let j = fam.field_jets(x, mu, 1)?;
        let g = [j[0].constant_term(), j[1].constant_term()];
        let jac = jacobian_of(&j);
        let step = jac
            .lu()
            .solve(&nalgebra::Vector2::new(-g[0], -g[1]))
            .ok_or_else(|| Error::NotConverged(format!("singular Jacobian at mu = {mu}")))?;
        x[0] += step[0];
        x[1] += step[1];
        if step.amax() <= 1e-13 * (1.0 + x[0].abs().max(x[1].abs())) {
            let j = fam.field_jets(x, mu, 1)?;
            let res = j[0].constant_term().abs().max(j[1].constant_term().abs());
            if res > 1e-9 {
                return Err(Error::NotConverged(format!("equilibrium residual {res:e} at mu = {mu}")));
            }
            return Ok((x, jacobian_of(&j)));
        }
    }
    Err(Error::NotConverged(format!("equilibrium Newton stalled at mu = {mu}")))
}

/// Real part of a complex eigenvalue pair, `None` when the spectrum is real.
fn complex_pair(j: &Matrix2<f64>) -> Option<(f64, f64)> {
    let tr = j.trace();
    let det = j.determinant();
    let disc = tr * tr / 4.0 - det;
    (disc < 0.0).then(|| (tr / 2.0, (-disc).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingData {
    pub mu0: f64,
    pub omega0: f64,
    /// `dα/dμ` at `μ₀`.
    pub d: f64,
    pub x0: [f64; 2],
    /// Equilibrium curve sampled on the continuation grid.
    pub curve: Vec<(f64, [f64; 2])>,
    pub residual_alpha: f64,
}

/// Settings of [`find_crossing`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingSpec {
    pub grid_steps: usize,
    pub alpha_tol: f64,
    /// Finite-difference step as a fraction of the range.
    pub fd_fraction: f64,
    pub floor: f64,
}

impl Default for CrossingSpec {
    fn default() -> Self {
        Self {
            grid_steps: 32,
            alpha_tol: 1e-10,
            fd_fraction: 1e-4,
            floor: 1e-9,
        }
    }
}

/// Locates `μ₀` where the equilibrium's complex pair crosses the imaginary
/// axis, starting from the equilibrium `seed` at `range.0`.
pub fn find_crossing<P: PlanarFamily + ?Sized>(
    fam: &P,
    range: (f64, f64),
    seed: [f64; 2],
    spec: &CrossingSpec,
) -> Result<CrossingData> {
    let newton = NewtonSpec {
        tol: 1e-12,
        max_iter: 40,
    };
    let (lo, hi) = range;
    let n = spec.grid_steps.max(2);
    let mut curve = Vec::with_capacity(n + 1);
    let mut x = seed;
    let mut prev: Option<(f64, [f64; 2], f64)> = None;
    let mut bracket = None;
    for k in 0..=n {
        let mu = lo + (hi - lo) * k as f64 / n as f64;
        let (xe, j) = equilibrium(fam, mu, x, &newton)?;
        x = xe;
        curve.push((mu, xe));
        let alpha = complex_pair(&j).map(|c| c.0);
        if let (Some((mp, xp, ap)), Some(a)) = (prev, alpha) {
            if bracket.is_none() && ap.signum() != a.signum() {
                bracket = Some((mp, xp, ap, mu, xe, a));
            }
        }
        prev = alpha.map(|a| (mu, xe, a));
        if alpha.is_none() {
            prev = None;
        }
    }
    let (mut a, mut xa, mut fa, mut b, _, _) = bracket
        .ok_or_else(|| Error::NoCrossing(format!("Re lambda keeps its sign on [{lo}, {hi}]")))?;
    let alpha_at = |mu: f64, guess: [f64; 2]| -> Result<(f64, f64, [f64; 2])> {
        let (xe, j) = equilibrium(fam, mu, guess, &newton)?;
        let (re, im) = complex_pair(&j)
            .ok_or_else(|| Error::NoCrossing(format!("real spectrum at mu = {mu}")))?;
        Ok((re, im, xe))
    };
    let (mut mu0, mut om, mut x0, mut res) = (a, 0.0, xa, fa);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let (fm, im, xm) = alpha_at(m, xa)?;
        (mu0, om, x0, res) = (m, im, xm, fm);
        if fm.abs() <= spec.alpha_tol || (b - a).abs() <= 4.0 * f64::EPSILON * m.abs().max(1.0) {
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
            xa = xm;
        } else {
            b = m;
        }
    }
    let h = spec.fd_fraction * (hi - lo).abs();
    let diff = |h: f64| -> Result<f64> {
        let (ap, _, _) = alpha_at(mu0 + h, x0)?;
        let (am, _, _) = alpha_at(mu0 - h, x0)?;
        Ok((ap - am) / (2.0 * h))
    };
    let (d1, d2) = (diff(h)?, diff(h / 2.0)?);
    let d = (4.0 * d2 - d1) / 3.0;
    if d.abs() < spec.floor || om < spec.floor {
        return Err(Error::Nondegeneracy(format!(
            "degenerate crossing: d = {d:e}, omega0 = {om:e}"
        )));
    }
    Ok(CrossingData {
        mu0,
        omega0: om,
        d,
        x0,
        curve,
        residual_alpha: res,
    })
}

/// `g` conjugated by `x = x₀ + P w`.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub p: Matrix2<f64>,
    pub field: [Jet; 2],
    pub omega0: f64,
    /// True when the supplied map failed to produce the rotation block.
    pub used_fallback: bool,
}

impl Normalized {
    pub fn jacobian(&self) -> Matrix2<f64> {
        jacobian_of(&self.field)
    }
}

fn is_canonical(j: &Matrix2<f64>, omega: f64, tol: f64) -> bool {
    (j[(0, 0)]).abs() <= tol
        && (j[(1, 1)]).abs() <= tol
        && (j[(0, 1)] + omega).abs() <= tol
        && (j[(1, 0)] - omega).abs() <= tol
}

/// Conjugates `g` (jets at the crossing equilibrium) to real Jordan form.
/// `candidate` is tried first; otherwise `P = [Im v, Re v]` from the
/// eigenvector of `iω₀`, scaled to unit determinant.
pub fn jordan_normalize(g: &[Jet; 2], candidate: Option<Matrix2<f64>>) -> Result<Normalized> {
    let j = jacobian_of(g);
    let (re, om) = complex_pair(&j).ok_or_else(|| {
        Error::Nondegeneracy("Jacobian has real eigenvalues; no rotation block".into())
    })?;
    let tol = 1e-9 * om.max(1.0);
    if re.abs() > tol {
        return Err(Error::Precondition(format!("Re lambda = {re:e} is not zero")));
    }
    let try_map = |p: Matrix2<f64>| -> Option<Matrix2<f64>> {
        let pinv = p.try_inverse()?;
        is_canonical(&(pinv * j * p), om, tol).then_some(p)
    };
    let mut used_fallback = false;
    let p = if is_canonical(&j, om, tol) {
        Matrix2::identity()
    } else if let Some(p) = candidate.and_then(try_map) {
        p
    } else {
        used_fallback = candidate.is_some();
        // (J − iω) v = 0 with v = (−J₀₁, J₀₀ − iω)
        let v = [
            Complex::new(-j[(0, 1)], 0.0),
            Complex::new(j[(0, 0)] - re, -om),
        ];
        let mut p = Matrix2::new(v[0].im, v[0].re, v[1].im, v[1].re);
        let det = p.determinant();
        if det.abs() < 1e-300 {
            return Err(Error::Nondegeneracy("defective Jacobian".into()));
        }
        p /= det.abs().sqrt();
        if p.determinant() < 0.0 {
            return Err(Error::Nondegeneracy("orientation-reversing normal form".into()));
        }
        try_map(p).ok_or_else(|| Error::Nondegeneracy("eigenvector conjugation failed".into()))?
    };
    let pinv = p.try_inverse().ok_or(Error::Nondegeneracy("singular map".into()))?;
    let sp = g[0].space().clone();
    let w = [sp.variable(0, 0.0), sp.variable(1, 0.0)];
    let delta = [
        w[0].scale(p[(0, 0)]).try_add(&w[1].scale(p[(0, 1)]))?,
        w[0].scale(p[(1, 0)]).try_add(&w[1].scale(p[(1, 1)]))?,
    ];
    let h0 = g[0].compose(&delta)?;
    let h1 = g[1].compose(&delta)?;
    let mut field = [
        h0.scale(pinv[(0, 0)]).try_add(&h1.scale(pinv[(0, 1)]))?,
        h0.scale(pinv[(1, 0)]).try_add(&h1.scale(pinv[(1, 1)]))?,
    ];
    // The normalized field is centred at its equilibrium.
    for f in field.iter_mut() {
        let c = f.constant_term();
        *f = f.add_constant(-c);
    }
    Ok(Normalized {
        p,
        field,
        omega0: om,
        used_fallback,
    })
}

struct Partials {
    xx: [f64; 2],
    xy: [f64; 2],
    yy: [f64; 2],
    xxx: [f64; 2],
    xxy: [f64; 2],
    xyy: [f64; 2],
    yyy: [f64; 2],
}

fn partials(g: &[Jet; 2]) -> Result<Partials> {
    let cap = g[0].spec().total_degree_cap();
    if cap < 3 {
        return Err(Error::OrderExceedsCap { order: 3, cap });
    }
    let c = |k: usize, e: [u32; 2], f: f64| g[k].coeff(&e) * f;
    let both = |e: [u32; 2], f: f64| [c(0, e, f), c(1, e, f)];
    Ok(Partials {
        xx: both([2, 0], 2.0),
        xy: both([1, 1], 1.0),
        yy: both([0, 2], 2.0),
        xxx: both([3, 0], 6.0),
        xxy: both([2, 1], 2.0),
        xyy: both([1, 2], 2.0),
        yyy: both([0, 3], 6.0),
    })
}

/// First Lyapunov coefficient of a field in real Jordan form at the origin.
pub fn lyapunov_l1(normalized: &[Jet; 2], omega0: f64) -> Result<f64> {
    if omega0.abs() < 1e-9 {
        return Err(Error::Nondegeneracy(format!("omega0 = {omega0:e} below floor")));
    }
    let d = partials(normalized)?;
    let third = d.xxx[0] + d.xyy[0] + d.xxy[1] + d.yyy[1];
    let second = d.xy[0] * (d.xx[0] + d.yy[0]) - d.xy[1] * (d.xx[1] + d.yy[1])
        - d.xx[0] * d.xx[1]
        + d.yy[0] * d.yy[1];
    Ok(third / 8.0 + second / (8.0 * omega0))
}

/// `2 Re c₁` from the complex coordinate `z = x + iy`, an independent route
/// to the same quantity as [`lyapunov_l1`].
pub fn lyapunov_l1_complex(normalized: &[Jet; 2], omega0: f64) -> Result<f64> {
    if omega0.abs() < 1e-9 {
        return Err(Error::Nondegeneracy(format!("omega0 = {omega0:e} below floor")));
    }
    let d = partials(normalized)?;
    let cx = |a: [f64; 2]| Complex::new(a[0], a[1]);
    let i = Complex::new(0.0, 1.0);
    let g20 = (cx(d.xx) - cx(d.yy) - i * cx(d.xy) * 2.0) / 4.0;
    let g11 = (cx(d.xx) + cx(d.yy)) / 4.0;
    let g21 = (cx(d.xxx) + cx(d.xyy) - i * (cx(d.xxy) + cx(d.yyy))) / 8.0;
    let c1 = i / (2.0 * omega0) * g20 * g11 + g21 / 2.0;
    Ok(2.0 * c1.re)
}

/// Planar map with an inverse.
pub trait PlaneMap: Sync {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2]>;
    fn apply_inverse(&self, p: [f64; 2]) -> Result<[f64; 2]>;

    /// Image and Jacobian; central differences unless overridden.
    fn apply_with_jacobian(&self, p: [f64; 2]) -> Result<([f64; 2], Matrix2<f64>)> {
        let q = self.apply(p)?;
        let mut m = Matrix2::zeros();
        for c in 0..2 {
            let h = 1e-6 * p[c].abs().max(1e-3);
            let mut a = p;
            let mut b = p;
            a[c] += h;
            b[c] -= h;
            let (fa, fb) = (self.apply(a)?, self.apply(b)?);
            for r in 0..2 {
                m[(r, c)] = (fa[r] - fb[r]) / (2.0 * h);
            }
        }
        Ok((q, m))
    }

    fn fixed_point(&self, guess: [f64; 2], newton: &NewtonSpec) -> Result<([f64; 2], Matrix2<f64>)> {
        let mut x = guess;
        for _ in 0..=newton.max_iter {
            let (q, m) = self.apply_with_jacobian(x)?;
            let r = nalgebra::Vector2::new(q[0] - x[0], q[1] - x[1]);
            if r.amax() <= newton.tol {
                return Ok((x, m));
            }
            let s = (m - Matrix2::identity())
                .lu()
                .solve(&(-r))
                .ok_or_else(|| Error::NotConverged("singular fixed-point Newton matrix".into()))?;
            x[0] += s[0];
            x[1] += s[1];
        }
        Err(Error::NotConverged(format!("fixed point not within {:e}", newton.tol)))
    }
}

impl PlaneMap for RosslerSectionMap {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        RosslerSectionMap::apply(self, &p)
    }
    fn apply_inverse(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        RosslerSectionMap::apply_inverse(self, &p)
    }
    fn apply_with_jacobian(&self, p: [f64; 2]) -> Result<([f64; 2], Matrix2<f64>)> {
        let (q, j, _) = RosslerSectionMap::apply_with_jacobian(self, &p)?;
        Ok((q, Matrix2::new(j[(0, 0)], j[(0, 1)], j[(1, 0)], j[(1, 1)])))
    }
}

/// Rotation by `2π·rotation` about `center`.
#[derive(Debug, Clone, Copy)]
pub struct RigidRotation {
    pub rotation: f64,
    pub center: [f64; 2],
}

impl RigidRotation {
    fn turn(&self, p: [f64; 2], sign: f64) -> [f64; 2] {
        let (s, c) = (sign * 2.0 * PI * self.rotation).sin_cos();
        let (x, y) = (p[0] - self.center[0], p[1] - self.center[1]);
        [self.center[0] + c * x - s * y, self.center[1] + s * x + c * y]
    }
}

impl PlaneMap for RigidRotation {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        Ok(self.turn(p, 1.0))
    }
    fn apply_inverse(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        Ok(self.turn(p, -1.0))
    }
}

/// `p ↦ M p`.
#[derive(Debug, Clone, Copy)]
pub struct LinearMap(pub Matrix2<f64>);

impl PlaneMap for LinearMap {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let v = self.0 * nalgebra::Vector2::new(p[0], p[1]);
        Ok([v[0], v[1]])
    }
    fn apply_inverse(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let inv = self.0.try_inverse().ok_or(Error::Nondegeneracy("singular map".into()))?;
        let v = inv * nalgebra::Vector2::new(p[0], p[1]);
        Ok([v[0], v[1]])
    }
}

/// Truncated normal form `ρ ↦ ρ(1 + μ + aρ²)`, `φ ↦ φ + 2πθ + bρ²`.
#[derive(Debug, Clone, Copy)]
pub struct NeimarkSackerNormalForm {
    pub mu: f64,
    pub a: f64,
    pub theta: f64,
    pub b: f64,
}

impl PlaneMap for NeimarkSackerNormalForm {
    fn apply(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let rho = p[0].hypot(p[1]);
        let phi = p[1].atan2(p[0]);
        let r1 = rho * (1.0 + self.mu + self.a * rho * rho);
        let p1 = phi + 2.0 * PI * self.theta + self.b * rho * rho;
        Ok([r1 * p1.cos(), r1 * p1.sin()])
    }

    fn apply_inverse(&self, p: [f64; 2]) -> Result<[f64; 2]> {
        let r1 = p[0].hypot(p[1]);
        let p1 = p[1].atan2(p[0]);
        let mut rho = r1 / (1.0 + self.mu);
        for _ in 0..60 {
            let f = rho * (1.0 + self.mu + self.a * rho * rho) - r1;
            let df = 1.0 + self.mu + 3.0 * self.a * rho * rho;
            if df <= 0.0 {
                return Err(Error::Escape { t: 0.0 });
            }
            let step = f / df;
            rho -= step;
            if step.abs() <= 1e-16 * (1.0 + rho) {
                break;
            }
        }
        let phi = p1 - 2.0 * PI * self.theta - self.b * rho * rho;
        Ok([rho * phi.cos(), rho * phi.sin()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeDirection {
    Forward,
    Reverse,
}

/// Thresholds for invariant-curve confirmation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub transient: usize,
    pub iterates: usize,
    pub closure_tol: f64,
    pub max_denominator: u32,
    pub rational_gap: f64,
    /// Convergence is declared below this fraction of the starting radius.
    pub converge_ratio: f64,
    /// Escape is declared above this multiple of the starting radius.
    pub escape_ratio: f64,
}

impl Default for CurveSpec {
    fn default() -> Self {
        Self {
            transient: 2000,
            iterates: 400,
            closure_tol: 1e-3,
            max_denominator: 6,
            rational_gap: 1e-3,
            converge_ratio: 1e-3,
            escape_ratio: 50.0,
        }
    }
}

/// Minimum number of recorded iterates for a confirmed curve.
pub const MIN_CURVE_ITERATES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CurveVerdict {
    Confirmed,
    ConvergedToFixedPoint,
    Resonant { p: i64, q: u32 },
    NotClosed,
}

impl CurveVerdict {
    pub fn label(&self) -> String {
        match self {
            CurveVerdict::Confirmed => "curve confirmed".into(),
            CurveVerdict::ConvergedToFixedPoint => "no curve: converged to fixed point".into(),
            CurveVerdict::Resonant { p, q } => format!("no curve: resonant chain near {p}/{q}"),
            CurveVerdict::NotClosed => "no curve: points do not close up".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CurveReport {
    pub direction: TimeDirection,
    pub verdict: CurveVerdict,
    pub points: Vec<[f64; 2]>,
    pub closure_defect: f64,
    pub diameter: f64,
    pub rotation_number: f64,
    pub mean_radius: f64,
    pub iterations: usize,
}

impl CurveReport {
    pub fn confirmed(&self) -> bool {
        self.verdict == CurveVerdict::Confirmed
    }
}

fn nearest_rational(x: f64, qmax: u32) -> (i64, u32, f64) {
    let mut best = (0, 1, f64::INFINITY);
    for q in 1..=qmax {
        let p = (x * f64::from(q)).round();
        let gap = (x - p / f64::from(q)).abs();
        if gap < best.2 - 1e-15 {
            best = (p as i64, q, gap);
        }
    }
    best
}

/// Largest distance from a point to the chord through its two neighbours
/// when the orbit is ordered by dynamical phase `k·ρ mod 1`. Small for
/// points on a closed curve carrying a rotation by `ρ`, of the order of the
/// radial spread otherwise.
pub fn closure_defect(points: &[[f64; 2]], rotation_number: f64) -> f64 {
    let n = points.len();
    if n < 3 || !rotation_number.is_finite() {
        return f64::INFINITY;
    }
    let mut order: Vec<(f64, usize)> = (0..n)
        .map(|k| ((k as f64 * rotation_number).rem_euclid(1.0), k))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let a = points[order[(i + n - 1) % n].1];
        let p = points[order[i].1];
        let b = points[order[(i + 1) % n].1];
        let (ux, uy) = (b[0] - a[0], b[1] - a[1]);
        let len2 = ux * ux + uy * uy;
        let t = if len2 > 0.0 {
            (((p[0] - a[0]) * ux + (p[1] - a[1]) * uy) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        worst = worst.max((p[0] - a[0] - t * ux).hypot(p[1] - a[1] - t * uy));
    }
    worst
}

fn diameter(points: &[[f64; 2]]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            d = d.max((p[0] - q[0]).hypot(p[1] - q[1]));
        }
    }
    d
}

/// Iterates `map` (or its inverse) from `seed` and classifies the orbit
/// relative to the fixed point `center`.
pub fn detect_invariant_curve<M: PlaneMap + ?Sized>(
    map: &M,
    center: [f64; 2],
    seed: [f64; 2],
    direction: TimeDirection,
    spec: &CurveSpec,
) -> Result<CurveReport> {
    if spec.iterates < MIN_CURVE_ITERATES {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_CURVE_ITERATES} iterates are required"
        )));
    }
    let step = |p: [f64; 2]| match direction {
        TimeDirection::Forward => map.apply(p),
        TimeDirection::Reverse => map.apply_inverse(p),
    };
    let radius = |p: [f64; 2]| (p[0] - center[0]).hypot(p[1] - center[1]);
    let r0 = radius(seed);
    if r0 == 0.0 {
        return Err(Error::InvalidParameter("seed coincides with the fixed point".into()));
    }
    let mut p = seed;
    let mut points = Vec::with_capacity(spec.iterates);
    let mut angle_sum = 0.0;
    let mut angle_steps = 0usize;
    let total = spec.transient + spec.iterates;
    for it in 0..total {
        let q = step(p).map_err(|e| match e {
            Error::Escape { .. } | Error::NoCrossing(_) | Error::NotTransversal(_) => {
                Error::Escape { t: it as f64 }
            }
            other => other,
        })?;
        let rq = radius(q);
        if !rq.is_finite() || rq > spec.escape_ratio * r0 {
            return Err(Error::Escape { t: it as f64 });
        }
        if rq < spec.converge_ratio * r0 {
            return Ok(CurveReport {
                direction,
                verdict: CurveVerdict::ConvergedToFixedPoint,
                points,
                closure_defect: f64::NAN,
                diameter: 0.0,
                rotation_number: f64::NAN,
                mean_radius: rq,
                iterations: it + 1,
            });
        }
        // The rotation number is averaged from mid-transient on.
        if it >= spec.transient / 2 {
            let a0 = (p[1] - center[1]).atan2(p[0] - center[0]);
            let a1 = (q[1] - center[1]).atan2(q[0] - center[0]);
            let mut da = a1 - a0;
            da -= 2.0 * PI * (da / (2.0 * PI)).round();
            angle_sum += da;
            angle_steps += 1;
        }
        if it >= spec.transient {
            points.push(q);
        }
        p = q;
    }
    let rotation_number = angle_sum / (2.0 * PI * angle_steps as f64);
    let radii: Vec<f64> = points.iter().map(|&q| radius(q)).collect();
    let mean_radius = radii.iter().sum::<f64>() / radii.len() as f64;
    let diam = diameter(&points);
    let defect = closure_defect(&points, rotation_number);
    let (pp, qq, gap) = nearest_rational(rotation_number, spec.max_denominator);
    let verdict = if defect > spec.closure_tol * diam {
        CurveVerdict::NotClosed
    } else if gap < spec.rational_gap {
        CurveVerdict::Resonant { p: pp, q: qq }
    } else {
        CurveVerdict::Confirmed
    };
    Ok(CurveReport {
        direction,
        verdict,
        points,
        closure_defect: defect,
        diameter: diam,
        rotation_number,
        mean_radius,
        iterations: total,
    })
}

/// Outcome of one detection run inside a scan.
#[derive(Debug, Clone, Serialize)]
pub struct ScanOutcome {
    pub seed: [f64; 2],
    pub direction: TimeDirection,
    pub label: String,
    pub confirmed: bool,
    pub closure_defect: f64,
    pub diameter: f64,
    pub rotation_number: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeRow {
    pub mu: f64,
    pub fixed_point: [f64; 2],
    pub multiplier_modulus: f64,
    pub fixed_point_stable: bool,
    pub outcomes: Vec<ScanOutcome>,
}

impl RegimeRow {
    pub fn curve_found(&self) -> bool {
        self.outcomes.iter().any(|o| o.confirmed)
    }

    /// `Some(true)` for an attracting curve, `Some(false)` for a repelling one.
    pub fn curve_attracting(&self) -> Option<bool> {
        let fwd = self.outcomes.iter().any(|o| o.confirmed && o.direction == TimeDirection::Forward);
        let rev = self.outcomes.iter().any(|o| o.confirmed && o.direction == TimeDirection::Reverse);
        match (fwd, rev) {
            (true, false) => Some(true),
            (false, true) => Some(false),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Below,
    Above,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeTable {
    pub rows: Vec<RegimeRow>,
    /// Parameter where the fixed point's multipliers cross the unit circle.
    pub boundary: Option<f64>,
    pub existence_side: Option<Side>,
    /// Curves appear on one side of the boundary only.
    pub one_sided: bool,
    /// Common stability of the curves found, when unanimous.
    pub curve_attracting: Option<bool>,
}

impl RegimeTable {
    /// Agreement of the observed curve stability and existence side with
    /// the sign of `ℓ₁`: `ℓ₁ > 0` gives repelling curves on the side
    /// where the fixed point is stable, `ℓ₁ < 0` attracting curves where
    /// it is unstable.
    pub fn consistent_with(&self, l1: f64) -> bool {
        if l1 == 0.0 || !l1.is_finite() {
            return false;
        }
        let Some(att) = self.curve_attracting else {
            return false;
        };
        if att != (l1 < 0.0) {
            return false;
        }
        self.rows
            .iter()
            .filter(|r| r.curve_found())
            .all(|r| r.fixed_point_stable == (l1 > 0.0))
    }
}

/// Settings of [`torus_regime_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub grid: Vec<f64>,
    /// Seeds as offsets from the fixed point.
    pub seed_offsets: Vec<[f64; 2]>,
    pub curve: CurveSpec,
    pub boundary_resolution: f64,
    pub newton: NewtonSpec,
}

fn spectral_radius(m: &Matrix2<f64>) -> f64 {
    m.complex_eigenvalues().iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Fixed point, invariant-curve search in both time directions at every
/// grid value, and the stability boundary of the fixed point.
pub fn torus_regime_scan<M, F>(family: F, guess: [f64; 2], spec: &ScanSpec) -> Result<RegimeTable>
where
    M: PlaneMap,
    F: Fn(f64) -> Result<M> + Sync,
{
    let mut fixed = Vec::with_capacity(spec.grid.len());
    let mut g = guess;
    for &mu in &spec.grid {
        let map = family(mu)?;
        let (x, m) = map.fixed_point(g, &spec.newton)?;
        g = x;
        fixed.push((mu, x, spectral_radius(&m)));
    }
    let rows: Vec<RegimeRow> = std::thread::scope(|s| {
        let handles: Vec<_> = fixed
            .iter()
            .map(|&(mu, x, rho)| {
                let family = &family;
                s.spawn(move || -> Result<RegimeRow> {
                    let map = family(mu)?;
                    let mut outcomes = Vec::new();
                    for off in &spec.seed_offsets {
                        let seed = [x[0] + off[0], x[1] + off[1]];
                        for dir in [TimeDirection::Forward, TimeDirection::Reverse] {
                            let o = match detect_invariant_curve(&map, x, seed, dir, &spec.curve) {
                                Ok(r) => ScanOutcome {
                                    seed,
                                    direction: dir,
                                    label: r.verdict.label(),
                                    confirmed: r.confirmed(),
                                    closure_defect: r.closure_defect,
                                    diameter: r.diameter,
                                    rotation_number: r.rotation_number,
                                    iterations: r.iterations,
                                },
                                Err(e) => ScanOutcome {
                                    seed,
                                    direction: dir,
                                    label: format!("no curve: {e}"),
                                    confirmed: false,
                                    closure_defect: f64::NAN,
                                    diameter: f64::NAN,
                                    rotation_number: f64::NAN,
                                    iterations: 0,
                                },
                            };
                            outcomes.push(o);
                        }
                    }
                    Ok(RegimeRow {
                        mu,
                        fixed_point: x,
                        multiplier_modulus: rho,
                        fixed_point_stable: rho < 1.0,
                        outcomes,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("scan worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut boundary = None;
    for w in rows.windows(2) {
        if w[0].fixed_point_stable != w[1].fixed_point_stable {
            let (mut a, mut b) = (w[0].mu, w[1].mu);
            let sa = w[0].fixed_point_stable;
            let mut x = w[0].fixed_point;
            while (b - a).abs() > spec.boundary_resolution {
                let m = 0.5 * (a + b);
                let map = family(m)?;
                let (xm, jm) = map.fixed_point(x, &spec.newton)?;
                if (spectral_radius(&jm) < 1.0) == sa {
                    a = m;
                    x = xm;
                } else {
                    b = m;
                }
            }
            boundary = Some(0.5 * (a + b));
            break;
        }
    }
    let found: Vec<&RegimeRow> = rows.iter().filter(|r| r.curve_found()).collect();
    let (existence_side, one_sided) = match boundary {
        Some(bd) if !found.is_empty() => {
            let below = found.iter().all(|r| r.mu < bd);
            let above = found.iter().all(|r| r.mu > bd);
            let side = if below {
                Some(Side::Below)
            } else if above {
                Some(Side::Above)
            } else {
                None
            };
            (side, below || above)
        }
        _ => (None, false),
    };
    let verdicts: Vec<Option<bool>> = found.iter().map(|r| r.curve_attracting()).collect();
    let curve_attracting = match verdicts.first() {
        Some(&v) if verdicts.iter().all(|x| *x == v) => v,
        _ => None,
    };
    Ok(RegimeTable {
        rows,
        boundary,
        existence_side,
        one_sided,
        curve_attracting,
    })
}

/// Crossing, normalization and `ℓ₁` of the Case A mean field.
#[derive(Debug, Clone, Serialize)]
pub struct HopfAnalysis {
    pub crossing: CrossingData,
    pub normalization: [[f64; 2]; 2],
    pub used_fallback: bool,
    pub l1: f64,
    pub l1_complex: f64,
}

/// Runs the Hopf pipeline on `g₁/2π` over `γ ∈ [γ̄ − half_width, γ̄ + half_width]`.
/// `candidate` is tried as the Jordan map before the eigenvector fallback.
pub fn case_a_hopf(
    base: &CaseAFamily,
    half_width: f64,
    candidate: Option<Matrix2<f64>>,
    quad: &QuadratureSpec,
    spec: &CrossingSpec,
) -> Result<HopfAnalysis> {
    let b = *base;
    let fam = MeanFieldFamily {
        build: move |g: f64| b.with_gamma(g).standard_form(),
        quad: *quad,
    };
    let gb = base.gamma_bar();
    let lo = gb - half_width;
    let seed = case_a_g1_zero(b.abar, b.alpha, b.beta, lo)?
        .ok_or_else(|| Error::NoZeroFound(format!("no equilibrium seed at gamma = {lo}")))?;
    let crossing = find_crossing(&fam, (lo, gb + half_width), seed, spec)?;
    let g = fam.field_jets(crossing.x0, crossing.mu0, 3)?;
    let n = jordan_normalize(&g, candidate)?;
    let l1 = lyapunov_l1(&n.field, n.omega0)?;
    let l1_complex = lyapunov_l1_complex(&n.field, n.omega0)?;
    Ok(HopfAnalysis {
        crossing,
        normalization: [[n.p[(0, 0)], n.p[(0, 1)]], [n.p[(1, 0)], n.p[(1, 1)]]],
        used_fallback: n.used_fallback,
        l1,
        l1_complex,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusReport {
    pub l1: f64,
    /// `sign(ℓ₁(μ − μ(ε)))`; existence requires −1.
    pub side_sign: f64,
    pub curve: Option<CurveReport>,
    pub curve_stable: Option<bool>,
    pub orbit_stable: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hopf(omega: f64, sigma: f64) -> impl Fn(f64, &[Jet; 2]) -> Result<[Jet; 2]> + Sync {
        move |mu: f64, v: &[Jet; 2]| {
            let (x, y) = (&v[0], &v[1]);
            let r2 = x.try_mul(x)?.try_add(&y.try_mul(y)?)?;
            Ok([
                x.scale(mu).try_sub(&y.scale(omega))?.try_add(&x.try_mul(&r2)?.scale(sigma))?,
                x.scale(omega).try_add(&y.scale(mu))?.try_add(&y.try_mul(&r2)?.scale(sigma))?,
            ])
        }
    }

    #[test]
    fn normal_form_crossing_and_l1() {
        let fam = ClosureFamily(hopf(1.0, -1.0));
        let c = find_crossing(&fam, (-0.5, 0.7), [0.0, 0.0], &CrossingSpec::default()).unwrap();
        assert!(c.mu0.abs() < 1e-10);
        assert!((c.omega0 - 1.0).abs() < 1e-12 && (c.d - 1.0).abs() < 1e-8);
        let g = fam.field_jets(c.x0, c.mu0, 3).unwrap();
        let n = jordan_normalize(&g, None).unwrap();
        assert_eq!(n.p, Matrix2::identity());
        assert!((lyapunov_l1(&n.field, 1.0).unwrap() + 2.0).abs() < 1e-12);
        assert!((lyapunov_l1_complex(&n.field, 1.0).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn normalization_preserves_spectrum() {
        let sp = JetSpace::new(JetSpec::uniform(2, 3).unwrap());
        let (x, y) = (sp.variable(0, 0.0), sp.variable(1, 0.0));
        // J = [[1, -2], [1.25, -1]]: eigenvalues ±i·0.5·√6…
        let g = [
            x.try_sub(&y.scale(2.0)).unwrap().try_add(&x.powi(2)).unwrap(),
            x.scale(1.25).try_sub(&y).unwrap().try_add(&x.try_mul(&y.powi(2)).unwrap()).unwrap(),
        ];
        let n = jordan_normalize(&g, None).unwrap();
        let om = (2.5f64 - 1.0).sqrt();
        assert!((n.omega0 - om).abs() < 1e-12);
        assert!(is_canonical(&n.jacobian(), om, 1e-12));
        let a = lyapunov_l1(&n.field, om).unwrap();
        let b = lyapunov_l1_complex(&n.field, om).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn rigid_rotation_curve() {
        let rot = (5f64.sqrt() - 1.0) / 2.0 * 0.1;
        let m = RigidRotation { rotation: rot, center: [1.0, -1.0] };
        let spec = CurveSpec { transient: 0, ..Default::default() };
        let r = detect_invariant_curve(&m, [1.0, -1.0], [1.3, -1.0], TimeDirection::Forward, &spec).unwrap();
        assert!(r.confirmed());
        assert!((r.rotation_number - rot).abs() < 1e-12);
        assert!(r.closure_defect < 1e-3 * r.diameter);
    }

    #[test]
    fn stable_focus_converges() {
        let (c, s) = (0.3f64.cos() * 0.9, 0.3f64.sin() * 0.9);
        let m = LinearMap(Matrix2::new(c, -s, s, c));
        let r = detect_invariant_curve(&m, [0.0, 0.0], [0.1, 0.0], TimeDirection::Forward, &CurveSpec::default()).unwrap();
        assert_eq!(r.verdict, CurveVerdict::ConvergedToFixedPoint);
        assert_eq!(r.verdict.label(), "no curve: converged to fixed point");
    }

    #[test]
    fn synthetic_supercritical_scan() {
        let fam = |mu: f64| -> Result<NeimarkSackerNormalForm> {
            Ok(NeimarkSackerNormalForm { mu, a: -1.0, theta: 0.1234, b: 0.3 })
        };
        let spec = ScanSpec {
            grid: vec![-0.02, -0.01, 0.01, 0.02],
            seed_offsets: vec![[0.05, 0.0]],
            curve: CurveSpec { transient: 3000, ..Default::default() },
            boundary_resolution: 1e-3,
            newton: NewtonSpec::default(),
        };
        let t = torus_regime_scan(fam, [0.0, 0.0], &spec).unwrap();
        assert!(t.boundary.unwrap().abs() <= 1e-3);
        assert_eq!(t.existence_side, Some(Side::Above));
        assert!(t.one_sided);
        assert_eq!(t.curve_attracting, Some(true));
        assert!(t.consistent_with(-2.0));
        assert!(!t.consistent_with(2.0));
    }
}
