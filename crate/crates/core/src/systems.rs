//! Rössler vector field, its zero-Hopf families and the standard-form systems
//! obtained from them by exact coordinate changes.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{extract_tensor_at, Jet, JetSpace, JetSpec, Scalar, SymTensor};

/// Parameters of `ẋ = −y − z, ẏ = x + a y, ż = b x − c z + x z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RosslerParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

pub fn rossler_rhs(p: &RosslerParams, s: &[f64; 3]) -> [f64; 3] {
    let [x, y, z] = *s;
    [-y - z, x + p.a * y, p.b * x - p.c * z + x * z]
}

pub fn rossler_jacobian(p: &RosslerParams, s: &[f64; 3]) -> [[f64; 3]; 3] {
    let [x, _, z] = *s;
    [
        [0.0, -1.0, -1.0],
        [1.0, p.a, 0.0],
        [p.b + z, 0.0, x - p.c],
    ]
}

/// Axis-aligned box `Ω` of admissible states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DomainBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.iter().zip(&upper).any(|(l, u)| !(l < u)) {
            return Err(Error::InvalidParameter(format!(
                "domain box bounds {lower:?} / {upper:?} are not ordered"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// Default cylindrical box `r ∈ [1e-3, 100]`, `z ∈ [−100, 100]`.
    pub fn cylindrical_default() -> Self {
        Self {
            lower: vec![1e-3, -100.0],
            upper: vec![100.0, 100.0],
        }
    }

    pub fn unbounded(n: usize) -> Self {
        Self {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.lower.len()
            && z
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn check(&self, z: &[f64]) -> Result<()> {
        if self.contains(z) {
            Ok(())
        } else {
            Err(Error::DomainViolation(format!(
                "{z:?} is outside [{:?}, {:?}]",
                self.lower, self.upper
            )))
        }
    }

    fn require_positive_radius(&self) -> Result<()> {
        if self.lower[0] <= 0.0 {
            Err(Error::DomainViolation(format!(
                "cylindrical chart needs r > 0, box starts at r = {}",
                self.lower[0]
            )))
        } else {
            Ok(())
        }
    }
}

/// A `T`-periodic system `ẋ = Σ εⁱ Fᵢ(t, x)` whose right-hand side can be
/// evaluated in any [`Scalar`] arithmetic.
pub trait StandardFormSystem: Sync {
    fn dim(&self) -> usize;

    fn period(&self) -> f64 {
        2.0 * PI
    }

    fn domain(&self) -> &DomainBox;

    fn rhs<S: Scalar>(&self, t: f64, x: &[S], eps: &S) -> Result<Vec<S>>;

    /// Plain floating-point evaluation.
    fn rhs_f64(&self, t: f64, x: &[f64], eps: f64) -> Result<Vec<f64>> {
        self.rhs(t, x, &eps)
    }
}

/// Systems with a linear embedding into Rössler coordinates.
pub trait RosslerEmbedding {
    fn rossler_params(&self, eps: f64) -> RosslerParams;
    /// Original coordinates of the point with angle `theta` and state `x`.
    fn to_original(&self, theta: f64, x: &[f64], eps: f64) -> [f64; 3];
    /// Angle and state of an original-coordinate point.
    fn from_original(&self, p: &[f64; 3], eps: f64) -> (f64, Vec<f64>);
}

fn horner<S: Scalar>(eps: &S, coeffs: &[f64]) -> S {
    // Σ_{i≥1} coeffs[i-1] εⁱ
    let mut acc = eps.constant_like(0.0);
    for &c in coeffs.iter().rev() {
        acc = (acc + c) * eps.clone();
    }
    acc
}

fn reparam_error(e: Error) -> Error {
    match e {
        Error::DivisionSingularity => {
            Error::Reparameterization("angular velocity vanishes at this state".into())
        }
        other => other,
    }
}

/// Case A: `(a, b, c) = (ā + εα, 1 + εβ, ā + εγ)`, taken exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseAFamily {
    pub abar: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CaseAFamily {
    pub fn new(abar: f64, alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(abar != 0.0 && abar * abar < 2.0) {
            return Err(Error::InvalidParameter(format!(
                "Case A needs abar != 0 and abar^2 < 2, got abar = {abar}"
            )));
        }
        if ![alpha, beta, gamma].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("Case A coefficients must be finite".into()));
        }
        Ok(Self {
            abar,
            alpha,
            beta,
            gamma,
        })
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self { gamma, ..*self }
    }

    /// `γ̄ = α − āβ`.
    pub fn gamma_bar(&self) -> f64 {
        self.alpha - self.abar * self.beta
    }

    pub fn standard_form(&self) -> Result<CaseASystem> {
        CaseASystem::new(*self, DomainBox::cylindrical_default())
    }
}

/// The standard form of Case A in `(r, z)` with the angle as time.
#[derive(Debug, Clone)]
pub struct CaseASystem {
    pub family: CaseAFamily,
    p: Matrix3<f64>,
    pinv: Matrix3<f64>,
    domain: DomainBox,
}

impl CaseASystem {
    pub fn new(family: CaseAFamily, domain: DomainBox) -> Result<Self> {
        domain.require_positive_radius()?;
        let ab = family.abar;
        let s = (2.0 - ab * ab).sqrt();
        let p = Matrix3::new(
            1.0,
            -ab / s,
            1.0,
            0.0,
            1.0 / s,
            -1.0 / ab,
            ab,
            -(ab * ab - 1.0) / s,
            1.0 / ab,
        );
        let pinv = p
            .try_inverse()
            .ok_or_else(|| Error::InvalidParameter("singular Case A transformation".into()))?;
        Ok(Self {
            family,
            p,
            pinv,
            domain,
        })
    }

    /// Rotation rate of the unperturbed linear flow, `√(2 − ā²)`.
    pub fn rotation_rate(&self) -> f64 {
        (2.0 - self.family.abar.powi(2)).sqrt()
    }

    /// `dθ/dt` as a function of the state.
    pub fn angular_velocity<S: Scalar>(&self, t: f64, x: &[S], eps: &S) -> Result<S> {
        let (_, q, r) = self.raw(t, x, eps)?;
        q.try_div(&r)
    }

    fn raw<S: Scalar>(&self, t: f64, x: &[S], eps: &S) -> Result<(Vec<S>, S, S)> {
        let f = &self.family;
        let (sn, cs) = t.sin_cos();
        let r = x[0].clone();
        let zc = x[1].clone();
        let big_x = r.clone() * cs;
        let big_y = r.clone() * sn;
        let big_z = r.clone() * zc.clone();
        let m = &self.p;
        let lin = |i: usize| {
            big_x.clone() * m[(i, 0)] + big_y.clone() * m[(i, 1)] + big_z.clone() * m[(i, 2)]
        };
        let (xs, ys, zs) = (lin(0), lin(1), lin(2));
        let a = eps.clone() * f.alpha + f.abar;
        let b = eps.clone() * f.beta + 1.0;
        let c = eps.clone() * f.gamma + f.abar;
        let dxs = -(ys.clone() + zs.clone());
        let dys = xs.clone() + a * ys;
        let dzs = b * xs.clone() - c * zs.clone() + eps.clone() * xs * zs;
        let mi = &self.pinv;
        let back = |i: usize| {
            dxs.clone() * mi[(i, 0)] + dys.clone() * mi[(i, 1)] + dzs.clone() * mi[(i, 2)]
        };
        let (dx, dy, dz) = (back(0), back(1), back(2));
        let rdot = dx.clone() * cs + dy.clone() * sn;
        // q = r θ̇
        let q = dy * cs - dx * sn;
        let zdot_num = dz - zc * rdot.clone();
        Ok((vec![r.clone() * rdot, zdot_num], q, r))
    }
}

impl StandardFormSystem for CaseASystem {
    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn rhs<S: Scalar>(&self, t: f64, x: &[S], eps: &S) -> Result<Vec<S>> {
        let (num, q, _) = self.raw(t, x, eps)?;
        let inv = q.try_recip().map_err(reparam_error)?;
        Ok(num.into_iter().map(|v| v * inv.clone()).collect())
    }
}

impl RosslerEmbedding for CaseASystem {
    fn rossler_params(&self, eps: f64) -> RosslerParams {
        let f = &self.family;
        RosslerParams {
            a: f.abar + eps * f.alpha,
            b: 1.0 + eps * f.beta,
            c: f.abar + eps * f.gamma,
        }
    }

    fn to_original(&self, theta: f64, x: &[f64], eps: f64) -> [f64; 3] {
        let (sn, cs) = theta.sin_cos();
        let v = nalgebra::Vector3::new(x[0] * cs, x[0] * sn, x[0] * x[1]);
        let o = self.p * v * eps;
        [o[0], o[1], o[2]]
    }

    fn from_original(&self, p: &[f64; 3], eps: f64) -> (f64, Vec<f64>) {
        let v = self.pinv * nalgebra::Vector3::new(p[0], p[1], p[2]) / eps;
        let r = v[0].hypot(v[1]);
        (v[1].atan2(v[0]), vec![r, v[2] / r])
    }
}

/// Guard distance of `ω` from the resonances `1` and `√2`.
pub const DEFAULT_OMEGA_GUARD: f64 = 1e-6;

/// Case B: `(a, b, c) = (α(ε), ω² − 1 + β(ε), γ(ε))` with quintic series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseBFamily {
    pub omega: f64,
    pub alpha: [f64; 5],
    pub beta: [f64; 5],
    pub gamma: [f64; 5],
}

impl CaseBFamily {
    pub fn new(omega: f64, alpha: [f64; 5], beta: [f64; 5], gamma: [f64; 5]) -> Result<Self> {
        Self::with_guard(omega, alpha, beta, gamma, DEFAULT_OMEGA_GUARD)
    }

    pub fn with_guard(
        omega: f64,
        alpha: [f64; 5],
        beta: [f64; 5],
        gamma: [f64; 5],
        guard: f64,
    ) -> Result<Self> {
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter(format!("omega must be positive, got {omega}")));
        }
        if (omega - 1.0).abs() < guard || (omega - 2f64.sqrt()).abs() < guard {
            return Err(Error::InvalidParameter(format!(
                "omega = {omega} is within {guard:e} of a resonance (1 or sqrt 2)"
            )));
        }
        Ok(Self {
            omega,
            alpha,
            beta,
            gamma,
        })
    }

    /// The Fig-1 parameter set; `α₁`, `α₂` follow from the branch constraints.
    pub fn figure_one() -> Self {
        let omega = 39.0 / 32.0;
        let w2 = omega * omega;
        let beta = [-1.0, -1.0, -17.7, -1.0, 18.0];
        let gamma = [1.0, -1.0, 0.0, 19.3, -24.7];
        let a1 = gamma[0] * (w2 - 1.0);
        let a2 = beta[0] * gamma[0] + gamma[1] * (w2 - 1.0);
        Self {
            omega,
            alpha: [a1, a2, 55.0, 37.0 / 40.0, 11.4],
            beta,
            gamma,
        }
    }

    pub fn standard_form(&self) -> Result<CaseBSystem> {
        CaseBSystem::new(self.clone(), DomainBox::cylindrical_default())
    }
}

/// The standard form of Case B in `(r, z)` with the angle as time.
#[derive(Debug, Clone)]
pub struct CaseBSystem {
    pub family: CaseBFamily,
    domain: DomainBox,
}

impl CaseBSystem {
    pub fn new(family: CaseBFamily, domain: DomainBox) -> Result<Self> {
        domain.require_positive_radius()?;
        Ok(Self { family, domain })
    }

    pub fn angular_velocity<S: Scalar>(&self, t: f64, x: &[S], eps: &S) -> Result<S> {
        let (_, q) = self.raw(t, x, eps);
        q.try_div(&x[0])
    }

    fn raw<S: Scalar>(&self, t: f64, x: &[S], eps: &S) -> (Vec<S>, S) {
        let f = &self.family;
        let w = f.omega;
        let (sn, cs) = t.sin_cos();
        let r = x[0].clone();
        let big_x = r.clone() * cs;
        let big_y = r.clone() * sn;
        let big_z = x[1].clone();
        let xs = big_x;
        let ys = big_y.clone() / w + big_z.clone();
        let zs = big_y * (w - 1.0 / w) - big_z;
        let a = horner(eps, &f.alpha);
        let b = horner(eps, &f.beta) + (w * w - 1.0);
        let c = horner(eps, &f.gamma);
        let dxs = -(ys.clone() + zs.clone());
        let dys = xs.clone() + a * ys;
        let dzs = b * xs.clone() - c * zs.clone() + eps.clone() * xs * zs;
        let dx = dxs;
        let dy = (dys.clone() + dzs) / w;
        let dz = dys - dy.clone() / w;
        let rdot = dx.clone() * cs + dy.clone() * sn;
        let q = dy * cs - dx * sn;
        (vec![r * rdot, x[0].clone() * dz], q)
    }
}

impl StandardFormSystem for CaseBSystem {
    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn rhs<S: Scalar>(&self, t: f64, x: &[S], eps: &S) -> Result<Vec<S>> {
        let (num, q) = self.raw(t, x, eps);
        let inv = q.try_recip().map_err(reparam_error)?;
        Ok(num.into_iter().map(|v| v * inv.clone()).collect())
    }
}

impl RosslerEmbedding for CaseBSystem {
    fn rossler_params(&self, eps: f64) -> RosslerParams {
        let f = &self.family;
        let poly = |c: &[f64; 5]| horner(&eps, c);
        RosslerParams {
            a: poly(&f.alpha),
            b: f.omega * f.omega - 1.0 + poly(&f.beta),
            c: poly(&f.gamma),
        }
    }

    fn to_original(&self, theta: f64, x: &[f64], eps: f64) -> [f64; 3] {
        let w = self.family.omega;
        let (sn, cs) = theta.sin_cos();
        let (bx, by, bz) = (x[0] * cs, x[0] * sn, x[1]);
        [eps * bx, eps * (by / w + bz), eps * (by * (w - 1.0 / w) - bz)]
    }

    fn from_original(&self, p: &[f64; 3], eps: f64) -> (f64, Vec<f64>) {
        let w = self.family.omega;
        let (xs, ys, zs) = (p[0] / eps, p[1] / eps, p[2] / eps);
        let by = (ys + zs) / w;
        let bz = ys - by / w;
        (by.atan2(xs), vec![xs.hypot(by), bz])
    }
}

/// `ẋ = εx`.
#[derive(Debug, Clone)]
pub struct ScalarLinear {
    domain: DomainBox,
}

impl Default for ScalarLinear {
    fn default() -> Self {
        Self {
            domain: DomainBox::unbounded(1),
        }
    }
}

impl StandardFormSystem for ScalarLinear {
    fn dim(&self) -> usize {
        1
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn rhs<S: Scalar>(&self, _t: f64, x: &[S], eps: &S) -> Result<Vec<S>> {
        Ok(vec![eps.clone() * x[0].clone()])
    }
}

/// `ẋ = ε² x²`.
#[derive(Debug, Clone)]
pub struct ScalarQuadratic {
    domain: DomainBox,
}

impl Default for ScalarQuadratic {
    fn default() -> Self {
        Self {
            domain: DomainBox::unbounded(1),
        }
    }
}

impl StandardFormSystem for ScalarQuadratic {
    fn dim(&self) -> usize {
        1
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn rhs<S: Scalar>(&self, _t: f64, x: &[S], eps: &S) -> Result<Vec<S>> {
        Ok(vec![eps.clone() * eps.clone() * x[0].clone() * x[0].clone()])
    }
}

/// `ẋ = ε A(t) x` with `A(t) = A₀ + A_c cos t + A_s sin t`.
#[derive(Debug, Clone)]
pub struct LinearPeriodic {
    pub a0: Vec<Vec<f64>>,
    pub a_cos: Vec<Vec<f64>>,
    pub a_sin: Vec<Vec<f64>>,
    domain: DomainBox,
}

impl LinearPeriodic {
    pub fn new(a0: Vec<Vec<f64>>, a_cos: Vec<Vec<f64>>, a_sin: Vec<Vec<f64>>) -> Self {
        let n = a0.len();
        Self {
            a0,
            a_cos,
            a_sin,
            domain: DomainBox::unbounded(n),
        }
    }

    pub fn matrix_at(&self, t: f64) -> Vec<Vec<f64>> {
        let (s, c) = t.sin_cos();
        (0..self.a0.len())
            .map(|i| {
                (0..self.a0.len())
                    .map(|j| self.a0[i][j] + c * self.a_cos[i][j] + s * self.a_sin[i][j])
                    .collect()
            })
            .collect()
    }
}

impl StandardFormSystem for LinearPeriodic {
    fn dim(&self) -> usize {
        self.a0.len()
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn rhs<S: Scalar>(&self, t: f64, x: &[S], eps: &S) -> Result<Vec<S>> {
        let a = self.matrix_at(t);
        Ok(a.iter()
            .map(|row| {
                let mut acc = eps.constant_like(0.0);
                for (aij, xj) in row.iter().zip(x) {
                    acc = acc + xj.clone() * *aij;
                }
                acc * eps.clone()
            })
            .collect())
    }
}

/// `ẋ = 0` in dimension `n`.
#[derive(Debug, Clone)]
pub struct ZeroSystem {
    domain: DomainBox,
}

impl ZeroSystem {
    pub fn new(n: usize) -> Self {
        Self {
            domain: DomainBox::unbounded(n),
        }
    }
}

impl StandardFormSystem for ZeroSystem {
    fn dim(&self) -> usize {
        self.domain.lower.len()
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn rhs<S: Scalar>(&self, _t: f64, x: &[S], eps: &S) -> Result<Vec<S>> {
        Ok(x.iter().map(|_| eps.constant_like(0.0)).collect())
    }
}

/// Autonomous polynomial field `ẋ = Σ_k ε^k P_k(x)`, each `P_k` given as
/// jets in the state variables (coefficients are read, never truncated).
#[derive(Debug, Clone)]
pub struct PolynomialField {
    pub terms: Vec<(u32, Vec<Jet>)>,
    domain: DomainBox,
}

impl PolynomialField {
    pub fn new(terms: Vec<(u32, Vec<Jet>)>) -> Result<Self> {
        let n = terms
            .first()
            .map(|(_, c)| c.len())
            .ok_or_else(|| Error::InvalidParameter("empty polynomial field".into()))?;
        if terms.iter().any(|(_, c)| c.len() != n || c.iter().any(|j| j.space().num_vars() != n)) {
            return Err(Error::InvalidParameter("inconsistent polynomial field".into()));
        }
        Ok(Self {
            terms,
            domain: DomainBox::unbounded(n),
        })
    }
}

/// Evaluates a polynomial stored as a jet at generic arguments.
pub fn eval_polynomial<S: Scalar>(p: &Jet, args: &[S]) -> S {
    let space = p.space();
    let mut acc = args[0].constant_like(0.0);
    for (i, &c) in p.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut term = args[0].constant_like(c);
        for (v, &e) in space.exponents(i).iter().enumerate() {
            if e > 0 {
                term = term * args[v].powu(e);
            }
        }
        acc = acc + term;
    }
    acc
}

impl StandardFormSystem for PolynomialField {
    fn dim(&self) -> usize {
        self.domain.lower.len()
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn rhs<S: Scalar>(&self, _t: f64, x: &[S], eps: &S) -> Result<Vec<S>> {
        let n = self.dim();
        let mut out: Vec<S> = (0..n).map(|_| eps.constant_like(0.0)).collect();
        for (k, comps) in &self.terms {
            let ek = eps.powu(*k);
            for (o, p) in out.iter_mut().zip(comps) {
                *o = o.clone() + eval_polynomial(p, x) * ek.clone();
            }
        }
        Ok(out)
    }
}

/// Orders carried by a Taylor expansion in `(ε, state)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaylorBudget {
    pub eps: u32,
    pub state: u32,
    pub total: u32,
}

impl Default for TaylorBudget {
    fn default() -> Self {
        Self {
            eps: 5,
            state: 4,
            total: 5,
        }
    }
}

impl TaylorBudget {
    pub fn new(eps: u32, state: u32, total: u32) -> Self {
        Self { eps, state, total }
    }

    /// Jet space with variable 0 = ε and variables 1..=n = state offsets.
    pub fn space(&self, n: usize) -> Result<JetSpace> {
        let mut caps = vec![self.eps];
        caps.extend(std::iter::repeat(self.state).take(n));
        Ok(JetSpace::new(JetSpec::new(caps, self.total)?))
    }

    /// Largest state-derivative order available for `F_i` / `g_i`.
    pub fn state_order_for(&self, i: u32) -> Option<u32> {
        if i > self.eps || i > self.total {
            None
        } else {
            Some(self.state.min(self.total - i))
        }
    }
}

/// `F_i(t, z)` and their state-derivative tensors.
#[derive(Debug, Clone)]
pub struct TaylorBundle {
    pub budget: TaylorBudget,
    /// `tensors[i-1][l]` is `∂ˡF_i/∂xˡ(t, z)`.
    pub tensors: Vec<Vec<SymTensor>>,
}

impl TaylorBundle {
    pub fn get(&self, i: u32, l: u32) -> Option<&SymTensor> {
        self.tensors.get(i as usize - 1)?.get(l as usize)
    }

    /// `F_i(t, z)`.
    pub fn value(&self, i: u32) -> Vec<f64> {
        self.get(i, 0).map(|t| t.data.clone()).unwrap_or_default()
    }
}

/// Extracts all `∂ˡF_i/∂xˡ(t, z)` within the budget from one jet evaluation.
pub fn eps_taylor_coeffs<Sys: StandardFormSystem>(
    s: &Sys,
    t: f64,
    z: &[f64],
    budget: TaylorBudget,
) -> Result<TaylorBundle> {
    s.domain().check(z)?;
    let n = s.dim();
    let space = budget.space(n)?;
    let eps = space.variable(0, 0.0);
    let x: Vec<Jet> = (0..n).map(|k| space.variable(k + 1, z[k])).collect();
    let f = s.rhs(t, &x, &eps)?;
    let vars: Vec<usize> = (1..=n).collect();
    let mut tensors = Vec::new();
    for i in 1..=budget.eps.min(budget.total) {
        let mut base = vec![0u32; n + 1];
        base[0] = i;
        let lmax = budget.state_order_for(i).unwrap_or(0);
        let mut per = Vec::new();
        for l in 0..=lmax {
            per.push(extract_tensor_at(&f, &base, &vars, l)?);
        }
        tensors.push(per);
    }
    Ok(TaylorBundle { budget, tensors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rossler_examples() {
        let p = RosslerParams { a: 0.3, b: 0.2, c: 5.7 };
        assert_eq!(rossler_rhs(&p, &[0.0, 0.0, 0.0]), [0.0, 0.0, 0.0]);
        let p = RosslerParams { a: 1.0, b: 1.0, c: 1.0 };
        assert_eq!(rossler_rhs(&p, &[1.0, 0.0, 0.0]), [0.0, 1.0, 1.0]);
        let p = RosslerParams { a: 2.0, b: 3.0, c: 4.0 };
        assert_eq!(rossler_rhs(&p, &[1.0, 1.0, 1.0]), [-2.0, 3.0, 0.0]);
    }

    #[test]
    fn scalar_bundles() {
        let b = eps_taylor_coeffs(&ScalarLinear::default(), 0.3, &[2.0], TaylorBudget::default())
            .unwrap();
        assert_eq!(b.value(1), vec![2.0]);
        assert_eq!(b.get(1, 1).unwrap().data, vec![1.0]);
        assert_eq!(b.get(1, 2).unwrap().data, vec![0.0]);
        assert_eq!(b.value(2), vec![0.0]);

        let q = eps_taylor_coeffs(&ScalarQuadratic::default(), 0.0, &[3.0], TaylorBudget::default())
            .unwrap();
        assert_eq!(q.value(1), vec![0.0]);
        assert_eq!(q.value(2), vec![9.0]);
        assert_eq!(q.get(2, 1).unwrap().data, vec![6.0]);
    }

    #[test]
    fn case_a_rotation_rate_and_standard_form() {
        let fam = CaseAFamily::new(0.7, 1.3, -0.4, 2.1).unwrap();
        let sys = fam.standard_form().unwrap();
        let space = TaylorBudget::new(2, 0, 2).space(2).unwrap();
        let eps = space.variable(0, 0.0);
        for &(t, r, z) in &[(0.3, 1.0, 0.2), (2.0, 3.5, -1.0), (5.5, 0.4, 0.0)] {
            let x = [space.constant(r), space.constant(z)];
            let w = sys.angular_velocity(t, &x, &eps).unwrap();
            assert!((w.constant_term() - sys.rotation_rate()).abs() < 1e-13);
            let f = sys.rhs(t, &x, &eps).unwrap();
            assert!(f[0].constant_term().abs() < 1e-13 && f[1].constant_term().abs() < 1e-13);
        }
    }

    #[test]
    fn case_b_unperturbed_rotation() {
        let fam = CaseBFamily::new(1.7, [0.0; 5], [0.0; 5], [0.0; 5]).unwrap();
        let sys = fam.standard_form().unwrap();
        let w = sys.angular_velocity(0.9, &[1.3, 0.4], &0.0).unwrap();
        assert!((w - 1.7).abs() < 1e-14);
        let f0 = sys.rhs_f64(0.9, &[1.3, 0.4], 0.0).unwrap();
        assert!(f0.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn embeddings_round_trip() {
        let a = CaseAFamily::new(-1.0, 41.0, -38.0, 4.299).unwrap().standard_form().unwrap();
        let p = a.to_original(0.4, &[52.0, -0.7], 0.0012);
        let (th, x) = a.from_original(&p, 0.0012);
        assert!((th - 0.4).abs() < 1e-12 && (x[0] - 52.0).abs() < 1e-10 && (x[1] + 0.7).abs() < 1e-12);
        let b = CaseBFamily::figure_one().standard_form().unwrap();
        let p = b.to_original(2.0, &[30.0, 0.3], 0.02);
        let (th, x) = b.from_original(&p, 0.02);
        assert!((th - 2.0).abs() < 1e-12 && (x[0] - 30.0).abs() < 1e-10 && (x[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(CaseAFamily::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(CaseAFamily::new(1.5, 1.0, 1.0, 1.0).is_err());
        assert!(CaseBFamily::new(1.0, [0.0; 5], [0.0; 5], [0.0; 5]).is_err());
        assert!(CaseBFamily::new(2f64.sqrt(), [0.0; 5], [0.0; 5], [0.0; 5]).is_err());
        let bad = DomainBox::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            CaseASystem::new(CaseAFamily::new(1.0, 0.0, 1.0, 0.0).unwrap(), bad),
            Err(Error::DomainViolation(_))
        ));
    }
}
