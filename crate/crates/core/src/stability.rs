//! Period maps, periodic orbits and their multipliers, the ε-expansion of the
//! period-map Jacobian along `z(ε)`, and the resulting stability verdicts.

use std::ops::ControlFlow;

use nalgebra::{Complex, DMatrix, DVector, Matrix3};
use serde::{Deserialize, Serialize};

use crate::averaging::{averaged_expansion, jet_flow, AveragedExpansion, QuadratureSpec};
use crate::error::{Error, Result};
use crate::jets::{Jet, JetSpace, JetSpec};
use crate::lyapschmidt::{find_simple_zero, z_series, BifurcationReport, BranchChart, ZSeries, ZeroSearch};
use crate::ode::{Rkf78, Workspace};
use crate::systems::{
    rossler_jacobian, rossler_rhs, CaseBFamily, RosslerEmbedding, RosslerParams, StandardFormSystem, TaylorBudget,
};

/// Smallest `|ε|` for which a period map is considered non-trivial.
pub const EPS_FLOOR: f64 = 1e-6;
/// Magnitude below which a leading coefficient carries no sign.
pub const SIGN_FLOOR: f64 = 1e-9;

/// Fixed point of a period or section map together with its linearization.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicOrbit {
    pub point: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    #[serde(serialize_with = "ser_matrix")]
    pub jacobian: DMatrix<f64>,
    #[serde(serialize_with = "ser_complex")]
    pub multipliers: Vec<Complex<f64>>,
    pub condition: f64,
    /// Return time for section maps, the period for stroboscopic maps.
    pub period: f64,
}

fn ser_matrix<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for r in 0..m.nrows() {
        let row: Vec<f64> = (0..m.ncols()).map(|c| m[(r, c)]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

fn ser_complex<S: serde::Serializer>(v: &[Complex<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for c in v {
        seq.serialize_element(&[c.re, c.im])?;
    }
    seq.end()
}

/// Eigenvalues sorted by decreasing distance from 1.
pub fn multipliers_of(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = m.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| (b - 1.0).norm().total_cmp(&(a - 1.0).norm()));
    ev
}

fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let (mx, mn) = sv
        .iter()
        .fold((0.0f64, f64::INFINITY), |(a, b), v| (a.max(*v), b.min(*v)));
    mx / mn
}

/// Settings of a Newton solve for a fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSpec {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonSpec {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 30,
        }
    }
}

fn newton_fixed_point<F>(seed: &[f64], spec: &NewtonSpec, mut map: F) -> Result<(Vec<f64>, f64, usize, DMatrix<f64>, f64)>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, DMatrix<f64>, f64)>,
{
    let n = seed.len();
    let mut x = seed.to_vec();
    for it in 0..=spec.max_iter {
        let (px, dp, period) = map(&x)?;
        let res = DVector::from_iterator(n, (0..n).map(|i| px[i] - x[i]));
        let norm = res.amax();
        if norm <= spec.tol {
            return Ok((x, norm, it, dp, period));
        }
        if it == spec.max_iter {
            break;
        }
        let j = &dp - DMatrix::identity(n, n);
        let step = j.clone().lu().solve(&(-res)).ok_or_else(|| {
            Error::NotConverged(format!(
                "singular Newton matrix (condition {:e})",
                condition_number(&j)
            ))
        })?;
        for i in 0..n {
            x[i] += step[i];
        }
    }
    Err(Error::NotConverged(format!(
        "Newton did not reach {:e} in {} iterations",
        spec.tol, spec.max_iter
    )))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.abs() < EPS_FLOOR {
        Err(Error::DegenerateEpsilon(eps))
    } else {
        Ok(())
    }
}

/// `Π(z) = x(T, z, ε)` of a standard-form system.
pub fn time_t_map<Sys: StandardFormSystem>(
    sys: &Sys,
    z: &[f64],
    eps: f64,
    integ: &Rkf78,
) -> Result<Vec<f64>> {
    sys.domain().check(z)?;
    let rhs = |t: f64, x: &[f64], dx: &mut [f64]| -> Result<()> {
        if !sys.domain().contains(x) {
            return Err(Error::Escape { t });
        }
        dx.copy_from_slice(&sys.rhs_f64(t, x, eps)?);
        Ok(())
    };
    integ.integrate(rhs, 0.0, z, sys.period())
}

/// `Π(z)` and `DΠ(z)` from a degree-one jet flow.
pub fn time_t_map_jacobian<Sys: StandardFormSystem>(
    sys: &Sys,
    z: &[f64],
    eps: f64,
    integ: &Rkf78,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    sys.domain().check(z)?;
    let n = sys.dim();
    let space = JetSpace::new(JetSpec::uniform(n, 1)?);
    let x0: Vec<Jet> = (0..n).map(|k| space.variable(k, z[k])).collect();
    let e = space.constant(eps);
    let xt = jet_flow(sys, &x0, &e, 0.0, sys.period(), integ)?;
    let mut jac = DMatrix::zeros(n, n);
    let mut unit = vec![0u32; n];
    for (r, xr) in xt.iter().enumerate() {
        for c in 0..n {
            unit[c] = 1;
            jac[(r, c)] = xr.coeff(&unit);
            unit[c] = 0;
        }
    }
    Ok((xt.iter().map(|j| j.constant_term()).collect(), jac))
}

/// Newton on `Π − Id` for the stroboscopic map.
pub fn locate_periodic_orbit<Sys: StandardFormSystem>(
    sys: &Sys,
    seed: &[f64],
    eps: f64,
    integ: &Rkf78,
    newton: &NewtonSpec,
) -> Result<PeriodicOrbit> {
    check_eps(eps)?;
    let (x, res, it, dp, _) = newton_fixed_point(seed, newton, |z| {
        let (p, j) = time_t_map_jacobian(sys, z, eps, integ)?;
        Ok((p, j, sys.period()))
    })?;
    Ok(PeriodicOrbit {
        point: x,
        residual: res,
        iterations: it,
        multipliers: multipliers_of(&dp),
        condition: condition_number(&(&dp - DMatrix::identity(dp.nrows(), dp.nrows()))),
        jacobian: dp,
        period: sys.period(),
    })
}

/// Crossing of a coordinate plane `x_axis = value` in three dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub axis: usize,
    pub value: f64,
    /// `+1` for increasing, `−1` for decreasing, `0` for either.
    pub direction: i8,
    /// Optional half-plane condition `sign(x_k − v) = s` as `(k, v, s)`.
    pub half_space: Option<(usize, f64, i8)>,
}

impl Section {
    pub fn free_axes(&self) -> [usize; 2] {
        match self.axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    pub fn embed(&self, p: &[f64]) -> [f64; 3] {
        let mut x = [0.0; 3];
        x[self.axis] = self.value;
        let f = self.free_axes();
        x[f[0]] = p[0];
        x[f[1]] = p[1];
        x
    }

    pub fn project(&self, x: &[f64; 3]) -> [f64; 2] {
        let f = self.free_axes();
        [x[f[0]], x[f[1]]]
    }

    fn admits(&self, x: &[f64]) -> bool {
        match self.half_space {
            Some((k, v, s)) => (x[k] - v) * f64::from(s) > 0.0,
            None => true,
        }
    }
}

/// One recorded section crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct Crossing {
    pub point: [f64; 3],
    pub time: f64,
    /// Fixed-time state derivative `∂x(t)/∂x₀` at the crossing, when tracked.
    pub phi: Option<Matrix3<f64>>,
}

/// Poincaré map of the Rössler flow on a coordinate section.
#[derive(Debug, Clone)]
pub struct RosslerSectionMap {
    pub params: RosslerParams,
    pub section: Section,
    pub integ: Rkf78,
    pub max_time: f64,
    pub escape_radius: f64,
    pub transversality_floor: f64,
    pub crossing_tol: f64,
}

impl RosslerSectionMap {
    pub fn new(params: RosslerParams, section: Section) -> Self {
        Self {
            params,
            section,
            integ: Rkf78::with_tolerances(1e-12, 1e-14),
            max_time: 1e3,
            escape_radius: 1e6,
            transversality_floor: 1e-6,
            crossing_tol: 1e-12,
        }
    }

    fn field(&self, y: &[f64], dy: &mut [f64], sign: f64) {
        let x = [y[0], y[1], y[2]];
        let f = rossler_rhs(&self.params, &x);
        for k in 0..3 {
            dy[k] = sign * f[k];
        }
        if y.len() > 3 {
            let j = rossler_jacobian(&self.params, &x);
            for r in 0..3 {
                for c in 0..3 {
                    let mut s = 0.0;
                    for k in 0..3 {
                        s += j[r][k] * y[3 + 3 * k + c];
                    }
                    dy[3 + 3 * r + c] = sign * s;
                }
            }
        }
    }

    /// Integrates from `x0` (time direction `sign`) to the next admissible
    /// crossing; the crossing point is placed on the plane by switching to
    /// the section coordinate as independent variable.
    pub fn next_crossing(&self, x0: &[f64; 3], track: bool, sign: f64) -> Result<Crossing> {
        let mut y0 = x0.to_vec();
        if track {
            for r in 0..3 {
                for c in 0..3 {
                    y0.push(if r == c { 1.0 } else { 0.0 });
                }
            }
        }
        let sec = self.section;
        let k = sec.axis;
        let esc = self.escape_radius;
        let mut hit: Option<(f64, Vec<f64>)> = None;
        let sol = self.integ.solve(
            |_t, y, dy| {
                if y[..3].iter().any(|v| !v.is_finite() || v.abs() > esc) {
                    return Err(Error::Escape { t: _t });
                }
                self.field(y, dy, sign);
                Ok(())
            },
            0.0,
            &y0,
            self.max_time,
            |t_prev, y_prev, _t, y| {
                let s0 = y_prev[k] - sec.value;
                let s1 = y[k] - sec.value;
                let crossed = s0 != 0.0 && s0.signum() != s1.signum() && s1 != s0;
                let dir_ok = match sec.direction {
                    0 => true,
                    d => (s1 - s0) * f64::from(d) * sign > 0.0,
                };
                if crossed && dir_ok && sec.admits(y) && sec.admits(y_prev) {
                    hit = Some((t_prev, y_prev.to_vec()));
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            },
        )?;
        let (t_prev, y_prev) = match hit {
            Some(h) => h,
            None if sol.y[..3].iter().any(|v| v.abs() > esc) => {
                return Err(Error::Escape { t: sol.t })
            }
            None => return Err(Error::NoCrossing(format!("no crossing within time {}", self.max_time))),
        };
        self.henon(t_prev, &y_prev, sign)
    }

    fn henon(&self, t_prev: f64, y_prev: &[f64], sign: f64) -> Result<Crossing> {
        let k = self.section.axis;
        let n = y_prev.len();
        // state (y, t) with the section coordinate as independent variable
        let mut state = y_prev.to_vec();
        state.push(t_prev);
        let floor = self.transversality_floor;
        let mut rhs = |_s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
            self.field(&y[..n], &mut dy[..n], sign);
            let fk = dy[k];
            if fk.abs() < floor {
                return Err(Error::NotTransversal(format!(
                    "flow normal component {fk:e} below {floor:e}"
                )));
            }
            for v in dy[..n].iter_mut() {
                *v /= fk;
            }
            dy[n] = 1.0 / fk;
            Ok(())
        };
        let mut ws = Workspace::new(n + 1);
        for _ in 0..4 {
            let ds = self.section.value - state[k];
            if ds.abs() <= self.crossing_tol {
                break;
            }
            let (next, _) = self.integ.step(&mut rhs, state[k], &state, ds, &mut ws)?;
            state = next;
        }
        let mut f = [0.0; 3];
        self.field(&state[..3], &mut f, sign);
        if f[k].abs() < floor {
            return Err(Error::NotTransversal(format!("normal velocity {:e}", f[k])));
        }
        let point = [state[0], state[1], self.section.value];
        let mut p = point;
        p[k] = self.section.value;
        p[self.section.free_axes()[0]] = state[self.section.free_axes()[0]];
        p[self.section.free_axes()[1]] = state[self.section.free_axes()[1]];
        let phi = if n > 3 {
            Some(Matrix3::from_row_slice(&state[3..12]))
        } else {
            None
        };
        Ok(Crossing {
            point: p,
            time: state[n] * sign,
            phi,
        })
    }

    /// Section map in the two free coordinates.
    pub fn apply(&self, p: &[f64]) -> Result<[f64; 2]> {
        let c = self.next_crossing(&self.section.embed(p), false, 1.0)?;
        Ok(self.section.project(&c.point))
    }

    /// Inverse section map (backward time).
    pub fn apply_inverse(&self, p: &[f64]) -> Result<[f64; 2]> {
        let c = self.next_crossing(&self.section.embed(p), false, -1.0)?;
        Ok(self.section.project(&c.point))
    }

    /// Section map, its Jacobian and the return time.
    pub fn apply_with_jacobian(&self, p: &[f64]) -> Result<([f64; 2], DMatrix<f64>, f64)> {
        let c = self.next_crossing(&self.section.embed(p), true, 1.0)?;
        let phi = c.phi.expect("tracked");
        let k = self.section.axis;
        let f = rossler_rhs(&self.params, &c.point);
        // δx₁ = (I − f e_kᵀ / f_k) Φ δx₀
        let mut proj: Matrix3<f64> = Matrix3::identity();
        for r in 0..3 {
            proj[(r, k)] -= f[r] / f[k];
        }
        let m: Matrix3<f64> = proj * phi;
        let fa = self.section.free_axes();
        let mut j = DMatrix::zeros(2, 2);
        for (r, &ar) in fa.iter().enumerate() {
            for (cc, &ac) in fa.iter().enumerate() {
                j[(r, cc)] = m[(ar, ac)];
            }
        }
        Ok((self.section.project(&c.point), j, c.time))
    }

    /// First crossing reached from an arbitrary point.
    pub fn first_crossing(&self, x0: &[f64; 3]) -> Result<[f64; 2]> {
        let c = self.next_crossing(x0, false, 1.0)?;
        Ok(self.section.project(&c.point))
    }

    /// Newton on the section map.
    pub fn locate_fixed_point(&self, seed: &[f64], newton: &NewtonSpec) -> Result<PeriodicOrbit> {
        let (x, res, it, dp, period) = newton_fixed_point(seed, newton, |p| {
            let (q, j, t) = self.apply_with_jacobian(p)?;
            Ok((q.to_vec(), j, t))
        })?;
        Ok(PeriodicOrbit {
            point: x,
            residual: res,
            iterations: it,
            multipliers: multipliers_of(&dp),
            condition: condition_number(&(&dp - DMatrix::identity(2, 2))),
            jacobian: dp,
            period,
        })
    }

    /// `(det Φ(t), exp ∫₀ᵗ tr J)` along the orbit of `x0`.
    pub fn liouville_check(&self, x0: &[f64; 3], t: f64) -> Result<(f64, f64)> {
        let mut y0 = x0.to_vec();
        y0.extend_from_slice(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let p = self.params;
        let y = self.integ.integrate(
            |_t, y, dy| {
                self.field(&y[..12], &mut dy[..12], 1.0);
                dy[12] = p.a + y[0] - p.c;
                Ok(())
            },
            0.0,
            &y0,
            t,
        )?;
        let phi = Matrix3::from_row_slice(&y[3..12]);
        Ok((phi.determinant(), y[12].exp()))
    }
}

/// Taylor coefficients of `DΠ(z(ε)) − Id = εA₀ + ε²A₁ + ε³A₂ + …`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AMatrices {
    #[serde(serialize_with = "ser_matrix")]
    pub a0: DMatrix<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub a1: DMatrix<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub a2: DMatrix<f64>,
}

fn contract(t: &crate::jets::SymTensor, fixed: &[&[f64]], n: usize) -> DMatrix<f64> {
    // Matrix of v ↦ T(fixed…, v).
    let mut m = DMatrix::zeros(t.out_dim, n);
    for c in 0..n {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        let mut args: Vec<&[f64]> = fixed.to_vec();
        args.push(&e);
        let col = t.apply(&args);
        for r in 0..t.out_dim {
            m[(r, c)] = col[r];
        }
    }
    m
}

/// Chain-rule expansion of `DΠ` along the initial-condition series.
pub fn a_matrices(ex: &AveragedExpansion, zs: &ZSeries) -> Result<AMatrices> {
    let n = ex.dim();
    if zs.z0.iter().zip(&ex.z).any(|(a, b)| (a - b).abs() > 1e-12 * (1.0 + a.abs())) {
        return Err(Error::Precondition("expansion is not centred at z0".into()));
    }
    let z1 = zs.z1.as_slice();
    let z2 = zs.z2.as_slice();
    let a0 = ex.jacobian(1)?;
    let a1 = contract(&ex.derivative(1, 2)?, &[z1], n) + ex.jacobian(2)?;
    let a2 = contract(&ex.derivative(1, 2)?, &[z2], n)
        + contract(&ex.derivative(1, 3)?, &[z1, z1], n) * 0.5
        + contract(&ex.derivative(2, 2)?, &[z1], n)
        + ex.jacobian(3)?;
    Ok(AMatrices { a0, a1, a2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouthHurwitz {
    Stable,
    Unstable,
    Marginal,
}

/// Root location of `λ² + pλ + q`.
pub fn routh_hurwitz_2(p: f64, q: f64) -> RouthHurwitz {
    const TOL: f64 = 1e-12;
    if p.abs() <= TOL || q.abs() <= TOL {
        RouthHurwitz::Marginal
    } else if p > 0.0 && q > 0.0 {
        RouthHurwitz::Stable
    } else {
        RouthHurwitz::Unstable
    }
}

/// Leading behaviour of one eigenvalue of `A(ε) = A₀ + εA₁ + ε²A₂`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    /// Power of `ε` of the leading eigenvalue term of `A(ε)`.
    pub rate: u32,
    /// Power of `ε` in `λ̃ − 1` for the corresponding multiplier.
    pub multiplier_rate: u32,
    pub coefficient: f64,
    /// Series `λ(ε) = Σ s_k εᵏ` through the order `A₂` determines.
    pub series: [f64; 3],
}

/// Conjugated diagonal `Λ(ε)` and the leading entry of each eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub entries: [LadderEntry; 2],
    /// Largest off-diagonal coefficient of `T A T⁻¹` through `ε²`.
    pub offdiag_residual: f64,
}

fn check_ladder_shape(a: &AMatrices) -> Result<f64> {
    let a0 = &a.a0;
    if a0.nrows() != 2 || a0.ncols() != 2 || a.a1.shape() != (2, 2) || a.a2.shape() != (2, 2) {
        return Err(Error::UnsupportedShape("ladder needs 2x2 matrices".into()));
    }
    let mu = a0[(1, 1)];
    let scale = a0.amax().max(1.0);
    if a0[(0, 0)].abs() > 1e-9 * scale
        || a0[(0, 1)].abs() > 1e-9 * scale
        || a0[(1, 0)].abs() > 1e-9 * scale
        || mu.abs() < SIGN_FLOOR
    {
        return Err(Error::UnsupportedShape(format!(
            "A0 must be diag(0, mu) with mu != 0, got {a0}"
        )));
    }
    Ok(mu)
}

fn entry_of(lam: &Jet, shift: u32) -> LadderEntry {
    let s = [lam.coeff(&[0]), lam.coeff(&[1]), lam.coeff(&[2])];
    let lead = (0..3).find(|&k| s[k].abs() > SIGN_FLOOR).unwrap_or(2);
    LadderEntry {
        rate: lead as u32,
        multiplier_rate: lead as u32 + shift,
        coefficient: s[lead],
        series: s,
    }
}

fn a_of_eps(a: &AMatrices, space: &JetSpace) -> [[Jet; 2]; 2] {
    let e = |i: usize, j: usize| {
        space.from_terms(&[(&[0], a.a0[(i, j)]), (&[1], a.a1[(i, j)]), (&[2], a.a2[(i, j)])])
    };
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn mat_mul(x: &[[Jet; 2]; 2], y: &[[Jet; 2]; 2]) -> Result<[[Jet; 2]; 2]> {
    let c = |i: usize, j: usize| x[i][0].try_mul(&y[0][j])?.try_add(&x[i][1].try_mul(&y[1][j])?);
    Ok([[c(0, 0)?, c(0, 1)?], [c(1, 0)?, c(1, 1)?]])
}

/// `T(ε) A(ε) T(ε)⁻¹` with `T = [[1, T₁₂], [T₂₁, 1]]` through `ε²`, for
/// `A₀ = diag(0, μ)`, `μ ≠ 0`.
pub fn k_determined_ladder(a: &AMatrices) -> Result<Ladder> {
    let mu = check_ladder_shape(a)?;
    let (a1, a2) = (&a.a1, &a.a2);
    let space = JetSpace::new(JetSpec::uniform(1, 2)?);
    let t12 = space.from_terms(&[
        (&[1], -a1[(0, 1)] / mu),
        (&[2], (a1[(0, 1)] * a1[(1, 1)] - mu * a2[(0, 1)]) / (mu * mu)),
    ]);
    let t21 = space.from_terms(&[
        (&[1], a1[(1, 0)] / mu),
        (&[2], (-a1[(1, 0)] * a1[(1, 1)] + mu * a2[(1, 0)]) / (mu * mu)),
    ]);
    let one = space.constant(1.0);
    let t = [[one.clone(), t12.clone()], [t21.clone(), one.clone()]];
    let det_inv = one.try_sub(&t12.try_mul(&t21)?)?.recip()?;
    let tinv = [
        [det_inv.clone(), -(t12.try_mul(&det_inv)?)],
        [-(t21.try_mul(&det_inv)?), det_inv.clone()],
    ];
    let lam = mat_mul(&mat_mul(&t, &a_of_eps(a, &space))?, &tinv)?;
    let offdiag = [&lam[0][1], &lam[1][0]]
        .iter()
        .flat_map(|j| j.coeffs().iter().map(|c| c.abs()))
        .fold(0.0, f64::max);
    Ok(Ladder {
        entries: [entry_of(&lam[1][1], 1), entry_of(&lam[0][0], 1)],
        offdiag_residual: offdiag,
    })
}

/// Eigenvalue series of `A(ε)` through `ε²` from the scalar fixed point
/// `λ = a₁₁ − a₁₂a₂₁/(a₂₂ − λ)`, independent of any conjugation.
pub fn eigenvalue_series(a: &AMatrices) -> Result<[[f64; 3]; 2]> {
    check_ladder_shape(a)?;
    let space = JetSpace::new(JetSpec::uniform(1, 2)?);
    let m = a_of_eps(a, &space);
    let mut lam = space.zero();
    for _ in 0..4 {
        let denom = m[1][1].try_sub(&lam)?;
        lam = m[0][0].try_sub(&m[0][1].try_mul(&m[1][0])?.try_div(&denom)?)?;
    }
    let big = m[0][0].try_add(&m[1][1])?.try_sub(&lam)?;
    Ok([entry_of(&big, 1).series, entry_of(&lam, 1).series])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    AsymptoticallyStable,
    /// `unstable_dim` is the dimension of the orbit's unstable manifold.
    Unstable { unstable_dim: usize },
    Undetermined,
}

/// Verdict from the leading coefficients of the two non-trivial directions.
pub fn classify_ladder(coefficients: &[f64]) -> Classification {
    if coefficients.iter().any(|c| c.abs() < SIGN_FLOOR || !c.is_finite()) {
        return Classification::Undetermined;
    }
    let pos = coefficients.iter().filter(|c| **c > 0.0).count();
    if pos == 0 {
        Classification::AsymptoticallyStable
    } else {
        Classification::Unstable {
            unstable_dim: pos + 1,
        }
    }
}

/// Verdict from `p(λ) = λ² + d₁λ + d₀`.
pub fn classify_routh_hurwitz(d1: f64, d0: f64) -> Classification {
    if d1.abs() < SIGN_FLOOR || d0.abs() < SIGN_FLOOR {
        return Classification::Undetermined;
    }
    match routh_hurwitz_2(d1, d0) {
        RouthHurwitz::Stable => Classification::AsymptoticallyStable,
        RouthHurwitz::Unstable => Classification::Unstable {
            unstable_dim: if d0 < 0.0 { 2 } else { 3 },
        },
        RouthHurwitz::Marginal => Classification::Undetermined,
    }
}

/// Mean-field characteristic coefficients `(d₁, d₀)` of `Dg₁/T`.
pub fn mean_field_coefficients(dg1: &DMatrix<f64>, period: f64) -> (f64, f64) {
    let m = dg1 / period;
    (-m.trace(), m.determinant())
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub case: String,
    pub d0: Option<f64>,
    pub d1: Option<f64>,
    pub ladder: Option<Ladder>,
    #[serde(serialize_with = "ser_complex")]
    pub multipliers: Vec<Complex<f64>>,
    pub classification: Classification,
    pub tolerance: f64,
}

/// Zero of `f₂`, initial-condition series, `A` matrices and ladder for a
/// Case B family on the radial chart.
#[derive(Debug, Clone, Serialize)]
pub struct CaseBAnalysis {
    pub bifurcation: BifurcationReport,
    pub z_series: ZSeries,
    pub a: AMatrices,
    pub ladder: Ladder,
    pub eigenvalue_series: [[f64; 3]; 2],
    pub classification: Classification,
}

pub fn case_b_analysis(
    fam: &CaseBFamily,
    chart: &BranchChart,
    search: &ZeroSearch,
    quad: &QuadratureSpec,
) -> Result<CaseBAnalysis> {
    let sys = fam.standard_form()?;
    let bifurcation = find_simple_zero(&sys, chart, 2, search, quad)?;
    let red = bifurcation
        .reduction
        .as_ref()
        .ok_or_else(|| Error::Precondition("zero search returned no reduction".into()))?;
    let z_series = z_series(chart, red)?;
    let ex = averaged_expansion(&sys, &z_series.z0, TaylorBudget::default(), quad)?;
    let a = a_matrices(&ex, &z_series)?;
    let ladder = k_determined_ladder(&a)?;
    let eigenvalue_series = eigenvalue_series(&a)?;
    let classification = classify_ladder(&[ladder.entries[0].coefficient, ladder.entries[1].coefficient]);
    Ok(CaseBAnalysis {
        bifurcation,
        z_series,
        a,
        ladder,
        eigenvalue_series,
        classification,
    })
}

/// Section fixed point of the full Rössler flow at `ε`, seeded by `z(ε)`.
pub fn case_b_section_orbit(
    fam: &CaseBFamily,
    zs: &ZSeries,
    eps: f64,
    section: Section,
    newton: &NewtonSpec,
) -> Result<(RosslerSectionMap, PeriodicOrbit)> {
    let sys = fam.standard_form()?;
    let map = RosslerSectionMap::new(sys.rossler_params(eps), section);
    let x0 = sys.to_original(0.0, &zs.at(eps), eps);
    let seed = map.first_crossing(&x0)?;
    let orbit = map.locate_fixed_point(&seed, newton)?;
    Ok((map, orbit))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::averaging::{averaged_expansion, QuadratureSpec};
    use crate::systems::{ScalarLinear, TaylorBudget, ZeroSystem};
    use std::f64::consts::PI;

    #[test]
    fn scalar_map_and_a_matrices() {
        let s = ScalarLinear::default();
        let p = time_t_map(&s, &[1.5], 0.1, &Rkf78::default()).unwrap();
        assert!((p[0] - 1.5 * (0.2 * PI).exp()).abs() < 1e-12);
        let ex = averaged_expansion(&s, &[1.0], TaylorBudget::default(), &QuadratureSpec::default()).unwrap();
        let zs = ZSeries { z0: vec![1.0], z1: vec![0.0], z2: vec![0.0] };
        let a = a_matrices(&ex, &zs).unwrap();
        assert!((a.a0[(0, 0)] - 2.0 * PI).abs() < 1e-9);
        assert!((a.a1[(0, 0)] - 2.0 * PI * PI).abs() < 1e-9);
        assert!((a.a2[(0, 0)] - (2.0 * PI).powi(3) / 6.0).abs() < 1e-8);
    }

    #[test]
    fn zero_field_has_zero_a_matrices_and_refuses_tiny_eps() {
        let s = ZeroSystem::new(2);
        let ex = averaged_expansion(&s, &[1.0, 0.0], TaylorBudget::default(), &QuadratureSpec::default()).unwrap();
        let zs = ZSeries { z0: vec![1.0, 0.0], z1: vec![0.3, 0.1], z2: vec![0.0, 0.2] };
        let a = a_matrices(&ex, &zs).unwrap();
        assert_eq!(a.a0.amax() + a.a1.amax() + a.a2.amax(), 0.0);
        let r = locate_periodic_orbit(&s, &[1.0, 0.0], 0.0, &Rkf78::default(), &NewtonSpec::default());
        assert_eq!(r.unwrap_err(), Error::DegenerateEpsilon(0.0));
    }

    #[test]
    fn routh_hurwitz_examples() {
        assert_eq!(routh_hurwitz_2(1.0, 1.0), RouthHurwitz::Stable);
        assert_eq!(routh_hurwitz_2(-1.0, 1.0), RouthHurwitz::Unstable);
        assert_eq!(routh_hurwitz_2(1.0, -1.0), RouthHurwitz::Unstable);
        assert_eq!(routh_hurwitz_2(0.0, 1.0), RouthHurwitz::Marginal);
    }

    #[test]
    fn ladder_of_diagonal_family() {
        let a = AMatrices {
            a0: DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -3.0]),
            a1: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.5]),
            a2: DMatrix::from_row_slice(2, 2, &[0.7, 0.0, 0.0, 0.0]),
        };
        let ladder = k_determined_ladder(&a).unwrap();
        let l = ladder.entries;
        assert_eq!(l[0].rate, 0);
        assert!((l[0].coefficient + 3.0).abs() < 1e-14);
        assert_eq!(l[1].rate, 2);
        // s₂ = a2₁₁ − a1₁₂ a1₂₁ / (0 − μ)
        assert!((l[1].coefficient - (0.7 + 2.0 / 3.0)).abs() < 1e-14);
        assert_eq!(l[1].multiplier_rate, 3);
        let ev = eigenvalue_series(&a).unwrap();
        for k in 0..3 {
            assert!((ev[0][k] - l[0].series[k]).abs() < 1e-13);
            assert!((ev[1][k] - l[1].series[k]).abs() < 1e-13);
        }
        assert_eq!(classify_ladder(&[l[0].coefficient, l[1].coefficient]), Classification::Unstable { unstable_dim: 2 });
    }

    #[test]
    fn liouville_and_section_round_trip() {
        let p = RosslerParams { a: 0.1, b: 0.2, c: 0.5 };
        let sec = Section { axis: 0, value: 0.0, direction: -1, half_space: Some((1, 0.0, 1)) };
        let m = RosslerSectionMap::new(p, sec);
        let (d, e) = m.liouville_check(&[1.0, 1.0, 0.0], 1.0).unwrap();
        assert!((d - e).abs() < 1e-8 * e.abs(), "{d} {e}");
        let q = m.apply(&[2.0, 0.1]).unwrap();
        let back = m.apply_inverse(&q).unwrap();
        assert!((back[0] - 2.0).abs() < 1e-8 && (back[1] - 0.1).abs() < 1e-8, "{q:?} {back:?}");
    }
}
