//! Higher-order averaged functions `g_i = y_i(T, z)/i!` of a standard-form
//! system, computed two ways: the coupled variational recursion for `y_1..y_5`
//! and a flow of truncated Taylor polynomials in `(ε, δz)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{extract_tensor, Jet, JetSpace, JetSpec, SymTensor};
use crate::ode::Rkf78;
use crate::systems::{eps_taylor_coeffs, StandardFormSystem, TaylorBudget};

/// Highest averaging order supported by the recursion.
pub const MAX_RECURSION_ORDER: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the integrator step.
    pub max_step: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-13,
            max_step: 0.05,
        }
    }
}

impl QuadratureSpec {
    pub fn integrator(&self) -> Rkf78 {
        Rkf78 {
            h_max: self.max_step,
            ..Rkf78::with_tolerances(self.rtol, self.atol)
        }
    }
}

fn quad_err(e: Error) -> Error {
    match e {
        Error::Integration { .. } => Error::Quadrature { estimate: f64::NAN },
        other => other,
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in acc.iter_mut().zip(x) {
        *o += a * v;
    }
}

/// Right-hand sides of `y_1..y_k` at time `t` given the current `y`.
fn recursion_rates(b: &crate::systems::TaylorBundle, y: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = b.value(1).len();
    let t = |i: u32, l: u32| b.get(i, l).expect("budget covers recursion");
    let ap = |i: u32, args: &[&[f64]]| t(i, args.len() as u32).apply(args);
    let mut out = vec![vec![0.0; n]; k];
    let y1 = y.first().map(|v| v.as_slice());
    let y2 = y.get(1).map(|v| v.as_slice());
    let y3 = y.get(2).map(|v| v.as_slice());
    let y4 = y.get(3).map(|v| v.as_slice());

    axpy(&mut out[0], 1.0, &b.value(1));
    if k >= 2 {
        let y1 = y1.unwrap();
        let o = &mut out[1];
        axpy(o, 2.0, &b.value(2));
        axpy(o, 2.0, &ap(1, &[y1]));
    }
    if k >= 3 {
        let (y1, y2) = (y1.unwrap(), y2.unwrap());
        let o = &mut out[2];
        axpy(o, 6.0, &b.value(3));
        axpy(o, 6.0, &ap(2, &[y1]));
        axpy(o, 3.0, &ap(1, &[y1, y1]));
        axpy(o, 3.0, &ap(1, &[y2]));
    }
    if k >= 4 {
        let (y1, y2, y3) = (y1.unwrap(), y2.unwrap(), y3.unwrap());
        let o = &mut out[3];
        axpy(o, 24.0, &b.value(4));
        axpy(o, 24.0, &ap(3, &[y1]));
        axpy(o, 12.0, &ap(2, &[y1, y1]));
        axpy(o, 12.0, &ap(2, &[y2]));
        axpy(o, 12.0, &ap(1, &[y1, y2]));
        axpy(o, 4.0, &ap(1, &[y1, y1, y1]));
        axpy(o, 4.0, &ap(1, &[y3]));
    }
    if k >= 5 {
        let (y1, y2, y3, y4) = (y1.unwrap(), y2.unwrap(), y3.unwrap(), y4.unwrap());
        let o = &mut out[4];
        axpy(o, 120.0, &b.value(5));
        axpy(o, 120.0, &ap(4, &[y1]));
        axpy(o, 60.0, &ap(3, &[y1, y1]));
        axpy(o, 60.0, &ap(3, &[y2]));
        axpy(o, 60.0, &ap(2, &[y1, y2]));
        axpy(o, 20.0, &ap(2, &[y1, y1, y1]));
        axpy(o, 20.0, &ap(2, &[y3]));
        axpy(o, 20.0, &ap(1, &[y1, y3]));
        axpy(o, 15.0, &ap(1, &[y2, y2]));
        axpy(o, 30.0, &ap(1, &[y1, y1, y2]));
        axpy(o, 5.0, &ap(1, &[y1, y1, y1, y1]));
        axpy(o, 5.0, &ap(1, &[y4]));
    }
    out
}

/// `y_1(t, z)..y_k(t, z)` from the coupled variational recursion.
pub fn recursion_values<Sys: StandardFormSystem>(
    sys: &Sys,
    z: &[f64],
    max_order: u32,
    t: f64,
    quad: &QuadratureSpec,
) -> Result<Vec<Vec<f64>>> {
    if max_order == 0 || max_order > MAX_RECURSION_ORDER {
        return Err(Error::InvalidParameter(format!(
            "recursion order must be in 1..={MAX_RECURSION_ORDER}, got {max_order}"
        )));
    }
    sys.domain().check(z)?;
    let n = sys.dim();
    let k = max_order as usize;
    let budget = TaylorBudget::new(max_order, max_order - 1, max_order);
    let rhs = |s: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let b = eps_taylor_coeffs(sys, s, z, budget)?;
        let ys: Vec<Vec<f64>> = y.chunks(n).map(|c| c.to_vec()).collect();
        let rates = recursion_rates(&b, &ys, k);
        for (d, r) in dy.chunks_mut(n).zip(rates) {
            d.copy_from_slice(&r);
        }
        Ok(())
    };
    let y = quad
        .integrator()
        .integrate(rhs, 0.0, &vec![0.0; n * k], t)
        .map_err(quad_err)?;
    Ok(y.chunks(n).map(|c| c.to_vec()).collect())
}

/// `g_1..g_k` at `z` via the recursion, `g_i = y_i(T, z)/i!`.
pub fn recursion_g<Sys: StandardFormSystem>(
    sys: &Sys,
    z: &[f64],
    max_order: u32,
    quad: &QuadratureSpec,
) -> Result<Vec<Vec<f64>>> {
    let y = recursion_values(sys, z, max_order, sys.period(), quad)?;
    Ok(y
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            let f = factorial(i as u32 + 1);
            v.into_iter().map(|x| x / f).collect()
        })
        .collect())
}

/// Integrates a vector of jets under the system, with `ε` itself a jet.
pub fn jet_flow<Sys: StandardFormSystem>(
    sys: &Sys,
    x0: &[Jet],
    eps: &Jet,
    t0: f64,
    t1: f64,
    integrator: &Rkf78,
) -> Result<Vec<Jet>> {
    let space = eps.space().clone();
    let len = space.len();
    let n = x0.len();
    let mut y0 = Vec::with_capacity(n * len);
    for x in x0 {
        y0.extend_from_slice(x.coeffs());
    }
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<()> {
        let xs = y
            .chunks(len)
            .map(|c| space.from_coeffs(c.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        let f = sys.rhs(t, &xs, eps)?;
        for (d, fj) in dy.chunks_mut(len).zip(&f) {
            d.copy_from_slice(fj.coeffs());
        }
        Ok(())
    };
    let y = integrator.integrate(rhs, t0, &y0, t1)?;
    y.chunks(len).map(|c| space.from_coeffs(c.to_vec())).collect()
}

/// Taylor data of `g_1..g_k` around a base point.
#[derive(Debug, Clone)]
pub struct AveragedExpansion {
    pub z: Vec<f64>,
    pub budget: TaylorBudget,
    space: JetSpace,
    /// `g[i-1][c]` is component `c` of `g_i(z + δ)` as a polynomial in `δ`.
    g: Vec<Vec<Jet>>,
}

impl AveragedExpansion {
    pub fn max_order(&self) -> u32 {
        self.g.len() as u32
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Polynomial in the state offset, truncated at the available order.
    pub fn g_jet(&self, i: u32) -> Result<&[Jet]> {
        self.g
            .get((i as usize).wrapping_sub(1))
            .map(|v| v.as_slice())
            .ok_or(Error::OrderExceedsCap {
                order: i,
                cap: self.max_order(),
            })
    }

    pub fn state_space(&self) -> &JetSpace {
        &self.space
    }

    pub fn value(&self, i: u32) -> Result<Vec<f64>> {
        Ok(self.g_jet(i)?.iter().map(|j| j.constant_term()).collect())
    }

    /// `∂ᵏg_i(z)`.
    pub fn derivative(&self, i: u32, k: u32) -> Result<SymTensor> {
        let cap = self.budget.state_order_for(i).unwrap_or(0);
        if k > cap {
            return Err(Error::OrderExceedsCap { order: k, cap });
        }
        let vars: Vec<usize> = (0..self.dim()).collect();
        extract_tensor(self.g_jet(i)?, &vars, k)
    }

    pub fn jacobian(&self, i: u32) -> Result<DMatrix<f64>> {
        let t = self.derivative(i, 1)?;
        let n = self.dim();
        Ok(DMatrix::from_row_slice(n, n, &t.data))
    }
}

/// Runs the `(ε, δz)` jet flow over one period and splits the result by
/// powers of `ε`.
pub fn averaged_expansion<Sys: StandardFormSystem>(
    sys: &Sys,
    z: &[f64],
    budget: TaylorBudget,
    quad: &QuadratureSpec,
) -> Result<AveragedExpansion> {
    sys.domain().check(z)?;
    let n = sys.dim();
    let space = budget.space(n)?;
    let eps = space.variable(0, 0.0);
    let x0: Vec<Jet> = (0..n).map(|k| space.variable(k + 1, z[k])).collect();
    let xt = jet_flow(sys, &x0, &eps, 0.0, sys.period(), &quad.integrator()).map_err(quad_err)?;

    let state = JetSpace::new(JetSpec::uniform(n, budget.state.min(budget.total))?);
    let mut g = Vec::new();
    for i in 1..=budget.eps.min(budget.total) {
        let comps = xt
            .iter()
            .map(|xj| {
                let mut out = state.zero();
                for m in 0..state.len() {
                    let se = state.exponents(m);
                    let mut e = vec![i];
                    e.extend_from_slice(se);
                    if space.index_of(&e).is_some() {
                        out.set_coeff(se, xj.coeff(&e))?;
                    }
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()?;
        g.push(comps);
    }
    Ok(AveragedExpansion {
        z: z.to_vec(),
        budget,
        space: state,
        g,
    })
}

/// Convenience wrapper around one system and its numerical settings.
#[derive(Debug, Clone)]
pub struct Averager<'a, Sys> {
    pub sys: &'a Sys,
    pub quad: QuadratureSpec,
}

impl<'a, Sys: StandardFormSystem> Averager<'a, Sys> {
    pub fn new(sys: &'a Sys) -> Self {
        Self {
            sys,
            quad: QuadratureSpec::default(),
        }
    }

    /// `g_i(z)`.
    pub fn g(&self, z: &[f64], i: u32) -> Result<Vec<f64>> {
        if i == 0 {
            return Err(Error::InvalidParameter("averaging order starts at 1".into()));
        }
        averaged_expansion(self.sys, z, TaylorBudget::new(i, 0, i), &self.quad)?.value(i)
    }

    /// `∂ᵏg_i(z)`.
    pub fn g_derivatives(&self, z: &[f64], i: u32, k: u32) -> Result<SymTensor> {
        if i == 0 {
            return Err(Error::InvalidParameter("averaging order starts at 1".into()));
        }
        averaged_expansion(self.sys, z, TaylorBudget::new(i, k, i + k), &self.quad)?
            .derivative(i, k)
    }

    pub fn expansion(&self, z: &[f64], budget: TaylorBudget) -> Result<AveragedExpansion> {
        averaged_expansion(self.sys, z, budget, &self.quad)
    }
}

/// `Π(z; ε) − z` over one period in plain arithmetic.
pub fn displacement<Sys: StandardFormSystem>(
    sys: &Sys,
    z: &[f64],
    eps: f64,
    integrator: &Rkf78,
) -> Result<Vec<f64>> {
    let n = sys.dim();
    let rhs = |t: f64, w: &[f64], dw: &mut [f64]| -> Result<()> {
        let x: Vec<f64> = z.iter().zip(w).map(|(a, b)| a + b).collect();
        let f = sys.rhs_f64(t, &x, eps)?;
        dw.copy_from_slice(&f);
        Ok(())
    };
    integrator.integrate(rhs, 0.0, &vec![0.0; n], sys.period())
}

/// Sampling of `ε` for the direct fit of `Π(z; ε) − z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleFit {
    pub half_width: f64,
    pub nodes: usize,
    pub degree: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OracleFit {
    fn default() -> Self {
        Self {
            half_width: 0.02,
            nodes: 24,
            degree: 13,
            rtol: 1e-14,
            atol: 1e-16,
        }
    }
}

impl OracleFit {
    /// Chebyshev points on `[−h, h]`; an even count keeps `ε = 0` out.
    pub fn eps_nodes(&self) -> Vec<f64> {
        let m = self.nodes;
        (0..m)
            .map(|k| {
                let th = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * m) as f64;
                self.half_width * th.cos()
            })
            .collect()
    }
}

/// Estimates `g_1..g_{max_order}` by least-squares fitting `Π(z; ε) − z` as a
/// polynomial without constant term at the given `ε` values.
pub fn fit_displacement<Sys: StandardFormSystem>(
    sys: &Sys,
    z: &[f64],
    eps_values: &[f64],
    degree: usize,
    max_order: u32,
    integrator: &Rkf78,
) -> Result<Vec<Vec<f64>>> {
    if let Some(&e) = eps_values.iter().find(|e| **e == 0.0) {
        return Err(Error::DegenerateEpsilon(e));
    }
    if eps_values.len() < degree || (max_order as usize) > degree {
        return Err(Error::InvalidParameter(format!(
            "{} samples cannot fit degree {degree} up to order {max_order}",
            eps_values.len()
        )));
    }
    sys.domain().check(z)?;
    let scale = eps_values.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let n = sys.dim();
    let m = eps_values.len();
    let mut a = DMatrix::zeros(m, degree);
    let mut rhs = DMatrix::zeros(m, n);
    for (row, &e) in eps_values.iter().enumerate() {
        let s = e / scale;
        for j in 0..degree {
            a[(row, j)] = s.powi(j as i32 + 1);
        }
        let d = displacement(sys, z, e, integrator)?;
        for c in 0..n {
            rhs[(row, c)] = d[c];
        }
    }
    let svd = a.svd(true, true);
    let mut out = vec![vec![0.0; n]; max_order as usize];
    for c in 0..n {
        let b = DVector::from_iterator(m, (0..m).map(|r| rhs[(r, c)]));
        let x = svd
            .solve(&b, 1e-14)
            .map_err(|e| Error::OracleFailure(e.to_string()))?;
        for i in 0..max_order as usize {
            out[i][c] = x[i] / scale.powi(i as i32 + 1);
        }
    }
    Ok(out)
}

/// Direct Poincaré-map estimates `ĝ_1..ĝ_{max_order}` on Chebyshev samples.
pub fn poincare_expansion_oracle<Sys: StandardFormSystem>(
    sys: &Sys,
    z: &[f64],
    max_order: u32,
    fit: &OracleFit,
) -> Result<Vec<Vec<f64>>> {
    let integ = Rkf78::with_tolerances(fit.rtol, fit.atol);
    fit_displacement(sys, z, &fit.eps_nodes(), fit.degree, max_order, &integ)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{LinearPeriodic, ScalarLinear, ScalarQuadratic, ZeroSystem};
    use std::f64::consts::PI;

    #[test]
    fn scalar_linear_orders() {
        let s = ScalarLinear::default();
        let g = recursion_g(&s, &[1.0], 5, &QuadratureSpec::default()).unwrap();
        for (i, gi) in g.iter().enumerate() {
            let want = (2.0 * PI).powi(i as i32 + 1) / factorial(i as u32 + 1);
            assert!((gi[0] - want).abs() < 1e-9 * want, "order {}", i + 1);
        }
        let ex = averaged_expansion(&s, &[1.0], TaylorBudget::default(), &QuadratureSpec::default())
            .unwrap();
        for i in 1..=5 {
            let want = (2.0 * PI).powi(i as i32) / factorial(i);
            assert!((ex.value(i).unwrap()[0] - want).abs() < 1e-9 * want);
            if i < 5 {
                let d = ex.derivative(i, 1).unwrap().data[0];
                assert!((d - want).abs() < 1e-9 * want);
            } else {
                assert!(ex.derivative(i, 1).is_err());
            }
        }
    }

    #[test]
    fn scalar_quadratic_orders() {
        let s = ScalarQuadratic::default();
        let g = recursion_g(&s, &[1.0], 4, &QuadratureSpec::default()).unwrap();
        assert!(g[0][0].abs() < 1e-14);
        assert!((g[1][0] - 2.0 * PI).abs() < 1e-10);
        assert!(g[2][0].abs() < 1e-10);
        assert!((g[3][0] - 4.0 * PI * PI).abs() < 1e-9);
    }

    #[test]
    fn zero_system_averages_to_zero() {
        let s = ZeroSystem::new(2);
        let g = recursion_g(&s, &[0.3, -0.2], 5, &QuadratureSpec::default()).unwrap();
        assert!(g.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn linear_periodic_first_order_is_mean() {
        let s = LinearPeriodic::new(
            vec![vec![0.1, -1.0], vec![1.0, 0.2]],
            vec![vec![0.5, 0.0], vec![0.0, -0.3]],
            vec![vec![0.0, 0.7], vec![0.4, 0.0]],
        );
        let z = [0.8, -0.5];
        let g1 = Averager::new(&s).g(&z, 1).unwrap();
        let want = [2.0 * PI * (0.1 * 0.8 + 0.5), 2.0 * PI * (0.8 - 0.2 * 0.5)];
        for c in 0..2 {
            assert!((g1[c] - want[c]).abs() < 1e-9, "{g1:?} {want:?}");
        }
        let rec = recursion_g(&s, &z, 3, &QuadratureSpec::default()).unwrap();
        let ex = averaged_expansion(&s, &z, TaylorBudget::default(), &QuadratureSpec::default())
            .unwrap();
        for i in 1..=3u32 {
            let v = ex.value(i).unwrap();
            for c in 0..2 {
                assert!((v[c] - rec[i as usize - 1][c]).abs() < 1e-9 * (1.0 + v[c].abs()));
            }
        }
    }

    #[test]
    fn zero_epsilon_is_rejected() {
        let s = ScalarLinear::default();
        let r = fit_displacement(&s, &[1.0], &[0.0, 0.1, 0.2], 2, 1, &Rkf78::default());
        assert_eq!(r.unwrap_err(), Error::DegenerateEpsilon(0.0));
    }
}
