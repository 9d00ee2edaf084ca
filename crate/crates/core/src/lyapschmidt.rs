//! Lyapunov–Schmidt reduction of the averaged functions on a manifold of
//! zeros of `g_1`: correction functions `c_i`, bifurcation functions `f_i`,
//! simple-zero search and the series of the periodic initial condition.
//!
//! The reduction is carried out by composing the jets of `g_1..g_5` with the
//! unknown graph `b = B(u) + Σ εⁱ c_i(u)/i!` in `(ε, η)` arithmetic, where
//! `η = u − u*`, and solving the `π⊥` part order by order.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::averaging::{averaged_expansion, AveragedExpansion, QuadratureSpec};
use crate::error::{Error, Result};
use crate::jets::{extract_tensor, Jet, JetSpace, JetSpec, Scalar, SymTensor};
use crate::systems::{eval_polynomial, StandardFormSystem, TaylorBudget};

/// Highest bifurcation-function order.
pub const MAX_F_ORDER: u32 = 4;

/// The graph `b = B(u)` of the zero manifold.
#[derive(Debug, Clone)]
pub enum BranchMap {
    Constant(Vec<f64>),
    /// One polynomial in `u` per `b` coordinate.
    Polynomial(Vec<Jet>),
}

/// Zero manifold `{(u, B(u)) : u ∈ V̄}` of `g_1` under the split `(m, n − m)`.
#[derive(Debug, Clone)]
pub struct BranchChart {
    pub n: usize,
    pub m: usize,
    pub map: BranchMap,
    pub u_lower: Vec<f64>,
    pub u_upper: Vec<f64>,
    /// Smallest admissible singular value of `Δ_u`.
    pub delta_floor: f64,
}

impl BranchChart {
    pub fn new(
        n: usize,
        m: usize,
        map: BranchMap,
        u_lower: Vec<f64>,
        u_upper: Vec<f64>,
    ) -> Result<Self> {
        if m == 0 || m >= n {
            return Err(Error::InvalidParameter(format!("split needs 0 < m < n, got m={m}, n={n}")));
        }
        let k = n - m;
        let ok = match &map {
            BranchMap::Constant(v) => v.len() == k,
            BranchMap::Polynomial(p) => p.len() == k && p.iter().all(|j| j.space().num_vars() == m),
        };
        if !ok || u_lower.len() != m || u_upper.len() != m {
            return Err(Error::InvalidParameter("branch map dimensions do not match the split".into()));
        }
        Ok(Self {
            n,
            m,
            map,
            u_lower,
            u_upper,
            delta_floor: 1e-8,
        })
    }

    /// The chart `{(r, 0)}` used for Case B, `r ∈ [lo, hi]`.
    pub fn radial_axis(lo: f64, hi: f64) -> Self {
        Self {
            n: 2,
            m: 1,
            map: BranchMap::Constant(vec![0.0]),
            u_lower: vec![lo],
            u_upper: vec![hi],
            delta_floor: 1e-8,
        }
    }

    /// `B` evaluated in any scalar arithmetic.
    pub fn b_of<S: Scalar>(&self, u: &[S]) -> Vec<S> {
        match &self.map {
            BranchMap::Constant(v) => v.iter().map(|c| u[0].constant_like(*c)).collect(),
            BranchMap::Polynomial(p) => p.iter().map(|q| eval_polynomial(q, u)).collect(),
        }
    }

    pub fn point(&self, u: &[f64]) -> Vec<f64> {
        let mut z = u.to_vec();
        z.extend(self.b_of(u));
        z
    }

    fn eta_space(&self, eta_order: u32) -> Result<JetSpace> {
        Ok(JetSpace::new(JetSpec::uniform(self.m, eta_order)?))
    }

    /// `DB(u)` as an `(n−m) × m` matrix.
    pub fn db(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let t = self.b_tensor(u, 1)?;
        Ok(DMatrix::from_row_slice(self.n - self.m, self.m, &t.data))
    }

    /// `DᵏB(u)`.
    pub fn b_tensor(&self, u: &[f64], k: u32) -> Result<SymTensor> {
        let space = self.eta_space(k.max(1))?;
        let args: Vec<Jet> = (0..self.m).map(|v| space.variable(v, u[v])).collect();
        let b = self.b_of(&args);
        let vars: Vec<usize> = (0..self.m).collect();
        extract_tensor(&b, &vars, k)
    }
}

/// `Dg_1(z_u) = (Λ Γ; B Δ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub lambda: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub delta: DMatrix<f64>,
}

fn split_blocks(j: &DMatrix<f64>, m: usize) -> Blocks {
    let n = j.nrows();
    Blocks {
        lambda: j.view((0, 0), (m, m)).into_owned(),
        gamma: j.view((0, m), (m, n - m)).into_owned(),
        b: j.view((m, 0), (n - m, m)).into_owned(),
        delta: j.view((m, m), (n - m, n - m)).into_owned(),
    }
}

fn min_singular(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .singular_values()
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(*v))
}

/// Blocks of `Dg_1` at `z_u`; fails when `Δ_u` is singular.
pub fn block_decompose<Sys: StandardFormSystem>(
    sys: &Sys,
    chart: &BranchChart,
    u: &[f64],
    quad: &QuadratureSpec,
) -> Result<Blocks> {
    let ex = averaged_expansion(sys, &chart.point(u), TaylorBudget::new(1, 1, 2), quad)?;
    let blocks = split_blocks(&ex.jacobian(1)?, chart.m);
    check_delta(&blocks.delta, chart.delta_floor)?;
    Ok(blocks)
}

fn check_delta(delta: &DMatrix<f64>, floor: f64) -> Result<()> {
    let s = min_singular(delta);
    if s < floor {
        Err(Error::BranchDegeneracy(format!(
            "smallest singular value of Delta_u is {s:e} (floor {floor:e})"
        )))
    } else {
        Ok(())
    }
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting on the
/// constant parts.
pub fn solve_linear<S: Scalar>(mut a: Vec<Vec<S>>, mut b: Vec<S>) -> Result<Vec<S>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].value().abs().total_cmp(&a[j][col].value().abs()))
            .unwrap();
        if a[piv][col].value() == 0.0 {
            return Err(Error::DivisionSingularity);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let inv = a[col][col].try_recip()?;
        for row in col + 1..n {
            let f = a[row][col].clone() * inv.clone();
            for k in col..n {
                let t = a[col][k].clone() * f.clone();
                a[row][k] = a[row][k].clone() - t;
            }
            let t = b[col].clone() * f;
            b[row] = b[row].clone() - t;
        }
    }
    let mut x: Vec<S> = b.iter().map(|v| v.constant_like(0.0)).collect();
    for row in (0..n).rev() {
        let mut acc = b[row].clone();
        for k in row + 1..n {
            acc = acc - a[row][k].clone() * x[k].clone();
        }
        x[row] = acc.try_div(&a[row][row])?;
    }
    Ok(x)
}

/// Lifts a jet in `η` into the `(ε, η)` space.
fn lift(j: &Jet, target: &JetSpace) -> Jet {
    let mut out = target.zero();
    let src = j.space();
    for (i, &c) in j.coeffs().iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mut e = vec![0u32];
        e.extend_from_slice(src.exponents(i));
        if target.index_of(&e).is_some() {
            out.set_coeff(&e, c).expect("index checked");
        }
    }
    out
}

/// Coefficient of `εⁱ` as a jet in `η`.
fn eps_coeff(j: &Jet, i: u32, eta: &JetSpace) -> Jet {
    let mut out = eta.zero();
    for k in 0..eta.len() {
        let se = eta.exponents(k);
        let mut e = vec![i];
        e.extend_from_slice(se);
        if j.space().index_of(&e).is_some() {
            out.set_coeff(se, j.coeff(&e)).expect("same layout");
        }
    }
    out
}

/// Jets of the reduction at one base point `u*`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub m: usize,
    total: u32,
    eta: JetSpace,
    /// `c[i-1]` is `c_i(u* + η)`.
    c: Vec<Vec<Jet>>,
    /// `f[i-1]` is `f_i(u* + η)`.
    f: Vec<Vec<Jet>>,
    /// `Δ` at `η = 0`.
    pub delta: DMatrix<f64>,
    /// `‖g_1(z_u)‖∞`.
    pub g1_residual: f64,
}

impl Reduction {
    pub fn max_order(&self) -> u32 {
        self.f.len() as u32
    }

    /// Largest `u`-derivative order available for `f_i` and `c_i`.
    pub fn eta_order_for(&self, i: u32) -> u32 {
        self.total
            .saturating_sub(i + 1)
            .min(self.eta.spec().total_degree_cap())
    }

    fn jets<'a>(&self, v: &'a [Vec<Jet>], i: u32) -> Result<&'a [Jet]> {
        v.get((i as usize).wrapping_sub(1))
            .map(|x| x.as_slice())
            .ok_or(Error::OrderExceedsCap {
                order: i,
                cap: self.max_order(),
            })
    }

    fn tensor(&self, v: &[Vec<Jet>], i: u32, k: u32) -> Result<SymTensor> {
        let cap = self.eta_order_for(i);
        if k > cap {
            return Err(Error::OrderExceedsCap { order: k, cap });
        }
        let vars: Vec<usize> = (0..self.m).collect();
        extract_tensor(self.jets(v, i)?, &vars, k)
    }

    pub fn f(&self, i: u32) -> Result<Vec<f64>> {
        Ok(self.jets(&self.f, i)?.iter().map(|j| j.constant_term()).collect())
    }

    pub fn c(&self, i: u32) -> Result<Vec<f64>> {
        Ok(self.jets(&self.c, i)?.iter().map(|j| j.constant_term()).collect())
    }

    /// `Dᵏf_i(u*)`.
    pub fn f_tensor(&self, i: u32, k: u32) -> Result<SymTensor> {
        self.tensor(&self.f, i, k)
    }

    /// `Dᵏc_i(u*)`.
    pub fn c_tensor(&self, i: u32, k: u32) -> Result<SymTensor> {
        self.tensor(&self.c, i, k)
    }

    pub fn df(&self, i: u32) -> Result<DMatrix<f64>> {
        let t = self.f_tensor(i, 1)?;
        Ok(DMatrix::from_row_slice(self.m, self.m, &t.data))
    }
}

/// Reduction data at `u` from a precomputed expansion at `z_u`.
pub fn reduce_expansion(chart: &BranchChart, u: &[f64], ex: &AveragedExpansion) -> Result<Reduction> {
    let (n, m) = (chart.n, chart.m);
    let budget = ex.budget;
    let kmax = budget.eps.min(budget.total);
    let max_f = kmax.saturating_sub(1).min(MAX_F_ORDER);
    if max_f == 0 {
        return Err(Error::OrderExceedsCap { order: 1, cap: 0 });
    }
    let eta_order = budget.total.saturating_sub(2).max(1);
    let eta = chart.eta_space(eta_order)?;
    let mut caps = vec![kmax];
    caps.extend(std::iter::repeat(eta_order).take(m));
    let target = JetSpace::new(JetSpec::new(caps, budget.total)?);
    let eps = target.variable(0, 0.0);

    // δ_a = η, δ_b(η) = B(u* + η) − B(u*)
    let u_jets: Vec<Jet> = (0..m).map(|v| target.variable(v + 1, u[v])).collect();
    let b0 = chart.b_of(u);
    let b_shift: Vec<Jet> = chart
        .b_of(&u_jets)
        .into_iter()
        .zip(&b0)
        .map(|(j, c)| j - *c)
        .collect();
    let delta_a: Vec<Jet> = (0..m).map(|v| target.variable(v + 1, 0.0)).collect();
    let eps_pow: Vec<Jet> = (0..=kmax).map(|k| eps.powi(k)).collect();

    let g_all: Vec<&[Jet]> = (1..=kmax).map(|k| ex.g_jet(k)).collect::<Result<_>>()?;
    let compose = |db: &[Jet]| -> Result<Vec<Jet>> {
        let mut args = delta_a.clone();
        args.extend(db.iter().cloned());
        let mut out: Vec<Jet> = (0..n).map(|_| target.zero()).collect();
        for (k, gk) in g_all.iter().enumerate() {
            for (o, comp) in out.iter_mut().zip(gk.iter()) {
                let t = comp.compose(&args)?.try_mul(&eps_pow[k + 1])?;
                *o = o.try_add(&t)?;
            }
        }
        Ok(out)
    };

    let g1_residual = ex
        .value(1)?
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));

    let mut beta: Vec<Jet> = b_shift.clone();
    let mut c_jets = Vec::new();
    let mut f_jets = Vec::new();
    let mut delta0 = DMatrix::zeros(n - m, n - m);
    for i in 1..=max_f {
        let base = compose(&beta)?;
        let r0: Vec<Jet> = (m..n).map(|r| eps_coeff(&base[r], i + 1, &eta)).collect();
        let mut cols: Vec<Vec<Jet>> = Vec::with_capacity(n - m);
        for j in 0..(n - m) {
            let mut trial = beta.clone();
            trial[j] = trial[j].try_add(&eps_pow[i as usize])?;
            let g = compose(&trial)?;
            let col: Vec<Jet> = (m..n)
                .map(|r| eps_coeff(&g[r], i + 1, &eta).try_sub(&r0[r - m]))
                .collect::<Result<_>>()?;
            cols.push(col);
        }
        let mat: Vec<Vec<Jet>> = (0..n - m)
            .map(|r| (0..n - m).map(|j| cols[j][r].clone()).collect())
            .collect();
        if i == 1 {
            for r in 0..n - m {
                for j in 0..n - m {
                    delta0[(r, j)] = mat[r][j].constant_term();
                }
            }
            check_delta(&delta0, chart.delta_floor)?;
        }
        let rhs: Vec<Jet> = r0.iter().map(|j| -j.clone()).collect();
        let bi = solve_linear(mat, rhs)?;
        let fact: f64 = (1..=i).map(f64::from).product();
        c_jets.push(bi.iter().map(|j| j.scale(fact)).collect::<Vec<_>>());
        for (bj, x) in beta.iter_mut().zip(&bi) {
            *bj = bj.try_add(&lift(x, &target).try_mul(&eps_pow[i as usize])?)?;
        }
        let g = compose(&beta)?;
        f_jets.push((0..m).map(|r| eps_coeff(&g[r], i + 1, &eta)).collect());
    }

    Ok(Reduction {
        u: u.to_vec(),
        z: chart.point(u),
        m,
        total: budget.total,
        eta,
        c: c_jets,
        f: f_jets,
        delta: delta0,
        g1_residual,
    })
}

/// Reduction at `u` with the default `(ε ≤ 5, state ≤ 4, total 5)` budget.
pub fn reduce<Sys: StandardFormSystem>(
    sys: &Sys,
    chart: &BranchChart,
    u: &[f64],
    quad: &QuadratureSpec,
) -> Result<Reduction> {
    let ex = averaged_expansion(sys, &chart.point(u), TaylorBudget::default(), quad)?;
    reduce_expansion(chart, u, &ex)
}

fn reduce_to<Sys: StandardFormSystem>(
    sys: &Sys,
    chart: &BranchChart,
    u: &[f64],
    order: u32,
    eta_order: u32,
    quad: &QuadratureSpec,
) -> Result<Reduction> {
    let total = order + 1 + eta_order;
    let budget = TaylorBudget::new(order + 1, total - 1, total);
    let ex = averaged_expansion(sys, &chart.point(u), budget, quad)?;
    reduce_expansion(chart, u, &ex)
}

/// `c_i(u)`.
pub fn correction_c<Sys: StandardFormSystem>(
    sys: &Sys,
    chart: &BranchChart,
    u: &[f64],
    i: u32,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    check_order(i)?;
    reduce_to(sys, chart, u, i, 0, quad)?.c(i)
}

/// `f_i(u)`.
pub fn bifurcation_f<Sys: StandardFormSystem>(
    sys: &Sys,
    chart: &BranchChart,
    u: &[f64],
    i: u32,
    quad: &QuadratureSpec,
) -> Result<Vec<f64>> {
    check_order(i)?;
    reduce_to(sys, chart, u, i, 0, quad)?.f(i)
}

fn check_order(i: u32) -> Result<()> {
    if i == 0 || i > MAX_F_ORDER {
        Err(Error::InvalidParameter(format!("order must be in 1..={MAX_F_ORDER}, got {i}")))
    } else {
        Ok(())
    }
}

/// Samples of the chart residual `max |g_1(u, B(u))|` on a uniform grid.
pub fn verify_chart<Sys: StandardFormSystem>(
    sys: &Sys,
    chart: &BranchChart,
    points: usize,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for u in grid(chart, points) {
        let ex = averaged_expansion(sys, &chart.point(&u), TaylorBudget::new(1, 0, 1), quad)?;
        worst = ex.value(1)?.iter().fold(worst, |a, v| a.max(v.abs()));
    }
    Ok(worst)
}

fn grid(chart: &BranchChart, points: usize) -> Vec<Vec<f64>> {
    let p = points.max(2);
    // Tensor grid with roughly `points` nodes in total.
    let per = ((p as f64).powf(1.0 / chart.m as f64).round() as usize).max(2);
    let mut out = vec![vec![]];
    for v in 0..chart.m {
        let (lo, hi) = (chart.u_lower[v], chart.u_upper[v]);
        let mut next = Vec::new();
        for pre in &out {
            for k in 0..per {
                let mut q = pre.clone();
                q.push(lo + (hi - lo) * k as f64 / (per - 1) as f64);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Tolerances of the simple-zero search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroSearch {
    pub scan_points: usize,
    /// Residual tolerance, relative to `max(1, |Df_l(u)|·|u|)`.
    pub residual_tol: f64,
    pub det_floor: f64,
    /// Sup bound for `f_i`, `i < l`, on the chart grid.
    pub lower_order_tol: f64,
    pub check_points: usize,
    pub max_newton: usize,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        Self {
            scan_points: 64,
            residual_tol: 1e-10,
            det_floor: 1e-8,
            lower_order_tol: 1e-8,
            check_points: 16,
            max_newton: 30,
        }
    }
}

/// Result of the reduction at a simple zero of `f_l`.
#[derive(Debug, Clone, Serialize)]
pub struct BifurcationReport {
    pub order: u32,
    pub u_star: Vec<f64>,
    pub z0: Vec<f64>,
    /// `f_1..f_4` at `u*` (those available).
    pub f_values: Vec<Vec<f64>>,
    pub det_df: f64,
    pub residual: f64,
    pub c_values: Vec<Vec<f64>>,
    /// Supremum of `|f_i|`, `i < l`, over the check grid.
    pub lower_order_sup: f64,
    #[serde(skip)]
    pub reduction: Option<Reduction>,
}

/// Scan-then-Newton search for a simple zero of `f_l` in a one-dimensional
/// chart.
pub fn find_simple_zero<Sys: StandardFormSystem>(
    sys: &Sys,
    chart: &BranchChart,
    l: u32,
    search: &ZeroSearch,
    quad: &QuadratureSpec,
) -> Result<BifurcationReport> {
    check_order(l)?;
    if chart.m != 1 {
        return Err(Error::UnsupportedShape(
            "the zero search handles one-dimensional charts".into(),
        ));
    }
    let mut lower_sup = 0.0f64;
    if l > 1 {
        for u in grid(chart, search.check_points) {
            let red = reduce_to(sys, chart, &u, l - 1, 0, quad)?;
            for i in 1..l {
                lower_sup = red.f(i)?.iter().fold(lower_sup, |a, v| a.max(v.abs()));
            }
        }
        if lower_sup > search.lower_order_tol {
            return Err(Error::Precondition(format!(
                "lower-order bifurcation functions do not vanish (sup {lower_sup:e})"
            )));
        }
    }

    let fl = |u: f64| -> Result<(f64, f64)> {
        let red = reduce_to(sys, chart, &[u], l, 1, quad)?;
        Ok((red.f(l)?[0], red.df(l)?[(0, 0)]))
    };
    let (lo, hi) = (chart.u_lower[0], chart.u_upper[0]);
    let k = search.scan_points.max(2);
    let nodes: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
    let mut vals = Vec::with_capacity(k);
    for &u in &nodes {
        vals.push(fl(u)?.0);
    }
    let bracket = (0..k - 1).find(|&i| vals[i] == 0.0 || vals[i].signum() != vals[i + 1].signum());
    let i = bracket.ok_or_else(|| {
        Error::NoZeroFound(format!("f_{l} keeps its sign on [{lo}, {hi}]"))
    })?;
    let (mut a, mut b) = (nodes[i], nodes[i + 1]);
    let (mut fa, _) = (vals[i], vals[i + 1]);
    let mut u = if vals[i] == 0.0 { a } else { a - fa * (b - a) / (vals[i + 1] - fa) };
    let mut converged = false;
    for _ in 0..search.max_newton {
        let (f, df) = fl(u)?;
        let scale = (df.abs() * u.abs()).max(1.0);
        if f.abs() <= search.residual_tol * scale {
            converged = true;
            break;
        }
        if f.signum() == fa.signum() {
            a = u;
            fa = f;
        } else {
            b = u;
        }
        let step = if df != 0.0 { u - f / df } else { f64::NAN };
        u = if step.is_finite() && step > a.min(b) && step < a.max(b) {
            step
        } else {
            0.5 * (a + b)
        };
    }
    if !converged {
        return Err(Error::NoZeroFound(format!("Newton did not converge near u = {u}")));
    }

    let red = reduce(sys, chart, &[u], quad)?;
    let df = red.df(l)?[(0, 0)];
    if df.abs() < search.det_floor {
        return Err(Error::Nondegeneracy(format!("Df_{l}(u*) = {df:e}")));
    }
    let f_values = (1..=red.max_order()).map(|i| red.f(i)).collect::<Result<Vec<_>>>()?;
    let c_values = (1..=red.max_order()).map(|i| red.c(i)).collect::<Result<Vec<_>>>()?;
    Ok(BifurcationReport {
        order: l,
        u_star: vec![u],
        z0: chart.point(&[u]),
        residual: f_values[l as usize - 1][0],
        f_values,
        det_df: df,
        c_values,
        lower_order_sup: lower_sup,
        reduction: Some(red),
    })
}

/// `z(ε) = z_0 + ε z_1 + ε² z_2` for an `l = 2` report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZSeries {
    pub z0: Vec<f64>,
    pub z1: Vec<f64>,
    pub z2: Vec<f64>,
}

impl ZSeries {
    pub fn at(&self, eps: f64) -> Vec<f64> {
        (0..self.z0.len())
            .map(|k| self.z0[k] + eps * self.z1[k] + eps * eps * self.z2[k])
            .collect()
    }
}

/// Series coefficients of the initial condition from an `l = 2` reduction.
pub fn z_series(chart: &BranchChart, red: &Reduction) -> Result<ZSeries> {
    let m = chart.m;
    let u = &red.u;
    let df2 = red.df(2)?;
    let lu = df2
        .clone()
        .lu();
    if min_singular(&df2) < 1e-14 {
        return Err(Error::Nondegeneracy("Df_2(u*) is singular".into()));
    }
    let f3 = DVector::from_vec(red.f(3)?);
    let u1 = -lu.solve(&f3).ok_or_else(|| Error::Nondegeneracy("Df_2(u*)".into()))?;
    let u1v: Vec<f64> = u1.iter().copied().collect();
    let d2f2 = DVector::from_vec(red.f_tensor(2, 2)?.apply(&[&u1v, &u1v]));
    let df3 = DVector::from_vec(red.f_tensor(3, 1)?.apply(&[&u1v]));
    let f4 = DVector::from_vec(red.f(4)?);
    let rhs = d2f2 * 0.5 + df3 + f4;
    let u2 = -lu.solve(&rhs).ok_or_else(|| Error::Nondegeneracy("Df_2(u*)".into()))?;
    let u2v: Vec<f64> = u2.iter().copied().collect();

    let b0 = chart.b_of(u);
    let db = chart.b_tensor(u, 1)?;
    let d2b = chart.b_tensor(u, 2)?;
    let c1 = red.c(1)?;
    let c2 = red.c(2)?;
    let dc1 = red.c_tensor(1, 1)?.apply(&[&u1v]);
    let db_u1 = db.apply(&[&u1v]);
    let db_u2 = db.apply(&[&u2v]);
    let d2b_u1 = d2b.apply(&[&u1v, &u1v]);

    let mut z0 = u.clone();
    z0.extend(b0);
    let mut z1 = u1v.clone();
    z1.extend((0..chart.n - m).map(|k| db_u1[k] + c1[k]));
    let mut z2 = u2v.clone();
    z2.extend((0..chart.n - m).map(|k| 0.5 * d2b_u1[k] + db_u2[k] + dc1[k] + 0.5 * c2[k]));
    Ok(ZSeries { z0, z1, z2 })
}
