//! Truncated multivariate Taylor polynomials.
//!
//! Coefficients are stored densely in the Taylor convention: the entry for
//! multi-index `m` is `∂^|m| f / ∂x^m / m!`. Truncation drops every monomial
//! that exceeds a per-variable cap or the total-degree cap.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::error::{Error, Result};

/// Shape of a jet: per-variable degree caps and a total-degree cap.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JetSpec {
    caps: Vec<u32>,
    total: u32,
}

impl JetSpec {
    /// Per-variable caps above `total_degree_cap` are clipped to it.
    pub fn new(max_degree_per_var: Vec<u32>, total_degree_cap: u32) -> Result<Self> {
        if max_degree_per_var.is_empty() {
            return Err(Error::InvalidSpec("a jet needs at least one variable".into()));
        }
        if total_degree_cap > 32 {
            return Err(Error::InvalidSpec(format!(
                "total degree {total_degree_cap} is above the supported maximum 32"
            )));
        }
        let caps = max_degree_per_var
            .into_iter()
            .map(|c| c.min(total_degree_cap))
            .collect();
        Ok(Self {
            caps,
            total: total_degree_cap,
        })
    }

    pub fn uniform(num_vars: usize, degree: u32) -> Result<Self> {
        Self::new(vec![degree; num_vars], degree)
    }

    pub fn num_vars(&self) -> usize {
        self.caps.len()
    }

    pub fn max_degree_per_var(&self) -> &[u32] {
        &self.caps
    }

    pub fn total_degree_cap(&self) -> u32 {
        self.total
    }
}

const ABSENT: u32 = u32::MAX;

#[derive(Debug)]
struct Layout {
    spec: JetSpec,
    exps: Vec<u32>,
    degrees: Vec<u32>,
    strides: Vec<usize>,
    lookup: Vec<u32>,
    products: Vec<[u32; 3]>,
}

impl Layout {
    fn build(spec: JetSpec) -> Self {
        let nv = spec.num_vars();
        let mut strides = vec![1usize; nv];
        for v in (0..nv.saturating_sub(1)).rev() {
            strides[v] = strides[v + 1] * (spec.caps[v + 1] as usize + 1);
        }
        let table_len = strides[0] * (spec.caps[0] as usize + 1);

        let mut monos: Vec<Vec<u32>> = Vec::new();
        let mut cur = vec![0u32; nv];
        'outer: loop {
            if cur.iter().sum::<u32>() <= spec.total {
                monos.push(cur.clone());
            }
            let mut v = nv;
            loop {
                if v == 0 {
                    break 'outer;
                }
                v -= 1;
                if cur[v] < spec.caps[v] {
                    cur[v] += 1;
                    for w in cur.iter_mut().skip(v + 1) {
                        *w = 0;
                    }
                    break;
                }
            }
        }
        monos.sort_by_key(|m| m.iter().sum::<u32>());

        let mut lookup = vec![ABSENT; table_len];
        let mut exps = Vec::with_capacity(monos.len() * nv);
        let mut degrees = Vec::with_capacity(monos.len());
        let mut keys = Vec::with_capacity(monos.len());
        for (i, m) in monos.iter().enumerate() {
            let key: usize = m.iter().zip(&strides).map(|(&e, &s)| e as usize * s).sum();
            lookup[key] = i as u32;
            exps.extend_from_slice(m);
            degrees.push(m.iter().sum());
            keys.push(key);
        }

        let len = monos.len();
        let mut products = Vec::new();
        for i in 0..len {
            for j in 0..len {
                if degrees[i] + degrees[j] > spec.total {
                    continue;
                }
                let fits = (0..nv).all(|v| exps[i * nv + v] + exps[j * nv + v] <= spec.caps[v]);
                if fits {
                    let k = lookup[keys[i] + keys[j]];
                    products.push([i as u32, j as u32, k]);
                }
            }
        }

        Self {
            spec,
            exps,
            degrees,
            strides,
            lookup,
            products,
        }
    }
}

/// Shared monomial layout for all jets of one [`JetSpec`].
#[derive(Clone)]
pub struct JetSpace(Arc<Layout>);

impl fmt::Debug for JetSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "JetSpace({:?}, {} monomials)", self.0.spec, self.len())
    }
}

impl PartialEq for JetSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl JetSpace {
    pub fn new(spec: JetSpec) -> Self {
        Self(Arc::new(Layout::build(spec)))
    }

    pub fn spec(&self) -> &JetSpec {
        &self.0.spec
    }

    pub fn num_vars(&self) -> usize {
        self.0.spec.num_vars()
    }

    /// Number of stored monomials.
    pub fn len(&self) -> usize {
        self.0.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn exponents(&self, index: usize) -> &[u32] {
        let nv = self.num_vars();
        &self.0.exps[index * nv..(index + 1) * nv]
    }

    pub fn degree(&self, index: usize) -> u32 {
        self.0.degrees[index]
    }

    /// Position of a multi-index, or `None` when it is truncated away.
    pub fn index_of(&self, exps: &[u32]) -> Option<usize> {
        let l = &self.0;
        if exps.len() != self.num_vars() {
            return None;
        }
        let mut key = 0usize;
        let mut deg = 0u32;
        for (v, &e) in exps.iter().enumerate() {
            if e > l.spec.caps[v] {
                return None;
            }
            key += e as usize * l.strides[v];
            deg += e;
        }
        if deg > l.spec.total {
            return None;
        }
        match l.lookup[key] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    pub fn zero(&self) -> Jet {
        Jet {
            space: self.clone(),
            coeffs: vec![0.0; self.len()],
        }
    }

    pub fn constant(&self, c: f64) -> Jet {
        let mut j = self.zero();
        j.coeffs[0] = c;
        j
    }

    /// The jet `value + x_v`.
    pub fn variable(&self, v: usize, value: f64) -> Jet {
        let mut j = self.constant(value);
        let mut e = vec![0u32; self.num_vars()];
        e[v] = 1;
        if let Some(i) = self.index_of(&e) {
            j.coeffs[i] = 1.0;
        }
        j
    }

    /// Builds a jet from explicit (multi-index, coefficient) pairs; entries
    /// beyond the caps are dropped.
    pub fn from_terms(&self, terms: &[(&[u32], f64)]) -> Jet {
        let mut j = self.zero();
        for (e, c) in terms {
            if let Some(i) = self.index_of(e) {
                j.coeffs[i] += c;
            }
        }
        j
    }

    pub fn from_coeffs(&self, coeffs: Vec<f64>) -> Result<Jet> {
        if coeffs.len() != self.len() {
            return Err(Error::InvalidSpec(format!(
                "expected {} coefficients, got {}",
                self.len(),
                coeffs.len()
            )));
        }
        Ok(Jet {
            space: self.clone(),
            coeffs,
        })
    }
}

/// A truncated Taylor polynomial.
#[derive(Clone)]
pub struct Jet {
    space: JetSpace,
    coeffs: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = f.debug_map();
        for (i, c) in self.coeffs.iter().enumerate() {
            if *c != 0.0 {
                s.entry(&self.space.exponents(i), c);
            }
        }
        s.finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.coeffs == other.coeffs
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

impl Jet {
    pub fn space(&self) -> &JetSpace {
        &self.space
    }

    pub fn spec(&self) -> &JetSpec {
        self.space.spec()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn constant_term(&self) -> f64 {
        self.coeffs[0]
    }

    /// Taylor coefficient of a multi-index; zero if truncated away.
    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.space.index_of(exps).map_or(0.0, |i| self.coeffs[i])
    }

    pub fn set_coeff(&mut self, exps: &[u32], value: f64) -> Result<()> {
        let i = self.space.index_of(exps).ok_or_else(|| {
            Error::InvalidSpec(format!("multi-index {exps:?} is outside the caps"))
        })?;
        self.coeffs[i] = value;
        Ok(())
    }

    fn check(&self, other: &Jet) -> Result<()> {
        if self.space == other.space {
            Ok(())
        } else {
            Err(Error::IncompatibleSpec)
        }
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a + b))
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(self.zip(other, |a, b| a - b))
    }

    pub fn try_mul(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet> {
        self.check(other)?;
        Ok(self.mul_unchecked(&other.recip()?))
    }

    fn zip(&self, other: &Jet, f: impl Fn(f64, f64) -> f64) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn mul_unchecked(&self, other: &Jet) -> Jet {
        let mut out = vec![0.0; self.coeffs.len()];
        let a = &self.coeffs;
        let b = &other.coeffs;
        for &[i, j, k] in &self.space.0.products {
            let ai = a[i as usize];
            if ai != 0.0 {
                out[k as usize] += ai * b[j as usize];
            }
        }
        Jet {
            space: self.space.clone(),
            coeffs: out,
        }
    }

    pub fn scale(&self, c: f64) -> Jet {
        Jet {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add_constant(&self, c: f64) -> Jet {
        let mut j = self.clone();
        j.coeffs[0] += c;
        j
    }

    /// `Σ_k c_k (self − a₀)^k` for the given Taylor coefficients of a scalar
    /// function at `a₀`.
    fn compose_series(&self, series: &[f64]) -> Jet {
        let mut h = self.clone();
        h.coeffs[0] = 0.0;
        let mut acc = self.space.constant(*series.last().unwrap_or(&0.0));
        for &c in series.iter().rev().skip(1) {
            acc = acc.mul_unchecked(&h);
            acc.coeffs[0] += c;
        }
        acc
    }

    fn series_len(&self) -> usize {
        self.spec().total_degree_cap() as usize + 1
    }

    pub fn sin(&self) -> Jet {
        let a = self.coeffs[0];
        let (s, c) = a.sin_cos();
        let cyc = [s, c, -s, -c];
        let series: Vec<f64> = (0..self.series_len())
            .map(|k| cyc[k % 4] / factorial(k as u32))
            .collect();
        self.compose_series(&series)
    }

    pub fn cos(&self) -> Jet {
        let a = self.coeffs[0];
        let (s, c) = a.sin_cos();
        let cyc = [c, -s, -c, s];
        let series: Vec<f64> = (0..self.series_len())
            .map(|k| cyc[k % 4] / factorial(k as u32))
            .collect();
        self.compose_series(&series)
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.coeffs[0];
        if !(a > 0.0) {
            return Err(Error::ElementaryDomain {
                function: "sqrt",
                value: a,
            });
        }
        // binom(1/2, k) a^(1/2 - k)
        let mut series = Vec::with_capacity(self.series_len());
        let mut c = a.sqrt();
        for k in 0..self.series_len() {
            series.push(c);
            c *= (0.5 - k as f64) / ((k + 1) as f64) / a;
        }
        Ok(self.compose_series(&series))
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.coeffs[0];
        if a == 0.0 || !a.is_finite() {
            return Err(Error::DivisionSingularity);
        }
        let mut series = Vec::with_capacity(self.series_len());
        let mut c = 1.0 / a;
        for _ in 0..self.series_len() {
            series.push(c);
            c *= -1.0 / a;
        }
        Ok(self.compose_series(&series))
    }

    pub fn exp(&self) -> Jet {
        let e = self.coeffs[0].exp();
        let series: Vec<f64> = (0..self.series_len())
            .map(|k| e / factorial(k as u32))
            .collect();
        self.compose_series(&series)
    }

    pub fn powi(&self, n: u32) -> Jet {
        let mut acc = self.space.constant(1.0);
        for _ in 0..n {
            acc = acc.mul_unchecked(self);
        }
        acc
    }

    /// Partial derivative in variable `v`, kept in the same space.
    pub fn derivative(&self, v: usize) -> Jet {
        let mut out = self.space.zero();
        let nv = self.space.num_vars();
        let mut e = vec![0u32; nv];
        for i in 0..self.coeffs.len() {
            let ex = self.space.exponents(i);
            if ex[v] == 0 || self.coeffs[i] == 0.0 {
                continue;
            }
            e.copy_from_slice(ex);
            e[v] -= 1;
            let k = self.space.index_of(&e).expect("lower monomial is stored");
            out.coeffs[k] = self.coeffs[i] * f64::from(ex[v]);
        }
        out
    }

    /// Evaluates the polynomial at a point of offsets.
    pub fn eval(&self, point: &[f64]) -> f64 {
        let nv = self.space.num_vars();
        let mut sum = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mut t = c;
            for v in 0..nv {
                let e = self.space.exponents(i)[v];
                if e > 0 {
                    t *= point[v].powi(e as i32);
                }
            }
            sum += t;
        }
        sum
    }

    /// Substitutes `args[v]` for variable `v`. Exact when every argument has a
    /// zero constant term; otherwise the result is the truncated composition.
    pub fn compose(&self, args: &[Jet]) -> Result<Jet> {
        let nv = self.space.num_vars();
        if args.len() != nv {
            return Err(Error::InvalidSpec(format!(
                "compose needs {nv} arguments, got {}",
                args.len()
            )));
        }
        let target = args[0].space.clone();
        for a in args {
            if a.space != target {
                return Err(Error::IncompatibleSpec);
            }
        }
        let caps = self.spec().max_degree_per_var();
        let powers: Vec<Vec<Jet>> = args
            .iter()
            .zip(caps)
            .map(|(a, &cap)| {
                let mut p = vec![target.constant(1.0)];
                for k in 1..=cap as usize {
                    let next = p[k - 1].mul_unchecked(a);
                    p.push(next);
                }
                p
            })
            .collect();
        let mut out = target.zero();
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let ex = self.space.exponents(i);
            let mut term = target.constant(c);
            for v in 0..nv {
                if ex[v] > 0 {
                    term = term.mul_unchecked(&powers[v][ex[v] as usize]);
                }
            }
            for (o, t) in out.coeffs.iter_mut().zip(&term.coeffs) {
                *o += t;
            }
        }
        Ok(out)
    }

    /// Dense order-`l` derivative tensor in the variables `vars`, taken at the
    /// multi-index `base` (Taylor coefficient of the remaining variables).
    /// Entry `[i₁..i_l]` is `∂^l/∂x_{vars[i₁]}…∂x_{vars[i_l]}` in derivative
    /// convention.
    pub fn tensor_at(&self, base: &[u32], vars: &[usize], order: u32) -> Result<Vec<f64>> {
        let caps = self.spec().max_degree_per_var();
        let base_deg: u32 = base.iter().sum();
        for &v in vars {
            if order > caps[v] {
                return Err(Error::OrderExceedsCap {
                    order,
                    cap: caps[v],
                });
            }
        }
        if base_deg + order > self.spec().total_degree_cap() {
            return Err(Error::OrderExceedsCap {
                order: base_deg + order,
                cap: self.spec().total_degree_cap(),
            });
        }
        let d = vars.len();
        let size = d.pow(order);
        let mut out = vec![0.0; size];
        let mut idx = vec![0usize; order as usize];
        let mut e = base.to_vec();
        for (flat, slot) in out.iter_mut().enumerate() {
            let mut rem = flat;
            for k in (0..order as usize).rev() {
                idx[k] = rem % d;
                rem /= d;
            }
            e.copy_from_slice(base);
            for &k in &idx {
                e[vars[k]] += 1;
            }
            let mult: f64 = vars
                .iter()
                .map(|&v| factorial(e[v] - base[v]))
                .product();
            *slot = self.coeff(&e) * mult;
        }
        Ok(out)
    }
}

/// Order-`l` multilinear map from `(R^in)^l` to `R^out`, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor<S = f64> {
    pub out_dim: usize,
    pub in_dim: usize,
    pub order: u32,
    pub data: Vec<S>,
}

impl<S: Scalar> SymTensor<S> {
    pub fn entry(&self, out: usize, idx: &[usize]) -> &S {
        let mut flat = out;
        for &i in idx {
            flat = flat * self.in_dim + i;
        }
        &self.data[flat]
    }

    /// Applies the tensor to `order` vectors.
    pub fn apply(&self, args: &[&[S]]) -> Vec<S> {
        assert_eq!(args.len(), self.order as usize, "tensor arity mismatch");
        let block = self.in_dim.pow(self.order);
        let zero = self.data[0].constant_like(0.0);
        let weights = self.weights(args, &zero);
        (0..self.out_dim)
            .map(|o| {
                let slice = &self.data[o * block..(o + 1) * block];
                slice
                    .iter()
                    .zip(&weights)
                    .fold(zero.clone(), |acc, (t, w)| acc + t.clone() * w.clone())
            })
            .collect()
    }

    fn weights(&self, args: &[&[S]], zero: &S) -> Vec<S> {
        let mut w = vec![zero.constant_like(1.0)];
        for a in args {
            let mut next = Vec::with_capacity(w.len() * self.in_dim);
            for x in &w {
                for ai in a.iter() {
                    next.push(x.clone() * ai.clone());
                }
            }
            w = next;
        }
        w
    }
}

/// Derivative tensor of a vector of jets at the origin of `vars`.
pub fn extract_tensor(components: &[Jet], vars: &[usize], order: u32) -> Result<SymTensor> {
    let base = vec![0u32; components.first().map_or(0, |j| j.space.num_vars())];
    extract_tensor_at(components, &base, vars, order)
}

/// As [`extract_tensor`], at a fixed multi-index of the remaining variables.
pub fn extract_tensor_at(
    components: &[Jet],
    base: &[u32],
    vars: &[usize],
    order: u32,
) -> Result<SymTensor> {
    let mut data = Vec::new();
    for c in components {
        data.extend(c.tensor_at(base, vars, order)?);
    }
    Ok(SymTensor {
        out_dim: components.len(),
        in_dim: vars.len(),
        order,
        data,
    })
}

/// Number-like values usable in generic right-hand sides: `f64` or [`Jet`].
pub trait Scalar:
    Clone
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn constant_like(&self, c: f64) -> Self;
    fn value(&self) -> f64;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn try_sqrt(&self) -> Result<Self>;
    fn try_recip(&self) -> Result<Self>;

    fn try_div(&self, other: &Self) -> Result<Self> {
        Ok(self.clone() * other.try_recip()?)
    }

    fn powu(&self, n: u32) -> Self {
        let mut acc = self.constant_like(1.0);
        for _ in 0..n {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    fn constant_like(&self, c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn try_sqrt(&self) -> Result<Self> {
        if *self >= 0.0 {
            Ok(f64::sqrt(*self))
        } else {
            Err(Error::ElementaryDomain {
                function: "sqrt",
                value: *self,
            })
        }
    }
    fn try_recip(&self) -> Result<Self> {
        if *self == 0.0 || !self.is_finite() {
            Err(Error::DivisionSingularity)
        } else {
            Ok(1.0 / *self)
        }
    }
    fn powu(&self, n: u32) -> Self {
        self.powi(n as i32)
    }
}

impl Scalar for Jet {
    fn constant_like(&self, c: f64) -> Self {
        self.space.constant(c)
    }
    fn value(&self) -> f64 {
        self.coeffs[0]
    }
    fn sin(&self) -> Self {
        Jet::sin(self)
    }
    fn cos(&self) -> Self {
        Jet::cos(self)
    }
    fn try_sqrt(&self) -> Result<Self> {
        self.sqrt()
    }
    fn try_recip(&self) -> Result<Self> {
        self.recip()
    }
    fn powu(&self, n: u32) -> Self {
        self.powi(n)
    }
}

fn expect_same(a: &Jet, b: &Jet) {
    assert!(
        a.space == b.space,
        "jet arithmetic between different specs: {:?} vs {:?}",
        a.spec(),
        b.spec()
    );
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr for Jet {
            type Output = Jet;
            fn $m(self, rhs: Jet) -> Jet {
                expect_same(&self, &rhs);
                $body(&self, &rhs)
            }
        }
        impl<'a> $tr<&'a Jet> for &'a Jet {
            type Output = Jet;
            fn $m(self, rhs: &'a Jet) -> Jet {
                expect_same(self, rhs);
                $body(self, rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a: &Jet, b: &Jet| a.zip(b, |x, y| x + y));
jet_binop!(Sub, sub, |a: &Jet, b: &Jet| a.zip(b, |x, y| x - y));
jet_binop!(Mul, mul, |a: &Jet, b: &Jet| a.mul_unchecked(b));

impl Div for Jet {
    type Output = Jet;
    /// Panics when the divisor has a zero constant term; use [`Jet::try_div`]
    /// to get an error instead.
    fn div(self, rhs: Jet) -> Jet {
        self.try_div(&rhs).expect("jet division")
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, c: f64) -> Jet {
        self.coeffs[0] += c;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, c: f64) -> Jet {
        self.coeffs[0] -= c;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, c: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|x| *x *= c);
        self
    }
}

impl Div<f64> for Jet {
    type Output = Jet;
    fn div(mut self, c: f64) -> Jet {
        self.coeffs.iter_mut().for_each(|x| *x /= c);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eps_space(deg: u32) -> JetSpace {
        JetSpace::new(JetSpec::uniform(1, deg).unwrap())
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn cancellation_and_identity() {
        let s = eps_space(3);
        let e = s.variable(0, 0.0);
        let a = s.constant(1.0) + e.clone();
        let b = s.constant(1.0) - e.clone();
        assert_eq!((a + b).coeffs(), s.constant(2.0).coeffs());
        assert_eq!((e.clone() + s.zero()).coeffs(), e.coeffs());
        let e2 = e.clone() * e.clone();
        let sum = (e.clone() + e2.clone()) + e2;
        assert!(close(sum.coeffs(), &[0.0, 1.0, 2.0, 0.0], 0.0));
    }

    #[test]
    fn truncated_products() {
        let s = eps_space(2);
        let e = s.variable(0, 0.0);
        let p = (s.constant(1.0) + e.clone()) * (s.constant(1.0) - e.clone());
        assert!(close(p.coeffs(), &[1.0, 0.0, -1.0], 1e-15));
        let s1 = eps_space(1);
        let e1 = s1.variable(0, 0.0);
        assert!(close((e1.clone() * e1).coeffs(), &[0.0, 0.0], 0.0));

        let xy = JetSpace::new(JetSpec::uniform(2, 2).unwrap());
        let x = xy.variable(0, 0.0);
        let y = xy.variable(1, 0.0);
        let sq = (x.clone() + y.clone()) * (x + y);
        assert_eq!(sq.coeff(&[2, 0]), 1.0);
        assert_eq!(sq.coeff(&[1, 1]), 2.0);
        assert_eq!(sq.coeff(&[0, 2]), 1.0);
    }

    #[test]
    fn division_examples() {
        let s = eps_space(3);
        let e = s.variable(0, 0.0);
        let g = s.constant(1.0).try_div(&(s.constant(1.0) - e.clone())).unwrap();
        assert!(close(g.coeffs(), &[1.0, 1.0, 1.0, 1.0], 1e-15));
        let s2 = eps_space(2);
        let e2 = s2.variable(0, 0.0);
        let q = e2.try_div(&(s2.constant(1.0) + e2.clone())).unwrap();
        assert!(close(q.coeffs(), &[0.0, 1.0, -1.0], 1e-15));
        assert_eq!(e2.try_div(&e2), Err(Error::DivisionSingularity));
    }

    #[test]
    fn elementary_examples() {
        let s = eps_space(5);
        let e = s.variable(0, 0.0);
        let si = e.sin();
        assert!(close(
            si.coeffs(),
            &[0.0, 1.0, 0.0, -1.0 / 6.0, 0.0, 1.0 / 120.0],
            1e-16
        ));
        let s2 = eps_space(2);
        let r = (s2.constant(1.0) + s2.variable(0, 0.0)).sqrt().unwrap();
        assert!(close(r.coeffs(), &[1.0, 0.5, -0.125], 1e-16));
        assert!(close(s.zero().cos().coeffs(), s.constant(1.0).coeffs(), 0.0));
        assert!(matches!(
            s.constant(-1.0).sqrt(),
            Err(Error::ElementaryDomain { .. })
        ));
    }

    #[test]
    fn spec_mismatch_is_an_error() {
        let a = eps_space(2).constant(1.0);
        let b = eps_space(3).constant(1.0);
        assert_eq!(a.try_add(&b), Err(Error::IncompatibleSpec));
        assert_eq!(a.try_mul(&b), Err(Error::IncompatibleSpec));
    }

    #[test]
    fn tensor_examples() {
        let xy = JetSpace::new(JetSpec::uniform(2, 3).unwrap());
        let x2y = xy.from_terms(&[(&[2, 1], 1.0)]);
        let t = extract_tensor(&[x2y], &[0, 1], 2).unwrap();
        assert!(t.data.iter().all(|&v| v == 0.0));
        let x2 = xy.from_terms(&[(&[2, 0], 1.0)]);
        let t = extract_tensor(&[x2], &[0, 1], 2).unwrap();
        assert_eq!(*t.entry(0, &[0, 0]), 2.0);
        assert_eq!(t.data, vec![2.0, 0.0, 0.0, 0.0]);
        let mixed = xy.from_terms(&[(&[1, 2], 1.0)]);
        let t = extract_tensor(&[mixed], &[0, 1], 3).unwrap();
        // ∂³(xy²)/∂x∂y∂y = 2 for each ordering of (x,y,y)
        assert_eq!(*t.entry(0, &[0, 1, 1]), 2.0);
        assert_eq!(*t.entry(0, &[1, 0, 1]), 2.0);
        assert_eq!(*t.entry(0, &[1, 1, 1]), 0.0);
        assert!(matches!(
            extract_tensor(&[xy.zero()], &[0], 4),
            Err(Error::OrderExceedsCap { .. })
        ));
    }

    #[test]
    fn tensor_apply_matches_directional_derivative() {
        let xy = JetSpace::new(JetSpec::uniform(2, 3).unwrap());
        let x = xy.variable(0, 0.0);
        let y = xy.variable(1, 0.0);
        let f = x.clone() * x.clone() * y.clone() + y.clone() * y.clone() * 3.0;
        let t = extract_tensor(&[f], &[0, 1], 2).unwrap();
        let v = [1.0, 2.0];
        // Hessian at 0: [[0,0],[0,6]] -> v·H·v = 24
        assert_eq!(t.apply(&[&v, &v]), vec![24.0]);
    }

    #[test]
    fn derivative_and_compose() {
        let xy = JetSpace::new(JetSpec::uniform(2, 3).unwrap());
        let x = xy.variable(0, 0.0);
        let y = xy.variable(1, 0.0);
        let f = x.clone() * x.clone() * y.clone() + y.clone() * 3.0;
        let fx = f.derivative(0);
        assert_eq!(fx.coeff(&[1, 1]), 2.0);
        assert_eq!(fx.coeff(&[0, 0]), 0.0);
        let t = JetSpace::new(JetSpec::uniform(1, 3).unwrap());
        let s = t.variable(0, 0.0);
        let g = f.compose(&[s.clone(), s.clone() * 2.0]).unwrap();
        assert!(close(g.coeffs(), &[0.0, 6.0, 0.0, 2.0], 1e-15));
        assert!((f.eval(&[0.5, 2.0]) - (0.25 * 2.0 + 6.0)).abs() < 1e-15);
    }

    #[test]
    fn per_variable_caps() {
        let sp = JetSpace::new(JetSpec::new(vec![5, 2, 2], 5).unwrap());
        assert!(sp.index_of(&[5, 0, 0]).is_some());
        assert!(sp.index_of(&[0, 3, 0]).is_none());
        assert!(sp.index_of(&[4, 1, 1]).is_none());
        let e = sp.variable(0, 0.0);
        let x = sp.variable(1, 0.0);
        let p = x.clone() * x.clone() * x;
        assert!(p.coeffs().iter().all(|&c| c == 0.0));
        assert_eq!(e.powi(5).coeff(&[5, 0, 0]), 1.0);
    }
}
