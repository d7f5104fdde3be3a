//! Two-scale representation of eigenfunctions and sources.
//!
//! Every function in the pipeline is a sum `value(y) = slow(y) + fast(y)`:
//!
//! - the *slow* part is a log-series about the complex critical point `y_c`
//!   on `[0, sigma]`, a dense grid on `[sigma, Y0]`, and an exponential tail
//!   tag beyond `Y0`;
//! - the *fast* part lives on a fine grid spanning the critical layer
//!   `[0, theta nu^{1/4}]`, optionally backed by a closed-form combination of
//!   Airy functions (an [`AiryChain`]) so that derivatives, which scale like
//!   `gamma ~ nu^{-1/4}` per order, can be taken analytically instead of by
//!   finite differences.
//!
//! The series engine stores terms `c * Y^n log^p Y` (`Y = y - y_c`, principal
//! branch) in a map keyed by `(n, p)`. A general [`SeriesTerms`] admits any
//! integer power and `p <= 4` and supports products and differentiation; the
//! storable [`SeriesRep`] is the validated subset (`n >= 0` plus the singular
//! slots `Y^{-1}`, `Y^{-2}`, `Y^{-1} log Y`, all with `p <= 2`) that solution
//! objects are allowed to carry.
//!
//! Integrals over `[0, sigma]` use Gauss-Legendre panels graded geometrically
//! toward the critical point, with each factor evaluated through its own
//! closure; this sidesteps ever needing to merge series with different
//! centers. The remaining pieces are uniform-grid Simpson sums and closed
//! forms for the tails.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{airy_all, AiryBundle};

type C64 = Complex64;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

// ---------------------------------------------------------------------------
// series engine
// ---------------------------------------------------------------------------

/// General log-Laurent series about a complex center: `sum c * Y^n log^p Y`.
///
/// This is the working object for products, derivatives and source algebra;
/// it cannot be stored in a solution (see [`SeriesRep`] for that).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesTerms {
    pub center: C64,
    #[serde(
        serialize_with = "serialize_terms",
        deserialize_with = "deserialize_terms"
    )]
    terms: BTreeMap<(i32, u8), C64>,
}

fn serialize_terms<S: serde::Serializer>(
    t: &BTreeMap<(i32, u8), C64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(t.len()))?;
    for (&(n, p), &c) in t {
        seq.serialize_element(&(n, p, c.re, c.im))?;
    }
    seq.end()
}

fn deserialize_terms<'de, D: serde::Deserializer<'de>>(
    d: D,
) -> std::result::Result<BTreeMap<(i32, u8), C64>, D::Error> {
    let v: Vec<(i32, u8, f64, f64)> = Vec::deserialize(d)?;
    Ok(v.into_iter().map(|(n, p, re, im)| ((n, p), C64::new(re, im))).collect())
}

impl SeriesTerms {
    pub fn new(center: C64) -> Self {
        SeriesTerms { center, terms: BTreeMap::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, n: i32, p: u8) -> C64 {
        self.terms.get(&(n, p)).copied().unwrap_or_else(czero)
    }

    pub fn add_term(&mut self, n: i32, p: u8, c: C64) {
        debug_assert!(p <= 4, "log power {p} out of range");
        if c != czero() {
            *self.terms.entry((n, p)).or_insert_with(czero) += c;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = ((i32, u8), C64)> + '_ {
        self.terms.iter().map(|(&k, &v)| (k, v))
    }

    /// Largest power present, if any.
    pub fn max_degree(&self) -> Option<i32> {
        self.terms.keys().map(|&(n, _)| n).max()
    }

    pub fn scale(&mut self, s: C64) {
        for v in self.terms.values_mut() {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &SeriesTerms, weight: C64) {
        debug_assert!(same_center(self.center, other.center), "series centers differ");
        for ((n, p), c) in other.iter() {
            self.add_term(n, p, weight * c);
        }
    }

    /// Evaluates at real `y` (the complex offset `Y = y - y_c` never hits the
    /// branch cut because `Im y_c != 0`).
    pub fn value(&self, y: f64) -> C64 {
        self.value_at_offset(C64::new(y, 0.0) - self.center)
    }

    /// Evaluates at a complex offset `Y` from the center.
    pub fn value_at_offset(&self, yy: C64) -> C64 {
        if self.terms.is_empty() {
            return czero();
        }
        let ln = yy.ln();
        let mut lnp = [C64::new(1.0, 0.0); 5];
        for p in 1..5 {
            lnp[p] = lnp[p - 1] * ln;
        }
        // walk terms in key order, tracking Y^n incrementally
        let mut acc = czero();
        let mut cur_n = i32::MIN;
        let mut pow = C64::new(1.0, 0.0);
        for ((n, p), c) in self.iter() {
            if n != cur_n {
                pow = powi_c(yy, n);
                cur_n = n;
            }
            acc += c * pow * lnp[p as usize];
        }
        acc
    }

    /// Conjugate as a function on the real axis: conjugated center and
    /// coefficients. Pointwise exact, `conj(f)(y) = f.conjugate()(y)` for
    /// real `y`: the offset `y - conj(y_c)` never crosses the log branch
    /// cut, so `ln` commutes with conjugation.
    pub fn conjugate(&self) -> SeriesTerms {
        let mut out = SeriesTerms::new(self.center.conj());
        for ((n, p), c) in self.iter() {
            out.add_term(n, p, c.conj());
        }
        out
    }

    /// Term-wise derivative in `y`; powers drop by one, log powers shed.
    pub fn derivative(&self) -> SeriesTerms {
        let mut out = SeriesTerms::new(self.center);
        for ((n, p), c) in self.iter() {
            if n != 0 {
                out.add_term(n - 1, p, c * n as f64);
            }
            if p > 0 {
                out.add_term(n - 1, p - 1, c * p as f64);
            }
        }
        out
    }

    /// Product of two series about the same center.
    pub fn multiply(&self, other: &SeriesTerms) -> SeriesTerms {
        debug_assert!(same_center(self.center, other.center), "series centers differ");
        let mut out = SeriesTerms::new(self.center);
        for ((n1, p1), c1) in self.iter() {
            for ((n2, p2), c2) in other.iter() {
                let p = p1 + p2;
                debug_assert!(p <= 4, "log power overflow in product");
                out.add_term(n1 + n2, p.min(4), c1 * c2);
            }
        }
        out
    }

    /// Drops powers above `n_max` (series are asymptotic in the zone radius;
    /// products double the degree and the excess carries no information).
    pub fn truncate_degree(&mut self, n_max: i32) {
        self.terms.retain(|&(n, _), _| n <= n_max);
    }

    /// Magnitude scale of the series: max over terms of `|c| r^n` at the zone
    /// radius `r` (log factors ignored; this is a scale, not a norm).
    pub fn weight_at(&self, r: f64) -> f64 {
        self.iter().map(|((n, _), c)| c.norm() * r.powi(n)).fold(0.0, f64::max)
    }

    /// Removes terms whose contribution at radius `r` is below `tol` times
    /// the series scale.
    pub fn prune(&mut self, r: f64, tol: f64) {
        let w = self.weight_at(r);
        if w == 0.0 {
            return;
        }
        self.terms.retain(|&(n, _), c| c.norm() * r.powi(n) > tol * w);
    }
}

fn same_center(a: C64, b: C64) -> bool {
    (a - b).norm() <= 1e-12 * (1.0 + a.norm())
}

fn powi_c(z: C64, n: i32) -> C64 {
    if n >= 0 {
        z.powu(n as u32)
    } else {
        z.powu((-n) as u32).inv()
    }
}

/// The storable subset of [`SeriesTerms`]: regular powers `n in 0..=n_max`
/// with log powers up to 2, plus the singular slots `Y^{-1}`, `Y^{-2}` and
/// `Y^{-1} log Y`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesRep {
    terms: SeriesTerms,
    /// Right edge of the series zone.
    pub sigma: f64,
}

fn storable(n: i32, p: u8) -> bool {
    match (n, p) {
        (-2, 0) | (-1, 0) | (-1, 1) => true,
        _ => n >= 0 && p <= 2,
    }
}

impl SeriesRep {
    pub fn empty(center: C64, sigma: f64) -> Self {
        SeriesRep { terms: SeriesTerms::new(center), sigma }
    }

    /// Validates and wraps general terms. Out-of-basis terms below
    /// `tol`-relative weight at the zone radius are dropped silently; larger
    /// ones are an error (the caller's algebra produced something this
    /// representation cannot hold).
    pub fn from_terms(mut t: SeriesTerms, sigma: f64, tol: f64) -> Result<Self> {
        let w = t.weight_at(sigma).max(1e-300);
        let mut bad = Vec::new();
        for ((n, p), c) in t.iter() {
            if !storable(n, p) && c.norm() * sigma.powi(n) > tol * w {
                bad.push((n, p, c.norm() * sigma.powi(n) / w));
            }
        }
        if let Some(&(n, p, rel)) = bad.first() {
            return Err(Error::repr_overflow(format!(
                "term Y^{n} log^{p} with relative weight {rel:.2e} cannot be stored"
            )));
        }
        t.terms.retain(|&(n, p), _| storable(n, p));
        Ok(SeriesRep { terms: t, sigma })
    }

    pub fn center(&self) -> C64 {
        self.terms.center
    }

    pub fn terms(&self) -> &SeriesTerms {
        &self.terms
    }

    pub fn terms_mut(&mut self) -> &mut SeriesTerms {
        &mut self.terms
    }

    pub fn value(&self, y: f64) -> C64 {
        self.terms.value(y)
    }

    pub fn deriv_series(&self) -> SeriesTerms {
        self.terms.derivative()
    }
}

// ---------------------------------------------------------------------------
// grids
// ---------------------------------------------------------------------------

/// Uniform complex-valued grid on `[y0, y0 + h*(len-1)]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridRep {
    pub y0: f64,
    pub h: f64,
    pub vals: Vec<C64>,
}

impl GridRep {
    pub fn from_fn(y0: f64, h: f64, len: usize, mut f: impl FnMut(f64) -> C64) -> Self {
        let vals = (0..len).map(|i| f(y0 + i as f64 * h)).collect();
        GridRep { y0, h, vals }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn y_end(&self) -> f64 {
        self.y0 + self.h * (self.vals.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.y0 + self.h * i as f64
    }

    pub fn last(&self) -> C64 {
        *self.vals.last().expect("empty grid")
    }

    pub fn same_layout(&self, other: &GridRep) -> bool {
        self.vals.len() == other.vals.len()
            && (self.y0 - other.y0).abs() <= 1e-12 * (1.0 + self.y0.abs())
            && (self.h - other.h).abs() <= 1e-12 * self.h
    }

    fn stencil(&self, y: f64, width: usize) -> usize {
        let t = (y - self.y0) / self.h;
        let i = t.floor() as isize - (width as isize / 2 - 1);
        i.clamp(0, self.vals.len() as isize - width as isize) as usize
    }

    /// Cubic (4-point Lagrange) interpolation.
    pub fn value(&self, y: f64) -> C64 {
        if self.vals.len() < 4 {
            debug_assert!(!self.vals.is_empty());
            return self.vals[0];
        }
        let j = self.stencil(y, 4);
        let mut acc = czero();
        for a in 0..4 {
            let mut w = 1.0;
            let ya = self.node(j + a);
            for b in 0..4 {
                if a != b {
                    w *= (y - self.node(j + b)) / (ya - self.node(j + b));
                }
            }
            acc += w * self.vals[j + a];
        }
        acc
    }

    /// Derivative of the local cubic interpolant.
    pub fn deriv(&self, y: f64) -> C64 {
        if self.vals.len() < 4 {
            return czero();
        }
        let j = self.stencil(y, 4);
        let mut acc = czero();
        for a in 0..4 {
            let ya = self.node(j + a);
            let mut denom = 1.0;
            for b in 0..4 {
                if b != a {
                    denom *= ya - self.node(j + b);
                }
            }
            // d/dy prod_{b != a} (y - y_b) = sum_k prod_{b != a, k} (y - y_b)
            let mut dnum = 0.0;
            for k in 0..4 {
                if k == a {
                    continue;
                }
                let mut prod = 1.0;
                for b in 0..4 {
                    if b != a && b != k {
                        prod *= y - self.node(j + b);
                    }
                }
                dnum += prod;
            }
            acc += dnum / denom * self.vals[j + a];
        }
        acc
    }

    /// Second derivative of the local quartic (5-point Lagrange) interpolant
    /// (adequate for smooth outer content; fast content uses Airy chains).
    pub fn deriv2(&self, y: f64) -> C64 {
        let n = self.vals.len();
        if n < 5 {
            return czero();
        }
        let t = (y - self.y0) / self.h;
        let j = (t.round() as isize - 2).clamp(0, n as isize - 5) as usize;
        let mut acc = czero();
        for a in 0..5 {
            let ya = self.node(j + a);
            let mut denom = 1.0;
            for b in 0..5 {
                if b != a {
                    denom *= ya - self.node(j + b);
                }
            }
            // L_a'' = 2 sum_{k<l} prod_{b != a,k,l} (y - y_b) / denom
            let mut d2 = 0.0;
            for k in 0..5 {
                if k == a {
                    continue;
                }
                for l in (k + 1)..5 {
                    if l == a {
                        continue;
                    }
                    let mut prod = 1.0;
                    for b in 0..5 {
                        if b != a && b != k && b != l {
                            prod *= y - self.node(j + b);
                        }
                    }
                    d2 += prod;
                }
            }
            acc += 2.0 * d2 / denom * self.vals[j + a];
        }
        acc
    }
}

// ---------------------------------------------------------------------------
// fast (critical-layer) content
// ---------------------------------------------------------------------------

/// Which member of the Airy family a chain term multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AiryKind {
    Ai,
    Aip,
    Ai1,
    Ai2,
}

impl AiryKind {
    fn pick(self, b: &AiryBundle) -> C64 {
        match self {
            AiryKind::Ai => b.ai,
            AiryKind::Aip => b.aip,
            AiryKind::Ai1 => b.ai1,
            AiryKind::Ai2 => b.ai2,
        }
    }
}

/// Polynomial in `z` with complex coefficients, low degree.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Poly(pub Vec<C64>);

impl Poly {
    pub fn constant(c: C64) -> Self {
        Poly(vec![c])
    }

    fn eval(&self, z: C64) -> C64 {
        let mut acc = czero();
        for &c in self.0.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    fn deriv(&self) -> Poly {
        Poly(self.0.iter().enumerate().skip(1).map(|(k, &c)| k as f64 * c).collect())
    }

    fn shift_up(&self) -> Poly {
        // multiply by z
        let mut v = vec![czero()];
        v.extend_from_slice(&self.0);
        Poly(v)
    }

    fn add(&self, other: &Poly) -> Poly {
        let n = self.0.len().max(other.0.len());
        let mut v = vec![czero(); n];
        for (i, &c) in self.0.iter().enumerate() {
            v[i] += c;
        }
        for (i, &c) in other.0.iter().enumerate() {
            v[i] += c;
        }
        Poly(v)
    }

    fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == czero())
    }
}

/// Closed-form fast content: `sum_j p_j(z) * F_j(z)` with `z = gamma (y - y_c)`
/// and `F_j` one of the Airy family members. Closed under `d/dy`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AiryChain {
    pub gamma: C64,
    pub y_c: C64,
    pub terms: Vec<(Poly, AiryKind)>,
}

impl AiryChain {
    pub fn z_of(&self, y: f64) -> C64 {
        self.gamma * (C64::new(y, 0.0) - self.y_c)
    }

    pub fn value(&self, y: f64) -> C64 {
        let z = self.z_of(y);
        let b = airy_all(z);
        self.terms.iter().map(|(p, k)| p.eval(z) * k.pick(&b)).sum()
    }

    /// Conjugate as a function on the real axis; relies on the Schwarz
    /// reflection `Ai(k, conj z) = conj Ai(k, z)` of the real-coefficient
    /// Airy family.
    pub fn conjugate(&self) -> AiryChain {
        AiryChain {
            gamma: self.gamma.conj(),
            y_c: self.y_c.conj(),
            terms: self
                .terms
                .iter()
                .map(|(p, k)| (Poly(p.0.iter().map(|c| c.conj()).collect()), *k))
                .collect(),
        }
    }

    /// `d/dy = gamma * d/dz`, using `Ai2' = Ai1`, `Ai1' = Ai`, `Ai' = Aip`,
    /// `Aip' = z Ai`.
    pub fn derivative(&self) -> AiryChain {
        let mut by_kind: BTreeMap<u8, Poly> = BTreeMap::new();
        let mut push = |kind: AiryKind, poly: Poly| {
            if poly.is_zero() {
                return;
            }
            let k = kind as u8;
            let e = by_kind.entry(k).or_default();
            *e = e.add(&poly);
        };
        for (p, k) in &self.terms {
            // product rule: p'(z) F + p(z) F'
            push(*k, p.deriv());
            match k {
                AiryKind::Ai2 => push(AiryKind::Ai1, p.clone()),
                AiryKind::Ai1 => push(AiryKind::Ai, p.clone()),
                AiryKind::Ai => push(AiryKind::Aip, p.clone()),
                AiryKind::Aip => push(AiryKind::Ai, p.shift_up()),
            }
        }
        let unkind = |k: u8| match k {
            0 => AiryKind::Ai,
            1 => AiryKind::Aip,
            2 => AiryKind::Ai1,
            _ => AiryKind::Ai2,
        };
        let mut terms: Vec<(Poly, AiryKind)> = by_kind
            .into_iter()
            .map(|(k, mut p)| {
                for c in &mut p.0 {
                    *c *= self.gamma;
                }
                (p, unkind(k))
            })
            .collect();
        terms.sort_by_key(|&(_, k)| k as u8);
        AiryChain { gamma: self.gamma, y_c: self.y_c, terms }
    }
}

/// Fast part: sampled values on the critical-layer grid, optionally with the
/// closed form that generated them. Value queries prefer the chain.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FastRep {
    pub grid: GridRep,
    pub chain: Option<AiryChain>,
}

impl FastRep {
    pub fn from_chain(chain: AiryChain, y0: f64, h: f64, len: usize) -> Self {
        let grid = GridRep::from_fn(y0, h, len, |y| chain.value(y));
        FastRep { grid, chain: Some(chain) }
    }

    pub fn value(&self, y: f64) -> C64 {
        if y > self.grid.y_end() {
            return czero();
        }
        match &self.chain {
            Some(c) => c.value(y),
            None => self.grid.value(y),
        }
    }

    pub fn deriv(&self, y: f64) -> C64 {
        if y > self.grid.y_end() {
            return czero();
        }
        match &self.chain {
            Some(c) => c.derivative().value(y),
            None => self.grid.deriv(y),
        }
    }

    /// Relative size of the edge value against the grid maximum; solvers
    /// assert this is small (the layer content must die inside the grid).
    pub fn edge_residual(&self) -> f64 {
        let m = self.grid.vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if m == 0.0 {
            0.0
        } else {
            self.grid.last().norm() / m
        }
    }
}

// ---------------------------------------------------------------------------
// tail
// ---------------------------------------------------------------------------

/// Behavior past the outer grid.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub enum Tail {
    /// Identically zero (fast quantities, compact sources).
    Zero,
    /// `v(Y0) e^{-alpha (y - Y0)}`, the free-stream decay of slow modes.
    Slow { alpha: f64 },
}

// ---------------------------------------------------------------------------
// the assembled function
// ---------------------------------------------------------------------------

/// A function on `[0, infinity)` assembled from the two-scale pieces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MultiScaleFunction {
    /// Schema tag for serialized artifacts.
    pub schema: String,
    pub series: SeriesRep,
    pub outer: GridRep,
    pub tail: Tail,
    pub fast: Option<FastRep>,
}

pub const MSF_SCHEMA: &str = "msf-v1";

impl MultiScaleFunction {
    pub fn new(series: SeriesRep, outer: GridRep, tail: Tail, fast: Option<FastRep>) -> Self {
        debug_assert!(
            (outer.y0 - series.sigma).abs() <= 1e-12,
            "outer grid must start at the series edge"
        );
        MultiScaleFunction { schema: MSF_SCHEMA.to_string(), series, outer, tail, fast }
    }

    pub fn slow_value(&self, y: f64) -> C64 {
        if y < self.series.sigma {
            self.series.value(y)
        } else if y <= self.outer.y_end() {
            self.outer.value(y)
        } else {
            match self.tail {
                Tail::Zero => czero(),
                Tail::Slow { alpha } => self.outer.last() * (-alpha * (y - self.outer.y_end())).exp(),
            }
        }
    }

    pub fn fast_value(&self, y: f64) -> C64 {
        self.fast.as_ref().map_or_else(czero, |f| f.value(y))
    }

    pub fn value(&self, y: f64) -> C64 {
        self.slow_value(y) + self.fast_value(y)
    }

    pub fn slow_deriv(&self, y: f64) -> C64 {
        if y < self.series.sigma {
            self.series.deriv_series().value(y)
        } else if y <= self.outer.y_end() {
            self.outer.deriv(y)
        } else {
            match self.tail {
                Tail::Zero => czero(),
                Tail::Slow { alpha } => {
                    -alpha * self.outer.last() * (-alpha * (y - self.outer.y_end())).exp()
                }
            }
        }
    }

    pub fn deriv(&self, y: f64) -> C64 {
        let fast = self.fast.as_ref().map_or_else(czero, |f| f.deriv(y));
        self.slow_deriv(y) + fast
    }

    /// The conjugate function on the real axis, `y -> conj(f(y))`. Modes at
    /// wavenumber `-alpha` are obtained this way from their `+alpha`
    /// partners rather than solved for independently.
    pub fn conjugate(&self) -> MultiScaleFunction {
        let series = SeriesRep {
            terms: self.series.terms().conjugate(),
            sigma: self.series.sigma,
        };
        let outer = GridRep {
            y0: self.outer.y0,
            h: self.outer.h,
            vals: self.outer.vals.iter().map(|v| v.conj()).collect(),
        };
        let fast = self.fast.as_ref().map(|f| FastRep {
            grid: GridRep {
                y0: f.grid.y0,
                h: f.grid.h,
                vals: f.grid.vals.iter().map(|v| v.conj()).collect(),
            },
            chain: f.chain.as_ref().map(|c| c.conjugate()),
        });
        MultiScaleFunction {
            schema: self.schema.clone(),
            series,
            outer,
            tail: self.tail.clone(),
            fast,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: MultiScaleFunction = serde_json::from_str(s)?;
        if v.schema != MSF_SCHEMA {
            return Err(Error::incompatible(format!(
                "unknown serialization schema {:?}, expected {MSF_SCHEMA:?}",
                v.schema
            )));
        }
        Ok(v)
    }
}

// ---------------------------------------------------------------------------
// quadrature
// ---------------------------------------------------------------------------

/// Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton iteration
/// on the Legendre recurrence.
fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: std::sync::OnceLock<(Vec<f64>, Vec<f64>)> = std::sync::OnceLock::new();
    RULE.get_or_init(|| {
        const N: usize = 24;
        let mut xs = Vec::with_capacity(N);
        let mut ws = Vec::with_capacity(N);
        for i in 0..N {
            // Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (N as f64 + 0.5)).cos();
            for _ in 0..60 {
                // Legendre P_N(x) and P_N'(x) by recurrence
                let (mut p0, mut p1) = (1.0_f64, x);
                for k in 2..=N {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0_f64, x);
            for k in 2..=N {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = N as f64 * (x * p1 - p0) / (x * x - 1.0);
            xs.push(x);
            ws.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        (xs, ws)
    })
}

/// Panels on `[a, b]` graded geometrically toward `focus` (clamped into the
/// interval) down to panels of width `min_w` next to it.
pub fn graded_panels(a: f64, b: f64, focus: f64, min_w: f64) -> Vec<(f64, f64)> {
    assert!(b > a && min_w > 0.0);
    let f = focus.clamp(a, b);
    let mut panels = Vec::new();
    // side to the right of the focus
    let mut side = |from: f64, to: f64, toward_from: bool| {
        let len = to - from;
        if len <= 0.0 {
            return;
        }
        if len <= min_w * 1.5 {
            panels.push((from, to));
            return;
        }
        // geometric subdivision: cut points at distance len/2^k from the focus end
        let mut cuts = Vec::new();
        let mut d = len / 2.0;
        while d > min_w {
            cuts.push(d);
            d /= 2.0;
        }
        cuts.push(d.max(min_w / 2.0));
        if toward_from {
            // panels shrink toward `from`
            let mut hi = to;
            for &c in &cuts {
                panels.push((from + c, hi));
                hi = from + c;
            }
            panels.push((from, hi));
        } else {
            let mut lo = from;
            for &c in &cuts {
                panels.push((lo, to - c));
                lo = to - c;
            }
            panels.push((lo, to));
        }
    };
    side(a, f, false); // left of focus: shrink toward f
    side(f, b, true); // right of focus: shrink toward f
    panels.retain(|&(x, y)| y > x);
    panels.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    panels
}

/// Integrates a closure over the panels with the fixed Gauss-Legendre rule.
pub fn integrate_panels(panels: &[(f64, f64)], mut f: impl FnMut(f64) -> C64) -> C64 {
    let (xs, ws) = gl_rule();
    let mut acc = czero();
    for &(a, b) in panels {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut s = czero();
        for (&x, &w) in xs.iter().zip(ws) {
            s += w * f(mid + half * x);
        }
        acc += half * s;
    }
    acc
}

/// Composite Simpson over uniformly spaced values (3/8 rule absorbs an odd
/// final interval).
pub fn simpson_uniform(vals: &[C64], h: f64) -> C64 {
    let n = vals.len();
    if n < 2 {
        return czero();
    }
    if n == 2 {
        return 0.5 * h * (vals[0] + vals[1]);
    }
    let intervals = n - 1;
    let (simpson_end, tail38) = if intervals % 2 == 0 { (n - 1, false) } else { (n - 4, true) };
    let mut acc = czero();
    let mut i = 0;
    while i + 2 <= simpson_end {
        acc += h / 3.0 * (vals[i] + 4.0 * vals[i + 1] + vals[i + 2]);
        i += 2;
    }
    if tail38 {
        let j = n - 4;
        acc += 3.0 * h / 8.0 * (vals[j] + 3.0 * vals[j + 1] + 3.0 * vals[j + 2] + vals[j + 3]);
    }
    acc
}

/// Which bilinear pairing to integrate.
#[derive(Clone, Copy, Debug)]
pub enum ProductForm {
    /// `int f g`
    Plain,
    /// `int (f' g' + k^2 f g)` (the energy pairing of the stream formulation)
    Gradient { k: f64 },
}

/// Integrates `f * g` (or the gradient form) over `[0, infinity)`.
///
/// `conjugate_g` conjugates the second factor pointwise (for sesquilinear
/// norms); projections onto transpose-adjoint modes use the plain bilinear
/// pairing. Both functions must share the series center, zone edge, and
/// grids; this is guaranteed by construction inside one solve and asserted
/// here.
pub fn inner_product(
    f: &MultiScaleFunction,
    g: &MultiScaleFunction,
    form: ProductForm,
    conjugate_g: bool,
) -> Result<C64> {
    if !same_center(f.series.center(), g.series.center())
        || (f.series.sigma - g.series.sigma).abs() > 1e-12
    {
        return Err(Error::incompatible("inner_product: series zones differ"));
    }
    if !f.outer.same_layout(&g.outer) {
        return Err(Error::incompatible("inner_product: outer grids differ"));
    }
    let cg = |v: C64| if conjugate_g { v.conj() } else { v };

    // [0, sigma]: slow x slow through graded panels; each factor evaluates
    // its own series so mixed centers never need merging
    let yc = f.series.center();
    let min_w = (yc.im.abs() / 4.0).max(f.series.sigma * 1e-12);
    let panels = graded_panels(0.0, f.series.sigma, yc.re, min_w);
    let fd = f.series.deriv_series();
    let gd = g.series.deriv_series();
    let slow_slow = match form {
        ProductForm::Plain => {
            integrate_panels(&panels, |y| f.series.value(y) * cg(g.series.value(y)))
        }
        ProductForm::Gradient { k } => integrate_panels(&panels, |y| {
            fd.value(y) * cg(gd.value(y)) + k * k * f.series.value(y) * cg(g.series.value(y))
        }),
    };

    // fast cross terms on the critical grid
    let fast_part = {
        let fast_grid = f.fast.as_ref().map(|x| &x.grid).or(g.fast.as_ref().map(|x| &x.grid));
        match fast_grid {
            None => czero(),
            Some(grid) => {
                let h = grid.h;
                let n = grid.len();
                let sample = |y: f64| -> C64 {
                    let (fs, ff) = (f.slow_value(y), f.fast_value(y));
                    let (gs, gf) = (g.slow_value(y), g.fast_value(y));
                    match form {
                        ProductForm::Plain => ff * cg(gs) + fs * cg(gf) + ff * cg(gf),
                        ProductForm::Gradient { k } => {
                            let (fds, fdf) = (f.slow_deriv(y), f.fast.as_ref().map_or_else(czero, |x| x.deriv(y)));
                            let (gds, gdf) = (g.slow_deriv(y), g.fast.as_ref().map_or_else(czero, |x| x.deriv(y)));
                            fdf * cg(gds) + fds * cg(gdf) + fdf * cg(gdf)
                                + k * k * (ff * cg(gs) + fs * cg(gf) + ff * cg(gf))
                        }
                    }
                };
                let vals: Vec<C64> = (0..n).map(|i| sample(grid.node(i))).collect();
                simpson_uniform(&vals, h)
            }
        }
    };

    // [sigma, Y0]: shared outer grid
    let outer = {
        let n = f.outer.len();
        let vals: Vec<C64> = match form {
            ProductForm::Plain => {
                (0..n).map(|i| f.outer.vals[i] * cg(g.outer.vals[i])).collect()
            }
            ProductForm::Gradient { k } => (0..n)
                .map(|i| {
                    let y = f.outer.node(i);
                    f.outer.deriv(y) * cg(g.outer.deriv(y))
                        + k * k * f.outer.vals[i] * cg(g.outer.vals[i])
                })
                .collect(),
        };
        simpson_uniform(&vals, f.outer.h)
    };

    // tail: closed forms for exponential decay
    let tail = match (&f.tail, &g.tail) {
        (Tail::Zero, _) | (_, Tail::Zero) => czero(),
        (Tail::Slow { alpha: af }, Tail::Slow { alpha: ag }) => {
            let fv = f.outer.last();
            let gv = cg(g.outer.last());
            match form {
                ProductForm::Plain => fv * gv / (af + ag),
                ProductForm::Gradient { k } => fv * gv * (af * ag + k * k) / (af + ag),
            }
        }
    };

    Ok(slow_slow + fast_part + outer + tail)
}
