//! Rayleigh operator algebra around the critical point.
//!
//! With `Y = y - y_c` and `U(y_c) = c~` the operator
//! `Ray(psi) = (U - c~)(d^2 - alpha^2) psi - U'' psi` has a regular singular
//! point at `Y = 0` with indicial exponents 0 and 1, so solutions live in the
//! log-Frobenius algebra that [`SeriesTerms`](crate::funcrep::SeriesTerms)
//! models. Everything here reduces to two primitives:
//!
//! - [`RayleighContext::apply_ray`], term-wise application of the operator to
//!   a series (the single source of truth for all coefficient relations), and
//! - [`RayleighContext::invert_ray`], forward elimination that resolves a
//!   source slot `Y^n log^p Y` against the basis element whose image leads in
//!   that slot.
//!
//! The element schedule follows from the leading term of
//! `Ray(Y^m log^q) = c1 [ m(m-1) log^q + q(2m-1) log^(q-1) + q(q-1) log^(q-2) ] Y^(m-1) + ...`:
//! slots with `n not in {-1, 0}` are killed by `(n+1, p)` through the
//! `m(m-1)` term, while `n in {-1, 0}` needs a log bump to `(n+1, p+1)`
//! because `m(m-1)` vanishes there. Source content at `(n in {-1,0}, p = 2)`
//! would demand `log^3` and is rejected unless negligible; this is the
//! consistency slot of the reduction.
//!
//! The wall gauge used throughout: the regular solution is seeded to match
//! `U - c~` at `alpha = 0` (unit slope times `U'(y_c)`), and the singular
//! partner is normalized so the Wronskian `psi- psi+' - psi-' psi+` is
//! exactly 1 with `psi+(0) = 0`, the same normalization the
//! reduction-of-order integral `psi- int_0^y psi-^{-2}` produces.

use num_complex::Complex64;

use crate::dd::{Cdd, Dd};
use crate::error::{Error, Result};
use crate::funcrep::{GridRep, SeriesTerms};
use crate::profiles::Profile;

type C64 = Complex64;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Taylor series of `e^{-alpha y}` about `y0`, as terms in `Y = y - y0`.
pub fn exp_series(alpha: f64, y0: C64, n: usize) -> SeriesTerms {
    let mut t = SeriesTerms::new(y0);
    let mut c = (-alpha * y0).exp();
    for k in 0..=n {
        t.add_term(k as i32, 0, c);
        c *= -alpha / (k + 1) as f64;
    }
    t
}

/// Frozen profile data and operator parameters for one critical point.
pub struct RayleighContext<'a> {
    pub profile: &'a Profile,
    pub y_c: C64,
    /// `U(y_c)`; choosing the phase speed equal to this makes the leading
    /// Taylor coefficient of `U - c~` vanish exactly.
    pub c_tilde: C64,
    pub alpha: f64,
    pub sigma: f64,
    /// Series truncation degree.
    pub n: usize,
    /// Relative size below which unresolvable source content is dropped.
    pub consistency_tol: f64,
    u: Vec<C64>,
    umc: SeriesTerms,
    upp: SeriesTerms,
}

impl<'a> RayleighContext<'a> {
    pub fn new(
        profile: &'a Profile,
        y_c: C64,
        alpha: f64,
        sigma: f64,
        n: usize,
    ) -> Result<Self> {
        if n < 6 || sigma <= 0.0 {
            return Err(Error::config("rayleigh context needs n >= 6 and sigma > 0"));
        }
        let u = profile.taylor_u(y_c, n + 4);
        let c_tilde = u[0];
        if u[1].norm() < 1e-14 {
            return Err(Error::config("degenerate critical point: U'(y_c) ~ 0"));
        }
        let mut umc = SeriesTerms::new(y_c);
        for (k, &uk) in u.iter().enumerate().skip(1).take(n + 2) {
            umc.add_term(k as i32, 0, uk);
        }
        let mut upp = SeriesTerms::new(y_c);
        for k in 0..=n {
            upp.add_term(k as i32, 0, (k + 1) as f64 * (k + 2) as f64 * u[k + 2]);
        }
        Ok(RayleighContext {
            profile,
            y_c,
            c_tilde,
            alpha,
            sigma,
            n,
            consistency_tol: 1e-6,
            u,
            umc,
            upp,
        })
    }

    /// `U'(y_c)`, the pivot scale of the whole reduction.
    pub fn c1(&self) -> C64 {
        self.u[1]
    }

    /// Taylor coefficients of `U` about `y_c` (index = power).
    pub fn u_taylor(&self) -> &[C64] {
        &self.u
    }

    pub fn u_minus_c_series(&self) -> &SeriesTerms {
        &self.umc
    }

    pub fn u_prime_series(&self) -> SeriesTerms {
        let mut t = SeriesTerms::new(self.y_c);
        for k in 0..=self.n {
            t.add_term(k as i32, 0, (k + 1) as f64 * self.u[k + 1]);
        }
        t
    }

    /// `Ray(f)` truncated to degree `n`.
    pub fn apply_ray(&self, f: &SeriesTerms) -> SeriesTerms {
        let mut lap = f.derivative().derivative();
        lap.add_assign(f, C64::new(-self.alpha * self.alpha, 0.0));
        let mut out = self.umc.multiply(&lap);
        let correction = self.upp.multiply(f);
        out.add_assign(&correction, C64::new(-1.0, 0.0));
        out.truncate_degree(self.n as i32);
        out
    }

    fn basis(&self, m: i32, q: u8) -> SeriesTerms {
        let mut b = SeriesTerms::new(self.y_c);
        b.add_term(m, q, C64::new(1.0, 0.0));
        b
    }

    /// Solves `Ray(psi) = source` by forward elimination, leaving the free
    /// coefficients `a0`, `a1` untouched (zero unless supplied via `seed`).
    ///
    /// Source slots are consumed in increasing power, decreasing log order;
    /// each pivot is read off `apply_ray` of the chosen element rather than a
    /// precomputed table. Content the basis cannot resolve (the consistency
    /// slots, anything needing `log^3`, or powers below `Y^-3`) is an error
    /// unless below `consistency_tol` relative to the source scale.
    pub fn invert_ray(&self, source: &SeriesTerms, seed: Option<&SeriesTerms>) -> Result<Inversion> {
        let n_hi = self.n as i32 - 2;
        let src_weight = source.weight_at(self.sigma).max(1e-300);
        let mut psi = match seed {
            Some(s) => s.clone(),
            None => SeriesTerms::new(self.y_c),
        };
        let mut r = source.clone();
        if let Some(s) = seed {
            let applied = self.apply_ray(s);
            r.add_assign(&applied, C64::new(-1.0, 0.0));
        }
        let mut dropped_rel: f64 = 0.0;
        let mut guard = 0usize;
        loop {
            guard += 1;
            if guard > 40 * (self.n + 8) * (self.n + 8) {
                return Err(Error::no_convergence("rayleigh elimination did not terminate"));
            }
            // lowest power first, highest log order within it
            let slot = r
                .iter()
                .filter(|&((n, _), c)| {
                    n <= n_hi && c.norm() * self.sigma.powi(n) > 1e-300 * src_weight
                })
                .min_by(|a, b| {
                    let ka = (a.0 .0, std::cmp::Reverse(a.0 .1));
                    let kb = (b.0 .0, std::cmp::Reverse(b.0 .1));
                    ka.cmp(&kb)
                });
            let ((n, p), coef) = match slot {
                Some(s) => s,
                None => break,
            };
            let rel = coef.norm() * self.sigma.powi(n) / src_weight;
            let element = if n == -1 || n == 0 {
                if p >= 2 {
                    // consistency slot: no basis element leads here
                    if rel > self.consistency_tol {
                        return Err(Error::incompatible(format!(
                            "source slot Y^{n} log^{p} is unresolvable (relative size {rel:.2e})"
                        )));
                    }
                    dropped_rel = dropped_rel.max(rel);
                    r.add_term(n, p, -coef);
                    continue;
                }
                (n + 1, p + 1)
            } else {
                if p > 2 || n < -3 {
                    if rel > self.consistency_tol {
                        return Err(Error::incompatible(format!(
                            "source slot Y^{n} log^{p} outside the invertible basis \
                             (relative size {rel:.2e})"
                        )));
                    }
                    dropped_rel = dropped_rel.max(rel);
                    r.add_term(n, p, -coef);
                    continue;
                }
                (n + 1, p)
            };
            let b = self.basis(element.0, element.1);
            let applied = self.apply_ray(&b);
            let pivot = applied.coeff(n, p);
            if pivot.norm() < 1e-10 * self.c1().norm() {
                return Err(Error::ill_conditioned(format!(
                    "vanishing pivot for slot Y^{n} log^{p}"
                )));
            }
            let u = coef / pivot;
            psi.add_term(element.0, element.1, u);
            r.add_assign(&applied, -u);
            r.add_term(n, p, -r.coeff(n, p)); // zero the slot exactly
        }
        Ok(Inversion { psi, dropped_rel })
    }

    /// The fundamental pair about the critical point.
    ///
    /// `minus` is regular with slope `U'(y_c)` (it equals the Taylor series
    /// of `U - c~` when `alpha = 0`); `plus` carries the `Y log Y` branch, is
    /// normalized to unit Wronskian against `minus`, and is gauged to vanish
    /// at the wall, matching the reduction-of-order integral based at 0.
    pub fn homogeneous_pair(&self) -> Result<RayleighPair> {
        let c1 = self.c1();
        let mut seed_minus = SeriesTerms::new(self.y_c);
        seed_minus.add_term(1, 0, c1);
        let minus = self.invert_ray(&SeriesTerms::new(self.y_c), Some(&seed_minus))?.psi;

        let mut seed_plus = SeriesTerms::new(self.y_c);
        seed_plus.add_term(0, 0, C64::new(1.0, 0.0));
        let plus_raw = self.invert_ray(&SeriesTerms::new(self.y_c), Some(&seed_plus))?.psi;
        let b1 = plus_raw.coeff(1, 1);

        // W(minus, plus_raw) = -c1 at leading order and is constant, so
        // -plus_raw/c1 has unit Wronskian; a multiple of minus then pins the
        // wall value without touching W.
        let mut plus = plus_raw.clone();
        plus.scale(-(c1.inv()));
        let mu = -plus.value(0.0) / minus.value(0.0);
        plus.add_assign(&minus, mu);
        Ok(RayleighPair { minus, plus, plus_raw_b1: b1 })
    }
}

/// Result of a series-space inversion.
pub struct Inversion {
    pub psi: SeriesTerms,
    /// Largest unresolvable source content that was dropped, relative to the
    /// source scale.
    pub dropped_rel: f64,
}

/// Fundamental solutions about the critical point, on the series zone.
pub struct RayleighPair {
    pub minus: SeriesTerms,
    pub plus: SeriesTerms,
    /// `Y log Y` coefficient of the raw (unit-value) singular solution; this
    /// equals `U''(y_c)/U'(y_c)` and is a convenient profile diagnostic.
    pub plus_raw_b1: C64,
}

// ---------------------------------------------------------------------------
// outer continuation
// ---------------------------------------------------------------------------

/// Time stepper for the outer region. `Euler` exists to demonstrate scheme
/// fidelity; production paths use `Rk4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    Euler,
}

/// Grid solution of the outer problem plus exact endpoint state.
pub struct OuterSolution {
    pub grid: GridRep,
    pub end_val: C64,
    pub end_der: C64,
}

/// Integrates `psi'' = alpha^2 psi + (U'' psi + source)/(U - c~)` along the
/// real axis from `y_start`, storing `n_nodes` values spaced `h`.
pub fn integrate_outer(
    profile: &Profile,
    c_tilde: C64,
    alpha: f64,
    y_start: f64,
    val: C64,
    der: C64,
    h: f64,
    n_nodes: usize,
    source: Option<&dyn Fn(f64) -> C64>,
    scheme: Scheme,
) -> OuterSolution {
    let src = |y: f64| source.map_or_else(czero, |f| f(y));
    let rhs = |y: f64, psi: C64, dpsi: C64| -> (C64, C64) {
        let u = profile.eval(y);
        let upp = profile.deriv_c(C64::new(y, 0.0), 2);
        let acc = alpha * alpha * psi + (upp * psi + src(y)) / (u - c_tilde);
        (dpsi, acc)
    };
    let mut vals = Vec::with_capacity(n_nodes);
    let (mut p, mut d) = (val, der);
    vals.push(p);
    for i in 0..n_nodes.saturating_sub(1) {
        let y = y_start + i as f64 * h;
        match scheme {
            Scheme::Euler => {
                let (k1p, k1d) = rhs(y, p, d);
                p += h * k1p;
                d += h * k1d;
            }
            Scheme::Rk4 => {
                let (k1p, k1d) = rhs(y, p, d);
                let (k2p, k2d) = rhs(y + 0.5 * h, p + 0.5 * h * k1p, d + 0.5 * h * k1d);
                let (k3p, k3d) = rhs(y + 0.5 * h, p + 0.5 * h * k2p, d + 0.5 * h * k2d);
                let (k4p, k4d) = rhs(y + h, p + h * k3p, d + h * k3d);
                p += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
                d += h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            }
        }
        vals.push(p);
    }
    OuterSolution { grid: GridRep { y0: y_start, h, vals }, end_val: p, end_der: d }
}

/// Outer solution with the endpoint state kept in double-double precision.
pub struct OuterSolutionDd {
    pub grid: GridRep,
    pub end_val: Cdd,
    pub end_der: Cdd,
}

impl OuterSolutionDd {
    /// Projection onto the growing tail direction: `psi'(Y0) + alpha psi(Y0)`.
    pub fn robin(&self, alpha: f64) -> Cdd {
        self.end_der.add(self.end_val.mul_f64(alpha))
    }
}

/// [`integrate_outer`] (RK4 only) with the running state in double-double.
///
/// The decay-repair coefficient divides two Robin functionals that are
/// `O(alpha)` projections of `O(1)`-or-larger trajectories, so plain f64
/// accumulation leaves them with ~1e-8 relative jitter under sub-ulp moves of
/// `c`. The coefficients stay f64 per node, but `U - c~` is formed by exact
/// two-term differences, which keeps the endpoint state smooth in `c` far
/// below ulp resolution.
pub fn integrate_outer_dd(
    profile: &Profile,
    c_tilde: C64,
    alpha: f64,
    y_start: f64,
    val: C64,
    der: C64,
    h: f64,
    n_nodes: usize,
    source: Option<&dyn Fn(f64) -> C64>,
) -> OuterSolutionDd {
    let rhs = |y: f64, psi: Cdd, dpsi: Cdd| -> (Cdd, Cdd) {
        let u = profile.eval(y);
        let upp = profile.deriv(y, 2);
        let den = Cdd::from_dd(
            Dd::from_f64(u).sub(Dd::from_f64(c_tilde.re)),
            Dd::from_f64(-c_tilde.im),
        );
        let mut num = psi.mul_f64(upp);
        if let Some(f) = source {
            num = num.add(Cdd::from_c64(f(y)));
        }
        (dpsi, psi.mul_f64(alpha * alpha).add(num.div(den)))
    };
    let mut vals = Vec::with_capacity(n_nodes);
    let (mut p, mut d) = (Cdd::from_c64(val), Cdd::from_c64(der));
    vals.push(p.to_c64());
    for i in 0..n_nodes.saturating_sub(1) {
        let y = y_start + i as f64 * h;
        let (k1p, k1d) = rhs(y, p, d);
        let (k2p, k2d) = rhs(y + 0.5 * h, p.add(k1p.mul_f64(0.5 * h)), d.add(k1d.mul_f64(0.5 * h)));
        let (k3p, k3d) = rhs(y + 0.5 * h, p.add(k2p.mul_f64(0.5 * h)), d.add(k2d.mul_f64(0.5 * h)));
        let (k4p, k4d) = rhs(y + h, p.add(k3p.mul_f64(h)), d.add(k3d.mul_f64(h)));
        let w = h / 6.0;
        p = p.add(k1p.add(k2p.mul_f64(2.0)).add(k3p.mul_f64(2.0)).add(k4p).mul_f64(w));
        d = d.add(k1d.add(k2d.mul_f64(2.0)).add(k3d.mul_f64(2.0)).add(k4d).mul_f64(w));
        vals.push(p.to_c64());
    }
    OuterSolutionDd { grid: GridRep { y0: y_start, h, vals }, end_val: p, end_der: d }
}

// ---------------------------------------------------------------------------
// independent oracle for the singular solution
// ---------------------------------------------------------------------------

/// Evaluates the singular solution by reduction of order,
/// `psi+(y) = psi-(y) int_0^y psi-(z)^{-2} dz`, integrating the Rayleigh ODE
/// and the quadrature together along the rectangular path
/// `0 -> -iH -> y - iH -> y` that passes under the critical point.
///
/// This shares no series machinery with [`RayleighContext::homogeneous_pair`]
/// beyond the wall values of the regular solution used as initial data, so it
/// serves as an independent check of the singular branch.
pub fn psi_plus_integral_oracle(
    ctx: &RayleighContext,
    minus_wall_val: C64,
    minus_wall_der: C64,
    y_eval: f64,
    depth: f64,
    h: f64,
) -> C64 {
    let rhs = |y: C64, psi: C64, dpsi: C64| -> (C64, C64, C64) {
        let u = ctx.profile.eval_c(y);
        let upp = ctx.profile.deriv_c(y, 2);
        let a2 = C64::new(ctx.alpha * ctx.alpha, 0.0);
        (dpsi, (a2 + upp / (u - ctx.c_tilde)) * psi, (psi * psi).inv())
    };
    let mut psi = minus_wall_val;
    let mut dpsi = minus_wall_der;
    let mut quad = czero();
    let leg = |from: C64, to: C64, psi: &mut C64, dpsi: &mut C64, quad: &mut C64| {
        let len = (to - from).norm();
        let steps = (len / h).ceil().max(2.0) as usize;
        let dz = (to - from) / steps as f64;
        let mut z = from;
        for _ in 0..steps {
            let (k1p, k1d, k1q) = rhs(z, *psi, *dpsi);
            let (k2p, k2d, k2q) =
                rhs(z + 0.5 * dz, *psi + 0.5 * dz * k1p, *dpsi + 0.5 * dz * k1d);
            let (k3p, k3d, k3q) =
                rhs(z + 0.5 * dz, *psi + 0.5 * dz * k2p, *dpsi + 0.5 * dz * k2d);
            let (k4p, k4d, k4q) = rhs(z + dz, *psi + dz * k3p, *dpsi + dz * k3d);
            *psi += dz / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            *dpsi += dz / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d);
            *quad += dz / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            z += dz;
        }
    };
    let a = C64::new(0.0, -depth);
    let b = C64::new(y_eval, -depth);
    let c = C64::new(y_eval, 0.0);
    leg(czero(), a, &mut psi, &mut dpsi, &mut quad);
    leg(a, b, &mut psi, &mut dpsi, &mut quad);
    leg(b, c, &mut psi, &mut dpsi, &mut quad);
    psi * quad
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::Profile;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn exp_ctx(profile: &Profile, c_tilde: C64, alpha: f64) -> RayleighContext<'_> {
        let y_c = profile.critical_point(c_tilde).unwrap();
        RayleighContext::new(profile, y_c, alpha, 0.1, 30).unwrap()
    }

    #[test]
    fn regular_solution_is_u_minus_c_at_alpha_zero() {
        let profile = Profile::exponential(1.0).unwrap();
        let ctx = exp_ctx(&profile, c(0.04, 0.004), 0.0);
        let pair = ctx.homogeneous_pair().unwrap();
        for k in 1..=20 {
            let want = ctx.u_taylor()[k];
            let got = pair.minus.coeff(k as i32, 0);
            assert!(
                (got - want).norm() <= 1e-12 * want.norm().max(1e-12),
                "coefficient {k}: {got} vs {want}"
            );
        }
        // and no log content whatsoever
        for ((_, p), v) in pair.minus.iter() {
            assert!(p == 0 || v.norm() < 1e-14);
        }
    }

    #[test]
    fn singular_branch_coefficient_is_curvature_ratio() {
        // for U = 1 - e^{-y}: U''/U' = -1 identically
        let profile = Profile::exponential(1.0).unwrap();
        let ctx = exp_ctx(&profile, c(0.04, 0.004), 0.3);
        let pair = ctx.homogeneous_pair().unwrap();
        assert!((pair.plus_raw_b1 - c(-1.0, 0.0)).norm() < 1e-12, "b1 = {}", pair.plus_raw_b1);
    }

    #[test]
    fn pair_solves_operator_and_has_unit_wronskian() {
        let profile = Profile::exponential(1.0).unwrap();
        for alpha in [0.0, 0.45] {
            let ctx = exp_ctx(&profile, c(0.04, 0.004), alpha);
            let pair = ctx.homogeneous_pair().unwrap();
            for f in [&pair.minus, &pair.plus] {
                let res = ctx.apply_ray(f);
                // residual should be pure truncation: high powers only
                let low: f64 = res
                    .iter()
                    .filter(|&((n, _), _)| n < ctx.n as i32 - 4)
                    .map(|(_, v)| v.norm())
                    .sum();
                assert!(low < 1e-10 * f.weight_at(ctx.sigma), "low-order residual {low:e}");
            }
            let dm = pair.minus.derivative();
            let dp = pair.plus.derivative();
            for y in [0.0, 0.013, 0.04, 0.077] {
                let w = pair.minus.value(y) * dp.value(y) - dm.value(y) * pair.plus.value(y);
                assert!((w - c(1.0, 0.0)).norm() < 1e-9, "W({y}) = {w}");
            }
            assert!(pair.plus.value(0.0).norm() < 1e-12, "wall gauge");
        }
    }

    #[test]
    fn inversion_round_trip_with_singular_slots() {
        let profile = Profile::exponential(1.0).unwrap();
        let ctx = exp_ctx(&profile, c(0.04, 0.004), 0.2);
        let mut psi0 = SeriesTerms::new(ctx.y_c);
        psi0.add_term(-2, 0, c(0.3, -0.1));
        psi0.add_term(-1, 0, c(0.0, 1.2));
        psi0.add_term(-1, 1, c(0.5, 0.0));
        psi0.add_term(0, 1, c(-0.4, 0.2));
        psi0.add_term(0, 2, c(0.1, 0.1));
        psi0.add_term(2, 0, c(1.0, 0.0));
        psi0.add_term(3, 1, c(0.0, -0.6));
        psi0.add_term(4, 2, c(0.25, 0.0));
        let phi = ctx.apply_ray(&psi0);
        let inv = ctx.invert_ray(&phi, None).unwrap();
        assert!(inv.dropped_rel < 1e-12, "dropped {:e}", inv.dropped_rel);
        // compare on the window the source determines (truncation feeds back
        // into the last couple of degrees)
        for ((n, p), want) in psi0.iter() {
            if n >= ctx.n as i32 - 4 {
                continue;
            }
            let got = inv.psi.coeff(n, p);
            assert!(
                (got - want).norm() <= 1e-10 * want.norm().max(1e-10),
                "slot ({n},{p}): {got} vs {want}"
            );
        }
    }

    #[test]
    fn unresolvable_source_is_an_error() {
        let profile = Profile::exponential(1.0).unwrap();
        let ctx = exp_ctx(&profile, c(0.04, 0.004), 0.2);
        let mut bad = SeriesTerms::new(ctx.y_c);
        bad.add_term(0, 2, c(1.0, 0.0));
        assert!(matches!(ctx.invert_ray(&bad, None), Err(Error::Incompatible(_))));
        // the same content at noise level is dropped and reported
        let mut ok = SeriesTerms::new(ctx.y_c);
        ok.add_term(1, 0, c(1.0, 0.0));
        ok.add_term(0, 2, c(1e-9, 0.0));
        let inv = ctx.invert_ray(&ok, None).unwrap();
        assert!(inv.dropped_rel > 1e-11 && inv.dropped_rel < 1e-7);
    }

    #[test]
    fn singular_solution_matches_integral_oracle() {
        let profile = Profile::exponential(1.0).unwrap();
        for alpha in [0.0, 0.45] {
            let ctx = exp_ctx(&profile, c(0.04, 0.004), alpha);
            let pair = ctx.homogeneous_pair().unwrap();
            let dm = pair.minus.derivative();
            for y in [0.05, 0.085] {
                // h must resolve the approach to y_c on the last leg
                // (distance ~ 1e-2 for y = 0.05)
                let oracle = psi_plus_integral_oracle(
                    &ctx,
                    pair.minus.value(0.0),
                    dm.value(0.0),
                    y,
                    0.05,
                    1e-4,
                );
                let got = pair.plus.value(y);
                let rel = (got - oracle).norm() / oracle.norm();
                assert!(rel < 1e-7, "alpha={alpha} y={y}: {got} vs {oracle} (rel {rel:e})");
            }
        }
    }

    #[test]
    fn outer_rk4_reproduces_closed_form_solution() {
        // at alpha = 0, U - c~ solves the outer ODE exactly
        let profile = Profile::exponential(1.0).unwrap();
        let ctx = exp_ctx(&profile, c(0.04, 0.004), 0.0);
        let sigma = ctx.sigma;
        let val = profile.eval(sigma) - ctx.c_tilde;
        let der = C64::from(profile.deriv(sigma, 1));
        let sol = integrate_outer(
            &profile, ctx.c_tilde, 0.0, sigma, val, der, 1e-3, 1901, None, Scheme::Rk4,
        );
        for (i, &v) in sol.grid.vals.iter().enumerate().step_by(400) {
            let y = sol.grid.node(i);
            let want = profile.eval(y) - ctx.c_tilde;
            assert!((v - want).norm() < 1e-11, "y={y}: {v} vs {want}");
        }
        assert!((sol.end_der - C64::from(profile.deriv(sol.grid.y_end(), 1))).norm() < 1e-11);
    }

    #[test]
    fn production_scale_pair_is_well_conditioned() {
        // critical point and wavenumber at the nu = 1e-30 scale
        let profile = Profile::exponential(1.0).unwrap();
        let nuq = crate::NU_QUARTER_1E30;
        let c_tilde = c(2.47, 0.32) * nuq;
        let alpha = 1.78 * nuq;
        let y_c = profile.critical_point(c_tilde).unwrap();
        let ctx = RayleighContext::new(&profile, y_c, alpha, 0.1, 30).unwrap();
        let pair = ctx.homogeneous_pair().unwrap();
        let dm = pair.minus.derivative();
        let dp = pair.plus.derivative();
        for y in [1e-8, 1e-7, 0.003, 0.09] {
            let w = pair.minus.value(y) * dp.value(y) - dm.value(y) * pair.plus.value(y);
            assert!((w - c(1.0, 0.0)).norm() < 1e-8, "W({y}) = {w}");
        }
        assert!((pair.plus_raw_b1 - c(-1.0, 0.0)).norm() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Applying then inverting recovers regular series for random
        /// low-order coefficients (the engine's core contract).
        #[test]
        fn apply_invert_round_trip(
            re2 in -1.0f64..1.0, im2 in -1.0f64..1.0,
            re3 in -1.0f64..1.0, im3 in -1.0f64..1.0,
        ) {
            let profile = Profile::exponential(1.0).unwrap();
            let ctx = exp_ctx(&profile, c(0.04, 0.004), 0.31);
            let mut psi0 = SeriesTerms::new(ctx.y_c);
            psi0.add_term(2, 0, c(re2, im2));
            psi0.add_term(3, 0, c(re3, im3));
            let phi = ctx.apply_ray(&psi0);
            let inv = ctx.invert_ray(&phi, None).unwrap();
            for ((n, p), want) in psi0.iter() {
                let got = inv.psi.coeff(n, p);
                prop_assert!((got - want).norm() <= 1e-10 * want.norm().max(1e-10));
            }
        }
    }
}
