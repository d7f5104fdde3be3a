//! Dispersion relation, eigenvalue search, and eigenmode assembly.
//!
//! At a fixed wavenumber the slow decaying branch and the fast (Airy)
//! branch both satisfy the interior equation and decay upward, so an
//! eigenvalue exists exactly when their wall Cauchy data are proportional.
//! [`dispersion_residual`] measures the mismatch as a difference of wall
//! ratios `psi(0)/psi'(0)`; [`find_eigenvalue`] drives it to zero with a
//! damped secant iteration in the scaled speed `c0`, starting from the root
//! of the viscosity-independent limit form of the same relation (a Tietjens
//! function equation, [`limit_dispersion`]).
//!
//! At a converged root, [`build_linear_mode`] assembles the eigenmode
//! `psi = psi_s + a Ai(2, gamma (y - y_c))` together with its velocities
//! and vorticity, and [`build_adjoint_mode`] assembles the approximate
//! transpose eigenmode `e^{-alpha y} - f1(y_c) psi3 - g1` used by the weakly
//! nonlinear projections. Both scale like `nu^{1/4}` in their small
//! parameters, so every invariant here is checked relative to term
//! magnitudes, not absolute size.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::funcrep::{
    AiryChain, AiryKind, FastRep, GridRep, MultiScaleFunction, Poly, SeriesRep, SeriesTerms, Tail,
};
use crate::orr_sommerfeld::{
    orr_transpose_value, orr_value, series_state, slow_decaying_mode, Grids, OsContext, PointState,
};
use crate::profiles::Profile;
use crate::rayleigh::exp_series;
use crate::specfun::airy_all;

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

// ---------------------------------------------------------------------------
// limit dispersion relation
// ---------------------------------------------------------------------------

/// The viscosity-independent limit form of the dispersion relation,
///
/// `G(c0) = c0 [1 - Ai(2,-Z) / (-Z Ai(1,-Z))] - alpha0 U+^2 / U'(0)`,
///
/// with `Z = (i alpha0)^{1/3} c0 U'(0)^{-2/3}` (critical point frozen to the
/// wall at leading order; the Airy ratio is the Tietjens function at the
/// rotated argument). Roots of `G` approximate scaled eigenvalue speeds to
/// `O(nu^{1/4})` and seed the finite-viscosity refinement.
pub fn limit_dispersion(profile: &Profile, alpha0: f64, c0: C64) -> C64 {
    let up0 = profile.deriv(0.0, 1);
    let uplus = profile.u_plus();
    let z = c64(0.0, alpha0).powf(1.0 / 3.0) * c0 * up0.powf(-2.0 / 3.0);
    let w = -z;
    let b = airy_all(w);
    let ti = b.ai2 / (w * b.ai1);
    c0 * (1.0 - ti) - alpha0 * uplus * uplus / up0
}

/// Damped Newton refinement of a limit-dispersion root from `start`.
/// Numerical derivative; steps are halved while the residual grows and
/// capped at unit length. Converges to whatever root the basin of `start`
/// holds; no stability constraint is applied.
pub fn limit_root_near(profile: &Profile, alpha0: f64, start: C64) -> Result<C64> {
    let fd = 1e-7 * (1.0 + start.norm());
    let mut c0 = start;
    let mut g = limit_dispersion(profile, alpha0, c0);
    for _ in 0..80 {
        if g.norm() < 1e-14 * (1.0 + c0.norm()) {
            return Ok(c0);
        }
        let gp = (limit_dispersion(profile, alpha0, c0 + fd)
            - limit_dispersion(profile, alpha0, c0 - fd))
            / (2.0 * fd);
        if gp.norm() == 0.0 {
            break;
        }
        let mut step = g / gp;
        if step.norm() > 1.0 {
            step /= step.norm();
        }
        let mut next = c0 - step;
        let mut gn = limit_dispersion(profile, alpha0, next);
        let mut halvings = 0;
        while gn.norm() > g.norm() && halvings < 8 {
            step *= 0.5;
            next = c0 - step;
            gn = limit_dispersion(profile, alpha0, next);
            halvings += 1;
        }
        if c0.norm() > 40.0 {
            break;
        }
        c0 = next;
        g = gn;
    }
    if g.norm() < 1e-12 * (1.0 + c0.norm()) {
        Ok(c0)
    } else {
        Err(Error::no_convergence(format!(
            "limit dispersion newton stalled at c0 = {:.6}+{:.6}i, |G| = {:.2e}",
            c0.re,
            c0.im,
            g.norm()
        )))
    }
}

/// Locates the unstable root (`Im c0 > 0`) of the limit dispersion relation
/// by a coarse upper-half-plane scan followed by damped Newton refinement.
///
/// Errors when no unstable root is found, which is the expected outcome for
/// wavenumbers outside the instability window; the message carries the best
/// scan points so callers can see where the iteration was attracted.
pub fn initial_guess(profile: &Profile, alpha0: f64) -> Result<C64> {
    let scale = alpha0 * profile.u_plus().powi(2) / profile.deriv(0.0, 1);
    let mut starts: Vec<(f64, C64)> = Vec::new();
    for i in 0..=24 {
        for j in 0..=10 {
            let c0 = scale * c64(0.1 + 0.125 * i as f64, 0.02 + 0.1 * j as f64);
            let g = limit_dispersion(profile, alpha0, c0).norm();
            if g.is_finite() {
                starts.push((g, c0));
            }
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rejected: Vec<C64> = Vec::new();
    for &(_, s) in starts.iter().take(8) {
        let Ok(root) = limit_root_near(profile, alpha0, s) else {
            continue;
        };
        if root.im > 0.0 {
            return Ok(root);
        }
        if !rejected.iter().any(|r| (r - root).norm() < 1e-8) {
            rejected.push(root);
        }
    }
    let seen = rejected
        .iter()
        .map(|r| format!("{:.4}{:+.4}i", r.re, r.im))
        .collect::<Vec<_>>()
        .join(", ");
    Err(Error::no_convergence(format!(
        "no unstable limit-dispersion root at alpha0 = {alpha0} (stable roots seen: [{seen}])"
    )))
}

// ---------------------------------------------------------------------------
// full dispersion relation
// ---------------------------------------------------------------------------

/// Wall-ratio dispersion residual at finite viscosity,
/// `psi_f(0)/psi_f'(0) - psi_s(0)/psi_s'(0)`,
/// where `psi_s` is the numerically constructed slow decaying mode and
/// `psi_f = Ai(2, gamma (y - y_c))` the fast one. Zero at eigenvalues.
/// Analytic in `c0` away from the profile's critical-point branch points.
pub fn dispersion_residual(
    profile: &Profile,
    nu: f64,
    alpha0: f64,
    c0: C64,
    grids: &Grids,
) -> Result<C64> {
    let nq = nu.powf(0.25);
    let ctx = OsContext::new(profile, nu, alpha0 * nq, c0 * nq, *grids)?;
    let slow = slow_decaying_mode(&ctx.ray, &ctx.grids)?;
    let (fv, fd) = ctx.airy.fast_wall_state();
    if fd.norm() < 1e-250 || slow.wall_der.norm() < 1e-250 {
        return Err(Error::domain(
            "wall derivative vanishes in the dispersion ratio",
        ));
    }
    Ok(fv / fd - slow.wall_val / slow.wall_der)
}

// ---------------------------------------------------------------------------
// eigenvalue search
// ---------------------------------------------------------------------------

/// A converged eigenvalue with the scalings and weights downstream
/// constructions reuse.
#[derive(Clone, Copy, Debug)]
pub struct Eigenpair {
    pub nu: f64,
    /// Unscaled wavenumber `alpha0 nu^{1/4}`.
    pub alpha: f64,
    pub alpha0: f64,
    /// Unscaled phase speed `c0 nu^{1/4}`.
    pub c: C64,
    pub c0: C64,
    /// Temporal eigenvalue `-i alpha c`.
    pub lambda: C64,
    /// Fast-branch weight in `psi = psi_s + a Ai(2, gamma (y - y_c))`;
    /// `O(nu^{1/4})` since the slow branch is normalized to leading
    /// coefficient one.
    pub a: C64,
    /// Scaled wall offset of the critical point, `gamma y_c`.
    pub big_z: C64,
    /// `|dispersion_residual|` at acceptance.
    pub residual: f64,
    pub iterations: usize,
    pub grids: Grids,
}

/// Secant iteration on [`dispersion_residual`] from the limit-dispersion
/// guess, with 0.5 step damping while the residual grows. Stops when the
/// step drops below `1e-12 (1 + |c0|)`; errors after 50 iterations with the
/// residual trace.
pub fn find_eigenvalue(
    profile: &Profile,
    nu: f64,
    alpha0: f64,
    grids: &Grids,
) -> Result<Eigenpair> {
    let guess = initial_guess(profile, alpha0)?;
    let r = |c0: C64| dispersion_residual(profile, nu, alpha0, c0, grids);

    let mut c_prev = guess;
    let mut r_prev = r(c_prev)?;
    let mut c_cur = guess + c64(1e-5, 1e-5) * (1.0 + guess.norm());
    let mut r_cur = r(c_cur)?;
    let mut trace: Vec<f64> = vec![r_prev.norm(), r_cur.norm()];
    let mut iterations = 0;
    let mut converged = false;
    for it in 0..50 {
        iterations = it + 1;
        let denom = r_cur - r_prev;
        if denom.norm() == 0.0 {
            break;
        }
        let mut step = r_cur * (c_cur - c_prev) / denom;
        let mut next = c_cur - step;
        let mut r_next = r(next)?;
        let mut halvings = 0;
        while r_next.norm() > r_cur.norm() && halvings < 6 {
            step *= 0.5;
            next = c_cur - step;
            r_next = r(next)?;
            halvings += 1;
        }
        c_prev = c_cur;
        r_prev = r_cur;
        c_cur = next;
        r_cur = r_next;
        trace.push(r_cur.norm());
        if step.norm() <= 1e-12 * (1.0 + c_cur.norm()) {
            converged = true;
            break;
        }
    }
    if !converged {
        let tail: Vec<String> = trace.iter().rev().take(6).map(|v| format!("{v:.3e}")).collect();
        return Err(Error::no_convergence(format!(
            "eigenvalue secant did not converge at alpha0 = {alpha0}, nu = {nu:.1e}; \
             last residuals (newest first): [{}]",
            tail.join(", ")
        )));
    }

    let nq = nu.powf(0.25);
    let (alpha, c) = (alpha0 * nq, c_cur * nq);
    let ctx = OsContext::new(profile, nu, alpha, c, *grids)?;
    let slow = slow_decaying_mode(&ctx.ray, &ctx.grids)?;
    let (fv, _) = ctx.airy.fast_wall_state();
    Ok(Eigenpair {
        nu,
        alpha,
        alpha0,
        c,
        c0: c_cur,
        lambda: c64(0.0, -alpha) * c,
        a: -slow.wall_val / fv,
        big_z: ctx.airy.z_wall(),
        residual: r_cur.norm(),
        iterations,
        grids: *grids,
    })
}

// ---------------------------------------------------------------------------
// linear mode
// ---------------------------------------------------------------------------

/// The assembled eigenmode: stream function, velocities `u = d_y psi`,
/// `v = -i alpha psi`, and vorticity `omega = -(d_y^2 - alpha^2) psi`.
pub struct LinearMode {
    pub psi: MultiScaleFunction,
    pub u: MultiScaleFunction,
    pub v: MultiScaleFunction,
    pub omega: MultiScaleFunction,
    /// Worst interior equation residual over the standard probe set,
    /// relative to the local term scale.
    pub residual: f64,
}

fn scale_chain(chain: &mut AiryChain, s: C64) {
    for (p, _) in chain.terms.iter_mut() {
        for c in p.0.iter_mut() {
            *c *= s;
        }
    }
}

/// Full derivative state of `series + chain` at `y`, all terms analytic.
fn layered_state(series: &SeriesTerms, chain: &AiryChain, alpha: f64, y: f64) -> PointState {
    let s = series_state(series, alpha, y);
    let d1 = chain.derivative();
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    let d4 = d3.derivative();
    let (v, dv) = (chain.value(y), d1.value(y));
    let (v2, v4) = (d2.value(y), d4.value(y));
    let a2 = alpha * alpha;
    PointState {
        v: s.v + v,
        dv: s.dv + dv,
        lap: s.lap + v2 - a2 * v,
        lap2: s.lap2 + v4 - 2.0 * a2 * v2 + a2 * a2 * v,
    }
}

/// Interior residual of the eigen equation on the assembled mode, scanned
/// over series-zone and layer probes (both analytic; outer-zone smoothness
/// is inherited from the continuation, which integrates the same equation).
fn eigen_residual(ctx: &OsContext, series: &SeriesTerms, chain: &AiryChain) -> f64 {
    let eps = ctx.eps();
    let edge = ctx.airy.edge();
    let sigma = ctx.grids.sigma;
    let mut probes = vec![0.3 * edge, 0.6 * edge];
    for k in 1..=4 {
        probes.push(edge + (0.8 * sigma - edge) * k as f64 / 4.0);
    }
    let mut worst: f64 = 0.0;
    for &y in &probes {
        let s = if y <= edge {
            layered_state(series, chain, ctx.alpha, y)
        } else {
            series_state(series, ctx.alpha, y)
        };
        let r = orr_value(ctx.profile, ctx.c, eps, y, &s);
        let u = ctx.profile.eval(y);
        let u2 = ctx.profile.deriv(y, 2);
        let scale = ((u - ctx.c) * s.lap).norm()
            + (u2 * s.v).norm()
            + (eps * s.lap2).norm()
            + 1e-300;
        worst = worst.max(r.norm() / scale);
    }
    worst
}

/// Builds the eigenmode at a converged [`Eigenpair`].
///
/// The slow branch keeps its leading-coefficient-one normalization, the
/// fast branch enters with the weight `e.a`, so `psi(0) = 0` exactly and
/// `d_y psi(0)` inherits the dispersion residual.
pub fn build_linear_mode(profile: &Profile, e: &Eigenpair) -> Result<LinearMode> {
    let g = &e.grids;
    let ctx = OsContext::new(profile, e.nu, e.alpha, e.c, *g)?;
    let slow = slow_decaying_mode(&ctx.ray, &ctx.grids)?;
    let alpha = e.alpha;
    let a2 = alpha * alpha;
    let edge = ctx.airy.edge();
    let h_f = edge / (g.n_layer - 1) as f64;
    let gamma = ctx.airy.gamma;
    let y_c = ctx.airy.y_c;

    let mut psi_chain = ctx.airy.fast_fundamental();
    scale_chain(&mut psi_chain, e.a);
    let residual = eigen_residual(&ctx, &slow.series, &psi_chain);

    let n_out = slow.outer.len();
    let h_out = slow.outer.h;
    let series_rep = |t: SeriesTerms| SeriesRep::from_terms(t, g.sigma, 1e-9);

    let psi = MultiScaleFunction::new(
        series_rep(slow.series.clone())?,
        slow.outer.clone(),
        Tail::Slow { alpha },
        Some(FastRep::from_chain(psi_chain.clone(), 0.0, h_f, g.n_layer)),
    );

    let u = MultiScaleFunction::new(
        series_rep(slow.series.derivative())?,
        GridRep::from_fn(g.sigma, h_out, n_out, |y| slow.outer.deriv(y)),
        Tail::Slow { alpha },
        Some(FastRep::from_chain(psi_chain.derivative(), 0.0, h_f, g.n_layer)),
    );

    let mut v_series = slow.series.clone();
    v_series.scale(c64(0.0, -alpha));
    let mut v_chain = psi_chain.clone();
    scale_chain(&mut v_chain, c64(0.0, -alpha));
    let v = MultiScaleFunction::new(
        series_rep(v_series)?,
        GridRep::from_fn(g.sigma, h_out, n_out, |y| c64(0.0, -alpha) * slow.outer.value(y)),
        Tail::Slow { alpha },
        Some(FastRep::from_chain(v_chain, 0.0, h_f, g.n_layer)),
    );

    // omega = -psi'' + alpha^2 psi; the pure e^{-alpha y} far field is
    // annihilated exactly, so the tail is zero
    let mut om_series = slow.series.derivative().derivative();
    om_series.scale(c64(-1.0, 0.0));
    om_series.add_assign(&slow.series, c64(a2, 0.0));
    let om_chain = AiryChain {
        gamma,
        y_c,
        terms: vec![
            (Poly::constant(-e.a * gamma * gamma), AiryKind::Ai),
            (Poly::constant(e.a * a2), AiryKind::Ai2),
        ],
    };
    let omega = MultiScaleFunction::new(
        series_rep(om_series)?,
        GridRep::from_fn(g.sigma, h_out, n_out, |y| {
            a2 * slow.outer.value(y) - slow.outer.deriv2(y)
        }),
        Tail::Zero,
        Some(FastRep::from_chain(om_chain, 0.0, h_f, g.n_layer)),
    );

    Ok(LinearMode { psi, u, v, omega, residual })
}

// ---------------------------------------------------------------------------
// adjoint mode
// ---------------------------------------------------------------------------

/// Approximate transpose eigenmode and its ingredients.
///
/// `psi_t = e^{-alpha y} - f1(y_c) psi3 - g1` annihilates the transpose
/// operator to the order the truncation allows; `residual` records the
/// measured worst case. `f1` is carried in the decaying gauge, so
/// `f1(y_c) = -C_+`, the repair weight of the singular homogeneous
/// solution, and `psi3` (the Airy inversion of `e^{-alpha y}`, a simple
/// pole smoothed across the layer) enters with that weight.
pub struct AdjointMode {
    pub psi_t: MultiScaleFunction,
    pub psi3: MultiScaleFunction,
    pub f1: MultiScaleFunction,
    pub g1: MultiScaleFunction,
    pub f1_yc: C64,
    /// Worst transpose-equation residual over the standard probe set,
    /// relative to the local term scale.
    pub residual: f64,
}

/// Solves `(U - c) q = num` for the Laurent series `q` about `y_c`, given
/// that `U - c` has a simple zero there. Log powers are passive symbols, so
/// each one divides independently. The quotient starts one power below the
/// numerator's lowest term; a nonzero numerator value at `y_c` therefore
/// produces a `Y^{-1}` pole, and a vanishing one a regular quotient.
fn divide_by_u_minus_c(num: &SeriesTerms, umc: &SeriesTerms, n_max: i32) -> Result<SeriesTerms> {
    let u1 = umc.coeff(1, 0);
    if u1.norm() == 0.0 {
        return Err(Error::domain("series division: (U - c)'(y_c) = 0"));
    }
    if umc.coeff(0, 0).norm() > 1e-12 * u1.norm() {
        return Err(Error::domain("series division: (U - c)(y_c) != 0"));
    }
    let mut out = SeriesTerms::new(num.center);
    for p in 0..=4u8 {
        let lowest = num
            .iter()
            .filter(|((_, q), c)| *q == p && c.norm() > 0.0)
            .map(|((n, _), _)| n)
            .min();
        let Some(j0) = lowest else { continue };
        // ascending in target power m = j - 1: u1 q_m = num_{m+1} - sum_{k>=2} u_k q_{m+1-k}
        for m in (j0 - 1)..=n_max {
            let mut rhs = num.coeff(m + 1, p);
            let mut k = 2;
            while m + 1 - k >= j0 - 1 {
                rhs -= umc.coeff(k, 0) * out.coeff(m + 1 - k, p);
                k += 1;
            }
            let q = rhs / u1;
            if q.norm() > 0.0 {
                out.add_term(m, p, q);
            }
        }
    }
    Ok(out)
}

/// Transpose-equation residual scan over series-zone probes (analytic
/// derivatives), relative to the local term scale.
fn transpose_residual(ctx: &OsContext, series: &SeriesTerms) -> f64 {
    let eps = ctx.eps();
    let edge = ctx.airy.edge();
    let sigma = ctx.grids.sigma;
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        let y = 2.0 * edge + (0.8 * sigma - 2.0 * edge) * k as f64 / 5.0;
        let s = series_state(series, ctx.alpha, y);
        let r = orr_transpose_value(ctx.profile, ctx.c, eps, y, &s);
        let u = ctx.profile.eval(y);
        let u1 = ctx.profile.deriv(y, 1);
        let scale = ((u - ctx.c) * s.lap).norm()
            + (2.0 * u1 * s.dv).norm()
            + (eps * s.lap2).norm()
            + 1e-300;
        worst = worst.max(r.norm() / scale);
    }
    worst
}

/// Builds the approximate transpose eigenmode at a converged [`Eigenpair`].
pub fn build_adjoint_mode(profile: &Profile, e: &Eigenpair) -> Result<AdjointMode> {
    let g = &e.grids;
    let ctx = OsContext::new(profile, e.nu, e.alpha, e.c, *g)?;
    let slow = slow_decaying_mode(&ctx.ray, &ctx.grids)?;
    let alpha = e.alpha;
    let sigma = g.sigma;
    let n = g.n_series;
    let y_c = ctx.airy.y_c;
    let n_out = slow.outer.len();
    let h_out = slow.outer.h;
    let umc = ctx.ray.u_minus_c_series();
    let es = exp_series(alpha, y_c, n + 2);
    let series_rep = |t: SeriesTerms| SeriesRep::from_terms(t, sigma, 1e-9);
    let leading_of = |y: f64| (profile.eval(y) - e.c) * (-alpha * y).exp();

    // f1 in the decaying gauge: the slow mode is leading - f1_raw + C_+ psi_+,
    // so leading - psi_s is exactly f1_raw - C_+ psi_+, which decays. Its
    // value at y_c is the constant series coefficient (gauge-independent;
    // psi_+(y_c) is not 1 in the wall-anchored normalization).
    let mut leading = umc.multiply(&es);
    leading.truncate_degree(n as i32);
    let mut f1_series = leading.clone();
    f1_series.add_assign(&slow.series, c64(-1.0, 0.0));
    let f1_yc = f1_series.coeff(0, 0);
    let f1_outer = GridRep::from_fn(sigma, h_out, n_out, |y| leading_of(y) - slow.outer.value(y));
    let f1 = MultiScaleFunction::new(
        series_rep(f1_series.clone())?,
        f1_outer.clone(),
        Tail::Slow { alpha },
        None,
    );

    // g1 = (f1 - f1(y_c)) / (U - c); the numerator vanishes at y_c by
    // construction, so the quotient is log-singular but pole-free
    let mut g1_num = f1_series.clone();
    g1_num.add_term(0, 0, -f1_yc);
    let g1_series = divide_by_u_minus_c(&g1_num, umc, n as i32)?;
    if g1_series.iter().any(|((m, _), c)| m < 0 && c.norm() > 0.0) {
        return Err(Error::domain("g1 quotient acquired a pole"));
    }
    let g1_outer = GridRep::from_fn(sigma, h_out, n_out, |y| {
        (f1_outer.value(y) - f1_yc) / (profile.eval(y) - e.c)
    });
    let g1 = MultiScaleFunction::new(
        series_rep(g1_series.clone())?,
        g1_outer.clone(),
        Tail::Slow { alpha },
        None,
    );

    // psi3: Airy^{-1}(e^{-alpha y}), a simple pole at y_c smoothed by the
    // layer Green kernel; the fast grid carries the smoothing correction
    let psi3_series = divide_by_u_minus_c(&es, umc, n as i32)?;
    let f_nodes: Vec<C64> = (0..g.n_layer)
        .map(|i| c64((-alpha * ctx.airy.node(i)).exp(), 0.0))
        .collect();
    let w3 = ctx.airy.solve_airy(&f_nodes)?;
    let h_f = ctx.airy.edge() / (g.n_layer - 1) as f64;
    let mut psi3_fast = GridRep::from_fn(0.0, h_f, g.n_layer, |_| czero());
    for (i, val) in w3.iter().enumerate() {
        psi3_fast.vals[i] = val - psi3_series.value(ctx.airy.node(i));
    }
    let psi3_outer =
        GridRep::from_fn(sigma, h_out, n_out, |y| (-alpha * y).exp() / (profile.eval(y) - e.c));
    let psi3 = MultiScaleFunction::new(
        series_rep(psi3_series.clone())?,
        psi3_outer.clone(),
        Tail::Slow { alpha },
        Some(FastRep { grid: psi3_fast.clone(), chain: None }),
    );

    // psi_t = e^{-alpha y} - f1(y_c) psi3 - g1
    let mut t_series = es.clone();
    t_series.truncate_degree(n as i32);
    t_series.add_assign(&psi3_series, -f1_yc);
    t_series.add_assign(&g1_series, c64(-1.0, 0.0));
    let t_outer = GridRep::from_fn(sigma, h_out, n_out, |y| {
        (-alpha * y).exp() - f1_yc * psi3_outer.value(y) - g1_outer.value(y)
    });
    let mut t_fast = psi3_fast;
    for val in t_fast.vals.iter_mut() {
        *val *= -f1_yc;
    }
    let residual = transpose_residual(&ctx, &t_series);
    let psi_t = MultiScaleFunction::new(
        series_rep(t_series)?,
        t_outer,
        Tail::Slow { alpha },
        Some(FastRep { grid: t_fast, chain: None }),
    );

    Ok(AdjointMode { psi_t, psi3, f1, g1, f1_yc, residual })
}
