//! The full viscous operator and its two-scale solver.
//!
//! `Orr(psi) = (U - c) L psi - U'' psi - eps L^2 psi` with `L = d^2 - alpha^2`
//! and `eps = nu/(i alpha)`. The solver composes the machinery of the lower
//! layers:
//!
//! 1. series inversion of the slow source about the critical point
//!    (free coefficients gauged to zero);
//! 2. RK4 continuation over `[sigma, Y0]` driving the same ODE with the
//!    outer source samples;
//! 3. decay repair at `Y0`: the Robin functional `R[f] = f'(Y0) + alpha f(Y0)`
//!    annihilates `e^{-alpha y}` exactly, so subtracting
//!    `R[psi_1]/R[psi_+]` times the singular homogeneous solution removes
//!    the growing content the gauge let in;
//! 4. the viscous defect of the slow part, `G_b = -eps L^2 psi_slow`, sampled
//!    analytically from the series on the layer grid;
//! 5. the two-stage fast solve: vorticity from the Airy kernel, stream
//!    function from the decaying Poisson kernel (compact + slow envelope);
//! 6. wall boundary conditions `psi(0) = psi'(0) = 0` enforced with the pair
//!    of decaying homogeneous solutions (slow mode, fast `Ai(2, .)`), via a
//!    column-equilibrated 2x2 solve.
//!
//! The *decaying slow mode* built by [`slow_decaying_mode`] is the workhorse:
//! it underlies the boundary-condition column here, the dispersion relation,
//! and the eigenfunction itself. Its construction uses the identity
//! `Ray[(U - c~) e^{-alpha y}] = -2 alpha (U - c~) U' e^{-alpha y}`: the
//! right side is inverted back (a regular series, since it vanishes at the
//! critical point) and repaired at `Y0`, leaving an exact decaying Rayleigh
//! solution whose only log content is the `O(alpha)` repair multiple of the
//! singular branch.

use num_complex::Complex64;

use crate::critical_layer::AiryContext;
use crate::error::{Error, Result};
use crate::funcrep::{GridRep, SeriesTerms};
use crate::profiles::Profile;
use crate::rayleigh::{
    exp_series, integrate_outer, integrate_outer_dd, RayleighContext, RayleighPair, Scheme,
};

type C64 = Complex64;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Discretization parameters shared by every solve.
#[derive(Clone, Copy, Debug)]
pub struct Grids {
    /// Right edge of the critical series zone.
    pub sigma: f64,
    /// Outer grid step on `[sigma, y_max]`.
    pub h: f64,
    /// Outer truncation radius; tails are handled analytically beyond it.
    pub y_max: f64,
    /// Layer half-width in units of `nu^{1/4}`.
    pub theta: f64,
    /// Nodes on the layer grid.
    pub n_layer: usize,
    /// Series truncation degree.
    pub n_series: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Grids { sigma: 0.1, h: 1e-3, y_max: 40.0, theta: 30.0, n_layer: 401, n_series: 30 }
    }
}

impl Grids {
    pub fn layer_edge(&self, nu: f64) -> f64 {
        self.theta * nu.powf(0.25)
    }

    pub fn outer_nodes(&self) -> usize {
        ((self.y_max - self.sigma) / self.h).round() as usize + 1
    }

    /// The scale separation this discretization assumes.
    pub fn validate(&self, nu: f64, y_c: C64) -> Result<()> {
        let edge = self.layer_edge(nu);
        if !(edge > 0.0) || edge > 0.5 * self.sigma {
            return Err(Error::config(format!(
                "layer edge {edge:.3e} must sit inside half the series zone {:.3e}; \
                 nu is too large for this sigma",
                self.sigma
            )));
        }
        if y_c.im <= 0.0 {
            return Err(Error::config("critical point must lie above the real axis"));
        }
        if y_c.re < 0.0 || y_c.re > 0.5 * self.sigma {
            return Err(Error::config(format!(
                "critical point {:.3e} must lie in [0, sigma/2]",
                y_c.re
            )));
        }
        if y_c.im > 0.1 {
            return Err(Error::config("critical point too far from the real axis"));
        }
        if self.y_max < 2.0 * self.sigma || self.h <= 0.0 || self.h > self.sigma {
            return Err(Error::config("outer grid must satisfy h <= sigma < y_max/2"));
        }
        if self.n_series < 10 || self.n_layer < 64 {
            return Err(Error::config("resolution too low: need n_series >= 10, n_layer >= 64"));
        }
        Ok(())
    }
}

/// Everything frozen for one `(profile, nu, alpha, c)` quadruple.
pub struct OsContext<'a> {
    pub profile: &'a Profile,
    pub nu: f64,
    pub alpha: f64,
    pub c: C64,
    pub grids: Grids,
    pub ray: RayleighContext<'a>,
    pub airy: AiryContext,
}

impl<'a> OsContext<'a> {
    pub fn new(profile: &'a Profile, nu: f64, alpha: f64, c: C64, grids: Grids) -> Result<Self> {
        let y_c = profile.critical_point(c)?;
        grids.validate(nu, y_c)?;
        let ray = RayleighContext::new(profile, y_c, alpha, grids.sigma, grids.n_series)?;
        let airy = AiryContext::new(
            nu,
            alpha,
            y_c,
            ray.c1(),
            grids.layer_edge(nu),
            grids.n_layer,
        )?;
        Ok(OsContext { profile, nu, alpha, c, grids, ray, airy })
    }

    pub fn eps(&self) -> C64 {
        self.airy.eps
    }
}

// ---------------------------------------------------------------------------
// pointwise operator values
// ---------------------------------------------------------------------------

/// Local derivative data of a function at one point:
/// value, first derivative, `L v` and `L^2 v` with `L = d^2 - alpha^2`.
#[derive(Clone, Copy, Debug)]
pub struct PointState {
    pub v: C64,
    pub dv: C64,
    pub lap: C64,
    pub lap2: C64,
}

/// `Orr(v)` at `y` from local data.
pub fn orr_value(profile: &Profile, c: C64, eps: C64, y: f64, s: &PointState) -> C64 {
    let u = profile.eval(y);
    let upp = profile.deriv(y, 2);
    (u - c) * s.lap - upp * s.v - eps * s.lap2
}

/// The formal transpose `Orr^t(v) = L((U - c) v) - U'' v - eps L^2 v` at `y`,
/// expanded by the product rule so only local data of `v` is needed:
/// `(U - c) L v + 2 U' v' - eps L^2 v` (the `U'' v` terms cancel).
pub fn orr_transpose_value(profile: &Profile, c: C64, eps: C64, y: f64, s: &PointState) -> C64 {
    let u = profile.eval(y);
    let up = profile.deriv(y, 1);
    (u - c) * s.lap + 2.0 * up * s.dv - eps * s.lap2
}

/// Assembles [`PointState`] from a series representation (analytic
/// derivatives; valid in the series zone).
pub fn series_state(t: &SeriesTerms, alpha: f64, y: f64) -> PointState {
    let d1 = t.derivative();
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    let d4 = d3.derivative();
    let a2 = alpha * alpha;
    let v = t.value(y);
    let vpp = d2.value(y);
    let lap = vpp - a2 * v;
    let lap2 = d4.value(y) - 2.0 * a2 * vpp + a2 * a2 * v;
    PointState { v, dv: d1.value(y), lap, lap2 }
}

// ---------------------------------------------------------------------------
// the decaying slow mode
// ---------------------------------------------------------------------------

/// An exact decaying Rayleigh solution normalized like `(U - c~) e^{-alpha y}`.
pub struct SlowMode {
    pub series: SeriesTerms,
    pub outer: GridRep,
    pub end_der: C64,
    pub wall_val: C64,
    pub wall_der: C64,
    /// First-order correction series (reused by the adjoint construction).
    pub f1: SeriesTerms,
    /// Repair coefficient of the singular homogeneous solution.
    pub c_plus: C64,
    pub pair: RayleighPair,
    /// Outer continuation of the singular homogeneous solution.
    pub plus_outer: GridRep,
    pub plus_end_der: C64,
}

/// Robin functional annihilating the decaying tail: `f'(Y0) + alpha f(Y0)`.
fn robin(alpha: f64, val: C64, der: C64) -> C64 {
    der + alpha * val
}

pub fn slow_decaying_mode(ray: &RayleighContext, grids: &Grids) -> Result<SlowMode> {
    let alpha = ray.alpha;
    let n = ray.n;
    let sigma = grids.sigma;
    let n_out = grids.outer_nodes();
    let profile = ray.profile;

    // leading part (U - c~) e^{-alpha y} and its defect source
    let e = exp_series(alpha, ray.y_c, n + 2);
    let mut leading = ray.u_minus_c_series().multiply(&e);
    leading.truncate_degree(n as i32);
    let mut src = ray.u_minus_c_series().multiply(&ray.u_prime_series());
    src = src.multiply(&e);
    src.scale(C64::new(-2.0 * alpha, 0.0));
    src.truncate_degree(n as i32);
    let f1 = ray.invert_ray(&src, None)?.psi;

    let pair = ray.homogeneous_pair()?;

    // continue f1 and psi+ outward; the source has the exact closed form
    let c_tilde = ray.c_tilde;
    let src_fn = move |y: f64| -> C64 {
        let u = profile.eval(y);
        let up = profile.deriv(y, 1);
        -2.0 * alpha * (u - c_tilde) * up * (-alpha * y).exp()
    };
    // The repair coefficient is a ratio of O(alpha) Robin projections of
    // large trajectories; double-double accumulation keeps it smooth in `c`
    // (f64 accumulation leaves ~1e-8 relative jitter, which the singular
    // solution's O(1/c~) wall slope would amplify into the wall data).
    let df1 = f1.derivative();
    let f1_outer = integrate_outer_dd(
        profile,
        c_tilde,
        alpha,
        sigma,
        f1.value(sigma),
        df1.value(sigma),
        grids.h,
        n_out,
        Some(&src_fn),
    );
    let dplus = pair.plus.derivative();
    let plus_outer = integrate_outer_dd(
        profile,
        c_tilde,
        alpha,
        sigma,
        pair.plus.value(sigma),
        dplus.value(sigma),
        grids.h,
        n_out,
        None,
    );

    let r_plus = plus_outer.robin(alpha);
    if r_plus.norm_est() < 1e-300 {
        return Err(Error::ill_conditioned("decay repair: singular solution has no growth"));
    }
    let c_plus = f1_outer.robin(alpha).div(r_plus).to_c64();

    // assemble: leading - f1 + c_plus psi+
    let mut series = leading;
    series.add_assign(&f1, C64::new(-1.0, 0.0));
    series.add_assign(&pair.plus, c_plus);

    let leading_at = |y: f64| (profile.eval(y) - c_tilde) * (-alpha * y).exp();
    let dleading_at = |y: f64| {
        let e = (-alpha * y).exp();
        C64::from(profile.deriv(y, 1)) * e - alpha * (profile.eval(y) - c_tilde) * e
    };
    let vals: Vec<C64> = (0..n_out)
        .map(|i| {
            let y = sigma + i as f64 * grids.h;
            leading_at(y) - f1_outer.grid.vals[i] + c_plus * plus_outer.grid.vals[i]
        })
        .collect();
    let outer = GridRep { y0: sigma, h: grids.h, vals };
    let end_y = outer.y_end();
    let end_der =
        dleading_at(end_y) - f1_outer.end_der.to_c64() + c_plus * plus_outer.end_der.to_c64();

    let dser = series.derivative();
    Ok(SlowMode {
        wall_val: series.value(0.0),
        wall_der: dser.value(0.0),
        series,
        outer,
        end_der,
        f1,
        c_plus,
        pair,
        plus_outer: plus_outer.grid,
        plus_end_der: plus_outer.end_der.to_c64(),
    })
}

// ---------------------------------------------------------------------------
// sources and solutions
// ---------------------------------------------------------------------------

/// A forcing term in the pieces the solver consumes.
pub struct OsSource {
    /// Series-zone content about the critical point.
    pub slow_series: SeriesTerms,
    /// Samples on the outer grid `[sigma, y_max]`.
    pub outer: GridRep,
    /// Fast content on the layer grid.
    pub fast: Vec<C64>,
}

impl OsSource {
    /// Builds a source from a slow series plus an outer closure; fast content
    /// zero. (The series is also what the layer sees, through the defect.)
    pub fn from_slow(ctx: &OsContext, series: SeriesTerms, outer_fn: impl Fn(f64) -> C64) -> Self {
        let n_out = ctx.grids.outer_nodes();
        let outer = GridRep::from_fn(ctx.grids.sigma, ctx.grids.h, n_out, outer_fn);
        OsSource { slow_series: series, outer, fast: vec![czero(); ctx.grids.n_layer] }
    }
}

/// Output of [`solve_os`]: the slow pieces plus analytic fast grids.
///
/// The full function is
/// `psi(y) = slow(y) + fast(y)` where `slow` is `series` on `[0, sigma]`,
/// `outer` beyond, `outer.last() e^{-alpha(y - y_max)}` past the grid, and
/// `fast` is the compact layer grid (`fast_val`).
pub struct OsSolution {
    pub series: SeriesTerms,
    pub outer: GridRep,
    pub end_der: C64,
    /// Compact fast part and its analytic derivative on the layer grid.
    pub fast_val: GridRep,
    pub fast_der: GridRep,
    /// `L psi` of the fast part and its derivative (analytic, from the
    /// stage-1 vorticity and the fundamental chain).
    pub fast_omega: GridRep,
    pub fast_omega_der: GridRep,
    /// Correction coefficients: slow homogeneous, fast fundamental, slow
    /// envelope radiated by the layer.
    pub kappa_slow: C64,
    pub kappa_fast: C64,
    pub c_slow: C64,
    /// Wall state after correction (diagnostic; should be at roundoff).
    pub wall_residual: (C64, C64),
}

impl OsSolution {
    pub fn slow_value(&self, sigma: f64, y: f64) -> C64 {
        if y < sigma {
            self.series.value(y)
        } else if y <= self.outer.y_end() {
            self.outer.value(y)
        } else {
            let alpha_tail = -(self.end_der / self.outer.last()).re;
            self.outer.last() * (-alpha_tail * (y - self.outer.y_end())).exp()
        }
    }
}

/// Solves `Orr(psi) = phi` with wall conditions `psi(0) = psi'(0) = 0` and
/// decay at infinity.
pub fn solve_os(ctx: &OsContext, src: &OsSource, scheme: Scheme) -> Result<OsSolution> {
    let grids = &ctx.grids;
    let sigma = grids.sigma;
    let alpha = ctx.alpha;
    let n_out = grids.outer_nodes();
    if src.outer.vals.len() != n_out || src.fast.len() != grids.n_layer {
        return Err(Error::incompatible("source grids do not match the context"));
    }

    // step 1: series inversion of the slow source
    let inv = ctx.ray.invert_ray(&src.slow_series, None)?;
    let psi1 = inv.psi;

    // step 2: outer continuation with the sampled source
    let src_outer = src.outer.clone();
    let src_fn = move |y: f64| src_outer.value(y);
    let dpsi1 = psi1.derivative();
    let psi1_outer = integrate_outer(
        ctx.profile,
        ctx.ray.c_tilde,
        alpha,
        sigma,
        psi1.value(sigma),
        dpsi1.value(sigma),
        grids.h,
        n_out,
        Some(&src_fn),
        scheme,
    );

    // step 3: decay repair against the singular homogeneous solution
    let mode = slow_decaying_mode(&ctx.ray, grids)?;
    let r_plus = robin(alpha, mode.plus_outer.last(), mode.plus_end_der);
    let c_rep = robin(alpha, psi1_outer.end_val, psi1_outer.end_der) / r_plus;
    let mut slow_series = psi1;
    slow_series.add_assign(&mode.pair.plus, -c_rep);
    let slow_outer_vals: Vec<C64> = (0..n_out)
        .map(|i| psi1_outer.grid.vals[i] - c_rep * mode.plus_outer.vals[i])
        .collect();
    let slow_end_der = psi1_outer.end_der - c_rep * mode.plus_end_der;

    // step 4: viscous defect of the slow part on the layer grid
    let d1 = slow_series.derivative();
    let d2 = d1.derivative();
    let d3 = d2.derivative();
    let d4 = d3.derivative();
    let a2 = alpha * alpha;
    let eps = ctx.eps();
    let mut rhs = Vec::with_capacity(grids.n_layer);
    for i in 0..grids.n_layer {
        let y = ctx.airy.node(i);
        let lap2 = d4.value(y) - 2.0 * a2 * d2.value(y) + a2 * a2 * slow_series.value(y);
        // G_b = -eps L^2 psi_slow; the fast solve absorbs F_b - G_b
        rhs.push(src.fast[i] + eps * lap2);
    }

    // step 5: two-stage fast solve
    let (w2, dw2) = ctx.airy.solve_airy_with_deriv(&rhs)?;
    let stream = ctx.airy.solve_stream(&w2)?;
    let dcompact = ctx.airy.stream_compact_deriv(&w2)?;

    // fold the slow envelope into the slow representation
    let env = exp_series(alpha, ctx.ray.y_c, ctx.ray.n + 2);
    slow_series.add_assign(&env, stream.c_slow);
    let slow_outer_vals: Vec<C64> = slow_outer_vals
        .iter()
        .enumerate()
        .map(|(i, v)| v + stream.c_slow * (-alpha * (sigma + i as f64 * grids.h)).exp())
        .collect();
    let end_y = sigma + (n_out - 1) as f64 * grids.h;
    let slow_end_der = slow_end_der - alpha * stream.c_slow * (-alpha * end_y).exp();

    // step 6: wall conditions with the decaying homogeneous pair
    let dslow = slow_series.derivative();
    let wall_val = slow_series.value(0.0) + stream.compact[0];
    let wall_der = dslow.value(0.0) + dcompact[0];
    let (fast0, dfast0) = ctx.airy.fast_wall_state();
    let (kappa_slow, kappa_fast) = solve_wall_2x2(
        [mode.wall_val, fast0],
        [mode.wall_der, dfast0],
        [-wall_val, -wall_der],
    )?;

    let mut series = slow_series;
    series.add_assign(&mode.series, kappa_slow);
    let outer_vals: Vec<C64> = (0..n_out)
        .map(|i| slow_outer_vals[i] + kappa_slow * mode.outer.vals[i])
        .collect();
    let end_der = slow_end_der + kappa_slow * mode.end_der;

    // assemble fast grids with analytic derivatives
    let h_c = ctx.airy.h;
    let mut fv = Vec::with_capacity(grids.n_layer);
    let mut fd = Vec::with_capacity(grids.n_layer);
    let mut fo = Vec::with_capacity(grids.n_layer);
    let mut fod = Vec::with_capacity(grids.n_layer);
    let g2 = ctx.airy.gamma * ctx.airy.gamma;
    for i in 0..grids.n_layer {
        let y = ctx.airy.node(i);
        let z = ctx.airy.z_at(y);
        let b = crate::specfun::airy_all(z);
        fv.push(stream.compact[i] + kappa_fast * b.ai2);
        fd.push(dcompact[i] + kappa_fast * ctx.airy.gamma * b.ai1);
        // L(Ai2 chain) = gamma^2 Ai - alpha^2 Ai2; omega of the compact part
        // is exactly the stage-1 vorticity
        fo.push(w2[i] + kappa_fast * (g2 * b.ai - a2 * b.ai2));
        fod.push(dw2[i] + kappa_fast * (g2 * ctx.airy.gamma * b.aip - a2 * ctx.airy.gamma * b.ai1));
    }
    let mkgrid = |vals: Vec<C64>| GridRep { y0: 0.0, h: h_c, vals };

    let wall_residual = (
        series.value(0.0) + fv[0],
        series.derivative().value(0.0) + fd[0],
    );

    Ok(OsSolution {
        series,
        outer: GridRep { y0: sigma, h: grids.h, vals: outer_vals },
        end_der,
        fast_val: mkgrid(fv),
        fast_der: mkgrid(fd),
        fast_omega: mkgrid(fo),
        fast_omega_der: mkgrid(fod),
        kappa_slow,
        kappa_fast,
        c_slow: stream.c_slow,
        wall_residual,
    })
}

/// Solves the 2x2 wall system with column equilibration and a condition
/// check; columns are the wall states of the two homogeneous solutions.
fn solve_wall_2x2(row_val: [C64; 2], row_der: [C64; 2], rhs: [C64; 2]) -> Result<(C64, C64)> {
    let s0 = row_val[0].norm().max(row_der[0].norm()).max(1e-300);
    let s1 = row_val[1].norm().max(row_der[1].norm()).max(1e-300);
    let a = row_val[0] / s0;
    let b = row_val[1] / s1;
    let c = row_der[0] / s0;
    let d = row_der[1] / s1;
    let det = a * d - b * c;
    // equilibrated column norms are 1, so 1/|det| bounds the condition number
    if det.norm() < 1e-12 {
        return Err(Error::ill_conditioned(format!(
            "wall system condition ~ {:.2e} exceeds 1e12 (parameters near an eigenvalue?)",
            det.norm().recip()
        )));
    }
    let x0 = (d * rhs[0] - b * rhs[1]) / det;
    let x1 = (a * rhs[1] - c * rhs[0]) / det;
    Ok((x0 / s0, x1 / s1))
}
