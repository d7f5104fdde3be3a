//! Fast-scale solvers on the critical-layer grid.
//!
//! Inside the layer the full operator factors through the Airy operator
//! `A(w) = (U - c + eps alpha^2) w - eps w''` acting on the vorticity, with
//! `eps = nu/(i alpha)`. Linearizing `U - c ~ U'(y_c)(y - y_c)` and writing
//! `z = gamma (y - y_c)` with `eps gamma^3 = U'(y_c)` turns it into the Airy
//! equation; the root `gamma` is chosen in the sector `arg in (0, pi/3)`
//! (close to `pi/6` on the physical branch) so `Ai(z)` decays toward the free
//! stream.
//!
//! Two kernels operate on the uniform layer grid `[0, theta nu^{1/4}]`:
//!
//! - [`AiryContext::solve_airy`] inverts the linearized Airy operator with the
//!   recessive pair `(Di, Ai)`: `G(x,y) = -Di(z_<) Ai(z_>) / (eps gamma)`,
//!   whose derivative jump is `-1/eps`. `Di` is the rotation of `Ai` that
//!   stays small on the wall side of the turning point (where `Ai` and `Ci`
//!   both grow like `e^{2|Z|^{3/2}/3}`), so the particular solution carries no
//!   exponentially large homogeneous content for the boundary stage to cancel;
//! - [`AiryContext::solve_stream`] inverts `(d^2 - alpha^2)` with the decaying
//!   free-space kernel `-e^{-alpha |x-y|}/(2 alpha)`. Because `alpha` is tiny
//!   compared to the layer width the result is split exactly into a compact
//!   part (vanishing at the grid edge) and a slow ` C e^{-alpha y}` envelope
//!   that the caller folds into the slow representation.
//!
//! The FAST homogeneous solution of the full problem is the second Airy
//! primitive `Ai(2, z)`, exposed as an [`AiryChain`] so wall values and
//! derivatives are analytic.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::funcrep::{AiryChain, AiryKind, GridRep, Poly};
use crate::specfun::{airy_all, airy_di, airy_di_prime};

type C64 = Complex64;

fn czero() -> C64 {
    C64::new(0.0, 0.0)
}

/// `sinh(u)/u`, stable at tiny arguments.
fn sinhc(u: f64) -> f64 {
    if u.abs() < 1e-4 {
        1.0 + u * u / 6.0
    } else {
        u.sinh() / u
    }
}

/// Frozen layer parameters and cached kernel samples for one `(c, alpha)`.
pub struct AiryContext {
    pub eps: C64,
    pub gamma: C64,
    pub y_c: C64,
    pub alpha: f64,
    /// Layer grid: `[0, theta nu^{1/4}]`.
    pub y0: f64,
    pub h: f64,
    pub n: usize,
    ai_nodes: Vec<C64>,
    di_nodes: Vec<C64>,
    aip_nodes: Vec<C64>,
    dip_nodes: Vec<C64>,
}

impl AiryContext {
    /// `u1 = U'(y_c)`. The grid spans `[0, edge]` with `n` nodes.
    pub fn new(nu: f64, alpha: f64, y_c: C64, u1: C64, edge: f64, n: usize) -> Result<Self> {
        if nu <= 0.0 || alpha <= 0.0 || edge <= 0.0 || n < 16 {
            return Err(Error::config("airy context: need nu, alpha, edge > 0 and n >= 16"));
        }
        let eps = C64::new(0.0, -nu / alpha); // nu / (i alpha)
        let mut gamma = (u1 / eps).powf(1.0 / 3.0);
        // rotate the principal root into the decay sector arg in (0, pi/3)
        let rot = C64::from_polar(1.0, 2.0 * std::f64::consts::FRAC_PI_3);
        for _ in 0..2 {
            let a = gamma.arg();
            if a > 0.0 && a < std::f64::consts::FRAC_PI_3 {
                break;
            }
            gamma *= rot;
        }
        let resid = (eps * gamma.powu(3) - u1).norm() / u1.norm();
        if resid > 1e-12 {
            return Err(Error::ill_conditioned(format!(
                "gamma does not satisfy eps gamma^3 = U'(y_c) (residual {resid:.2e})"
            )));
        }
        let h = edge / (n - 1) as f64;
        let mut ai_nodes = Vec::with_capacity(n);
        let mut di_nodes = Vec::with_capacity(n);
        let mut aip_nodes = Vec::with_capacity(n);
        let mut dip_nodes = Vec::with_capacity(n);
        for i in 0..n {
            let z = gamma * (C64::new(i as f64 * h, 0.0) - y_c);
            let b = airy_all(z);
            ai_nodes.push(b.ai);
            aip_nodes.push(b.aip);
            di_nodes.push(airy_di(z));
            dip_nodes.push(airy_di_prime(z));
        }
        Ok(AiryContext { eps, gamma, y_c, alpha, y0: 0.0, h, n, ai_nodes, di_nodes, aip_nodes, dip_nodes })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.y0 + i as f64 * self.h
    }

    pub fn edge(&self) -> f64 {
        self.node(self.n - 1)
    }

    pub fn z_at(&self, y: f64) -> C64 {
        self.gamma * (C64::new(y, 0.0) - self.y_c)
    }

    /// `Z = gamma y_c`, the scaled wall distance of the critical point.
    pub fn z_wall(&self) -> C64 {
        self.gamma * self.y_c
    }

    /// The decaying fast homogeneous solution `Ai(2, gamma (y - y_c))`.
    pub fn fast_fundamental(&self) -> AiryChain {
        AiryChain {
            gamma: self.gamma,
            y_c: self.y_c,
            terms: vec![(Poly::constant(C64::new(1.0, 0.0)), AiryKind::Ai2)],
        }
    }

    /// Inverts the linearized Airy operator
    /// `eps gamma^3 (y - y_c) w - eps w'' = f` on the layer grid, with the
    /// recessive branch selected on each side (`Ai` toward the free stream,
    /// `Di` toward the wall). Trapezoid weights; `f` is sampled at the grid
    /// nodes.
    pub fn solve_airy(&self, f: &[C64]) -> Result<Vec<C64>> {
        if f.len() != self.n {
            return Err(Error::incompatible("solve_airy: rhs length != grid size"));
        }
        let scale = -1.0 / (self.eps * self.gamma);
        let w = |j: usize| if j == 0 || j == self.n - 1 { 0.5 } else { 1.0 };
        // prefix sums: below[i] = sum_{j<=i} Di_j f_j h, above[i] = sum_{j>=i} Ai_j f_j h
        let mut below = vec![czero(); self.n];
        let mut acc = czero();
        for j in 0..self.n {
            acc += w(j) * self.di_nodes[j] * f[j] * self.h;
            below[j] = acc;
        }
        let mut above = vec![czero(); self.n];
        acc = czero();
        for j in (0..self.n).rev() {
            acc += w(j) * self.ai_nodes[j] * f[j] * self.h;
            above[j] = acc;
        }
        let mut out = Vec::with_capacity(self.n);
        for i in 0..self.n {
            // split at the diagonal; the node itself belongs to both sums, so
            // remove one copy of its half-weighted contribution
            let diag = w(i) * self.ai_nodes[i] * self.di_nodes[i] * f[i] * self.h;
            let v = self.ai_nodes[i] * below[i] + self.di_nodes[i] * above[i] - diag;
            out.push(scale * v);
        }
        Ok(out)
    }

    /// Inverts `(d^2 - alpha^2) psi = w` for compactly supported `w` with the
    /// decaying kernel, returning the compact part on the grid (exactly zero
    /// at the edge) and the coefficient of the slow `e^{-alpha y}` envelope
    /// valid for `y` beyond the layer:
    /// `psi(y) = compact(y) + c_slow e^{-alpha y}`.
    pub fn solve_stream(&self, w: &[C64]) -> Result<StreamSolve> {
        if w.len() != self.n {
            return Err(Error::incompatible("solve_stream: rhs length != grid size"));
        }
        let tw = |j: usize| if j == 0 || j == self.n - 1 { 0.5 } else { 1.0 };
        // c_slow = -1/(2 alpha) int e^{alpha x} w dx
        let mut m = czero();
        for j in 0..self.n {
            m += tw(j) * (self.alpha * self.node(j)).exp() * w[j] * self.h;
        }
        let c_slow = -m / (2.0 * self.alpha);
        // compact(y) = int_y^T sinh(alpha (x - y))/alpha * w dx, direct O(n^2)
        let mut compact = vec![czero(); self.n];
        for (i, ci) in compact.iter_mut().enumerate() {
            let yi = self.node(i);
            let mut acc = czero();
            for j in i..self.n {
                let d = self.node(j) - yi;
                let ker = d * sinhc(self.alpha * d);
                // re-derive trapezoid weights on the [y_i, T] subinterval
                let wj = if j == i || j == self.n - 1 { 0.5 } else { 1.0 };
                acc += wj * ker * w[j] * self.h;
            }
            *ci = acc;
        }
        Ok(StreamSolve { compact, c_slow })
    }

    /// [`AiryContext::solve_airy`] plus the analytic first derivative of the
    /// solution. The Leibniz terms of the moving integration limits cancel
    /// exactly (`Ai Di f - Di Ai f`), so
    /// `w' = -gamma (Ai' B + Di' A) / (eps gamma)` with the same prefix
    /// integrals `B(y) = int_0^y Di f`, `A(y) = int_y^T Ai f`.
    pub fn solve_airy_with_deriv(&self, f: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
        if f.len() != self.n {
            return Err(Error::incompatible("solve_airy: rhs length != grid size"));
        }
        let scale = -1.0 / (self.eps * self.gamma);
        // exact trapezoid prefix sums with half weights at both moving ends
        let mut below = vec![czero(); self.n];
        for i in 1..self.n {
            let prev = self.di_nodes[i - 1] * f[i - 1];
            let cur = self.di_nodes[i] * f[i];
            below[i] = below[i - 1] + 0.5 * self.h * (prev + cur);
        }
        let mut above = vec![czero(); self.n];
        for i in (0..self.n - 1).rev() {
            let next = self.ai_nodes[i + 1] * f[i + 1];
            let cur = self.ai_nodes[i] * f[i];
            above[i] = above[i + 1] + 0.5 * self.h * (cur + next);
        }
        let mut w = Vec::with_capacity(self.n);
        let mut dw = Vec::with_capacity(self.n);
        for i in 0..self.n {
            w.push(scale * (self.ai_nodes[i] * below[i] + self.di_nodes[i] * above[i]));
            dw.push(
                scale
                    * self.gamma
                    * (self.aip_nodes[i] * below[i] + self.dip_nodes[i] * above[i]),
            );
        }
        Ok((w, dw))
    }

    /// Analytic derivative of the compact part of [`AiryContext::solve_stream`]:
    /// `d/dy int_y^T sinh(alpha (x - y))/alpha w dx = -int_y^T cosh(alpha (x - y)) w dx`
    /// (the boundary term vanishes since the kernel is zero at `x = y`).
    pub fn stream_compact_deriv(&self, w: &[C64]) -> Result<Vec<C64>> {
        if w.len() != self.n {
            return Err(Error::incompatible("stream deriv: rhs length != grid size"));
        }
        let mut out = vec![czero(); self.n];
        for (i, oi) in out.iter_mut().enumerate() {
            let yi = self.node(i);
            let mut acc = czero();
            for j in i..self.n {
                let d = self.node(j) - yi;
                let wj = if j == i || j == self.n - 1 { 0.5 } else { 1.0 };
                acc += wj * (self.alpha * d).cosh() * w[j] * self.h;
            }
            *oi = -acc;
        }
        Ok(out)
    }

    /// Wall state of the fast fundamental: `(Ai(2,-Z), gamma Ai(1,-Z))`.
    pub fn fast_wall_state(&self) -> (C64, C64) {
        let b = airy_all(-self.z_wall());
        (b.ai2, self.gamma * b.ai1)
    }

    /// Samples the linearized Airy operator residual of `w` against `f`
    /// (finite differences; diagnostic for tests and health checks).
    pub fn airy_residual(&self, w: &[C64], f: &[C64]) -> f64 {
        let mut worst: f64 = 0.0;
        let scale = f.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        for i in 1..self.n - 1 {
            let wpp = (w[i - 1] - 2.0 * w[i] + w[i + 1]) / (self.h * self.h);
            let y = self.node(i);
            let lin = self.eps * self.gamma.powu(3) * (C64::new(y, 0.0) - self.y_c);
            let r = lin * w[i] - self.eps * wpp - f[i];
            worst = worst.max(r.norm() / scale);
        }
        worst
    }
}

/// Output of the stage-2 stream inversion.
pub struct StreamSolve {
    /// Grid values of the compact part (zero at the layer edge).
    pub compact: Vec<C64>,
    /// Coefficient of `e^{-alpha y}`: the slow envelope the layer radiates.
    pub c_slow: C64,
}

impl StreamSolve {
    pub fn into_grid(self, y0: f64, h: f64) -> GridRep {
        GridRep { y0, h, vals: self.compact }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    /// A test-scale context (order-one gamma) where finite differences can
    /// verify the kernels directly.
    fn test_ctx() -> AiryContext {
        // choose nu, alpha so gamma comes out order one: gamma^3 = i alpha u1/nu
        let nu = 0.04;
        let alpha = 0.9;
        let u1 = c(1.1, 0.02);
        let y_c = c(0.35, 0.06);
        AiryContext::new(nu, alpha, y_c, u1, 1.4, 561).unwrap()
    }

    fn bump(ctx: &AiryContext, center: f64, width: f64) -> Vec<C64> {
        (0..ctx.n)
            .map(|i| {
                let t = (ctx.node(i) - center) / width;
                if t.abs() < 1.0 {
                    C64::new((-1.0 / (1.0 - t * t)).exp(), 0.3 * (-1.0 / (1.0 - t * t)).exp())
                } else {
                    czero()
                }
            })
            .collect()
    }

    #[test]
    fn gamma_satisfies_scaling_identity_exactly() {
        let ctx = test_ctx();
        let resid = (ctx.eps * ctx.gamma.powu(3) - c(1.1, 0.02)).norm();
        assert!(resid < 1e-13);
        let a = ctx.gamma.arg();
        assert!(a > 0.0 && a < std::f64::consts::FRAC_PI_3, "arg gamma = {a}");
    }

    #[test]
    fn production_gamma_sits_on_pi_over_six_ray() {
        let nu = 1e-30;
        let alpha = 1.78 * crate::NU_QUARTER_1E30;
        let y_c = c(7.8e-8, 1.0e-8);
        let u1 = c(1.0, -1e-8);
        let ctx = AiryContext::new(nu, alpha, y_c, u1, 30.0 * crate::NU_QUARTER_1E30, 401).unwrap();
        let a = ctx.gamma.arg();
        assert!((a - std::f64::consts::FRAC_PI_6).abs() < 0.01, "arg gamma = {a}");
        // the layer must comfortably contain the scaled wall distance
        let z_edge = ctx.z_at(ctx.edge());
        assert!(z_edge.norm() > 10.0 * ctx.z_wall().norm());
    }

    #[test]
    fn airy_green_inverts_linearized_operator() {
        // longer grid than test_ctx so the edge reaches z ~ 7.5, where the
        // Ai branch has decayed by ~1e-4
        let ctx = AiryContext::new(0.04, 0.9, c(0.35, 0.06), c(1.1, 0.02), 3.0, 1201).unwrap();
        let f = bump(&ctx, 0.5, 0.25);
        let w = ctx.solve_airy(&f).unwrap();
        let res = ctx.airy_residual(&w, &f);
        // second-difference verification: O(h^2) with gamma-scale curvature
        assert!(res < 5e-4, "residual {res:e}");
        // decay on the free-stream side
        let m = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(w.last().unwrap().norm() < 1e-3 * m, "edge leak");
    }

    #[test]
    fn airy_green_jump_is_minus_inverse_eps() {
        // the derivative jump of G(x, .) at x equals -1/eps; measure it from
        // one-sided differences of the kernel column at a mid-grid source
        let ctx = test_ctx();
        let i0 = ctx.n / 2;
        let mut col = Vec::with_capacity(ctx.n);
        let scale = -(ctx.eps * ctx.gamma).inv();
        for i in 0..ctx.n {
            let (lo, hi) = if i <= i0 { (i, i0) } else { (i0, i) };
            col.push(scale * ctx.di_nodes[lo] * ctx.ai_nodes[hi]);
        }
        // third-order one-sided first derivatives on each side of x
        let d = |a: C64, b: C64, c2: C64| (-1.5 * a + 2.0 * b - 0.5 * c2) / ctx.h;
        let right = d(col[i0], col[i0 + 1], col[i0 + 2]);
        let left = -d(col[i0], col[i0 - 1], col[i0 - 2]);
        let jump = right - left;
        let want = -ctx.eps.inv();
        let rel = (jump - want).norm() / want.norm();
        assert!(rel < 2e-3, "jump {jump} vs {want} (rel {rel:e})");
    }

    #[test]
    fn stream_solve_round_trip_order_one_alpha() {
        let ctx = test_ctx();
        let w = bump(&ctx, 0.6, 0.3);
        let sol = ctx.solve_stream(&w).unwrap();
        // reassemble psi = compact + c_slow e^{-alpha y}; check
        // (d^2 - alpha^2) psi = w by finite differences
        let psi: Vec<C64> = (0..ctx.n)
            .map(|i| sol.compact[i] + sol.c_slow * (-ctx.alpha * ctx.node(i)).exp())
            .collect();
        let scale = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 1..ctx.n - 1 {
            let pp = (psi[i - 1] - 2.0 * psi[i] + psi[i + 1]) / (ctx.h * ctx.h);
            let r = pp - ctx.alpha * ctx.alpha * psi[i] - w[i];
            assert!(r.norm() < 2e-4 * scale, "node {i}: residual {:e}", r.norm());
        }
        // compactness at the edge is exact by construction
        assert!(sol.compact.last().unwrap().norm() == 0.0);
    }

    #[test]
    fn stream_solve_production_alpha_uses_stable_branch() {
        // tiny alpha: kernel differences are far below 1/(2 alpha); the split
        // must still satisfy the ODE and produce an O(int w / alpha) envelope
        let nu = 1e-30;
        let nuq = crate::NU_QUARTER_1E30;
        let alpha = 1.78 * nuq;
        let ctx =
            AiryContext::new(nu, alpha, c(7.8e-8, 1.0e-8), c(1.0, 0.0), 30.0 * nuq, 401).unwrap();
        let w: Vec<C64> = (0..ctx.n)
            .map(|i| {
                let t = (ctx.node(i) - 4e-7) / 2e-7;
                c((-t * t).exp(), 0.1 * (-t * t).exp())
            })
            .collect();
        let sol = ctx.solve_stream(&w).unwrap();
        // d^2 compact = w (the alpha^2 term is invisible at this scale)
        let scale = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in 1..ctx.n - 1 {
            let pp =
                (sol.compact[i - 1] - 2.0 * sol.compact[i] + sol.compact[i + 1]) / (ctx.h * ctx.h);
            assert!((pp - w[i]).norm() < 1e-3 * scale, "node {i}");
        }
        // envelope coefficient ~ -int w / (2 alpha) (trapezoid, matching the
        // solver's weights; the e^{alpha x} factor is 1 + O(5e-14) here)
        let mut int_w = czero();
        for (j, &wj) in w.iter().enumerate() {
            let tw = if j == 0 || j == ctx.n - 1 { 0.5 } else { 1.0 };
            int_w += tw * wj * ctx.h;
        }
        let approx = -int_w / (2.0 * ctx.alpha);
        assert!((sol.c_slow - approx).norm() < 1e-9 * approx.norm());
    }

    #[test]
    fn airy_green_stays_bounded_with_deep_wall() {
        // |Z| = |gamma y_c| ~ 14: the wall sits deep in the sector where Ai
        // and Ci grow like e^{29}. A kernel carrying dominant content on the
        // wall side would return w ~ 1e20 there; the recessive pair must keep
        // the response at the physical scale ~ |f| / (U' dist(y, y_c))
        let nu = 1e-8;
        let alpha = 0.45;
        let y_c = c(0.0408, 0.00417);
        let u1 = c(0.9575, -0.00399);
        let ctx = AiryContext::new(nu, alpha, y_c, u1, 0.15, 601).unwrap();
        assert!(ctx.z_wall().norm() > 12.0, "test premise: deep wall");
        let f: Vec<C64> = (0..ctx.n).map(|i| c(1.0, 0.3) * (1.0 + ctx.node(i))).collect();
        let (w, _) = ctx.solve_airy_with_deriv(&f).unwrap();
        let fmax = f.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let bound = 50.0 * fmax / (u1.norm() * y_c.im);
        for (i, v) in w.iter().enumerate() {
            assert!(v.norm() < bound, "node {i}: |w| = {:e} exceeds {bound:e}", v.norm());
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let ctx = test_ctx();
        let f = bump(&ctx, 0.5, 0.25);
        let (w, dw) = ctx.solve_airy_with_deriv(&f).unwrap();
        // the two assembly routes agree
        let w_plain = ctx.solve_airy(&f).unwrap();
        for i in 0..ctx.n {
            assert!((w[i] - w_plain[i]).norm() < 1e-12 * w_plain[i].norm().max(1e-12));
        }
        let scale = w.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in (20..ctx.n - 20).step_by(37) {
            let fd = (w[i + 1] - w[i - 1]) / (2.0 * ctx.h);
            assert!((dw[i] - fd).norm() < 2e-3 * scale, "airy deriv at node {i}");
        }
        let sol = ctx.solve_stream(&w).unwrap();
        let dc = ctx.stream_compact_deriv(&w).unwrap();
        let cscale = sol.compact.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for i in (20..ctx.n - 20).step_by(37) {
            let fd = (sol.compact[i + 1] - sol.compact[i - 1]) / (2.0 * ctx.h);
            assert!((dc[i] - fd).norm() < 1e-4 * cscale, "stream deriv at node {i}");
        }
    }

    #[test]
    fn fast_fundamental_wall_state_matches_direct_evaluation() {
        let ctx = test_ctx();
        let chain = ctx.fast_fundamental();
        let (v, d) = ctx.fast_wall_state();
        assert!((chain.value(0.0) - v).norm() < 1e-13 * v.norm());
        let dchain = chain.derivative();
        assert!((dchain.value(0.0) - d).norm() < 1e-13 * d.norm());
    }
}
