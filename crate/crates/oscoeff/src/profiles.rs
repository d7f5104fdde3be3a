//! Background shear profiles `U_s(y)` on the half-line.
//!
//! Both profiles are monotonic, normalized to `U_s(0) = 0`, `U_s(+inf) = 1`,
//! and analytic in a strip around the real axis. Downstream code needs three
//! things beyond pointwise values: complex evaluation near the critical point
//! `y_c` (which sits at distance `O(nu^{1/4})` from the wall, slightly off the
//! real axis), Taylor coefficients of `U_s` about arbitrary complex centers,
//! and the critical-point solve `U_s(y_c) = c` itself.
//!
//! The exponential profile `U_s = 1 - e^{-delta y}` is closed-form. Blasius
//! (`2 f''' + f f'' = 0`, `U_s = f'`) is built once by shooting and stored as
//! a dense table of `(f, f', f'')`; evaluation anywhere in the strip runs the
//! ODE's Taylor recursion from the nearest node, so the table never needs
//! interpolation weights and complex arguments cost the same as real ones.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Blasius shooting constant `f''(0)`, frozen from a high-precision
/// Taylor-method integration with a 1e-24 root tolerance.
pub const BLASIUS_FPP0: f64 = 0.332_057_336_215_196_3;

/// Largest `|Im y|` for which strip continuation is allowed. The nearest
/// complex singularity of the Blasius function is ~5.69 from the real axis,
/// so order-12 Taylor steps are only trustworthy well inside that.
pub const STRIP_HALF_WIDTH: f64 = 0.15;

const BLASIUS_STEP: f64 = 1e-3;
const BLASIUS_Y_MAX: f64 = 14.0;
/// Order of Taylor continuation steps off the table nodes.
const STEP_ORDER: usize = 12;

/// `e^z - 1` without cancellation for small `z`.
fn expm1c(z: Complex64) -> Complex64 {
    let em = z.re.exp_m1();
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    Complex64::new(em * c - 2.0 * half * half, (1.0 + em) * s)
}

/// `ln(1 + z)` without cancellation for small `z`; requires `1 + z != 0`.
fn ln1pc(z: Complex64) -> Complex64 {
    let t = 2.0 * z.re + z.re * z.re + z.im * z.im;
    Complex64::new(0.5 * t.ln_1p(), z.im.atan2(1.0 + z.re))
}

#[derive(Clone, Debug)]
enum Kind {
    Exponential { delta: f64 },
    Blasius(BlasiusTable),
}

/// A background profile; cheap to clone for the exponential case, Arc-free
/// but bulky (three dense columns) for Blasius, so clone sparingly.
#[derive(Clone, Debug)]
pub struct Profile {
    kind: Kind,
}

#[derive(Clone)]
struct BlasiusTable {
    h: f64,
    f: Vec<f64>,
    fp: Vec<f64>,
    fpp: Vec<f64>,
}

impl std::fmt::Debug for BlasiusTable {
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("BlasiusTable")
            .field("h", &self.h)
            .field("nodes", &self.f.len())
            .finish()
    }
}

/// Taylor coefficients of the Blasius stream function about a point, from the
/// three seed values `(f, f', f''/2! * 2)` via `2 f''' + f f'' = 0`:
/// `c_{k+3} = -sum_j (j+1)(j+2) c_{j+2} c_{k-j} / (2 (k+1)(k+2)(k+3))`.
fn blasius_taylor(seed: [Complex64; 3], order: usize) -> Vec<Complex64> {
    let mut c = vec![Complex64::new(0.0, 0.0); order + 1];
    c[0] = seed[0];
    c[1] = seed[1];
    if order >= 2 {
        c[2] = 0.5 * seed[2];
    }
    for k in 0..order.saturating_sub(2) {
        let mut s = Complex64::new(0.0, 0.0);
        for j in 0..=k {
            s += ((j + 1) * (j + 2)) as f64 * c[j + 2] * c[k - j];
        }
        c[k + 3] = -s / (2.0 * ((k + 1) * (k + 2) * (k + 3)) as f64);
    }
    c
}

/// Evaluates a Taylor polynomial and its first two derivatives at `dy`.
fn horner3(c: &[Complex64], dy: Complex64) -> (Complex64, Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d1 = Complex64::new(0.0, 0.0);
    let mut d2 = Complex64::new(0.0, 0.0);
    for &ck in c.iter().rev() {
        d2 = d2 * dy + 2.0 * d1;
        d1 = d1 * dy + v;
        v = v * dy + ck;
    }
    (v, d1, d2)
}

impl BlasiusTable {
    /// Integrates the shooting problem once `kappa` is fixed; returns the
    /// stored table. Classical RK4 at half the tabulated spacing.
    fn integrate(kappa: f64, h: f64, y_max: f64) -> BlasiusTable {
        let n = (y_max / h).round() as usize;
        let mut f = Vec::with_capacity(n + 1);
        let mut fp = Vec::with_capacity(n + 1);
        let mut fpp = Vec::with_capacity(n + 1);
        let mut v = [0.0_f64, 0.0, kappa];
        let rhs = |v: [f64; 3]| [v[1], v[2], -0.5 * v[0] * v[2]];
        let hh = 0.5 * h;
        f.push(v[0]);
        fp.push(v[1]);
        fpp.push(v[2]);
        for _ in 0..n {
            for _ in 0..2 {
                let k1 = rhs(v);
                let k2 = rhs([v[0] + hh / 2.0 * k1[0], v[1] + hh / 2.0 * k1[1], v[2] + hh / 2.0 * k1[2]]);
                let k3 = rhs([v[0] + hh / 2.0 * k2[0], v[1] + hh / 2.0 * k2[1], v[2] + hh / 2.0 * k2[2]]);
                let k4 = rhs([v[0] + hh * k3[0], v[1] + hh * k3[1], v[2] + hh * k3[2]]);
                for i in 0..3 {
                    v[i] += hh / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            f.push(v[0]);
            fp.push(v[1]);
            fpp.push(v[2]);
        }
        BlasiusTable { h, f, fp, fpp }
    }

    fn build() -> BlasiusTable {
        // bracket f'(y_max) - 1 = 0 in kappa, then bisect to f64 resolution;
        // shooting runs at 2x the tabulated spacing, still ~1e-12 accurate
        let shoot = |kappa: f64| {
            let t = BlasiusTable::integrate(kappa, 2.0 * BLASIUS_STEP, BLASIUS_Y_MAX);
            t.fp.last().unwrap() - 1.0
        };
        let (mut lo, mut hi) = (0.2_f64, 0.5_f64);
        debug_assert!(shoot(lo) < 0.0 && shoot(hi) > 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if shoot(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        BlasiusTable::integrate(0.5 * (lo + hi), BLASIUS_STEP, BLASIUS_Y_MAX)
    }

    /// Seeds `(f, f', f'')` at a complex point via an order-12 Taylor step
    /// from the nearest table node.
    fn seeds_at(&self, y: Complex64) -> [Complex64; 3] {
        let n_last = self.f.len() - 1;
        let i = (y.re / self.h).round().clamp(0.0, n_last as f64) as usize;
        let seed = [
            Complex64::new(self.f[i], 0.0),
            Complex64::new(self.fp[i], 0.0),
            Complex64::new(self.fpp[i], 0.0),
        ];
        let dy = y - Complex64::new(i as f64 * self.h, 0.0);
        if dy.norm() == 0.0 {
            return seed;
        }
        let c = blasius_taylor(seed, STEP_ORDER);
        let (v, d1, d2) = horner3(&c, dy);
        [v, d1, d2]
    }
}

impl Profile {
    /// The exponential profile `U_s(y) = 1 - e^{-delta y}`.
    pub fn exponential(delta: f64) -> Result<Profile> {
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::config(format!("exponential profile needs delta > 0, got {delta}")));
        }
        Ok(Profile { kind: Kind::Exponential { delta } })
    }

    /// The Blasius profile `U_s = f'` of `2 f''' + f f'' = 0`. The shooting
    /// solve and table are built once per process and shared.
    pub fn blasius() -> Profile {
        static TABLE: std::sync::OnceLock<BlasiusTable> = std::sync::OnceLock::new();
        Profile { kind: Kind::Blasius(TABLE.get_or_init(BlasiusTable::build).clone()) }
    }

    pub fn name(&self) -> &'static str {
        match &self.kind {
            Kind::Exponential { .. } => "exp",
            Kind::Blasius(_) => "blasius",
        }
    }

    /// Free-stream velocity; both profiles are normalized to 1.
    pub fn u_plus(&self) -> f64 {
        1.0
    }

    /// Wall shear `U_s'(0)`.
    pub fn wall_shear(&self) -> f64 {
        match &self.kind {
            Kind::Exponential { delta } => *delta,
            Kind::Blasius(t) => t.fpp[0],
        }
    }

    /// `k`-th derivative of `U_s` at a complex point in the strip
    /// `|Im y| <= STRIP_HALF_WIDTH` (with `k = 0` the value itself).
    pub fn deriv_c(&self, y: Complex64, k: u32) -> Complex64 {
        debug_assert!(y.im.abs() <= STRIP_HALF_WIDTH, "outside continuation strip: {y}");
        match &self.kind {
            Kind::Exponential { delta } => {
                if k == 0 {
                    // -expm1(-delta y): near the wall the value is tiny and
                    // must stay smooth in y below ulp(1), since it feeds the
                    // effective eigenvalue U_s(y_c)
                    -expm1c(-delta * y)
                } else {
                    -(-delta).powi(k as i32) * (-delta * y).exp()
                }
            }
            Kind::Blasius(t) => {
                if y.re >= BLASIUS_Y_MAX {
                    // U = 1 to below f64 resolution past the table
                    return if k == 0 { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
                }
                let seeds = t.seeds_at(y);
                match k {
                    0 => seeds[1],
                    1 => seeds[2],
                    _ => {
                        // U^{(k)} = f^{(k+1)}: run the coefficient recursion at y
                        let c = blasius_taylor(seeds, k as usize + 1);
                        let mut fact = 1.0;
                        for j in 2..=(k + 1) as u64 {
                            fact *= j as f64;
                        }
                        fact * c[k as usize + 1]
                    }
                }
            }
        }
    }

    pub fn eval_c(&self, y: Complex64) -> Complex64 {
        self.deriv_c(y, 0)
    }

    pub fn eval(&self, y: f64) -> f64 {
        self.deriv_c(Complex64::new(y, 0.0), 0).re
    }

    pub fn deriv(&self, y: f64, k: u32) -> f64 {
        self.deriv_c(Complex64::new(y, 0.0), k).re
    }

    /// Taylor coefficients of `U_s` about `y0`: returns `a_0..=a_n` with
    /// `U_s(y0 + Y) = sum a_k Y^k`.
    pub fn taylor_u(&self, y0: Complex64, n: usize) -> Vec<Complex64> {
        match &self.kind {
            Kind::Exponential { delta } => {
                let e = (-delta * y0).exp();
                let mut a = Vec::with_capacity(n + 1);
                a.push(-expm1c(-delta * y0));
                let mut term = -e;
                for k in 1..=n {
                    term *= -delta / k as f64;
                    a.push(term);
                }
                a
            }
            Kind::Blasius(t) => {
                let seeds = t.seeds_at(y0);
                let c = blasius_taylor(seeds, n + 1);
                (0..=n).map(|k| (k + 1) as f64 * c[k + 1]).collect()
            }
        }
    }

    /// Solves `U_s(y_c) = c` for the critical point nearest the wall.
    pub fn critical_point(&self, c: Complex64) -> Result<Complex64> {
        match &self.kind {
            Kind::Exponential { delta } => {
                if (Complex64::new(1.0, 0.0) - c).norm() == 0.0 {
                    return Err(Error::domain("critical point: c equals the free stream"));
                }
                // -ln1p(-c): same smoothness concern as the value, y_c must
                // track c below ulp(1)
                Ok(-ln1pc(-c) / *delta)
            }
            Kind::Blasius(_) => {
                let mut y = c / self.wall_shear();
                for _ in 0..40 {
                    let u = self.eval_c(y);
                    let du = self.deriv_c(y, 1);
                    let step = (u - c) / du;
                    y -= step;
                    if step.norm() <= 1e-15 * y.norm().max(1e-30) {
                        return Ok(y);
                    }
                }
                Err(Error::no_convergence(format!("critical point for c = {c}")))
            }
        }
    }
}
