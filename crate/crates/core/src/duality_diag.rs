//! Numerical checks of the smoothing duality theory on problems small
//! enough for closed forms and exhaustive grid search.

use crate::error::{Error, Result};
use crate::fixtures::smoothed_abs;
use crate::problem::SurrogateProblem;
use crate::rng::Stream;
use crate::smoothing::{mc_smoothed_value, Estimate, SmoothingConfig};

/// Lipschitz constants of the objective, utility constraints and service.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzMeta {
    pub l_g_o: f64,
    pub c_s: Vec<f64>,
    pub c_r: Vec<f64>,
}

impl LipschitzMeta {
    pub fn new(l_g_o: f64, c_s: Vec<f64>, c_r: Vec<f64>) -> Result<Self> {
        let ok = |v: f64| v >= 0.0 && v.is_finite();
        if !ok(l_g_o) || !c_s.iter().all(|&v| ok(v)) || !c_r.iter().all(|&v| ok(v)) {
            return Err(Error::config("lipschitz", "constants must be finite and >= 0"));
        }
        Ok(Self { l_g_o, c_s, c_r })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n_s: usize,
    pub n_g: usize,
    pub n_phi: usize,
}

/// A problem whose plain and smoothed components can be evaluated.
/// `mu = 0` means the plain value.
pub trait SmoothedModel {
    fn dims(&self) -> Dims;
    fn meta(&self) -> &LipschitzMeta;
    fn objective(&self, x: &[f64], mu: f64, rng: &mut Stream) -> Estimate;
    fn utility(&self, x: &[f64], mu: f64, rng: &mut Stream) -> Vec<Estimate>;
    fn service(&self, theta: &[f64], mu: f64, rng: &mut Stream) -> Vec<Estimate>;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn exact(v: Vec<f64>) -> Vec<Estimate> {
    v.into_iter().map(Estimate::exact).collect()
}

fn matvec(m: &[f64], cols: usize, v: &[f64]) -> Vec<f64> {
    m.chunks(cols).map(|row| dot(row, v)).collect()
}

fn row_norms(m: &[f64], cols: usize) -> Vec<f64> {
    if cols == 0 {
        return Vec::new();
    }
    m.chunks(cols).map(|r| dot(r, r).sqrt()).collect()
}

/// `g0 = <a, x> + a0`, `g = B x + b`, `f = C theta + c`. Smoothing is exact.
#[derive(Debug, Clone)]
pub struct AffineFixture {
    pub a: Vec<f64>,
    pub a0: f64,
    pub b_mat: Vec<f64>,
    pub b: Vec<f64>,
    pub c_mat: Vec<f64>,
    pub c: Vec<f64>,
    n_phi: usize,
    meta: LipschitzMeta,
}

impl AffineFixture {
    pub fn new(a: Vec<f64>, a0: f64, b_mat: Vec<f64>, b: Vec<f64>, c_mat: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let n_s = a.len();
        Error::check_dim("B", b.len() * n_s, b_mat.len())?;
        Error::check_dim("c", n_s, c.len())?;
        if n_s == 0 || !c_mat.len().is_multiple_of(n_s) {
            return Err(Error::Dimension {
                what: "C",
                expected: n_s,
                got: c_mat.len(),
            });
        }
        let n_phi = c_mat.len() / n_s;
        let meta = LipschitzMeta::new(dot(&a, &a).sqrt(), row_norms(&b_mat, n_s), row_norms(&c_mat, n_phi))?;
        Ok(Self {
            a,
            a0,
            b_mat,
            b,
            c_mat,
            c,
            n_phi,
            meta,
        })
    }

    /// Random coefficients in `(-1, 1)`.
    pub fn random(n_s: usize, n_g: usize, n_phi: usize, rng: &mut Stream) -> Self {
        let mut v = |k: usize| (0..k).map(|_| rng.uniform_in(-1.0, 1.0)).collect::<Vec<_>>();
        let a = v(n_s);
        let a0 = v(1)[0];
        let b_mat = v(n_g * n_s);
        let b = v(n_g);
        let c_mat = v(n_s * n_phi);
        let c = v(n_s);
        Self::new(a, a0, b_mat, b, c_mat, c).expect("consistent dimensions")
    }
}

impl SmoothedModel for AffineFixture {
    fn dims(&self) -> Dims {
        Dims {
            n_s: self.a.len(),
            n_g: self.b.len(),
            n_phi: self.n_phi,
        }
    }

    fn meta(&self) -> &LipschitzMeta {
        &self.meta
    }

    fn objective(&self, x: &[f64], _mu: f64, _rng: &mut Stream) -> Estimate {
        Estimate::exact(dot(&self.a, x) + self.a0)
    }

    fn utility(&self, x: &[f64], _mu: f64, _rng: &mut Stream) -> Vec<Estimate> {
        let mut g = matvec(&self.b_mat, self.a.len(), x);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi += bi;
        }
        exact(g)
    }

    fn service(&self, theta: &[f64], _mu: f64, _rng: &mut Stream) -> Vec<Estimate> {
        let mut f = matvec(&self.c_mat, self.n_phi, theta);
        for (fi, ci) in f.iter_mut().zip(&self.c) {
            *fi += ci;
        }
        exact(f)
    }
}

/// Concave quadratic objective and utilities, signed quadratic services:
///
/// ```text
/// g0(x)    = -q0 |x - x0|^2
/// g_i(x)   = b_i - q_g |x - x0|^2
/// f_i(th)  = c_i + s_i |th - th0|^2
/// ```
///
/// Smoothing shifts each by `+-q mu^2 n`. The Lipschitz constants are valid
/// on the box `center +- radius` enlarged by `mu_max sqrt(n)`.
#[derive(Debug, Clone)]
pub struct QuadraticFixture {
    pub q0: f64,
    pub x0: Vec<f64>,
    pub q_g: f64,
    pub b: Vec<f64>,
    pub s: Vec<f64>,
    pub th0: Vec<f64>,
    pub c: Vec<f64>,
    meta: LipschitzMeta,
}

impl QuadraticFixture {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        q0: f64,
        x0: Vec<f64>,
        q_g: f64,
        b: Vec<f64>,
        s: Vec<f64>,
        th0: Vec<f64>,
        c: Vec<f64>,
        radius: f64,
        mu_max: f64,
    ) -> Result<Self> {
        Error::check_dim("service signs", x0.len(), s.len())?;
        Error::check_dim("service offsets", x0.len(), c.len())?;
        if !(q0 >= 0.0 && q_g >= 0.0) {
            return Err(Error::config(
                "quadratic",
                "objective and utility curvature must be >= 0",
            ));
        }
        let reach = |n: usize| radius * (n as f64).sqrt() + mu_max * (n as f64).sqrt();
        let (rx, rt) = (reach(x0.len()), reach(th0.len()));
        let meta = LipschitzMeta::new(
            2.0 * q0 * rx,
            vec![2.0 * q_g * rx; b.len()],
            s.iter().map(|si| 2.0 * si.abs() * rt).collect(),
        )?;
        Ok(Self {
            q0,
            x0,
            q_g,
            b,
            s,
            th0,
            c,
            meta,
        })
    }

    fn sq(v: &[f64], c: &[f64]) -> f64 {
        v.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

impl SmoothedModel for QuadraticFixture {
    fn dims(&self) -> Dims {
        Dims {
            n_s: self.x0.len(),
            n_g: self.b.len(),
            n_phi: self.th0.len(),
        }
    }

    fn meta(&self) -> &LipschitzMeta {
        &self.meta
    }

    fn objective(&self, x: &[f64], mu: f64, _rng: &mut Stream) -> Estimate {
        let n = x.len() as f64;
        Estimate::exact(-self.q0 * (Self::sq(x, &self.x0) + mu * mu * n))
    }

    fn utility(&self, x: &[f64], mu: f64, _rng: &mut Stream) -> Vec<Estimate> {
        let r = Self::sq(x, &self.x0) + mu * mu * x.len() as f64;
        exact(self.b.iter().map(|b| b - self.q_g * r).collect())
    }

    fn service(&self, theta: &[f64], mu: f64, _rng: &mut Stream) -> Vec<Estimate> {
        let r = Self::sq(theta, &self.th0) + mu * mu * theta.len() as f64;
        exact(self.s.iter().zip(&self.c).map(|(s, c)| c + s * r).collect())
    }
}

/// One-user toy: `g0(x) = x` on `[0, 2]`, `f(theta) = 1 - |theta - 1/2|` on
/// `[0, 1]`. Primal and dual optimum 1 at `x = 1`, `theta = 1/2`, `lambda = 1`.
#[derive(Debug, Clone)]
pub struct TentToy {
    meta: LipschitzMeta,
}

impl Default for TentToy {
    fn default() -> Self {
        Self {
            meta: LipschitzMeta {
                l_g_o: 1.0,
                c_s: Vec::new(),
                c_r: vec![1.0],
            },
        }
    }
}

impl TentToy {
    pub const X_RANGE: (f64, f64) = (0.0, 2.0);
    pub const THETA_RANGE: (f64, f64) = (0.0, 1.0);
    pub const D_STAR: f64 = 1.0;
}

impl SmoothedModel for TentToy {
    fn dims(&self) -> Dims {
        Dims {
            n_s: 1,
            n_g: 0,
            n_phi: 1,
        }
    }

    fn meta(&self) -> &LipschitzMeta {
        &self.meta
    }

    fn objective(&self, x: &[f64], _mu: f64, _rng: &mut Stream) -> Estimate {
        Estimate::exact(x[0])
    }

    fn utility(&self, _x: &[f64], _mu: f64, _rng: &mut Stream) -> Vec<Estimate> {
        Vec::new()
    }

    fn service(&self, theta: &[f64], mu: f64, _rng: &mut Stream) -> Vec<Estimate> {
        vec![Estimate::exact(1.0 - smoothed_abs(theta[0] - 0.5, mu))]
    }
}

/// Monte Carlo model of a live problem. Expectations over fading and
/// smoothing draws use `mc_n` samples.
#[derive(Debug)]
pub struct ProblemModel<'a> {
    pub prob: &'a SurrogateProblem,
    pub meta: LipschitzMeta,
    pub mc_n: usize,
}

impl SmoothedModel for ProblemModel<'_> {
    fn dims(&self) -> Dims {
        let b = &self.prob.base;
        Dims {
            n_s: b.n_s(),
            n_g: b.n_g(),
            n_phi: b.n_phi(),
        }
    }

    fn meta(&self) -> &LipschitzMeta {
        &self.meta
    }

    fn objective(&self, x: &[f64], mu: f64, rng: &mut Stream) -> Estimate {
        mc_smoothed_value(|v| self.prob.base.objective.eval(v), x, mu, self.mc_n, rng)
    }

    fn utility(&self, x: &[f64], mu: f64, rng: &mut Stream) -> Vec<Estimate> {
        let Some(u) = &self.prob.base.utility else {
            return Vec::new();
        };
        (0..u.dim)
            .map(|i| mc_smoothed_value(|v| u.eval(v)[i], x, mu, self.mc_n, rng))
            .collect()
    }

    fn service(&self, theta: &[f64], mu: f64, rng: &mut Stream) -> Vec<Estimate> {
        match self.prob.base.mean_service(theta, mu, self.mc_n, rng) {
            Ok(v) => v,
            Err(_) => vec![Estimate::exact(f64::NAN); self.prob.base.n_s()],
        }
    }
}

fn combine(terms: &[(f64, Estimate)]) -> Estimate {
    let value = terms.iter().map(|(c, e)| c * e.value).sum();
    let se = terms.iter().map(|(c, e)| (c * e.se).powi(2)).sum::<f64>().sqrt();
    let n = terms.iter().map(|(_, e)| e.n).min().unwrap_or(1);
    Estimate { value, se, n }
}

/// `g0(x) + <l_S, g(x)> + <l_R, f(theta) - x - S>` with every component
/// smoothed per `smoothing`. `SmoothingConfig::exact` gives the plain
/// Lagrangian.
pub fn lagrangian<M: SmoothedModel + ?Sized>(
    model: &M,
    x: &[f64],
    theta: &[f64],
    lambda_s: &[f64],
    lambda_r: &[f64],
    smoothing: &SmoothingConfig,
    rng: &mut Stream,
) -> Estimate {
    let d = model.dims();
    let slack = broadcast(&smoothing.slack(d.n_phi), d.n_s);
    let mut terms = vec![(1.0, model.objective(x, smoothing.mu_s, rng))];
    for (l, g) in lambda_s.iter().zip(model.utility(x, smoothing.mu_s, rng)) {
        terms.push((*l, g));
    }
    for (l, f) in lambda_r.iter().zip(model.service(theta, smoothing.mu_r, rng)) {
        terms.push((*l, f));
    }
    let shift: f64 = lambda_r
        .iter()
        .zip(x)
        .zip(&slack)
        .map(|((l, xi), s)| l * (xi + s))
        .sum();
    terms.push((-1.0, Estimate::exact(shift)));
    combine(&terms)
}

fn broadcast(v: &[f64], n: usize) -> Vec<f64> {
    if v.len() == 1 && n != 1 {
        vec![v[0]; n]
    } else {
        v.to_vec()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaBounds {
    pub gamma_l: f64,
    pub gamma_r: f64,
}

/// Lower and upper constants of the Lagrangian approximation at `lambda`.
pub fn gamma_bounds(
    lambda_s: &[f64],
    lambda_r: &[f64],
    meta: &LipschitzMeta,
    smoothing: &SmoothingConfig,
    dims: Dims,
) -> GammaBounds {
    let rs = (dims.n_s as f64).sqrt();
    let rphi = (dims.n_phi as f64).sqrt();
    let slack = broadcast(&smoothing.slack(dims.n_phi), dims.n_s);
    let s_dot = dot(&slack, lambda_r);
    let r_term = smoothing.mu_r * dot(lambda_r, &meta.c_r) * rphi;
    let s_term = smoothing.mu_s * meta.l_g_o * rs + smoothing.mu_s * dot(lambda_s, &meta.c_s) * rs;
    GammaBounds {
        gamma_l: s_term + r_term + s_dot,
        gamma_r: r_term - s_dot,
    }
}

/// Sampling box for the sandwich check; scalar bounds apply per coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichDomain {
    pub x: (f64, f64),
    pub theta: (f64, f64),
    pub lambda_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichPoint {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub lambda_s: Vec<f64>,
    pub lambda_r: Vec<f64>,
    pub diff: Estimate,
    pub bounds: GammaBounds,
}

impl SandwichPoint {
    /// Distance to the nearer side of `[-gamma_l, gamma_r]`; negative
    /// outside.
    pub fn margin(&self) -> f64 {
        (self.diff.value + self.bounds.gamma_l).min(self.bounds.gamma_r - self.diff.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub ok: bool,
    pub n_points: usize,
    pub violations: usize,
    /// Smallest margin in units of standard error (or raw if exact).
    pub worst_margin: f64,
    pub worst: Option<SandwichPoint>,
}

/// Samples `n_points` random `(x, theta, lambda)` and checks
/// `-gamma_l <= L_mu - L <= gamma_r` up to 5 combined standard errors.
pub fn check_sandwich<M: SmoothedModel + ?Sized>(
    model: &M,
    smoothing: &SmoothingConfig,
    domain: SandwichDomain,
    n_points: usize,
    rng: &mut Stream,
) -> SandwichReport {
    let d = model.dims();
    let exact_cfg = SmoothingConfig::exact(d.n_s);
    let mut report = SandwichReport {
        ok: true,
        n_points,
        violations: 0,
        worst_margin: f64::INFINITY,
        worst: None,
    };
    for _ in 0..n_points {
        let mut draw = |n: usize, (lo, hi): (f64, f64)| (0..n).map(|_| rng.uniform_in(lo, hi)).collect::<Vec<_>>();
        let x = draw(d.n_s, domain.x);
        let theta = draw(d.n_phi, domain.theta);
        let lambda_s = draw(d.n_g, (0.0, domain.lambda_max));
        let lambda_r = draw(d.n_s, (0.0, domain.lambda_max));
        let smooth = lagrangian(model, &x, &theta, &lambda_s, &lambda_r, smoothing, rng);
        let plain = lagrangian(model, &x, &theta, &lambda_s, &lambda_r, &exact_cfg, rng);
        let diff = Estimate {
            value: smooth.value - plain.value,
            se: smooth.se.hypot(plain.se),
            n: smooth.n.min(plain.n),
        };
        let bounds = gamma_bounds(&lambda_s, &lambda_r, model.meta(), smoothing, d);
        let pt = SandwichPoint {
            x,
            theta,
            lambda_s,
            lambda_r,
            diff,
            bounds,
        };
        let tol = 5.0 * diff.se + 1e-12 * (1.0 + plain.value.abs());
        let margin = pt.margin();
        if margin < -tol {
            report.ok = false;
            report.violations += 1;
        }
        let scaled = if diff.se > 0.0 { margin / diff.se } else { margin };
        if scaled < report.worst_margin {
            report.worst_margin = scaled;
            report.worst = Some(pt);
        }
    }
    report
}

/// Evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Candidate points of the inner maximization. The Lagrangian separates
/// into an `x` part and a `theta` part, so the two grids are searched
/// independently.
#[derive(Debug, Clone, PartialEq)]
pub struct InnerGrid {
    pub x: Vec<Vec<f64>>,
    pub theta: Vec<Vec<f64>>,
}

impl InnerGrid {
    pub fn scalar(x: Vec<f64>, theta: Vec<f64>) -> Self {
        Self {
            x: x.into_iter().map(|v| vec![v]).collect(),
            theta: theta.into_iter().map(|v| vec![v]).collect(),
        }
    }

    pub fn cells(&self) -> usize {
        self.x.len() * self.theta.len()
    }
}

/// A multiplier pair `(lambda_s, lambda_r)`.
pub type Multipliers = (Vec<f64>, Vec<f64>);

#[derive(Debug, Clone, PartialEq)]
pub struct DualTable {
    pub lambdas: Vec<Multipliers>,
    pub values: Vec<f64>,
    pub argmin: usize,
    pub d_star: f64,
    /// Set when the minimizing multiplier sits on the upper edge of the
    /// multiplier grid, so the true minimum may lie outside it.
    pub warning: Option<String>,
}

impl DualTable {
    pub fn lambda_star(&self) -> &Multipliers {
        &self.lambdas[self.argmin]
    }
}

/// Dual function on a multiplier grid by exhaustive inner search.
pub fn dual_value_grid<M: SmoothedModel + ?Sized>(
    model: &M,
    smoothing: &SmoothingConfig,
    lambda_grid: &[Multipliers],
    inner: &InnerGrid,
    rng: &mut Stream,
) -> Result<DualTable> {
    if lambda_grid.is_empty() || inner.x.is_empty() || inner.theta.is_empty() {
        return Err(Error::config("diag.grid", "grids must be non-empty"));
    }
    if inner.cells() > 1_000_000 {
        return Err(Error::config("diag.grid", "inner grid exceeds 10^6 cells"));
    }
    let d = model.dims();
    let slack = broadcast(&smoothing.slack(d.n_phi), d.n_s);
    let xs: Vec<(f64, Vec<f64>)> = inner
        .x
        .iter()
        .map(|x| {
            let g0 = model.objective(x, smoothing.mu_s, rng).value;
            let g = model.utility(x, smoothing.mu_s, rng).iter().map(|e| e.value).collect();
            (g0, g)
        })
        .collect();
    let fs: Vec<Vec<f64>> = inner
        .theta
        .iter()
        .map(|t| model.service(t, smoothing.mu_r, rng).iter().map(|e| e.value).collect())
        .collect();

    let values: Vec<f64> = lambda_grid
        .iter()
        .map(|(ls, lr)| {
            let best_x = inner
                .x
                .iter()
                .zip(&xs)
                .map(|(x, (g0, g))| g0 + dot(ls, g) - dot(lr, x))
                .fold(f64::NEG_INFINITY, f64::max);
            let best_t = fs.iter().map(|f| dot(lr, f)).fold(f64::NEG_INFINITY, f64::max);
            best_x + best_t - dot(lr, &slack)
        })
        .collect();
    let argmin = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);

    let upper = |sel: fn(&Multipliers) -> &Vec<f64>| -> Vec<f64> {
        let n = sel(&lambda_grid[0]).len();
        (0..n)
            .map(|k| lambda_grid.iter().map(|l| sel(l)[k]).fold(f64::NEG_INFINITY, f64::max))
            .collect()
    };
    let (ls_max, lr_max) = (upper(|l| &l.0), upper(|l| &l.1));
    let (ls, lr) = &lambda_grid[argmin];
    let at_edge = ls
        .iter()
        .zip(&ls_max)
        .chain(lr.iter().zip(&lr_max))
        .any(|(a, m)| a == m && *m > 0.0);
    let warning = at_edge.then(|| format!("dual minimizer at multiplier grid edge: {:?}", lambda_grid[argmin]));
    Ok(DualTable {
        d_star: values[argmin],
        lambdas: lambda_grid.to_vec(),
        values,
        argmin,
        warning,
    })
}

/// Scalar multiplier grid for one-constraint problems.
pub fn scalar_lambda_grid(hi: f64, step: f64) -> Vec<Multipliers> {
    let n = (hi / step).round() as usize;
    (0..=n).map(|i| (Vec::new(), vec![i as f64 * step])).collect()
}

/// Midpoint convexity on a uniform 1-D grid: `v[i] <= (v[i-1] + v[i+1]) / 2 + tol`.
pub fn is_midpoint_convex(values: &[f64], tol: f64) -> bool {
    values.windows(3).all(|w| w[1] <= 0.5 * (w[0] + w[2]) + tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReport {
    pub mu: f64,
    pub gamma_l: f64,
    pub gamma_r: f64,
    pub d_mu_star: f64,
    pub d_star: f64,
    pub lambda_mu_star: Multipliers,
    pub grid_tol: f64,
    /// `-gamma_l <= d_mu_star - d_star <= gamma_r` up to `grid_tol`.
    pub bracket_ok: bool,
    pub warning: Option<String>,
}

impl GapReport {
    pub fn gap(&self) -> f64 {
        self.d_mu_star - self.d_star
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapSweep {
    pub reports: Vec<GapReport>,
    /// Elementwise max of the grid minimizers over all tested `mu`,
    /// including the unsmoothed problem.
    pub lambda_dagger: Multipliers,
    pub lambda_star: Multipliers,
    /// Least-squares slope of `|gap|` against `mu` through the origin.
    pub slope: f64,
    pub r_squared: f64,
    pub plain: DualTable,
}

/// Dual values at `mu_S = mu_R = mu` for each `mu`, with slack scale
/// `slack_c`, against the unsmoothed problem.
pub fn gap_sweep<M: SmoothedModel + ?Sized>(
    model: &M,
    mus: &[f64],
    slack_c: f64,
    lambda_grid: &[Multipliers],
    inner: &InnerGrid,
    grid_tol: f64,
    rng: &mut Stream,
) -> Result<GapSweep> {
    let d = model.dims();
    let plain = dual_value_grid(model, &SmoothingConfig::exact(d.n_s), lambda_grid, inner, rng)?;
    let mut tables = Vec::with_capacity(mus.len());
    let mut configs = Vec::with_capacity(mus.len());
    for &mu in mus {
        let cfg = SmoothingConfig::new(mu, mu, vec![slack_c])?;
        tables.push(dual_value_grid(model, &cfg, lambda_grid, inner, rng)?);
        configs.push(cfg);
    }
    let lambda_star = plain.lambda_star().clone();
    let emax = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x.max(*y)).collect::<Vec<_>>();
    let mut dagger = lambda_star.clone();
    for t in &tables {
        let (ls, lr) = t.lambda_star();
        dagger = (emax(&dagger.0, ls), emax(&dagger.1, lr));
    }
    let reports: Vec<GapReport> = mus
        .iter()
        .zip(tables)
        .zip(&configs)
        .map(|((&mu, t), cfg)| {
            let lo = gamma_bounds(&dagger.0, &dagger.1, model.meta(), cfg, d).gamma_l;
            let hi = gamma_bounds(&lambda_star.0, &lambda_star.1, model.meta(), cfg, d).gamma_r;
            let gap = t.d_star - plain.d_star;
            GapReport {
                mu,
                gamma_l: lo,
                gamma_r: hi,
                d_mu_star: t.d_star,
                d_star: plain.d_star,
                lambda_mu_star: t.lambda_star().clone(),
                grid_tol,
                bracket_ok: gap >= -lo - grid_tol && gap <= hi + grid_tol,
                warning: t.warning.clone(),
            }
        })
        .collect();
    let (slope, r_squared) = fit_through_origin(mus, &reports.iter().map(|r| r.gap().abs()).collect::<Vec<_>>());
    Ok(GapSweep {
        reports,
        lambda_dagger: dagger,
        lambda_star,
        slope,
        r_squared,
        plain,
    })
}

/// Least-squares `y = k x` with the centered coefficient of determination.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = dot(x, y) / dot(x, x);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - k * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - mean).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    (k, r2)
}

/// Inner and multiplier grids used for the tent toy.
pub fn tent_grids() -> (Vec<Multipliers>, InnerGrid) {
    let (xl, xh) = TentToy::X_RANGE;
    let (tl, th) = TentToy::THETA_RANGE;
    (
        scalar_lambda_grid(3.0, 0.001),
        InnerGrid::scalar(linspace(xl, xh, 201), linspace(tl, th, 1001)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> Stream {
        Stream::new(99)
    }

    #[test]
    fn lagrangian_without_multipliers_is_objective() {
        let m = AffineFixture::random(3, 2, 4, &mut rng());
        let x = [0.1, -0.3, 0.7];
        let l = lagrangian(
            &m,
            &x,
            &[0.0; 4],
            &[0.0; 2],
            &[0.0; 3],
            &SmoothingConfig::exact(3),
            &mut rng(),
        );
        assert_eq!(l.value, m.objective(&x, 0.0, &mut rng()).value);
    }

    #[test]
    fn lagrangian_hand_arithmetic() {
        // g0 = 2x1 - x2 + 1, g = x1 + x2 - 3, f = (theta, 2 theta) + (1, 0)
        let m = AffineFixture::new(
            vec![2.0, -1.0],
            1.0,
            vec![1.0, 1.0],
            vec![-3.0],
            vec![1.0, 2.0],
            vec![1.0, 0.0],
        )
        .unwrap();
        let (x, th) = ([0.5, 1.5], [0.25]);
        let (ls, lr) = ([0.4], [1.0, 2.0]);
        let hand = (2.0 * 0.5 - 1.5 + 1.0) + 0.4 * (0.5 + 1.5 - 3.0) + 1.0 * (1.25 - 0.5) + 2.0 * (0.5 - 1.5);
        let l = lagrangian(&m, &x, &th, &ls, &lr, &SmoothingConfig::exact(2), &mut rng());
        assert!((l.value - hand).abs() < 1e-12);
        // with slack C = 3 at mu_r = 0.1, n_phi = 1: subtract 0.3 * (1 + 2)
        let cfg = SmoothingConfig::new(0.2, 0.1, vec![3.0]).unwrap();
        let ls_ = lagrangian(&m, &x, &th, &ls, &lr, &cfg, &mut rng());
        assert!((ls_.value - (hand - 0.9)).abs() < 1e-12);
    }

    #[test]
    fn gamma_examples() {
        let meta = LipschitzMeta::new(1.0, vec![1.0, 1.0], vec![2.0, 2.0]).unwrap();
        let d = Dims {
            n_s: 2,
            n_g: 2,
            n_phi: 3,
        };
        let g = gamma_bounds(&[1.0, 1.0], &[1.0, 1.0], &meta, &SmoothingConfig::exact(2), d);
        assert_eq!((g.gamma_l, g.gamma_r), (0.0, 0.0));
        let cfg = SmoothingConfig::new(0.1, 0.2, vec![0.0]).unwrap();
        let z = gamma_bounds(&[0.0, 0.0], &[0.0, 0.0], &meta, &cfg, d);
        assert!((z.gamma_l - 0.1 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(z.gamma_r, 0.0);
        let g = gamma_bounds(&[1.0, 1.0], &[1.0, 1.0], &meta, &cfg, d);
        let expect_l = 0.1 * 2f64.sqrt() + 0.1 * 2.0 * 2f64.sqrt() + 0.2 * 4.0 * 3f64.sqrt();
        assert!((g.gamma_l - expect_l).abs() < 1e-12);
        assert!((g.gamma_r - 0.2 * 4.0 * 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gamma_nondecreasing_in_mu() {
        let meta = LipschitzMeta::new(1.5, vec![0.5], vec![2.0, 1.0]).unwrap();
        let d = Dims {
            n_s: 2,
            n_g: 1,
            n_phi: 4,
        };
        let mut prev = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for mu in [0.0, 0.001, 0.01, 0.1, 1.0] {
            let g = gamma_bounds(
                &[0.3],
                &[1.0, 2.0],
                &meta,
                &SmoothingConfig::new(mu, mu, vec![0.0]).unwrap(),
                d,
            );
            assert!(g.gamma_l >= prev.0 && g.gamma_r >= prev.1);
            prev = (g.gamma_l, g.gamma_r);
        }
    }

    #[test]
    fn affine_difference_is_slack_only() {
        let m = AffineFixture::random(2, 1, 3, &mut rng());
        let cfg = SmoothingConfig::new(0.3, 0.2, vec![0.5]).unwrap();
        let (x, th, ls, lr) = ([0.2, 0.4], [0.1, -0.2, 0.3], [0.7], [1.1, 0.4]);
        let a = lagrangian(&m, &x, &th, &ls, &lr, &cfg, &mut rng()).value;
        let b = lagrangian(&m, &x, &th, &ls, &lr, &SmoothingConfig::exact(2), &mut rng()).value;
        let s = 0.5 * 0.2 * 3f64.sqrt();
        assert!((a - b + s * (1.1 + 0.4)).abs() < 1e-12);
    }

    #[test]
    fn sandwich_on_fixtures() {
        let domain = SandwichDomain {
            x: (-1.0, 1.0),
            theta: (-1.0, 1.0),
            lambda_max: 3.0,
        };
        let cfg = SmoothingConfig::new(0.1, 0.05, vec![0.5]).unwrap();
        let mut r = rng();
        let affine = AffineFixture::random(3, 2, 4, &mut r);
        assert!(check_sandwich(&affine, &cfg, domain, 200, &mut r).ok);
        let quad = QuadraticFixture::new(
            1.0,
            vec![0.0; 3],
            0.5,
            vec![1.0, 2.0],
            vec![1.0, -2.0, 0.5],
            vec![0.0; 4],
            vec![0.0; 3],
            1.0,
            0.1,
        )
        .unwrap();
        let rep = check_sandwich(&quad, &cfg, domain, 200, &mut r);
        assert!(rep.ok, "{rep:?}");
    }

    #[test]
    fn sandwich_detects_bad_constants() {
        // claim a zero Lipschitz constant for a curved objective
        let mut quad = QuadraticFixture::new(
            1.0,
            vec![0.0; 2],
            0.0,
            vec![],
            vec![0.0, 0.0],
            vec![0.0],
            vec![0.0; 2],
            1.0,
            0.5,
        )
        .unwrap();
        quad.meta.l_g_o = 0.0;
        let cfg = SmoothingConfig::new(0.5, 0.0, vec![0.0]).unwrap();
        let domain = SandwichDomain {
            x: (-1.0, 1.0),
            theta: (-1.0, 1.0),
            lambda_max: 1.0,
        };
        let rep = check_sandwich(&quad, &cfg, domain, 20, &mut rng());
        assert!(!rep.ok);
        assert_eq!(rep.violations, 20);
    }

    #[test]
    fn tent_toy_dual_value() {
        let (lg, inner) = tent_grids();
        let t = dual_value_grid(&TentToy::default(), &SmoothingConfig::exact(1), &lg, &inner, &mut rng()).unwrap();
        assert!((t.d_star - TentToy::D_STAR).abs() < 1e-12);
        assert!((t.lambda_star().1[0] - 1.0).abs() < 1e-12);
        assert!(t.warning.is_none());
        assert!(is_midpoint_convex(&t.values, 1e-12));
    }

    #[test]
    fn tent_gap_closed_form() {
        let (lg, inner) = tent_grids();
        let sweep = gap_sweep(
            &TentToy::default(),
            &[0.1, 0.01, 0.001],
            0.0,
            &lg,
            &inner,
            1e-9,
            &mut rng(),
        )
        .unwrap();
        for r in &sweep.reports {
            let expect = -r.mu * (2.0 / std::f64::consts::PI).sqrt();
            assert!((r.gap() - expect).abs() < 1e-9, "{r:?}");
            assert!(r.bracket_ok);
        }
        assert!(sweep.r_squared > 0.999);
    }

    #[test]
    fn edge_minimizer_is_flagged() {
        let (_, inner) = tent_grids();
        let t = dual_value_grid(
            &TentToy::default(),
            &SmoothingConfig::exact(1),
            &scalar_lambda_grid(0.5, 0.01),
            &inner,
            &mut rng(),
        )
        .unwrap();
        assert!(t.warning.is_some());
    }

    #[test]
    fn fit_examples() {
        let (k, r2) = fit_through_origin(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]);
        assert!((k - 2.0).abs() < 1e-15 && (r2 - 1.0).abs() < 1e-15);
        assert_eq!(linspace(0.0, 1.0, 5), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
