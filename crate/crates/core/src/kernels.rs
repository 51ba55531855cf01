//! Interaction kernels `g(s)` of the half squared distance `s = |p - q|²/2`,
//! their hypothesis classes and envelope constants.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::KernelError;

/// Smallest `s` at which kernels are evaluated.
pub const S_MIN: f64 = 1e-14;
/// Lower end of the logarithmic scans.
pub const SCAN_S_LO: f64 = 1e-12;
/// Default number of scan points.
pub const DEFAULT_SCAN_POINTS: usize = 4000;

/// Hypothesis classes H0 to H3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HypothesisFlags {
    /// Integrable envelope.
    pub h0: bool,
    /// Regular: `s|ġ|` and `s²|g̈|` bounded.
    pub h1: bool,
    /// Singular with integrable derivative envelope.
    pub h2: bool,
    /// Asymptotically finite.
    pub h3: bool,
}

impl HypothesisFlags {
    pub const ALL: HypothesisFlags = HypothesisFlags {
        h0: true,
        h1: true,
        h2: true,
        h3: true,
    };

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        for (on, name) in [(self.h0, "H0"), (self.h1, "H1"), (self.h2, "H2"), (self.h3, "H3")] {
            if on {
                v.push(name);
            }
        }
        v
    }
}

impl fmt::Display for HypothesisFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.names().join(","))
    }
}

/// Ways a kernel pair can be admitted into a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompatibilityRoute {
    /// H0 and H1: no geometric condition.
    Regular,
    /// H0 and H2 on a self-interaction of an embedded interface.
    SingularSelf,
    /// H3 on a cross-interaction of disjoint interfaces.
    SeparatedCross,
}

impl CompatibilityRoute {
    pub fn label(&self) -> &'static str {
        match self {
            CompatibilityRoute::Regular => "I (H0+H1, any geometry)",
            CompatibilityRoute::SingularSelf => "II (H0+H2, self-interaction of an embedded interface)",
            CompatibilityRoute::SeparatedCross => "III (H3, cross-interaction of disjoint interfaces)",
        }
    }
}

/// Routes enabled by a flag set; `self_pair` selects self- or cross-interaction.
pub fn compatibility_routes(flags: HypothesisFlags, self_pair: bool) -> Vec<CompatibilityRoute> {
    let mut v = Vec::new();
    if flags.h0 && flags.h1 {
        v.push(CompatibilityRoute::Regular);
    }
    if self_pair && flags.h0 && flags.h2 {
        v.push(CompatibilityRoute::SingularSelf);
    }
    if !self_pair && flags.h3 {
        v.push(CompatibilityRoute::SeparatedCross);
    }
    v
}

/// A kernel sampled as `(s, g, ġ)` rows and interpolated by cubic Hermite
/// polynomials. Below the first row the kernel is held at its first value;
/// above the last row it vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    s: Vec<f64>,
    g: Vec<f64>,
    gdot: Vec<f64>,
}

impl TabulatedKernel {
    pub fn new(rows: Vec<(f64, f64, f64)>) -> Result<Self, KernelError> {
        if rows.len() < 2 {
            return Err(KernelError::Table("need at least two rows".into()));
        }
        let mut s = Vec::with_capacity(rows.len());
        let mut g = Vec::with_capacity(rows.len());
        let mut gdot = Vec::with_capacity(rows.len());
        for (n, &(a, b, c)) in rows.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && c.is_finite()) {
                return Err(KernelError::Table(format!("row {n} is not finite")));
            }
            if a <= 0.0 {
                return Err(KernelError::Table(format!("row {n}: s must be positive")));
            }
            if let Some(&prev) = s.last() {
                if a <= prev {
                    return Err(KernelError::Table(format!("row {n}: s not increasing")));
                }
            }
            s.push(a);
            g.push(b);
            gdot.push(c);
        }
        Ok(Self { s, g, gdot })
    }

    /// Samples `g` and `ġ` on a logarithmic grid of `n` points in `[s_lo, s_hi]`.
    pub fn from_fn(
        g: impl Fn(f64) -> f64,
        gdot: impl Fn(f64) -> f64,
        s_lo: f64,
        s_hi: f64,
        n: usize,
    ) -> Result<Self, KernelError> {
        if !(s_lo > 0.0 && s_hi > s_lo) || n < 2 {
            return Err(KernelError::BadParameter("invalid tabulation range".into()));
        }
        let (a, b) = (s_lo.ln(), s_hi.ln());
        let rows = (0..n)
            .map(|i| {
                let s = (a + (b - a) * i as f64 / (n - 1) as f64).exp();
                (s, g(s), gdot(s))
            })
            .collect();
        Self::new(rows)
    }

    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.s.len()).map(move |i| (self.s[i], self.g[i], self.gdot[i]))
    }

    pub fn s_max(&self) -> f64 {
        *self.s.last().expect("non-empty table")
    }

    fn segment(&self, s: f64) -> Option<(usize, f64, f64)> {
        let n = self.s.len();
        if s <= self.s[0] || s > self.s[n - 1] {
            return None;
        }
        let i = self.s.partition_point(|&v| v < s).clamp(1, n - 1) - 1;
        let h = self.s[i + 1] - self.s[i];
        Some((i, h, (s - self.s[i]) / h))
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= self.s[0] {
            return self.g[0];
        }
        match self.segment(s) {
            None => 0.0,
            Some((i, h, t)) => {
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * self.g[i]
                    + (t3 - 2.0 * t2 + t) * h * self.gdot[i]
                    + (-2.0 * t3 + 3.0 * t2) * self.g[i + 1]
                    + (t3 - t2) * h * self.gdot[i + 1]
            }
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        match self.segment(s) {
            None => 0.0,
            Some((i, h, t)) => {
                let t2 = t * t;
                ((6.0 * t2 - 6.0 * t) * self.g[i]
                    + (-6.0 * t2 + 6.0 * t) * self.g[i + 1])
                    / h
                    + (3.0 * t2 - 4.0 * t + 1.0) * self.gdot[i]
                    + (3.0 * t2 - 2.0 * t) * self.gdot[i + 1]
            }
        }
    }
}

#[derive(Clone)]
pub enum KernelFamily {
    Gaussian { alpha: f64, beta: f64 },
    Zero,
    Tabulated(Arc<TabulatedKernel>),
}

impl fmt::Debug for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFamily::Gaussian { alpha, beta } => {
                write!(f, "Gaussian {{ alpha: {alpha}, beta: {beta} }}")
            }
            KernelFamily::Zero => write!(f, "Zero"),
            KernelFamily::Tabulated(t) => write!(f, "Tabulated({} rows)", t.s.len()),
        }
    }
}

/// A classified interaction kernel.
#[derive(Debug, Clone)]
pub struct KernelSpec {
    family: KernelFamily,
    flags: HypothesisFlags,
    c0star: Option<f64>,
    c1star: Option<f64>,
    c2star: Option<f64>,
}

impl KernelSpec {
    /// `g(s) = β/√(2πα²) exp(-s/(2α²))`; `β = 0` gives the zero kernel.
    pub fn gaussian(alpha: f64, beta: f64) -> Result<Self, KernelError> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(KernelError::BadParameter(format!(
                "gaussian alpha must be positive, got {alpha}"
            )));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(KernelError::BadParameter(format!(
                "gaussian beta must be non-negative, got {beta}"
            )));
        }
        if beta == 0.0 {
            return Ok(Self::zero());
        }
        let amp = beta / ((2.0 * PI).sqrt() * alpha);
        // s|ġ| = amp·w·e^{-w} peaks at w = 1, s²|g̈| = amp·w²·e^{-w} at w = 2.
        let c1 = amp * (1.0_f64.exp().recip()).max(4.0 * (-2.0_f64).exp());
        let mut spec = Self {
            family: KernelFamily::Gaussian { alpha, beta },
            flags: HypothesisFlags {
                h0: true,
                h1: true,
                h2: false,
                h3: true,
            },
            c0star: Some(beta / 2.0),
            c1star: Some(c1),
            c2star: None,
        };
        spec.c2star = envelope_c2_with(&spec, DEFAULT_SCAN_POINTS).ok();
        Ok(spec)
    }

    pub fn zero() -> Self {
        Self {
            family: KernelFamily::Zero,
            flags: HypothesisFlags::ALL,
            c0star: Some(0.0),
            c1star: Some(0.0),
            c2star: Some(0.0),
        }
    }

    /// A tabulated kernel, classified numerically.
    pub fn tabulated(table: TabulatedKernel) -> Result<Self, KernelError> {
        let mut spec = Self {
            family: KernelFamily::Tabulated(Arc::new(table)),
            flags: HypothesisFlags::default(),
            c0star: None,
            c1star: None,
            c2star: None,
        };
        let c = classify_numeric(&spec, DEFAULT_SCAN_POINTS);
        spec.flags = c.flags;
        spec.c0star = c.c0star;
        spec.c1star = c.c1star;
        spec.c2star = c.c2star;
        Ok(spec)
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::Zero => "zero",
            KernelFamily::Tabulated(_) => "tabulated",
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, KernelFamily::Zero)
    }

    pub fn flags(&self) -> HypothesisFlags {
        self.flags
    }

    pub fn c0star(&self) -> Option<f64> {
        self.c0star
    }

    pub fn c1star(&self) -> Option<f64> {
        self.c1star
    }

    pub fn c2star(&self) -> Option<f64> {
        self.c2star
    }

    /// Scan cutoff: the kernel is treated as zero beyond it.
    pub fn s_max(&self) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { alpha, .. } => 1e4 * alpha * alpha,
            KernelFamily::Zero => 1.0,
            KernelFamily::Tabulated(t) => t.s_max(),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { alpha, beta } => {
                beta / ((2.0 * PI).sqrt() * alpha) * (-s / (2.0 * alpha * alpha)).exp()
            }
            KernelFamily::Zero => 0.0,
            KernelFamily::Tabulated(t) => t.eval(s.max(S_MIN)),
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { alpha, .. } => -self.eval(s) / (2.0 * alpha * alpha),
            KernelFamily::Zero => 0.0,
            KernelFamily::Tabulated(t) => t.deriv(s.max(S_MIN)),
        }
    }

    pub fn second_deriv(&self, s: f64) -> f64 {
        match &self.family {
            KernelFamily::Gaussian { alpha, .. } => self.eval(s) / (4.0 * alpha.powi(4)),
            KernelFamily::Zero => 0.0,
            KernelFamily::Tabulated(t) => {
                let s = s.max(S_MIN);
                let h = 1e-4 * s;
                (t.deriv(s + h) - t.deriv(s - h)) / (2.0 * h)
            }
        }
    }
}

/// Logarithmic scan grid `[1e-12, s_max]` with whole decades on grid points.
struct ScanGrid {
    s: Vec<f64>,
    per_decade: usize,
}

impl ScanGrid {
    fn new(s_max: f64, points: usize) -> Self {
        let top = s_max.max(10.0 * SCAN_S_LO).log10();
        let lo = SCAN_S_LO.log10();
        let decades = top - lo;
        let per_decade = ((points as f64 / decades).round() as usize).max(4);
        let n = (decades * per_decade as f64).ceil() as usize;
        let mut s: Vec<f64> = (0..n)
            .map(|i| 10f64.powf(lo + i as f64 / per_decade as f64))
            .collect();
        s.push(10f64.powf(top));
        Self { s, per_decade }
    }

    /// Grid index of `10^{-k}` for `k ≤ 12`.
    fn decade_index(&self, k: u32) -> usize {
        (12 - k as usize) * self.per_decade
    }
}

const GL8_NODES: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// `∫₀^∞ H*(u²) du` where `H*` is the non-increasing envelope of `|h|`.
fn envelope_integral(h: impl Fn(f64) -> f64, s_max: f64, points: usize) -> Result<f64, KernelError> {
    let grid = ScanGrid::new(s_max, points);
    let s = &grid.s;
    let n = s.len();
    let vals: Vec<f64> = s.iter().map(|&v| h(v).abs()).collect();
    let mut right_max = vec![0.0_f64; n + 1];
    for i in (0..n).rev() {
        right_max[i] = right_max[i + 1].max(vals[i]);
    }
    // Integral over [u_i, u_{i+1}] of max(|h(u²)|, R_{i+1}).
    let mut pieces = vec![0.0; n - 1];
    for i in 0..n - 1 {
        let (a, b) = (s[i].sqrt(), s[i + 1].sqrt());
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let floor = right_max[i + 1];
        pieces[i] = half
            * GL8_NODES
                .iter()
                .zip(GL8_WEIGHTS.iter())
                .map(|(&x, &w)| {
                    let u = mid + half * x;
                    w * h(u * u).abs().max(floor)
                })
                .sum::<f64>();
    }
    let mut suffix = vec![0.0; n];
    for i in (0..n - 1).rev() {
        suffix[i] = suffix[i + 1] + pieces[i];
    }
    // Partial integrals with lower limits 1e-4 ... 1e-12, then a Cauchy test.
    let partial: Vec<f64> = (4..=12).map(|k| suffix[grid.decade_index(k)]).collect();
    let inc: Vec<f64> = partial.windows(2).map(|w| w[1] - w[0]).collect();
    let last = inc[inc.len() - 1];
    let prev = inc[inc.len() - 2];
    if last <= 1e-300 * partial[partial.len() - 1].max(1e-300) || last == 0.0 {
        return Ok(partial[partial.len() - 1]);
    }
    let ratio = if prev > 0.0 { last / prev } else { f64::INFINITY };
    if !(ratio < 0.9) {
        return Err(KernelError::NotIntegrable { ratio });
    }
    let total = partial[partial.len() - 1] + last * ratio / (1.0 - ratio);
    if !total.is_finite() {
        return Err(KernelError::NotIntegrable { ratio });
    }
    Ok(total)
}

/// `c*₀ = ∫₀^∞ 𝒢*(u²) du` by a numeric envelope scan.
pub fn envelope_c0(kernel: &KernelSpec) -> Result<f64, KernelError> {
    envelope_c0_with(kernel, DEFAULT_SCAN_POINTS)
}

pub fn envelope_c0_with(kernel: &KernelSpec, points: usize) -> Result<f64, KernelError> {
    if kernel.is_zero() {
        return Ok(0.0);
    }
    envelope_integral(|s| kernel.eval(s), kernel.s_max(), points)
}

/// `c*₂ = ∫₀^∞ sup_{t ≥ u²} t|ġ(t)| du`.
pub fn envelope_c2_with(kernel: &KernelSpec, points: usize) -> Result<f64, KernelError> {
    if kernel.is_zero() {
        return Ok(0.0);
    }
    envelope_integral(|s| s * kernel.deriv(s), kernel.s_max(), points)
}

fn scan_sup(h: impl Fn(f64) -> f64, s_max: f64, points: usize) -> f64 {
    let grid = ScanGrid::new(s_max, points);
    let vals: Vec<f64> = grid.s.iter().map(|&s| h(s).abs()).collect();
    let n = vals.len();
    let (imax, vmax) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    if !vmax.is_finite() {
        return f64::INFINITY;
    }
    let d = grid.per_decade.min(n - 1);
    // A maximum on the scan boundary that is still rising per decade diverges.
    if imax == 0 && vmax > vals[d] * (1.0 + 1e-3) {
        return f64::INFINITY;
    }
    if imax == n - 1 && vmax > vals[n - 1 - d] * (1.0 + 1e-3) {
        return f64::INFINITY;
    }
    vmax
}

/// `max(sup s|ġ|, sup s²|g̈|)` on the log scan, or `+∞` when divergent.
pub fn regularity_c1(kernel: &KernelSpec) -> f64 {
    regularity_c1_with(kernel, DEFAULT_SCAN_POINTS)
}

pub fn regularity_c1_with(kernel: &KernelSpec, points: usize) -> f64 {
    if kernel.is_zero() {
        return 0.0;
    }
    let a = scan_sup(|s| s * kernel.deriv(s), kernel.s_max(), points);
    let b = scan_sup(|s| s * s * kernel.second_deriv(s), kernel.s_max(), points);
    a.max(b)
}

/// Result of a numeric classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub flags: HypothesisFlags,
    pub c0star: Option<f64>,
    pub c1star: Option<f64>,
    pub c2star: Option<f64>,
}

fn classify_numeric(kernel: &KernelSpec, points: usize) -> Classification {
    if kernel.is_zero() {
        return Classification {
            flags: HypothesisFlags::ALL,
            c0star: Some(0.0),
            c1star: Some(0.0),
            c2star: Some(0.0),
        };
    }
    let c0 = envelope_c0_with(kernel, points).ok();
    let c1 = Some(regularity_c1_with(kernel, points)).filter(|v| v.is_finite());
    let c2 = envelope_c2_with(kernel, points).ok();
    // Away from the origin both envelopes must stay bounded.
    let h3 = {
        let grid = ScanGrid::new(kernel.s_max(), points);
        let tail_ok = |h: &dyn Fn(f64) -> f64| {
            let n = grid.s.len();
            let d = grid.per_decade.min(n - 1);
            let top = h(grid.s[n - 1]).abs();
            top.is_finite() && !(top > h(grid.s[n - 1 - d]).abs() * (1.0 + 1e-3) && top > 0.0)
        };
        let all_finite = grid
            .s
            .iter()
            .all(|&s| kernel.eval(s).is_finite() && (s * kernel.deriv(s)).is_finite());
        all_finite
            && tail_ok(&|s| kernel.eval(s))
            && tail_ok(&|s| s * kernel.deriv(s))
    };
    let h1 = c1.is_some();
    Classification {
        flags: HypothesisFlags {
            h0: c0.is_some(),
            h1,
            h2: c2.is_some() && !h1,
            h3,
        },
        c0star: c0,
        c1star: c1,
        c2star: c2,
    }
}

/// Numeric hypothesis classification at the default scan resolution.
pub fn classify(kernel: &KernelSpec) -> HypothesisFlags {
    classify_with(kernel, DEFAULT_SCAN_POINTS)
}

/// Numeric hypothesis classification with `points` scan points.
pub fn classify_with(kernel: &KernelSpec, points: usize) -> HypothesisFlags {
    classify_numeric(kernel, points).flags
}
