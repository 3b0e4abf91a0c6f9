//! Scalar spectral profiles: exact piecewise-linear functions and Chebyshev
//! polynomial approximations of step-like functions on the spectrum.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::numerics::{CMatrix, Spectrum};
use crate::promises::{deletion_width, Interval, RoundingPromise};
use crate::{Error, Result};

/// Number of uniform grid points (plus one) used for range and error checks.
pub const CHECK_GRID: usize = 10_000;
/// Largest Chebyshev sample count tried before giving up.
pub const MAX_SAMPLES: usize = 1 << 15;
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Poly,
}

/// Chebyshev series `Σ c_k T_k(t)` with `t` the affine image of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChebyshevSeries {
    pub coeffs: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
}

impl ChebyshevSeries {
    pub fn constant(v: f64, lo: f64, hi: f64) -> Self {
        Self { coeffs: vec![v], lo, hi }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Clenshaw recurrence.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for &ck in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + ck;
            b2 = b1;
            b1 = b0;
        }
        t * b1 - b2 + self.coeffs.first().copied().unwrap_or(0.0)
    }

    /// Product series, using `T_i T_j = (T_{i+j} + T_{|i−j|})/2`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                let p = 0.5 * a * b;
                out[i + j] += p;
                out[i.abs_diff(j)] += p;
            }
        }
        Self { coeffs: out, lo: self.lo, hi: self.hi }
    }

    /// `a·self + b`.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let mut coeffs: Vec<f64> = self.coeffs.iter().map(|c| a * c).collect();
        coeffs[0] += b;
        Self { coeffs, lo: self.lo, hi: self.hi }
    }

    fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(0.0) + other.coeffs.get(k).copied().unwrap_or(0.0))
            .collect();
        Self { coeffs, lo: self.lo, hi: self.hi }
    }
}

/// Linear segment on the closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    pub start: f64,
    pub end: f64,
}

impl Piece {
    pub fn constant(lo: f64, hi: f64, v: f64) -> Self {
        Self { lo, hi, start: v, end: v }
    }

    fn eval(&self, x: f64) -> f64 {
        if self.hi > self.lo {
            self.start + (self.end - self.start) * (x - self.lo) / (self.hi - self.lo)
        } else {
            self.start
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectralProfile {
    /// First piece containing `x` wins; `default` elsewhere.
    Piecewise {
        pieces: Vec<Piece>,
        default: f64,
    },
    Polynomial(ChebyshevSeries),
    /// `Π_j p_j²` or `1 − p_j²` factors, selected by the flag.
    BitProduct(Vec<(SpectralProfile, bool)>),
    /// `−T₃(p/2)` of a non-polynomial profile.
    Amplified(Box<SpectralProfile>),
    /// 0 off `support`, 1 on `plateau`, `base` in between.
    Idealized {
        base: Box<SpectralProfile>,
        support: RoundingPromise,
        plateau: RoundingPromise,
    },
}

impl SpectralProfile {
    pub fn constant(v: f64) -> Self {
        SpectralProfile::Piecewise { pieces: Vec::new(), default: v }
    }

    /// Indicator of a union of closed intervals.
    pub fn indicator(intervals: &[Interval]) -> Self {
        let pieces = intervals.iter().map(|iv| Piece::constant(iv.lo, iv.hi, 1.0)).collect();
        SpectralProfile::Piecewise { pieces, default: 0.0 }
    }

    pub fn domain(&self) -> (f64, f64) {
        match self {
            SpectralProfile::Polynomial(s) => (s.lo, s.hi),
            _ => (0.0, 1.0),
        }
    }

    /// Polynomial degree, zero for exact profiles.
    pub fn degree(&self) -> usize {
        match self {
            SpectralProfile::Piecewise { .. } => 0,
            SpectralProfile::Polynomial(s) => s.degree(),
            SpectralProfile::BitProduct(f) => f.iter().map(|(p, _)| 2 * p.degree()).sum(),
            SpectralProfile::Amplified(b) => 3 * b.degree(),
            SpectralProfile::Idealized { base, .. } => base.degree(),
        }
    }

    pub fn is_polynomial(&self) -> bool {
        match self {
            SpectralProfile::Piecewise { .. } => false,
            SpectralProfile::Polynomial(_) => true,
            SpectralProfile::BitProduct(f) => f.iter().all(|(p, _)| p.is_polynomial()),
            SpectralProfile::Amplified(b) => b.is_polynomial(),
            SpectralProfile::Idealized { .. } => false,
        }
    }

    /// Evaluates without a domain check.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            SpectralProfile::Piecewise { pieces, default } => {
                pieces.iter().find(|p| p.lo <= x && x <= p.hi).map_or(*default, |p| p.eval(x))
            }
            SpectralProfile::Polynomial(s) => s.eval(x),
            SpectralProfile::BitProduct(factors) => factors
                .iter()
                .map(|(p, bit)| {
                    let q = p.eval(x);
                    if *bit {
                        q * q
                    } else {
                        1.0 - q * q
                    }
                })
                .product(),
            SpectralProfile::Amplified(b) => t3_amplify(b.eval(x)),
            SpectralProfile::Idealized { base, support, plateau } => {
                if !support.contains(x) {
                    0.0
                } else if plateau.contains(x) {
                    1.0
                } else {
                    base.eval(x)
                }
            }
        }
    }

    pub fn try_eval(&self, x: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(x >= lo - DOMAIN_SLACK && x <= hi + DOMAIN_SLACK) {
            return Err(Error::DomainError(x));
        }
        Ok(self.eval(x))
    }

    /// `Σ_i f(λ_i) Π_i`.
    pub fn apply(&self, spectrum: &Spectrum) -> Result<CMatrix> {
        for &l in spectrum.eigenvalues() {
            self.try_eval(l)?;
        }
        Ok(spectrum.apply(|l| self.eval(l)))
    }

    /// `(x, f(x))` on `n + 1` uniform points of the domain.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let (lo, hi) = self.domain();
        (0..=n)
            .map(|k| {
                let x = lo + (hi - lo) * k as f64 / n as f64;
                (x, self.eval(x))
            })
            .collect()
    }

    /// Minimum and maximum over `CHECK_GRID + 1` uniform points.
    pub fn range_on_grid(&self) -> (f64, f64) {
        self.sample(CHECK_GRID).iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| (a.min(v), b.max(v)))
    }
}

fn t3_amplify(p: f64) -> f64 {
    0.5 * (3.0 * p - p * p * p)
}

/// Inverse complementary error function by bisection.
pub fn erfc_inv(y: f64) -> f64 {
    let (mut lo, mut hi) = (-6.0, 27.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if libm::erfc(mid) > y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Slope `k` such that `(1 + erf(k x))/2` is within `tail` of 0 or 1 for `|x| ≥ κ/2`.
pub fn step_slope(kappa: f64, tail: f64) -> f64 {
    2.0 * erfc_inv(2.0 * tail) / kappa
}

/// Chebyshev interpolant of `f` on `[lo, hi]` truncated so the discarded
/// coefficients sum to at most `tol`.
pub fn chebyshev_fit(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<ChebyshevSeries> {
    let mut n = 64;
    loop {
        let coeffs = chebyshev_coefficients(&f, lo, hi, n);
        let resolved: f64 = coeffs[3 * n / 4..].iter().map(|c| c.abs()).sum();
        if resolved <= tol / 16.0 {
            let mut tail = 0.0;
            let mut keep = coeffs.len();
            while keep > 1 && tail + coeffs[keep - 1].abs() <= tol {
                tail += coeffs[keep - 1].abs();
                keep -= 1;
            }
            return Ok(ChebyshevSeries { coeffs: coeffs[..keep].to_vec(), lo, hi });
        }
        if n >= MAX_SAMPLES {
            return Err(Error::DegreeBudgetExceeded(n));
        }
        n *= 2;
    }
}

/// Interpolation coefficients at the `n` first-kind Chebyshev nodes.
fn chebyshev_coefficients(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let values: Vec<f64> = (0..n)
        .map(|k| {
            let t = (PI * (k as f64 + 0.5) / n as f64).cos();
            f(0.5 * (lo + hi) + 0.5 * (hi - lo) * t)
        })
        .collect();
    // cos(π j (2k+1) / 2n) = table[j (2k+1) mod 4n]
    let period = 4 * n;
    let table: Vec<f64> = (0..period).map(|m| (PI * m as f64 / (2 * n) as f64).cos()).collect();
    (0..n)
        .map(|j| {
            let mut acc = 0.0;
            let mut idx = j % period;
            let step = (2 * j) % period;
            for v in &values {
                acc += v * table[idx];
                idx += step;
                if idx >= period {
                    idx -= period;
                }
            }
            let scale = if j == 0 { 1.0 } else { 2.0 };
            scale * acc / n as f64
        })
        .collect()
}

/// Affinely maps the series so its values on a dense grid lie in `[0, 1]`.
fn clamp_range(series: ChebyshevSeries, extra: &[f64]) -> ChebyshevSeries {
    let pts = CHECK_GRID.max(4 * series.degree());
    let mut lo_v: f64 = 0.0;
    let mut hi_v: f64 = 1.0;
    let mut visit = |x: f64| {
        let v = series.eval(x);
        lo_v = lo_v.min(v);
        hi_v = hi_v.max(v);
    };
    for k in 0..=pts {
        visit(series.lo + (series.hi - series.lo) * k as f64 / pts as f64);
    }
    for &x in extra {
        visit(x);
    }
    if lo_v == 0.0 && hi_v == 1.0 {
        return series;
    }
    let a = 1.0 / (hi_v - lo_v);
    series.affine(a, -lo_v * a)
}

/// `Θ(x) ≈ (1 + erf(k x))/2` on `[−2, 2]`: at most `δ` for `x ≤ −κ/2`, at
/// least `1 − δ` for `x ≥ κ/2`, and within `[0, 1]`.
pub fn step_poly(kappa: f64, delta: f64) -> Result<SpectralProfile> {
    if !(kappa > 0.0 && kappa < 1.0 && delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidParameter("step_poly needs 0 < κ < 1 and 0 < δ < 1/2"));
    }
    let k = step_slope(kappa, delta / 2.0);
    let series = chebyshev_fit(|x| 0.5 * (1.0 + libm::erf(k * x)), -2.0, 2.0, delta / 8.0)?;
    Ok(SpectralProfile::Polynomial(clamp_range(series, &[-kappa / 2.0, kappa / 2.0])))
}

/// Largest violation of the step guarantees on a `CHECK_GRID`-point grid of
/// `[−2, 2]`: distance to 0 left of `−κ/2`, to 1 right of `κ/2`, and any
/// excursion outside `[0, 1]`.
pub fn step_error(p: &SpectralProfile, kappa: f64) -> f64 {
    let grid = (0..=CHECK_GRID).map(|k| -2.0 + 4.0 * k as f64 / CHECK_GRID as f64);
    grid.chain([-kappa / 2.0, kappa / 2.0])
        .map(|x| {
            let v = p.eval(x);
            let outside = (-v).max(v - 1.0).max(0.0);
            if x <= -kappa / 2.0 {
                v.abs().max(outside)
            } else if x >= kappa / 2.0 {
                (1.0 - v).abs().max(outside)
            } else {
                outside
            }
        })
        .fold(0.0, f64::max)
}

/// Labeled intervals with a target accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSpec {
    pub intervals: Vec<(Interval, bool)>,
    pub delta: f64,
}

impl ProfileSpec {
    pub fn new(mut intervals: Vec<(Interval, bool)>, delta: f64) -> Result<Self> {
        intervals.sort_by(|a, b| a.0.lo.total_cmp(&b.0.lo));
        if intervals.windows(2).any(|w| !(w[0].0.hi < w[1].0.lo)) {
            return Err(Error::IntervalsTooClose);
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter("δ must lie in (0, 1)"));
        }
        Ok(Self { intervals, delta })
    }

    /// Smallest distance between consecutive labeled intervals.
    pub fn separation(&self) -> Option<f64> {
        self.intervals.windows(2).map(|w| w[1].0.lo - w[0].0.hi).reduce(f64::min)
    }

    /// Label changes as `(center, width, rising)`.
    pub fn flips(&self) -> Vec<(f64, f64, bool)> {
        self.intervals
            .windows(2)
            .filter(|w| w[0].1 != w[1].1)
            .map(|w| {
                let (a, b) = (w[0].0.hi, w[1].0.lo);
                (0.5 * (a + b), b - a, w[1].1)
            })
            .collect()
    }

    /// Largest deviation `|P − c_x|` over the grid points and endpoints that
    /// fall inside labeled intervals.
    pub fn max_error(&self, p: &SpectralProfile) -> f64 {
        let mut worst: f64 = 0.0;
        for (iv, label) in &self.intervals {
            let target = if *label { 1.0 } else { 0.0 };
            let lo = (iv.lo * CHECK_GRID as f64).ceil() as usize;
            let hi = (iv.hi * CHECK_GRID as f64).floor() as usize;
            let grid = (lo..=hi).map(|k| k as f64 / CHECK_GRID as f64);
            for x in grid.chain([iv.lo, iv.hi, iv.midpoint()]) {
                worst = worst.max((p.eval(x) - target).abs());
            }
        }
        worst
    }
}

/// Polynomial within `δ` of label `c_x` on every labeled interval and within
/// `[0, 1]` on `[0, 1]`: a constant plus one smoothed step per label change.
pub fn projection_poly(spec: &ProfileSpec) -> Result<SpectralProfile> {
    let first = spec.intervals.first().is_some_and(|(_, c)| *c);
    let flips = spec.flips();
    let c1 = if first { 1.0 } else { 0.0 };
    if flips.is_empty() {
        return Ok(SpectralProfile::Polynomial(ChebyshevSeries::constant(c1, 0.0, 1.0)));
    }
    let tail = spec.delta / (2.0 * flips.len() as f64);
    let steps: Vec<(f64, f64, f64)> =
        flips.iter().map(|&(t, kappa, rising)| (t, step_slope(kappa, tail), if rising { 1.0 } else { -1.0 })).collect();
    let f = |x: f64| steps.iter().fold(c1, |acc, &(t, k, sign)| acc + sign * 0.5 * (1.0 + libm::erf(k * (x - t))));
    let series = chebyshev_fit(f, 0.0, 1.0, spec.delta / 8.0)?;
    let ends: Vec<f64> = spec.intervals.iter().flat_map(|(iv, _)| [iv.lo, iv.hi]).collect();
    Ok(SpectralProfile::Polynomial(clamp_range(series, &ends)))
}

/// `P̄ = −T₃(P/2) = (3P − P³)/2`, pushing values near 0 or 1 closer to them.
pub fn amplify_t3(p: &SpectralProfile) -> SpectralProfile {
    match p {
        SpectralProfile::Polynomial(s) => {
            let cube = s.mul(s).mul(s);
            SpectralProfile::Polynomial(s.affine(1.5, 0.0).add(&cube.affine(-0.5, 0.0)))
        }
        other => SpectralProfile::Amplified(Box::new(other.clone())),
    }
}

/// Margin `κγ` together with which sides of each interval are ramped. Sides
/// touching 0 or 1 border no excluded region and stay flat.
fn attenuation_geometry(m: &RoundingPromise, gamma: f64) -> Result<(f64, RoundingPromise)> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter("γ must be non-negative"));
    }
    let margin = m.kappa().unwrap_or(0.0) * gamma;
    let sides = |x: usize| {
        let iv = m.intervals()[x];
        (iv.lo > 0.0, iv.hi < 1.0)
    };
    let plateau = m.truncate_sides(margin, sides)?;
    if margin > 0.0 && plateau.intervals().iter().any(|iv| iv.hi <= iv.lo) {
        let narrow = m.min_width();
        return Err(Error::IntervalVanishes { width: narrow, margin });
    }
    Ok((margin, plateau))
}

/// Exact attenuation profile: 0 off `M`, 1 on the `κγ`-truncation, linear ramps.
pub fn attenuation_exact(m: &RoundingPromise, gamma: f64) -> Result<SpectralProfile> {
    let (_, plateau) = attenuation_geometry(m, gamma)?;
    let mut pieces = Vec::new();
    for (iv, top) in m.intervals().iter().zip(plateau.intervals()) {
        if top.lo > iv.lo {
            pieces.push(Piece { lo: iv.lo, hi: top.lo, start: 0.0, end: 1.0 });
        }
        pieces.push(Piece::constant(top.lo, top.hi, 1.0));
        if top.hi < iv.hi {
            pieces.push(Piece { lo: top.hi, hi: iv.hi, start: 1.0, end: 0.0 });
        }
    }
    Ok(SpectralProfile::Piecewise { pieces, default: 0.0 })
}

/// Polynomial attenuation: within `δ_leak` of 0 on the excluded regions and of
/// 1 on the truncated promise.
pub fn attenuation_poly(m: &RoundingPromise, gamma: f64, delta_leak: f64) -> Result<SpectralProfile> {
    let (margin, plateau) = attenuation_geometry(m, gamma)?;
    let zeros = m.excluded_regions();
    if !zeros.is_empty() && !(margin > 0.0) {
        return Err(Error::IntervalVanishes { width: m.min_width(), margin });
    }
    let mut labeled: Vec<(Interval, bool)> = zeros.into_iter().map(|g| (g, false)).collect();
    labeled.extend(plateau.intervals().iter().map(|&iv| (iv, true)));
    let spec = ProfileSpec::new(labeled, delta_leak / 2.0)?;
    Ok(amplify_t3(&projection_poly(&spec)?))
}

/// Exact plateaus with the polynomial's own shape on the ramps.
pub fn attenuation_idealized(m: &RoundingPromise, gamma: f64, delta_leak: f64) -> Result<SpectralProfile> {
    let (_, plateau) = attenuation_geometry(m, gamma)?;
    let base = attenuation_poly(m, gamma, delta_leak)?;
    Ok(SpectralProfile::Idealized { base: Box::new(base), support: m.clone(), plateau })
}

pub fn attenuation_profile(m: &RoundingPromise, gamma: f64, delta_leak: f64, mode: Mode) -> Result<SpectralProfile> {
    match mode {
        Mode::Exact => attenuation_exact(m, gamma),
        Mode::Poly => attenuation_poly(m, gamma, delta_leak),
    }
}

/// Closed deletion windows of `L̄` (label 0) and `R̄` (label 1).
fn lr_windows(n: u32, r: u32) -> Vec<(Interval, bool)> {
    let w = deletion_width(n, r);
    let mut out = Vec::new();
    for k in 0..1u64 << (n + r) {
        let base = (4 * k) as f64;
        out.push((Interval::new(base * w, (base + 1.0) * w), false));
        out.push((Interval::new((base + 2.0) * w, (base + 3.0) * w), true));
    }
    out
}

/// Left-right profile `p_LR`: near 0 on the gaps of `L̄`, near 1 on the gaps of `R̄`.
pub fn lr_profile(n: u32, r: u32, delta_sup: f64, mode: Mode) -> Result<SpectralProfile> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidParameter("n and r must be at least 1"));
    }
    if n + r > crate::promises::MAX_BITS {
        return Err(Error::ParameterOverflow(n + r));
    }
    let windows = lr_windows(n, r);
    match mode {
        Mode::Exact => {
            let mut pieces = Vec::with_capacity(2 * windows.len());
            for pair in windows.chunks(2) {
                let (l, rr) = (pair[0].0, pair[1].0);
                pieces.push(Piece::constant(l.lo, l.hi, 0.0));
                pieces.push(Piece { lo: l.hi, hi: rr.lo, start: 0.0, end: 1.0 });
                pieces.push(Piece::constant(rr.lo, rr.hi, 1.0));
                let next = rr.hi + (rr.hi - rr.lo);
                pieces.push(Piece { lo: rr.hi, hi: next, start: 1.0, end: 0.0 });
            }
            Ok(SpectralProfile::Piecewise { pieces, default: 0.0 })
        }
        Mode::Poly => projection_poly(&ProfileSpec::new(windows, delta_sup / 6.0)?),
    }
}

/// Number of label bits for `s` intervals.
pub fn label_bits(s: usize) -> u32 {
    let mut b = 1;
    while (1usize << b) < s {
        b += 1;
    }
    b
}

/// Per-bit profiles for the interval labels of `M`, most significant first.
pub fn bit_projector_profiles(m: &RoundingPromise, delta_est: f64, mode: Mode) -> Result<Vec<SpectralProfile>> {
    let s = m.len();
    if s > 1 << (crate::promises::MAX_BITS + 1) {
        return Err(Error::TooManyIntervals { intervals: s });
    }
    let bits = label_bits(s);
    (1..=bits)
        .map(|j| {
            let bit_of = |x: usize| (x >> (bits - j)) & 1 == 1;
            match mode {
                Mode::Exact => {
                    let ones: Vec<Interval> =
                        m.intervals().iter().enumerate().filter(|(x, _)| bit_of(*x)).map(|(_, iv)| *iv).collect();
                    Ok(SpectralProfile::indicator(&ones))
                }
                Mode::Poly => {
                    let delta_j = 0.5 * delta_est * 0.5f64.powi(j as i32);
                    let labeled = m.intervals().iter().enumerate().map(|(x, iv)| (*iv, bit_of(x))).collect();
                    projection_poly(&ProfileSpec::new(labeled, delta_j)?)
                }
            }
        })
        .collect()
}

/// `p̃_x = Π_j (p^(j))²` or `1 − (p^(j))²` according to the bits of `x`.
pub fn interval_projector(bit_profiles: &[SpectralProfile], x: usize) -> SpectralProfile {
    let bits = bit_profiles.len();
    let factors = bit_profiles.iter().enumerate().map(|(k, p)| (p.clone(), (x >> (bits - 1 - k)) & 1 == 1)).collect();
    SpectralProfile::BitProduct(factors)
}
