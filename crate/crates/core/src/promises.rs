//! Rounding promises: ordered disjoint closed subintervals of `[0, 1]`.

use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::numerics::{CMatrix, Spectrum};
use crate::{Error, Result};

/// Largest supported `n + r`.
pub const MAX_BITS: u32 = 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundingPromise {
    intervals: Vec<Interval>,
}

impl RoundingPromise {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidPromise("no intervals"));
        }
        for iv in &intervals {
            if !(0.0 <= iv.lo && iv.lo <= iv.hi && iv.hi <= 1.0) {
                return Err(Error::InvalidPromise("interval outside [0, 1] or reversed"));
            }
        }
        if intervals.windows(2).any(|w| !(w[0].hi < w[1].lo)) {
            return Err(Error::InvalidPromise("intervals overlap or touch"));
        }
        Ok(Self { intervals })
    }

    /// The trivial promise `{[0, 1]}`.
    pub fn full() -> Self {
        Self { intervals: alloc::vec![Interval::new(0.0, 1.0)] }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn midpoints(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::midpoint).collect()
    }

    /// Open gaps `(b_x, a_{x+1})` between consecutive intervals.
    pub fn gaps(&self) -> Vec<Interval> {
        self.intervals.windows(2).map(|w| Interval::new(w[0].hi, w[1].lo)).collect()
    }

    /// Open pieces of `[0, 1]` outside the promise, including the edge pieces
    /// `(0, a_0)` and `(b_last, 1)` when nonempty.
    pub fn excluded_regions(&self) -> Vec<Interval> {
        let mut out = Vec::with_capacity(self.len() + 1);
        let first = self.intervals[0];
        if first.lo > 0.0 {
            out.push(Interval::new(0.0, first.lo));
        }
        out.extend(self.gaps());
        let last = self.intervals[self.len() - 1];
        if last.hi < 1.0 {
            out.push(Interval::new(last.hi, 1.0));
        }
        out
    }

    /// Minimum gap width κ. Falls back to the narrowest edge exclusion when
    /// there is a single interval; `None` for `{[0, 1]}`.
    pub fn kappa(&self) -> Option<f64> {
        let gaps = self.gaps();
        let pool = if gaps.is_empty() { self.excluded_regions() } else { gaps };
        pool.iter().map(Interval::width).reduce(f64::min)
    }

    /// Index of the closed interval containing `λ`.
    pub fn locate(&self, lambda: f64) -> Option<usize> {
        let k = self.intervals.partition_point(|iv| iv.hi < lambda);
        (k < self.len() && self.intervals[k].contains(lambda)).then_some(k)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.locate(lambda).is_some()
    }

    /// Shrinks every interval by `margin` on both sides.
    pub fn truncate(&self, margin: f64) -> Result<Self> {
        self.truncate_sides(margin, |_| (true, true))
    }

    /// Shrinks intervals by `margin`, but only on sides selected by `sides(x)`.
    pub fn truncate_sides(&self, margin: f64, sides: impl Fn(usize) -> (bool, bool)) -> Result<Self> {
        if !(margin >= 0.0) {
            return Err(Error::InvalidParameter("margin must be non-negative"));
        }
        let mut out = Vec::with_capacity(self.len());
        for (x, iv) in self.intervals.iter().enumerate() {
            let (left, right) = sides(x);
            let lo = if left { iv.lo + margin } else { iv.lo };
            let hi = if right { iv.hi - margin } else { iv.hi };
            if lo > hi {
                return Err(Error::IntervalVanishes { width: iv.width(), margin });
            }
            out.push(Interval::new(lo, hi));
        }
        Ok(Self { intervals: out })
    }

    /// Narrowest interval width.
    pub fn min_width(&self) -> f64 {
        self.intervals.iter().map(Interval::width).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    L,
    R,
}

impl Branch {
    pub fn other(self) -> Self {
        match self {
            Branch::L => Branch::R,
            Branch::R => Branch::L,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::L => "L",
            Branch::R => "R",
        })
    }
}

fn check_bits(n: u32, r: u32) -> Result<()> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidParameter("n and r must be at least 1"));
    }
    if n + r > MAX_BITS {
        return Err(Error::ParameterOverflow(n + r));
    }
    Ok(())
}

/// Deletion width `2^{−n−r−2}`.
pub fn deletion_width(n: u32, r: u32) -> f64 {
    0.5f64.powi((n + r + 2) as i32)
}

/// Open deletion windows of the fine-grained promise, in increasing order.
pub fn deletion_windows(n: u32, r: u32, branch: Branch) -> Vec<Interval> {
    let w = deletion_width(n, r);
    let offset = match branch {
        Branch::L => 0.0,
        Branch::R => 2.0,
    };
    (0..1u64 << (n + r))
        .map(|k| {
            let lo = (4 * k) as f64 + offset;
            Interval::new(lo * w, (lo + 1.0) * w)
        })
        .collect()
}

/// Closed components of `[0, 1]` minus a sorted list of open windows, with
/// single-point components dropped.
fn complement(windows: &[Interval]) -> Result<RoundingPromise> {
    let mut out = Vec::with_capacity(windows.len() + 1);
    let mut start = 0.0;
    for w in windows {
        if w.lo > start {
            out.push(Interval::new(start, w.lo));
        }
        start = w.hi;
    }
    if start < 1.0 {
        out.push(Interval::new(start, 1.0));
    }
    RoundingPromise::new(out)
}

/// `L̄` or `R̄`: `[0, 1]` minus `2^{n+r}` windows of width `w = 2^{−n−r−2}`,
/// at `(4k·w, (4k+1)·w)` for `L` and `((4k+2)·w, (4k+3)·w)` for `R`.
pub fn fine_grained(n: u32, r: u32, branch: Branch) -> Result<RoundingPromise> {
    check_bits(n, r)?;
    complement(&deletion_windows(n, r, branch))
}

/// Coarse promise `M_j`: keeps the excluded regions of `fine` whose index is
/// `j` modulo `2^r` and merges the rest into the surrounding intervals.
pub fn coarse_grained(fine: &RoundingPromise, n: u32, r: u32, j: usize) -> Result<RoundingPromise> {
    check_bits(n, r)?;
    let period = 1usize << r;
    if j >= period {
        return Err(Error::IndexOutOfRange { index: j, len: period });
    }
    let kept: Vec<Interval> =
        fine.excluded_regions().into_iter().enumerate().filter(|(x, _)| x % period == j).map(|(_, w)| w).collect();
    complement(&kept)
}

/// Fine promise for one branch together with its `2^r` coarse promises.
#[derive(Debug, Clone)]
pub struct PromiseFamily {
    pub n: u32,
    pub r: u32,
    pub branch: Branch,
    pub fine: RoundingPromise,
    pub coarse: Vec<RoundingPromise>,
}

impl PromiseFamily {
    pub fn new(n: u32, r: u32, branch: Branch) -> Result<Self> {
        let fine = fine_grained(n, r, branch)?;
        let coarse = (0..1usize << r).map(|j| coarse_grained(&fine, n, r, j)).collect::<Result<Vec<_>>>()?;
        Ok(Self { n, r, branch, fine, coarse })
    }

    pub fn size(&self) -> usize {
        self.coarse.len()
    }

    /// Checks containment of the fine promise in each coarse promise, the
    /// `2^{−n}` width bound, and that no point of `grid` is excluded twice.
    pub fn verify(&self, grid: usize) -> Result<()> {
        let cap = 0.5f64.powi(self.n as i32);
        for m in &self.coarse {
            for iv in self.fine.intervals() {
                match m.locate(iv.lo) {
                    Some(x) if m.intervals()[x].contains(iv.hi) => {}
                    _ => return Err(Error::InvalidPromise("fine interval not inside a coarse interval")),
                }
            }
            if m.intervals().iter().any(|iv| iv.width() > cap) {
                return Err(Error::InvalidPromise("coarse interval wider than 2^-n"));
            }
        }
        let mut points: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
        for m in &self.coarse {
            for iv in m.intervals() {
                points.extend([iv.lo, iv.hi]);
            }
            for g in m.excluded_regions() {
                points.push(g.midpoint());
            }
        }
        if points.iter().any(|&p| exclusion_count(p, self) > 1) {
            return Err(Error::InvalidPromise("point excluded by two coarse promises"));
        }
        Ok(())
    }
}

/// Number of coarse promises of `family` that do not contain `λ`.
pub fn exclusion_count(lambda: f64, family: &PromiseFamily) -> usize {
    family.coarse.iter().filter(|m| !m.contains(lambda)).count()
}

/// Exact projectors onto the eigenspaces inside each interval of a promise.
#[derive(Debug, Clone)]
pub struct PromisedProjectors {
    /// `P_x` for every interval (possibly zero).
    pub per_interval: Vec<CMatrix>,
    /// `P^(M) = Σ_x P_x`.
    pub total: CMatrix,
    /// Interval index of every spectrum cluster, if promised.
    pub location: Vec<Option<usize>>,
}

pub fn promised_projectors(spectrum: &Spectrum, m: &RoundingPromise) -> PromisedProjectors {
    let location: Vec<Option<usize>> = spectrum.eigenvalues().iter().map(|&l| m.locate(l)).collect();
    let per_interval: Vec<CMatrix> = (0..m.len())
        .map(|x| {
            let hit = |l: f64| if m.locate(l) == Some(x) { 1.0 } else { 0.0 };
            spectrum.apply(hit)
        })
        .collect();
    let total = spectrum.apply(|l| if m.contains(l) { 1.0 } else { 0.0 });
    PromisedProjectors { per_interval, total, location }
}

/// Orthonormal columns spanning the promised subspace.
pub fn promised_isometry(spectrum: &Spectrum, m: &RoundingPromise) -> CMatrix {
    let cols: Vec<usize> = (0..spectrum.len())
        .filter(|&k| m.contains(spectrum.eigenvalues()[k]))
        .flat_map(|k| spectrum.columns(k))
        .collect();
    let basis = spectrum.basis();
    CMatrix::from_fn(basis.nrows(), cols.len(), |r, k| basis[(r, cols[k])])
}
