//! Excursion counting and the scaling test built on it.
//!
//! For a continuous semimartingale the number of ε-oscillations obeys
//! `N_ε ≈ [X]_T / (2ε²)` as ε → 0. Deterministic signals have vanishing
//! quadratic variation in the continuous limit and miss that law. The
//! pipeline here estimates `[X]_T`, counts oscillations on a logarithmic
//! ε grid, looks for a band where the empirical/theoretical ratio `K(ε)` is
//! close to one and fits the log–log slope there.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// Slopes inside `[SLOPE_LOWER, SLOPE_UPPER]` are classified as diffusive.
pub const SLOPE_LOWER: f64 = -2.5;
pub const SLOPE_UPPER: f64 = -1.0;

/// Relative factor below which the quadratic variation counts as numerical noise.
const DEGENERATE_RELATIVE_FLOOR: f64 = 1e-12;

/// Span `ε_max / ε_min` of an automatic grid whose natural bounds cross.
///
/// Twice the median increment can exceed a quarter of the range for rough,
/// bounded signals such as chaotic maps; the grid then reaches one decade
/// below `ε_max` instead.
pub const INVERTED_GRID_SPAN: f64 = 10.0;

/// Strictly increasing, positive amplitude thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EpsilonGrid {
    epsilons: Vec<f64>,
}

impl EpsilonGrid {
    pub const MIN_LEN: usize = 4;

    pub fn new(epsilons: Vec<f64>) -> Result<Self> {
        if epsilons.len() < Self::MIN_LEN {
            return Err(Error::invalid(format!(
                "epsilon grid needs at least {} points, got {}",
                Self::MIN_LEN,
                epsilons.len()
            )));
        }
        if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
            return Err(Error::invalid(format!("epsilon {e} is not positive and finite")));
        }
        if epsilons.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("epsilon grid must be strictly increasing"));
        }
        Ok(Self { epsilons })
    }

    /// `n` geometrically spaced points from `lo` to `hi` inclusive.
    pub fn geometric(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
            return Err(Error::invalid(format!(
                "geometric grid needs 0 < lo < hi, got lo={lo}, hi={hi}"
            )));
        }
        if n < Self::MIN_LEN {
            return Err(Error::invalid(format!(
                "epsilon grid needs at least {} points, got {n}",
                Self::MIN_LEN
            )));
        }
        let log_lo = lo.ln();
        let step = (hi.ln() - log_lo) / (n - 1) as f64;
        let mut eps: Vec<f64> = (0..n).map(|i| (log_lo + step * i as f64).exp()).collect();
        // pin the endpoints so round-off in exp/ln does not move them
        eps[0] = lo;
        eps[n - 1] = hi;
        Self::new(eps)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.epsilons
    }

    pub fn len(&self) -> usize {
        self.epsilons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilons.is_empty()
    }
}

impl TryFrom<Vec<f64>> for EpsilonGrid {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EpsilonGrid> for Vec<f64> {
    fn from(g: EpsilonGrid) -> Self {
        g.epsilons
    }
}

/// Realized quadratic variation `Σ (x_{i+1} - x_i)²`.
pub fn quadratic_variation(traj: &Trajectory) -> f64 {
    sum_squared_increments(traj.values())
}

fn sum_squared_increments(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            d * d
        })
        .sum()
}

/// Number of completed ε-oscillations in the series.
///
/// Oscillations are counted with an alternating-extremum (directional change)
/// scan: a leg closes when the path retraces `epsilon` from the running
/// extremum of the current direction, and every two legs make one excursion.
/// Under Brownian scaling a leg takes `ε²/σ²` time units on average, so the
/// count tends to `[X]_T / (2ε²)`.
pub fn count_excursions(traj: &Trajectory, epsilon: f64) -> Result<u64> {
    check_epsilon(epsilon)?;
    Ok(count_legs(traj.values(), epsilon) / 2)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )))
    }
}

#[derive(Clone, Copy)]
enum Direction {
    Unset,
    Up,
    Down,
}

/// Number of ε-legs found by the alternating-extremum scan.
pub(crate) fn count_legs(values: &[f64], epsilon: f64) -> u64 {
    let Some(&first) = values.first() else {
        return 0;
    };
    let mut dir = Direction::Unset;
    let mut hi = first;
    let mut lo = first;
    let mut legs = 0u64;

    for &x in &values[1..] {
        match dir {
            Direction::Unset => {
                hi = hi.max(x);
                lo = lo.min(x);
                if x - lo >= epsilon {
                    legs += 1;
                    dir = Direction::Up;
                    hi = x;
                } else if hi - x >= epsilon {
                    legs += 1;
                    dir = Direction::Down;
                    lo = x;
                }
            }
            Direction::Up => {
                if x > hi {
                    hi = x;
                } else if hi - x >= epsilon {
                    legs += 1;
                    dir = Direction::Down;
                    lo = x;
                }
            }
            Direction::Down => {
                if x < lo {
                    lo = x;
                } else if x - lo >= epsilon {
                    legs += 1;
                    dir = Direction::Up;
                    hi = x;
                }
            }
        }
    }
    legs
}

/// Predicted counts `qv / (2ε²)` for every ε of the grid.
pub fn theoretical_counts(qv: f64, grid: &EpsilonGrid) -> Result<Vec<f64>> {
    if !qv.is_finite() || qv < 0.0 {
        return Err(Error::invalid(format!("quadratic variation must be finite and >= 0, got {qv}")));
    }
    if qv == 0.0 {
        return Err(Error::degenerate("zero quadratic variation"));
    }
    Ok(grid.as_slice().iter().map(|e| qv / (2.0 * e * e)).collect())
}

/// Empirical and theoretical excursion counts over an ε grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcursionProfile {
    pub grid: EpsilonGrid,
    pub n_emp: Vec<u64>,
    pub n_theory: Vec<f64>,
    /// `n_emp / n_theory`, the K(ε) invariant.
    pub k_ratio: Vec<f64>,
    pub qv: f64,
}

impl ExcursionProfile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn epsilons(&self) -> &[f64] {
        self.grid.as_slice()
    }
}

pub fn excursion_profile(traj: &Trajectory, grid: &EpsilonGrid) -> Result<ExcursionProfile> {
    let qv = quadratic_variation(traj);
    let n_theory = theoretical_counts(qv, grid)?;
    let n_emp: Vec<u64> = grid
        .as_slice()
        .iter()
        .map(|&e| count_legs(traj.values(), e) / 2)
        .collect();
    let k_ratio = n_emp
        .iter()
        .zip(&n_theory)
        .map(|(&emp, &th)| emp as f64 / th)
        .collect();
    Ok(ExcursionProfile {
        grid: grid.clone(),
        n_emp,
        n_theory,
        k_ratio,
        qv,
    })
}

/// Acceptance rule for the K(ε) ≈ 1 band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingBand {
    /// Points with `K ∈ [1/kappa, kappa]` are in band.
    pub kappa: f64,
    /// Shortest contiguous run accepted as a scaling range.
    pub min_run: usize,
    /// Counts below this are too noisy to use.
    pub min_count: u64,
}

impl Default for ScalingBand {
    fn default() -> Self {
        Self {
            kappa: 1.5,
            min_run: 4,
            min_count: 5,
        }
    }
}

impl ScalingBand {
    fn admits(&self, profile: &ExcursionProfile, i: usize) -> bool {
        let k = profile.k_ratio[i];
        profile.n_emp[i] >= self.min_count && k >= 1.0 / self.kappa && k <= self.kappa
    }
}

/// Longest contiguous run of in-band points, under the default band.
pub fn select_scaling_range(profile: &ExcursionProfile) -> Option<(usize, usize)> {
    select_scaling_range_with(profile, &ScalingBand::default())
}

/// Longest contiguous run of in-band points of length at least `band.min_run`.
///
/// Equal-length runs are ordered by mean `|ln K|`, then by starting index.
pub fn select_scaling_range_with(
    profile: &ExcursionProfile,
    band: &ScalingBand,
) -> Option<(usize, usize)> {
    let n = profile.len();
    let mut best: Option<(usize, usize, f64)> = None;
    let mut i = 0;
    while i < n {
        if !band.admits(profile, i) {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && band.admits(profile, i) {
            i += 1;
        }
        let end = i - 1;
        let len = end - start + 1;
        if len < band.min_run.max(1) {
            continue;
        }
        let dev = profile.k_ratio[start..=end]
            .iter()
            .map(|k| k.ln().abs())
            .sum::<f64>()
            / len as f64;
        let better = match best {
            None => true,
            Some((bs, be, bdev)) => {
                let blen = be - bs + 1;
                len > blen || (len == blen && dev < bdev)
            }
        };
        if better {
            best = Some((start, end, dev));
        }
    }
    best.map(|(s, e, _)| (s, e))
}

/// Least-squares fit of `ln N_ε = s ln ε + c` over a contiguous index range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub range_lo: usize,
    pub range_hi: usize,
    pub r_squared: f64,
    pub n_points: usize,
}

pub fn fit_slope(profile: &ExcursionProfile, range: (usize, usize)) -> Result<SlopeFit> {
    let (lo, hi) = range;
    if lo > hi || hi >= profile.len() {
        return Err(Error::invalid(format!(
            "fit range ({lo}, {hi}) outside grid of {} points",
            profile.len()
        )));
    }
    if let Some(i) = (lo..=hi).find(|&i| profile.n_emp[i] == 0) {
        return Err(Error::RangeRejected(format!(
            "zero excursion count at grid index {i}"
        )));
    }
    let eps = profile.epsilons();
    let xs: Vec<f64> = (lo..=hi).map(|i| eps[i].ln()).collect();
    let ys: Vec<f64> = (lo..=hi).map(|i| (profile.n_emp[i] as f64).ln()).collect();
    let (slope, intercept, r_squared) = ols(&xs, &ys);
    Ok(SlopeFit {
        slope,
        intercept,
        range_lo: lo,
        range_hi: hi,
        r_squared,
        n_points: hi - lo + 1,
    })
}

/// Ordinary least squares `y = a x + b`, returning `(a, b, r²)`.
pub(crate) fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return (0.0, my, 0.0);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    // a flat line: syy is pure round-off from the mean
    let flat = syy <= 1e-24 * (my * my * n).max(f64::MIN_POSITIVE);
    let r2 = if flat || ss_res == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    (slope, intercept, r2)
}

fn median_abs_increment(values: &[f64]) -> f64 {
    let mut d: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let m = d.len();
    let mid = m / 2;
    let (_, upper, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if m % 2 == 1 {
        upper
    } else {
        let lower = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Geometric grid from twice the median absolute increment up to a quarter of
/// the signal range.
///
/// If the lower bound is not below the upper one, the lower end becomes
/// `ε_max / INVERTED_GRID_SPAN`.
pub fn default_grid(traj: &Trajectory, n_points: usize) -> Result<EpsilonGrid> {
    if n_points < 8 {
        return Err(Error::invalid(format!(
            "default grid needs at least 8 points, got {n_points}"
        )));
    }
    let range = traj.range();
    if range <= 0.0 {
        return Err(Error::degenerate("signal range is zero"));
    }
    let hi = range / 4.0;
    let mut lo = (2.0 * median_abs_increment(traj.values())).max(DEGENERATE_RELATIVE_FLOOR * range);
    if lo >= hi {
        lo = hi / INVERTED_GRID_SPAN;
    }
    EpsilonGrid::geometric(lo, hi, n_points)
}

/// How the ε grid of a classification is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridChoice {
    /// [`default_grid`] with this many points.
    Auto { points: usize },
    /// Geometric grid with explicit bounds; a missing bound falls back to the
    /// automatic one.
    Bounds {
        min: Option<f64>,
        max: Option<f64>,
        points: usize,
    },
    Explicit(EpsilonGrid),
}

impl Default for GridChoice {
    fn default() -> Self {
        GridChoice::Auto { points: 24 }
    }
}

impl GridChoice {
    pub fn resolve(&self, traj: &Trajectory) -> Result<EpsilonGrid> {
        match self {
            GridChoice::Auto { points } => default_grid(traj, *points),
            GridChoice::Bounds { min, max, points } => {
                let (lo, hi) = match (min, max) {
                    (Some(lo), Some(hi)) => (*lo, *hi),
                    _ => {
                        let auto = default_grid(traj, (*points).max(8))?;
                        let s = auto.as_slice();
                        (min.unwrap_or(s[0]), max.unwrap_or(s[s.len() - 1]))
                    }
                };
                EpsilonGrid::geometric(lo, hi, *points)
            }
            GridChoice::Explicit(g) => Ok(g.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    pub grid: GridChoice,
    pub band: ScalingBand,
    pub slope_lower: f64,
    pub slope_upper: f64,
    /// Points used by the no-scaling-range fallback fit.
    pub fallback_points: usize,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            grid: GridChoice::default(),
            band: ScalingBand::default(),
            slope_lower: SLOPE_LOWER,
            slope_upper: SLOPE_UPPER,
            fallback_points: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    Diffusive,
    NonDiffusive,
    Indeterminate,
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Class::Diffusive => "DIFFUSIVE",
            Class::NonDiffusive => "NON-DIFFUSIVE",
            Class::Indeterminate => "INDETERMINATE",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    SlopeInBand,
    SlopeOutOfBand,
    NoScalingRange,
    DegenerateSignal,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::SlopeInBand => "slope-in-band",
            Reason::SlopeOutOfBand => "slope-out-of-band",
            Reason::NoScalingRange => "no-scaling-range",
            Reason::DegenerateSignal => "degenerate-signal",
        }
    }
}

/// Where the fitted range came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeSource {
    /// A K(ε) ≈ 1 run.
    ScalingBand,
    /// No run qualified; fitted on the largest counts instead.
    Fallback,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub class: Class,
    pub reason: Reason,
    pub slope_fit: Option<SlopeFit>,
    pub range_source: Option<RangeSource>,
    /// `None` only for degenerate input.
    pub profile: Option<ExcursionProfile>,
}

impl Verdict {
    pub fn slope(&self) -> Option<f64> {
        self.slope_fit.map(|f| f.slope)
    }

    fn degenerate() -> Self {
        Verdict {
            class: Class::Indeterminate,
            reason: Reason::DegenerateSignal,
            slope_fit: None,
            range_source: None,
            profile: None,
        }
    }
}

/// True when the quadratic variation is indistinguishable from rounding noise.
pub fn is_degenerate(traj: &Trajectory) -> bool {
    let range = traj.range();
    if range <= 0.0 {
        return true;
    }
    let floor = (DEGENERATE_RELATIVE_FLOOR * range).powi(2) * traj.len() as f64;
    quadratic_variation(traj) < floor
}

/// Run the full test on one series.
///
/// Degenerate input yields an `Indeterminate` verdict rather than an error;
/// errors are reserved for invalid configuration.
pub fn classify(traj: &Trajectory, config: &ClassifierConfig) -> Result<Verdict> {
    if is_degenerate(traj) {
        return Ok(Verdict::degenerate());
    }
    let grid = config.grid.resolve(traj)?;
    let profile = excursion_profile(traj, &grid)?;

    let (range, source) = match select_scaling_range_with(&profile, &config.band) {
        Some(r) => (r, RangeSource::ScalingBand),
        None => match fallback_range(&profile, config) {
            Some(r) => (r, RangeSource::Fallback),
            None => {
                return Ok(Verdict {
                    class: Class::NonDiffusive,
                    reason: Reason::NoScalingRange,
                    slope_fit: None,
                    range_source: None,
                    profile: Some(profile),
                })
            }
        },
    };
    let fit = fit_slope(&profile, range)?;
    let in_band = fit.slope >= config.slope_lower && fit.slope <= config.slope_upper;
    let (class, reason) = if in_band {
        (Class::Diffusive, Reason::SlopeInBand)
    } else {
        (Class::NonDiffusive, Reason::SlopeOutOfBand)
    };
    Ok(Verdict {
        class,
        reason,
        slope_fit: Some(fit),
        range_source: Some(source),
        profile: Some(profile),
    })
}

/// The `fallback_points` indices with the largest reliable counts.
///
/// Counts are nonincreasing in ε, so the selection is the contiguous low end
/// of the grid; ties go to the lower index.
fn fallback_range(profile: &ExcursionProfile, config: &ClassifierConfig) -> Option<(usize, usize)> {
    let want = config.fallback_points.max(2);
    let mut idx: Vec<usize> = (0..profile.len())
        .filter(|&i| profile.n_emp[i] >= config.band.min_count)
        .collect();
    if idx.len() < want {
        return None;
    }
    idx.sort_by(|&a, &b| profile.n_emp[b].cmp(&profile.n_emp[a]).then(a.cmp(&b)));
    idx.truncate(want);
    let lo = *idx.iter().min()?;
    let hi = *idx.iter().max()?;
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn traj(v: &[f64]) -> Trajectory {
        Trajectory::new(v.to_vec(), 1.0).unwrap()
    }

    fn profile_from(eps: Vec<f64>, n_emp: Vec<u64>, k: Vec<f64>) -> ExcursionProfile {
        let n = eps.len();
        ExcursionProfile {
            grid: EpsilonGrid::new(eps).unwrap(),
            n_emp,
            n_theory: vec![1.0; n],
            k_ratio: k,
            qv: 1.0,
        }
    }

    #[test]
    fn quadratic_variation_hand_values() {
        assert_eq!(quadratic_variation(&traj(&[5.0, 5.0, 5.0, 5.0])), 0.0);
        assert_eq!(quadratic_variation(&traj(&[0.0, 1.0, 0.0, 1.0])), 3.0);
    }

    #[test]
    fn count_hand_fixtures() {
        let mono = traj(&[0.0, 1.0, 2.0, 3.0, 4.0]);
        for eps in [0.1, 0.5, 1.0, 2.0, 4.0] {
            assert_eq!(count_excursions(&mono, eps).unwrap(), 0);
        }
        assert_eq!(count_excursions(&traj(&[0.0, 1.0, 0.0, 1.0, 0.0]), 0.5).unwrap(), 2);
        // threshold larger than any move
        assert_eq!(count_excursions(&traj(&[0.0, 1.0, 0.0, 1.0, 0.0]), 1.5).unwrap(), 0);
    }

    #[test]
    fn count_rejects_bad_epsilon() {
        let t = traj(&[0.0, 1.0]);
        assert!(count_excursions(&t, 0.0).is_err());
        assert!(count_excursions(&t, -1.0).is_err());
        assert!(count_excursions(&t, f64::NAN).is_err());
    }

    #[test]
    fn theoretical_counts_hand_values() {
        let g = EpsilonGrid::new(vec![0.1, 0.5, 1.0, 2.0]).unwrap();
        let n = theoretical_counts(2.0, &g).unwrap();
        assert_relative_eq!(n[0], 100.0, max_relative = 1e-12);
        assert_eq!(n[2], 1.0);
        assert!(n.windows(2).all(|w| w[1] < w[0]));
        assert!(matches!(
            theoretical_counts(0.0, &g),
            Err(Error::DegenerateSignal(_))
        ));
    }

    #[test]
    fn profile_hand_values() {
        // grid needs four points; only the first is checked against the hand count
        let g = EpsilonGrid::new(vec![0.5, 0.6, 0.7, 0.8]).unwrap();
        let p = excursion_profile(&traj(&[0.0, 1.0, 0.0, 1.0, 0.0]), &g).unwrap();
        assert_eq!(p.qv, 4.0);
        assert_eq!(p.n_emp[0], 2);
        assert_eq!(p.n_theory[0], 8.0);
        assert_eq!(p.k_ratio[0], 0.25);
    }

    #[test]
    fn scaling_range_picks_the_in_band_run() {
        let eps = vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        let p = profile_from(eps.clone(), vec![50; 6], vec![0.1, 0.9, 1.1, 1.0, 0.95, 8.0]);
        assert_eq!(select_scaling_range(&p), Some((1, 4)));

        let p = profile_from(eps.clone(), vec![50; 6], vec![1.0; 6]);
        assert_eq!(select_scaling_range(&p), Some((0, 5)));

        let p = profile_from(eps.clone(), vec![50; 6], vec![0.01, 0.02, 0.01, 0.005, 0.01, 0.02]);
        assert_eq!(select_scaling_range(&p), None);
    }

    #[test]
    fn scaling_range_respects_min_count_and_ties() {
        let eps: Vec<f64> = (1..=9).map(|i| i as f64).collect();
        // low counts break the run at index 2
        let p = profile_from(eps.clone(), vec![50, 50, 4, 50, 50, 50, 50, 50, 50], vec![1.0; 9]);
        assert_eq!(select_scaling_range(&p), Some((3, 8)));

        // two runs of length 4; the second sits closer to K = 1
        let k = vec![1.5, 1.5, 1.5, 1.5, 9.0, 1.0, 1.05, 1.0, 1.0];
        let p = profile_from(eps.clone(), vec![50; 9], k);
        assert_eq!(select_scaling_range(&p), Some((5, 8)));

        // identical runs: lowest start wins
        let k = vec![1.0, 1.0, 1.0, 1.0, 9.0, 1.0, 1.0, 1.0, 1.0];
        let p = profile_from(eps, vec![50; 9], k);
        assert_eq!(select_scaling_range(&p), Some((0, 3)));
    }

    #[test]
    fn fit_slope_rounded_power_law() {
        let g = EpsilonGrid::geometric(0.05, 0.5, 12).unwrap();
        let n: Vec<u64> = g.as_slice().iter().map(|e| (100.0 / (e * e)).round() as u64).collect();
        let p = profile_from(g.as_slice().to_vec(), n, vec![1.0; 12]);
        let fit = fit_slope(&p, (0, 11)).unwrap();
        assert!((fit.slope + 2.0).abs() <= 0.02, "slope {}", fit.slope);
        assert_eq!(fit.n_points, 12);
    }

    #[test]
    fn fit_slope_flat_and_zero_counts() {
        let eps = vec![0.1, 0.2, 0.3, 0.4, 0.5];
        let p = profile_from(eps.clone(), vec![7; 5], vec![1.0; 5]);
        let fit = fit_slope(&p, (0, 4)).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r_squared, 1.0);

        let p = profile_from(eps, vec![7, 7, 0, 7, 7], vec![1.0; 5]);
        assert!(matches!(fit_slope(&p, (0, 4)), Err(Error::RangeRejected(_))));
        assert!(fit_slope(&p, (0, 1)).is_ok());
    }

    #[test]
    fn default_grid_formula() {
        // 0..1 ramp in steps of 0.001: median |dx| = 0.001, range 1
        let v: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.001).collect();
        let g = default_grid(&Trajectory::new(v, 1.0).unwrap(), 24).unwrap();
        let s = g.as_slice();
        assert_eq!(s.len(), 24);
        assert_relative_eq!(s[0], 0.002, max_relative = 1e-9);
        assert_relative_eq!(s[23], 0.25, max_relative = 1e-12);
        let r0 = s[1] / s[0];
        for w in s.windows(2) {
            assert_relative_eq!(w[1] / w[0], r0, max_relative = 1e-12);
        }
    }

    #[test]
    fn default_grid_errors() {
        assert!(matches!(
            default_grid(&traj(&[3.0; 10]), 24),
            Err(Error::DegenerateSignal(_))
        ));
        assert!(default_grid(&traj(&[0.0, 1.0, 0.0]), 4).is_err());
    }

    #[test]
    fn default_grid_repairs_crossed_bounds() {
        // median |dx| = 1 puts the natural lower bound at 2, above range/4
        let g = default_grid(&traj(&[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]), 8).unwrap();
        let s = g.as_slice();
        assert_relative_eq!(s[7], 0.25);
        assert_relative_eq!(s[7] / s[0], INVERTED_GRID_SPAN, max_relative = 1e-12);
    }

    #[test]
    fn grid_validation() {
        assert!(EpsilonGrid::new(vec![0.1, 0.2, 0.3]).is_err());
        assert!(EpsilonGrid::new(vec![0.1, 0.2, 0.2, 0.3]).is_err());
        assert!(EpsilonGrid::new(vec![0.0, 0.1, 0.2, 0.3]).is_err());
        assert!(EpsilonGrid::geometric(1.0, 0.5, 8).is_err());
    }

    #[test]
    fn classify_constant_is_indeterminate() {
        let v = classify(&traj(&[2.0; 100]), &ClassifierConfig::default()).unwrap();
        assert_eq!(v.class, Class::Indeterminate);
        assert_eq!(v.reason, Reason::DegenerateSignal);
    }

    #[test]
    fn classify_sine_is_non_diffusive() {
        let n = 100_000;
        let dt = 1e-3;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * dt).cos()).collect();
        let verdict = classify(&Trajectory::new(v, dt).unwrap(), &ClassifierConfig::default()).unwrap();
        assert_eq!(verdict.class, Class::NonDiffusive);
        let p = verdict.profile.as_ref().unwrap();
        assert!(p.k_ratio[0] < 0.1, "K at smallest eps = {}", p.k_ratio[0]);
        assert!(verdict.slope().unwrap() > -1.0);
    }
}
