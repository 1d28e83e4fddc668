//! LPR estimation from first-stage classifier scores.
//!
//! Two estimators:
//!
//! * the definitional route: empirical precision-above-threshold points
//!   `(u, G(u))` on the percentile axis, fit by a weighted local quadratic
//!   smoother that yields `G` and `dG/du` jointly, giving
//!   `LPR(u) = G - (1 - u) dG`;
//! * the plug-in route: `LPR(s) = pi * f1(s) / f(s)`, the local true
//!   discovery rate, from class-conditional densities (analytic Beta forms
//!   or Gaussian kernel density estimates).
//!
//! Estimates outside `[0, 1]` are clipped. Fitting is per-label independent
//! and fitted curves are immutable.

use rayon::prelude::*;
use statrs::distribution::{Beta as BetaDist, Continuous};

use crate::error::{Error, Result};

/// Minimum design points drawn into a local fit window.
const MIN_WINDOW_POINTS: usize = 5;

/// Scores, truth bits, and prevalence for one label.
#[derive(Debug, Clone)]
pub struct ScoreColumn {
    label_id: usize,
    scores: Vec<f64>,
    truth: Vec<bool>,
    prevalence: f64,
}

impl ScoreColumn {
    pub fn new(label_id: usize, scores: Vec<f64>, truth: Vec<bool>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::EmptyInput("score column"));
        }
        if scores.len() != truth.len() {
            return Err(Error::LengthMismatch {
                expected: scores.len(),
                got: truth.len(),
            });
        }
        if let Some((i, &v)) = scores.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::BadScore {
                sample: i,
                label: label_id,
                value: v,
            });
        }
        let prevalence = truth.iter().filter(|&&b| b).count() as f64 / truth.len() as f64;
        Ok(Self {
            label_id,
            scores,
            truth,
            prevalence,
        })
    }

    pub fn label_id(&self) -> usize {
        self.label_id
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn truth(&self) -> &[bool] {
        &self.truth
    }

    pub fn prevalence(&self) -> f64 {
        self.prevalence
    }

    pub fn positives(&self) -> usize {
        self.truth.iter().filter(|&&b| b).count()
    }

    pub fn negatives(&self) -> usize {
        self.truth.len() - self.positives()
    }

    /// Bootstrap resample of the column. The seedable hook for bagged
    /// refits; the default fit does not resample.
    pub fn resample(&self, seed: u64) -> ScoreColumn {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = self.scores.len();
        let mut scores = Vec::with_capacity(m);
        let mut truth = Vec::with_capacity(m);
        for _ in 0..m {
            let j = rng.gen_range(0..m);
            scores.push(self.scores[j]);
            truth.push(self.truth[j]);
        }
        ScoreColumn::new(self.label_id, scores, truth).expect("resample of a valid column")
    }
}

/// Fitted precision curve on the percentile axis, with the design data kept
/// so arbitrary points evaluate through the same local fit.
#[derive(Debug, Clone)]
pub struct PrecisionCurve {
    label_id: usize,
    bandwidth: f64,
    /// Design: percentile, empirical precision above, availability weight.
    design_u: Vec<f64>,
    design_g: Vec<f64>,
    design_w: Vec<f64>,
    /// Sorted training scores for percentile mapping of new scores.
    sorted_scores: Vec<f64>,
    grid_u: Vec<f64>,
    grid_g: Vec<f64>,
    grid_dg: Vec<f64>,
    grid_lpr: Vec<f64>,
}

/// Fit the precision-above-threshold points of a column by weighted local
/// quadratic regression. Requires at least two positives and two negatives.
pub fn fit_precision_curve(
    col: &ScoreColumn,
    bandwidth: Option<f64>,
    grid_size: usize,
) -> Result<PrecisionCurve> {
    assert!(grid_size >= 10, "grid_size must be at least 10");
    let positives = col.positives();
    let negatives = col.negatives();
    if positives < 2 || negatives < 2 {
        return Err(Error::DegenerateClass {
            label: col.label_id,
            positives,
            negatives,
        });
    }
    if let Some(h) = bandwidth {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::Bandwidth(h));
        }
    }

    let m = col.scores.len();
    let mut by_score: Vec<(f64, bool)> = col
        .scores
        .iter()
        .copied()
        .zip(col.truth.iter().copied())
        .collect();
    by_score.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite scores"));
    let sorted_scores: Vec<f64> = by_score.iter().map(|&(s, _)| s).collect();

    // One design point per distinct score (ties share a percentile), plus
    // the u = 0 point where everything sits above the threshold. The top
    // score is skipped: no data above it.
    let total_pos = positives as f64;
    let mut design_u = vec![0.0];
    let mut design_g = vec![col.prevalence];
    let mut design_w = vec![m as f64];
    let mut i = 0;
    let mut pos_below = 0usize;
    while i < m {
        let mut j = i;
        let mut pos_here = 0usize;
        while j < m && by_score[j].0 == by_score[i].0 {
            pos_here += usize::from(by_score[j].1);
            j += 1;
        }
        pos_below += pos_here;
        if j < m {
            let above = (m - j) as f64;
            design_u.push(j as f64 / m as f64);
            design_g.push((total_pos - pos_below as f64) / above);
            design_w.push(above);
        }
        i = j;
    }

    let bandwidth = bandwidth.unwrap_or_else(|| rule_of_thumb_bandwidth(&design_u));
    let mut curve = PrecisionCurve {
        label_id: col.label_id,
        bandwidth,
        design_u,
        design_g,
        design_w,
        sorted_scores,
        grid_u: Vec::new(),
        grid_g: Vec::new(),
        grid_dg: Vec::new(),
        grid_lpr: Vec::new(),
    };
    for i in 0..grid_size {
        let u = i as f64 / (grid_size - 1) as f64;
        let (g, dg, lpr) = curve.fit_at(u);
        curve.grid_u.push(u);
        curve.grid_g.push(g);
        curve.grid_dg.push(dg);
        curve.grid_lpr.push(lpr);
    }
    Ok(curve)
}

/// Percentile-axis bandwidth: `0.9 * min(sd, IQR / 1.34) * p^(-1/5)` over
/// the design points.
fn rule_of_thumb_bandwidth(us: &[f64]) -> f64 {
    let p = us.len() as f64;
    let mean = us.iter().sum::<f64>() / p;
    let var = us.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / p;
    let sd = var.sqrt();
    let q1 = quantile_sorted(us, 0.25);
    let q3 = quantile_sorted(us, 0.75);
    let iqr_scale = (q3 - q1) / 1.34;
    let spread = if iqr_scale > 0.0 {
        sd.min(iqr_scale)
    } else {
        sd
    };
    let h = 0.9 * spread * p.powf(-0.2);
    if h > 0.0 {
        h
    } else {
        0.5
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let idx = q * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    let frac = idx - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}


impl PrecisionCurve {
    pub fn label_id(&self) -> usize {
        self.label_id
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn grid_u(&self) -> &[f64] {
        &self.grid_u
    }

    pub fn grid_g(&self) -> &[f64] {
        &self.grid_g
    }

    pub fn grid_dg(&self) -> &[f64] {
        &self.grid_dg
    }

    pub fn grid_lpr(&self) -> &[f64] {
        &self.grid_lpr
    }

    /// Weighted local quadratic fit at `u0` of the joint mass
    /// `H(u) = (1 - u) G(u)`, whose negative slope is the LPR. Fitting the
    /// mass rather than `G` itself keeps the estimator exact wherever the
    /// precision curve makes the mass locally polynomial and avoids the
    /// derivative blow-up of one-sided boundary windows. Returns the
    /// centered coefficients `(H, H', H'')`.
    fn local_fit(&self, u0: f64) -> (f64, f64, f64) {
        let us = &self.design_u;
        let h = self.bandwidth;
        let mut lo = us.partition_point(|&u| u < u0 - h);
        let mut hi = us.partition_point(|&u| u <= u0 + h);
        let min_pts = MIN_WINDOW_POINTS.min(us.len());
        while hi - lo < min_pts {
            let left_gap = if lo > 0 { u0 - us[lo - 1] } else { f64::INFINITY };
            let right_gap = if hi < us.len() {
                us[hi] - u0
            } else {
                f64::INFINITY
            };
            if left_gap <= right_gap {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let mut h_eff = h;
        for j in lo..hi {
            h_eff = h_eff.max((us[j] - u0).abs() * (1.0 + 1e-9));
        }

        // Weighted moments for the centered quadratic design.
        let mut s = [0.0f64; 5];
        let mut t = [0.0f64; 3];
        for j in lo..hi {
            let x = us[j] - u0;
            let k = 1.0 - (x / h_eff) * (x / h_eff);
            if k <= 0.0 {
                continue;
            }
            let w = 0.75 * k * self.design_w[j];
            let y = (1.0 - us[j]) * self.design_g[j];
            let mut xp = w;
            for power in 0..5 {
                s[power] += xp;
                if power < 3 {
                    t[power] += xp * y;
                }
                xp *= x;
            }
        }
        let a = [
            [s[0], s[1], s[2]],
            [s[1], s[2], s[3]],
            [s[2], s[3], s[4]],
        ];
        match solve3(a, t) {
            Some(beta) => (beta[0], beta[1], beta[2]),
            None => {
                // Degenerate window: weighted mean, flat slope.
                let v = if s[0] > 0.0 { t[0] / s[0] } else { 0.0 };
                (v, 0.0, 0.0)
            }
        }
    }

    /// `(G, dG, LPR)` at a percentile through the local fit;
    /// `LPR = G - (1 - u) dG`, clipped into [0, 1].
    fn fit_at(&self, u: f64) -> (f64, f64, f64) {
        let (h0, h1, h2) = self.local_fit(u);
        let lpr = (-h1).clamp(0.0, 1.0);
        let (g_raw, dg) = if u < 1.0 - 1e-9 {
            let g_raw = h0 / (1.0 - u);
            (g_raw, (h1 + g_raw) / (1.0 - u))
        } else {
            // Limits at u = 1: G = -H', dG = -H''/2.
            (-h1, -h2 / 2.0)
        };
        (g_raw.clamp(0.0, 1.0), dg, lpr)
    }

    /// G and dG at an arbitrary percentile through the same local fit.
    pub fn g_at(&self, u: f64) -> (f64, f64) {
        let (g, dg, _) = self.fit_at(u);
        (g, dg)
    }

    /// LPR at a percentile, clipped to [0, 1].
    pub fn lpr_at(&self, u: f64) -> f64 {
        self.fit_at(u).2
    }

    /// Empirical percentile of a score against the training scores; tied
    /// scores share the percentile of their last occurrence.
    pub fn percentile(&self, score: f64) -> f64 {
        let below_or_equal = self.sorted_scores.partition_point(|&x| x <= score);
        below_or_equal as f64 / self.sorted_scores.len() as f64
    }

    /// LPR of a new score: percentile mapping followed by the local fit.
    pub fn lpr_of_score(&self, score: f64) -> f64 {
        self.lpr_at(self.percentile(score))
    }
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let factor = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in row + 1..3 {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
        if !x[row].is_finite() {
            return None;
        }
    }
    Some(x)
}

/// Monotonicity diagnostic over the fitted LPR grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    /// Largest `lpr[i] - lpr[j]` over pairs `i < j` with `lpr[i] > lpr[j]`.
    pub max_violation: f64,
    /// Grid index pair attaining the largest violation.
    pub worst_pair: Option<(usize, usize)>,
    /// Fraction of ordered grid pairs violating monotonicity.
    pub violating_fraction: f64,
}

/// Scan the fitted LPR grid for monotonicity violations. Diagnostic only;
/// never mutates the curve. Decreases within float dust (1e-12) do not
/// count as violations.
pub fn check_monotonicity(curve: &PrecisionCurve) -> MonotonicityReport {
    monotonicity_of(&curve.grid_lpr)
}

pub(crate) fn monotonicity_of(lpr: &[f64]) -> MonotonicityReport {
    const DUST: f64 = 1e-12;
    let n = lpr.len();
    let mut max_violation = 0.0f64;
    let mut worst_pair = None;
    let mut violations = 0usize;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            pairs += 1;
            let gap = lpr[i] - lpr[j];
            if gap > DUST {
                violations += 1;
                if gap > max_violation {
                    max_violation = gap;
                    worst_pair = Some((i, j));
                }
            }
        }
    }
    MonotonicityReport {
        max_violation,
        worst_pair,
        violating_fraction: if pairs == 0 {
            0.0
        } else {
            violations as f64 / pairs as f64
        },
    }
}

/// Class-conditional score density.
#[derive(Debug, Clone)]
pub enum Density {
    Beta { alpha: f64, beta: f64 },
    Kde { points: Vec<f64>, bandwidth: f64 },
}

impl Density {
    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Density::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&x) {
                    0.0
                } else {
                    BetaDist::new(*alpha, *beta)
                        .expect("valid Beta parameters")
                        .pdf(x)
                }
            }
            Density::Kde { points, bandwidth } => {
                let h = *bandwidth;
                let norm = (2.0 * std::f64::consts::PI).sqrt() * h * points.len() as f64;
                points
                    .iter()
                    .map(|&p| (-0.5 * ((x - p) / h).powi(2)).exp())
                    .sum::<f64>()
                    / norm
            }
        }
    }

    /// Integration support for quadrature checks.
    fn support(&self) -> (f64, f64) {
        match self {
            Density::Beta { .. } => (0.0, 1.0),
            Density::Kde { points, bandwidth } => {
                let lo = points.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo - 6.0 * bandwidth, hi + 6.0 * bandwidth)
            }
        }
    }

    /// Simpson-rule mass over the support.
    pub fn total_mass(&self, intervals: usize) -> f64 {
        let (lo, hi) = self.support();
        let n = intervals * 2;
        let step = (hi - lo) / n as f64;
        let mut acc = self.pdf(lo) + self.pdf(hi);
        for i in 1..n {
            let x = lo + step * i as f64;
            acc += self.pdf(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * step / 3.0
    }
}

/// Score mixture for one label: positive and negative class densities with
/// the class prevalence.
#[derive(Debug, Clone)]
pub struct DensityModel {
    pub label_id: usize,
    pub prevalence: f64,
    pub f1: Density,
    pub f0: Density,
}

impl DensityModel {
    /// Kernel density estimates of both class densities from a column.
    pub fn fit_kde(col: &ScoreColumn) -> Result<Self> {
        let positives: Vec<f64> = col
            .scores
            .iter()
            .zip(&col.truth)
            .filter(|(_, &t)| t)
            .map(|(&s, _)| s)
            .collect();
        let negatives: Vec<f64> = col
            .scores
            .iter()
            .zip(&col.truth)
            .filter(|(_, &t)| !t)
            .map(|(&s, _)| s)
            .collect();
        if positives.len() < 2 || negatives.len() < 2 {
            return Err(Error::DegenerateClass {
                label: col.label_id,
                positives: positives.len(),
                negatives: negatives.len(),
            });
        }
        Ok(Self {
            label_id: col.label_id,
            prevalence: col.prevalence,
            f1: kde_of(positives),
            f0: kde_of(negatives),
        })
    }

    /// Mixture density `pi f1 + (1 - pi) f0`.
    pub fn mixture_pdf(&self, s: f64) -> f64 {
        self.prevalence * self.f1.pdf(s) + (1.0 - self.prevalence) * self.f0.pdf(s)
    }

    /// Check that both class densities integrate to one.
    pub fn validate(&self, tol: f64) -> bool {
        (self.f1.total_mass(2000) - 1.0).abs() <= tol
            && (self.f0.total_mass(2000) - 1.0).abs() <= tol
    }
}

fn kde_of(points: Vec<f64>) -> Density {
    let m = points.len() as f64;
    let mean = points.iter().sum::<f64>() / m;
    let var = points.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / m;
    let sd = var.sqrt();
    let mut sorted = points.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let iqr_scale = (quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25)) / 1.34;
    let spread = if iqr_scale > 0.0 && iqr_scale < sd {
        iqr_scale
    } else {
        sd
    };
    let bandwidth = (0.9 * spread * m.powf(-0.2)).max(1e-6);
    Density::Kde { points, bandwidth }
}

/// Local true discovery rate `pi f1(s) / f(s)`, clipped to [0, 1].
pub fn lpr_from_densities(model: &DensityModel, s: f64) -> Result<f64> {
    let f = model.mixture_pdf(s);
    if f == 0.0 {
        return Err(Error::ZeroDensity(s));
    }
    Ok((model.prevalence * model.f1.pdf(s) / f).clamp(0.0, 1.0))
}

/// Fitted curves for all labels; applies them to held-out score tables.
#[derive(Debug, Clone)]
pub struct LprEstimator {
    curves: Vec<Option<PrecisionCurve>>,
}

impl LprEstimator {
    /// Fit one curve per column (in parallel; fitting is per-label
    /// independent). `label_count` sizes the table; columns may be sparse.
    pub fn fit(
        columns: &[ScoreColumn],
        label_count: usize,
        bandwidth: Option<f64>,
        grid_size: usize,
    ) -> Result<Self> {
        let fitted: Vec<(usize, PrecisionCurve)> = columns
            .par_iter()
            .map(|col| fit_precision_curve(col, bandwidth, grid_size).map(|c| (col.label_id, c)))
            .collect::<Result<_>>()?;
        let mut curves = vec![None; label_count];
        for (label, curve) in fitted {
            curves[label] = Some(curve);
        }
        Ok(Self { curves })
    }

    pub fn curve(&self, label: usize) -> Result<&PrecisionCurve> {
        self.curves
            .get(label)
            .and_then(Option::as_ref)
            .ok_or(Error::UnfittedLabel(label))
    }

    /// Map a dense score table (layout `sample * K + label`) through the
    /// fitted curves into LPR values.
    pub fn apply_dense(&self, scores: &[f64], label_count: usize) -> Result<Vec<f64>> {
        assert_eq!(scores.len() % label_count.max(1), 0);
        let mut out = Vec::with_capacity(scores.len());
        for (i, &s) in scores.iter().enumerate() {
            let curve = self.curve(i % label_count)?;
            out.push(curve.lpr_of_score(s));
        }
        Ok(out)
    }
}
