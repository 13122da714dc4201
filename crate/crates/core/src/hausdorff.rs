//! Parabolic geometry of spacetime point sets: the metric
//! `d = max(|x - y|, |t - s|^{1/2})`, cylinder coverings, the 5r Vitali subcover,
//! and covering-number dimension estimates.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{CnsError, Result};
use crate::fields::dyadic_exponent;
use crate::regularity::{FlagResult, FlagSet};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacetimePoint {
    pub x: [f64; 3],
    pub t: f64,
}

impl SpacetimePoint {
    pub fn new(x: [f64; 3], t: f64) -> Self {
        SpacetimePoint { x, t }
    }
}

impl From<&FlagResult> for SpacetimePoint {
    fn from(f: &FlagResult) -> Self {
        SpacetimePoint::new(f.center, f.t0)
    }
}

/// Flagged points of a set, in its order.
pub fn flag_points(flags: &FlagSet) -> Vec<SpacetimePoint> {
    flags.entries.iter().map(SpacetimePoint::from).collect()
}

/// Spatial distance, with minimum-image convention when `period` is given.
pub fn spatial_distance(x: [f64; 3], y: [f64; 3], period: Option<f64>) -> f64 {
    let mut s = 0.0;
    for a in 0..3 {
        let mut d = (x[a] - y[a]).abs();
        if let Some(l) = period {
            d = d.rem_euclid(l);
            d = d.min(l - d);
        }
        s += d * d;
    }
    s.sqrt()
}

pub fn parabolic_distance(a: &SpacetimePoint, b: &SpacetimePoint, period: Option<f64>) -> f64 {
    spatial_distance(a.x, b.x, period).max((a.t - b.t).abs().sqrt())
}

/// Open cylinder `B(center, r) x (t_lo, t_hi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StCylinder {
    pub center: [f64; 3],
    pub r: f64,
    pub t_lo: f64,
    pub t_hi: f64,
}

impl StCylinder {
    /// `B(x, r) x (t - r^2, t)`.
    pub fn backward(z: SpacetimePoint, r: f64) -> Self {
        StCylinder {
            center: z.x,
            r,
            t_lo: z.t - r * r,
            t_hi: z.t,
        }
    }

    /// `B(x, r) x (t - 7 r^2 / 8, t + r^2 / 8)`.
    pub fn shifted(z: SpacetimePoint, r: f64) -> Self {
        StCylinder {
            center: z.x,
            r,
            t_lo: z.t - 0.875 * r * r,
            t_hi: z.t + 0.125 * r * r,
        }
    }

    pub fn t_mid(&self) -> f64 {
        0.5 * (self.t_lo + self.t_hi)
    }

    /// Radius `k r`, time interval `k^2` times as long about the same midpoint.
    /// Dilating about the midpoint keeps `5x` containment valid for cylinders whose
    /// tops differ, which dilating about the top does not.
    pub fn dilate(&self, k: f64) -> Self {
        let m = self.t_mid();
        let half = 0.5 * (self.t_hi - self.t_lo) * k * k;
        StCylinder {
            center: self.center,
            r: k * self.r,
            t_lo: m - half,
            t_hi: m + half,
        }
    }

    /// Whether the open cylinders share a point.
    pub fn intersects(&self, o: &StCylinder, period: Option<f64>) -> bool {
        spatial_distance(self.center, o.center, period) < self.r + o.r
            && self.t_lo < o.t_hi
            && o.t_lo < self.t_hi
    }

    /// Whether `o` lies inside `self`.
    pub fn contains(&self, o: &StCylinder, period: Option<f64>) -> bool {
        spatial_distance(self.center, o.center, period) + o.r <= self.r
            && self.t_lo <= o.t_lo
            && o.t_hi <= self.t_hi
    }

    pub fn contains_point(&self, z: &SpacetimePoint, period: Option<f64>) -> bool {
        spatial_distance(self.center, z.x, period) < self.r && self.t_lo < z.t && z.t < self.t_hi
    }
}

/// Indices of a pairwise disjoint subfamily, chosen greedily by decreasing radius
/// (ties by index). Every input cylinder meets a selected one of no smaller radius,
/// hence lies in its `dilate(5)` when all time spans are `r^2` long.
pub fn vitali_subcover(cyls: &[StCylinder], period: Option<f64>) -> Vec<usize> {
    let mut order: Vec<usize> = (0..cyls.len()).collect();
    order.sort_by(|&a, &b| cyls[b].r.total_cmp(&cyls[a].r).then(a.cmp(&b)));
    let mut chosen: Vec<usize> = Vec::new();
    for i in order {
        if chosen.iter().all(|&j| !cyls[i].intersects(&cyls[j], period)) {
            chosen.push(i);
        }
    }
    chosen
}

/// Check disjointness of the selection and `5x` containment of every input.
pub fn verify_vitali(cyls: &[StCylinder], chosen: &[usize], period: Option<f64>) -> bool {
    for (a, &i) in chosen.iter().enumerate() {
        for &j in &chosen[a + 1..] {
            if cyls[i].intersects(&cyls[j], period) {
                return false;
            }
        }
    }
    cyls.iter().all(|c| {
        chosen
            .iter()
            .any(|&j| cyls[j].dilate(5.0).contains(c, period))
    })
}

/// Shifted cylinders `Q*(z, r)` at each point, checking `Q(z, r/2) ⊂ Q*(z, r)`.
pub fn shifted_cover(points: &[SpacetimePoint], r: f64) -> Result<Vec<StCylinder>> {
    if !(r.is_finite() && r > 0.0) {
        return Err(CnsError::InvalidParams(format!("cover radius {r} must be positive")));
    }
    points
        .iter()
        .map(|&z| {
            let q = StCylinder::shifted(z, r);
            if !q.contains(&StCylinder::backward(z, 0.5 * r), None) {
                return Err(CnsError::Degenerate(format!(
                    "containment fails at t = {} with r = {r}",
                    z.t
                )));
            }
            Ok(q)
        })
        .collect()
}

/// How covering numbers are counted at each scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CountMethod {
    /// Occupied boxes of side `r` in space and `r^2` in time, anchored at the
    /// origin. Nested across dyadic scales, so counts are monotone in `r` and
    /// under inclusion of point sets.
    #[default]
    BoxCount,
    /// Pick the first uncovered point, cover its parabolic `r`-ball, repeat.
    Greedy,
}

/// Direction of `N_j r_j^alpha` as the scale is refined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureTrend {
    Decreasing,
    Flat,
    Increasing,
}

impl MeasureTrend {
    pub fn name(&self) -> &'static str {
        match self {
            MeasureTrend::Decreasing => "decreasing",
            MeasureTrend::Flat => "flat",
            MeasureTrend::Increasing => "increasing",
        }
    }
}

/// Covering numbers across scales and the fitted dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringEstimate {
    /// Decreasing.
    pub scales: Vec<f64>,
    pub counts: Vec<usize>,
    /// Least-squares slope of `ln N` against `ln(1/r)` over the finest `fit_len` scales.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of that fit.
    pub residual: f64,
    pub fit_len: usize,
}

/// Number of finest scales used in the fit.
pub const FIT_SCALES: usize = 3;

impl CoveringEstimate {
    /// `N r^alpha` at the finest scale.
    pub fn measure_upper(&self, alpha: f64) -> f64 {
        let j = self.scales.len() - 1;
        self.counts[j] as f64 * self.scales[j].powf(alpha)
    }

    /// `N_j r_j^alpha` at every scale, coarse to fine.
    pub fn measure_series(&self, alpha: f64) -> Vec<f64> {
        self.scales
            .iter()
            .zip(&self.counts)
            .map(|(r, &n)| n as f64 * r.powf(alpha))
            .collect()
    }

    /// Sign of the fitted exponent `slope - alpha` over the fit window, with a band
    /// of `tol` around zero classed as flat.
    pub fn measure_trend(&self, alpha: f64, tol: f64) -> MeasureTrend {
        let e = self.slope - alpha;
        if e < -tol {
            MeasureTrend::Decreasing
        } else if e > tol {
            MeasureTrend::Increasing
        } else {
            MeasureTrend::Flat
        }
    }

    pub const CSV_HEADER: &'static str = "r,log_inv_r,count,log_count,fit_line";

    /// One row per scale plus the fitted line value at each.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for (r, &n) in self.scales.iter().zip(&self.counts) {
            let x = (1.0 / r).ln();
            s.push_str(&format!(
                "{:e},{:e},{},{:e},{:e}\n",
                r,
                x,
                n,
                (n as f64).ln(),
                self.intercept + self.slope * x
            ));
        }
        s
    }
}

fn box_count(points: &[SpacetimePoint], r: f64) -> usize {
    let r2 = r * r;
    points
        .iter()
        .map(|p| {
            [
                (p.x[0] / r).floor() as i64,
                (p.x[1] / r).floor() as i64,
                (p.x[2] / r).floor() as i64,
                (p.t / r2).floor() as i64,
            ]
        })
        .collect::<HashSet<_>>()
        .len()
}

fn greedy_count(points: &[SpacetimePoint], r: f64, period: Option<f64>) -> usize {
    let mut covered = vec![false; points.len()];
    let mut count = 0;
    for i in 0..points.len() {
        if covered[i] {
            continue;
        }
        count += 1;
        for j in i..points.len() {
            if !covered[j] && parabolic_distance(&points[i], &points[j], period) < r {
                covered[j] = true;
            }
        }
    }
    count
}

/// Least-squares `(slope, intercept, rms residual)` of `y` on `x`.
fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let b = my - slope * mx;
    let ss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, v)| (v - b - slope * a).powi(2))
        .sum();
    (slope, b, (ss / n).sqrt())
}

/// Covering numbers at dyadic `scales` and the dimension fitted on the finest three.
pub fn dimension_estimate(
    points: &[SpacetimePoint],
    scales: &[f64],
    method: CountMethod,
    period: Option<f64>,
) -> Result<CoveringEstimate> {
    if points.is_empty() {
        return Err(CnsError::Degenerate("empty point set".into()));
    }
    if points.iter().any(|p| !(p.t.is_finite() && p.x.iter().all(|v| v.is_finite()))) {
        return Err(CnsError::NonFinite("spacetime point".into()));
    }
    let mut sc = scales.to_vec();
    sc.sort_by(|a, b| b.total_cmp(a));
    sc.dedup();
    if sc.len() < FIT_SCALES {
        return Err(CnsError::Degenerate(format!(
            "need at least {FIT_SCALES} distinct scales, got {}",
            sc.len()
        )));
    }
    if let Some(&r) = sc.iter().find(|&&r| dyadic_exponent(r).is_none()) {
        return Err(CnsError::NotDyadic(r));
    }
    let counts: Vec<usize> = sc
        .par_iter()
        .map(|&r| match method {
            CountMethod::BoxCount => box_count(points, r),
            CountMethod::Greedy => greedy_count(points, r, period),
        })
        .collect();
    let k = sc.len() - FIT_SCALES;
    let x: Vec<f64> = sc[k..].iter().map(|r| (1.0 / r).ln()).collect();
    let y: Vec<f64> = counts[k..].iter().map(|&n| (n as f64).ln()).collect();
    let (slope, intercept, residual) = fit_line(&x, &y);
    Ok(CoveringEstimate {
        scales: sc,
        counts,
        slope,
        intercept,
        residual,
        fit_len: FIT_SCALES,
    })
}

/// Parse `2^-a..2^-b` (or a comma list of numbers) into scales.
pub fn parse_scales(s: &str) -> Result<Vec<f64>> {
    let bad = || CnsError::Config(format!("scales `{s}`: expected `2^-a..2^-b` or a list"));
    if let Some((a, b)) = s.split_once("..") {
        let exp = |t: &str| -> Result<i32> {
            t.trim()
                .strip_prefix("2^")
                .and_then(|e| e.parse().ok())
                .ok_or_else(bad)
        };
        let (a, b) = (exp(a)?, exp(b)?);
        let (lo, hi) = (a.min(b), a.max(b));
        return Ok((lo..=hi).rev().map(|k| 2f64.powi(k)).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| bad()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(x: f64, t: f64) -> SpacetimePoint {
        SpacetimePoint::new([x, 0.0, 0.0], t)
    }

    #[test]
    fn distance_examples() {
        assert_eq!(parabolic_distance(&z(0.0, 0.0), &z(0.3, 0.0), None), 0.3);
        assert!((parabolic_distance(&z(0.0, 0.0), &z(0.0, -0.04), None) - 0.2).abs() < 1e-15);
        assert!((parabolic_distance(&z(0.1, 0.0), &z(0.9, 0.0), Some(1.0)) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn scale_ranges_parse() {
        let s = parse_scales("2^-3..2^-7").unwrap();
        assert_eq!(s, vec![0.125, 0.0625, 0.03125, 0.015625, 0.0078125]);
        assert_eq!(parse_scales("0.5, 0.25").unwrap(), vec![0.5, 0.25]);
        assert!(parse_scales("3..7").is_err());
    }

    #[test]
    fn too_few_scales_are_degenerate() {
        let p = [z(0.0, 0.0)];
        assert!(dimension_estimate(&p, &[0.5, 0.25], CountMethod::BoxCount, None).is_err());
        assert!(matches!(
            dimension_estimate(&p, &[0.5, 0.25, 0.3], CountMethod::BoxCount, None),
            Err(CnsError::NotDyadic(_))
        ));
    }

    #[test]
    fn dilate_about_midpoint() {
        let c = StCylinder::backward(z(0.0, 0.0), 1.0).dilate(5.0);
        assert_eq!((c.r, c.t_lo, c.t_hi), (5.0, -13.0, 12.0));
    }
}
