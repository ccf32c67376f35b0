use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{boundary_lengths, DomainSpec};

/// Number of geometric sample points in the fit window.
pub const HEAT_SAMPLES: usize = 64;
/// Left end of the default window is `HEAT_TAIL / λ_N`.
pub const HEAT_TAIL: f64 = 30.0;
pub const HEAT_RIGHT: f64 = 0.5;
/// Truncated terms must stay below this at the left window end.
const TAIL_LIMIT: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct HeatFit {
    /// Coefficient of `1 / (4 π t)`, fixed to the area.
    pub area_term: f64,
    /// Coefficient of `1 / sqrt(t)`.
    pub c: f64,
    pub d: f64,
    /// `L_N - L_D` implied by `c = (L_N - L_D) / (8 sqrt(π))`.
    pub implied_imbalance: f64,
    /// RMS of the fit residual relative to the RMS of the fitted data.
    pub relative_residual: f64,
    pub window: (f64, f64),
    pub eigenvalues_used: usize,
}

/// `sum_i exp(-λ_i t)`
pub fn heat_trace(values: &[f64], t: f64) -> f64 {
    values.iter().map(|&l| (-l * t).exp()).sum()
}

/// Least-squares fit of the truncated heat trace to
/// `area / (4 π t) + c / sqrt(t) + d` on `window` (default
/// `[30 / λ_N, 0.5]`), sampled geometrically.
pub fn heat_fit(values: &[f64], area: f64, window: Option<(f64, f64)>) -> Result<HeatFit> {
    let lam_n = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if values.is_empty() || !(lam_n > 0.0) || !(area > 0.0) {
        return Err(Error::InvalidArgument("heat fit needs positive eigenvalues and area".into()));
    }
    let (t0, t1) = window.unwrap_or((HEAT_TAIL / lam_n, HEAT_RIGHT));
    if (-lam_n * t0).exp() > TAIL_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "window starts at t = {t0} but exp(-λ_N t) = {:.1e} with λ_N = {lam_n}; supply more eigenvalues or a larger t",
            (-lam_n * t0).exp()
        )));
    }
    if !(t0 < t1) {
        return Err(Error::InvalidArgument(format!(
            "window [{t0}, {t1}] is empty; supply more eigenvalues (λ_N = {lam_n})"
        )));
    }
    let ts: Vec<f64> = (0..HEAT_SAMPLES)
        .map(|k| t0 * (t1 / t0).powf(k as f64 / (HEAT_SAMPLES - 1) as f64))
        .collect();
    let ys: Vec<f64> = ts
        .iter()
        .map(|&t| heat_trace(values, t) - area / (4.0 * std::f64::consts::PI * t))
        .collect();
    // normal equations for y = c x + d with x = 1 / sqrt(t)
    let xs: Vec<f64> = ts.iter().map(|t| 1.0 / t.sqrt()).collect();
    let n = HEAT_SAMPLES as f64;
    let (sx, sy) = (xs.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let c = (n * sxy - sx * sy) / det;
    let d = (sy - c * sx) / n;
    let res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - c * x - d).powi(2)).sum::<f64>();
    let scale: f64 = ys.iter().map(|y| y * y).sum::<f64>();
    Ok(HeatFit {
        area_term: area,
        c,
        d,
        implied_imbalance: 8.0 * std::f64::consts::PI.sqrt() * c,
        relative_residual: (res / scale.max(1e-300)).sqrt(),
        window: (t0, t1),
        eigenvalues_used: values.len(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LengthBalance {
    /// `(L_D, L_N)` of each problem, in the metric of its weight.
    pub first: (f64, f64),
    pub second: (f64, f64),
    pub gap: f64,
    pub balanced: bool,
    pub verdict: String,
}

pub const LENGTH_TOL: f64 = 1e-9;

/// Necessary condition for two problems to share a spectrum: equal Dirichlet
/// and equal Neumann lengths. For a swapped pair this is `L_D = L_N`.
pub fn length_balance(a: &DomainSpec, b: &DomainSpec) -> LengthBalance {
    let first = boundary_lengths(a);
    let second = boundary_lengths(b);
    let gap = (first.0 - second.0).abs().max((first.1 - second.1).abs());
    let balanced = gap <= LENGTH_TOL;
    let verdict = if balanced {
        "lengths balance; isospectrality not excluded".to_string()
    } else {
        format!("Dirichlet/Neumann lengths differ by {gap:.3e}; the problems cannot be isospectral")
    };
    LengthBalance {
        first,
        second,
        gap,
        balanced,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk_partition, build_half_disk, HalfDiskVariant, MetricWeight};
    use crate::special::{disk_dirichlet_eigenvalues, disk_neumann_eigenvalues};
    use std::f64::consts::{PI, TAU};

    #[test]
    fn disk_heat_signs() {
        let d = heat_fit(&disk_dirichlet_eigenvalues(200).unwrap(), PI, None).unwrap();
        assert!(d.c < 0.0);
        assert!((d.implied_imbalance + TAU).abs() <= 0.25 * TAU, "{d:?}");
        let n = heat_fit(&disk_neumann_eigenvalues(200).unwrap(), PI, None).unwrap();
        assert!(n.c > 0.0);
        assert!((n.implied_imbalance - TAU).abs() <= 0.25 * TAU, "{n:?}");
    }

    #[test]
    fn window_rules() {
        let vals: Vec<f64> = (1..=50).map(|k| k as f64).collect();
        let err = heat_fit(&vals, 1.0, Some((0.01, 0.5))).unwrap_err();
        assert!(err.to_string().contains("more eigenvalues"), "{err}");
        assert!(heat_fit(&vals, 1.0, Some((0.6, 0.5))).is_err());
        assert!(heat_fit(&vals, 1.0, None).is_err());
    }

    #[test]
    fn balance_of_swapped_pairs() {
        for w in [MetricWeight::Flat, MetricWeight::Spherical] {
            let a = build_half_disk(HalfDiskVariant::I, w.clone());
            let b = build_half_disk(HalfDiskVariant::II, w);
            assert!(length_balance(&a, &b).balanced);
        }
        let (a, b) = build_disk_partition(PI / 3.0, PI / 4.0).unwrap();
        let r = length_balance(&a, &b);
        assert!(r.balanced, "{r:?}");
        let (a, b) = build_disk_partition(PI / 3.0, PI / 3.0).unwrap();
        assert!(length_balance(&a, &b).balanced);
        let a = build_half_disk(HalfDiskVariant::I, MetricWeight::Flat);
        let mut b = a.swapped();
        b.curves.truncate(b.curves.len() - 1);
        let r = length_balance(&a, &b);
        assert!(!r.balanced && r.verdict.contains("cannot be isospectral"));
    }
}
