use rayon::prelude::*;
use serde::Serialize;

use super::ThresholdProfile;
use crate::error::{Error, Result};

/// Objective value of one threshold profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub taus: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub best: ThresholdProfile,
    pub best_value: f64,
    /// Every evaluated profile, in lexicographic grid order.
    pub surface: Vec<GridPoint>,
}

/// Evaluates `objective` on every point of `grid^dims` and returns the
/// maximizer. Grid points are enumerated lexicographically (grid values
/// sorted ascending) and the first maximum wins, so ties resolve to the
/// lexicographically smallest profile. Evaluations run in parallel.
pub fn optimize_thresholds<F>(grid: &[f64], dims: usize, objective: F) -> Result<ThresholdSearch>
where
    F: Fn(&ThresholdProfile) -> Result<f64> + Sync,
{
    if grid.is_empty() {
        return Err(Error::invalid_arg("threshold grid is empty"));
    }
    if dims == 0 {
        return Err(Error::invalid_arg(
            "threshold grid needs at least one dimension",
        ));
    }
    let mut values = grid.to_vec();
    values.sort_by(f64::total_cmp);
    values.dedup();
    ThresholdProfile::new(values.clone())?;

    let total = values
        .len()
        .checked_pow(dims as u32)
        .ok_or_else(|| Error::invalid_arg("threshold grid is too large"))?;
    let point = |mut index: usize| -> Vec<f64> {
        let mut taus = vec![0.0; dims];
        for d in (0..dims).rev() {
            taus[d] = values[index % values.len()];
            index /= values.len();
        }
        taus
    };
    let surface: Vec<GridPoint> = (0..total)
        .into_par_iter()
        .map(|i| {
            let taus = point(i);
            let value = objective(&ThresholdProfile::new(taus.clone())?)?;
            Ok(GridPoint { taus, value })
        })
        .collect::<Result<_>>()?;

    let mut best = 0;
    for (i, g) in surface.iter().enumerate() {
        if g.value > surface[best].value {
            best = i;
        }
    }
    Ok(ThresholdSearch {
        best: ThresholdProfile::new(surface[best].taus.clone())?,
        best_value: surface[best].value,
        surface,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn singleton_grid() {
        let s = optimize_thresholds(&[0.5], 3, |_| Ok(1.0)).unwrap();
        assert_eq!(s.best.taus(), &[0.5, 0.5, 0.5]);
        assert_eq!(s.surface.len(), 1);
    }

    #[test]
    fn lexicographic_surface_and_ties() {
        let s = optimize_thresholds(&[0.9, 0.1, 0.5, 0.3, 0.7], 3, |_| Ok(0.0)).unwrap();
        assert_eq!(s.surface.len(), 125);
        assert_eq!(s.surface[0].taus, vec![0.1, 0.1, 0.1]);
        assert_eq!(s.surface[1].taus, vec![0.1, 0.1, 0.3]);
        assert_eq!(s.best.taus(), &[0.1, 0.1, 0.1]);
    }

    #[test]
    fn finds_maximum() {
        let s = optimize_thresholds(&[0.0, 0.5, 1.0], 2, |p| {
            Ok(-(p.taus()[0] - 0.5).powi(2) - (p.taus()[1] - 1.0).powi(2))
        })
        .unwrap();
        assert_eq!(s.best.taus(), &[0.5, 1.0]);
    }

    #[test]
    fn errors() {
        assert!(optimize_thresholds(&[], 2, |_| Ok(0.0)).is_err());
        assert!(optimize_thresholds(&[1.5], 2, |_| Ok(0.0)).is_err());
        assert!(optimize_thresholds(&[0.5], 2, |_| Err(Error::invalid_arg("boom"))).is_err());
    }
}
