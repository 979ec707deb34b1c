use serde::{Deserialize, Serialize};

use super::report::CellSummary;
use super::sweep::Cell;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedCell {
    pub rank: usize,
    pub cell: Cell,
    pub mean: f64,
    pub half_width: Option<f64>,
    /// Relative to the best cell, in percent.
    pub worsening_pct: f64,
}

pub fn worsening_pct(value: f64, best: f64) -> f64 {
    100.0 * (value - best) / best
}

/// Cells ascending by mean dollars per useful computation. Ties are ordered
/// by mechanism, strategy and alpha; cells without a defined ratio are left
/// out.
pub fn rank_cells(summaries: &[CellSummary]) -> Vec<RankedCell> {
    let mut ranked: Vec<&CellSummary> = summaries
        .iter()
        .filter(|s| s.dollars_per_useful.n > 0 && s.dollars_per_useful.mean.is_finite())
        .collect();
    ranked.sort_by(|a, b| {
        a.dollars_per_useful
            .mean
            .total_cmp(&b.dollars_per_useful.mean)
            .then_with(|| a.cell.mechanism.cmp(&b.cell.mechanism))
            .then_with(|| a.cell.strategy.cmp(&b.cell.strategy))
            .then_with(|| a.cell.alpha.total_cmp(&b.cell.alpha))
    });
    let Some(best) = ranked.first().map(|s| s.dollars_per_useful.mean) else {
        return vec![];
    };
    ranked
        .into_iter()
        .enumerate()
        .map(|(i, s)| RankedCell {
            rank: i + 1,
            cell: s.cell.clone(),
            mean: s.dollars_per_useful.mean,
            half_width: s.dollars_per_useful.half_width,
            worsening_pct: worsening_pct(s.dollars_per_useful.mean, best),
        })
        .collect()
}
