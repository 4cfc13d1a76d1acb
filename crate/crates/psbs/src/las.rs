//! Least-attained-service selection shared by LAS and the hybrid policies
//! that apply LAS to a subset of eligible jobs.

use crate::engine::JobId;

/// Attained-service values within this relative distance count as one level.
pub const LEVEL_TOLERANCE: f64 = 1e-9;

/// Which jobs LAS serves right now and when that group catches up.
#[derive(Debug, Clone, PartialEq)]
pub struct LasPick {
    /// Jobs at the minimum attained level, ascending id; they share equally.
    pub served: Vec<JobId>,
    pub level: f64,
    /// Lowest attained level strictly above `level`, if any.
    pub next_level: Option<f64>,
}

impl LasPick {
    /// Time until the served group reaches `next_level` at full capacity.
    pub fn catch_up_delay(&self) -> Option<f64> {
        self.next_level
            .map(|next| (next - self.level).max(0.0) * self.served.len() as f64)
    }
}

fn same_level(a: f64, level: f64) -> bool {
    a <= level + LEVEL_TOLERANCE * level.abs()
}

/// Least-attained-service decision over `(id, attained)` candidates.
pub fn las_pick<I>(candidates: I) -> Option<LasPick>
where
    I: IntoIterator<Item = (JobId, f64)> + Clone,
{
    let level = candidates
        .clone()
        .into_iter()
        .map(|(_, a)| a)
        .fold(f64::INFINITY, f64::min);
    if !level.is_finite() {
        return None;
    }
    let mut served = Vec::new();
    let mut next_level: Option<f64> = None;
    for (id, a) in candidates {
        if same_level(a, level) {
            served.push(id);
        } else if next_level.is_none_or(|n| a < n) {
            next_level = Some(a);
        }
    }
    served.sort_unstable();
    Some(LasPick {
        served,
        level,
        next_level,
    })
}
