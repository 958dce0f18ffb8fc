//! Analytic functions referenced from configs by id.

use crate::mesh::Point;

/// Ground truth `1 + exp(−(5x−2)² − (5y−1)²)`.
pub fn builtin_truth_f0(p: Point) -> f64 {
    1.0 + (-(5.0 * p[0] - 2.0).powi(2) - (5.0 * p[1] - 1.0).powi(2)).exp()
}

/// Conductivity `2.5 − exp(−(5x−2)² − (2.5y−0.5)²)`, valued in [1.5, 2.5].
pub fn builtin_conductivity(p: Point) -> f64 {
    2.5 - (-(5.0 * p[0] - 2.0).powi(2) - (2.5 * p[1] - 0.5).powi(2)).exp()
}

pub const BUMP_CENTER: Point = [0.4, 0.2];
pub const BUMP_RADIUS: f64 = 0.25;

/// Smooth compactly supported bump `exp(1 − 1/(1 − r²/R²))` with peak 1 at
/// [`BUMP_CENTER`] and support radius [`BUMP_RADIUS`].
pub fn bump_psi(p: Point) -> f64 {
    let r2 = ((p[0] - BUMP_CENTER[0]).powi(2) + (p[1] - BUMP_CENTER[1]).powi(2)) / BUMP_RADIUS.powi(2);
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

fn one(_: Point) -> f64 {
    1.0
}

pub const IDS: &[&str] = &["gaussian_bump", "gaussian_dip", "bump_psi", "one"];

/// Older spellings accepted in config files, mapped to their current ids.
const ALIASES: &[(&str, &str)] = &[("f0_paper", "gaussian_bump"), ("s_paper", "gaussian_dip")];

/// The id that `id` stands for: itself, or the target of an alias.
pub fn canonical_id(id: &str) -> &str {
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == id)
        .map_or(id, |(_, target)| target)
}

pub fn lookup(id: &str) -> Option<fn(Point) -> f64> {
    match canonical_id(id) {
        "gaussian_bump" => Some(builtin_truth_f0),
        "gaussian_dip" => Some(builtin_conductivity),
        "bump_psi" => Some(bump_psi),
        "one" => Some(one),
        _ => None,
    }
}
