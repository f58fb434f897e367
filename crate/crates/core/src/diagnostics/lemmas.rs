//! Reflection lemmas: Hölder bounds for odd extensions and the commutation
//! of derivatives with extensions.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SqgError};
use crate::field::{
    derivative, derivative_with, holder_seminorm, lp_norm_masked, GridField, LowerClosure,
    MultiIndex, Parity, ScalarField,
};

/// Commutators are exact up to roundoff on this data.
pub const COMMUTATOR_TOLERANCE: f64 = 1e-10;
/// Empirical surrogate for the unquantified extension constant.
pub const HOLDER_RATIO_BOUND: f64 = 4.0;
pub const DOUBLING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldExtensionCheck {
    /// `max |d1 (odd g) - odd(d1 g)|`.
    pub odd_d1_commutator: f64,
    /// `max |d2 (even g) - odd(d2 g)|`.
    pub even_d2_commutator: f64,
    /// `max |d2^2 (odd g) - odd(d2^2 g)|`.
    pub odd_d22_commutator: f64,
    /// `[odd g]_beta / [g]_beta` on the full and half planes.
    pub holder_ratio: f64,
    /// `||d2^2 (odd g)||_{L^p(R^2)}`.
    pub extended_d22_norm: f64,
    /// `||d2^2 g||_{L^p(R^2_+)}`.
    pub half_d22_norm: f64,
    /// `| extended - 2^{1/p} half |`.
    pub doubling_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionReport {
    pub beta: f64,
    pub p: f64,
    pub fields: Vec<FieldExtensionCheck>,
    pub max_commutator: f64,
    pub max_holder_ratio: f64,
    pub max_doubling_gap: f64,
    pub passed: bool,
}

fn max_diff(a: &GridField, b: &GridField) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Checks one boundary-vanishing field.
pub fn extension_check(
    f: &ScalarField,
    beta: f64,
    p: f64,
    pair_samples: usize,
    seed: u64,
) -> Result<FieldExtensionCheck> {
    let base = f.field();
    let odd = base.reflect(Parity::Odd)?;
    let even = base.reflect(Parity::Even)?;
    let d1 = MultiIndex::new(1, 0);
    let d2 = MultiIndex::new(0, 1);
    let d22 = MultiIndex::new(0, 2);

    let odd_d1_commutator = max_diff(
        &derivative(&odd, d1)?,
        &derivative(base, d1)?.reflect_piecewise(Parity::Odd),
    );
    let even_d2_commutator = max_diff(
        &derivative(&even, d2)?,
        &derivative_with(base, d2, LowerClosure::Reflect(Parity::Even))?
            .reflect_piecewise(Parity::Odd),
    );
    let ext_d22 = derivative(&odd, d22)?;
    let half_d22 = derivative_with(base, d22, LowerClosure::Reflect(Parity::Odd))?;
    let odd_d22_commutator = max_diff(&ext_d22, &half_d22.reflect_piecewise(Parity::Odd));

    let num = holder_seminorm(&odd, 0, beta, pair_samples, seed)?;
    let den = holder_seminorm(base, 0, beta, pair_samples, seed)?;
    let holder_ratio = if den > 0.0 { num / den } else { f64::NAN };

    let all = |_: usize, _: usize| true;
    let extended_d22_norm = lp_norm_masked(&ext_d22, p, all);
    let half_d22_norm = lp_norm_masked(&half_d22, p, all);
    let factor = if p.is_infinite() { 1.0 } else { 2f64.powf(1.0 / p) };
    Ok(FieldExtensionCheck {
        odd_d1_commutator,
        even_d2_commutator,
        odd_d22_commutator,
        holder_ratio,
        extended_d22_norm,
        half_d22_norm,
        doubling_gap: (extended_d22_norm - factor * half_d22_norm).abs(),
    })
}

/// Runs [`extension_check`] over a family of test fields.
pub fn extension_lemma_suite(
    fields: &[ScalarField],
    beta: f64,
    p: f64,
    pair_samples: usize,
    seed: u64,
) -> Result<ExtensionReport> {
    if fields.is_empty() {
        return Err(SqgError::InvalidExperiment("no test fields".into()));
    }
    let checks = fields
        .iter()
        .map(|f| extension_check(f, beta, p, pair_samples, seed))
        .collect::<Result<Vec<_>>>()?;
    let max_commutator = checks
        .iter()
        .flat_map(|c| [c.odd_d1_commutator, c.even_d2_commutator, c.odd_d22_commutator])
        .fold(0.0f64, f64::max);
    let max_holder_ratio = checks
        .iter()
        .map(|c| c.holder_ratio)
        .filter(|r| r.is_finite())
        .fold(0.0f64, f64::max);
    let max_doubling_gap = checks.iter().map(|c| c.doubling_gap).fold(0.0f64, f64::max);
    let passed = max_commutator <= COMMUTATOR_TOLERANCE
        && checks.iter().all(|c| !(c.holder_ratio > HOLDER_RATIO_BOUND))
        && max_doubling_gap <= DOUBLING_TOLERANCE;
    Ok(ExtensionReport {
        beta,
        p,
        fields: checks,
        max_commutator,
        max_holder_ratio,
        max_doubling_gap,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::profiles::Profile;

    #[test]
    fn gaussian_times_height_commutes_exactly() {
        let g = Grid::half_plane(1.0 / 32.0, 1.0, 0.25).unwrap();
        let f = Profile::GaussianX2 { support: 1.0 }.sample(g).unwrap();
        let c = extension_check(&f, 0.5, 2.0, 2000, 7).unwrap();
        assert!(c.odd_d1_commutator <= 1e-10, "{c:?}");
        assert!(c.even_d2_commutator <= 1e-10, "{c:?}");
        assert!(c.odd_d22_commutator <= 1e-10, "{c:?}");
        assert!(c.doubling_gap <= 1e-6, "{c:?}");
        assert!(c.holder_ratio <= 4.0, "{c:?}");
    }
}
