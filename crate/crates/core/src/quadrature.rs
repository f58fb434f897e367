//! One-dimensional quadrature rules.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Embedded 7-point Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 8-point Gauss-Legendre nodes and weights on [-1, 1].
pub const GAUSS_LEGENDRE_8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for k in 0..7 {
        let dx = half * XGK[k];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[k] * s;
        if k % 2 == 1 {
            gauss += WG[k / 2] * s;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive Gauss-Kronrod (7/15) integration by recursive bisection.
///
/// Each panel is accepted once its Kronrod/Gauss discrepancy is below its
/// share of `abs_tol`, or when the depth cap is reached.
pub fn adaptive_gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Integral {
    const MAX_DEPTH: u32 = 64;
    let mut evaluations = 0;
    let total = (b - a).abs().max(f64::MIN_POSITIVE);
    // Depth-first stack keeps the summation order deterministic.
    let mut stack = vec![(a, b, 0u32)];
    let mut value = 0.0;
    let mut error_estimate = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, e) = gauss_kronrod_15(&f, lo, hi);
        evaluations += 15;
        let share = abs_tol * (hi - lo).abs() / total;
        if e <= share.max(f64::EPSILON * v.abs()) || depth >= MAX_DEPTH {
            value += v;
            error_estimate += e;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    Integral {
        value,
        error_estimate,
        evaluations,
    }
}

/// Composite trapezoid rule over uniformly spaced samples.
pub fn trapezoid(samples: &[f64], spacing: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = samples[1..n - 1].iter().sum();
            spacing * (interior + 0.5 * (samples[0] + samples[n - 1]))
        }
    }
}

/// 8-point Gauss-Legendre rule mapped to [a, b].
pub fn gauss_legendre_8<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    GAUSS_LEGENDRE_8
        .iter()
        .map(|&(x, w)| w * f(c + r * x))
        .sum::<f64>()
        * r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_weights_integrate_constants() {
        let s: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert!((s - 2.0).abs() < 1e-14);
        let g: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert!((g - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_narrow_peak() {
        // int_{-1}^{1} d/(s^2+d^2) ds = 2 atan(1/d)
        let d = 1e-6;
        let r = adaptive_gauss_kronrod(|s| d / (s * s + d * d), -1.0, 1.0, 1e-12);
        assert!((r.value - 2.0 * (1.0 / d).atan()).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_15() {
        let v = gauss_legendre_8(|x| x.powi(15) + x.powi(14), 0.0, 1.0);
        assert!((v - (1.0 / 16.0 + 1.0 / 15.0)).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_linear_exact() {
        let xs: Vec<f64> = (0..11).map(|k| 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x + 1.0).collect();
        assert!((trapezoid(&ys, 0.1) - 2.5).abs() < 1e-14);
    }
}
