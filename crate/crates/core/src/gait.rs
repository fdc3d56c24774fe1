//! Parameterized swimming motion.
//!
//! The joint angle at arc-length fraction `s` and time `t` is
//!
//! ```text
//! theta(s, t) = amp(s) * sin(omega * t + phase(s))
//! ```
//!
//! where `amp` is a degree-5 polynomial, `phase` a degree-4 polynomial, and
//! `omega` the angular frequency. Together that is a 12-dimensional
//! parameter vector, flattened as the 6 amplitude coefficients, the 5 phase
//! coefficients, then omega.

use crate::error::{Error, Result};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub const PARAM_DIM: usize = 12;
pub const AMP_DEGREE: usize = 5;
pub const PHASE_DEGREE: usize = 4;

/// The 12 gait parameters. Immutable once constructed; `omega` is always
/// strictly positive and every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    amp_coeffs: [f64; 6],
    phase_coeffs: [f64; 5],
    omega: f64,
}

impl ParamVector {
    pub fn new(amp_coeffs: [f64; 6], phase_coeffs: [f64; 5], omega: f64) -> Result<Self> {
        let mut flat = [0.0; PARAM_DIM];
        flat[..6].copy_from_slice(&amp_coeffs);
        flat[6..11].copy_from_slice(&phase_coeffs);
        flat[11] = omega;
        for (i, &v) in flat.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteParam { index: i, value: v });
            }
        }
        if omega <= 0.0 {
            return Err(Error::NonPositiveOmega { value: omega });
        }
        Ok(ParamVector {
            amp_coeffs,
            phase_coeffs,
            omega,
        })
    }

    /// Build from the flattened order `p_1..p_6` amplitude, `p_7..p_11`
    /// phase, `p_12` omega.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != PARAM_DIM {
            return Err(Error::ParamLength {
                expected: PARAM_DIM,
                got: flat.len(),
            });
        }
        let mut amp = [0.0; 6];
        let mut phase = [0.0; 5];
        amp.copy_from_slice(&flat[..6]);
        phase.copy_from_slice(&flat[6..11]);
        ParamVector::new(amp, phase, flat[11])
    }

    pub fn flatten(&self) -> [f64; PARAM_DIM] {
        let mut flat = [0.0; PARAM_DIM];
        flat[..6].copy_from_slice(&self.amp_coeffs);
        flat[6..11].copy_from_slice(&self.phase_coeffs);
        flat[11] = self.omega;
        flat
    }

    pub fn amp_coeffs(&self) -> &[f64; 6] {
        &self.amp_coeffs
    }

    pub fn phase_coeffs(&self) -> &[f64; 5] {
        &self.phase_coeffs
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Gait period `2 pi / omega` in seconds.
    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }

    /// Copy with every amplitude coefficient multiplied by `factor`.
    pub fn with_amp_scaled(&self, factor: f64) -> Result<Self> {
        let mut amp = self.amp_coeffs;
        for a in &mut amp {
            *a *= factor;
        }
        ParamVector::new(amp, self.phase_coeffs, self.omega)
    }

    /// A plausible undulation bundled as the default starting gait:
    /// amplitude grows toward the tail, one wavelength of phase travels
    /// along the body, one-second period.
    pub fn default_gait() -> Self {
        ParamVector::new(
            [0.05, 0.15, 0.30, 0.0, 0.0, 0.0],
            [0.0, -std::f64::consts::TAU, 0.0, 0.0, 0.0],
            std::f64::consts::TAU,
        )
        .expect("bundled gait is valid")
    }
}

impl Serialize for ParamVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.flatten().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ParamVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let flat = Vec::<f64>::deserialize(deserializer)?;
        ParamVector::from_flat(&flat).map_err(serde::de::Error::custom)
    }
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
}

fn check_s(s: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::ArcLengthOutOfRange { s });
    }
    Ok(())
}

/// Joint angle theta(s, t).
pub fn eval_theta(p: &ParamVector, s: f64, t: f64) -> Result<f64> {
    check_s(s)?;
    let amp = horner(&p.amp_coeffs, s);
    let phase = p.omega * t + horner(&p.phase_coeffs, s);
    Ok(amp * phase.sin())
}

/// Analytic gradient of theta(s, t) with respect to the 12 parameters,
/// in flattened order.
pub fn eval_theta_grad_p(p: &ParamVector, s: f64, t: f64) -> Result<[f64; PARAM_DIM]> {
    check_s(s)?;
    let amp = horner(&p.amp_coeffs, s);
    let phase = p.omega * t + horner(&p.phase_coeffs, s);
    let (sin_ph, cos_ph) = phase.sin_cos();
    let mut grad = [0.0; PARAM_DIM];
    let mut s_pow = 1.0;
    for i in 0..6 {
        grad[i] = s_pow * sin_ph;
        if i < 5 {
            grad[6 + i] = amp * cos_ph * s_pow;
        }
        s_pow *= s;
    }
    grad[11] = amp * cos_ph * t;
    Ok(grad)
}

/// Angles of the interior joints of a uniformly segmented midline:
/// joint j sits at s = j / (n_joints + 1).
pub fn joint_angles(p: &ParamVector, t: f64, n_joints: usize) -> Vec<f64> {
    assert!(n_joints >= 1, "n_joints must be at least 1");
    (1..=n_joints)
        .map(|j| {
            let s = j as f64 / (n_joints + 1) as f64;
            eval_theta(p, s, t).expect("interior joint fractions lie in (0, 1)")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    fn random_param(rng: &mut impl Rng) -> ParamVector {
        let amp = std::array::from_fn(|_| rng.gen_range(-0.5..0.5));
        let phase = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
        ParamVector::new(amp, phase, rng.gen_range(0.5..3.0)).unwrap()
    }

    /// Direct power-sum evaluation of the angle formula, no Horner factoring.
    fn naive_theta(p: &ParamVector, s: f64, t: f64) -> f64 {
        let amp: f64 = (0..6).map(|i| s.powi(i as i32) * p.amp_coeffs()[i]).sum();
        let phase: f64 = p.omega() * t
            + (0..5)
                .map(|i| s.powi(i as i32) * p.phase_coeffs()[i])
                .sum::<f64>();
        amp * phase.sin()
    }

    #[test]
    fn zero_amplitude_is_zero_everywhere() {
        let p = ParamVector::new([0.0; 6], [0.3, 1.0, 0.0, 0.0, 0.0], 1.0).unwrap();
        for (s, t) in [(0.0, 0.0), (0.5, 2.0), (1.0, -7.3)] {
            assert_eq!(eval_theta(&p, s, t).unwrap(), 0.0);
        }
    }

    #[test]
    fn constant_polynomials_reduce_to_plain_sine() {
        let a = 0.37;
        let omega = 2.1;
        let p = ParamVector::new([a, 0.0, 0.0, 0.0, 0.0, 0.0], [0.0; 5], omega).unwrap();
        for s in [0.0, 0.25, 0.8, 1.0] {
            for t in [0.0, 0.4, 3.9] {
                assert_relative_eq!(
                    eval_theta(&p, s, t).unwrap(),
                    a * (omega * t).sin(),
                    max_relative = 1e-15
                );
            }
        }
    }

    #[test]
    fn horner_matches_naive_power_sum() {
        let mut rng = crate::seed::rng(11, "gait-naive");
        for _ in 0..50 {
            let p = random_param(&mut rng);
            let v = eval_theta(&p, 0.37, 1.2).unwrap();
            assert_relative_eq!(v, naive_theta(&p, 0.37, 1.2), max_relative = 1e-13);
        }
    }

    #[test]
    fn s_out_of_range_is_rejected() {
        let p = ParamVector::default_gait();
        assert!(matches!(
            eval_theta(&p, -0.01, 0.0),
            Err(Error::ArcLengthOutOfRange { .. })
        ));
        assert!(matches!(
            eval_theta(&p, 1.01, 0.0),
            Err(Error::ArcLengthOutOfRange { .. })
        ));
        assert!(eval_theta_grad_p(&p, 1.5, 0.0).is_err());
    }

    #[test]
    fn grad_with_zero_amplitude() {
        let omega = 1.7;
        let p = ParamVector::new([0.0; 6], [0.0; 5], omega).unwrap();
        let (s, t) = (0.62, 0.9);
        let g = eval_theta_grad_p(&p, s, t).unwrap();
        for i in 0..6 {
            assert_relative_eq!(g[i], s.powi(i as i32) * (omega * t).sin(), epsilon = 1e-14);
        }
        for gi in &g[6..12] {
            assert_eq!(*gi, 0.0);
        }
    }

    #[test]
    fn grad_at_s_zero_kills_higher_powers() {
        let mut rng = crate::seed::rng(12, "gait-s0");
        let p = random_param(&mut rng);
        let g = eval_theta_grad_p(&p, 0.0, 1.1).unwrap();
        for i in 1..6 {
            assert_eq!(g[i], 0.0);
        }
        for i in 7..11 {
            assert_eq!(g[i], 0.0);
        }
    }

    #[test]
    fn grad_matches_central_differences() {
        let mut rng = crate::seed::rng(13, "gait-fd");
        let h = 1e-6;
        for _ in 0..100 {
            let p = random_param(&mut rng);
            let s = rng.gen_range(0.0..1.0);
            let t = rng.gen_range(-5.0..5.0);
            let g = eval_theta_grad_p(&p, s, t).unwrap();
            let flat = p.flatten();
            for k in 0..PARAM_DIM {
                let mut plus = flat;
                let mut minus = flat;
                plus[k] += h;
                minus[k] -= h;
                let fp = eval_theta(&ParamVector::from_flat(&plus).unwrap(), s, t).unwrap();
                let fm = eval_theta(&ParamVector::from_flat(&minus).unwrap(), s, t).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                // The scale floor covers finite-difference roundoff
                // (~1e-16 / 2h = 5e-11) on near-zero entries.
                let scale = g[k].abs().max(fd.abs()).max(1e-4);
                assert!(
                    (g[k] - fd).abs() / scale < 1e-5,
                    "param {k}: analytic {} vs fd {}",
                    g[k],
                    fd
                );
            }
        }
    }

    #[test]
    fn joint_angles_midpoint_and_direct() {
        let p = ParamVector::default_gait();
        let t = 0.3;
        let single = joint_angles(&p, t, 1);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0], eval_theta(&p, 0.5, t).unwrap());

        let nineteen = joint_angles(&p, t, 19);
        assert_eq!(nineteen.len(), 19);
        for (j, &a) in nineteen.iter().enumerate() {
            let s = (j + 1) as f64 / 20.0;
            assert_eq!(a, eval_theta(&p, s, t).unwrap());
        }
    }

    #[test]
    fn joint_angles_zero_amplitude() {
        let p = ParamVector::new([0.0; 6], [0.1, -2.0, 0.0, 0.0, 0.0], 2.0).unwrap();
        assert!(joint_angles(&p, 1.0, 19).iter().all(|&a| a == 0.0));
    }

    #[test]
    fn omega_must_be_positive() {
        assert!(matches!(
            ParamVector::new([0.1; 6], [0.0; 5], 0.0),
            Err(Error::NonPositiveOmega { .. })
        ));
        assert!(matches!(
            ParamVector::new([0.1; 6], [0.0; 5], -1.0),
            Err(Error::NonPositiveOmega { .. })
        ));
    }

    #[test]
    fn non_finite_entries_are_rejected_with_index() {
        let mut flat = ParamVector::default_gait().flatten();
        flat[7] = f64::NAN;
        match ParamVector::from_flat(&flat) {
            Err(Error::NonFiniteParam { index, .. }) => assert_eq!(index, 7),
            other => panic!("expected NonFiniteParam, got {other:?}"),
        }
    }

    #[test]
    fn serde_flat_array_round_trip() {
        let p = ParamVector::default_gait();
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.starts_with('['), "serializes as a flat array: {json}");
        let back: ParamVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);

        let err = serde_json::from_str::<ParamVector>("[1,2,3]");
        assert!(err.is_err());
    }
}
