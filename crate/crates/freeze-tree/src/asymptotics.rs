//! Asymptotic constants and concentration bounds of the linear regime:
//! Bennett's function and tail bound, the `f(c)` equation, and the
//! depth/distance/height constants.

use num_traits::{Float, FromPrimitive};
use serde::Serialize;

use crate::{Error, Result};

/// Bennett's rate function `g(u) = (1 + u) ln(1 + u) - u`, for `u > -1`.
pub fn bennett_g<F: Float>(u: F) -> Result<F> {
    if u <= -F::one() {
        return Err(Error::OutOfRange("bennett_g needs u > -1".into()));
    }
    let one_plus = F::one() + u;
    Ok(one_plus * one_plus.ln() - u)
}

/// Bennett upper tail for a sum of independent Bernoullis with mean `m`:
/// `P(sum > m + t) <= exp(-m g(t/m))`.
pub fn bennett_tail<F: Float>(m: F, t: F) -> Result<F> {
    if m <= F::zero() || t <= F::zero() {
        return Err(Error::OutOfRange(
            "bennett_tail needs m > 0 and t > 0".into(),
        ));
    }
    Ok((-m * bennett_g(t / m)?).exp())
}

fn fc_lhs<F: Float>(f: F, rhs: F) -> F {
    f * (f.ln() - F::one()) - rhs
}

/// The unique root `f(c) > 1` of `f (ln f - 1) = (c - 1)/(c + 1)` for
/// `0 < c <= 1`: bisection to locate, Newton to polish. The residual is
/// driven below `1e-12` in `f64`.
pub fn solve_fc<F: Float + FromPrimitive>(c: F) -> Result<F> {
    if c <= F::zero() || c > F::one() {
        return Err(Error::OutOfRange("solve_fc needs 0 < c <= 1".into()));
    }
    let rhs = (c - F::one()) / (c + F::one());
    let mut lo = F::one() + F::from_f64(1e-9).unwrap();
    let mut hi = F::from_f64(10.0).unwrap();
    // f(c) <= e for c <= 1, so the bracket holds; grow it as a safety net
    while fc_lhs(hi, rhs) < F::zero() {
        hi = hi + hi;
    }
    for _ in 0..120 {
        let mid = (lo + hi) / F::from_f64(2.0).unwrap();
        if fc_lhs(mid, rhs) > F::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut f = (lo + hi) / F::from_f64(2.0).unwrap();
    for _ in 0..6 {
        let derivative = f.ln();
        if derivative <= F::zero() {
            break;
        }
        let next = f - fc_lhs(f, rhs) / derivative;
        if next > F::one() {
            f = next;
        }
    }
    Ok(f)
}

/// Residual of the defining equation at `f`, for verification.
pub fn fc_residual<F: Float>(c: F, f: F) -> F {
    (f * (f.ln() - F::one()) - (c - F::one()) / (c + F::one())).abs()
}

/// The constants of the linear regime `S_i ~ c i`: typical depth and
/// pairwise distance scale, the height factor `f(c)`, and the height
/// constant `(c+1)/(2c) f(c)`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LinearRegimeConstants<F> {
    pub c: F,
    pub depth_const: F,
    pub dist_const: F,
    pub f_c: F,
    pub height_const: F,
}

pub fn linear_constants<F: Float + FromPrimitive>(c: F) -> Result<LinearRegimeConstants<F>> {
    let f_c = solve_fc(c)?;
    let two = F::from_f64(2.0).unwrap();
    let depth_const = (c + F::one()) / (two * c);
    Ok(LinearRegimeConstants {
        c,
        depth_const,
        dist_const: (c + F::one()) / c,
        f_c,
        height_const: depth_const * f_c,
    })
}

/// The asymptotic envelope for the height: `((1 - eps) h+, (e + eps) h+)`.
pub fn height_envelope<F: Float + FromPrimitive>(h_plus: F, eps: F) -> Result<(F, F)> {
    if h_plus <= F::zero() || eps <= F::zero() || eps >= F::one() {
        return Err(Error::OutOfRange(
            "height_envelope needs h+ > 0 and 0 < eps < 1".into(),
        ));
    }
    let e = F::from_f64(std::f64::consts::E).unwrap();
    Ok(((F::one() - eps) * h_plus, (e + eps) * h_plus))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn bennett_g_anchors() {
        assert_eq!(bennett_g(0.0f64).unwrap(), 0.0);
        // (1 + u) ln(1 + u) = e at u = e - 1
        let g = bennett_g(std::f64::consts::E - 1.0).unwrap();
        assert!((g - 1.0).abs() < 1e-14);
        assert!(bennett_g(2.0f64).unwrap() > bennett_g(1.0f64).unwrap());
        assert!(bennett_g(-1.0f64).is_err());
    }

    #[test]
    fn bennett_tail_values() {
        // t -> 0+ drives the bound to 1
        assert!((bennett_tail(5.0f64, 1e-12).unwrap() - 1.0).abs() < 1e-9);
        let b = bennett_tail(10.0f64, 10.0).unwrap();
        let expected = (-10.0 * (2.0 * 2.0f64.ln() - 1.0)).exp();
        assert!((b - expected).abs() < 1e-14);
        assert!(bennett_tail(0.0f64, 1.0).is_err());
    }

    #[test]
    fn bennett_bound_holds_empirically() {
        // 1e5 samples of a sum of 100 Bernoulli(0.1): the observed tail must
        // stay below the bound up to sampling error.
        let m = 10.0f64;
        let reps = 100_000;
        let mut sums = Vec::with_capacity(reps);
        let mut rng = stream_rng(55, 0);
        for _ in 0..reps {
            let mut s = 0u32;
            for _ in 0..100 {
                if rng.gen::<f64>() < 0.1 {
                    s += 1;
                }
            }
            sums.push(s as f64);
        }
        for t in [2.0f64, 5.0, 10.0] {
            let bound = bennett_tail(m, t).unwrap();
            let observed = sums.iter().filter(|&&s| s > m + t).count() as f64 / reps as f64;
            let slack = 4.0 * (bound * (1.0 - bound) / reps as f64).sqrt();
            assert!(
                observed <= bound + slack,
                "t = {t}: {observed} vs bound {bound}"
            );
        }
    }

    #[test]
    fn fc_at_one_is_e() {
        let f = solve_fc(1.0f64).unwrap();
        assert!((f - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn fc_at_half_matches_pinned_oracle() {
        // value pinned from an independent bisection of f (ln f - 1) = -1/3
        let f = solve_fc(0.5f64).unwrap();
        assert!((f - 2.360262304913342).abs() < 1e-9, "f = {f}");
    }

    #[test]
    fn fc_residuals_small_across_range() {
        for &c in &[1.0f64, 0.5, 0.2, 0.05, 1e-3] {
            let f = solve_fc(c).unwrap();
            assert!(f > 1.0 && f <= std::f64::consts::E + 1e-12);
            assert!(fc_residual(c, f) < 1e-12, "c = {c}");
        }
    }

    #[test]
    fn fc_works_in_f32() {
        let f = solve_fc(1.0f32).unwrap();
        assert!((f - std::f32::consts::E).abs() < 1e-5);
    }

    #[test]
    fn linear_constants_examples() {
        let l = linear_constants(1.0f64).unwrap();
        assert!((l.depth_const - 1.0).abs() < 1e-14);
        assert!((l.dist_const - 2.0).abs() < 1e-14);
        assert!((l.height_const - std::f64::consts::E).abs() < 1e-12);
        let l = linear_constants(0.5f64).unwrap();
        assert!((l.depth_const - 1.5).abs() < 1e-14);
        assert!((l.dist_const - 3.0).abs() < 1e-14);
        // depth constant decreases in c
        assert!(
            linear_constants(0.3f64).unwrap().depth_const
                > linear_constants(0.6f64).unwrap().depth_const
        );
    }

    #[test]
    fn envelope_examples() {
        let (lo, hi) = height_envelope(10.0f64, 0.1).unwrap();
        assert!((lo - 9.0).abs() < 1e-14);
        assert!((hi - (std::f64::consts::E + 0.1) * 10.0).abs() < 1e-12);
        assert!(lo < 10.0 && 10.0 < hi);
        assert!(height_envelope(10.0f64, 1.5).is_err());
    }
}
