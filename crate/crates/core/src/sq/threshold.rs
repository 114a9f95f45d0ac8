//! Axis-aligned thresholds under the uniform distribution.
//!
//! The concept `h_t` labels `x ∈ [0,1]^d` positive iff `x_i ≤ t_i` for every
//! `i`. With `V(t) = ∏ t_j`, the moment queries `φ_i = y·x_i` have
//! `E[φ_i] = V(t)·t_i/2`, and `∏_i 2E[φ_i] = V(t)^{d+1}`, so `d` queries
//! determine `t` whenever `V(t) > 0`.

use rand::Rng;

use super::{ExampleSource, HypothesisValue, Query, SqProgram};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::rng::stream_rng;

fn check_unit(p: &Point, name: &'static str) -> Result<()> {
    match p.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        Some(&v) => Err(Error::InvalidParameter {
            name,
            value: v,
            expected: "coordinates in [0, 1]",
        }),
        None => Ok(()),
    }
}

fn volume(u: impl IntoIterator<Item = f64>) -> f64 {
    u.into_iter().product()
}

/// Disagreement probability of `h_s` and `h_t` under uniform `x`:
/// `V(s) + V(t) − 2·V(min(s, t))`.
///
/// ```
/// use replicable::sq::err_unif;
/// use replicable::Point;
///
/// let s = Point::new(vec![0.5, 0.5]).unwrap();
/// let t = Point::new(vec![1.0, 1.0]).unwrap();
/// assert_eq!(err_unif(&s, &t).unwrap(), 0.75);
/// ```
pub fn err_unif(s: &Point, t: &Point) -> Result<f64> {
    t.ensure_dim(s.dim())?;
    check_unit(s, "s")?;
    check_unit(t, "t")?;
    let (a, b) = (s.as_slice(), t.as_slice());
    let meet = volume(a.iter().zip(b).map(|(x, y)| x.min(*y)));
    let e = volume(a.iter().copied()) + volume(b.iter().copied()) - 2.0 * meet;
    Ok(e.max(0.0))
}

/// Uniform examples labeled by `h_t`.
#[derive(Debug, Clone)]
pub struct ThresholdSampler {
    t: Point,
}

impl ThresholdSampler {
    pub fn new(t: Point) -> Result<Self> {
        check_unit(&t, "threshold")?;
        Ok(ThresholdSampler { t })
    }

    pub fn truth(&self) -> &Point {
        &self.t
    }
}

impl ExampleSource for ThresholdSampler {
    fn dim(&self) -> usize {
        self.t.dim()
    }

    fn visit<F: FnMut(&[f64], bool)>(&self, n: u64, seed: u64, mut visit: F) {
        let t = self.t.as_slice();
        let mut rng = stream_rng(seed);
        let mut x = vec![0.0; t.len()];
        for _ in 0..n {
            let mut y = true;
            for (xi, ti) in x.iter_mut().zip(t) {
                *xi = rng.gen::<f64>();
                y &= *xi <= *ti;
            }
            visit(&x, y);
        }
    }
}

fn check_promise(c: f64) -> Result<()> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidParameter {
            name: "c",
            value: c,
            expected: "0 < c < 1",
        });
    }
    Ok(())
}

/// Inverts the moment answers `v_i ≈ V·t_i/2`:
/// `V̂ = (∏ 2v_i)^{1/(d+1)}`, `t̂_i = clamp(2v_i/V̂, 0, 1)`. A zero volume
/// estimate yields `t̂ = 0`.
pub fn threshold_postprocess(v: &[f64]) -> Point {
    let d = v.len() as f64;
    let prod = volume(v.iter().map(|&vi| (2.0 * vi).max(0.0)));
    let vol = prod.powf(1.0 / (d + 1.0));
    let t = if vol > 0.0 {
        v.iter()
            .map(|&vi| (2.0 * vi / vol).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; v.len()]
    };
    Point::from_finite(t)
}

/// `d` nonadaptive moment queries `φ_i = y·x_i` with the volume inversion of
/// [`threshold_postprocess`]. Accurate on the promise class `t ∈ [c, 1]^d`
/// when the answers are within [`recommended_nu`].
pub fn threshold_sq_program(d: usize, c: f64) -> Result<SqProgram> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    check_promise(c)?;
    SqProgram::nonadaptive((0..d).map(Query::LabelTimesCoord).collect(), |v| {
        HypothesisValue::Threshold {
            t: threshold_postprocess(v),
        }
    })
}

/// Answer tolerance `ε·c^d/(8d)` under which the promise-class inversion
/// has error at most `ε`.
pub fn recommended_nu(eps: f64, d: usize, c: f64) -> Result<f64> {
    check_promise(c)?;
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    Ok(eps * c.powi(d as i32) / (8.0 * d as f64))
}

/// Answer tolerance `ε²/(16(d+1))` for [`unrestricted_threshold_sq_program`].
pub fn unrestricted_nu(eps: f64, d: usize) -> f64 {
    eps * eps / (16.0 * (d + 1) as f64)
}

/// Variant for all of `[0,1]^d` with `d + 1` queries: `φ_0 = y` followed by
/// the moment queries. If `v_0 < ε/2` the hypothesis is `t̂ = 0`, otherwise
/// `t̂_i = clamp(2v_i/v_0)`. Rounded in `R^{d+1}`, so its list bound is
/// `d + 2`, one more than the promise-class learner. Intended tolerance
/// [`unrestricted_nu`].
pub fn unrestricted_threshold_sq_program(d: usize, eps: f64) -> Result<SqProgram> {
    if d == 0 {
        return Err(Error::ZeroDimension);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            value: eps,
            expected: "0 < eps < 1",
        });
    }
    let queries = std::iter::once(Query::Label)
        .chain((0..d).map(Query::LabelTimesCoord))
        .collect();
    SqProgram::nonadaptive(queries, move |v| {
        let vol = v[0];
        let t = if vol < eps / 2.0 {
            vec![0.0; v.len() - 1]
        } else {
            v[1..]
                .iter()
                .map(|&vi| (2.0 * vi / vol).clamp(0.0, 1.0))
                .collect()
        };
        HypothesisValue::Threshold {
            t: Point::from_finite(t),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, SplitMix64};

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    fn exact_moments(t: &[f64]) -> Vec<f64> {
        let vol: f64 = t.iter().product();
        t.iter().map(|ti| vol * ti / 2.0).collect()
    }

    #[test]
    fn err_unif_examples() {
        let t = pt(&[0.3, 0.8, 0.5]);
        assert_eq!(err_unif(&t, &t).unwrap(), 0.0);
        assert_eq!(err_unif(&pt(&[0.0, 0.0]), &pt(&[1.0, 0.0])).unwrap(), 0.0);
        assert_eq!(err_unif(&pt(&[0.5, 0.5]), &pt(&[1.0, 1.0])).unwrap(), 0.75);
        assert!(err_unif(&pt(&[0.5, 1.2]), &pt(&[1.0, 1.0])).is_err());
        assert!(err_unif(&pt(&[0.5]), &pt(&[1.0, 1.0])).is_err());
    }

    #[test]
    fn err_unif_matches_monte_carlo() {
        let s = pt(&[0.4, 0.9]);
        let t = pt(&[0.7, 0.6]);
        let mut rng: SplitMix64 = stream_rng(11);
        let n = 200_000;
        let disagree = (0..n)
            .filter(|_| {
                let x = [rng.gen::<f64>(), rng.gen::<f64>()];
                let hs = x[0] <= 0.4 && x[1] <= 0.9;
                let ht = x[0] <= 0.7 && x[1] <= 0.6;
                hs != ht
            })
            .count() as f64
            / n as f64;
        let e = err_unif(&s, &t).unwrap();
        let sigma = (e * (1.0 - e) / n as f64).sqrt();
        assert!((disagree - e).abs() < 4.0 * sigma);
    }

    #[test]
    fn sampler_labels() {
        let ones = ThresholdSampler::new(pt(&[1.0, 1.0])).unwrap();
        assert!(ones.sample(1000, 1).iter().all(|e| e.y));
        let zeros = ThresholdSampler::new(pt(&[0.0, 0.0])).unwrap();
        assert!(zeros.sample(1000, 1).iter().all(|e| !e.y));
        assert!(ThresholdSampler::new(pt(&[1.5])).is_err());
        assert_eq!(ones.sample(10, 4), ones.sample(10, 4));
    }

    #[test]
    fn sampler_positive_rate() {
        let t = [0.6, 0.8, 0.9];
        let src = ThresholdSampler::new(pt(&t)).unwrap();
        let n = 100_000;
        let mut pos = 0u64;
        src.visit(n, 7, |x, y| {
            assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
            pos += u64::from(y);
        });
        let v: f64 = t.iter().product();
        let sigma = (v * (1.0 - v) / n as f64).sqrt();
        assert!((pos as f64 / n as f64 - v).abs() < 3.0 * sigma);
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(threshold_postprocess(&[0.5, 0.5]).as_slice(), &[1.0, 1.0]);
        let t = threshold_postprocess(&[0.125, 0.25]);
        assert!(t.linf_dist(&pt(&[0.5, 1.0])) < 1e-15);
        assert_eq!(threshold_postprocess(&[0.0, 0.3]).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn inversion_identity_on_grids() {
        for d in 1..=3 {
            let steps: usize = 7;
            let total = steps.pow(d as u32);
            for code in 0..total {
                let t: Vec<f64> = (0..d)
                    .map(|i| 0.5 + 0.5 * ((code / steps.pow(i as u32)) % steps) as f64 / 6.0)
                    .collect();
                let back = threshold_postprocess(&exact_moments(&t));
                assert!(back.linf_dist(&pt(&t)) <= 1e-12, "{t:?} -> {back:?}");
            }
        }
    }

    /// Answers perturbed anywhere in the `ν` box around the exact moments
    /// still invert to within `ε` of the truth in `err_unif`.
    #[test]
    fn promise_tolerance_calibration() {
        let mut rng: SplitMix64 = stream_rng(5);
        for d in 1..=3usize {
            for &eps in &[0.05, 0.1, 0.3] {
                let c = 0.5;
                let nu = recommended_nu(eps, d, c).unwrap();
                let mut worst: f64 = 0.0;
                for _ in 0..400 {
                    let t: Vec<f64> = (0..d).map(|_| c + (1.0 - c) * rng.gen::<f64>()).collect();
                    let v = exact_moments(&t);
                    let corners = (0..1usize << d).map(|m| {
                        (0..d)
                            .map(|i| if m >> i & 1 == 1 { nu } else { -nu })
                            .collect::<Vec<_>>()
                    });
                    let random = (0..16).map(|_| {
                        (0..d)
                            .map(|_| nu * (2.0 * rng.gen::<f64>() - 1.0))
                            .collect()
                    });
                    for dv in corners.chain(random) {
                        let vv: Vec<f64> = v.iter().zip(&dv).map(|(a, b)| a + b).collect();
                        let e = err_unif(&threshold_postprocess(&vv), &pt(&t)).unwrap();
                        worst = worst.max(e);
                    }
                }
                assert!(worst <= eps, "d={d} eps={eps} worst={worst}");
            }
        }
    }

    #[test]
    fn unrestricted_tolerance_calibration() {
        let mut rng: SplitMix64 = stream_rng(6);
        for d in 1..=3usize {
            for &eps in &[0.05, 0.1, 0.3] {
                let nu = unrestricted_nu(eps, d);
                let prog = unrestricted_threshold_sq_program(d, eps).unwrap();
                for _ in 0..2000 {
                    let t: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
                    let vol: f64 = t.iter().product();
                    let mut v = vec![vol];
                    v.extend(exact_moments(&t));
                    let vv: Vec<f64> = v
                        .iter()
                        .map(|a| (a + nu * (2.0 * rng.gen::<f64>() - 1.0)).clamp(0.0, 1.0))
                        .collect();
                    let HypothesisValue::Threshold { t: th } = prog.postprocess(&vv) else {
                        unreachable!()
                    };
                    let e = err_unif(&th, &pt(&t)).unwrap();
                    assert!(e <= eps, "d={d} eps={eps} t={t:?} err={e}");
                }
            }
        }
    }

    #[test]
    fn promise_bounds() {
        assert!(threshold_sq_program(2, 0.0).is_err());
        assert!(threshold_sq_program(2, 1.0).is_err());
        assert!(threshold_sq_program(0, 0.5).is_err());
        assert_eq!(recommended_nu(0.1, 2, 0.5).unwrap(), 0.0015625);
    }
}
