use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::partition::{MemberId, Partition};
use crate::error::{Error, Result};
use crate::point::Point;

/// Output of [`scaled_list_round`]: the rounded point and the tile it came
/// from. Two roundings agree iff their ids are equal.
#[derive(Debug, Clone, PartialEq)]
pub struct ListRounded {
    pub value: Point,
    pub id: MemberId,
}

/// Rounds `xhat` to the center of its tile in the tiling scaled by `eps`:
/// `eps · round_point(P, xhat / eps)`.
///
/// If `P` is `(k, ρ)`-secluded with `ρ ≤ 1/2`, then for every `x` all
/// `xhat ∈ B_{ρ·eps}(x)` round into `B_eps(x)` and take at most `k` values.
pub fn scaled_list_round(xhat: &Point, eps: f64, p: &Partition) -> Result<ListRounded> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::NonPositiveRadius(eps));
    }
    xhat.ensure_dim(p.dim())?;
    let scaled = Point::new(xhat.as_slice().iter().map(|v| v / eps).collect())?;
    let id = p.locate(&scaled)?;
    let value = Point::new(p.center(&id).as_slice().iter().map(|c| c * eps).collect())?;
    Ok(ListRounded { value, id })
}

/// An `ℓ`-bit shared random string, read as the integer `r ∈ {1, …, 2^ℓ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CertString {
    ell: u32,
    r: u64,
}

impl CertString {
    pub fn new(ell: u32, r: u64) -> Result<Self> {
        if ell > 63 || r < 1 || r > 1u64 << ell {
            return Err(Error::CertificateOutOfRange { ell, r });
        }
        Ok(CertString { ell, r })
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn r(&self) -> u64 {
        self.r
    }

    /// `2^ℓ`.
    pub fn modulus(&self) -> u64 {
        1u64 << self.ell
    }

    /// Every certificate of length `ell`, in increasing `r`.
    pub fn all(ell: u32) -> Result<impl Iterator<Item = CertString>> {
        CertString::new(ell, 1)?;
        Ok((1..=1u64 << ell).map(move |r| CertString { ell, r }))
    }
}

/// `⌈log₂(d/δ)⌉`, the certificate length for `d` coordinates and failure
/// probability `δ`. Computed as the least `ℓ ≥ 0` with `2^ℓ ≥ d/δ`.
pub fn certificate_len(dim: usize, delta: f64) -> Result<u32> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            value: delta,
            expected: "0 < delta <= 1",
        });
    }
    if dim == 0 {
        return Err(Error::ZeroDimension);
    }
    let target = dim as f64 / delta;
    (0..=63u32)
        .find(|&ell| (1u64 << ell) as f64 >= target)
        .ok_or(Error::InvalidParameter {
            name: "delta",
            value: delta,
            expected: "d/delta <= 2^63",
        })
}

/// Output of [`grid_cert_round`]: the rounded point and the integer grid
/// index `k` of every coordinate (`value_i = k_i · 2·eps0`).
#[derive(Debug, Clone, PartialEq)]
pub struct CertRounded {
    pub value: Point,
    pub grid: Vec<i64>,
}

/// Rounds every coordinate to the nearest `k · 2·eps0` with
/// `k ≡ r (mod 2^ℓ)`. Exact ties go to the larger candidate.
///
/// Candidates are `2^ℓ · 2·eps0` apart, so `‖out − xhat‖∞ ≤ 2^ℓ · eps0`.
///
/// ```
/// use replicable::geometry::{grid_cert_round, CertString};
/// use replicable::Point;
///
/// let cert = CertString::new(2, 3).unwrap();
/// let x = Point::new(vec![0.62, 0.11]).unwrap();
/// let out = grid_cert_round(&x, 0.05, cert).unwrap();
/// assert_eq!(out.grid, vec![7, 3]);
/// ```
pub fn grid_cert_round(xhat: &Point, eps0: f64, cert: CertString) -> Result<CertRounded> {
    if !(eps0.is_finite() && eps0 > 0.0) {
        return Err(Error::NonPositiveRadius(eps0));
    }
    let step = 2.0 * eps0;
    let m = cert.modulus() as f64;
    let overflow = || Error::InvalidParameter {
        name: "xhat",
        value: f64::INFINITY,
        expected: "grid index within i64",
    };
    let mut grid = Vec::with_capacity(xhat.dim());
    for &v in xhat.as_slice() {
        let t = v / step - cert.r() as f64;
        let j = (t / m + 0.5).floor();
        let k = (j as i128)
            .checked_mul(cert.modulus() as i128)
            .and_then(|jm| jm.checked_add(cert.r() as i128))
            .and_then(|k| i64::try_from(k).ok())
            .ok_or_else(overflow)?;
        grid.push(k);
    }
    let value = Point::new(grid.iter().map(|&k| k as f64 * step).collect())?;
    Ok(CertRounded { value, grid })
}

/// Certificates under which some `xhat ∈ B_eps0(x)` can round differently
/// from the rest.
///
/// For certificate `r` the rounding boundaries sit at the midpoints
/// `(j·2^ℓ + r + 2^{ℓ−1}) · 2·eps0`. With ties broken upward, coordinate
/// `x_i` is unsafe for `r` iff some midpoint `m` has `m − eps0 ≤ x_i < m + eps0`.
/// The midpoints of all certificates together are `2·eps0` apart, so each
/// coordinate rules out exactly one `r` and the set has at most `d` elements.
pub fn cert_bad_set(x: &Point, eps0: f64, ell: u32) -> Result<BTreeSet<u64>> {
    if !(eps0.is_finite() && eps0 > 0.0) {
        return Err(Error::NonPositiveRadius(eps0));
    }
    CertString::new(ell, 1)?;
    let step = 2.0 * eps0;
    let m = 1i128 << ell;
    let half = m as f64 / 2.0;
    Ok(x.as_slice()
        .iter()
        .map(|&v| {
            let big_m = (v / step - half + 0.5).floor() as i128;
            match big_m.rem_euclid(m) {
                0 => m as u64,
                r => r as u64,
            }
        })
        .collect())
}

/// Coordinatewise clamp to `[0, 1]`.
pub fn clamp_unit(y: &Point) -> Point {
    Point::from_finite(y.as_slice().iter().map(|v| v.clamp(0.0, 1.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PartitionSpec;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn close(a: &Point, b: &[f64]) -> bool {
        a.as_slice()
            .iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn scaled_round_examples() {
        let grid = Partition::new(PartitionSpec::grid(1).unwrap()).unwrap();
        let r = scaled_list_round(&pt(&[0.33]), 0.2, &grid).unwrap();
        assert!(close(&r.value, &[0.3]));
        assert_eq!(r.id.as_slice(), &[1]);

        // Image of [0.3, 0.5] is {0.3, 0.5}.
        let mut image = BTreeSet::new();
        for i in 0..=1000 {
            let x = 0.3 + 0.2 * i as f64 / 1000.0;
            image.insert(scaled_list_round(&pt(&[x]), 0.2, &grid).unwrap().id);
        }
        assert_eq!(image.len(), 2);

        let center = pt(&[0.3]);
        assert!(close(
            &scaled_list_round(&center, 0.2, &grid).unwrap().value,
            &[0.3]
        ));
        assert!(scaled_list_round(&center, 0.0, &grid).is_err());
        assert!(scaled_list_round(&pt(&[0.1, 0.2]), 0.2, &grid).is_err());
    }

    #[test]
    fn cert_round_examples() {
        let c1 = CertString::new(2, 1).unwrap();
        let out = grid_cert_round(&pt(&[0.62]), 0.05, c1).unwrap();
        assert_eq!(out.grid, vec![5]);
        assert!(close(&out.value, &[0.5]));
        let out = grid_cert_round(&pt(&[0.5]), 0.05, c1).unwrap();
        assert_eq!(out.grid, vec![5]);

        let c3 = CertString::new(2, 3).unwrap();
        let out = grid_cert_round(&pt(&[0.62, 0.11]), 0.05, c3).unwrap();
        assert!(close(&out.value, &[0.7, 0.3]));
    }

    #[test]
    fn cert_round_ties_go_up() {
        // Candidates for r = 1, ℓ = 1, eps0 = 0.5: k odd, values 1, 3, ...
        let c = CertString::new(1, 1).unwrap();
        let out = grid_cert_round(&pt(&[2.0]), 0.5, c).unwrap();
        assert_eq!(out.grid, vec![3]);
    }

    #[test]
    fn certificate_validation() {
        assert!(CertString::new(0, 1).is_ok());
        assert!(CertString::new(0, 2).is_err());
        assert!(CertString::new(2, 0).is_err());
        assert!(CertString::new(2, 5).is_err());
        assert!(CertString::new(64, 1).is_err());
        assert_eq!(CertString::all(3).unwrap().count(), 8);
    }

    #[test]
    fn certificate_lengths() {
        assert_eq!(certificate_len(4, 0.25).unwrap(), 4);
        assert_eq!(certificate_len(1, 0.5).unwrap(), 1);
        assert_eq!(certificate_len(2, 0.5).unwrap(), 2);
        assert_eq!(certificate_len(2, 0.25).unwrap(), 3);
        assert_eq!(certificate_len(1, 1.0).unwrap(), 0);
        assert!(certificate_len(2, 0.0).is_err());
    }

    #[test]
    fn bad_set_examples() {
        // Midpoint of the r = 1 candidates 0.1 and 0.5 is 0.3.
        let bad = cert_bad_set(&pt(&[0.30]), 0.05, 2).unwrap();
        assert_eq!(bad.into_iter().collect::<Vec<_>>(), vec![1]);
        // A point sitting on a candidate still rules out exactly one r.
        let bad = cert_bad_set(&pt(&[0.5]), 0.05, 2).unwrap();
        assert_eq!(bad.len(), 1);
        let x = pt(&[0.13, 0.58, 0.91, 0.02]);
        assert!(cert_bad_set(&x, 0.01, 4).unwrap().len() <= 4);
    }

    #[test]
    fn clamp_examples() {
        assert_eq!(
            clamp_unit(&pt(&[-0.1, 0.5, 1.3])).as_slice(),
            &[0.0, 0.5, 1.0]
        );
        let inside = pt(&[0.0, 0.25, 1.0]);
        assert_eq!(clamp_unit(&inside), inside);
        let b = pt(&[0.0, 1.0]);
        let y = pt(&[-0.15, 1.1]);
        assert!(y.linf_dist(&b) <= 0.2);
        assert!(clamp_unit(&y).linf_dist(&b) <= 0.2);
    }
}
