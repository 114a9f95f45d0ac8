use std::fmt;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

/// Largest denominator allowed for a shift entry.
pub const MAX_DENOMINATOR: i64 = 1 << 16;

/// A strictly-upper entry `B[row][col]` of the shift matrix, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shift {
    pub row: usize,
    pub col: usize,
    pub value: Ratio<i64>,
}

/// The shift matrix `B` of a cube tiling: upper unitriangular with rational
/// strictly-upper entries. The tiles are `Bz + [0,1)^d` for `z ∈ Z^d`.
///
/// Since `det B = 1` the translates tile `R^d` for any choice of entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionSpec {
    dim: usize,
    /// Row-major strictly-upper entries; zero entries are not stored.
    shifts: Vec<Shift>,
}

impl PartitionSpec {
    pub fn new(dim: usize, shifts: impl IntoIterator<Item = Shift>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut dense = vec![Ratio::zero(); dim * dim];
        for s in shifts {
            if s.row >= dim || s.col >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: s.row.max(s.col) + 1,
                });
            }
            if s.col <= s.row {
                return Err(Error::NotUnitriangular {
                    row: s.row,
                    col: s.col,
                });
            }
            if *s.value.denom() > MAX_DENOMINATOR {
                return Err(Error::DenominatorOverflow {
                    row: s.row,
                    col: s.col,
                    denominator: *s.value.denom(),
                });
            }
            dense[s.row * dim + s.col] = s.value;
        }
        let shifts = (0..dim)
            .flat_map(|row| (row + 1..dim).map(move |col| (row, col)))
            .filter_map(|(row, col)| {
                let value = dense[row * dim + col];
                (!value.is_zero()).then_some(Shift { row, col, value })
            })
            .collect();
        Ok(PartitionSpec { dim, shifts })
    }

    /// Validates a full `d × d` matrix: unit diagonal, zeros below it.
    pub fn from_matrix(rows: &[Vec<Ratio<i64>>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        let mut shifts = Vec::new();
        for (row, entries) in rows.iter().enumerate() {
            if entries.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: entries.len(),
                });
            }
            for (col, &value) in entries.iter().enumerate() {
                let ok = match col.cmp(&row) {
                    std::cmp::Ordering::Less => value.is_zero(),
                    std::cmp::Ordering::Equal => value.is_one(),
                    std::cmp::Ordering::Greater => {
                        shifts.push(Shift { row, col, value });
                        true
                    }
                };
                if !ok {
                    return Err(Error::NotUnitriangular { row, col });
                }
            }
        }
        PartitionSpec::new(dim, shifts)
    }

    /// The integer grid `Z^d + [0,1)^d`.
    pub fn grid(dim: usize) -> Result<Self> {
        PartitionSpec::new(dim, [])
    }

    /// The planar brick wall: row `z₂` is shifted right by `z₂/2`.
    pub fn brick_wall() -> Self {
        PartitionSpec::new(
            2,
            [Shift {
                row: 0,
                col: 1,
                value: Ratio::new(1, 2),
            }],
        )
        .expect("valid spec")
    }

    /// Built-in spec for `dim`: the grid for `d = 1`, the brick wall for
    /// `d = 2` and a searched shear for `d = 3`.
    pub fn standard(dim: usize) -> Option<Self> {
        match dim {
            1 => PartitionSpec::grid(1).ok(),
            2 => Some(PartitionSpec::brick_wall()),
            3 => Some(PartitionSpec::searched_3d()),
            _ => None,
        }
    }

    /// A `d = 3` shear found by [`search_shifts`](super::search_shifts).
    /// It is `(4, ρ)`-secluded for every `ρ` below `1/6`; the built-in
    /// profile uses `ρ = 0.165`.
    pub fn searched_3d() -> Self {
        PartitionSpec::new(
            3,
            [
                Shift {
                    row: 0,
                    col: 1,
                    value: Ratio::new(1, 3),
                },
                Shift {
                    row: 0,
                    col: 2,
                    value: Ratio::new(2, 3),
                },
                Shift {
                    row: 1,
                    col: 2,
                    value: Ratio::new(1, 2),
                },
            ],
        )
        .expect("valid spec")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shifts(&self) -> &[Shift] {
        &self.shifts
    }

    pub fn entry(&self, row: usize, col: usize) -> Ratio<i64> {
        if row == col {
            return Ratio::one();
        }
        self.shifts
            .iter()
            .find(|s| s.row == row && s.col == col)
            .map_or_else(Ratio::zero, |s| s.value)
    }

    pub fn matrix(&self) -> Vec<Vec<Ratio<i64>>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    /// `lcm` of the denominators in row `row`. Anchor coordinates along that
    /// axis all lie on the grid `Z / period`.
    pub fn axis_period(&self, row: usize) -> i64 {
        self.shifts
            .iter()
            .filter(|s| s.row == row)
            .fold(1i64, |acc, s| acc.lcm(s.value.denom()))
    }
}

impl fmt::Display for PartitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "d={} [", self.dim)?;
        for (n, s) in self.shifts.iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "B{}{}={}", s.row + 1, s.col + 1, s.value)?;
        }
        write!(f, "]")
    }
}

/// Integer index `z` of the tile `Bz + [0,1)^d`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MemberId(Vec<i64>);

impl MemberId {
    pub fn new(z: Vec<i64>) -> Self {
        MemberId(z)
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<i64> {
        self.0
    }
}

/// A built tiling ready for point location.
#[derive(Debug, Clone)]
pub struct Partition {
    spec: PartitionSpec,
    /// Row-major `B` as floats.
    b: Vec<f64>,
}

impl Partition {
    pub fn new(spec: PartitionSpec) -> Result<Self> {
        let d = spec.dim();
        let mut b = vec![0.0; d * d];
        for i in 0..d {
            b[i * d + i] = 1.0;
        }
        for s in spec.shifts() {
            b[s.row * d + s.col] = s.value.to_f64().expect("bounded rational");
        }
        Ok(Partition { spec, b })
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn spec(&self) -> &PartitionSpec {
        &self.spec
    }

    /// `Σ_{j>i} B_ij z_j`, the offset of axis `i` given the later indices.
    #[inline]
    fn offset(&self, i: usize, z: &[i64]) -> f64 {
        let d = self.dim();
        let row = &self.b[i * d..(i + 1) * d];
        let mut s = 0.0;
        for j in i + 1..d {
            s += row[j] * z[j] as f64;
        }
        s
    }

    /// Back-substitution from the last axis down: `z_i = ⌊x_i − Σ_{j>i} B_ij z_j⌋`.
    /// `x` must have the partition's dimension and finite coordinates.
    pub(crate) fn locate_into(&self, x: &[f64], z: &mut [i64]) {
        for i in (0..self.dim()).rev() {
            z[i] = (x[i] - self.offset(i, z)).floor() as i64;
        }
    }

    pub fn locate(&self, x: &Point) -> Result<MemberId> {
        x.ensure_dim(self.dim())?;
        let mut z = vec![0; self.dim()];
        self.locate_into(x.as_slice(), &mut z);
        Ok(MemberId(z))
    }

    /// Anchor `Bz` of a tile.
    pub fn anchor(&self, id: &MemberId) -> Vec<f64> {
        let z = id.as_slice();
        assert_eq!(z.len(), self.dim(), "dimension mismatch");
        (0..self.dim())
            .map(|i| z[i] as f64 + self.offset(i, z))
            .collect()
    }

    /// Center `Bz + ½·1` of a tile.
    pub fn center(&self, id: &MemberId) -> Point {
        Point::from_finite(self.anchor(id).into_iter().map(|a| a + 0.5).collect())
    }

    pub fn round_point(&self, x: &Point) -> Result<Point> {
        Ok(self.center(&self.locate(x)?))
    }

    /// All tiles whose half-open cube meets the closed ball `B_eps(x)`.
    ///
    /// Along axis `i` the tile `Bz + [0,1)^d` meets `[x_i − eps, x_i + eps]`
    /// iff its anchor `a_i` lies in `(x_i − eps − 1, x_i + eps]`, so the
    /// candidates are enumerated exactly, last axis first.
    pub fn members_near(&self, x: &Point, eps: f64) -> Result<Vec<MemberId>> {
        x.ensure_dim(self.dim())?;
        if !(eps.is_finite() && eps > 0.0) {
            return Err(Error::NonPositiveRadius(eps));
        }
        let mut out = Vec::new();
        let mut z = vec![0; self.dim()];
        self.walk_near(x.as_slice(), eps, self.dim(), &mut z, &mut |z| {
            out.push(MemberId(z.to_vec()))
        });
        out.sort();
        Ok(out)
    }

    /// `|N_eps(x)|` without allocating the members.
    pub(crate) fn count_near(&self, x: &[f64], eps: f64, z: &mut [i64]) -> usize {
        let mut count = 0;
        self.walk_near(x, eps, self.dim(), z, &mut |_| count += 1);
        count
    }

    fn walk_near(
        &self,
        x: &[f64],
        eps: f64,
        axis: usize,
        z: &mut [i64],
        visit: &mut dyn FnMut(&[i64]),
    ) {
        if axis == 0 {
            visit(z);
            return;
        }
        let i = axis - 1;
        let rel = x[i] - self.offset(i, z);
        let lo = (rel - eps - 1.0).floor() as i64 + 1;
        let hi = (rel + eps).floor() as i64;
        for zi in lo..=hi {
            z[i] = zi;
            self.walk_near(x, eps, i, z, visit);
        }
    }
}
