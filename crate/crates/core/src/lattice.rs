//! Lattices, 2D reduction, duality and the fundamental-domain parametrization.
//!
//! A [`Lattice`] stores its basis as the columns of a `d × d` matrix together
//! with the cached Gram matrix, volume and inverse basis. Every other module
//! works from these cached quantities.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default tolerance for [`classify_shape`].
pub const SHAPE_TOL: f64 = 1e-4;

#[derive(Clone, PartialEq)]
pub struct Lattice {
    basis: DMatrix<f64>,
    gram: DMatrix<f64>,
    inverse: DMatrix<f64>,
    volume: f64,
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Lattice")
            .field("dim", &self.dim())
            .field("basis", &self.columns())
            .field("volume", &self.volume)
            .finish()
    }
}

/// Lattices with a fixed, documented basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NamedLattice {
    Z1,
    Z2,
    Z3,
    /// Triangular lattice, basis (1, 0), (1/2, √3/2) before rescaling.
    A2,
    /// Face-centred cubic, basis (1,0,1), (0,1,1), (1,1,0) before rescaling.
    D3,
    /// Body-centred cubic, basis (1,−1,1)/2, (−1,1,1)/2, (1,1,−1)/2 before rescaling.
    D3Star,
}

impl std::str::FromStr for NamedLattice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "Z1" | "Z" => Ok(NamedLattice::Z1),
            "Z2" => Ok(NamedLattice::Z2),
            "Z3" => Ok(NamedLattice::Z3),
            "A2" => Ok(NamedLattice::A2),
            "D3" | "FCC" => Ok(NamedLattice::D3),
            "D3STAR" | "D3*" | "BCC" => Ok(NamedLattice::D3Star),
            _ => Err(invalid("lattice", format!("unknown named lattice `{s}`"))),
        }
    }
}

impl Lattice {
    /// Builds a lattice from a basis whose columns are the basis vectors.
    pub fn from_basis(basis: DMatrix<f64>) -> Result<Self> {
        let d = basis.nrows();
        if d == 0 || basis.ncols() != d {
            return Err(invalid(
                "basis",
                format!("expected a square matrix, got {}x{}", d, basis.ncols()),
            ));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(invalid("basis", "non-finite entry"));
        }
        let det = basis.determinant();
        let max_norm = (0..d).map(|j| basis.column(j).norm()).fold(0.0, f64::max);
        let threshold = 1e-14 * max_norm.powi(d as i32);
        if det.abs() < threshold || det == 0.0 {
            return Err(Error::SingularBasis { det, threshold });
        }
        let inverse = basis
            .clone()
            .try_inverse()
            .ok_or(Error::SingularBasis { det, threshold })?;
        let gram = basis.transpose() * &basis;
        Ok(Lattice {
            volume: det.abs(),
            basis,
            gram,
            inverse,
        })
    }

    /// Builds a lattice from a list of basis vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let d = columns.len();
        if d == 0 {
            return Err(invalid("basis", "empty basis"));
        }
        for c in columns {
            if c.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: c.len(),
                });
            }
        }
        Self::from_basis(DMatrix::from_fn(d, d, |i, j| columns[j][i]))
    }

    /// A named lattice rescaled to the requested cell volume.
    pub fn named(name: NamedLattice, volume: f64) -> Result<Self> {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(invalid("volume", "must be positive"));
        }
        let s3 = 3f64.sqrt();
        let cols: Vec<Vec<f64>> = match name {
            NamedLattice::Z1 => vec![vec![1.0]],
            NamedLattice::Z2 => vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            NamedLattice::Z3 => vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            NamedLattice::A2 => vec![vec![1.0, 0.0], vec![0.5, s3 / 2.0]],
            NamedLattice::D3 => vec![
                vec![1.0, 0.0, 1.0],
                vec![0.0, 1.0, 1.0],
                vec![1.0, 1.0, 0.0],
            ],
            NamedLattice::D3Star => vec![
                vec![0.5, -0.5, 0.5],
                vec![-0.5, 0.5, 0.5],
                vec![0.5, 0.5, -0.5],
            ],
        };
        let raw = Self::from_columns(&cols)?;
        Ok(raw.with_volume(volume))
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inverse
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Basis vectors as plain vectors.
    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| self.basis.column(j).iter().copied().collect())
            .collect()
    }

    /// Cartesian position of the lattice point with integer coordinates `m`.
    pub fn point(&self, m: &[i64]) -> Vec<f64> {
        let d = self.dim();
        let mut p = vec![0.0; d];
        for (j, &mj) in m.iter().enumerate().take(d) {
            if mj != 0 {
                let c = self.basis.column(j);
                for i in 0..d {
                    p[i] += mj as f64 * c[i];
                }
            }
        }
        p
    }

    /// Coordinates of a Cartesian point in the basis (not rounded).
    pub fn coordinates(&self, x: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(x);
        (&self.inverse * v).iter().copied().collect()
    }

    /// The lattice `t·L`.
    pub fn scaled(&self, t: f64) -> Lattice {
        let basis = &self.basis * t;
        Lattice {
            gram: &self.gram * (t * t),
            inverse: &self.inverse / t,
            volume: self.volume * t.abs().powi(self.dim() as i32),
            basis,
        }
    }

    /// The same shape rescaled to the given volume.
    pub fn with_volume(&self, volume: f64) -> Lattice {
        let t = (volume / self.volume).powf(1.0 / self.dim() as f64);
        self.scaled(t)
    }

    /// `R·L` for an arbitrary linear map `R` (rotations in tests).
    pub fn transformed(&self, map: &DMatrix<f64>) -> Result<Lattice> {
        Lattice::from_basis(map * &self.basis)
    }

    /// Same point set, basis changed by an integer matrix with det ±1.
    pub fn rebased(&self, unimodular: &DMatrix<f64>) -> Result<Lattice> {
        Lattice::from_basis(&self.basis * unimodular)
    }

    /// The dual lattice, basis given by the inverse transpose.
    pub fn dual(&self) -> Lattice {
        let basis = self.inverse.transpose();
        Lattice {
            gram: &basis.transpose() * &basis,
            inverse: self.basis.transpose(),
            volume: 1.0 / self.volume,
            basis,
        }
    }

    /// Center `½ Σ u_i` of the unit cell of the current basis. In 2D call
    /// [`Lattice::reduce2d`] first; in higher dimension the basis is taken as given.
    pub fn cell_center(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|i| 0.5 * (0..d).map(|j| self.basis[(i, j)]).sum::<f64>())
            .collect()
    }

    /// Lagrange–Gauss reduction, normalized so that `0 ≤ 2 g₁₂ ≤ g₁₁ ≤ g₂₂`.
    pub fn reduce2d(&self) -> Result<Lattice> {
        if self.dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: self.dim(),
            });
        }
        let mut u = [self.basis[(0, 0)], self.basis[(1, 0)]];
        let mut v = [self.basis[(0, 1)], self.basis[(1, 1)]];
        let dot = |a: &[f64; 2], b: &[f64; 2]| a[0] * b[0] + a[1] * b[1];
        for _ in 0..10_000 {
            if dot(&v, &v) < dot(&u, &u) {
                std::mem::swap(&mut u, &mut v);
            }
            let g11 = dot(&u, &u);
            let g12 = dot(&u, &v);
            if 2.0 * g12.abs() <= g11 {
                break;
            }
            let mu = (g12 / g11).round();
            v = [v[0] - mu * u[0], v[1] - mu * u[1]];
        }
        if dot(&u, &v) < 0.0 {
            v = [-v[0], -v[1]];
        }
        Lattice::from_columns(&[u.to_vec(), v.to_vec()])
    }

    /// Reduced copy in 2D, unchanged otherwise.
    pub(crate) fn reduced_if_2d(&self) -> Lattice {
        if self.dim() == 2 {
            self.reduce2d().unwrap_or_else(|_| self.clone())
        } else {
            self.clone()
        }
    }

    /// Upper bound on the covering radius. In 2D this is the exact value, the
    /// circumradius of the non-obtuse triangle `(0, u₁, u₂)` of a reduced
    /// basis; otherwise `½ (Σ |u_i|²)^{1/2}`.
    pub fn covering_radius_bound(&self) -> f64 {
        if self.dim() == 2 {
            if let Ok(r) = self.reduce2d() {
                let g = r.gram();
                let (a, b) = (g[(0, 0)], g[(1, 1)]);
                let c = a + b - 2.0 * g[(0, 1)];
                return (a * b * c).sqrt() / (4.0 * 0.5 * r.volume()) * (1.0 + 1e-12);
            }
        }
        0.5 * (0..self.dim()).map(|i| self.gram[(i, i)]).sum::<f64>().sqrt()
    }

    /// Rows of the inverse basis have norms bounding each integer coordinate
    /// of a point in a ball: `|m_i| ≤ R ‖row_i(B⁻¹)‖`.
    pub(crate) fn inverse_row_norms(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.inverse.row(i).norm())
            .collect()
    }
}

impl Serialize for Lattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            dim: usize,
            basis: Vec<Vec<f64>>,
            volume: f64,
        }
        Repr {
            dim: self.dim(),
            basis: self.columns(),
            volume: self.volume,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Lattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            basis: Vec<Vec<f64>>,
        }
        let r = Repr::deserialize(d)?;
        Lattice::from_columns(&r.basis).map_err(serde::de::Error::custom)
    }
}

/// Point `(x, y)` of the fundamental domain `0 ≤ x ≤ ½, x² + y² ≥ 1` together
/// with the cell area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Param2D {
    pub x: f64,
    pub y: f64,
    pub volume: f64,
}

impl Param2D {
    /// Validated constructor; rejects points outside the closed domain.
    pub fn new(x: f64, y: f64, volume: f64) -> Result<Self> {
        let p = Param2D { x, y, volume };
        if !(volume > 0.0) || !volume.is_finite() {
            return Err(invalid("volume", "must be positive"));
        }
        if !p.in_domain(1e-12) {
            return Err(invalid(
                "param",
                format!("({x}, {y}) lies outside the fundamental domain"),
            ));
        }
        Ok(p)
    }

    /// Unchecked constructor, for points of the upper half plane used as
    /// smooth extensions (finite differences, optimizer trial points).
    pub fn raw(x: f64, y: f64, volume: f64) -> Self {
        Param2D { x, y, volume }
    }

    pub fn in_domain(&self, tol: f64) -> bool {
        self.y > 0.0
            && self.x >= -tol
            && self.x <= 0.5 + tol
            && self.x * self.x + self.y * self.y >= 1.0 - tol
    }

    /// `L = (V/y)^{1/2} [Z(1,0) ⊕ Z(x,y)]`. Works for any `y > 0`.
    pub fn to_lattice(&self) -> Result<Lattice> {
        if !(self.y > 0.0) {
            return Err(invalid("y", "must be positive"));
        }
        let s = (self.volume / self.y).sqrt();
        Lattice::from_columns(&[vec![s, 0.0], vec![s * self.x, s * self.y]])
    }

    /// Canonical representative of the lattice's shape class.
    pub fn from_lattice(l: &Lattice) -> Result<Self> {
        let r = l.reduce2d()?;
        let g = r.gram();
        let (g11, g12) = (g[(0, 0)], g[(0, 1)]);
        let x = (g12 / g11).clamp(0.0, 0.5);
        let y = r.volume() / g11;
        Ok(Param2D {
            x,
            y,
            volume: r.volume(),
        })
    }

    /// Folds any point of the upper half plane into the fundamental domain.
    pub fn canonical(&self) -> Result<Self> {
        Self::from_lattice(&self.to_lattice()?)
    }

    pub fn triangular(volume: f64) -> Self {
        Param2D {
            x: 0.5,
            y: 3f64.sqrt() / 2.0,
            volume,
        }
    }

    pub fn square(volume: f64) -> Self {
        Param2D {
            x: 0.0,
            y: 1.0,
            volume,
        }
    }

    pub fn shape(&self, tol: f64) -> ShapeClass {
        classify_param(self.x, self.y, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ShapeClass {
    Triangular,
    Square,
    Rectangular,
    Rhombic,
    Generic,
}

impl fmt::Display for ShapeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ShapeClass::Triangular => "triangular",
            ShapeClass::Square => "square",
            ShapeClass::Rectangular => "rectangular",
            ShapeClass::Rhombic => "rhombic",
            ShapeClass::Generic => "generic",
        };
        f.write_str(s)
    }
}

fn classify_param(x: f64, y: f64, tol: f64) -> ShapeClass {
    let s3 = 3f64.sqrt() / 2.0;
    if (x - 0.5).abs() <= tol && (y - s3).abs() <= tol {
        ShapeClass::Triangular
    } else if x.abs() <= tol && (y - 1.0).abs() <= tol {
        ShapeClass::Square
    } else if x.abs() <= tol && y > 1.0 + tol {
        ShapeClass::Rectangular
    } else if (x * x + y * y - 1.0).abs() <= tol || (x - 0.5).abs() <= tol {
        ShapeClass::Rhombic
    } else {
        ShapeClass::Generic
    }
}

/// Shape class of a 2D lattice from its canonical `(x, y)`.
pub fn classify_shape(l: &Lattice, tol: f64) -> Result<ShapeClass> {
    let p = Param2D::from_lattice(l)?;
    Ok(classify_param(p.x, p.y, tol))
}

/// Integer coordinates of a shift in the (reduced) basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShiftVector(pub Vec<i64>);

impl ShiftVector {
    pub fn new(coords: Vec<i64>) -> Self {
        ShiftVector(coords)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// True when the shift lies in `kL`, i.e. every coordinate is ≡ 0 mod k.
    pub fn is_trivial_mod(&self, k: u32) -> bool {
        self.0.iter().all(|m| m.rem_euclid(k as i64) == 0)
    }

    /// The shift condition `p/k ≡ c_L (mod L)`: every coordinate ≡ k/2 mod k.
    pub fn is_cell_center_mod(&self, k: u32) -> bool {
        k.is_multiple_of(2) && self.0.iter().all(|m| m.rem_euclid(k as i64) == (k / 2) as i64)
    }
}

/// A rotation of the plane by `angle`.
pub fn rotation2d(angle: f64) -> DMatrix<f64> {
    let (s, c) = angle.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// First minimum `|u₁|²` of the triangular lattice at unit density.
pub fn a2_unit_min_norm2() -> f64 {
    2.0 / 3f64.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn identity_is_z2() {
        let l = Lattice::from_columns(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(l.volume(), 1.0);
        assert_eq!(l.gram(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn a2_from_basis_has_unit_volume() {
        let s = (2.0 / 3f64.sqrt()).sqrt();
        let l = Lattice::from_columns(&[vec![s, 0.0], vec![s * 0.5, s * 3f64.sqrt() / 2.0]])
            .unwrap();
        assert_relative_eq!(l.volume(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn singular_basis_rejected() {
        let err = Lattice::from_columns(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::SingularBasis { .. }));
    }

    #[test]
    fn volume_matches_gram_determinant() {
        let l = Lattice::from_columns(&[vec![1.3, 0.2], vec![-0.7, 2.1]]).unwrap();
        assert_relative_eq!(l.volume(), l.gram().determinant().sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn named_lattices() {
        let a2 = Lattice::named(NamedLattice::A2, 1.0).unwrap();
        assert_relative_eq!(a2.volume(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(a2.gram()[(0, 0)], a2_unit_min_norm2(), max_relative = 1e-14);
        let z3 = Lattice::named(NamedLattice::Z3, 1.0).unwrap();
        assert_eq!(z3.gram(), &DMatrix::identity(3, 3));
        let d3 = Lattice::named(NamedLattice::D3, 2.0).unwrap();
        assert_relative_eq!(d3.volume(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn reduce_unimodular_z2() {
        let l = Lattice::from_columns(&[vec![1.0, 0.0], vec![5.0, 1.0]]).unwrap();
        let r = l.reduce2d().unwrap();
        assert_relative_eq!(r.gram()[(0, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.gram()[(1, 1)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.gram()[(0, 1)], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reduce_keeps_reduced_a2() {
        let l = Lattice::from_columns(&[vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]).unwrap();
        let r = l.reduce2d().unwrap();
        for (a, b) in r.gram().iter().zip(l.gram().iter()) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn reduce_unimodular_a2() {
        let a2 = Lattice::named(NamedLattice::A2, 1.0).unwrap();
        let u = DMatrix::from_row_slice(2, 2, &[3.0, 7.0, 2.0, 5.0]);
        let skew = a2.rebased(&u).unwrap();
        let r = skew.reduce2d().unwrap();
        for (a, b) in r.gram().iter().zip(a2.gram().iter()) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn dual_properties() {
        let z2 = Lattice::named(NamedLattice::Z2, 1.0).unwrap();
        assert_eq!(z2.dual().gram(), z2.gram());
        let l = Lattice::from_columns(&[vec![2.0, 0.0], vec![0.3, 1.0]]).unwrap();
        assert_relative_eq!(l.dual().volume(), 0.5, max_relative = 1e-14);
        let back = l.dual().dual();
        for (a, b) in back.basis().iter().zip(l.basis().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        let a2 = Lattice::named(NamedLattice::A2, 1.0).unwrap();
        let d = a2.dual().reduce2d().unwrap();
        for (a, b) in d.gram().iter().zip(a2.gram().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_centers() {
        let z2 = Lattice::named(NamedLattice::Z2, 1.0).unwrap();
        assert_eq!(z2.cell_center(), vec![0.5, 0.5]);
        let z3 = Lattice::named(NamedLattice::Z3, 1.0).unwrap();
        assert_eq!(z3.cell_center(), vec![0.5, 0.5, 0.5]);
        let a2 = Lattice::named(NamedLattice::A2, 1.0).unwrap().reduce2d().unwrap();
        let c = a2.cell_center();
        let s = a2.point(&[1, 1]);
        assert_relative_eq!(c[0], s[0] / 2.0);
        assert_relative_eq!(c[1], s[1] / 2.0);
    }

    #[test]
    fn param_roundtrip() {
        let p = Param2D::triangular(1.0).to_lattice().unwrap();
        let a2 = Lattice::named(NamedLattice::A2, 1.0).unwrap();
        for (a, b) in p.gram().iter().zip(a2.gram().iter()) {
            assert!((a - b).abs() < 1e-14);
        }
        let z = Param2D::new(0.0, 1.0, 1.0).unwrap().to_lattice().unwrap();
        assert_eq!(z.gram(), &DMatrix::identity(2, 2));
        let q = Param2D::new(0.3, 1.2, 2.0).unwrap();
        let back = Param2D::from_lattice(&q.to_lattice().unwrap()).unwrap();
        assert!((back.x - 0.3).abs() < 1e-10 && (back.y - 1.2).abs() < 1e-10);
        assert!((back.volume - 2.0).abs() < 1e-12);
    }

    #[test]
    fn param_outside_domain_rejected() {
        assert!(Param2D::new(0.6, 1.0, 1.0).is_err());
        assert!(Param2D::new(0.2, 0.5, 1.0).is_err());
    }

    #[test]
    fn shapes() {
        let a2 = Lattice::named(NamedLattice::A2, 1.0).unwrap();
        assert_eq!(classify_shape(&a2, SHAPE_TOL).unwrap(), ShapeClass::Triangular);
        let rect = Param2D::new(0.0, 1.4, 1.0).unwrap().to_lattice().unwrap();
        assert_eq!(classify_shape(&rect, SHAPE_TOL).unwrap(), ShapeClass::Rectangular);
        let rh = Param2D::new(0.2, (1.0f64 - 0.04).sqrt(), 1.0)
            .unwrap()
            .to_lattice()
            .unwrap();
        assert_eq!(classify_shape(&rh, SHAPE_TOL).unwrap(), ShapeClass::Rhombic);
        let sq = Lattice::named(NamedLattice::Z2, 3.0).unwrap();
        assert_eq!(classify_shape(&sq, SHAPE_TOL).unwrap(), ShapeClass::Square);
        let g = Param2D::new(0.2, 1.5, 1.0).unwrap().to_lattice().unwrap();
        assert_eq!(classify_shape(&g, SHAPE_TOL).unwrap(), ShapeClass::Generic);
    }

    #[test]
    fn shift_conditions() {
        assert!(ShiftVector::new(vec![1, 1]).is_cell_center_mod(2));
        assert!(ShiftVector::new(vec![2, 2]).is_cell_center_mod(4));
        assert!(!ShiftVector::new(vec![1, 0]).is_cell_center_mod(2));
        assert!(!ShiftVector::new(vec![1, 1]).is_cell_center_mod(3));
        assert!(ShiftVector::new(vec![2, -4]).is_trivial_mod(2));
    }
}
