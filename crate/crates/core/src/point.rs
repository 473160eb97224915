use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

/// Dense real vector in `R^d`.
///
/// Iterates, component gradients, estimators and table entries are all
/// `Point`s. Binary operations panic on dimension mismatch; callers validate
/// dimensions at API boundaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(values: Vec<f64>) -> Self {
        Point(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn fill(&mut self, value: f64) {
        self.0.iter_mut().for_each(|v| *v = value);
    }

    pub fn dot(&self, other: &Point) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Point) {
        assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += alpha * b;
        }
    }

    pub fn add_assign(&mut self, other: &Point) {
        assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    pub fn sub_assign(&mut self, other: &Point) {
        assert_eq!(self.dim(), other.dim());
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a -= b;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.0.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn scaled(&self, alpha: f64) -> Point {
        Point(self.0.iter().map(|v| alpha * v).collect())
    }

    pub fn sub(&self, other: &Point) -> Point {
        let mut out = self.clone();
        out.sub_assign(other);
        out
    }

    pub fn add(&self, other: &Point) -> Point {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn dist_sq(&self, other: &Point) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn max_abs_diff(&self, other: &Point) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(&other.0).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max)
    }
}

impl From<Vec<f64>> for Point {
    fn from(values: Vec<f64>) -> Self {
        Point(values)
    }
}

impl From<&[f64]> for Point {
    fn from(values: &[f64]) -> Self {
        Point(values.to_vec())
    }
}

impl Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}
