//! Parameter initializers.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::graph::Matrix;

pub fn xavier_uniform<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, std: f64) -> Matrix {
    let dist = Normal::new(0.0, std).expect("std must be positive and finite");
    Matrix::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

pub fn zeros(rows: usize, cols: usize) -> Matrix {
    Matrix::zeros((rows, cols))
}

pub fn ones(rows: usize, cols: usize) -> Matrix {
    Matrix::ones((rows, cols))
}
