//! Pairwise summation in a fixed tree shape.

use crate::vector::Vector;

const LEAF: usize = 8;

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_vectors(xs: &[Vector], n: usize) -> Vector {
    if xs.len() <= LEAF {
        let mut acc = Vector::zeros(n);
        for x in xs {
            acc += *x;
        }
        return acc;
    }
    let mid = xs.len() / 2;
    pairwise_sum_vectors(&xs[..mid], n) + pairwise_sum_vectors(&xs[mid..], n)
}
