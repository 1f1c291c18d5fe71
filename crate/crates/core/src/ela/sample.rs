//! Design sampling and point geometry shared by the feature computations.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ElaError;
use crate::problem::BudgetedEvaluator;
use crate::rng::RandomStream;

/// An evaluated design: points in the box and their objective values.
#[derive(Debug, Clone)]
pub struct DesignSample {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl DesignSample {
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self, ElaError> {
        if x.len() != y.len() {
            return Err(ElaError::LengthMismatch { x: x.len(), y: y.len() });
        }
        if x.is_empty() {
            return Err(ElaError::DegenerateSample("empty design".into()));
        }
        Ok(DesignSample { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// Rows `indices` of the design, with values. Indices must be in range.
    pub fn subset(&self, indices: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x = indices.iter().map(|&i| self.x[i].clone()).collect();
        let y = indices.iter().map(|&i| self.y[i]).collect();
        (x, y)
    }
}

/// Latin hypercube sample of `n` points in the box: each dimension is cut
/// into `n` strata, each stratum used exactly once per dimension, with a
/// fresh uniform offset inside every cell.
pub fn latin_hypercube(
    n: usize,
    lower: &[f64],
    upper: &[f64],
    rng: &mut RandomStream,
) -> Vec<Vec<f64>> {
    let dim = lower.len();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        let width = (upper[j] - lower[j]) / n as f64;
        let column = strata
            .into_iter()
            .map(|s| lower[j] + (s as f64 + rng.gen::<f64>()) * width)
            .collect();
        columns.push(column);
    }
    (0..n).map(|i| (0..dim).map(|j| columns[j][i]).collect()).collect()
}

/// Draws `sample_coef * D` Latin hypercube points and evaluates them through
/// the budgeted evaluator, in row order.
pub fn sample_design(
    evaluator: &mut BudgetedEvaluator,
    sample_coef: usize,
    rng: &mut RandomStream,
) -> Result<DesignSample, ElaError> {
    let spec = evaluator.problem().spec().clone();
    let n = sample_coef * spec.dim;
    if n == 0 {
        return Err(ElaError::DegenerateSample("zero-point design".into()));
    }
    let x = latin_hypercube(n, &spec.lower, &spec.upper, rng);
    let mut y = Vec::with_capacity(n);
    for point in &x {
        y.push(evaluator.evaluate(point)?);
    }
    DesignSample::new(x, y)
}

/// Full symmetric matrix of Euclidean distances, computed once per design
/// and shared by every feature computation that needs point geometry.
#[derive(Debug, Clone)]
pub struct PairwiseDistances {
    n: usize,
    data: Vec<f64>,
}

impl PairwiseDistances {
    pub fn compute(points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = euclidean(&points[i], &points[j]);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        PairwiseDistances { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
