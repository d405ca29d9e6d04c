use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::scalar::Real;

/// Pulay extrapolation over stored (Fock, error) pairs.
pub(crate) struct Diis<T: Real> {
    capacity: usize,
    samples: VecDeque<(DMatrix<T>, DMatrix<T>)>,
}

impl<T: Real> Diis<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            samples: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, fock: DMatrix<T>, error: DMatrix<T>) {
        if self.samples.len() == self.capacity {
            self.samples.pop_front();
        }
        self.samples.push_back((fock, error));
    }

    /// Extrapolated Fock matrix, or `None` with fewer than two samples or
    /// when every subspace down to two vectors is singular.
    pub fn extrapolate(&mut self) -> Option<DMatrix<T>> {
        while self.samples.len() >= 2 {
            let n = self.samples.len();
            let mut b = DMatrix::from_element(n + 1, n + 1, -T::one());
            b[(n, n)] = T::zero();
            for i in 0..n {
                for j in 0..=i {
                    let v = self.samples[i].1.dot(&self.samples[j].1);
                    b[(i, j)] = v;
                    b[(j, i)] = v;
                }
            }
            let mut rhs = DVector::zeros(n + 1);
            rhs[n] = -T::one();
            if let Some(c) = b.lu().solve(&rhs) {
                if c.iter().all(|x| x.is_finite()) {
                    let mut f =
                        DMatrix::zeros(self.samples[0].0.nrows(), self.samples[0].0.ncols());
                    for (k, (fk, _)) in self.samples.iter().enumerate() {
                        f += fk * c[k];
                    }
                    return Some(f);
                }
            }
            self.samples.pop_front();
        }
        None
    }
}
