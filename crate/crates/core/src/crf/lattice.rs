//! Forward, backward and Viterbi recursions over a dense tag lattice.

use crate::num::{log_sum_exp, Scalar};

/// Log-potentials of one sequence: per-position emission scores plus
/// the shared transition, start and stop scores.
///
/// `emissions` is row-major `len x n_tags`; `transitions[i * n_tags + j]`
/// scores tag `i` followed by tag `j`.
#[derive(Debug, Clone)]
pub struct Lattice<'a, F> {
    pub n_tags: usize,
    pub emissions: Vec<F>,
    pub transitions: &'a [F],
    pub start: &'a [F],
    pub stop: &'a [F],
}

/// Posterior marginals of one sequence.
#[derive(Debug, Clone)]
pub struct Marginals<F> {
    pub log_z: F,
    /// `len x n_tags`: P(y_t = j).
    pub node: Vec<F>,
    /// `(len - 1) x n_tags x n_tags`: P(y_t = i, y_{t+1} = j).
    pub edge: Vec<F>,
}

impl<'a, F: Scalar> Lattice<'a, F> {
    pub fn len(&self) -> usize {
        self.emissions.len() / self.n_tags
    }

    pub fn is_empty(&self) -> bool {
        self.emissions.is_empty()
    }

    #[inline]
    fn emit(&self, t: usize, j: usize) -> F {
        self.emissions[t * self.n_tags + j]
    }

    #[inline]
    fn trans(&self, i: usize, j: usize) -> F {
        self.transitions[i * self.n_tags + j]
    }

    /// Unnormalized log-score of one tag path.
    pub fn score(&self, tags: &[usize]) -> F {
        assert_eq!(tags.len(), self.len());
        let Some((&first, _)) = tags.split_first() else {
            return F::zero();
        };
        let mut s = self.start[first] + self.stop[*tags.last().unwrap()];
        for (t, &j) in tags.iter().enumerate() {
            s = s + self.emit(t, j);
        }
        for w in tags.windows(2) {
            s = s + self.trans(w[0], w[1]);
        }
        s
    }

    /// Forward log-messages `alpha[t][j]`, including emissions at `t`.
    pub fn forward(&self) -> Vec<F> {
        let (n, k) = (self.len(), self.n_tags);
        let mut alpha = vec![F::zero(); n * k];
        if n == 0 {
            return alpha;
        }
        for j in 0..k {
            alpha[j] = self.start[j] + self.emit(0, j);
        }
        for t in 1..n {
            for j in 0..k {
                let prev = &alpha[(t - 1) * k..t * k];
                let lse = log_sum_exp((0..k).map(|i| prev[i] + self.trans(i, j)));
                alpha[t * k + j] = lse + self.emit(t, j);
            }
        }
        alpha
    }

    /// Backward log-messages `beta[t][i]`, excluding emissions at `t`.
    pub fn backward(&self) -> Vec<F> {
        let (n, k) = (self.len(), self.n_tags);
        let mut beta = vec![F::zero(); n * k];
        if n == 0 {
            return beta;
        }
        beta[(n - 1) * k..].copy_from_slice(self.stop);
        for t in (0..n - 1).rev() {
            for i in 0..k {
                let next = &beta[(t + 1) * k..(t + 2) * k];
                beta[t * k + i] =
                    log_sum_exp((0..k).map(|j| self.trans(i, j) + self.emit(t + 1, j) + next[j]));
            }
        }
        beta
    }

    /// `ln Z` by the forward recursion. Zero for an empty sequence.
    pub fn log_partition(&self) -> F {
        let (n, k) = (self.len(), self.n_tags);
        if n == 0 {
            return F::zero();
        }
        let alpha = self.forward();
        log_sum_exp((0..k).map(|j| alpha[(n - 1) * k + j] + self.stop[j]))
    }

    /// `ln Z` by the backward recursion.
    pub fn log_partition_backward(&self) -> F {
        if self.is_empty() {
            return F::zero();
        }
        let beta = self.backward();
        log_sum_exp((0..self.n_tags).map(|j| self.start[j] + self.emit(0, j) + beta[j]))
    }

    pub fn marginals(&self) -> Marginals<F> {
        let (n, k) = (self.len(), self.n_tags);
        let alpha = self.forward();
        let beta = self.backward();
        let log_z = self.log_partition();
        let node = (0..n * k).map(|x| (alpha[x] + beta[x] - log_z).exp()).collect();
        let mut edge = vec![F::zero(); n.saturating_sub(1) * k * k];
        for t in 0..n.saturating_sub(1) {
            for i in 0..k {
                for j in 0..k {
                    let lp = alpha[t * k + i] + self.trans(i, j) + self.emit(t + 1, j) + beta[(t + 1) * k + j]
                        - log_z;
                    edge[(t * k + i) * k + j] = lp.exp();
                }
            }
        }
        Marginals { log_z, node, edge }
    }

    /// Highest-scoring path and its score. Ties go to the lower tag index.
    pub fn viterbi(&self) -> (Vec<usize>, F) {
        let (n, k) = (self.len(), self.n_tags);
        if n == 0 {
            return (Vec::new(), F::zero());
        }
        let mut delta: Vec<F> = (0..k).map(|j| self.start[j] + self.emit(0, j)).collect();
        let mut back = vec![0usize; n * k];
        for t in 1..n {
            let mut next = vec![F::zero(); k];
            for j in 0..k {
                let mut best = 0;
                let mut best_score = delta[0] + self.trans(0, j);
                for i in 1..k {
                    let s = delta[i] + self.trans(i, j);
                    if s > best_score {
                        best = i;
                        best_score = s;
                    }
                }
                back[t * k + j] = best;
                next[j] = best_score + self.emit(t, j);
            }
            delta = next;
        }
        let mut last = 0;
        let mut best_score = delta[0] + self.stop[0];
        for j in 1..k {
            let s = delta[j] + self.stop[j];
            if s > best_score {
                last = j;
                best_score = s;
            }
        }
        let mut path = vec![0usize; n];
        path[n - 1] = last;
        for t in (1..n).rev() {
            path[t - 1] = back[t * k + path[t]];
        }
        (path, best_score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros(n: usize, k: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>) {
        (vec![0.0; n * k], vec![0.0; k * k], vec![0.0; k], vec![0.0; k])
    }

    #[test]
    fn uniform_model() {
        let (e, tr, s, st) = zeros(4, 5);
        let lat = Lattice {
            n_tags: 5,
            emissions: e,
            transitions: &tr,
            start: &s,
            stop: &st,
        };
        assert!((lat.log_partition() - 4.0 * 5f64.ln()).abs() < 1e-12);
        assert!((lat.log_partition_backward() - 4.0 * 5f64.ln()).abs() < 1e-12);
        assert_eq!(lat.viterbi().0, [0, 0, 0, 0]);
        let m = lat.marginals();
        assert!(m.node.iter().all(|p| (p - 0.2).abs() < 1e-12));
        assert!(m.edge.iter().all(|p| (p - 0.04).abs() < 1e-12));
    }

    #[test]
    fn empty_sequence() {
        let (e, tr, s, st) = zeros(0, 5);
        let lat = Lattice {
            n_tags: 5,
            emissions: e,
            transitions: &tr,
            start: &s,
            stop: &st,
        };
        assert_eq!(lat.log_partition(), 0.0);
        assert!(lat.viterbi().0.is_empty());
    }

    #[test]
    fn single_precision() {
        let e = vec![0.0f32; 3 * 5];
        let tr = vec![0.0f32; 25];
        let s = vec![0.0f32; 5];
        let lat = Lattice {
            n_tags: 5,
            emissions: e,
            transitions: &tr,
            start: &s,
            stop: &s,
        };
        assert!((lat.log_partition() - 3.0 * 5f32.ln()).abs() < 1e-5);
    }
}
