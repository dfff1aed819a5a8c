//! Streaming means and co-moments with a fixed, thread-independent merge order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Monte Carlo estimate of a mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: u64,
    /// Fraction of paths stopped by the horizon cap before the event.
    pub truncation_fraction: f64,
}

impl McEstimate {
    /// |mean − target| in units of the standard error. Zero error with an
    /// exact match gives 0.
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Welford accumulator over a fixed-length observation vector, with the
/// full co-moment matrix so that paired differences have honest errors.
#[derive(Debug, Clone)]
pub(crate) struct Accum {
    k: usize,
    n: u64,
    capped: Vec<u64>,
    mean: Vec<f64>,
    com: Vec<f64>,
}

impl Accum {
    pub(crate) fn new(k: usize) -> Self {
        Accum {
            k,
            n: 0,
            capped: vec![0; k],
            mean: vec![0.0; k],
            com: vec![0.0; k * k],
        }
    }

    pub(crate) fn push(&mut self, y: &[f64], capped: &[bool]) {
        debug_assert_eq!(y.len(), self.k);
        self.n += 1;
        for (c, &f) in self.capped.iter_mut().zip(capped) {
            *c += f as u64;
        }
        let n = self.n as f64;
        let k = self.k;
        let old: Vec<f64> = y.iter().zip(&self.mean).map(|(a, m)| a - m).collect();
        for i in 0..k {
            self.mean[i] += old[i] / n;
        }
        for i in 0..k {
            let di = old[i];
            let row = &mut self.com[i * k..(i + 1) * k];
            for j in i..k {
                row[j] += di * (y[j] - self.mean[j]);
            }
        }
    }

    pub(crate) fn merge(&mut self, o: &Accum) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = o.clone();
            return;
        }
        let (na, nb) = (self.n as f64, o.n as f64);
        let n = na + nb;
        let k = self.k;
        let d: Vec<f64> = (0..k).map(|i| o.mean[i] - self.mean[i]).collect();
        for i in 0..k {
            for j in i..k {
                self.com[i * k + j] += o.com[i * k + j] + d[i] * d[j] * na * nb / n;
            }
        }
        for i in 0..k {
            self.mean[i] += d[i] * nb / n;
        }
        self.n += o.n;
        for (c, d) in self.capped.iter_mut().zip(&o.capped) {
            *c += d;
        }
    }

    fn cov(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        if self.n < 2 {
            return 0.0;
        }
        self.com[i * self.k + j] / (self.n - 1) as f64
    }

    fn wrap(&self, mean: f64, var: f64, capped: u64) -> McEstimate {
        let n = self.n.max(1);
        McEstimate {
            mean,
            std_error: (var.max(0.0) / n as f64).sqrt(),
            n_paths: self.n,
            truncation_fraction: capped as f64 / n as f64,
        }
    }

    pub(crate) fn estimate(&self, i: usize) -> McEstimate {
        self.wrap(self.mean[i], self.cov(i, i), self.capped[i])
    }

    /// Estimate of E[y_i − y_j] on the same paths.
    pub(crate) fn difference(&self, i: usize, j: usize) -> McEstimate {
        let var = self.cov(i, i) + self.cov(j, j) - 2.0 * self.cov(i, j);
        let capped = self.capped[i].max(self.capped[j]);
        self.wrap(self.mean[i] - self.mean[j], var, capped)
    }
}

pub(crate) const BATCH: usize = 256;

/// Runs `path(index, out, capped)` for every path in fixed batches. Batches are
/// reduced in index order, so the result does not depend on the number of
/// worker threads.
pub(crate) fn accumulate<F>(n_paths: usize, k: usize, path: F) -> Accum
where
    F: Fn(u64, &mut [f64], &mut [bool]) + Sync,
{
    let n_batches = n_paths.div_ceil(BATCH);
    let parts: Vec<Accum> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let mut acc = Accum::new(k);
            let mut y = vec![0.0; k];
            let mut capped = vec![false; k];
            let end = ((b + 1) * BATCH).min(n_paths);
            for i in b * BATCH..end {
                capped.fill(false);
                path(i as u64, &mut y, &mut capped);
                acc.push(&y, &capped);
            }
            acc
        })
        .collect();
    let mut total = Accum::new(k);
    for p in &parts {
        total.merge(p);
    }
    total
}

/// Per-path outputs in path order.
pub(crate) fn collect<T, F>(n_paths: usize, path: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    (0..n_paths as u64).into_par_iter().map(|i| path(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_matches_two_pass() {
        let data: Vec<[f64; 2]> = (0..1000)
            .map(|i| {
                let x = (i as f64 * 0.37).sin() + 1e6;
                [x, 2.0 * x + (i as f64).cos()]
            })
            .collect();
        let acc = accumulate(data.len(), 2, |i, y, _| y.copy_from_slice(&data[i as usize]));
        let n = data.len() as f64;
        let m0 = data.iter().map(|d| d[0]).sum::<f64>() / n;
        let m1 = data.iter().map(|d| d[1]).sum::<f64>() / n;
        let v: f64 = data.iter().map(|d| (d[1] - d[0] - (m1 - m0)).powi(2)).sum::<f64>() / (n - 1.0);
        let e = acc.difference(1, 0);
        assert!((e.mean - (m1 - m0)).abs() < 1e-6);
        assert!((e.std_error - (v / n).sqrt()).abs() < 1e-9);
        assert_eq!(e.n_paths, 1000);
    }
}
