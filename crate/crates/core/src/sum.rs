//! Neumaier-compensated accumulation.

use std::ops::AddAssign;

#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.compensation);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl AddAssign<f64> for NeumaierSum {
    fn add_assign(&mut self, v: f64) {
        self.add(v);
    }
}

/// Fixed-width bank of compensated accumulators.
#[derive(Debug, Clone, Copy)]
pub struct SumBank<const N: usize> {
    lanes: [NeumaierSum; N],
}

impl<const N: usize> Default for SumBank<N> {
    fn default() -> Self {
        Self {
            lanes: [NeumaierSum::default(); N],
        }
    }
}

impl<const N: usize> SumBank<N> {
    #[inline]
    pub fn add(&mut self, values: &[f64; N]) {
        for (lane, v) in self.lanes.iter_mut().zip(values) {
            lane.add(*v);
        }
    }

    pub fn merge(&mut self, other: &Self) {
        for (lane, o) in self.lanes.iter_mut().zip(&other.lanes) {
            lane.merge(o);
        }
    }

    pub fn values(&self) -> [f64; N] {
        std::array::from_fn(|i| self.lanes[i].value())
    }
}

/// Sums `f(i)` for `i in 0..n` in fixed-size parallel chunks, merged in index order,
/// so the result does not depend on the number of worker threads.
pub fn par_sum<const N: usize, F>(n: usize, f: F) -> [f64; N]
where
    F: Fn(usize) -> [f64; N] + Sync,
{
    match try_par_sum::<N, std::convert::Infallible, _>(n, |i| Ok(f(i))) {
        Ok(v) => v,
        Err(e) => match e {},
    }
}

/// Like [`par_sum`], stopping at the first error (lowest failing chunk wins).
pub fn try_par_sum<const N: usize, E, F>(n: usize, f: F) -> Result<[f64; N], E>
where
    E: Send,
    F: Fn(usize) -> Result<[f64; N], E> + Sync,
{
    use rayon::prelude::*;
    const CHUNK: usize = 4096;
    let chunks = n.div_ceil(CHUNK);
    let partial: Vec<Result<SumBank<N>, E>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut bank = SumBank::<N>::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                bank.add(&f(i)?);
            }
            Ok(bank)
        })
        .collect();
    let mut total = SumBank::<N>::default();
    for b in partial {
        total.merge(&b?);
    }
    Ok(total.values())
}
