//! Counter-based Monte Carlo.
//!
//! Normals come from Philox4x32-10 keyed by the seed and addressed by
//! `(sample, block, stream)`, so any sample can be regenerated on its own and
//! the estimate does not depend on how the samples are split across threads.
//! Work is cut into fixed chunks; discrete outcomes are tallied as integer
//! counts and continuous ones are summed per chunk and combined in chunk
//! order.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::numeric::NeumaierSum;

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

/// Samples per work unit.
pub const CHUNK: u64 = 1 << 14;

pub const DEFAULT_SAMPLES: u64 = 10_000_000;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// Philox4x32 with 10 rounds.
pub fn philox4x32_10(ctr: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = ctr;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

#[inline]
fn unit_open(hi: u32, lo: u32) -> f64 {
    let bits = (((hi as u64) << 32) | lo as u64) >> 11;
    (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Stream of standard normals tied to one seed.
#[derive(Clone, Copy, Debug)]
pub struct NormalSource {
    key: [u32; 2],
    stream: u32,
}

impl NormalSource {
    pub fn new(seed: u64, stream: u32) -> Self {
        Self { key: [seed as u32, (seed >> 32) as u32], stream }
    }

    /// Fills `out` with the normals of sample `index`. Two normals per
    /// Philox call via Box–Muller.
    pub fn fill(&self, index: u64, out: &mut [f64]) {
        let lo = index as u32;
        let hi = (index >> 32) as u32;
        for (block, pair) in out.chunks_mut(2).enumerate() {
            let r = philox4x32_10([lo, hi, block as u32, self.stream], self.key);
            let u1 = unit_open(r[0], r[1]);
            let u2 = unit_open(r[2], r[3]);
            let rad = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
            pair[0] = rad * c;
            if pair.len() > 1 {
                pair[1] = rad * s;
            }
        }
    }
}

fn chunks(samples: u64) -> Vec<(u64, u64)> {
    (0..samples.div_ceil(CHUNK)).map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(samples))).collect()
}

/// Draws `samples` vectors `X = F z` and tallies `classify(X)` into `bins`
/// integer counters.
pub fn histogram<C>(factor: &DMatrix<f64>, samples: u64, seed: u64, bins: usize, classify: C) -> Vec<u64>
where
    C: Fn(&[f64]) -> usize + Sync,
{
    let src = NormalSource::new(seed, 0);
    let (n, r) = factor.shape();
    chunks(samples)
        .into_par_iter()
        .map(|(start, end)| {
            let mut counts = vec![0u64; bins];
            let mut z = vec![0.0; r];
            let mut x = vec![0.0; n];
            for i in start..end {
                src.fill(i, &mut z);
                apply(factor, &z, &mut x);
                counts[classify(&x)] += 1;
            }
            counts
        })
        .reduce(
            || vec![0u64; bins],
            |mut a, b| {
                for (s, v) in a.iter_mut().zip(b) {
                    *s += v;
                }
                a
            },
        )
}

/// Per-chunk sums of `eval(X)` (a fixed-width vector), combined in chunk order.
pub fn sums<E, const K: usize>(factor: &DMatrix<f64>, samples: u64, seed: u64, eval: E) -> [f64; K]
where
    E: Fn(&[f64]) -> [f64; K] + Sync,
{
    let src = NormalSource::new(seed, 0);
    let (n, r) = factor.shape();
    let partial: Vec<[f64; K]> = chunks(samples)
        .into_par_iter()
        .map(|(start, end)| {
            let mut acc = [NeumaierSum::default(); K];
            let mut z = vec![0.0; r];
            let mut x = vec![0.0; n];
            for i in start..end {
                src.fill(i, &mut z);
                apply(factor, &z, &mut x);
                for (a, v) in acc.iter_mut().zip(eval(&x)) {
                    a.add(v);
                }
            }
            acc.map(|a| a.sum())
        })
        .collect();
    let mut total = [NeumaierSum::default(); K];
    for p in partial {
        for (t, v) in total.iter_mut().zip(p) {
            t.add(v);
        }
    }
    total.map(|t| t.sum())
}

#[inline]
fn apply(factor: &DMatrix<f64>, z: &[f64], x: &mut [f64]) {
    for (i, xi) in x.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, zk) in z.iter().enumerate() {
            s += factor[(i, k)] * zk;
        }
        *xi = s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn philox_known_answers() {
        assert_eq!(philox4x32_10([0; 4], [0; 2]), [0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8]);
        assert_eq!(philox4x32_10([u32::MAX; 4], [u32::MAX; 2]), [0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd]);
        assert_eq!(
            philox4x32_10([0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344], [0xa4093822, 0x299f31d0]),
            [0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1]
        );
    }

    #[test]
    fn normals_have_unit_moments() {
        let f = DMatrix::identity(3, 3);
        let [m, m2, m4] = sums(&f, 400_000, 5, |x| {
            let v = x[2];
            [v, v * v, v.powi(4)]
        });
        let n = 400_000.0;
        assert!((m / n).abs() < 5.0 / n.sqrt());
        assert!((m2 / n - 1.0).abs() < 5.0 * 2f64.sqrt() / n.sqrt());
        assert!((m4 / n - 3.0).abs() < 0.1);
    }

    #[test]
    fn thread_count_does_not_change_counts() {
        let f = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.6, 0.8]);
        let classify = |x: &[f64]| (x[0].abs() <= 1.0) as usize + 2 * (x[1].abs() <= 1.0) as usize;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| histogram(&f, 100_000, 9, 4, classify));
        let b = four.install(|| histogram(&f, 100_000, 9, 4, classify));
        assert_eq!(a, b);
        let sa = one.install(|| sums(&f, 50_000, 9, |x| [x[0] * x[1]]));
        let sb = four.install(|| sums(&f, 50_000, 9, |x| [x[0] * x[1]]));
        assert_eq!(sa[0].to_bits(), sb[0].to_bits());
    }
}
