#![allow(dead_code)]

use rayon::prelude::*;
use strategem::distrib::RandomStream;

/// Sample mean and variance accumulated in chunks and merged pairwise.
#[derive(Clone, Copy, Default, Debug)]
pub struct Moments {
    pub count: f64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, o: Moments) -> Moments {
        if self.count == 0.0 {
            return o;
        }
        if o.count == 0.0 {
            return self;
        }
        let count = self.count + o.count;
        let delta = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + delta * o.count / count,
            m2: self.m2 + o.m2 + delta * delta * self.count * o.count / count,
        }
    }

    pub fn variance(&self) -> f64 {
        self.m2 / (self.count - 1.0)
    }
}

/// Brute-force moments of `x_hat = x + delta` among draws with `y >= h`
/// (patients) and `y < h - d` (controls), for each `(h, d)` pair, where
/// `(x, y)` are standard bivariate normal with correlation `rho_xy`.
pub fn brute_force_moments(
    rho_xy: f64,
    sigma_delta: f64,
    cuts: &[(f64, f64)],
    samples: u64,
    seed: u64,
) -> Vec<(Moments, Moments)> {
    const CHUNKS: u64 = 64;
    let per = samples / CHUNKS;
    let s = (1.0 - rho_xy * rho_xy).sqrt();
    (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut stream = RandomStream::new(seed, c);
            let mut acc = vec![(Moments::default(), Moments::default()); cuts.len()];
            for _ in 0..per {
                let x = stream.next_standard_normal();
                let e = stream.next_standard_normal();
                let dl = stream.next_standard_normal();
                let y = rho_xy * x + s * e;
                let xh = x + sigma_delta * dl;
                for (slot, &(h, d)) in acc.iter_mut().zip(cuts) {
                    if y >= h {
                        slot.0.push(xh);
                    } else if y < h - d {
                        slot.1.push(xh);
                    }
                }
            }
            acc
        })
        .reduce(
            || vec![(Moments::default(), Moments::default()); cuts.len()],
            |a, b| {
                a.into_iter()
                    .zip(b)
                    .map(|(x, y)| (x.0.merge(y.0), x.1.merge(y.1)))
                    .collect()
            },
        )
}

/// Exact permutation p-value of the correlation between `u` and `v`.
pub fn permutation_p(u: &[f64], v: &[f64]) -> f64 {
    fn r(u: &[f64], v: &[f64]) -> f64 {
        let n = u.len() as f64;
        let (mu, mv) = (u.iter().sum::<f64>() / n, v.iter().sum::<f64>() / n);
        let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
        for (a, b) in u.iter().zip(v) {
            suv += (a - mu) * (b - mv);
            suu += (a - mu) * (a - mu);
            svv += (b - mv) * (b - mv);
        }
        suv / (suu * svv).sqrt()
    }
    let observed = r(u, v).abs();
    let mut perm = v.to_vec();
    let n = perm.len();
    // Heap's algorithm over all n! orderings.
    let mut c = vec![0usize; n];
    let (mut hits, mut total) = (0u64, 0u64);
    let mut visit = |p: &[f64]| {
        total += 1;
        if r(u, p).abs() >= observed - 1e-12 {
            hits += 1;
        }
    };
    visit(&perm);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}
