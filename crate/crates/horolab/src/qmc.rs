//! Low-discrepancy point sets on the unit cube.

use crate::error::{domain, Result};
use crate::rng::Substream;
use rand::seq::SliceRandom;
use rand::Rng;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

#[derive(Debug, Clone)]
struct DigitTable {
    base: u64,
    perms: Vec<Vec<u64>>,
    weights: Vec<f64>,
    // tail[k] = contribution of all digit levels >= k when those digits are zero
    tail: Vec<f64>,
}

impl DigitTable {
    fn new(base: u64, rng: &mut impl Rng) -> Self {
        let levels = (53.0 / (base as f64).log2()).ceil() as usize + 1;
        let mut perms = Vec::with_capacity(levels);
        let mut weights = Vec::with_capacity(levels);
        let mut w = 1.0 / base as f64;
        for _ in 0..levels {
            let mut p: Vec<u64> = (0..base).collect();
            p.shuffle(rng);
            perms.push(p);
            weights.push(w);
            w /= base as f64;
        }
        let mut tail = vec![0.0; levels + 1];
        for k in (0..levels).rev() {
            tail[k] = tail[k + 1] + perms[k][0] as f64 * weights[k];
        }
        DigitTable {
            base,
            perms,
            weights,
            tail,
        }
    }

    fn radical_inverse(&self, mut i: u64) -> f64 {
        let mut x = 0.0;
        let mut k = 0;
        while i > 0 {
            let digit = i % self.base;
            x += self.perms[k][digit as usize] as f64 * self.weights[k];
            i /= self.base;
            k += 1;
        }
        (x + self.tail[k]).min(1.0 - f64::EPSILON / 2.0)
    }
}

/// Halton sequence with independent random digit permutations per level.
///
/// Each randomization is a fresh unbiased estimator, so replicates give an
/// honest standard error.
#[derive(Debug, Clone)]
pub struct ScrambledHalton {
    tables: Vec<DigitTable>,
}

impl ScrambledHalton {
    pub fn new(dim: usize, stream: Substream) -> Result<Self> {
        if dim == 0 || dim > PRIMES.len() {
            return domain(format!("Halton dimension {dim} outside 1..={}", PRIMES.len()));
        }
        let tables = PRIMES[..dim]
            .iter()
            .enumerate()
            .map(|(j, &b)| DigitTable::new(b, &mut stream.at(j as u64)))
            .collect();
        Ok(ScrambledHalton { tables })
    }

    pub fn dim(&self) -> usize {
        self.tables.len()
    }

    pub fn point(&self, index: u64, out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(&self.tables) {
            *o = t.radical_inverse(index);
        }
    }
}

/// Rank-one lattice `{ frac(i g / n + shift) }`.
///
/// In one dimension this is the shifted uniform grid; in two dimensions a
/// Fibonacci lattice. Both integrate smooth periodic functions with
/// super-algebraic accuracy.
#[derive(Debug, Clone)]
pub struct ShiftedLattice {
    n: u64,
    gen: Vec<u64>,
    shift: Vec<f64>,
}

impl ShiftedLattice {
    /// Smallest supported lattice with at least `min_points` points.
    pub fn new(dim: usize, min_points: u64, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != dim {
            return domain("lattice shift has wrong dimension");
        }
        let min_points = min_points.max(2);
        let (n, gen) = match dim {
            1 => (min_points, vec![1]),
            2 => {
                let (mut a, mut b) = (1u64, 2u64);
                while b < min_points {
                    let c = a + b;
                    a = b;
                    b = c;
                }
                (b, vec![1, a])
            }
            _ => return domain(format!("lattice rules support dimension 1 or 2, got {dim}")),
        };
        Ok(ShiftedLattice { n, gen, shift })
    }

    /// Lattice with a shift drawn from `stream`.
    pub fn random(dim: usize, min_points: u64, stream: Substream) -> Result<Self> {
        let mut rng = stream.at(0);
        let shift = (0..dim).map(|_| rng.gen::<f64>()).collect();
        Self::new(dim, min_points, shift)
    }

    pub fn len(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn point(&self, index: u64, out: &mut [f64]) {
        for ((o, &g), &s) in out.iter_mut().zip(&self.gen).zip(&self.shift) {
            let r = ((index as u128 * g as u128) % self.n as u128) as f64 / self.n as f64;
            let v = r + s;
            *o = v - v.floor();
        }
    }
}
