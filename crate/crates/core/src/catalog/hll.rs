//! HyperLogLog distinct-count sketches over column values.
//!
//! Registers are one byte each. The estimator is Ertl's improved estimator
//! ("New cardinality estimation algorithms for HyperLogLog sketches", 2017):
//! it folds the small-range correction into the zero-register term, so there
//! is no switch point where the raw estimate's bias shows through.

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::{Error, Result};

pub const DEFAULT_PRECISION: u8 = 12;
pub const DEFAULT_HLL_SEED: u64 = 0x005e_ed0f_0b71_2024;

/// A single value fed into a sketch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Datum {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Datum {
    fn hash_with_seed(&self, seed: u64) -> u64 {
        let mut buf = Vec::with_capacity(16);
        match self {
            Datum::Int(v) => {
                buf.push(1u8);
                buf.extend_from_slice(&v.to_le_bytes());
            }
            Datum::Float(v) => {
                // Integral floats hash like the matching integer.
                if v.fract() == 0.0 && v.abs() < 9.0e15 {
                    buf.push(1u8);
                    buf.extend_from_slice(&(*v as i64).to_le_bytes());
                } else {
                    buf.push(2u8);
                    buf.extend_from_slice(&v.to_bits().to_le_bytes());
                }
            }
            Datum::Text(s) => {
                buf.push(3u8);
                buf.extend_from_slice(s.as_bytes());
            }
        }
        xxh3_64_with_seed(&buf, seed)
    }
}

impl From<i64> for Datum {
    fn from(v: i64) -> Self {
        Datum::Int(v)
    }
}

impl From<&str> for Datum {
    fn from(v: &str) -> Self {
        Datum::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HllSketch {
    precision: u8,
    seed: u64,
    registers: Vec<u8>,
}

impl HllSketch {
    pub fn new(precision: u8) -> Result<Self> {
        Self::with_seed(precision, DEFAULT_HLL_SEED)
    }

    pub fn with_seed(precision: u8, seed: u64) -> Result<Self> {
        if !(4..=16).contains(&precision) {
            return Err(Error::InvalidPrecision(precision));
        }
        Ok(Self {
            precision,
            seed,
            registers: vec![0; 1 << precision],
        })
    }

    /// Builds a sketch directly from a register array (length must be `2^p`).
    pub fn from_registers(precision: u8, seed: u64, registers: Vec<u8>) -> Result<Self> {
        let mut sketch = Self::with_seed(precision, seed)?;
        if registers.len() != sketch.registers.len() {
            return Err(Error::Unsupported(format!(
                "register array of length {} for precision {}",
                registers.len(),
                precision
            )));
        }
        let cap = sketch.max_rank();
        if registers.iter().any(|&r| r > cap) {
            return Err(Error::Unsupported(format!("register value above {cap}")));
        }
        sketch.registers = registers;
        Ok(sketch)
    }

    pub fn precision(&self) -> u8 {
        self.precision
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn registers(&self) -> &[u8] {
        &self.registers
    }

    fn max_rank(&self) -> u8 {
        64 - self.precision + 1
    }

    pub fn add(&mut self, value: &Datum) {
        let hash = value.hash_with_seed(self.seed);
        self.add_hash(hash);
    }

    pub fn add_hash(&mut self, hash: u64) {
        let p = self.precision as u32;
        let bucket = (hash >> (64 - p)) as usize;
        let suffix = hash << p;
        let rank = (suffix.leading_zeros() + 1).min(self.max_rank() as u32) as u8;
        let slot = &mut self.registers[bucket];
        if rank > *slot {
            *slot = rank;
        }
    }

    pub fn estimate(&self) -> f64 {
        let m = self.registers.len() as f64;
        let q = self.max_rank() as usize - 1;
        let mut counts = vec![0u32; q + 2];
        for &r in &self.registers {
            counts[r as usize] += 1;
        }
        let mut z = m * tau(1.0 - counts[q + 1] as f64 / m);
        for k in (1..=q).rev() {
            z = 0.5 * (z + counts[k] as f64);
        }
        z += m * sigma(counts[0] as f64 / m);
        m * m / (2.0 * std::f64::consts::LN_2) / z
    }

    pub fn merge(&self, other: &HllSketch) -> Result<HllSketch> {
        if self.precision != other.precision {
            return Err(Error::PrecisionMismatch(self.precision, other.precision));
        }
        if self.seed != other.seed {
            return Err(Error::SeedMismatch(self.seed, other.seed));
        }
        let registers = self
            .registers
            .iter()
            .zip(&other.registers)
            .map(|(a, b)| *a.max(b))
            .collect();
        Ok(HllSketch {
            precision: self.precision,
            seed: self.seed,
            registers,
        })
    }
}

fn sigma(mut x: f64) -> f64 {
    if x == 1.0 {
        return f64::INFINITY;
    }
    let (mut y, mut z) = (1.0, x);
    loop {
        x *= x;
        let prev = z;
        z += x * y;
        y += y;
        if z == prev {
            return z;
        }
    }
}

fn tau(mut x: f64) -> f64 {
    if x == 0.0 || x == 1.0 {
        return 0.0;
    }
    let (mut y, mut z) = (1.0, 1.0 - x);
    loop {
        x = x.sqrt();
        let prev = z;
        y *= 0.5;
        z -= (1.0 - x).powi(2) * y;
        if z == prev {
            return z / 3.0;
        }
    }
}

/// Adds `value` to a copy of `sketch`.
pub fn hll_add(sketch: &HllSketch, value: &Datum) -> HllSketch {
    let mut out = sketch.clone();
    out.add(value);
    out
}

pub fn hll_estimate(sketch: &HllSketch) -> f64 {
    sketch.estimate()
}

pub fn hll_merge(a: &HllSketch, b: &HllSketch) -> Result<HllSketch> {
    a.merge(b)
}

/// Inclusion-exclusion intersection estimate, clamped to `[0, min(|A|, |B|)]`.
pub fn intersection_estimate(a: &HllSketch, b: &HllSketch) -> Result<f64> {
    let ea = a.estimate();
    let eb = b.estimate();
    let union = a.merge(b)?.estimate();
    Ok((ea + eb - union).clamp(0.0, ea.min(eb)))
}
