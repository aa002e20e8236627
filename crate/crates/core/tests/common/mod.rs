//! Independent reference implementations shared by the integration suites.
//!
//! Nothing here calls into the library's numeric code; each oracle works
//! from first principles so agreement is meaningful.

#![allow(dead_code, clippy::needless_range_loop)]

use ilsi::features::{reference_fixture, FeatureVector};
use ilsi::monitor::{FrameSample, FrameSource};
use ilsi::{ClassLabel, GrayImage};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Kolmogorov–Smirnov distance between `samples` and Exp(mean).
pub fn ks_exponential(samples: &[f64], mean: f64) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = 1.0 - (-x / mean).exp();
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

pub fn two_pass_contrast(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    var.sqrt() / mean
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Russ,
    Levine,
    Sigma,
    Skewness,
    StdDev,
}

pub const OPS: [Op; 5] = [Op::Russ, Op::Levine, Op::Sigma, Op::Skewness, Op::StdDev];

/// Straight double loop over centres with explicit neighbourhood sums.
pub fn naive_texture(grid: &[Vec<f64>], k: usize, op: Op) -> f64 {
    let h = grid.len();
    let w = grid[0].len();
    let r = k / 2;
    let area = (k * k) as f64;
    let mut acc = Vec::new();
    for y in r..h - r {
        for x in r..w - r {
            let c = grid[y][x];
            let mut sum = 0.0;
            for yy in y - r..=y + r {
                for xx in x - r..=x + r {
                    sum += grid[yy][xx];
                }
            }
            let mean = sum / area;
            let (mut m2, mut m3, mut diff2) = (0.0, 0.0, 0.0);
            for yy in y - r..=y + r {
                for xx in x - r..=x + r {
                    let d = grid[yy][xx] - mean;
                    m2 += d * d;
                    m3 += d * d * d;
                    diff2 += (c - grid[yy][xx]).powi(2);
                }
            }
            m2 /= area;
            m3 /= area;
            let v = match op {
                Op::Russ => diff2.sqrt(),
                Op::Levine => m2,
                Op::Sigma | Op::StdDev => m2.sqrt(),
                Op::Skewness => {
                    if m2 == 0.0 || m2 <= f64::EPSILON * mean * mean {
                        0.0
                    } else {
                        m3 / m2.powf(1.5)
                    }
                }
            };
            acc.push(v);
        }
    }
    acc.iter().sum::<f64>() / acc.len() as f64
}

pub fn grid_of(img: &GrayImage) -> Vec<Vec<f64>> {
    (0..img.height())
        .map(|y| (0..img.width()).map(|x| img.get(x, y) as f64).collect())
        .collect()
}

pub fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize, max: u8) -> GrayImage {
    let px = (0..w * h).map(|_| rng.gen_range(0..=max)).collect();
    GrayImage::new(w, h, px).unwrap()
}

/// Leave-one-out standardised 1-NN by exhaustive scan. Each fold refits
/// mean and population deviation on the remaining rows.
pub fn loo_1nn_oracle(rows: &[Vec<f64>], labels: &[String]) -> Vec<String> {
    let n = rows.len();
    let d = rows[0].len();
    (0..n)
        .map(|q| {
            let others: Vec<usize> = (0..n).filter(|&i| i != q).collect();
            let m = others.len() as f64;
            let mut mean = vec![0.0; d];
            let mut sd = vec![0.0; d];
            for c in 0..d {
                mean[c] = others.iter().map(|&i| rows[i][c]).sum::<f64>() / m;
                sd[c] = (others.iter().map(|&i| (rows[i][c] - mean[c]).powi(2)).sum::<f64>() / m)
                    .sqrt();
            }
            let z = |i: usize, c: usize| {
                if sd[c] == 0.0 {
                    0.0
                } else {
                    (rows[i][c] - mean[c]) / sd[c]
                }
            };
            let mut best = (f64::INFINITY, usize::MAX);
            for &i in &others {
                let dist: f64 = (0..d).map(|c| (z(i, c) - z(q, c)).powi(2)).sum();
                if dist < best.0 {
                    best = (dist, i);
                }
            }
            labels[best.1].clone()
        })
        .collect()
}

/// MI(bins; class) / H(class) as H(C) − H(C | B), natural log.
pub fn nmi_oracle(bins: &[usize], classes: &[usize]) -> f64 {
    let n = bins.len() as f64;
    let h = |counts: &mut dyn Iterator<Item = f64>, total: f64| -> f64 {
        counts
            .filter(|&c| c > 0.0)
            .map(|c| -(c / total) * (c / total).ln())
            .sum()
    };
    let nc = classes.iter().max().unwrap() + 1;
    let nb = bins.iter().max().unwrap() + 1;
    let class_counts: Vec<f64> = (0..nc)
        .map(|c| classes.iter().filter(|&&x| x == c).count() as f64)
        .collect();
    let hc = h(&mut class_counts.iter().copied(), n);
    let mut h_cond = 0.0;
    for b in 0..nb {
        let members: Vec<usize> = (0..bins.len()).filter(|&i| bins[i] == b).collect();
        if members.is_empty() {
            continue;
        }
        let nb_ = members.len() as f64;
        let mut within = (0..nc).map(|c| members.iter().filter(|&&i| classes[i] == c).count() as f64);
        h_cond += nb_ / n * h(&mut within, nb_);
    }
    if hc == 0.0 {
        0.0
    } else {
        (hc - h_cond) / hc
    }
}

pub fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Exact least-squares coefficients (ascending powers of t) via rational
/// normal equations in the original coordinates.
pub fn exact_polyfit(points: &[(f64, f64)], degree: usize) -> Vec<BigRational> {
    let n = degree + 1;
    let ts: Vec<BigRational> = points.iter().map(|p| rational(p.0)).collect();
    let ys: Vec<BigRational> = points.iter().map(|p| rational(p.1)).collect();
    let mut a = vec![vec![BigRational::zero(); n + 1]; n];
    for (t, y) in ts.iter().zip(&ys) {
        let mut pw = vec![BigRational::one()];
        for i in 1..2 * n {
            let next = &pw[i - 1] * t;
            pw.push(next);
        }
        for i in 0..n {
            for j in 0..n {
                a[i][j] += &pw[i + j];
            }
            a[i][n] += &pw[i] * y;
        }
    }
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero()).expect("non-singular");
        a.swap(col, p);
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = &a[r][col] / &a[col][col];
                for c in col..=n {
                    let v = &f * &a[col][c];
                    a[r][c] -= v;
                }
            }
        }
    }
    (0..n).map(|i| &a[i][n] / &a[i][i]).collect()
}

/// Diagonal of (XᵀX)⁻¹ in exact arithmetic.
pub fn exact_inverse_gram_diagonal(ts: &[f64], degree: usize) -> Vec<f64> {
    let n = degree + 1;
    let ts: Vec<BigRational> = ts.iter().map(|&t| rational(t)).collect();
    let mut a = vec![vec![BigRational::zero(); 2 * n]; n];
    for t in &ts {
        let mut pw = vec![BigRational::one()];
        for i in 1..2 * n {
            let next = &pw[i - 1] * t;
            pw.push(next);
        }
        for i in 0..n {
            for j in 0..n {
                a[i][j] += &pw[i + j];
            }
        }
    }
    for i in 0..n {
        a[i][n + i] = BigRational::one();
    }
    for col in 0..n {
        let p = (col..n).find(|&r| !a[r][col].is_zero()).expect("non-singular");
        a.swap(col, p);
        let pivot = a[col][col].clone();
        for c in 0..2 * n {
            a[col][c] = &a[col][c] / &pivot;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..2 * n {
                    let v = &f * &a[col][c];
                    a[r][c] -= v;
                }
            }
        }
    }
    (0..n).map(|i| to_f64(&a[i][n + i])).collect()
}

pub fn to_f64(r: &BigRational) -> f64 {
    let (num, den) = (r.numer(), r.denom());
    // scale down huge operands before converting
    let shift = num.bits().max(den.bits()).saturating_sub(1000);
    let num: BigInt = num >> shift;
    let den: BigInt = den >> shift;
    if den.is_zero() {
        return if num.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    num.to_f64().unwrap() / den.to_f64().unwrap()
}

pub const CADENCE: f64 = 72.0;

/// Twenty frames of fixture rows with ±2 % multiplicative jitter:
/// frames 0–9 from the normal rows, 10–19 from the micro-collapse rows.
pub fn perturbed_fixture_stream(seed: u64) -> Vec<FrameSample<f64>> {
    let ds = reference_fixture::<f64>();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|i| {
            let values = ds.rows()[i]
                .iter()
                .map(|&v| v * (1.0 + rng.gen_range(-0.02..=0.02)))
                .collect();
            FrameSample {
                index: i,
                timestamp: i as f64 * CADENCE,
                source: FrameSource::Features(
                    FeatureVector::new(values, ds.schema().clone()).unwrap(),
                ),
            }
        })
        .collect()
}

pub fn stream_values(stream: &[FrameSample<f64>], attr: usize) -> Vec<(f64, f64)> {
    stream
        .iter()
        .map(|s| match &s.source {
            FrameSource::Features(v) => (s.timestamp, v.values()[attr]),
            _ => unreachable!("feature stream"),
        })
        .collect()
}

pub fn label(s: &str) -> ClassLabel {
    ClassLabel::new(s).unwrap()
}

/// Four Gaussian clusters in three dimensions, `per_class` rows each.
pub fn four_class_rows(seed: u64, per_class: usize) -> (Vec<Vec<f64>>, Vec<String>) {
    let centres = [
        [0.0, 0.0, 0.0],
        [6.0, 0.0, 0.0],
        [0.0, 6.0, 0.0],
        [0.0, 0.0, 6.0],
    ];
    let names = ["dry-thin", "dry-medium", "dry-thick", "collapsed"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per_class {
            rows.push(centre.iter().map(|&m| m + rng.gen_range(-2.5..2.5)).collect());
            labels.push(names[c].to_string());
        }
    }
    (rows, labels)
}
