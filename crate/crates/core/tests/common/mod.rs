//! Independent reference implementations used only by the tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

use cavcool::cli::Setup;

fn fact(n: i64) -> BigInt {
    assert!(n >= 0);
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Square of the Wigner 3-j symbol (j1 j2 j3; m1 m2 m3) for integer
/// arguments, exact, from the Racah sum.
pub fn wigner_3j_squared(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> BigRational {
    if m1 + m2 + m3 != 0 || j3 < (j1 - j2).abs() || j3 > j1 + j2 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return BigRational::zero();
    }
    let triangle = BigRational::new(
        fact(j1 + j2 - j3) * fact(j1 - j2 + j3) * fact(-j1 + j2 + j3),
        fact(j1 + j2 + j3 + 1),
    );
    let prefactor = fact(j1 + m1) * fact(j1 - m1) * fact(j2 + m2) * fact(j2 - m2) * fact(j3 + m3) * fact(j3 - m3);
    let kmin = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let kmax = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = fact(k)
            * fact(j3 - j2 + k + m1)
            * fact(j3 - j1 + k - m2)
            * fact(j1 + j2 - j3 - k)
            * fact(j1 - k - m1)
            * fact(j2 - k + m2);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    triangle * BigRational::from_integer(prefactor) * &sum * &sum
}

/// Placzek-Teller coefficient as (2J'+1)·(J 2 J'; 0 0 0)².
pub fn placzek_teller_oracle(j: i64, jf: i64) -> f64 {
    let r = wigner_3j_squared(j, 2, jf, 0, 0, 0) * BigRational::from_integer(BigInt::from(2 * jf + 1));
    assert!(!r.is_negative());
    r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap()
}

/// exp(A·t) by scaling and squaring with a long Taylor series.
pub fn expm(a: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = a.nrows();
    let m = a * t;
    let norm = m.iter().fold(0.0f64, |s, x| s.max(x.abs())) * n as f64;
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let x = &m / 2f64.powi(s);
    let mut term = DMatrix::<f64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &x / k as f64;
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Null vector of a generator, normalized to unit sum.
pub fn stationary(w: &DMatrix<f64>) -> DVector<f64> {
    let svd = w.clone().svd(true, true);
    let v_t = svd.v_t.expect("requested");
    let (i, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let v: DVector<f64> = v_t.row(i).transpose();
    &v / v.sum()
}

/// Best max-residual for simultaneous resonance of two lines over a dense
/// (δ, ω_L) grid.
pub fn finetune_grid(shift_a: f64, shift_b: f64, fsr: f64, window: f64, n_delta: usize, n_laser: usize) -> (f64, f64) {
    let residual = |omega: f64, sp: f64| {
        let n = (omega / sp).round();
        (omega - n * sp).abs()
    };
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..=n_delta {
        let d = -window + 2.0 * window * i as f64 / n_delta as f64;
        let sp = fsr + d;
        // coarse laser scan, then refine around the best point
        let mut coarse = (f64::INFINITY, 0.0);
        for j in 0..n_laser {
            let x = sp * j as f64 / n_laser as f64;
            let r = residual(x + shift_a, sp).max(residual(x + shift_b, sp));
            if r < coarse.0 {
                coarse = (r, x);
            }
        }
        let step = sp / n_laser as f64;
        for j in 0..=2 * n_laser {
            let x = coarse.1 - step + step * j as f64 / n_laser as f64;
            let r = residual(x + shift_a, sp).max(residual(x + shift_b, sp));
            if r < best.0 {
                best = (r, d);
            }
        }
    }
    best
}

pub struct UnionFind(Vec<usize>);

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn find(&mut self, x: usize) -> usize {
        let p = self.0[x];
        if p == x {
            return x;
        }
        let r = self.find(p);
        self.0[x] = r;
        r
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }

    pub fn components(&mut self) -> usize {
        let n = self.0.len();
        let mut roots: Vec<usize> = (0..n).map(|i| self.find(i)).collect();
        roots.sort();
        roots.dedup();
        roots.len()
    }
}

/// Shipped OH setup, built once per test.
pub fn oh() -> Setup {
    Setup::default_oh()
}
