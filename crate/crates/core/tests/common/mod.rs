//! Independent numerical oracles for the integration tests.
//!
//! Nothing here calls the crate's LU solver: the matrix exponential uses
//! its own Gauss-Jordan solve, moments come from quadrature of the density,
//! and stationary vectors come from power iteration.

#![allow(dead_code)]

use aoii_core::{AbsorbingChain, GeneratorMatrix, Matrix};
use rand::Rng;

/// Solves `A·X = B` by Gauss-Jordan elimination with partial pivoting.
pub fn gauss_jordan_solve(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    let m = b.cols();
    let mut aug: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r = a.row(i).to_vec();
            r.extend_from_slice(b.row(i));
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs()))
            .unwrap();
        aug.swap(col, piv);
        let p = aug[col][col];
        assert!(p != 0.0, "singular system in oracle");
        for v in aug[col].iter_mut() {
            *v /= p;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    let pivot_row = aug[col].clone();
                    for (x, p) in aug[r].iter_mut().zip(&pivot_row) {
                        *x -= f * p;
                    }
                }
            }
        }
    }
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            out[(i, j)] = aug[i][n + j];
        }
    }
    out
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &Matrix) -> Matrix {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA_13: f64 = 5.371920351148152;
    let n = a.rows();
    let norm = a.norm_one();
    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(2f64.powi(-squarings));
    let id = Matrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let u_inner = a6.scale(B[13]).add(&a4.scale(B[11])).add(&a2.scale(B[9]));
    let u = a.matmul(
        &a6.matmul(&u_inner)
            .add(&a6.scale(B[7]))
            .add(&a4.scale(B[5]))
            .add(&a2.scale(B[3]))
            .add(&id.scale(B[1])),
    );
    let v_inner = a6.scale(B[12]).add(&a4.scale(B[10])).add(&a2.scale(B[8]));
    let v = a6
        .matmul(&v_inner)
        .add(&a6.scale(B[6]))
        .add(&a4.scale(B[4]))
        .add(&a2.scale(B[2]))
        .add(&id.scale(B[0]));
    let mut r = gauss_jordan_solve(&v.sub(&u), &v.add(&u));
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp;
        loop {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// First and second moments of the absorption time obtained by integrating
/// `t·f(t)` and `t²·f(t)` with `f(t) = β·e^{tA}·(−A·1)`.
pub fn quadrature_moments(chain: &AbsorbingChain) -> (f64, f64) {
    let a = chain.a();
    let k = a.rows();
    let exit: Vec<f64> = (0..k).map(|i| -a.row(i).iter().sum::<f64>()).collect();
    let max_rate = (0..k).map(|i| -a[(i, i)]).fold(0.0, f64::max);
    let h = 2.0 / max_rate;
    let (nodes, weights) = gauss_legendre(24);
    let offsets: Vec<f64> = nodes.iter().map(|x| 0.5 * h * (x + 1.0)).collect();
    let node_exps: Vec<Matrix> = offsets.iter().map(|&s| expm(&a.scale(s))).collect();
    let node_dens: Vec<Vec<f64>> = node_exps.iter().map(|e| e.mul_vec(&exit)).collect();
    let step = expm(&a.scale(h));

    let mut v = chain.beta().to_vec();
    let (mut m1, mut m2) = (0.0, 0.0);
    let mut t0 = 0.0;
    for _ in 0..2_000_000 {
        for ((s, w), dens) in offsets.iter().zip(&weights).zip(&node_dens) {
            let t = t0 + s;
            let f: f64 = v.iter().zip(dens).map(|(x, y)| x * y).sum();
            m1 += 0.5 * h * w * t * f;
            m2 += 0.5 * h * w * t * t * f;
        }
        v = step.vec_mul(&v);
        t0 += h;
        let survival: f64 = v.iter().sum();
        if survival * (1.0 + t0) * (1.0 + t0) < 1e-17 * m2.max(1e-300) {
            break;
        }
    }
    (m1, m2)
}

/// Stationary vector of a stochastic matrix by power iteration on the lazy
/// chain `(P + I)/2`, which has the same stationary vector and is aperiodic.
pub fn power_iteration(p: &Matrix, tol: f64) -> Vec<f64> {
    let n = p.rows();
    let lazy = p.add(&Matrix::identity(n)).scale(0.5);
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..10_000_000 {
        let next = lazy.vec_mul(&pi);
        let diff = next
            .iter()
            .zip(&pi)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let s: f64 = next.iter().sum();
        pi = next.into_iter().map(|v| v / s).collect();
        if diff < tol {
            break;
        }
    }
    pi
}

/// Random absorbing chain with every transient state leaking to absorption
/// at rate at least 0.2.
pub fn random_chain<R: Rng>(rng: &mut R) -> AbsorbingChain {
    let k1 = rng.random_range(1..=8);
    let k2 = rng.random_range(1..=3);
    let mut a = Matrix::zeros(k1, k1);
    let mut b = Matrix::zeros(k1, k2);
    for i in 0..k1 {
        for j in 0..k1 {
            if i != j && rng.random::<f64>() < 0.6 {
                a[(i, j)] = rng.random_range(0.0..2.0);
            }
        }
        for j in 0..k2 {
            b[(i, j)] = rng.random_range(0.0..1.0);
        }
        b[(i, 0)] += 0.2;
        let out: f64 = a.row(i).iter().sum::<f64>() + b.row(i).iter().sum::<f64>();
        a[(i, i)] = -out;
    }
    let raw: Vec<f64> = (0..k1).map(|_| rng.random::<f64>()).collect();
    let s: f64 = raw.iter().sum();
    let mut beta: Vec<f64> = raw.iter().map(|v| v / s).collect();
    let fix = 1.0 - beta[..k1 - 1].iter().sum::<f64>();
    beta[k1 - 1] = fix.max(0.0);
    AbsorbingChain::new(a, b, beta).expect("generated chain is valid")
}

/// Random dense generator with off-diagonal rates in [0.05, 3).
pub fn random_generator<R: Rng>(rng: &mut R, n: usize) -> GeneratorMatrix {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut r: Vec<f64> = (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        rng.random_range(0.05..3.0)
                    }
                })
                .collect();
            r[i] = -r.iter().sum::<f64>();
            r
        })
        .collect();
    GeneratorMatrix::new(&rows).expect("generated generator is valid")
}

/// Random row-stochastic matrix with strictly positive entries.
pub fn random_stochastic<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = raw.iter().sum();
        for j in 0..n {
            m[(i, j)] = raw[j] / s;
        }
    }
    m
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
