//! Dense reference implementations shared by the integration tests.
//!
//! Everything here works on plain `Vec<Vec<f64>>` with textbook algorithms
//! (Gauss–Jordan inverse, Cholesky), independent of the library's linear
//! algebra backend.
#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use remle::DesignMatrix;

pub type Dense = Vec<Vec<f64>>;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn gaussian_matrix(n: usize, p: usize, rng: &mut ChaCha20Rng) -> DesignMatrix<f64> {
    DesignMatrix::from_fn(n, p, |_, _| normal(rng)).unwrap()
}

pub fn gaussian_vec(n: usize, rng: &mut ChaCha20Rng) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

/// `y = Zβ + ε` with `β_k ~ N(0, γ₀σ₀²/p)` and `ε ~ N(0, σ₀²)`.
pub fn random_instance(n: usize, p: usize, gamma0: f64, s2: f64, seed: u64) -> (DesignMatrix<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let z = gaussian_matrix(n, p, &mut r);
    let sd = (gamma0 * s2 / p as f64).sqrt();
    let beta: Vec<f64> = (0..p).map(|_| sd * normal(&mut r)).collect();
    let mut y = z.mul_vec(&beta).unwrap();
    for v in &mut y {
        *v += s2.sqrt() * normal(&mut r);
    }
    (z, y)
}

pub fn to_dense(z: &DesignMatrix<f64>) -> Dense {
    (0..z.nrows()).map(|i| (0..z.ncols()).map(|j| z.get(i, j)).collect()).collect()
}

/// `p⁻¹ Z Zᵀ` by explicit row products.
pub fn gram(z: &DesignMatrix<f64>) -> Dense {
    let d = to_dense(z);
    let (n, p) = (z.nrows(), z.ncols());
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            g[i][j] = (0..p).map(|k| d[i][k] * d[j][k]).sum::<f64>() / p as f64;
        }
    }
    g
}

pub fn identity(n: usize) -> Dense {
    (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
}

/// `a·I + Σ c_i M_i`.
pub fn combine(a: f64, terms: &[(f64, &Dense)]) -> Dense {
    let n = terms.first().map_or(0, |t| t.1.len());
    let mut out = identity(n);
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v *= a;
            for (c, m) in terms {
                *v += c * m[i][j];
            }
        }
    }
    out
}

pub fn matmul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i][l];
            for j in 0..m {
                out[i][j] += ail * b[l][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Dense, v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn trace(a: &Dense) -> f64 {
    (0..a.len()).map(|i| a[i][i]).sum()
}

/// `vᵀ A v`
pub fn quad(a: &Dense, v: &[f64]) -> f64 {
    dot(v, &matvec(a, v))
}

/// Gauss–Jordan elimination with partial pivoting.
pub fn inverse(a: &Dense) -> Dense {
    let n = a.len();
    let mut m: Dense = a.clone();
    let mut inv = identity(n);
    for c in 0..n {
        let piv = (c..n).max_by(|&x, &y| m[x][c].abs().total_cmp(&m[y][c].abs())).unwrap();
        m.swap(c, piv);
        inv.swap(c, piv);
        let d = m[c][c];
        assert!(d.abs() > 1e-300, "singular matrix");
        for j in 0..n {
            m[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                if f != 0.0 {
                    for j in 0..n {
                        m[r][j] -= f * m[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
    }
    inv
}

/// `log det A` for symmetric positive definite `A` via Cholesky.
pub fn log_det_spd(a: &Dense) -> f64 {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    let mut out = 0.0;
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        assert!(d > 0.0, "matrix not positive definite");
        let ljj = d.sqrt();
        l[j][j] = ljj;
        out += 2.0 * ljj.ln();
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / ljj;
        }
    }
    out
}

/// Gaussian log-likelihood `−(n/2)log 2π − ½ log det Ω − ½ yᵀΩ⁻¹y`.
pub fn dense_loglik(omega: &Dense, y: &[f64]) -> f64 {
    let n = y.len() as f64;
    -0.5 * n * std::f64::consts::TAU.ln() - 0.5 * log_det_spd(omega) - 0.5 * quad(&inverse(omega), y)
}

/// Maximizes a unimodal function on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Grid scan of `f` over `grid`, then golden-section refinement between the
/// neighbours of the best grid point.
pub fn grid_golden_max(f: impl Fn(f64) -> f64, grid: &[f64], tol: f64) -> f64 {
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = (0..grid.len()).max_by(|&i, &j| vals[i].total_cmp(&vals[j])).unwrap();
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(grid.len() - 1)];
    golden_max(f, lo, hi, tol)
}

/// `count` points evenly spaced in `log` between `lo` and `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect()
}

/// Maximum-likelihood `(σ_ε², σ_α²)` from the dense likelihood with `σ_ε²`
/// profiled out: `σ_ε²(γ) = yᵀV_γ⁻¹y / n`, and `γ` found by grid plus golden
/// section over `log γ`.
pub fn dense_profile_mle(g: &Dense, y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let profile = |lg: f64| {
        let v = combine(1.0, &[(lg.exp(), g)]);
        let s2 = quad(&inverse(&v), y) / n;
        -0.5 * n * (s2.ln() + 1.0) - 0.5 * log_det_spd(&v)
    };
    let grid: Vec<f64> = (0..=120).map(|k| -9.0 + 0.125 * k as f64).collect();
    let lg = grid_golden_max(profile, &grid, 1e-10);
    // boundary optimum: V = I
    let at_zero = -0.5 * n * ((dot(y, y) / n).ln() + 1.0);
    let gamma = if at_zero >= profile(lg) { 0.0 } else { lg.exp() };
    let v = combine(1.0, &[(gamma, g)]);
    let s2 = quad(&inverse(&v), y) / n;
    (s2, gamma * s2)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (k, &i) in idx.iter().enumerate() {
            r[i] = k as f64;
        }
        r
    };
    let (rx, ry) = (rank(x), rank(y));
    let (mx, my) = (mean(&rx), mean(&ry));
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx) * (a - mx)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my) * (b - my)).sum();
    cov / (vx * vy).sqrt()
}
