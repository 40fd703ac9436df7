#![allow(dead_code)]

//! Spatial-domain reference operators on `h × w` planes with circular indexing.

/// `(k ⊛ a)(y, x) = Σ k(dy, dx) a(y − dy, x − dx)`, `k` origin-centered.
pub fn circ_conv(a: &[f64], k: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for dy in 0..h {
        for dx in 0..w {
            let kv = k[dy * w + dx];
            if kv == 0.0 {
                continue;
            }
            for y in 0..h {
                for x in 0..w {
                    out[y * w + x] += kv * a[((y + h - dy) % h) * w + (x + w - dx) % w];
                }
            }
        }
    }
    out
}

/// Adjoint of `circ_conv` in `a`: `Σ k(dy, dx) r(y + dy, x + dx)`.
pub fn circ_corr(r: &[f64], k: &[f64], h: usize, w: usize) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for dy in 0..h {
        for dx in 0..w {
            let kv = k[dy * w + dx];
            if kv == 0.0 {
                continue;
            }
            for y in 0..h {
                for x in 0..w {
                    out[y * w + x] += kv * r[((y + dy) % h) * w + (x + dx) % w];
                }
            }
        }
    }
    out
}

/// Forward differences `(I(y, x+1) − I, I(y+1, x) − I)`.
pub fn diff(a: &[f64], h: usize, w: usize) -> [Vec<f64>; 2] {
    let mut gh = vec![0.0; h * w];
    let mut gv = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            gh[y * w + x] = a[y * w + (x + 1) % w] - a[y * w + x];
            gv[y * w + x] = a[((y + 1) % h) * w + x] - a[y * w + x];
        }
    }
    [gh, gv]
}

/// Adjoint of one forward-difference component.
pub fn diff_adjoint(r: &[f64], h: usize, w: usize, vertical: bool) -> Vec<f64> {
    let mut out = vec![0.0; h * w];
    for y in 0..h {
        for x in 0..w {
            let prev = if vertical { ((y + h - 1) % h) * w + x } else { y * w + (x + w - 1) % w };
            out[y * w + x] = r[prev] - r[y * w + x];
        }
    }
    out
}

/// Places a centered odd kernel on the grid with its center at the origin.
pub fn embed(kernel: &[f64], side: usize, h: usize, w: usize) -> Vec<f64> {
    let l = (side / 2) as isize;
    let mut out = vec![0.0; h * w];
    for ky in 0..side {
        for kx in 0..side {
            let y = (ky as isize - l).rem_euclid(h as isize) as usize;
            let x = (kx as isize - l).rem_euclid(w as isize) as usize;
            out[y * w + x] += kernel[ky * side + kx];
        }
    }
    out
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// Half-quadratic surrogate
/// `‖K ⊛ I − B‖² + μ‖∇I − ∇E‖² + β‖∇I − g‖² + λ·#{g ≠ 0}`.
#[allow(clippy::too_many_arguments)]
pub fn surrogate(
    latent: &[f64],
    b: &[f64],
    exemplar: &[f64],
    kernel_full: &[f64],
    g: &[Vec<f64>; 2],
    beta: f64,
    mu: f64,
    lambda: f64,
    h: usize,
    w: usize,
) -> f64 {
    let data = sq(&sub(&circ_conv(latent, kernel_full, h, w), b));
    let gl = diff(latent, h, w);
    let ge = diff(exemplar, h, w);
    let mut ex = 0.0;
    let mut split = 0.0;
    for d in 0..2 {
        ex += sq(&sub(&gl[d], &ge[d]));
        split += sq(&sub(&gl[d], &g[d]));
    }
    let count = g[0].iter().zip(&g[1]).filter(|(a, b)| **a != 0.0 || **b != 0.0).count();
    data + mu * ex + beta * split + lambda * count as f64
}
