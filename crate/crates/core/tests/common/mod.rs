//! Independent reference implementations used as test oracles. Everything
//! here works in the signal domain with plain loops; nothing calls the
//! FFT path under test.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tubal_core::{Shape3, Tensor3};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut impl Rng, shape: Shape3) -> Tensor3 {
    Tensor3::from_fn(shape, |_, _, _| rng.random_range(-1.0..1.0))
}

pub fn rel_err(a: &Tensor3, b: &Tensor3) -> f64 {
    let diff: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).powi(2))
        .sum();
    let base = b.fro_norm_sq().max(f64::MIN_POSITIVE);
    (diff / base).sqrt()
}

/// `C(i,j,l) = sum_q sum_s A(i,q,s) B(q,j,(l - s) mod k)`.
pub fn tprod_direct(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    let (m, r, k) = (a.rows(), a.cols(), a.tubes());
    let n = b.cols();
    assert_eq!(b.rows(), r);
    assert_eq!(b.tubes(), k);
    let mut c = Tensor3::zeros(Shape3::new(m, n, k));
    for l in 0..k {
        for s in 0..k {
            let t = (l + k - s) % k;
            for j in 0..n {
                for q in 0..r {
                    let bv = b[(q, j, t)];
                    if bv == 0.0 {
                        continue;
                    }
                    for i in 0..m {
                        c[(i, j, l)] += a[(i, q, s)] * bv;
                    }
                }
            }
        }
    }
    c
}

/// `A^T(j,i,l) = A(i,j,(k - l) mod k)`.
pub fn ttranspose_direct(a: &Tensor3) -> Tensor3 {
    let s = a.shape();
    Tensor3::from_fn(Shape3::new(s.cols, s.rows, s.tubes), |j, i, l| {
        a[(i, j, (s.tubes - l) % s.tubes)]
    })
}

pub fn sub(a: &Tensor3, b: &Tensor3) -> Tensor3 {
    Tensor3::from_vec(
        a.shape(),
        a.as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| x - y)
            .collect(),
    )
    .unwrap()
}

/// `1/2 ||Y - D * X||_F^2`.
pub fn smooth_value(d: &Tensor3, y: &Tensor3, x: &Tensor3) -> f64 {
    0.5 * sub(&tprod_direct(d, x), y).fro_norm_sq()
}

pub fn objective_value(d: &Tensor3, y: &Tensor3, x: &Tensor3, beta: f64) -> f64 {
    smooth_value(d, y, x) + beta * x.l1_norm()
}

/// Central differences of the smooth term with respect to every entry of `x`.
pub fn finite_difference_gradient(d: &Tensor3, y: &Tensor3, x: &Tensor3, h: f64) -> Tensor3 {
    let mut g = Tensor3::zeros(x.shape());
    let mut probe = x.clone();
    for idx in 0..x.as_slice().len() {
        let orig = probe.as_slice()[idx];
        probe.as_mut_slice()[idx] = orig + h;
        let up = smooth_value(d, y, &probe);
        probe.as_mut_slice()[idx] = orig - h;
        let down = smooth_value(d, y, &probe);
        probe.as_mut_slice()[idx] = orig;
        g.as_mut_slice()[idx] = (up - down) / (2.0 * h);
    }
    g
}

pub fn normalize_atoms(d: &mut Tensor3) {
    let s = d.shape();
    for j in 0..s.cols {
        let mut e = 0.0;
        for l in 0..s.tubes {
            for i in 0..s.rows {
                e += d[(i, j, l)] * d[(i, j, l)];
            }
        }
        let n = e.sqrt();
        if n > 0.0 {
            for l in 0..s.tubes {
                for i in 0..s.rows {
                    d[(i, j, l)] /= n;
                }
            }
        }
    }
}

pub fn random_dictionary(rng: &mut impl Rng, m: usize, r: usize, k: usize) -> Tensor3 {
    let mut d = random_tensor(rng, Shape3::new(m, r, k));
    normalize_atoms(&mut d);
    d
}

/// Entries nonzero with probability `density`, magnitudes in `[0.5, 1.5]`.
pub fn sparse_tensor(rng: &mut impl Rng, shape: Shape3, density: f64) -> Tensor3 {
    Tensor3::from_fn(shape, |_, _, _| {
        if rng.random_bool(density) {
            let mag = rng.random_range(0.5..1.5);
            if rng.random_bool(0.5) {
                mag
            } else {
                -mag
            }
        } else {
            0.0
        }
    })
}

pub fn atom_energies(d: &Tensor3) -> Vec<f64> {
    let s = d.shape();
    (0..s.cols)
        .map(|j| {
            let mut e = 0.0;
            for l in 0..s.tubes {
                for i in 0..s.rows {
                    e += d[(i, j, l)] * d[(i, j, l)];
                }
            }
            e
        })
        .collect()
}

/// Scales atoms with energy above one back onto the unit sphere.
fn project(d: &mut Tensor3) {
    let s = d.shape();
    for (j, e) in atom_energies(d).into_iter().enumerate() {
        if e > 1.0 {
            let n = e.sqrt();
            for l in 0..s.tubes {
                for i in 0..s.rows {
                    d[(i, j, l)] /= n;
                }
            }
        }
    }
}

/// Largest eigenvalue of `D -> D * X * X^T` by power iteration.
fn lipschitz_of_codes(x: &Tensor3, m: usize) -> f64 {
    let xt = ttranspose_direct(x);
    let mut v = Tensor3::from_fn(Shape3::new(m, x.rows(), x.tubes()), |i, j, l| {
        1.0 + ((i * 7 + j * 3 + l * 5) % 11) as f64 / 11.0
    });
    let mut est = 0.0;
    for _ in 0..500 {
        let w = tprod_direct(&tprod_direct(&v, x), &xt);
        let n = w.fro_norm();
        if n == 0.0 {
            return 0.0;
        }
        est = n / v.fro_norm();
        v = w.scaled(1.0 / n);
    }
    est
}

/// Accelerated projected gradient on
/// `min 1/2 ||Y - D * X||^2  s.t. ||D(:,j,:)||_F^2 <= 1`.
/// Returns the dictionary and its objective.
pub fn projected_gradient_dictionary(
    y: &Tensor3,
    x: &Tensor3,
    iterations: usize,
) -> (Tensor3, f64) {
    let m = y.rows();
    let r = x.rows();
    let k = x.tubes();
    let step = 1.0 / (lipschitz_of_codes(x, m) * 1.01);
    let xt = ttranspose_direct(x);
    let mut d = Tensor3::zeros(Shape3::new(m, r, k));
    let mut z = d.clone();
    let mut t = 1.0f64;
    let mut best = (f64::INFINITY, d.clone());
    for _ in 0..iterations {
        let resid = sub(&tprod_direct(&z, x), y);
        let grad = tprod_direct(&resid, &xt);
        let mut next = Tensor3::from_vec(
            z.shape(),
            z.as_slice()
                .iter()
                .zip(grad.as_slice())
                .map(|(a, g)| a - step * g)
                .collect(),
        )
        .unwrap();
        project(&mut next);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        z = Tensor3::from_vec(
            next.shape(),
            next.as_slice()
                .iter()
                .zip(d.as_slice())
                .map(|(a, b)| a + mom * (a - b))
                .collect(),
        )
        .unwrap();
        d = next;
        t = t_next;
        let f = smooth_value(&d, y, x);
        if f < best.0 {
            best = (f, d.clone());
        }
    }
    (best.1, best.0)
}
