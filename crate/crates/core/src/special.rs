//! Bessel functions of integer order and the analytic spectra of the unit disk.
//!
//! These are the oracles for the disk checks; nothing in the solver depends on
//! them.

use crate::error::{Error, Result};

/// `J_0(x), ..., J_m(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 sum J_{2k} = 1`.
pub fn bessel_j_all(m: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = m.max(ax as usize) + 20 + (40.0 * (m as f64).max(ax)).sqrt() as usize;
    let (mut jp, mut j) = (0.0, 1e-300);
    let mut sum = 0.0;
    let mut vals = vec![0.0; top + 1];
    vals[top] = j;
    for k in (1..=top).rev() {
        let jm = 2.0 * k as f64 / ax * j - jp;
        jp = j;
        j = jm;
        vals[k - 1] = j;
        if (k - 1) % 2 == 0 && k > 1 {
            sum += 2.0 * j;
        }
        if j.abs() > 1e250 {
            for v in vals[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            jp *= 1e-250;
            j *= 1e-250;
            sum *= 1e-250;
        }
    }
    sum += vals[0];
    for (k, o) in out.iter_mut().enumerate() {
        let v = vals[k] / sum;
        // J_k(-x) = (-1)^k J_k(x)
        *o = if x < 0.0 && k % 2 == 1 { -v } else { v };
    }
    out
}

pub fn bessel_j(m: usize, x: f64) -> f64 {
    bessel_j_all(m, x)[m]
}

/// `J_m'(x)`
pub fn bessel_j_prime(m: usize, x: f64) -> f64 {
    let j = bessel_j_all(m + 1, x);
    if m == 0 {
        -j[1]
    } else {
        0.5 * (j[m - 1] - j[m + 1])
    }
}

/// Positive zeros of `f` in `(lo, hi)`, bracketed on a grid of step `step` and
/// bisected to machine precision.
fn zeros_of(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    while a < hi {
        let b = (a + step).min(hi);
        let fb = f(b);
        if fa == 0.0 {
            out.push(a);
        } else if fa * fb < 0.0 {
            let (mut l, mut r, mut fl) = (a, b, fa);
            while r - l > 4.0 * f64::EPSILON * r {
                let mid = 0.5 * (l + r);
                let fm = f(mid);
                if fm == 0.0 {
                    l = mid;
                    r = mid;
                    break;
                }
                if fm * fl < 0.0 {
                    r = mid;
                } else {
                    l = mid;
                    fl = fm;
                }
            }
            out.push(0.5 * (l + r));
        }
        a = b;
        fa = fb;
    }
    out
}

/// Zeros of `J_m` in `(0, hi)`.
pub fn bessel_j_zeros(m: usize, hi: f64) -> Vec<f64> {
    zeros_of(|x| bessel_j(m, x), 1e-3 + m as f64 * 0.5, hi, 0.05)
}

/// Positive zeros of `J_m'` in `(0, hi)`.
pub fn bessel_j_prime_zeros(m: usize, hi: f64) -> Vec<f64> {
    zeros_of(|x| bessel_j_prime(m, x), 1e-3 + m as f64 * 0.5, hi, 0.05)
}

fn disk_spectrum(count: usize, zeros: impl Fn(usize, f64) -> Vec<f64>, with_zero: bool) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("requested zero disk eigenvalues".into()));
    }
    // Weyl: N(lambda) ~ lambda / 4 on the unit disk
    let mut bound = (8.0 * count as f64 + 40.0).sqrt();
    loop {
        let mut vals = if with_zero { vec![0.0] } else { Vec::new() };
        for m in 0.. {
            if m as f64 > bound {
                break;
            }
            for z in zeros(m, bound) {
                vals.push(z * z);
                if m > 0 {
                    vals.push(z * z);
                }
            }
        }
        vals.sort_by(f64::total_cmp);
        if vals.len() >= count {
            vals.truncate(count);
            return Ok(vals);
        }
        bound *= 1.3;
    }
}

/// Lowest `count` Dirichlet eigenvalues of the unit disk, with multiplicity.
pub fn disk_dirichlet_eigenvalues(count: usize) -> Result<Vec<f64>> {
    disk_spectrum(count, bessel_j_zeros, false)
}

/// Lowest `count` Neumann eigenvalues of the unit disk (starting with 0), with
/// multiplicity.
pub fn disk_neumann_eigenvalues(count: usize) -> Result<Vec<f64>> {
    disk_spectrum(count, bessel_j_prime_zeros, true)
}

/// `j_{0,1}^2`, the first Dirichlet eigenvalue of the unit disk.
pub fn j01_squared() -> f64 {
    let z = bessel_j_zeros(0, 3.0)[0];
    z * z
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from an independent implementation (scipy.special)
    #[test]
    fn values_match_reference() {
        let cases = [
            (0, 1.0, 0.7651976865579666),
            (1, 1.0, 0.44005058574493355),
            (5, 10.0, -0.2340615281867936),
            (30, 25.0, 0.01180902612426896),
            (0, 35.5, -0.13233156389133005),
            (2, 1e-3, 1.2499998958333368e-07),
        ];
        for (m, x, want) in cases {
            let got = bessel_j(m, x);
            assert!((got - want).abs() <= 1e-13 * want.abs().max(1e-3), "J_{m}({x}) = {got}, want {want}");
        }
        assert!((bessel_j(3, -2.0) + bessel_j(3, 2.0)).abs() < 1e-16);
    }

    #[test]
    fn zeros_match_reference() {
        let z = bessel_j_zeros(0, 9.0);
        for (a, b) in z.iter().zip([2.4048255576957724, 5.520078110286311, 8.653727912911013]) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        assert!((bessel_j_zeros(1, 8.0)[1] - 7.015586669815619).abs() < 1e-13);
        assert!((bessel_j_zeros(20, 26.0)[0] - 25.41714081407252).abs() < 1e-12);
        let zp = bessel_j_prime_zeros(1, 6.0);
        assert!((zp[0] - 1.8411837813406595).abs() < 1e-13 && (zp[1] - 5.3314427735250325).abs() < 1e-13);
        assert!((j01_squared() - 2.4048255576957724f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn disk_spectra_counts() {
        // 92 Dirichlet and 111 Neumann eigenvalues below 400 (reference count)
        let d = disk_dirichlet_eigenvalues(93).unwrap();
        assert!(d[91] < 400.0 && d[92] > 400.0);
        let n = disk_neumann_eigenvalues(112).unwrap();
        assert!(n[110] < 400.0 && n[111] > 400.0);
        assert_eq!(n[0], 0.0);
        assert!((n[1] - n[2]).abs() < 1e-12 && (n[1] - 1.8411837813406595f64.powi(2)).abs() < 1e-11);
    }
}
