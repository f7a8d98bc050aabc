//! Bessel functions needed for radial (N = 2) kernels: `J0` for the Hankel
//! transform and the exponentially scaled `I0` for the angular average of a
//! Gaussian.

use std::f64::consts::{FRAC_PI_4, PI};

/// Bessel function of the first kind, order zero.
pub fn j0(x: f64) -> f64 {
    let x = x.abs();
    if x < 1e-8 {
        return 1.0 - 0.25 * x * x;
    }
    if x <= 25.0 {
        j0_miller(x)
    } else {
        j0_asymptotic(x)
    }
}

// Backward recurrence normalised by J0 + 2 sum J_{2k} = 1.
fn j0_miller(x: f64) -> f64 {
    let start = 2 * ((x as usize + 60) / 2);
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut j0 = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        if (k - 1) % 2 == 0 && k > 1 {
            norm += 2.0 * cur;
        }
        if k == 1 {
            j0 = cur;
        }
        if cur.abs() > 1e250 {
            next *= 1e-250;
            cur *= 1e-250;
            norm *= 1e-250;
            j0 *= 1e-250;
        }
    }
    norm += j0;
    j0 / norm
}

// Hankel expansion: J0 = sqrt(2/(pi x)) (P cos chi - Q sin chi), chi = x - pi/4.
fn j0_asymptotic(x: f64) -> f64 {
    let mut p = 1.0;
    let mut q = 0.0;
    let mut c = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        c *= -(odd * odd) / (k as f64 * 8.0 * x);
        if c.abs() >= last || c.abs() < 1e-18 {
            break;
        }
        last = c.abs();
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * c;
        } else {
            q += sign * c;
        }
    }
    let chi = x - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

/// `exp(-|x|) I0(x)`.
pub fn i0e(x: f64) -> f64 {
    let x = x.abs();
    if x <= 20.0 {
        let y = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        while term > 1e-17 * sum {
            term *= y / (k * k);
            sum += term;
            k += 1.0;
        }
        sum * (-x).exp()
    } else {
        let mut c = 1.0;
        let mut sum = 1.0;
        let mut last = f64::INFINITY;
        for k in 1..80 {
            let odd = (2 * k - 1) as f64;
            c *= odd * odd / (k as f64 * 8.0 * x);
            if c >= last || c < 1e-18 {
                break;
            }
            last = c;
            sum += c;
        }
        sum / (2.0 * PI * x).sqrt()
    }
}
