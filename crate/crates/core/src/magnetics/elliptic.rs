//! Complete elliptic integrals, parameterized by the modulus `k`.

use std::f64::consts::FRAC_PI_2;

/// K(k) and E(k) by the arithmetic-geometric mean. Requires `0 <= k < 1`.
pub fn complete_ke(k: f64) -> (f64, f64) {
    debug_assert!((0.0..1.0).contains(&k));
    let mut a = 1.0;
    let mut b = (1.0 - k * k).sqrt();
    let mut c = k;
    let mut sum = 0.5 * c * c;
    let mut pow2 = 0.5;
    for _ in 0..64 {
        if c.abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        pow2 *= 2.0;
        sum += pow2 * c * c;
        a = an;
        b = bn;
    }
    let kk = FRAC_PI_2 / a;
    (kk, kk * (1.0 - sum))
}

/// `(1 - k²/2) K(k) - E(k)`, accurate also for small `k` where the two terms
/// cancel. The power series in `m = k²` starts at `π m² / 32`.
pub fn coaxial_kernel(k: f64) -> f64 {
    let m = k * k;
    if m < 0.1 {
        // a_n = ((2n-1)!! / (2n)!!)²; c_n = a_n 2n/(2n-1) - a_{n-1}/2.
        let mut a_prev = 0.25; // a_1
        let mut sum = 0.0;
        let mut mp = m; // m^1
        for n in 2..60 {
            let nf = n as f64;
            let ratio = (2.0 * nf - 1.0) / (2.0 * nf);
            let a_n = a_prev * ratio * ratio;
            mp *= m;
            let term = (a_n * 2.0 * nf / (2.0 * nf - 1.0) - 0.5 * a_prev) * mp;
            sum += term;
            a_prev = a_n;
            if term.abs() <= 1e-18 * sum.abs() {
                break;
            }
        }
        FRAC_PI_2 * sum
    } else {
        let (kk, ee) = complete_ke(k);
        (1.0 - 0.5 * m) * kk - ee
    }
}
