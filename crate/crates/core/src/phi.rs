//! The exponential-integrator functions φ_k(z) = Σ_j z^j/(j+k)!, k = 0..4.
//!
//! Small arguments use a Taylor series for φ_4 followed by the stable upward
//! recurrence φ_{k-1} = 1/(k-1)! + z·φ_k; larger ones start from
//! expm1(z)/z and recur downwards.

const SERIES_RADIUS: f64 = 2.0;
const SERIES_TERMS: usize = 24;

/// Returns [φ_0, φ_1, φ_2, φ_3, φ_4] at `z`.
pub fn phi(z: f64) -> [f64; 5] {
    if z.abs() < SERIES_RADIUS {
        // φ_4(z) = Σ z^j/(j+4)!, summed from the smallest term
        let mut coeffs = [0.0; SERIES_TERMS];
        let mut c = 1.0 / 24.0;
        for (j, slot) in coeffs.iter_mut().enumerate() {
            *slot = c;
            c /= (j + 5) as f64;
        }
        let p4 = coeffs.iter().rev().fold(0.0, |acc, &c| acc * z + c);
        let p3 = 1.0 / 6.0 + z * p4;
        let p2 = 0.5 + z * p3;
        let p1 = 1.0 + z * p2;
        [z.exp(), p1, p2, p3, p4]
    } else {
        let p1 = z.exp_m1() / z;
        let p2 = (p1 - 1.0) / z;
        let p3 = (p2 - 0.5) / z;
        let p4 = (p3 - 1.0 / 6.0) / z;
        [z.exp(), p1, p2, p3, p4]
    }
}
