//! Independent reference formulas shared by the integration tests.
//!
//! Nothing here calls into the bound or rate code under test; the honest
//! channel and the textbook weak+vacuum estimates are written out directly.

#![allow(dead_code)]

use std::path::PathBuf;

pub const Y0: f64 = 1.7e-6;
pub const ETA_BOB: f64 = 0.045;
pub const E_DET: f64 = 0.033;
pub const E0: f64 = 0.5;
pub const F_EC: f64 = 1.22;
pub const ALPHA: f64 = 0.21;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

pub fn eta(length_km: f64) -> f64 {
    ETA_BOB * 10f64.powf(-ALPHA * length_km / 10.0)
}

pub fn gain(omega: f64, eta: f64) -> f64 {
    Y0 - (-eta * omega).exp_m1()
}

pub fn error_gain(omega: f64, eta: f64) -> f64 {
    E0 * Y0 - E_DET * (-eta * omega).exp_m1()
}

/// Honest single-photon yield `Y₀ + η`.
pub fn y1_true(eta: f64) -> f64 {
    Y0 + eta
}

/// Honest single-photon error rate.
pub fn e1_true(eta: f64) -> f64 {
    (E0 * Y0 + E_DET * eta) / y1_true(eta)
}

pub fn h2(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
}

/// Textbook weak+vacuum single-photon yield bound, unclamped.
pub fn y1_standard(mu: f64, nu: f64, q_mu: f64, q_nu: f64, y0: f64) -> f64 {
    mu / (mu * nu - nu * nu)
        * (q_nu * nu.exp()
            - q_mu * mu.exp() * nu * nu / (mu * mu)
            - (mu * mu - nu * nu) / (mu * mu) * y0)
}

/// Textbook weak+vacuum single-photon error bound from the decoy setting.
pub fn e1_standard(nu: f64, eq_nu: f64, y0: f64, y1: f64) -> f64 {
    (eq_nu * nu.exp() - E0 * y0) / (y1 * nu)
}

/// Standard decoy key rate at fixed intensities on the honest GYS channel.
pub fn standard_rate(length_km: f64, mu: f64, nu: f64) -> f64 {
    let eta = eta(length_km);
    let (q_mu, q_nu) = (gain(mu, eta), gain(nu, eta));
    let y1 = y1_standard(mu, nu, q_mu, q_nu, Y0).min(1.0);
    if y1 <= 0.0 {
        return 0.0;
    }
    let e1 = e1_standard(nu, error_gain(nu, eta), Y0, y1).clamp(0.0, 0.5);
    let qber = (error_gain(mu, eta) / q_mu).min(0.5);
    let r = -q_mu * F_EC * h2(qber) + y1 * mu * (-mu).exp() * (1.0 - h2(e1));
    r.max(0.0)
}

/// Best standard rate over the default step-0.01 grid.
pub fn standard_optimum(length_km: f64) -> f64 {
    let mut best = 0.0f64;
    for i in 1..=50 {
        let mu = i as f64 / 100.0;
        for j in 1..=20 {
            let nu = j as f64 / 100.0;
            if nu < mu {
                best = best.max(standard_rate(length_km, mu, nu));
            }
        }
    }
    best
}

/// Bob's signal and decoy gains under an attack strategy, summed directly
/// over photon numbers. `guess` is `[p_ss, p_ds, p_sd, p_dd]`; entry `k` of
/// `z_mu`/`z_nu` belongs to `k + 1` photons.
pub fn eve_gains(
    z_mu: &[f64],
    z_nu: &[f64],
    guess: [f64; 4],
    mu: f64,
    nu: f64,
    eta: f64,
) -> (f64, f64) {
    let one = |omega: f64, ps: f64, pd: f64| {
        let out = (1.0 - ps - pd).max(0.0);
        let mut p = (-omega).exp();
        let mut q = Y0 * p;
        for n in 1..=80usize {
            p *= omega / n as f64;
            let z = if n <= z_mu.len() {
                ps * z_mu[n - 1] + pd * z_nu[n - 1]
            } else {
                0.0
            };
            let fwd = if n >= 2 {
                out * (Y0 + 1.0 - (1.0 - eta).powi(n as i32)).min(1.0)
            } else {
                0.0
            };
            q += p * (z + fwd);
        }
        q
    };
    let [p_ss, p_ds, p_sd, p_dd] = guess;
    (one(mu, p_ss, p_ds), one(nu, p_sd, p_dd))
}
