use serde::{Deserialize, Serialize};

use super::{sphere_area, WeightedHypersurface};
use crate::error::{invalid, Error, Result};
use crate::spacetime::unit_ball_volume;

/// Constants `(T, ω)` making the Gaussian area of any surface close to a
/// cylinder at most 1/2 at large scales, with the two bounds behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingConstants {
    pub n: usize,
    pub j: usize,
    pub eta: f64,
    pub lambda0: f64,
    /// Constant in `Vol(B_R(x) ∩ Σ) <= c R^{n−1}` for `R >= 1`.
    pub area_constant: f64,
    pub omega: f64,
    pub t_big: f64,
    /// Value of the near-ball bound at `(T, ω)`.
    pub near: f64,
    /// Value of the tail bound at `ω`.
    pub far: f64,
    /// The clearing window `((T−1)s, (η^{−2} − 4ω^2) s / 4ω^2)` is nonempty,
    /// i.e. `T <= η^{−2} / 4ω^2`.
    pub has_content: bool,
}

impl ClearingConstants {
    /// Clearing window `(lo, hi)` in units of `s`, relative to the event time.
    pub fn window(&self) -> (f64, f64) {
        let w2 = self.omega * self.omega;
        (self.t_big - 1.0, (self.eta.powi(-2) - 4.0 * w2) / (4.0 * w2))
    }

    /// Ball radius `η^{−1} sqrt(s) / 2` that must be empty.
    pub fn ball_radius(&self, s: f64) -> f64 {
        0.5 * s.sqrt() / self.eta
    }
}

/// Volume constant of the shrinking cylinder `R^j × S^{n−j}_{sqrt(2(n−j))}`:
/// its intersection with any ball of radius `R` has area at most
/// `|S^{n−j}| (2(n−j))^{(n−j)/2} ω_j R^j`.
pub fn cylinder_area_constant(n: usize, j: usize) -> Result<f64> {
    if j >= n {
        return Err(Error::Infeasible(
            "volume growth is Euclidean, Gaussian areas do not decay".into(),
        ));
    }
    let m = n - j;
    Ok(sphere_area(m) * (2.0 * m as f64).powf(m as f64 / 2.0) * unit_ball_volume(j))
}

/// Tail bound `λ0 (e/2n)^{n/2} ω^n Σ_{k>=1} (k+1)^n e^{−ω^2 k^2 / 4}`, using
/// the entropy volume bound `Vol(B_R ∩ Σ) <= λ0 (2πe/n)^{n/2} R^n`.
pub fn far_bound(n: usize, lambda0: f64, omega: f64) -> f64 {
    let nf = n as f64;
    let mut sum = 0.0;
    for k in 1.. {
        let term = ((k + 1) as f64).powf(nf) * (-omega * omega * (k * k) as f64 / 4.0).exp();
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    lambda0 * (std::f64::consts::E / (2.0 * nf)).powf(nf / 2.0) * omega.powf(nf) * sum
}

/// Near-ball bound `c ω^{n−1} (4π)^{−n/2} T^{−1/2}`.
pub fn near_bound(n: usize, c: f64, omega: f64, t_big: f64) -> f64 {
    c * omega.powi(n as i32 - 1) * (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0) / t_big.sqrt()
}

/// Smallest `ω` on a grid of step 0.01 with tail bound at most 1/4, then the
/// smallest integer `T > 1` with near-ball bound at most 1/4. The
/// cylinder's volume constant is inflated by `1 + η` for graphs over it.
///
/// Fails when no `t >= T` fits in the ball, `ω sqrt(T) > η^{−1}`.
pub fn clearing_constants(eta: f64, lambda0: f64, n: usize, j: usize) -> Result<ClearingConstants> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(invalid("eta", "must lie in (0, 1)"));
    }
    if !(lambda0 >= 1.0) {
        return Err(invalid("lambda0", "entropy bound must be at least 1"));
    }
    if n == 0 {
        return Err(invalid("n", "need n >= 1"));
    }
    let c = (1.0 + eta) * cylinder_area_constant(n, j)?;
    let mut omega = None;
    for i in 1..=100_000 {
        let w = 1.0 + 0.01 * i as f64;
        if far_bound(n, lambda0, w) <= 0.25 {
            omega = Some(w);
            break;
        }
    }
    let omega = omega.ok_or_else(|| Error::Infeasible("no ω up to 1001 bounds the tail".into()))?;
    let need = 4.0 * c * omega.powi(n as i32 - 1) * (4.0 * std::f64::consts::PI).powf(-(n as f64) / 2.0);
    let t_big = (need * need).ceil().max(2.0);
    if omega * t_big.sqrt() > 1.0 / eta {
        return Err(Error::Infeasible(format!(
            "ω sqrt(T) = {:.1} exceeds η^-1 = {:.1}; η is too large",
            omega * t_big.sqrt(),
            1.0 / eta
        )));
    }
    Ok(ClearingConstants {
        n,
        j,
        eta,
        lambda0,
        area_constant: c,
        omega,
        t_big,
        near: near_bound(n, c, omega, t_big),
        far: far_bound(n, lambda0, omega),
        has_content: t_big <= eta.powi(-2) / (4.0 * omega * omega),
    })
}

/// Scale `t > 1` at which the exact cylinder's Gaussian area centred on its
/// axis drops to 1/2.
pub fn cylinder_clearing_time(n: usize, j: usize) -> Result<f64> {
    let s = WeightedHypersurface::shrinker_cylinder(n, j, None)?;
    if j >= n {
        return Err(Error::Infeasible("a plane has Gaussian area 1 at every scale".into()));
    }
    let x = vec![0.0; n + 1];
    let f = |t: f64| s.f_functional(&x, t).unwrap() - 0.5;
    let (mut lo, mut hi) = (1.0, 2.0);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateSample {
    /// Axial coordinate and distance from the axis of the centre.
    pub axial: f64,
    pub radial: f64,
    pub t: f64,
    pub f: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearingCertificate {
    pub amplitude: f64,
    pub samples: Vec<CertificateSample>,
    pub max_f: f64,
    pub holds: bool,
}

fn halton(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Evaluates `F_{x,t}` of a perturbed cylinder `R × S^{n−1}` (radius
/// `sqrt(2(n−1)) (1 + amplitude sin z)`) at `count` quasi-random `(x, t)`
/// with `t >= T` and `|x| + ω sqrt(t) <= η^{−1}`, and checks `F <= 1/2`.
pub fn clearing_certificate(k: &ClearingConstants, amplitude: f64, count: usize) -> Result<ClearingCertificate> {
    if k.j != 1 {
        return Err(invalid("j", "the perturbed-cylinder certificate is built for j = 1"));
    }
    if !(amplitude.abs() < 0.5) {
        return Err(invalid("amplitude", "perturbation must stay a small graph"));
    }
    let reach = 1.0 / k.eta;
    let t_max = (reach / k.omega).powi(2);
    if t_max < k.t_big {
        return Err(Error::Infeasible("no admissible scales".into()));
    }
    let r0 = (2.0 * (k.n - 1) as f64).sqrt();
    // past 12.3 sqrt(t_max) beyond the ball the Gaussian weight is below e^-37
    let half = reach + 12.3 * t_max.sqrt();
    let step = 0.1;
    let m = (half / step).ceil() as usize;
    let profile: Vec<[f64; 2]> = (0..=2 * m)
        .map(|i| {
            let z = -half + i as f64 * step;
            [z, r0 * (1.0 + amplitude * z.sin())]
        })
        .collect();
    let surface = WeightedHypersurface::revolution(k.n, vec![profile])?;
    let mut samples = Vec::with_capacity(count);
    for i in 1..=count {
        let t = (k.t_big.ln() + (t_max / k.t_big).ln() * halton(i, 2)).exp();
        let room = (reach - k.omega * t.sqrt()).max(0.0);
        let r = room * halton(i, 3).sqrt();
        let ang = std::f64::consts::PI * halton(i, 5);
        let (axial, radial) = (r * ang.cos(), r * ang.sin());
        let mut x = vec![0.0; k.n + 1];
        x[0] = axial;
        x[1] = radial;
        let f = surface.f_functional(&x, t)?;
        samples.push(CertificateSample { axial, radial, t, f });
    }
    let max_f = samples.iter().map(|s| s.f).fold(0.0, f64::max);
    Ok(ClearingCertificate {
        amplitude,
        samples,
        max_f,
        holds: max_f <= 0.5,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_cylinder_crossing() {
        // F_{0,t} = sqrt(2π/t) e^{-1/(2t)} for R × S^1_{sqrt 2}
        let t = cylinder_clearing_time(2, 1).unwrap();
        let f = (2.0 * std::f64::consts::PI / t).sqrt() * (-0.5 / t).exp();
        assert!((f - 0.5).abs() < 1e-12);
        assert!(t > 20.0 && t < 30.0);
    }

    #[test]
    fn plane_is_infeasible() {
        assert!(matches!(
            clearing_constants(0.001, 2.0, 2, 2),
            Err(Error::Infeasible(_))
        ));
        assert!(matches!(cylinder_clearing_time(2, 2), Err(Error::Infeasible(_))));
    }

    #[test]
    fn constants_meet_both_bounds() {
        let k = clearing_constants(0.001, 2.0, 2, 1).unwrap();
        assert!(k.near <= 0.25 && k.far <= 0.25);
        assert!(far_bound(2, 2.0, k.omega - 0.01) > 0.25);
        assert!(near_bound(2, k.area_constant, k.omega, k.t_big - 1.0) > 0.25);
        assert!(k.has_content);
    }

    #[test]
    fn large_eta_is_infeasible() {
        assert!(matches!(clearing_constants(0.2, 2.0, 2, 1), Err(Error::Infeasible(_))));
    }
}
