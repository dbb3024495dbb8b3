//! wasm-bindgen entry points for the static demo page in `www/`.

use capwave::dispersive::{bessel_j_std, circular_harmonics, gaussian_transform, propagate_point, uniform_nodes, FourierInput};
use capwave::resonance::{norm, Phase, SignPair};
use wasm_bindgen::prelude::*;

/// `J_|m|(s)` on `samples` points of `[0, s_max]`.
pub fn bessel_curve_impl(m: i32, s_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if samples < 2 || !(s_max > 0.0) {
        return Err("need samples >= 2 and s_max > 0".into());
    }
    (0..samples)
        .map(|i| bessel_j_std(m.unsigned_abs(), s_max * i as f64 / (samples - 1) as f64).map_err(|e| e.to_string()))
        .collect()
}

/// Normalized `|phi|` and `|d_eta phi|` over `xi` in `[-half, half]^2` with
/// `eta = (1, 0)`, row-major in `xi_2`, the two maps one after the other.
pub fn phase_maps_impl(signs: &str, half: f64, n: usize) -> Result<Vec<f64>, String> {
    let s = SignPair::parse(signs).map_err(|e| e.to_string())?;
    if n < 2 || !(half > 0.0) {
        return Err("need n >= 2 and half > 0".into());
    }
    let p = Phase::new(s);
    let eta = [1.0, 0.0];
    let mut phi = Vec::with_capacity(n * n);
    let mut grad = Vec::with_capacity(n * n);
    for i in 0..n {
        let x2 = half - 2.0 * half * i as f64 / (n - 1) as f64;
        for j in 0..n {
            let xi = [-half + 2.0 * half * j as f64 / (n - 1) as f64, x2];
            phi.push(p.eval(xi, eta).abs() / p.scale(xi, eta));
            grad.push(p.grad_eta(xi, eta).map_or(f64::NAN, |g| norm(g) / p.grad_scale(xi, eta)));
        }
    }
    phi.extend(grad);
    Ok(phi)
}

/// `|e^{i t Lambda^{3/2}} f|` along a ray for the Gaussian bump of the given width.
pub fn dispersed_profile_impl(width: f64, t: f64, r_max: f64, samples: usize) -> Result<Vec<f64>, String> {
    if !(width > 0.0 && t >= 0.0 && r_max > 0.0) || samples < 2 {
        return Err("need width > 0, t >= 0, r_max > 0 and samples >= 2".into());
    }
    let input = FourierInput::analytic(gaussian_transform(width, 1.0));
    let d = circular_harmonics(&input, 0, &uniform_nodes(12.0 / width, 1200)).map_err(|e| e.to_string())?;
    (0..samples)
        .map(|i| {
            let r = r_max * i as f64 / (samples - 1) as f64;
            propagate_point(&d, t, r, 0.0).map(|v| v.value.norm()).map_err(|e| e.to_string())
        })
        .collect()
}

#[wasm_bindgen]
pub fn bessel_curve(m: i32, s_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    bessel_curve_impl(m, s_max, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn phase_maps(signs: &str, half: f64, n: usize) -> Result<Vec<f64>, JsError> {
    phase_maps_impl(signs, half, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn dispersed_profile(width: f64, t: f64, r_max: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    dispersed_profile_impl(width, t, r_max, samples).map_err(|e| JsError::new(&e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bessel_starts_at_one() {
        let v = bessel_curve_impl(0, 10.0, 11).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!(bessel_curve_impl(3, 10.0, 11).unwrap()[0].abs() < 1e-15);
        assert!(bessel_curve_impl(0, -1.0, 11).is_err());
    }

    #[test]
    fn space_resonance_on_the_doubled_ray() {
        let n = 61;
        let v = phase_maps_impl("--", 3.0, n).unwrap();
        assert_eq!(v.len(), 2 * n * n);
        // xi = 2 eta sits at row 30, col 50
        assert!(v[n * n + 30 * n + 50] < 1e-12);
        assert!(v[30 * n + 50] > 0.1);
        assert!(phase_maps_impl("+*", 3.0, n).is_err());
    }

    #[test]
    fn profile_at_time_zero_is_the_bump() {
        let v = dispersed_profile_impl(1.0, 0.0, 3.0, 4).unwrap();
        for (i, x) in v.iter().enumerate() {
            let r = i as f64;
            assert!((x - (-r * r / 2.0).exp()).abs() < 1e-8, "{i}: {x}");
        }
    }
}
