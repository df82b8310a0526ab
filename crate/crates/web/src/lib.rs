//! Browser demo: greedy points on the circle and on S^2, and the mean-field
//! constant, exported through wasm-bindgen. The plain functions hold the
//! logic so they can be tested off the browser.

use greedy_sphere::circle::greedy_circle;
use greedy_sphere::kernels::{wiener_constant, KernelSpec};
use greedy_sphere::{build_sequence, SolverParams, SpherePoint};
use wasm_bindgen::prelude::*;

/// Upper limits that keep the page responsive.
pub const MAX_CIRCLE_POINTS: usize = 4096;
pub const MAX_SPHERE_POINTS: usize = 800;
pub const MAX_MESH: usize = 20_000;

fn kernel(name: &str, s: f64, d: usize) -> Result<KernelSpec, String> {
    match name {
        "log" => Ok(KernelSpec::log(d)),
        "riesz" if s == 0.0 => Ok(KernelSpec::log(d)),
        "riesz" => Ok(KernelSpec::riesz(s, d)),
        other => Err(format!("unknown kernel '{other}'")),
    }
}

/// Angles of the first `n` greedy points on the circle from angle 0, with
/// the Riesz exponent `s` (`0` for log).
pub fn circle_angles(s: f64, n: usize) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_CIRCLE_POINTS {
        return Err(format!("n must be in 1..={MAX_CIRCLE_POINTS}"));
    }
    let params = SolverParams {
        multistart: 4,
        ..SolverParams::default()
    };
    let seq = greedy_circle(s, n, &params).map_err(|e| e.to_string())?;
    Ok(seq.points.iter().map(|p| p.angle()).collect())
}

/// Flat `x, y, z` coordinates of `n` greedy points on `S^2` from the north
/// pole.
pub fn sphere_points(kernel_name: &str, s: f64, n: usize, mesh: usize) -> Result<Vec<f64>, String> {
    if n == 0 || n > MAX_SPHERE_POINTS {
        return Err(format!("n must be in 1..={MAX_SPHERE_POINTS}"));
    }
    if mesh == 0 || mesh > MAX_MESH {
        return Err(format!("mesh must be in 1..={MAX_MESH}"));
    }
    let k = kernel(kernel_name, s, 2)?;
    let params = SolverParams {
        mesh_size: mesh,
        multistart: 4,
        ..SolverParams::default()
    };
    let seq = build_sequence(2, k, n, SpherePoint::north_pole(2), &params).map_err(|e| e.to_string())?;
    Ok(seq.points.iter().flat_map(|p| p.coords().to_vec()).collect())
}

/// `I_{s,d}`, the mean kernel value over the sphere.
pub fn mean_field(s: f64, d: usize) -> Result<f64, String> {
    wiener_constant(s, d).map(|w| w.value).map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = circleAngles)]
pub fn circle_angles_js(s: f64, n: usize) -> Result<Vec<f64>, JsError> {
    circle_angles(s, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = spherePoints)]
pub fn sphere_points_js(kernel: &str, s: f64, n: usize, mesh: usize) -> Result<Vec<f64>, JsError> {
    sphere_points(kernel, s, n, mesh).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = meanField)]
pub fn mean_field_js(s: f64, d: usize) -> Result<f64, JsError> {
    mean_field(s, d).map_err(|e| JsError::new(&e))
}
