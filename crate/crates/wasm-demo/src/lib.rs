//! Browser bindings: small, self-contained demos of transform-domain
//! sampling. Sizes are capped so every call returns interactively on one
//! thread.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use tdsamp::numerics::rel_error;
use tdsamp::operators::{dif_2d, random_tight_frame};
use tdsamp::rng::mix;
use tdsamp::schemes::{recover_analysis_baseline, recover_dif_scheme, recover_frame_scheme};
use tdsamp::sensing::{compose_frame_ensemble, compose_stacked_ensemble, gaussian_matrix, measure};
use tdsamp::signals::{gen_cosparse, gen_piecewise_image, NoiseModel};
use tdsamp::solvers::{Algorithm, SynthesisProgramSpec};

fn err_to_js(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn parse_algorithm(name: &str) -> Result<Algorithm, JsValue> {
    match name {
        "omp" => Ok(Algorithm::Omp),
        "cosamp" => Ok(Algorithm::Cosamp),
        "iht" => Ok(Algorithm::Iht),
        "l1_bpdn" => Ok(Algorithm::L1Bpdn),
        other => Err(JsValue::from_str(&format!(
            "unknown algorithm {}; use omp, cosamp, iht, or l1_bpdn",
            other
        ))),
    }
}

#[derive(Serialize)]
struct FrameDemoOut {
    x: Vec<f64>,
    x_hat: Vec<f64>,
    w: Vec<f64>,
    w_hat: Vec<f64>,
    k: usize,
    m: usize,
    rel_error: f64,
    converged: bool,
    iterations: f64,
}

/// Cosparse signal under a random tight frame, sampled with M = AΩ and
/// recovered by pulling the solver's coefficient estimate back through Ω†.
#[wasm_bindgen]
pub fn frame_demo(
    n: usize,
    d: usize,
    cosparsity: usize,
    m: usize,
    algorithm: &str,
    sigma: f64,
    seed: u32,
) -> Result<JsValue, JsValue> {
    if n > 96 || d > 80 || m > 96 {
        return Err(JsValue::from_str("demo sizes are capped at n 96, d 80"));
    }
    let alg = parse_algorithm(algorithm)?;
    let s = seed as u64;
    let omega = random_tight_frame(n, d, mix(&[s, 1])).map_err(err_to_js)?;
    let sig = gen_cosparse(&omega, cosparsity, mix(&[s, 2])).map_err(err_to_js)?;
    let a = gaussian_matrix(m, n, true, mix(&[s, 3])).map_err(err_to_js)?;
    let ensemble = compose_frame_ensemble(a, omega).map_err(err_to_js)?;
    let noise = if sigma > 0.0 {
        NoiseModel::gaussian(sigma, mix(&[s, 4]))
    } else {
        NoiseModel::none()
    };
    let sampled = measure(&ensemble, &sig.x, &noise).map_err(err_to_js)?;

    let mut program = SynthesisProgramSpec::new(alg, sig.k);
    let e_norm = tdsamp::numerics::norm2(&sampled.e);
    if e_norm > 0.0 {
        program = program.with_noise_budget(e_norm);
    }
    let omega = ensemble.omega.as_ref().expect("frame ensemble keeps omega");
    let out = recover_frame_scheme(&sampled.y, &ensemble.a, omega, &program).map_err(err_to_js)?;

    let w = omega.apply(&sig.x).map_err(err_to_js)?;
    let result = FrameDemoOut {
        rel_error: rel_error(&out.x_hat, &sig.x),
        converged: out.diagnostics.get("proxy_converged") == Some(&1.0),
        iterations: *out.diagnostics.get("proxy_iterations").unwrap_or(&0.0),
        k: sig.k,
        m,
        x: sig.x,
        x_hat: out.x_hat,
        w,
        w_hat: out.w_hat.unwrap_or_default(),
    };
    serde_wasm_bindgen::to_value(&result).map_err(err_to_js)
}

#[derive(Serialize)]
struct ImageDemoOut {
    x: Vec<f64>,
    x_hat: Vec<f64>,
    n_side: usize,
    k: usize,
    m1: usize,
    m2: usize,
    rel_error: f64,
    converged: bool,
}

/// Piecewise-constant image sampled with [AΩ; B] and recovered through the
/// difference-operator pipeline (anisotropic TV fit on the estimate).
#[wasm_bindgen]
pub fn image_demo(
    n_side: usize,
    components: usize,
    m: usize,
    algorithm: &str,
    seed: u32,
) -> Result<JsValue, JsValue> {
    if n_side > 12 {
        return Err(JsValue::from_str("demo image side is capped at 12"));
    }
    let alg = parse_algorithm(algorithm)?;
    let s = seed as u64;
    let d = n_side * n_side;
    let m2 = 2usize;
    if m <= m2 || m > d {
        return Err(JsValue::from_str(&format!(
            "need m in ({}, {}] measurements",
            m2, d
        )));
    }
    let omega = dif_2d(n_side).map_err(err_to_js)?;
    let sig = gen_piecewise_image(n_side, components, mix(&[s, 1])).map_err(err_to_js)?;
    let a = gaussian_matrix(m - m2, omega.num_atoms(), true, mix(&[s, 2])).map_err(err_to_js)?;
    let b = gaussian_matrix(m2, d, true, mix(&[s, 3])).map_err(err_to_js)?;
    let ensemble = compose_stacked_ensemble(a, omega, b).map_err(err_to_js)?;
    let sampled = measure(&ensemble, &sig.x, &NoiseModel::none()).map_err(err_to_js)?;

    let program = SynthesisProgramSpec::new(alg, sig.k);
    let b = ensemble.b.as_ref().expect("stacked ensemble keeps b");
    let out = recover_dif_scheme(
        sampled.y1(),
        sampled.y2(),
        &ensemble.a,
        b,
        n_side,
        &program,
        0.0,
    )
    .map_err(err_to_js)?;

    let result = ImageDemoOut {
        rel_error: rel_error(&out.x_hat, &sig.x),
        converged: out
            .diagnostics
            .iter()
            .filter(|(name, _)| name.ends_with("converged"))
            .all(|(_, &v)| v == 1.0),
        n_side,
        k: sig.k,
        m1: m - m2,
        m2,
        x: sig.x,
        x_hat: out.x_hat,
    };
    serde_wasm_bindgen::to_value(&result).map_err(err_to_js)
}

#[derive(Serialize)]
struct SweepPoint {
    gamma: f64,
    rate_new_scheme: f64,
    rate_baseline: f64,
}

/// Tiny in-browser γ-sweep on a fixed frame geometry: recovery rate of the
/// transform-domain scheme against the analysis-ℓ1 baseline.
#[wasm_bindgen]
pub fn mini_sweep(trials: usize, seed: u32) -> Result<JsValue, JsValue> {
    if trials == 0 || trials > 10 {
        return Err(JsValue::from_str("trials must be in 1..=10"));
    }
    let (n, d, cosparsity) = (24usize, 20usize, 17usize);
    let s = seed as u64;
    let mut points = Vec::new();
    for gi in 0..5u64 {
        let gamma = 0.2 + 0.2 * gi as f64;
        let m = (d as f64 * gamma).ceil() as usize;
        let mut new_hits = 0;
        let mut base_hits = 0;
        for t in 0..trials as u64 {
            let omega =
                random_tight_frame(n, d, mix(&[s, gi, t, 1])).map_err(err_to_js)?;
            let sig =
                gen_cosparse(&omega, cosparsity, mix(&[s, gi, t, 2])).map_err(err_to_js)?;
            let program = SynthesisProgramSpec::new(Algorithm::L1Bpdn, sig.k);

            let a = gaussian_matrix(m, n, true, mix(&[s, gi, t, 3])).map_err(err_to_js)?;
            let w = omega.apply(&sig.x).map_err(err_to_js)?;
            let y = a.matvec(&w).map_err(err_to_js)?;
            let out = recover_frame_scheme(&y, &a, &omega, &program).map_err(err_to_js)?;
            if rel_error(&out.x_hat, &sig.x) <= 1e-3 {
                new_hits += 1;
            }

            let mm = gaussian_matrix(m, d, true, mix(&[s, gi, t, 4])).map_err(err_to_js)?;
            let yb = mm.matvec(&sig.x).map_err(err_to_js)?;
            let base = recover_analysis_baseline(&yb, &mm, &omega, 0.0).map_err(err_to_js)?;
            if rel_error(&base.x_hat, &sig.x) <= 1e-3 {
                base_hits += 1;
            }
        }
        points.push(SweepPoint {
            gamma,
            rate_new_scheme: new_hits as f64 / trials as f64,
            rate_baseline: base_hits as f64 / trials as f64,
        });
    }
    serde_wasm_bindgen::to_value(&points).map_err(err_to_js)
}
