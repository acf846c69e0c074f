//! Browser demo: plots shape functions and random finite element functions
//! realized by networks, and reports network sizes. The plain functions
//! are usable natively; the `wasm_bindgen` wrappers expose them to the page.

use std::sync::Arc;

use derhamnet::generate::Domain;
use derhamnet::mesh::Mesh;
use derhamnet::network::Network;
use derhamnet::shapes::{self, dof_arguments, SpaceKind};
use derhamnet::spaces::basis_net;
use wasm_bindgen::prelude::*;

fn mesh_for(domain: &str, n: usize) -> Result<Mesh, String> {
    let domain: Domain = domain.parse()?;
    if domain.dim() != 2 {
        return Err(format!("the demo draws 2D domains only; {domain} is 3D"));
    }
    if !(1..=16).contains(&n) {
        return Err("n must be between 1 and 16".into());
    }
    Ok(domain.generate(n))
}

/// Edge segments `x0, y0, x1, y1, ...` of a 2D mesh, followed by nothing
/// else; the bounding box comes from [`bounds`].
pub fn mesh_segments(domain: &str, n: usize) -> Result<Vec<f64>, String> {
    let mesh = mesh_for(domain, n)?;
    Ok(mesh
        .faces()
        .iter()
        .flat_map(|e| {
            let (a, b) = (mesh.vertex(e[0]), mesh.vertex(e[1]));
            [a[0], a[1], b[0], b[1]]
        })
        .collect())
}

/// `[xmin, ymin, xmax, ymax]` of a 2D mesh.
pub fn bounds(domain: &str, n: usize) -> Result<Vec<f64>, String> {
    let mesh = mesh_for(domain, n)?;
    let mut b = vec![f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for v in mesh.vertices() {
        b[0] = b[0].min(v[0]);
        b[1] = b[1].min(v[1]);
        b[2] = b[2].max(v[0]);
        b[3] = b[3].max(v[1]);
    }
    Ok(b)
}

pub fn dof_count(domain: &str, n: usize, space: &str) -> Result<usize, String> {
    let mesh = mesh_for(domain, n)?;
    let kind: SpaceKind = space.parse()?;
    Ok(shapes::dofs(&mesh, kind).len())
}

/// Samples `net` on a `resolution × resolution` grid over the bounding box
/// (cell centers, row-major from the bottom row); `value_dim` numbers per
/// grid cell.
fn sample_grid(mesh: &Mesh, net: &Network, resolution: usize) -> Vec<f64> {
    let b = mesh.vertices().iter().fold([f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY], |b, v| {
        [b[0].min(v[0]), b[1].min(v[1]), b[2].max(v[0]), b[3].max(v[1])]
    });
    let mut out = Vec::with_capacity(resolution * resolution * net.output_dim());
    for j in 0..resolution {
        for i in 0..resolution {
            let x = b[0] + (b[2] - b[0]) * (i as f64 + 0.5) / resolution as f64;
            let y = b[1] + (b[3] - b[1]) * (j as f64 + 0.5) / resolution as f64;
            out.extend(net.eval(&[x, y]));
        }
    }
    out
}

/// Grid samples of the shape function of dof `dof`.
pub fn shape_grid(domain: &str, n: usize, space: &str, dof: usize, resolution: usize) -> Result<Vec<f64>, String> {
    let mesh = mesh_for(domain, n)?;
    let kind: SpaceKind = space.parse()?;
    let args = if kind == SpaceKind::S0 {
        (0..mesh.num_cells()).collect()
    } else {
        dof_arguments(&mesh, kind)
    };
    if dof >= args.len() {
        return Err(format!("dof {dof} out of range (the space has {} dofs)", args.len()));
    }
    let net = shapes::shape_net(&mesh, kind, if kind == SpaceKind::S0 { dof } else { args[dof] })
        .map_err(|e| e.to_string())?
        .net;
    Ok(sample_grid(&mesh, &net, resolution))
}

/// Grid samples of a function with pseudo-random coefficients in `[-1, 1]`.
pub fn random_function_grid(domain: &str, n: usize, space: &str, seed: u32, resolution: usize) -> Result<Vec<f64>, String> {
    let mesh = mesh_for(domain, n)?;
    let kind: SpaceKind = space.parse()?;
    let basis = Arc::new(basis_net(&mesh, kind).map_err(|e| e.to_string())?);
    // Small xorshift so the page needs no extra dependency for its randomness.
    let mut state = u64::from(seed).wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let coeffs: Vec<f64> = (0..basis.num_dofs())
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect();
    let f = basis.specialize(&coeffs).map_err(|e| e.to_string())?;
    Ok(sample_grid(&mesh, &f.net, resolution))
}

/// Depth, size and per-layer sizes of the basis net, as JSON.
pub fn basis_metrics(domain: &str, n: usize, space: &str) -> Result<String, String> {
    let mesh = mesh_for(domain, n)?;
    let kind: SpaceKind = space.parse()?;
    let basis = basis_net(&mesh, kind).map_err(|e| e.to_string())?;
    let m = basis.net.metrics();
    Ok(serde_json::json!({
        "space": kind.name(),
        "dofs": basis.num_dofs(),
        "cells": mesh.num_cells(),
        "depth": m.depth,
        "size": m.size,
        "per_layer": m.per_layer,
    })
    .to_string())
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = meshSegments)]
pub fn mesh_segments_js(domain: &str, n: usize) -> Result<Vec<f64>, JsError> {
    js(mesh_segments(domain, n))
}

#[wasm_bindgen(js_name = bounds)]
pub fn bounds_js(domain: &str, n: usize) -> Result<Vec<f64>, JsError> {
    js(bounds(domain, n))
}

#[wasm_bindgen(js_name = dofCount)]
pub fn dof_count_js(domain: &str, n: usize, space: &str) -> Result<usize, JsError> {
    js(dof_count(domain, n, space))
}

#[wasm_bindgen(js_name = shapeGrid)]
pub fn shape_grid_js(domain: &str, n: usize, space: &str, dof: usize, resolution: usize) -> Result<Vec<f64>, JsError> {
    js(shape_grid(domain, n, space, dof, resolution))
}

#[wasm_bindgen(js_name = randomFunctionGrid)]
pub fn random_function_grid_js(domain: &str, n: usize, space: &str, seed: u32, resolution: usize) -> Result<Vec<f64>, JsError> {
    js(random_function_grid(domain, n, space, seed, resolution))
}

#[wasm_bindgen(js_name = basisMetrics)]
pub fn basis_metrics_js(domain: &str, n: usize, space: &str) -> Result<String, JsError> {
    js(basis_metrics(domain, n, space))
}
