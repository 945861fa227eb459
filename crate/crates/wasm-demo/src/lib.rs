//! Browser bindings. Every export returns CSV text so the page needs no
//! serializer beyond `split`.

use orthoport::em::FrequencyGrid;
use orthoport::geometry::{build_edge_basis, build_mapping_matrices, default_tolerance, find_generator_cell};
use orthoport::io::{character_table, fmt_num, join_labels, Table};
use orthoport::optimizer::{scan, Candidate, ScanContext, ScanSpec, DEFAULT_BUDGET};
use orthoport::point_group::build_group;
use orthoport::symmetry::{adapt_vector, realizable_species};
use orthoport::{fixtures, CVector, C64};
use wasm_bindgen::prelude::*;

/// Largest layout size the page may request; keeps a scan under a second.
pub const MAX_DEMO_PORTS: usize = 2;

fn js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn csv(t: &Table) -> Result<String, JsError> {
    t.to_csv().map_err(js)
}

/// Character table of `group` with a trailing `states,ports` summary line.
#[wasm_bindgen]
pub fn group_table(group: &str) -> Result<String, JsError> {
    let g = build_group(group).map_err(js)?;
    let mut text = csv(&character_table(&g))?;
    text.push_str(&format!("# states {} ports {}\n", g.max_orthogonal_states(), g.min_ports()));
    Ok(text)
}

/// Symmetry-adapted unit source on star port `label`, one row per species
/// with the five port-ordered coefficients.
#[wasm_bindgen]
pub fn adapt_star(label: usize) -> Result<String, JsError> {
    let basis = build_edge_basis(&fixtures::star_mesh()).map_err(js)?;
    let group = build_group("C2v").map_err(js)?;
    let maps = build_mapping_matrices(&basis, &group, default_tolerance(&basis)).map_err(js)?;
    let xi = basis.port_index(label).map_err(js)?;
    let cell = find_generator_cell(&maps, &[xi]);
    let mut v = CVector::zeros(basis.len());
    v[xi] = C64::new(1.0, 0.0);
    let reachable = realizable_species(xi, &group, &maps);
    let order: Vec<usize> =
        basis.port_labels().iter().map(|&l| basis.port_index(l)).collect::<Result<_, _>>().map_err(js)?;
    let mut t = Table::new(["species", "realizable", "v1", "v2", "v3", "v4", "v5"]);
    for s in group.species() {
        let a = adapt_vector(&v, &group, &maps, &cell, s).map_err(js)?;
        let mut row = vec![group.species_label(s), reachable.contains(&s).to_string()];
        row.extend(order.iter().map(|&i| fmt_num(a.vector[i].re)));
        t.push(row);
    }
    csv(&t)
}

/// Single-frequency scan of the rim with `n_xi` generator ports, ranked.
#[wasm_bindgen]
pub fn scan_rim(ka: f64, n_xi: usize) -> Result<String, JsError> {
    if !(1..=MAX_DEMO_PORTS).contains(&n_xi) {
        return Err(JsError::new(&format!("the demo scans 1 to {MAX_DEMO_PORTS} ports")));
    }
    let basis = build_edge_basis(&fixtures::rim_mesh()).map_err(js)?;
    let group = build_group("C2v").map_err(js)?;
    let maps = build_mapping_matrices(&basis, &group, default_tolerance(&basis)).map_err(js)?;
    let candidates = basis
        .port_labels()
        .into_iter()
        .map(|label| basis.port_index(label).map(|index| Candidate { label, index }))
        .collect::<Result<Vec<_>, _>>()
        .map_err(js)?;
    let spec = ScanSpec {
        candidates,
        n_xi,
        grid: FrequencyGrid::new(vec![ka], basis.radius()).map_err(js)?,
        species: None,
        z0_line: 50.0,
        loss: None,
        budget: DEFAULT_BUDGET,
    };
    let result = scan(ScanContext { basis: &basis, group: &group, maps: &maps }, &spec).map_err(js)?;
    let mut t = Table::new(["positions", "n_ports", "reduced", "t_rms"]);
    for e in &result.ranked {
        t.push(vec![join_labels(&e.labels), e.n_ports.to_string(), e.reduced.to_string(), fmt_num(e.t_rms)]);
    }
    csv(&t)
}
