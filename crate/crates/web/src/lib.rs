//! Browser bindings. Each export takes and returns plain strings so the page
//! needs no generated glue beyond `wasm-bindgen`'s. The `*_json` functions
//! hold the logic and are what the native tests call.

use fwt_core::catalog::{self, conspiracy_system};
use fwt_core::contextuality::{chsh, classify, Verdict, DEFAULT_LIMIT};
use fwt_core::format::{self, parse_system, to_json, LoadedSystem};
use fwt_core::ks::{complete_triads, ks_search, orthogonal_triads, peres_rays, ColoringRule, KsOutcome};
use fwt_core::system::{approx, mix};
use fwt_core::{ratio, JointPmf, Rational, SystemSpec};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Realization cap for in-browser analysis; keeps the page responsive.
pub const WEB_LIMIT: usize = DEFAULT_LIMIT / 10;

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn failure(e: impl ToString) -> String {
    to_json(&Failure { error: e.to_string() })
}

/// Verdict report for a system file, or `{"error": ..}`.
pub fn analyze_json(input: &str) -> String {
    let system = match parse_system(input) {
        Ok(s) => s,
        Err(e) => return failure(e),
    };
    match format::analyze(&system, WEB_LIMIT) {
        Ok(report) => to_json(&report),
        Err(e) => failure(e),
    }
}

/// A built-in system as a file, for the page's example picker.
pub fn builtin_json(id: &str) -> String {
    match catalog::get(id) {
        Ok(n) => format::emit_system(&n.system),
        Err(e) => failure(e),
    }
}

#[derive(Serialize)]
struct MixtureView {
    weights: [String; 3],
    chsh: String,
    chsh_approx: f64,
    verdict: String,
    witness: Option<String>,
    components: Option<usize>,
}

fn uniform_like(shape: &SystemSpec) -> SystemSpec {
    let mut s = shape.map(|_, pmf| {
        let n = (pmf.a_alphabet.len() * pmf.b_alphabet.len()) as i64;
        JointPmf::new(pmf.a_alphabet.clone(), pmf.b_alphabet.clone(), vec![ratio(1, n); n as usize])
    });
    s.set_name("noise");
    s
}

/// Mixes the PR box, white noise and the deterministic EPRB system with
/// integer weights (normalized), then classifies the result.
pub fn mixture_json(pr: u32, noise: u32, eprb: u32) -> String {
    let total = i64::from(pr) + i64::from(noise) + i64::from(eprb);
    if total == 0 {
        return failure("at least one weight must be positive");
    }
    let pr_box = conspiracy_system();
    let white = uniform_like(&pr_box);
    let d = match catalog::get("d_eprb").map(|n| n.system) {
        Ok(LoadedSystem::Probabilistic(s)) => s,
        _ => return failure("d_eprb unavailable"),
    };
    let w: [Rational; 3] = [pr, noise, eprb].map(|k| ratio(k.into(), total));
    let parts = [(&pr_box, w[0].clone()), (&white, w[1].clone()), (&d, w[2].clone())];
    let system = match mix(&parts) {
        Ok(s) => s,
        Err(e) => return failure(e),
    };
    let value = match chsh(&system) {
        Ok(v) => v,
        Err(e) => return failure(e),
    };
    let verdict = match classify(&system, WEB_LIMIT) {
        Ok(v) => v,
        Err(e) => return failure(e),
    };
    to_json(&MixtureView {
        weights: w.map(|r| r.to_string()),
        chsh_approx: approx(&value),
        chsh: value.to_string(),
        verdict: verdict.kind().to_string(),
        witness: match &verdict {
            Verdict::Contextual(w) => Some(w.to_string()),
            _ => None,
        },
        components: match &verdict {
            Verdict::Noncontextual(d) => Some(d.components.len()),
            _ => None,
        },
    })
}

#[derive(Serialize)]
struct SearchView {
    triads: usize,
    rays: usize,
    colorable: bool,
    nodes: u64,
    backtracks: u64,
    propagations: u64,
    coloring: Vec<(String, u8)>,
}

/// Kochen-Specker search on the Peres rays with either all 40 triads or
/// only the 16 complete ones.
pub fn peres_json(all_triads: bool) -> String {
    let rays = peres_rays();
    let triads = if all_triads { orthogonal_triads(&rays) } else { complete_triads(&rays) };
    let outcome = ks_search(&rays, &triads, ColoringRule::ExactlyOneZero);
    let stats = outcome.stats();
    let coloring = match &outcome {
        KsOutcome::Colorable(c, _) => c.values.iter().map(|(r, v)| (r.to_string(), *v)).collect(),
        KsOutcome::Infeasible(_) => Vec::new(),
    };
    to_json(&SearchView {
        triads: triads.len(),
        rays: rays.len(),
        colorable: outcome.is_colorable(),
        nodes: stats.nodes,
        backtracks: stats.backtracks,
        propagations: stats.propagations,
        coloring,
    })
}

#[wasm_bindgen]
pub fn analyze_system(input: &str) -> String {
    analyze_json(input)
}

#[wasm_bindgen]
pub fn builtin_system(id: &str) -> String {
    builtin_json(id)
}

#[wasm_bindgen]
pub fn explore_mixture(pr: u32, noise: u32, eprb: u32) -> String {
    mixture_json(pr, noise, eprb)
}

#[wasm_bindgen]
pub fn peres_search(all_triads: bool) -> String {
    peres_json(all_triads)
}
