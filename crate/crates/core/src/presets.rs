//! Built-in schemes addressable by name.

use crate::tableau::{shu_osher_to_butcher, ButcherTableau, ShuOsherForm};
use crate::tri::LowerTriangular;

pub const NAMES: &[&str] = &[
    "forward-euler",
    "rk2-ssp",
    "rk3-ssp",
    "rk3-nondissipative",
    "rk4-5stage",
    "classic-rk4",
];

pub fn by_name(name: &str) -> Option<ButcherTableau> {
    match name {
        "forward-euler" => Some(forward_euler()),
        "rk2-ssp" => Some(rk2_ssp()),
        "rk3-ssp" => Some(rk3_ssp()),
        "rk3-nondissipative" => Some(rk3_nondissipative()),
        "rk4-5stage" => Some(rk4_5stage()),
        "classic-rk4" => Some(classic_rk4()),
        _ => None,
    }
}

fn build(name: &str, a: Vec<Vec<f64>>, b: Vec<f64>) -> ButcherTableau {
    ButcherTableau::from_parts(a, b, None)
        .expect("preset shape")
        .with_name(name)
}

pub fn forward_euler() -> ButcherTableau {
    build("forward-euler", vec![], vec![1.0])
}

/// Heun's method.
pub fn rk2_ssp() -> ButcherTableau {
    build("rk2-ssp", vec![vec![1.0]], vec![0.5, 0.5])
}

pub fn rk3_ssp() -> ButcherTableau {
    build(
        "rk3-ssp",
        vec![vec![1.0], vec![0.25, 0.25]],
        vec![1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
    )
}

/// Third order, nonnegative coefficients, but an indefinite energy
/// discriminant.
pub fn rk3_nondissipative() -> ButcherTableau {
    build(
        "rk3-nondissipative",
        vec![vec![1.0], vec![1.0, 1.0]],
        vec![2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    )
}

pub fn classic_rk4() -> ButcherTableau {
    build(
        "classic-rk4",
        vec![vec![0.5], vec![0.0, 0.5], vec![0.0, 0.0, 1.0]],
        vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
    )
}

// Five-stage fourth-order coefficients, published to 15 digits.
const D1: f64 = 0.391752226571890;
const P20: f64 = 0.444370493651235;
const P21: f64 = 0.555629506348765;
const D2: f64 = 0.368410593050371;
const P30: f64 = 0.620101851488403;
const P32: f64 = 0.379898148511597;
const D3: f64 = 0.251891774271694;
const P40: f64 = 0.178079954393132;
const P43: f64 = 0.821920045606868;
const D4: f64 = 0.544974750228521;
const P52: f64 = 0.517231671970585;
const P53: f64 = 0.096059710526147;
const D53: f64 = 0.063692468666290;
const P54: f64 = 0.386708617503269;
const D54: f64 = 0.226007483236906;

/// The five-stage fourth-order scheme in its native Shu-Osher form. The last
/// stage evaluates `G` at both `v_3` and `v_4`.
pub fn rk4_5stage_shu_osher() -> ShuOsherForm {
    let alpha = LowerTriangular::from_rows(vec![
        vec![1.0],
        vec![P20, P21],
        vec![P30, 0.0, P32],
        vec![P40, 0.0, 0.0, P43],
        vec![0.0, 0.0, P52, P53, P54],
    ])
    .expect("preset shape");
    let beta = LowerTriangular::from_rows(vec![
        vec![D1],
        vec![0.0, D2],
        vec![0.0, 0.0, D3],
        vec![0.0, 0.0, 0.0, D4],
        vec![0.0, 0.0, 0.0, D53, D54],
    ])
    .expect("preset shape");
    ShuOsherForm::new(alpha, beta).expect("preset rows sum to one")
}

pub fn rk4_5stage() -> ButcherTableau {
    shu_osher_to_butcher(&rk4_5stage_shu_osher()).with_name("rk4-5stage")
}
