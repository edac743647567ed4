//! One-step maps of an explicit scheme in each of its representations,
//! generic over the right-hand side `G`.
//!
//! `g(v, out)` must write `G(v)` into `out`.

use crate::certificate::CanonicalForm;
use crate::tableau::{ButcherTableau, ShuOsherForm};

/// `v_i = u + tau sum_{j<i} a[i][j] G(v_j)`; returns `v_s`.
pub fn step_butcher<G>(u: &[f64], t: &ButcherTableau, tau: f64, mut g: G) -> Vec<f64>
where
    G: FnMut(&[f64], &mut [f64]),
{
    let s = t.stages();
    let n = u.len();
    let mut slopes: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut v = u.to_vec();
    for i in 1..=s {
        let mut k = vec![0.0; n];
        g(&v, &mut k);
        slopes.push(k);
        v.copy_from_slice(u);
        for (j, kj) in slopes.iter().enumerate() {
            let c = tau * t.a().get(i, j);
            if c != 0.0 {
                for (x, y) in v.iter_mut().zip(kj) {
                    *x += c * y;
                }
            }
        }
    }
    v
}

/// `v_i = sum_{k<i} (alpha[i][k] v_k + tau beta[i][k] G(v_k))`; returns
/// `v_s`. `on_stage(i, v_i)` sees every stage `1..=s` (the last is the
/// result).
pub fn step_shu_osher<G, M>(
    u: &[f64],
    f: &ShuOsherForm,
    tau: f64,
    mut g: G,
    mut on_stage: M,
) -> Vec<f64>
where
    G: FnMut(&[f64], &mut [f64]),
    M: FnMut(usize, &[f64]),
{
    let s = f.stages();
    let n = u.len();
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s + 1);
    let mut slopes: Vec<Option<Vec<f64>>> = Vec::with_capacity(s);
    stages.push(u.to_vec());
    for i in 1..=s {
        // G(v_{i-1}) is needed if any later stage weights it.
        let k = i - 1;
        let needed = (i..=s).any(|r| f.beta().get(r, k) != 0.0);
        slopes.push(needed.then(|| {
            let mut out = vec![0.0; n];
            g(&stages[k], &mut out);
            out
        }));
        let mut v = vec![0.0; n];
        for k in 0..i {
            let a = f.alpha().get(i, k);
            if a != 0.0 {
                for (x, y) in v.iter_mut().zip(&stages[k]) {
                    *x += a * y;
                }
            }
            let b = tau * f.beta().get(i, k);
            if b != 0.0 {
                let gk = slopes[k].as_ref().expect("slope computed when weighted");
                for (x, y) in v.iter_mut().zip(gk) {
                    *x += b * y;
                }
            }
        }
        on_stage(i, &v);
        stages.push(v);
    }
    stages.pop().expect("at least one stage")
}

/// `v_i = sum_{k<i} p[i][k] v_k + d_i tau G(v_{i-1})`; returns `v_s`.
pub fn step_canonical<G>(u: &[f64], cf: &CanonicalForm, tau: f64, mut g: G) -> Vec<f64>
where
    G: FnMut(&[f64], &mut [f64]),
{
    let n = u.len();
    let mut stages: Vec<Vec<f64>> = vec![u.to_vec()];
    let mut slope = vec![0.0; n];
    for i in 1..=cf.stages() {
        g(&stages[i - 1], &mut slope);
        let mut v = vec![0.0; n];
        for (k, &p) in cf.p().row(i).iter().enumerate() {
            if p != 0.0 {
                for (x, y) in v.iter_mut().zip(&stages[k]) {
                    *x += p * y;
                }
            }
        }
        let c = tau * cf.d()[i - 1];
        for (x, y) in v.iter_mut().zip(&slope) {
            *x += c * y;
        }
        stages.push(v);
    }
    stages.pop().expect("at least one stage")
}
