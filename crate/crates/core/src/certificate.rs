//! Energy and maximum-bound certificates.
//!
//! A scheme is first rewritten so that stage `i` evaluates the right-hand
//! side only at `v_{i-1}`:
//!
//! ```text
//! v_i = sum_{k<i} p[i][k] v_k + d_i tau G(v_{i-1})
//! ```
//!
//! From `p` and `d` we build the upper-triangular matrix `Phi` with
//! `Phi[i][j] = (sum_{k<i} p[j][k]) / d_j` for `1 <= i <= j <= s`, and its
//! symmetric part `Delta_E`. A positive smallest eigenvalue `lambda` of
//! `Delta_E` certifies that the discrete Allen-Cahn energy does not increase
//! for `tau <= min(lambda / (1/eps + 2 eps/h^2), tau_ssp)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{smallest_eigenvalue, Matrix};
use crate::spatial::INVERSE_INEQUALITY_CONSTANT;
use crate::tableau::{
    check_form_ssp, ensure_valid, ssp_check, ButcherTableau, ShuOsherForm, SspWitness,
    CONSISTENCY_TOL, POSITIVITY_FLOOR,
};
use crate::tri::LowerTriangular;

/// `lambda` above this value certifies energy dissipation.
pub const DISSIPATION_THRESHOLD: f64 = 1e-12;

/// One derivative evaluation per stage, at the previous stage value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalForm {
    p: LowerTriangular,
    d: Vec<f64>,
}

impl CanonicalForm {
    pub fn new(p: LowerTriangular, d: Vec<f64>) -> Result<Self> {
        if d.len() != p.stages() {
            return Err(Error::ShapeMismatch(format!(
                "{} multipliers for {} stages",
                d.len(),
                p.stages()
            )));
        }
        for i in 1..=p.stages() {
            let sum = p.row_sum(i);
            if !((sum - 1.0).abs() <= CONSISTENCY_TOL) {
                return Err(Error::InvalidForm(format!("p row {i} sums to {sum}")));
            }
        }
        if let Some((idx, &value)) = d.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::NonPositiveD {
                stage: idx + 1,
                value,
            });
        }
        Ok(Self { p, d })
    }

    pub fn stages(&self) -> usize {
        self.d.len()
    }

    pub fn p(&self) -> &LowerTriangular {
        &self.p
    }

    /// Multipliers `d_1..d_s` stored 0-based.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// The same recursion viewed as a Shu-Osher form.
    pub fn to_shu_osher(&self) -> ShuOsherForm {
        let s = self.stages();
        let mut beta = LowerTriangular::zeros(s);
        for i in 1..=s {
            beta.set(i, i - 1, self.d[i - 1]);
        }
        ShuOsherForm::new(self.p.clone(), beta).expect("canonical rows sum to one")
    }
}

/// Rewrites a tableau in canonical form.
///
/// For each stage the weights solve `a[i][k] = sum_{l=k+1}^{i-1} a[l][k] p[i][l]`
/// by back-substitution from `k = i-2` down to `0`; `p[i][0]` closes the row
/// sum and `d_i = a[i][i-1]`.
pub fn to_canonical(t: &ButcherTableau) -> Result<CanonicalForm> {
    ensure_valid(t)?;
    let s = t.stages();
    for i in 1..=s {
        if t.subdiagonal(i).abs() <= POSITIVITY_FLOOR {
            return Err(Error::SubdiagonalZero { stage: i });
        }
    }
    let a = t.a();
    let mut p = LowerTriangular::zeros(s);
    let mut d = Vec::with_capacity(s);
    for i in 1..=s {
        let row = p.row_mut(i);
        for k in (0..i.saturating_sub(1)).rev() {
            let known: f64 = (k + 2..i).map(|l| a.get(l, k) * row[l]).sum();
            row[k + 1] = (a.get(i, k) - known) / a.get(k + 1, k);
        }
        row[0] = 1.0 - row[1..].iter().sum::<f64>();
        let di = t.subdiagonal(i);
        if di <= 0.0 {
            return Err(Error::NonPositiveD { stage: i, value: di });
        }
        d.push(di);
    }
    CanonicalForm::new(p, d)
}

/// Eliminates every `G(v_k)` with `k < i-1` from stage `i` using
/// `tau G(v_k) = (v_{k+1} - sum_j p[k+1][j] v_j) / d_{k+1}`.
///
/// Row sums are preserved; the resulting weights may be negative.
pub fn canonicalize_general(f: &ShuOsherForm) -> Result<CanonicalForm> {
    let s = f.stages();
    let mut p = LowerTriangular::zeros(s);
    let mut d = Vec::with_capacity(s);
    for i in 1..=s {
        let mut row = f.alpha().row(i).to_vec();
        for k in 0..i.saturating_sub(1) {
            let g = f.beta().get(i, k);
            if g == 0.0 {
                continue;
            }
            let dk = d[k];
            if f64::abs(dk) <= POSITIVITY_FLOOR {
                return Err(Error::NotEliminable { stage: i, term: k });
            }
            let scale = g / dk;
            row[k + 1] += scale;
            for (j, w) in p.row(k + 1).iter().enumerate() {
                row[j] -= scale * w;
            }
        }
        let di = f.beta().get(i, i - 1);
        if !(di > POSITIVITY_FLOOR) {
            return Err(Error::NonPositiveD { stage: i, value: di });
        }
        p.row_mut(i).copy_from_slice(&row);
        d.push(di);
    }
    CanonicalForm::new(p, d)
}

/// `Phi[i][j] = (sum_{k<i} p[j][k]) / d_j` for `i <= j` (1-based stages);
/// entry `(i-1, j-1)` of the returned matrix.
pub fn phi_matrix(cf: &CanonicalForm) -> Matrix {
    let s = cf.stages();
    let mut phi = Matrix::zeros(s);
    for j in 1..=s {
        let row = cf.p().row(j);
        let dj = cf.d()[j - 1];
        let mut partial = 0.0;
        for i in 1..=j {
            partial += row[i - 1];
            phi[(i - 1, j - 1)] = partial / dj;
        }
    }
    phi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyVerdict {
    Dissipative,
    /// `|lambda|` within the threshold.
    Indeterminate,
    NotCertified,
}

impl EnergyVerdict {
    pub fn from_lambda(lambda: f64) -> Self {
        if lambda > DISSIPATION_THRESHOLD {
            EnergyVerdict::Dissipative
        } else if lambda >= -DISSIPATION_THRESHOLD {
            EnergyVerdict::Indeterminate
        } else {
            EnergyVerdict::NotCertified
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityCertificate {
    pub scheme: Option<String>,
    pub stages: usize,
    pub canonical: CanonicalForm,
    pub phi: Matrix,
    pub delta_e: Matrix,
    pub lambda_min: f64,
    pub energy: EnergyVerdict,
    pub energy_dissipative: bool,
    pub mbp: bool,
    /// Set when `mbp` is false.
    pub ssp_witness: Option<SspWitness>,
    /// `min alpha/beta` of `ssp_form`; `None` when the scheme is not SSP.
    pub ssp_ratio: Option<f64>,
    /// Nonnegative Shu-Osher representation attaining `ssp_ratio`.
    #[serde(skip)]
    pub ssp_form: Option<ShuOsherForm>,
}

impl StabilityCertificate {
    /// The energy bound is only claimed for schemes that also keep every
    /// stage inside `[-1, 1]`.
    pub fn energy_guaranteed(&self) -> bool {
        self.mbp && self.energy_dissipative
    }
}

/// Builds the full certificate for a tableau.
///
/// A failed SSP test does not stop the energy analysis.
pub fn certify(t: &ButcherTableau) -> Result<StabilityCertificate> {
    let canonical = to_canonical(t)?;
    let verdict = ssp_check(t)?;
    let phi = phi_matrix(&canonical);
    let delta_e = phi.symmetric_part();
    let lambda_min = smallest_eigenvalue(&delta_e)?;
    let energy = EnergyVerdict::from_lambda(lambda_min);

    // Both the constructed form and (when nonnegative) the canonical form are
    // valid SSP representations; the larger ratio gives the larger bound.
    let ssp_form = verdict.constructed_form.map(|constructed| {
        let canonical_form = canonical.to_shu_osher();
        if check_form_ssp(&canonical_form).is_none()
            && canonical_form.ssp_ratio() > constructed.ssp_ratio()
        {
            canonical_form
        } else {
            constructed
        }
    });

    Ok(StabilityCertificate {
        scheme: t.name().map(str::to_owned),
        stages: t.stages(),
        canonical,
        phi,
        delta_e,
        lambda_min,
        energy,
        energy_dissipative: energy == EnergyVerdict::Dissipative,
        mbp: verdict.is_ssp,
        ssp_witness: verdict.witness,
        ssp_ratio: ssp_form.as_ref().map(ShuOsherForm::ssp_ratio),
        ssp_form,
    })
}

/// Selects the forward-Euler step bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundMode {
    /// `min(h^2/(4 eps), eps/4)`, the bound that follows from the
    /// max-norm contraction of `I + h^2 D / alpha` for `alpha >= 2`.
    #[default]
    Safe,
    /// `min(4 h^2/eps, eps/4)`.
    Relaxed,
}

impl std::str::FromStr for BoundMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "safe" => Ok(BoundMode::Safe),
            "relaxed" => Ok(BoundMode::Relaxed),
            other => Err(Error::Config(format!("unknown bound mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepBounds {
    pub epsilon: f64,
    pub h: f64,
    pub mode: BoundMode,
    pub tau0_safe: f64,
    pub tau0_relaxed: f64,
    /// Forward-Euler bound selected by `mode`.
    pub tau0: f64,
    /// `ssp_ratio * tau0`.
    pub tau_ssp: Option<f64>,
    /// `lambda / (1/eps + 2 eps/h^2)`, before capping by `tau_ssp`.
    pub tau_lambda: Option<f64>,
    /// `min(tau_lambda, tau_ssp)`.
    pub tau_energy: Option<f64>,
    #[serde(skip)]
    lambda: f64,
}

impl StepBounds {
    pub fn tau_ssp(&self) -> Result<f64> {
        self.tau_ssp.ok_or(Error::NotMbp)
    }

    pub fn tau_energy(&self) -> Result<f64> {
        if !(self.lambda > DISSIPATION_THRESHOLD) {
            return Err(Error::NonPositiveLambda {
                lambda: self.lambda,
            });
        }
        self.tau_energy.ok_or(Error::NotMbp)
    }
}

pub fn forward_euler_bound(epsilon: f64, h: f64, mode: BoundMode) -> f64 {
    match mode {
        BoundMode::Safe => (h * h / (4.0 * epsilon)).min(epsilon / 4.0),
        BoundMode::Relaxed => (4.0 * h * h / epsilon).min(epsilon / 4.0),
    }
}

/// Step bounds with the safe forward-Euler bound.
pub fn step_bounds(cert: &StabilityCertificate, epsilon: f64, h: f64) -> Result<StepBounds> {
    step_bounds_with_mode(cert, epsilon, h, BoundMode::Safe)
}

pub fn step_bounds_with_mode(
    cert: &StabilityCertificate,
    epsilon: f64,
    h: f64,
    mode: BoundMode,
) -> Result<StepBounds> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("grid spacing must be positive, got {h}")));
    }
    let tau0_safe = forward_euler_bound(epsilon, h, BoundMode::Safe);
    let tau0_relaxed = forward_euler_bound(epsilon, h, BoundMode::Relaxed);
    let tau0 = forward_euler_bound(epsilon, h, mode);
    let tau_ssp = cert.ssp_ratio.map(|r| r * tau0);
    let tau_lambda = (cert.lambda_min > DISSIPATION_THRESHOLD).then(|| {
        cert.lambda_min / (1.0 / epsilon + 0.5 * INVERSE_INEQUALITY_CONSTANT * epsilon / (h * h))
    });
    let tau_energy = match (tau_lambda, tau_ssp) {
        (Some(l), Some(s)) => Some(l.min(s)),
        _ => None,
    };
    Ok(StepBounds {
        epsilon,
        h,
        mode,
        tau0_safe,
        tau0_relaxed,
        tau0,
        tau_ssp,
        tau_lambda,
        tau_energy,
        lambda: cert.lambda_min,
    })
}
