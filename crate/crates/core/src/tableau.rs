//! Explicit Runge-Kutta schemes: Butcher tableaux, Shu-Osher forms and the
//! positivity tests that decide whether a scheme is a convex combination of
//! forward-Euler steps.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tri::LowerTriangular;

/// Entries at or below this value count as "not positive".
pub const POSITIVITY_FLOOR: f64 = 1e-14;

/// Tolerance for row-sum and node consistency checks.
pub const CONSISTENCY_TOL: f64 = 1e-12;

/// Tolerance used by [`verify_order`].
pub const ORDER_TOL: f64 = 1e-10;

/// An explicit `s`-stage scheme.
///
/// The weights are stored as row `s` of `a`, so `a.get(s, j) == b_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    name: Option<String>,
    a: LowerTriangular,
    c: Vec<f64>,
}

impl ButcherTableau {
    /// `a_rows` holds rows `1..s-1` (row `i` has `i` entries) and `b` the `s`
    /// weights. Missing nodes are filled in as row sums.
    pub fn from_parts(a_rows: Vec<Vec<f64>>, b: Vec<f64>, c: Option<Vec<f64>>) -> Result<Self> {
        let s = b.len();
        if s == 0 {
            return Err(Error::ShapeMismatch("a scheme needs at least one stage".into()));
        }
        if a_rows.len() != s - 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} stages need {} rows in `a`, got {}",
                s,
                s - 1,
                a_rows.len()
            )));
        }
        let mut rows = a_rows;
        rows.push(b);
        let a = LowerTriangular::from_rows(rows)?;
        let c = match c {
            Some(c) if c.len() != s => {
                return Err(Error::ShapeMismatch(format!(
                    "`c` has {} entries, expected {}",
                    c.len(),
                    s
                )))
            }
            Some(c) => c,
            None => std::iter::once(0.0)
                .chain((1..s).map(|i| a.row_sum(i)))
                .collect(),
        };
        Ok(Self { name: None, a, c })
    }

    /// Builds from the full coefficient array with the weights as row `s`.
    pub fn from_lower(a: LowerTriangular) -> Self {
        let s = a.stages();
        let c = std::iter::once(0.0)
            .chain((1..s).map(|i| a.row_sum(i)))
            .collect();
        Self { name: None, a, c }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn stages(&self) -> usize {
        self.a.stages()
    }

    /// Full coefficient array; row `s` holds the weights.
    pub fn a(&self) -> &LowerTriangular {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        self.a.row(self.stages())
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Sub-diagonal entry `a[i][i-1]` for `1 <= i <= s`.
    pub fn subdiagonal(&self, i: usize) -> f64 {
        self.a.get(i, i - 1)
    }
}

/// A consistency defect found by [`validate_tableau`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    /// `residual = sum_j a[row][j] - c[row]`.
    Node { row: usize, residual: f64 },
    /// The weights do not sum to one.
    WeightSum { sum: f64 },
    NonFinite { i: usize, k: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Node { row, residual } => {
                write!(f, "row {row}: node c_{row} differs from the row sum by {residual:e}")
            }
            Violation::WeightSum { sum } => write!(f, "b-row sums to {sum}"),
            Violation::NonFinite { i, k } => write!(f, "entry a[{i}][{k}] is not finite"),
        }
    }
}

/// Lists every violated consistency condition; an empty list means the
/// tableau is well formed.
pub fn validate_tableau(t: &ButcherTableau) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, k, v) in t.a.entries() {
        if !v.is_finite() {
            out.push(Violation::NonFinite { i, k });
        }
    }
    if t.c[0].abs() > CONSISTENCY_TOL || !t.c[0].is_finite() {
        out.push(Violation::Node {
            row: 0,
            residual: -t.c[0],
        });
    }
    for i in 1..t.stages() {
        let residual = t.a.row_sum(i) - t.c[i];
        if !(residual.abs() <= CONSISTENCY_TOL) {
            out.push(Violation::Node { row: i, residual });
        }
    }
    let sum = t.a.row_sum(t.stages());
    if !((sum - 1.0).abs() <= CONSISTENCY_TOL) {
        out.push(Violation::WeightSum { sum });
    }
    out
}

pub(crate) fn ensure_valid(t: &ButcherTableau) -> Result<()> {
    let v = validate_tableau(t);
    if v.is_empty() {
        Ok(())
    } else {
        let msg: Vec<String> = v.iter().map(ToString::to_string).collect();
        Err(Error::InvalidTableau(msg.join("; ")))
    }
}

/// `v_i = sum_k (alpha[i][k] v_k + tau beta[i][k] G(v_k))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuOsherForm {
    alpha: LowerTriangular,
    beta: LowerTriangular,
}

impl ShuOsherForm {
    /// Checks matching shapes and unit row sums of `alpha`.
    pub fn new(alpha: LowerTriangular, beta: LowerTriangular) -> Result<Self> {
        if !alpha.same_shape(&beta) {
            return Err(Error::ShapeMismatch(format!(
                "alpha has {} stages, beta has {}",
                alpha.stages(),
                beta.stages()
            )));
        }
        if alpha.stages() == 0 {
            return Err(Error::InvalidForm("a scheme needs at least one stage".into()));
        }
        for i in 1..=alpha.stages() {
            let sum = alpha.row_sum(i);
            if !((sum - 1.0).abs() <= CONSISTENCY_TOL) {
                return Err(Error::InvalidForm(format!("alpha row {i} sums to {sum}")));
            }
        }
        Ok(Self { alpha, beta })
    }

    /// The trivial rewrite `v_i = v_0 + tau sum_k a[i][k] G(v_k)`.
    pub fn from_butcher(t: &ButcherTableau) -> Self {
        let s = t.stages();
        let mut alpha = LowerTriangular::zeros(s);
        for i in 1..=s {
            alpha.set(i, 0, 1.0);
        }
        Self {
            alpha,
            beta: t.a.clone(),
        }
    }

    pub fn stages(&self) -> usize {
        self.alpha.stages()
    }

    pub fn alpha(&self) -> &LowerTriangular {
        &self.alpha
    }

    pub fn beta(&self) -> &LowerTriangular {
        &self.beta
    }

    /// `min alpha/beta` over entries with positive `beta` (infinite when
    /// every `beta` vanishes). Only meaningful for forms passing
    /// [`check_form_ssp`].
    pub fn ssp_ratio(&self) -> f64 {
        self.alpha
            .entries()
            .zip(self.beta.entries())
            .filter(|(_, (_, _, b))| *b > POSITIVITY_FLOOR)
            .map(|((_, _, a), (_, _, b))| a / b)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    /// A Butcher entry `a[i][k] <= 0`.
    NonPositiveEntry,
    NegativeAlpha,
    NegativeBeta,
    /// `alpha[i][k] == 0` while `beta[i][k] != 0`.
    BetaWithoutAlpha,
    RowSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SspWitness {
    pub i: usize,
    pub k: usize,
    pub value: f64,
    pub kind: WitnessKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SspVerdict {
    pub is_ssp: bool,
    pub witness: Option<SspWitness>,
    pub constructed_form: Option<ShuOsherForm>,
}

/// Decides the SSP condition for a tableau with nonzero sub-diagonal.
///
/// With every `a[i][i-1] != 0` the scheme admits a nonnegative Shu-Osher
/// form exactly when every strictly-lower entry (weights included) is
/// positive. On success the form built by [`construct_shu_osher`] is attached.
pub fn ssp_check(t: &ButcherTableau) -> Result<SspVerdict> {
    ensure_valid(t)?;
    for i in 1..=t.stages() {
        if t.subdiagonal(i).abs() <= POSITIVITY_FLOOR {
            return Err(Error::NonApplicable { stage: i });
        }
    }
    if let Some((i, k, value)) = t.a.entries().find(|&(_, _, v)| v <= POSITIVITY_FLOOR) {
        return Ok(SspVerdict {
            is_ssp: false,
            witness: Some(SspWitness {
                i,
                k,
                value,
                kind: WitnessKind::NonPositiveEntry,
            }),
            constructed_form: None,
        });
    }
    let form = construct_shu_osher(t)?;
    Ok(SspVerdict {
        is_ssp: true,
        witness: None,
        constructed_form: Some(form),
    })
}

/// Checks the SSP condition directly on a Shu-Osher form: unit row sums,
/// `alpha >= 0`, `beta >= 0`, and `beta == 0` wherever `alpha == 0`.
/// Returns the first offending entry.
pub fn check_form_ssp(f: &ShuOsherForm) -> Option<SspWitness> {
    for i in 1..=f.stages() {
        let sum = f.alpha.row_sum(i);
        if !((sum - 1.0).abs() <= CONSISTENCY_TOL) {
            return Some(SspWitness {
                i,
                k: 0,
                value: sum,
                kind: WitnessKind::RowSum,
            });
        }
    }
    for ((i, k, a), (_, _, b)) in f.alpha.entries().zip(f.beta.entries()) {
        let kind = if a < -POSITIVITY_FLOOR {
            Some((WitnessKind::NegativeAlpha, a))
        } else if b < -POSITIVITY_FLOOR {
            Some((WitnessKind::NegativeBeta, b))
        } else if a <= POSITIVITY_FLOOR && b > POSITIVITY_FLOOR {
            Some((WitnessKind::BetaWithoutAlpha, b))
        } else {
            None
        };
        if let Some((kind, value)) = kind {
            return Some(SspWitness { i, k, value, kind });
        }
    }
    None
}

/// `beta[i][k] = a[i][k] - sum_{j=k+1}^{i-1} alpha[i][j] a[j][k]`.
///
/// No sign requirement is imposed on the result.
pub fn beta_from_alpha(t: &ButcherTableau, alpha: &LowerTriangular) -> Result<ShuOsherForm> {
    if alpha.stages() != t.stages() {
        return Err(Error::ShapeMismatch(format!(
            "alpha has {} stages, tableau has {}",
            alpha.stages(),
            t.stages()
        )));
    }
    let a = &t.a;
    let mut beta = LowerTriangular::zeros(t.stages());
    for i in 1..=t.stages() {
        for k in 0..i {
            let carried: f64 = (k + 1..i).map(|j| alpha.get(i, j) * a.get(j, k)).sum();
            beta.set(i, k, a.get(i, k) - carried);
        }
    }
    ShuOsherForm::new(alpha.clone(), beta)
}

/// Builds a nonnegative Shu-Osher form for a tableau whose strictly-lower
/// entries are all positive.
///
/// With `delta = min a[i][k] / sum_{j=k+1}^{i-1} a[j][k]` (pairs with an
/// empty sum skipped) every off-zero `alpha[i][j]` is set to
/// `min(delta/2, 1/(2(i-1)))` and `alpha[i][0]` absorbs the rest of the row.
pub fn construct_shu_osher(t: &ButcherTableau) -> Result<ShuOsherForm> {
    if let Some((i, k, value)) = t.a.entries().find(|&(_, _, v)| v <= POSITIVITY_FLOOR) {
        return Err(Error::PositivityViolated { i, k, value });
    }
    let s = t.stages();
    let a = &t.a;
    let mut delta = f64::INFINITY;
    for i in 2..=s {
        for k in 0..i - 1 {
            let denom: f64 = (k + 1..i).map(|j| a.get(j, k)).sum();
            delta = delta.min(a.get(i, k) / denom);
        }
    }
    let mut alpha = LowerTriangular::zeros(s);
    alpha.set(1, 0, 1.0);
    for i in 2..=s {
        let off = (delta / 2.0).min(1.0 / (2.0 * (i - 1) as f64));
        for j in 1..i {
            alpha.set(i, j, off);
        }
        alpha.set(i, 0, 1.0 - (i - 1) as f64 * off);
    }
    beta_from_alpha(t, &alpha)
}

/// Inverts [`beta_from_alpha`] by forward recursion
/// `a[i][k] = beta[i][k] + sum_{j=k+1}^{i-1} alpha[i][j] a[j][k]`.
pub fn shu_osher_to_butcher(f: &ShuOsherForm) -> ButcherTableau {
    let s = f.stages();
    let mut a = LowerTriangular::zeros(s);
    for i in 1..=s {
        for k in 0..i {
            let carried: f64 = (k + 1..i).map(|j| f.alpha.get(i, j) * a.get(j, k)).sum();
            a.set(i, k, f.beta.get(i, k) + carried);
        }
    }
    ButcherTableau::from_lower(a)
}

/// Checks the classical order conditions up to `target` (at most 4).
pub fn verify_order(t: &ButcherTableau, target: usize) -> Result<bool> {
    if target > 4 {
        return Err(Error::Unsupported(target));
    }
    ensure_valid(t)?;
    let s = t.stages();
    let b = t.b();
    // Stage nodes from the row sums; row 0 is empty.
    let c: Vec<f64> = (0..s).map(|i| if i == 0 { 0.0 } else { t.a.row_sum(i) }).collect();
    let a = |i: usize, j: usize| if j < i && i >= 1 { t.a.get(i, j) } else { 0.0 };
    let mat_vec = |v: &[f64]| -> Vec<f64> {
        (0..s).map(|i| (0..i).map(|j| a(i, j) * v[j]).sum()).collect()
    };
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(p, q)| p * q).sum() };
    let pow = |p: i32| -> Vec<f64> { c.iter().map(|x| x.powi(p)).collect() };
    let ones = vec![1.0; s];

    let mut conditions: Vec<(f64, f64)> = Vec::new();
    if target >= 1 {
        conditions.push((dot(b, &ones), 1.0));
    }
    if target >= 2 {
        conditions.push((dot(b, &c), 0.5));
    }
    if target >= 3 {
        conditions.push((dot(b, &pow(2)), 1.0 / 3.0));
        conditions.push((dot(b, &mat_vec(&c)), 1.0 / 6.0));
    }
    if target >= 4 {
        let ac = mat_vec(&c);
        let c_ac: Vec<f64> = c.iter().zip(&ac).map(|(x, y)| x * y).collect();
        conditions.push((dot(b, &pow(3)), 0.25));
        conditions.push((dot(b, &c_ac), 1.0 / 8.0));
        conditions.push((dot(b, &mat_vec(&pow(2))), 1.0 / 12.0));
        conditions.push((dot(b, &mat_vec(&ac)), 1.0 / 24.0));
    }
    Ok(conditions.iter().all(|(got, want)| (got - want).abs() <= ORDER_TOL))
}

/// On-disk tableau document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableauFile {
    pub s: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl TableauFile {
    pub fn into_tableau(self) -> Result<ButcherTableau> {
        if self.b.len() != self.s {
            return Err(Error::Parse(format!(
                "`s` is {} but `b` has {} entries",
                self.s,
                self.b.len()
            )));
        }
        let t = ButcherTableau::from_parts(self.a, self.b, self.c)
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(match self.name {
            Some(n) => t.with_name(n),
            None => t,
        })
    }

    pub fn from_tableau(t: &ButcherTableau) -> Self {
        let s = t.stages();
        Self {
            s,
            a: (1..s).map(|i| t.a.row(i).to_vec()).collect(),
            b: t.b().to_vec(),
            c: Some(t.c.clone()),
            name: t.name.clone(),
        }
    }
}

pub fn parse_tableau_json(text: &str) -> Result<ButcherTableau> {
    let file: TableauFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_tableau()
}

pub fn tableau_to_json(t: &ButcherTableau) -> String {
    serde_json::to_string_pretty(&TableauFile::from_tableau(t)).expect("tableau serializes")
}
