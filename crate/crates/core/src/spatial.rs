//! Periodic finite differences on `[0, 2 pi]`.
//!
//! The Laplacian is `D = -D1^T D1` with `D1` the forward difference, i.e.
//! the 3-point stencil `(u_{j-1} - 2 u_j + u_{j+1}) / h^2` with wraparound.
//! Everything here is matrix-free.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{RngExt, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};

/// Constant `C` in `-u^T D u <= (C / h^2) u^T u`.
pub(crate) const INVERSE_INEQUALITY_CONSTANT: f64 = 4.0;

pub const MIN_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_POINTS} points, got {n}"
            )));
        }
        Ok(Self {
            n,
            h: 2.0 * PI / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Grid points `x_j = j h`.
    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| j as f64 * self.h)
    }

    /// `lambda_k = -(2 - 2 cos(k h)) / h^2`, the eigenvalue of `D` for mode `k`.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        -(2.0 - 2.0 * (k as f64 * self.h).cos()) / (self.h * self.h)
    }
}

/// Grid samples of the phase field.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    values: Vec<f64>,
    grid: Grid,
}

impl State {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::ShapeMismatch(format!(
                "state has {} values for a {}-point grid",
                values.len(),
                grid.n()
            )));
        }
        Ok(Self { values, grid })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            values: vec![value; grid.n()],
            grid,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: grid.points().map(f).collect(),
            grid,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            values: self.values.iter().map(|&x| f(x)).collect(),
            grid: self.grid,
        }
    }
}

pub(crate) fn laplacian_into(u: &[f64], h: f64, out: &mut [f64]) {
    let n = u.len();
    let inv_h2 = 1.0 / (h * h);
    for j in 0..n {
        let left = u[(j + n - 1) % n];
        let right = u[(j + 1) % n];
        out[j] = (left - 2.0 * u[j] + right) * inv_h2;
    }
}

/// `G(u) = eps D u + (u - u^3) / eps`, written into `out`.
pub(crate) fn rhs_into(u: &[f64], h: f64, epsilon: f64, out: &mut [f64]) {
    laplacian_into(u, h, out);
    let inv_eps = 1.0 / epsilon;
    for (o, &x) in out.iter_mut().zip(u) {
        *o = epsilon * *o + inv_eps * (x - x * x * x);
    }
}

pub fn apply_laplacian(u: &State) -> State {
    let mut out = vec![0.0; u.values.len()];
    laplacian_into(&u.values, u.grid.h, &mut out);
    State {
        values: out,
        grid: u.grid,
    }
}

/// `(D1 u)_j = (u_j - u_{j-1}) / h`.
pub fn forward_difference(u: &State) -> State {
    let n = u.values.len();
    let h = u.grid.h;
    let values = (0..n)
        .map(|j| (u.values[j] - u.values[(j + n - 1) % n]) / h)
        .collect();
    State {
        values,
        grid: u.grid,
    }
}

/// `f(u) = u - u^3` elementwise.
pub fn nonlinearity(u: &State) -> State {
    u.map(|x| x - x * x * x)
}

pub fn rhs(u: &State, epsilon: f64) -> State {
    let mut out = vec![0.0; u.values.len()];
    rhs_into(&u.values, u.grid.h, epsilon, &mut out);
    State {
        values: out,
        grid: u.grid,
    }
}

/// Double-well potential `F(x) = (1 - x^2)^2 / 4`.
pub fn double_well(x: f64) -> f64 {
    let w = 1.0 - x * x;
    0.25 * w * w
}

/// `E(u) = (eps/2) |D1 u|^2 + (1/eps) sum_j F(u_j)`, which equals
/// `-(eps/2) u^T D u + (1/eps) sum_j F(u_j)`.
pub fn discrete_energy(u: &State, epsilon: f64) -> f64 {
    energy_of(&u.values, u.grid.h, epsilon)
}

pub(crate) fn energy_of(u: &[f64], h: f64, epsilon: f64) -> f64 {
    let n = u.len();
    let mut gradient = 0.0;
    let mut potential = 0.0;
    for j in 0..n {
        let diff = (u[j] - u[(j + n - 1) % n]) / h;
        gradient += diff * diff;
        potential += double_well(u[j]);
    }
    0.5 * epsilon * gradient + potential / epsilon
}

pub fn max_norm(u: &State) -> f64 {
    max_abs(&u.values)
}

pub(crate) fn max_abs(u: &[f64]) -> f64 {
    u.iter().fold(0.0, |m: f64, x| m.max(x.abs()))
}

/// `sum_j u_j v_j`.
pub fn inner(u: &State, v: &State) -> f64 {
    u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum()
}

/// Initial-condition specifier: `random:<seed>`, `cosine:<k>` or `file:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Uniform samples in `[-1, 1]` from xoshiro256++ seeded with `seed`.
    Random(u64),
    Cosine(u32),
    File(PathBuf),
}

impl InitialCondition {
    pub fn build(&self, grid: Grid) -> Result<State> {
        match self {
            InitialCondition::Random(seed) => {
                let mut rng = Xoshiro256PlusPlus::seed_from_u64(*seed);
                let values = (0..grid.n()).map(|_| rng.random_range(-1.0..=1.0)).collect();
                State::new(grid, values)
            }
            InitialCondition::Cosine(k) => {
                let k = f64::from(*k);
                Ok(State::from_fn(grid, |x| (k * x).cos()))
            }
            InitialCondition::File(path) => {
                let values = read_state_csv(path)?;
                State::new(grid, values).map_err(|e| Error::Config(e.to_string()))
            }
        }
    }
}

impl FromStr for InitialCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("initial condition {s:?} is not <kind>:<arg>")))?;
        let bad = || Error::Config(format!("bad initial condition argument in {s:?}"));
        match kind {
            "random" => arg.parse().map(InitialCondition::Random).map_err(|_| bad()),
            "cosine" => arg.parse().map(InitialCondition::Cosine).map_err(|_| bad()),
            "file" if !arg.is_empty() => Ok(InitialCondition::File(arg.into())),
            _ => Err(Error::Config(format!("unknown initial condition {s:?}"))),
        }
    }
}

impl fmt::Display for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Random(seed) => write!(f, "random:{seed}"),
            InitialCondition::Cosine(k) => write!(f, "cosine:{k}"),
            InitialCondition::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

/// Reads a single-column CSV of values. Blank lines and `#` comments are
/// skipped.
pub fn read_state_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_state_csv(&text)
}

pub fn parse_state_csv(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: {line:?} is not a number", lineno + 1)))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Parse("state file has no values".into()));
    }
    Ok(out)
}

pub fn format_state_csv(u: &State) -> String {
    let mut s = String::with_capacity(u.values.len() * 24);
    for v in &u.values {
        s.push_str(&format!("{v:.16e}\n"));
    }
    s
}

pub fn write_state_csv(u: &State, path: &Path) -> Result<()> {
    std::fs::write(path, format_state_csv(u)).map_err(|e| Error::io(path, e))
}
