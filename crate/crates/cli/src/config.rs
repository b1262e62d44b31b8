//! Run configuration and the prescribed-function specification.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use horocm::assumptions::make_admissible_f;
use horocm::solver::{manufactured_zonal, HomotopyConfig};
use horocm::sphere_grid::io::read_fields;
use horocm::{ScalarField, SphereGrid};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub resolution: usize,
    /// `constant:γ`, `admissible:A,B,C`, `manufactured:c,ε`, or a field file
    /// (optionally prefixed `file:`) holding a field named `f`.
    pub f: String,
    pub homotopy: HomotopyConfig,
    /// Stored solution for `verify` and `export`; defaults to
    /// `<out>/solution.hcm`.
    pub solution: Option<PathBuf>,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 2,
            k: 1,
            p: 0.0,
            resolution: 32,
            f: "constant:1".into(),
            homotopy: HomotopyConfig::default(),
            solution: None,
            out: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    /// Reads the JSON config; relative paths inside it resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).with_context(|| format!("cannot open config {}", path.display()))?;
        let mut cfg: RunConfig = serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.out = base.join(&cfg.out);
        if let Some(s) = &cfg.solution {
            cfg.solution = Some(base.join(s));
        }
        if let FSpec::File(p) = FSpec::parse(&cfg.f)? {
            cfg.f = base.join(p).display().to_string();
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.n) {
            bail!("n = {} unsupported (use 2 or 3)", self.n);
        }
        if self.k == 0 || self.k >= self.n {
            bail!("need 1 <= k <= n-1, got k = {}, n = {}", self.k, self.n);
        }
        if !(self.p >= 0.0) || !self.p.is_finite() {
            bail!("p = {} is outside p >= 0", self.p);
        }
        self.homotopy.validate()?;
        Ok(())
    }

    pub fn solution_path(&self) -> PathBuf {
        self.solution.clone().unwrap_or_else(|| self.out.join("solution.hcm"))
    }

    pub fn grid(&self) -> Result<SphereGrid> {
        Ok(SphereGrid::build(self.n, self.resolution)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FSpec {
    Constant(f64),
    /// `h = a + b·P₂(x·e)²` fed through `make_admissible_f` with constant `c`.
    Admissible { a: f64, b: f64, c: f64 },
    /// `φ* = c + ε·P₂(x·e)`.
    Manufactured { c: f64, eps: f64 },
    File(PathBuf),
}

fn numbers(body: &str, count: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = body
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad number in '{what}:{body}'"))?;
    if v.len() != count {
        bail!("'{what}:' expects {count} comma-separated numbers, got {}", v.len());
    }
    Ok(v)
}

impl FSpec {
    pub fn parse(s: &str) -> Result<Self> {
        let (head, body) = s.split_once(':').unwrap_or(("", s));
        Ok(match head {
            "constant" => FSpec::Constant(numbers(body, 1, head)?[0]),
            "admissible" => {
                let v = numbers(body, 3, head)?;
                FSpec::Admissible { a: v[0], b: v[1], c: v[2] }
            }
            "manufactured" => {
                let v = numbers(body, 2, head)?;
                FSpec::Manufactured { c: v[0], eps: v[1] }
            }
            "file" => FSpec::File(PathBuf::from(body)),
            _ => FSpec::File(PathBuf::from(s)),
        })
    }
}

/// The zonal axis used by the built-in families: the last coordinate.
fn axis(n: usize) -> Vec<f64> {
    let mut e = vec![0.0; n + 1];
    e[n] = 1.0;
    e
}

fn p2(grid: &SphereGrid) -> ScalarField {
    let n = grid.dim();
    grid.sample(|x| 0.5 * (3.0 * x[n] * x[n] - 1.0))
}

/// Samples `f` on `grid`. For the manufactured family the exact solution is
/// returned as well.
pub fn build_f(cfg: &RunConfig, grid: &SphereGrid) -> Result<(ScalarField, Option<ScalarField>)> {
    match FSpec::parse(&cfg.f)? {
        FSpec::Constant(g) => {
            if !(g > 0.0) || !g.is_finite() {
                bail!("constant f must be positive, got {g}");
            }
            Ok((ScalarField::constant(grid.len(), g), None))
        }
        FSpec::Admissible { a, b, c } => {
            let h = p2(grid).map(|y| a + b * y * y);
            Ok((make_admissible_f(&h, cfg.k, c)?, None))
        }
        FSpec::Manufactured { c, eps } => {
            let (phi, f) = manufactured_zonal(grid, c, eps, &axis(grid.dim()), cfg.k, cfg.p)?;
            Ok((f, Some(phi)))
        }
        FSpec::File(path) => {
            let file = File::open(&path).with_context(|| format!("cannot open f file {}", path.display()))?;
            let data = read_fields(BufReader::new(file))?;
            data.check_grid(grid)?;
            let f = data
                .field("f")
                .with_context(|| format!("{} has no field named 'f'", path.display()))?;
            Ok((f, None))
        }
    }
}
