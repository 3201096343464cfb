//! TOML configuration for every subcommand.

use std::path::{Path, PathBuf};

use nsp_core::initdata::{ApproxData, InitialData, InitialProfile, UniformData, MIN_OUTER_RADIUS};
use nsp_core::solver::GridRule;
use nsp_core::ModelParams;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: u32,
    pub gamma: f64,
    pub kappa: f64,
    pub eps: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            n: 3,
            gamma: 2.0,
            kappa: 1.0,
            eps: 0.125,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridChoice {
    #[default]
    EqualMass,
    EqualRadius,
}

impl From<GridChoice> for GridRule {
    fn from(g: GridChoice) -> Self {
        match g {
            GridChoice::EqualMass => GridRule::EqualMass,
            GridChoice::EqualRadius => GridRule::EqualRadius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub b: f64,
    pub cells: usize,
    #[serde(default)]
    pub grid_rule: GridChoice,
}

impl Default for DomainSection {
    fn default() -> Self {
        Self {
            b: 4.0,
            cells: 512,
            grid_rule: GridChoice::EqualMass,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Constant density on [1/b, b]; no smoothing pipeline.
    #[default]
    UniformStar,
    UniformBall,
    Gaussian,
    Polytrope,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialSection {
    pub preset: Preset,
    /// Density of the uniform star.
    pub density: f64,
    pub mass: f64,
    pub radius: f64,
    pub width: f64,
    pub power: f64,
    pub velocity_slope: f64,
    /// CSV with columns r,rho0,m0.
    pub table_path: Option<PathBuf>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            preset: Preset::UniformStar,
            density: 1.0,
            mass: 1.0,
            radius: 2.0,
            width: 1.0,
            power: 1.0,
            velocity_slope: 0.0,
            table_path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub t_end: f64,
    pub cfl: f64,
    /// Time between ledger lines and snapshots.
    pub dump_cadence: f64,
    pub max_dt: Option<f64>,
    /// Step halvings before a run is declared blown up.
    pub max_retries: u32,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            cfl: 0.4,
            dump_cadence: 0.1,
            max_dt: None,
            max_retries: 12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    /// K = [d, D] as fractions of b.
    pub window: [f64; 2],
    /// δ values as fractions of b.
    pub delta_ladder: Vec<f64>,
    /// Points in the Eulerian slice grid.
    pub slice_points: usize,
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            window: [0.1, 0.9],
            delta_ladder: vec![0.01, 0.02, 0.05, 0.1],
            slice_points: 401,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Ndjson,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Ndjson],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub eps_ladder: Vec<f64>,
    /// Outer radius paired with each ε; empty holds domain.b fixed.
    pub b_per_eps: Vec<f64>,
    /// Outer radii tried by the domain-expansion threshold search.
    pub b_ladder: Vec<f64>,
    /// Cells at the first ε; scaled by (ε₀/ε)^{1/2}.
    pub base_cells: usize,
    pub max_cells: usize,
    /// Comparison window in r as fractions of b.
    pub r_window: [f64; 2],
    pub t_window: [f64; 2],
    pub r_points: usize,
    pub t_points: usize,
    pub p_rho: f64,
    pub p_m: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            eps_ladder: vec![0.1, 0.05, 0.025],
            b_per_eps: Vec::new(),
            b_ladder: vec![4.0, 6.0, 8.0],
            base_cells: 256,
            max_cells: 2048,
            r_window: [0.2, 0.8],
            t_window: [0.2, 1.0],
            r_points: 121,
            t_points: 41,
            p_rho: 1.0,
            p_m: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PsiChoice {
    #[default]
    Sharp,
    Mechanical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropySection {
    pub psi: PsiChoice,
    pub rho_range: [f64; 2],
    pub u_range: [f64; 2],
    pub rho_points: usize,
    pub u_points: usize,
    pub nodes: usize,
}

impl Default for EntropySection {
    fn default() -> Self {
        Self {
            psi: PsiChoice::Sharp,
            rho_range: [1e-3, 10.0],
            u_range: [-5.0, 5.0],
            rho_points: 21,
            u_points: 21,
            nodes: nsp_core::entropy::DEFAULT_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McSection {
    pub dims: Vec<u32>,
    pub gammas: Vec<f64>,
    pub e0: f64,
    pub mass: f64,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            dims: vec![3],
            gammas: vec![1.25, 1.3, 4.0 / 3.0],
            e0: 1.0,
            mass: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    pub cells: usize,
    pub t_end: f64,
    /// Relative change applied to the mass mid-run, to exercise the mass check.
    pub perturb_mass: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        Self {
            cells: 128,
            t_end: 0.25,
            perturb_mass: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub domain: DomainSection,
    pub initial: InitialSection,
    pub time: TimeSection,
    pub diagnostics: DiagnosticsSection,
    pub output: OutputSection,
    pub sweep: SweepSection,
    pub entropy: EntropySection,
    pub mc: McSection,
    pub verify: VerifySection,
}

fn check(ok: bool, what: &str, detail: impl Into<String>) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::invalid(what, detail))
    }
}

fn fraction_pair(w: [f64; 2], what: &str) -> CliResult<()> {
    check(
        w[0] > 0.0 && w[0] < w[1] && w[1] < 1.0,
        what,
        format!("{:?}; need 0 < lo < hi < 1", w),
    )
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        if let Some(t) = &cfg.initial.table_path {
            if t.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.initial.table_path = Some(dir.join(t));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        let m = &self.model;
        Ok(ModelParams::derive(m.n, m.gamma, m.kappa, m.eps)?)
    }

    /// Range checks that do not need any computation.
    pub fn validate(&self) -> CliResult<()> {
        self.params()?;
        let d = &self.domain;
        check(
            d.b >= MIN_OUTER_RADIUS,
            "domain.b",
            format!("b={}; need b >= {MIN_OUTER_RADIUS}", d.b),
        )?;
        check(d.cells >= 16, "domain.cells", format!("{}; need >= 16", d.cells))?;
        let t = &self.time;
        check(t.t_end > 0.0 && t.t_end.is_finite(), "time.t_end", "need T > 0")?;
        check(t.cfl > 0.0 && t.cfl.is_finite(), "time.cfl", "need a positive CFL number")?;
        check(t.dump_cadence > 0.0, "time.dump_cadence", "need a positive cadence")?;
        if let Some(m) = t.max_dt {
            check(m > 0.0, "time.max_dt", "need a positive bound")?;
        }
        fraction_pair(self.diagnostics.window, "diagnostics.window")?;
        check(
            self.diagnostics.delta_ladder.iter().all(|&x| x > 0.0 && x <= 1.0),
            "diagnostics.delta_ladder",
            "fractions of b must lie in (0, 1]",
        )?;
        check(self.diagnostics.slice_points >= 3, "diagnostics.slice_points", "need >= 3")?;
        let i = &self.initial;
        match i.preset {
            Preset::UniformStar => check(i.density > 0.0, "initial.density", "need > 0")?,
            Preset::Table => {
                let p = i
                    .table_path
                    .as_ref()
                    .ok_or_else(|| CliError::invalid("initial.table_path", "required for preset table"))?;
                check(p.exists(), "initial.table_path", format!("{} does not exist", p.display()))?;
            }
            _ => check(i.mass > 0.0, "initial.mass", "need M > 0")?,
        }
        let s = &self.sweep;
        check(
            !s.eps_ladder.is_empty() && s.eps_ladder.windows(2).all(|w| w[1] < w[0]),
            "sweep.eps_ladder",
            "must be non-empty and strictly decreasing",
        )?;
        check(
            s.eps_ladder.iter().all(|&e| e > 0.0 && e <= 1.0),
            "sweep.eps_ladder",
            "every ε must lie in (0, 1]",
        )?;
        check(
            s.b_ladder.iter().chain(&s.b_per_eps).all(|&b| b >= MIN_OUTER_RADIUS),
            "sweep.b_ladder",
            format!("every b must be >= {MIN_OUTER_RADIUS}"),
        )?;
        check(
            s.b_per_eps.is_empty() || s.b_per_eps.len() == s.eps_ladder.len(),
            "sweep.b_per_eps",
            "must be empty or match sweep.eps_ladder in length",
        )?;
        fraction_pair(s.r_window, "sweep.r_window")?;
        check(
            s.t_window[0] >= 0.0 && s.t_window[0] < s.t_window[1],
            "sweep.t_window",
            "need 0 <= t0 < t1",
        )?;
        check(s.r_points >= 2 && s.t_points >= 2, "sweep", "lattice needs at least 2 points per axis")?;
        check(s.base_cells >= 16 && s.max_cells >= s.base_cells, "sweep.base_cells", "need 16 <= base_cells <= max_cells")?;
        let g = self.model.gamma;
        check(
            s.p_rho >= 1.0 && s.p_rho < g + 1.0,
            "sweep.p_rho",
            format!("{}; need 1 <= p < gamma+1", s.p_rho),
        )?;
        check(
            s.p_m >= 1.0 && s.p_m < 3.0 * (g + 1.0) / (g + 3.0),
            "sweep.p_m",
            format!("{}; need 1 <= p < 3(gamma+1)/(gamma+3)", s.p_m),
        )?;
        let e = &self.entropy;
        check(
            e.rho_range[0] >= 0.0 && e.rho_range[0] <= e.rho_range[1],
            "entropy.rho_range",
            "need 0 <= lo <= hi",
        )?;
        check(e.u_range[0] <= e.u_range[1], "entropy.u_range", "need lo <= hi")?;
        check(e.rho_points >= 1 && e.u_points >= 1 && e.nodes >= 2, "entropy", "grid and node counts must be positive")?;
        check(self.verify.cells >= 16, "verify.cells", "need >= 16")?;
        check(self.verify.t_end > 0.0, "verify.t_end", "need > 0")?;
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        let mut c = self.clone();
        c.model.eps = eps;
        c
    }
}

/// The initial data selected by a configuration.
#[derive(Debug, Clone)]
pub enum Source {
    Uniform(UniformData),
    Approx(Box<ApproxData>),
}

impl Source {
    pub fn build(cfg: &RunConfig) -> CliResult<Self> {
        let p = cfg.params()?;
        let n = p.n;
        let i = &cfg.initial;
        let b = cfg.domain.b;
        let profile = match i.preset {
            Preset::UniformStar => return Ok(Source::Uniform(UniformData::star(n, b, i.density)?)),
            Preset::UniformBall => InitialProfile::uniform_ball(n, i.radius, i.mass)?,
            Preset::Gaussian => InitialProfile::gaussian(n, i.width, i.mass)?,
            Preset::Polytrope => InitialProfile::polytrope(n, i.radius, i.power, i.mass)?,
            Preset::Table => {
                let path = i.table_path.as_ref().expect("validated");
                let (r, rho, m) = crate::io::read_profile_table(path)?;
                InitialProfile::from_table(n, r, rho, m)?
            }
        };
        let profile = if i.velocity_slope != 0.0 && i.preset != Preset::Table {
            profile.with_velocity_slope(i.velocity_slope)?
        } else {
            profile
        };
        Ok(Source::Approx(Box::new(ApproxData::build(&profile, &p, b)?)))
    }

    pub fn data(&self) -> &dyn InitialData {
        match self {
            Source::Uniform(u) => u,
            Source::Approx(a) => a.as_ref(),
        }
    }
}
