//! The declarative run configuration. Parsed from TOML with unknown keys
//! rejected, then overridden by command-line flags and validated before any
//! computation starts.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::suites::{Suite, VerifyConfig};
use crate::error::{Error, Result};
use crate::geometry::serialize::FieldFile;
use crate::geometry::toric::random_smooth;
use crate::geometry::torus::{Hermitian, HermitianSpec, TorusGeometry};
use crate::geometry::trig::TrigPoly;
use crate::moment::ccsck::{CouplingSpec, ToricSystem, TorusSystem};
use crate::solvers::SolveConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandName {
    Verify,
    Eval,
    Solve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Torus,
    Toric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometryConfig {
    pub backend: Backend,
    /// Complex dimension of the torus; the toric backend is ℂP¹ only.
    pub n: usize,
    /// Points per side on the torus, Chebyshev nodes per component on ℂP¹.
    pub grid: usize,
    /// Constant Hermitian bases of the torus classes, one per component;
    /// identity when absent.
    pub bases: Option<Vec<HermitianSpec>>,
    /// Class sizes a_i of the toric components.
    pub class_sizes: Vec<f64>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig { backend: Backend::Torus, n: 1, grid: 32, bases: None, class_sizes: vec![2.0, 2.0] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialKind {
    Zero,
    Random,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialsConfig {
    pub kind: PotentialKind,
    /// Defaults to the run seed.
    pub seed: Option<u64>,
    pub amplitude: f64,
    /// Largest |ξ|∞ of the random torus modes; toric draws use a fixed
    /// four-term cosine series.
    pub band: i32,
    pub modes: usize,
    /// A field file with one column per component.
    pub path: Option<PathBuf>,
}

impl Default for PotentialsConfig {
    fn default() -> Self {
        PotentialsConfig { kind: PotentialKind::Zero, seed: None, amplitude: 0.05, band: 2, modes: 4, path: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    pub p: Vec<usize>,
    pub weights: Vec<f64>,
    /// The optional i = 0 term of the first equation; it only shifts c₀.
    pub self_term: Option<SelfTerm>,
}

impl Default for CouplingConfig {
    fn default() -> Self {
        CouplingConfig { p: vec![0], weights: vec![1.0], self_term: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfTerm {
    pub weight: f64,
    #[serde(default)]
    pub p: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySection {
    /// Empty runs every suite.
    pub suites: Vec<Suite>,
    pub instances: Option<usize>,
    pub directions: Option<usize>,
    pub grid: Option<usize>,
    pub p: Option<Vec<usize>>,
    pub tolerance: Option<f64>,
}

impl VerifySection {
    pub fn scale(&self) -> VerifyConfig {
        VerifyConfig {
            instances: self.instances,
            directions: self.directions,
            grid: self.grid,
            p: self.p.clone(),
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EvalTarget {
    MuP,
    Ccsck,
    Kym,
    Dhym,
    Graph,
    Futaki,
    Calabi,
    Mabuchi,
}

impl EvalTarget {
    pub fn name(self) -> &'static str {
        match self {
            EvalTarget::MuP => "mu-p",
            EvalTarget::Ccsck => "ccsck",
            EvalTarget::Kym => "kym",
            EvalTarget::Dhym => "dhym",
            EvalTarget::Graph => "graph",
            EvalTarget::Futaki => "futaki",
            EvalTarget::Calabi => "calabi",
            EvalTarget::Mabuchi => "mabuchi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSection {
    pub target: Option<EvalTarget>,
    pub csv: bool,
    /// dHYM phase; the closed-form angle of the base classes when absent.
    pub theta: Option<f64>,
    /// Rate of the holomorphic field for `futaki`.
    pub lambda: f64,
    /// Amplitude of the random shear used as the map for `mu-p` and `graph`.
    pub map_amplitude: f64,
    pub alpha0: f64,
    /// The consistent value d·α₂ when absent.
    pub alpha1: Option<f64>,
    pub alpha2: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { target: None, csv: false, theta: None, lambda: 1.0, map_amplitude: 0.05, alpha0: 1.0, alpha1: None, alpha2: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// When set, the config is only valid for this subcommand.
    pub command: Option<CommandName>,
    pub seed: u64,
    pub output: PathBuf,
    pub geometry: GeometryConfig,
    pub potentials: PotentialsConfig,
    pub coupling: CouplingConfig,
    pub solver: SolveConfig,
    pub verify: VerifySection,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: None,
            seed: 1,
            output: PathBuf::from("cmm-out"),
            geometry: GeometryConfig::default(),
            potentials: PotentialsConfig::default(),
            coupling: CouplingConfig::default(),
            solver: SolveConfig::default(),
            verify: VerifySection::default(),
            eval: EvalSection::default(),
        }
    }
}

/// A concrete coupled system built from the geometry and coupling sections.
pub enum System {
    Torus(TorusSystem),
    Toric(ToricSystem),
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    /// The output directory is left out: where a report goes does not change it.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.output = PathBuf::new();
        let canonical = serde_json::to_vec(&c).expect("configs serialize");
        Sha256::digest(&canonical).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn potential_seed(&self) -> u64 {
        self.potentials.seed.unwrap_or(self.seed)
    }

    /// Every seed a run draws from, by purpose.
    pub fn seeds(&self, command: CommandName) -> BTreeMap<String, u64> {
        let mut s = BTreeMap::new();
        s.insert("run".to_string(), self.seed);
        match command {
            CommandName::Verify => {}
            CommandName::Eval | CommandName::Solve => {
                if self.potentials.kind == PotentialKind::Random {
                    s.insert("potentials".to_string(), self.potential_seed());
                }
                if command == CommandName::Solve {
                    s.insert("solver".to_string(), self.solver.seed);
                }
            }
        }
        s
    }

    pub fn components(&self) -> usize {
        self.coupling.p.len() + 1
    }

    /// Schema checks beyond what the parser enforces.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Usage(m));
        let g = &self.geometry;
        if self.coupling.p.is_empty() || self.coupling.p.len() != self.coupling.weights.len() {
            return bad(format!("coupling: p has {} entries and weights {}; need the same positive count", self.coupling.p.len(), self.coupling.weights.len()));
        }
        if let Some(t) = self.coupling.self_term {
            if !t.weight.is_finite() || t.p >= g.n {
                return bad(format!("coupling.self_term needs a finite weight and p < n = {}", g.n));
            }
        }
        match g.backend {
            Backend::Torus => {
                if !(1..=2).contains(&g.n) {
                    return bad(format!("geometry.n = {} is not supported; use 1 or 2", g.n));
                }
                if g.grid < 4 || !g.grid.is_power_of_two() {
                    return bad(format!("geometry.grid = {} must be a power of two ≥ 4 on the torus", g.grid));
                }
                if let Some(b) = &g.bases {
                    if b.len() != self.components() {
                        return bad(format!("geometry.bases has {} entries for {} components", b.len(), self.components()));
                    }
                }
            }
            Backend::Toric => {
                if g.n != 1 {
                    return bad("the toric backend is ℂP¹; geometry.n must be 1".into());
                }
                if g.class_sizes.len() != self.components() {
                    return bad(format!("geometry.class_sizes has {} entries for {} components", g.class_sizes.len(), self.components()));
                }
                if g.grid < 4 {
                    return bad(format!("geometry.grid = {} nodes is too few", g.grid));
                }
            }
        }
        if self.potentials.kind == PotentialKind::File && self.potentials.path.is_none() {
            return bad("potentials.kind = \"file\" needs potentials.path".into());
        }
        if !(self.potentials.amplitude.is_finite() && self.potentials.band >= 1 && self.potentials.modes >= 1) {
            return bad("potentials: amplitude must be finite, band and modes positive".into());
        }
        if let Some(t) = self.verify.tolerance {
            if !(t > 0.0) {
                return bad(format!("verify.tolerance must be positive, got {t}"));
            }
        }
        self.solver.validate().map_err(|e| Error::Usage(format!("solver: {e}")))
    }

    pub fn torus_geometry(&self) -> Result<TorusGeometry> {
        TorusGeometry::new(self.geometry.n, self.geometry.grid)
    }

    pub fn bases(&self) -> Result<Vec<Hermitian>> {
        match &self.geometry.bases {
            Some(b) => b.iter().map(Hermitian::from_spec).collect(),
            None => Ok(vec![Hermitian::identity(self.geometry.n); self.components()]),
        }
    }

    /// Bases where only the first must be positive (the dHYM pair).
    pub fn dhym_bases(&self) -> Result<Vec<Hermitian>> {
        match &self.geometry.bases {
            Some(b) => {
                let mut out = vec![Hermitian::from_spec(&b[0])?];
                for s in &b[1..] {
                    out.push(Hermitian::from_spec_indefinite(s)?);
                }
                Ok(out)
            }
            None => Ok(vec![Hermitian::identity(self.geometry.n); self.components()]),
        }
    }

    pub fn coupling_spec(&self) -> Result<CouplingSpec> {
        let mut cs = CouplingSpec::new(self.coupling.p.clone(), self.coupling.weights.clone())?;
        cs.self_term = self.coupling.self_term.map(|t| (t.weight, t.p));
        Ok(cs)
    }

    pub fn system(&self) -> Result<System> {
        Ok(match self.geometry.backend {
            Backend::Torus => System::Torus(TorusSystem::new(self.torus_geometry()?, self.bases()?, self.coupling_spec()?)?),
            Backend::Toric => System::Toric(ToricSystem::new(&self.geometry.class_sizes, self.geometry.grid, self.coupling_spec()?)?),
        })
    }

    /// Node coordinates of each component, for CSV dumps.
    pub fn coordinates(&self, sys: &System) -> Vec<Vec<Vec<f64>>> {
        match sys {
            System::Torus(t) => {
                let d = t.geom.dim();
                let pts: Vec<Vec<f64>> = t.geom.grid.points().chunks(d).map(|c| c.to_vec()).collect();
                vec![pts; self.components()]
            }
            System::Toric(t) => t.intervals.iter().map(|iv| iv.x.iter().map(|x| vec![*x]).collect()).collect(),
        }
    }

    /// The initial potentials, one vector per component.
    pub fn potentials(&self, sys: &System) -> Result<Vec<Vec<f64>>> {
        match sys {
            System::Torus(t) => self.torus_potentials(&t.geom),
            System::Toric(t) => {
                let nodes = t.intervals[0].len();
                self.draw(nodes, |rng| t.intervals.iter().map(|iv| random_smooth(iv, rng, self.potentials.amplitude)).collect())
            }
        }
    }

    /// Torus potentials from the geometry alone, for evaluators whose
    /// classes need not all be positive.
    pub fn torus_potentials(&self, geom: &TorusGeometry) -> Result<Vec<Vec<f64>>> {
        let pc = &self.potentials;
        let k1 = self.components();
        self.draw(geom.len(), |rng| (0..k1).map(|_| geom.sample(&TrigPoly::random(geom.dim(), rng, pc.modes, pc.band, pc.amplitude))).collect())
    }

    fn draw<F: FnOnce(&mut ChaCha8Rng) -> Vec<Vec<f64>>>(&self, nodes: usize, random: F) -> Result<Vec<Vec<f64>>> {
        let k1 = self.components();
        let pc = &self.potentials;
        Ok(match pc.kind {
            PotentialKind::Zero => vec![vec![0.0; nodes]; k1],
            PotentialKind::Random => random(&mut ChaCha8Rng::seed_from_u64(self.potential_seed())),
            PotentialKind::File => {
                let path = pc.path.as_ref().expect("validated");
                let file = FieldFile::load(path).map_err(|e| Error::Usage(format!("potentials file {}: {e}", path.display())))?;
                self.check_field_header(&file)?;
                if file.data.len() != nodes * k1 {
                    return Err(Error::Usage(format!("potentials file holds {} values, expected {}", file.data.len(), nodes * k1)));
                }
                (0..k1).map(|c| (0..nodes).map(|i| file.data[i * k1 + c]).collect()).collect()
            }
        })
    }

    pub fn field_kind(&self) -> &'static str {
        match self.geometry.backend {
            Backend::Torus => "torus:potentials",
            Backend::Toric => "toric:potentials",
        }
    }

    /// Potentials packed node-major, one column per component.
    pub fn field_file(&self, potentials: &[Vec<f64>]) -> FieldFile {
        let k1 = potentials.len();
        let nodes = potentials.first().map_or(0, |p| p.len());
        let mut data = Vec::with_capacity(nodes * k1);
        for i in 0..nodes {
            data.extend(potentials.iter().map(|p| p[i]));
        }
        let dim = match self.geometry.backend {
            Backend::Torus => 2 * self.geometry.n,
            Backend::Toric => 1,
        };
        FieldFile {
            header: crate::geometry::serialize::FieldHeader {
                kind: self.field_kind().into(),
                dim: dim as u32,
                side: self.geometry.grid as u32,
                ncomp: k1 as u32,
            },
            data,
        }
    }

    fn check_field_header(&self, file: &FieldFile) -> Result<()> {
        let expect = self.field_file(&vec![Vec::new(); self.components()]).header;
        let h = &file.header;
        if h.kind != expect.kind || h.dim != expect.dim || h.side != expect.side || h.ncomp != expect.ncomp {
            return Err(Error::Usage(format!(
                "potentials file header {}/dim {}/side {}/{} fields does not match the configured {}/dim {}/side {}/{} fields",
                h.kind, h.dim, h.side, h.ncomp, expect.kind, expect.dim, expect.side, expect.ncomp
            )));
        }
        Ok(())
    }
}
