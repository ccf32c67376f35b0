use std::f64::consts::{FRAC_PI_4, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{symmetric_half, STEPS};
use crate::error::{Error, Result};
use crate::geometry::{
    build_disk_partition, build_half_disk, build_quarter_arc_disk, build_quarter_sphere_trio, build_rectangle,
    build_sectorial_domain, build_uniform_disk, BoundaryTag, DomainSpec, HalfDiskVariant, MetricWeight,
    SectorialBlock,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    Solve,
    Compare,
    Sweep,
    DtnScan,
    CoverCheck,
    HeatFit,
    SymmetryPair,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightName {
    Flat,
    Spherical,
}

impl WeightName {
    pub fn metric(self) -> MetricWeight {
        match self {
            WeightName::Flat => MetricWeight::Flat,
            WeightName::Spherical => MetricWeight::Spherical,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockName {
    HalfDisk,
    Triangle,
    Rectangle,
}

impl BlockName {
    pub fn block(self) -> SectorialBlock {
        match self {
            BlockName::HalfDisk => SectorialBlock::half_disk(),
            BlockName::Triangle => SectorialBlock::triangle(),
            BlockName::Rectangle => SectorialBlock::rectangle(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrioMember {
    Axisymmetric1,
    Axisymmetric2,
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TagName {
    Dirichlet,
    Neumann,
}

impl TagName {
    fn tag(self) -> BoundaryTag {
        match self {
            TagName::Dirichlet => BoundaryTag::Dirichlet,
            TagName::Neumann => BoundaryTag::Neumann,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    /// Upper unit half-disk, Problem I or II.
    HalfDisk { variant: HalfDiskVariant },
    /// Four copies of a sectorial block; `swapped` selects the second problem.
    Sectorial {
        block: BlockName,
        #[serde(default)]
        swapped: bool,
    },
    /// Disk with arcs `(k, n, 24 - k, 24 - n)` in units of `π / 24`.
    DiskPartition { k: usize, n: usize },
    UniformDisk { tag: TagName },
    Rectangle {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        /// Bottom, right, top, left.
        tags: [TagName; 4],
    },
    /// One member of the quarter-sphere comparison (spherical weight).
    QuarterSphere { member: TrioMember },
    /// All three quarter-sphere problems, for `symmetry-pair`.
    QuarterSphereTrio,
    /// Upper half-disk with Dirichlet on the arc within `theta` of `i`.
    SymmetricHalf { theta: f64 },
    QuarterArcDisk { theta: f64 },
}

impl DomainConfig {
    pub fn family(&self) -> &'static str {
        match self {
            DomainConfig::HalfDisk { .. } => "half_disk",
            DomainConfig::Sectorial { .. } => "sectorial",
            DomainConfig::DiskPartition { .. } => "disk_partition",
            DomainConfig::UniformDisk { .. } => "uniform_disk",
            DomainConfig::Rectangle { .. } => "rectangle",
            DomainConfig::QuarterSphere { .. } => "quarter_sphere",
            DomainConfig::QuarterSphereTrio => "quarter_sphere_trio",
            DomainConfig::SymmetricHalf { .. } => "symmetric_half",
            DomainConfig::QuarterArcDisk { .. } => "quarter_arc_disk",
        }
    }

    /// Sector angle of a four-block layout, if the domain has one.
    pub fn four_block_alpha(&self) -> Option<f64> {
        match self {
            DomainConfig::HalfDisk { .. } => Some(FRAC_PI_4),
            DomainConfig::Sectorial { block, .. } => Some(block.block().alpha),
            _ => None,
        }
    }

    /// Families whose swapped problem is a meaningful comparison.
    pub fn swappable(&self) -> bool {
        matches!(
            self,
            DomainConfig::HalfDisk { .. } | DomainConfig::Sectorial { .. } | DomainConfig::DiskPartition { .. }
        )
    }

    fn check(&self, weight: WeightName) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        match *self {
            DomainConfig::DiskPartition { k, n } => {
                if !(1..=STEPS).contains(&k) || !(1..=STEPS).contains(&n) {
                    return bad(format!("disk_partition needs 1 <= k, n <= {STEPS} (got {k}, {n})"));
                }
            }
            DomainConfig::Rectangle { x0, y0, x1, y1, .. } => {
                if !(x1 > x0 && y1 > y0) || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
                    return bad("rectangle needs x0 < x1 and y0 < y1".into());
                }
            }
            DomainConfig::SymmetricHalf { theta } => {
                if !(theta > 0.0 && theta < PI / 2.0) {
                    return bad(format!("symmetric_half theta = {theta} outside (0, pi/2)"));
                }
            }
            DomainConfig::QuarterArcDisk { theta } => {
                if !theta.is_finite() {
                    return bad("quarter_arc_disk theta must be finite".into());
                }
            }
            DomainConfig::QuarterSphere { .. } | DomainConfig::QuarterSphereTrio => {
                if weight != WeightName::Spherical {
                    return bad(format!("{} requires weight = \"spherical\"", self.family()));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The problem described; for the trio this is the central member.
    pub fn build(&self, weight: WeightName) -> Result<DomainSpec> {
        let w = weight.metric();
        let mut spec = match *self {
            DomainConfig::HalfDisk { variant } => build_half_disk(variant, w.clone()),
            DomainConfig::Sectorial { block, swapped } => build_sectorial_domain(&block.block(), swapped)?,
            DomainConfig::DiskPartition { k, n } => {
                let step = PI / STEPS as f64;
                build_disk_partition(k as f64 * step, n as f64 * step)?.0
            }
            DomainConfig::UniformDisk { tag } => build_uniform_disk(tag.tag()),
            DomainConfig::Rectangle { x0, y0, x1, y1, tags } => build_rectangle(x0, y0, x1, y1, tags.map(TagName::tag))?,
            DomainConfig::QuarterSphere { member } => {
                let t = build_quarter_sphere_trio()?;
                match member {
                    TrioMember::Axisymmetric1 => t.axisymmetric_1,
                    TrioMember::Axisymmetric2 => t.axisymmetric_2,
                    TrioMember::Central => t.central,
                }
            }
            DomainConfig::QuarterSphereTrio => build_quarter_sphere_trio()?.central,
            DomainConfig::SymmetricHalf { theta } => symmetric_half(theta, w.clone())?,
            DomainConfig::QuarterArcDisk { theta } => build_quarter_arc_disk(theta),
        };
        spec.weight = w;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub h: f64,
    /// Reflection-symmetric mesh where the task supports one.
    #[serde(default = "yes")]
    pub symmetric: bool,
    /// 0: solve on the mesh; 1: also on its uniform refinement and extrapolate.
    #[serde(default)]
    pub refinements: u32,
    #[serde(default = "one")]
    pub seed: u64,
}

fn yes() -> bool {
    true
}

fn one() -> u64 {
    1
}

impl Default for MeshConfig {
    fn default() -> Self {
        MeshConfig {
            h: 0.1,
            symmetric: true,
            refinements: 0,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_count() -> usize {
    8
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            count: default_count(),
            tol: default_tol(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_max_index")]
    pub max_index: usize,
    #[serde(default = "default_eigencount")]
    pub eigencount: usize,
}

fn default_max_index() -> usize {
    12
}

fn default_eigencount() -> usize {
    3
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            max_index: default_max_index(),
            eigencount: default_eigencount(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    160
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { grid: default_grid() }
    }
}

/// Pass/fail thresholds; unset entries use the task default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    pub rel_tol: Option<f64>,
    pub residual_tol: Option<f64>,
    /// Expected interval for the first eigenvalue (`solve`).
    pub first_in: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub task: TaskKind,
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    #[serde(default = "flat")]
    pub weight: WeightName,
    #[serde(default)]
    pub mesh: MeshConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub scan: Option<ScanConfig>,
    #[serde(default)]
    pub check: CheckConfig,
    /// Output directory; relative paths are resolved against the output root.
    #[serde(default)]
    pub output: Option<String>,
}

/// Prefix a config error with where it came from.
pub(crate) fn within(e: Error, origin: &str) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{origin}: {m}")),
        other => other,
    }
}

fn flat() -> WeightName {
    WeightName::Flat
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| within(e, &path.display().to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn domain(&self) -> Result<&DomainConfig> {
        self.domain
            .as_ref()
            .ok_or_else(|| Error::Config(format!("task {:?} needs a [domain] table", self.task)))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return bad(format!("name {:?} must be non-empty and use only [A-Za-z0-9_-]", self.name));
        }
        let m = &self.mesh;
        if !(m.h > 0.0 && m.h <= 1.0) {
            return bad(format!("mesh.h = {} outside (0, 1]", m.h));
        }
        if m.refinements > 1 {
            return bad(format!("mesh.refinements = {} (only 0 or 1 supported)", m.refinements));
        }
        if self.solver.count == 0 || self.solver.count > 2000 {
            return bad(format!("solver.count = {} outside [1, 2000]", self.solver.count));
        }
        if !(self.solver.tol > 0.0 && self.solver.tol < 1e-3) {
            return bad(format!("solver.tol = {} outside (0, 1e-3)", self.solver.tol));
        }
        for (name, v) in [("check.rel_tol", self.check.rel_tol), ("check.residual_tol", self.check.residual_tol)] {
            if let Some(v) = v {
                if !(v > 0.0) {
                    return bad(format!("{name} = {v} must be positive"));
                }
            }
        }
        if let Some([a, b]) = self.check.first_in {
            if !(a < b) {
                return bad(format!("check.first_in = [{a}, {b}] is empty"));
            }
        }
        if let Some(d) = &self.domain {
            d.check(self.weight)?;
        }
        use TaskKind::*;
        match self.task {
            Solve | HeatFit => {
                self.domain()?;
            }
            Compare => {
                let d = self.domain()?;
                if !d.swappable() {
                    return bad(format!("compare needs a swappable family, not {}", d.family()));
                }
                if m.symmetric && d.four_block_alpha().is_none() && !matches!(d, DomainConfig::DiskPartition { .. }) {
                    return bad(format!("{} has no symmetric mesh; set mesh.symmetric = false", d.family()));
                }
            }
            SymmetryPair => match self.domain()? {
                DomainConfig::QuarterSphereTrio | DomainConfig::SymmetricHalf { .. } => {}
                d => return bad(format!("symmetry-pair needs quarter_sphere_trio or symmetric_half, not {}", d.family())),
            },
            Sweep => {
                let s = self.sweep.clone().unwrap_or_default();
                if s.max_index == 0 || s.max_index > STEPS / 2 || s.eigencount == 0 {
                    return bad(format!("sweep needs 1 <= max_index <= {} and eigencount >= 1", STEPS / 2));
                }
                if self.domain.is_some() {
                    return bad("sweep builds its own disk partitions; remove [domain]".into());
                }
            }
            DtnScan | CoverCheck => {
                if self.domain.is_some() {
                    return bad(format!("{:?} uses a fixed geometry; remove [domain]", self.task));
                }
                if self.scan.as_ref().is_some_and(|s| s.grid < 2) {
                    return bad("scan.grid must be at least 2".into());
                }
            }
        }
        if self.scan.is_some() && self.task != DtnScan {
            return bad("[scan] only applies to dtn-scan".into());
        }
        if self.sweep.is_some() && self.task != Sweep {
            return bad("[sweep] only applies to sweep".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t1"
task = "compare"
[domain]
family = "half_disk"
variant = "I"
[mesh]
h = 0.1
"#;

    #[test]
    fn parse_and_round_trip() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.solver.count, 8);
        assert!(c.mesh.symmetric);
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
        let spec = c.domain().unwrap().build(c.weight).unwrap();
        assert_eq!(spec, build_half_disk(HalfDiskVariant::I, MetricWeight::Flat));
    }

    #[test]
    fn unknown_keys_rejected() {
        let extra = MINIMAL.replace("h = 0.1", "h = 0.1\nsize = 3");
        assert!(ExperimentConfig::from_toml(&extra).is_err());
        let extra = MINIMAL.replace("variant = \"I\"", "variant = \"I\"\ncolor = 1");
        assert!(ExperimentConfig::from_toml(&extra).is_err());
        assert!(ExperimentConfig::from_toml(&MINIMAL.replace("compare", "explode")).is_err());
    }

    #[test]
    fn ranges_checked() {
        for (from, to) in [
            ("h = 0.1", "h = -0.1"),
            ("h = 0.1", "h = 0.1\nrefinements = 3"),
            ("variant = \"I\"", "variant = \"III\""),
            ("family = \"half_disk\"\nvariant = \"I\"", "family = \"quarter_sphere_trio\""),
            ("family = \"half_disk\"\nvariant = \"I\"", "family = \"disk_partition\"\nk = 0\nn = 3"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(ExperimentConfig::from_toml(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn family_specs_build() {
        let fams = [
            DomainConfig::Sectorial {
                block: BlockName::Triangle,
                swapped: true,
            },
            DomainConfig::DiskPartition { k: 3, n: 5 },
            DomainConfig::UniformDisk { tag: TagName::Neumann },
            DomainConfig::SymmetricHalf { theta: 0.3 },
            DomainConfig::QuarterArcDisk { theta: 0.0 },
        ];
        for f in fams {
            f.check(WeightName::Flat).unwrap();
            f.build(WeightName::Flat).unwrap();
        }
        let q = DomainConfig::QuarterSphere {
            member: TrioMember::Axisymmetric1,
        };
        assert!(q.check(WeightName::Flat).is_err());
        assert_eq!(q.build(WeightName::Spherical).unwrap().weight, MetricWeight::Spherical);
    }
}
