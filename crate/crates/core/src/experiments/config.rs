use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelFile};
use crate::partition::{DeltaOptions, Partition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Diameter,
    Tail,
    Expansion,
    Coupling,
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diameter" => Ok(ExperimentKind::Diameter),
            "tail" => Ok(ExperimentKind::Tail),
            "expansion" => Ok(ExperimentKind::Expansion),
            "coupling" => Ok(ExperimentKind::Coupling),
            _ => Err(Error::Domain(format!("unknown experiment kind {s:?}"))),
        }
    }
}

/// A kernel file path (relative to the config file) or an inline table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelRef {
    Path(PathBuf),
    Inline(KernelFile),
}

/// One value or a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sweep {
    One(f64),
    Many(Vec<f64>),
}

impl Sweep {
    fn values(&self) -> Vec<f64> {
        match self {
            Sweep::One(x) => vec![*x],
            Sweep::Many(v) => v.clone(),
        }
    }
}

/// Partition literal: block groups, interior breakpoints or a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum PartitionDef {
    Groups(Vec<Vec<usize>>),
    Breakpoints(Vec<f64>),
    Grid(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailSpec {
    pub source_cell: usize,
    pub target_cell: usize,
    pub u_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionSpec {
    /// Cells `A_0, …, A_ℓ`.
    pub walk: Vec<usize>,
    /// Defaults to `Φ(n, p)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<u32>,
}

fn default_trials() -> usize {
    100
}

fn default_acceptance() -> f64 {
    0.9
}

/// An experiment description, normally read from TOML.
///
/// Exactly one of `p`, `np` and `np_exponent` gives the edge density; each
/// may be a single number or a list to sweep. `np_exponent = a` means
/// `np = n^a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub kernel: KernelRef,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub np: Option<Sweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub np_exponent: Option<Sweep>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    #[serde(default)]
    pub parallel: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Fraction of trials that must land in the predicted interval.
    #[serde(default = "default_acceptance")]
    pub acceptance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expansion: Option<ExpansionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<DeltaOptions>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// A config with defaults for everything but the essentials.
    pub fn new(kind: ExperimentKind, kernel: &Kernel, n: usize, p: f64) -> ExperimentConfig {
        ExperimentConfig {
            kind,
            kernel: KernelRef::Inline(KernelFile::describe(kernel)),
            n,
            p: Some(Sweep::One(p)),
            np: None,
            np_exponent: None,
            trials: default_trials(),
            seed: 0,
            parallel: 0,
            output: None,
            acceptance: default_acceptance(),
            omega: None,
            partition: None,
            tail: None,
            expansion: None,
            delta: None,
            base_dir: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::parse("<config>", e.message()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn load_kernel(&self) -> Result<Kernel> {
        match &self.kernel {
            KernelRef::Path(p) => Kernel::load(self.resolve(p)),
            KernelRef::Inline(f) => f.build(),
        }
    }

    /// The densities to run, in order.
    pub fn densities(&self) -> Result<Vec<f64>> {
        let n = self.n as f64;
        let given = [&self.p, &self.np, &self.np_exponent]
            .iter()
            .filter(|x| x.is_some())
            .count();
        if given != 1 {
            return Err(Error::Domain(
                "give exactly one of p, np and np_exponent".into(),
            ));
        }
        let ps: Vec<f64> = if let Some(s) = &self.p {
            s.values()
        } else if let Some(s) = &self.np {
            s.values().into_iter().map(|x| x / n).collect()
        } else {
            let s = self.np_exponent.as_ref().expect("counted above");
            s.values().into_iter().map(|a| n.powf(a) / n).collect()
        };
        if ps.is_empty() {
            return Err(Error::Domain("the density sweep is empty".into()));
        }
        if let Some(p) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Domain(format!("p = {p} is not in [0, 1]")));
        }
        Ok(ps)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Domain("trials must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::Domain("n must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.acceptance) {
            return Err(Error::Domain("acceptance must lie in [0, 1]".into()));
        }
        self.densities()?;
        Ok(())
    }

    /// The configured partition, or the kernel's finest block partition.
    pub fn partition_for(&self, kernel: &Kernel) -> Result<Partition> {
        match &self.partition {
            Some(PartitionDef::Groups(g)) => Partition::from_groups(kernel.space(), g.clone()),
            Some(PartitionDef::Breakpoints(b)) => Partition::from_breakpoints(kernel.space(), b),
            Some(PartitionDef::Grid(c)) => Partition::regular_grid(kernel.space(), *c),
            None => kernel.block_structure().map(|b| b.partition).ok_or_else(|| {
                Error::Domain("this kernel has no block structure; give a partition".into())
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_full_config() {
        let text = r#"
            kind = "tail"
            n = 2000
            p = [0.01, 0.02]
            trials = 50
            seed = 9
            [kernel.variant]
            kind = "step"
            matrix = [[1.0, 0.5], [1.0]]
            [kernel.space]
            kind = "finite"
            weights = [0.5, 0.5]
            [tail]
            source_cell = 0
            target_cell = 1
            u_size = 5
        "#;
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.densities().unwrap(), vec![0.01, 0.02]);
        assert_eq!(c.load_kernel().unwrap().id(), "step2");
        assert_eq!(c.partition_for(&c.load_kernel().unwrap()).unwrap().len(), 2);
    }

    #[test]
    fn density_forms() {
        let k = Kernel::path(2, 1.0, 1.0).unwrap();
        let mut c = ExperimentConfig::new(ExperimentKind::Diameter, &k, 10_000, 0.1);
        c.p = None;
        c.np_exponent = Some(Sweep::One(0.5));
        assert!((c.densities().unwrap()[0] - 0.01).abs() < 1e-15);
        c.np = Some(Sweep::One(5.0));
        assert!(c.densities().is_err());
        c.np_exponent = None;
        assert_eq!(c.densities().unwrap(), vec![5e-4]);
        c.trials = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn kernel_paths_are_relative_to_the_config() {
        let dir = tempfile::tempdir().unwrap();
        Kernel::path(3, 1.0, 1.0).unwrap().save(dir.path().join("k.toml")).unwrap();
        let cfg = dir.path().join("c.toml");
        fs::write(&cfg, "kind = \"diameter\"\nkernel = \"k.toml\"\nn = 100\np = 0.5\n").unwrap();
        let c = ExperimentConfig::load(&cfg).unwrap();
        assert_eq!(c.load_kernel().unwrap().id(), "path3");
    }
}
