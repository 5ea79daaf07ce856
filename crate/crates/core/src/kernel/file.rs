//! TOML kernel definition files.
//!
//! ```toml
//! name = "path4"
//!
//! [space]
//! kind = "finite"
//! weights = [0.25, 0.25, 0.25, 0.25]
//!
//! [variant]
//! kind = "step"
//! matrix = [[1.0, 1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0], [1.0]]
//! ```
//!
//! Interval spaces use `kind = "interval"` with `length` and an optional
//! `[space.density]` table holding `breakpoints` and `values`. Variants are
//! `step` (square matrix or upper triangle), `constant` (`value`), `overlap`
//! (`k`, `eps`; the space may be omitted) and `analytic` (`expression`,
//! `range = [lo, hi]`, optional `discontinuities`). Saved files always carry
//! the full matrix, and loading a saved file gives back an equal kernel.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{Density, Kernel, KernelVariant, TypeSpace};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceDef>,
    pub variant: VariantDef,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpaceDef {
    Finite {
        weights: Vec<f64>,
    },
    Interval {
        length: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<DensityDef>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityDef {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum VariantDef {
    Step {
        matrix: Vec<Vec<f64>>,
    },
    Constant {
        value: f64,
    },
    Overlap {
        k: u32,
        eps: f64,
    },
    Analytic {
        expression: String,
        range: [f64; 2],
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        discontinuities: Vec<String>,
    },
}

impl SpaceDef {
    fn build(&self) -> Result<TypeSpace> {
        match self {
            SpaceDef::Finite { weights } => TypeSpace::finite(weights.clone()),
            SpaceDef::Interval { length, density } => {
                let density = density
                    .as_ref()
                    .map(|d| Density::new(*length, d.breakpoints.clone(), d.values.clone()))
                    .transpose()?;
                TypeSpace::interval(*length, density)
            }
        }
    }

    fn describe(space: &TypeSpace) -> SpaceDef {
        match space {
            TypeSpace::Finite { weights } => SpaceDef::Finite {
                weights: weights.clone(),
            },
            TypeSpace::Interval { length, density } => SpaceDef::Interval {
                length: *length,
                density: (density.values().len() > 1).then(|| DensityDef {
                    breakpoints: density.breakpoints().to_vec(),
                    values: density.values().to_vec(),
                }),
            },
        }
    }
}

impl KernelFile {
    pub fn build(&self) -> Result<Kernel> {
        let space = self.space.as_ref().map(SpaceDef::build).transpose()?;
        let need_space = || {
            space
                .clone()
                .ok_or_else(|| Error::InvalidKernel("this kernel kind needs a [space] table".into()))
        };
        let kernel = match &self.variant {
            VariantDef::Step { matrix } => Kernel::step(need_space()?, matrix.clone())?,
            VariantDef::Constant { value } => Kernel::constant(need_space()?, *value)?,
            VariantDef::Overlap { k, eps } => {
                let kernel = Kernel::overlap(*k, *eps)?;
                if let Some(s) = &space {
                    if s != kernel.space() {
                        return Err(Error::InvalidKernel(format!(
                            "overlap kernel with k = {k} lives on the uniform interval [0, {}]",
                            k + 2
                        )));
                    }
                }
                kernel
            }
            VariantDef::Analytic {
                expression,
                range,
                discontinuities,
            } => {
                let d: Vec<&str> = discontinuities.iter().map(String::as_str).collect();
                Kernel::analytic(need_space()?, expression, (range[0], range[1]), &d)?
            }
        };
        Ok(match &self.name {
            Some(n) => kernel.with_name(n.clone()),
            None => kernel,
        })
    }

    pub fn describe(kernel: &Kernel) -> KernelFile {
        let variant = match kernel.variant() {
            KernelVariant::Step { matrix } => VariantDef::Step {
                matrix: matrix.clone(),
            },
            KernelVariant::Constant { value } => VariantDef::Constant { value: *value },
            KernelVariant::Overlap { k, eps } => VariantDef::Overlap { k: *k, eps: *eps },
            KernelVariant::Analytic(a) => VariantDef::Analytic {
                expression: a.expression().source().to_string(),
                range: [a.range().0, a.range().1],
                discontinuities: a
                    .discontinuities()
                    .iter()
                    .map(|e| e.source().to_string())
                    .collect(),
            },
        };
        KernelFile {
            name: kernel.name().map(str::to_string),
            space: Some(SpaceDef::describe(kernel.space())),
            variant,
        }
    }
}

impl Kernel {
    pub fn from_toml_str(text: &str) -> Result<Kernel> {
        let file: KernelFile =
            toml::from_str(text).map_err(|e| Error::parse("<kernel>", e.message()))?;
        file.build()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&KernelFile::describe(self)).expect("kernel files always serialise")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Kernel> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: KernelFile = toml::from_str(&text).map_err(|e| Error::parse(path, e))?;
        file.build()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_toml_string()).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical file form, hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_toml_string().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(k: &Kernel) {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.toml");
        k.save(&p).unwrap();
        let back = Kernel::load(&p).unwrap();
        assert_eq!(&back, k);
        back.save(&p).unwrap();
        assert_eq!(Kernel::load(&p).unwrap(), back);
        assert_eq!(back.digest(), k.digest());
    }

    #[test]
    fn every_variant_roundtrips() {
        roundtrip(&Kernel::path(5, 0.3, 1.0).unwrap());
        roundtrip(&Kernel::step(TypeSpace::finite(vec![0.1, 0.2, 0.7]).unwrap(), vec![vec![0.1, 0.2, 0.3], vec![0.4, 0.5], vec![0.6]]).unwrap());
        roundtrip(&Kernel::constant(TypeSpace::uniform_interval(3.0), 0.25).unwrap());
        roundtrip(&Kernel::constant(TypeSpace::uniform_finite(3), 1.0).unwrap());
        roundtrip(&Kernel::overlap(3, 0.01).unwrap().with_name("ov3"));
        let d = Density::new(2.0, vec![0.0, 0.5, 2.0], vec![0.5, 0.5]).unwrap();
        roundtrip(
            &Kernel::analytic(
                TypeSpace::interval(2.0, Some(d)).unwrap(),
                "if(y - x <= 1, 0.9, 0.1 * x)",
                (0.0, 0.9),
                &["y - x - 1"],
            )
            .unwrap(),
        );
    }

    #[test]
    fn upper_triangle_loads() {
        let text = r#"
            name = "tri"
            [space]
            kind = "finite"
            weights = [0.5, 0.5]
            [variant]
            kind = "step"
            matrix = [[0.2, 0.4], [0.6]]
        "#;
        let k = Kernel::from_toml_str(text).unwrap();
        assert_eq!(k.variant(), &KernelVariant::Step { matrix: vec![vec![0.2, 0.4], vec![0.4, 0.6]] });
        assert_eq!(k.name(), Some("tri"));
    }

    #[test]
    fn overlap_needs_no_space() {
        let k = Kernel::from_toml_str("[variant]\nkind = \"overlap\"\nk = 2\neps = 0.01\n").unwrap();
        assert_eq!(k, Kernel::overlap(2, 0.01).unwrap());
        let bad = "[space]\nkind = \"interval\"\nlength = 3.0\n[variant]\nkind = \"overlap\"\nk = 2\neps = 0.01\n";
        assert!(Kernel::from_toml_str(bad).is_err());
    }

    #[test]
    fn bad_files_are_rejected() {
        assert!(Kernel::from_toml_str("[variant]\nkind = \"step\"\nmatrix = [[1.0]]\n").is_err());
        assert!(Kernel::from_toml_str("[variant]\nkind = \"wobbly\"\n").is_err());
        assert!(matches!(
            Kernel::load("/nonexistent/k.toml"),
            Err(Error::Io { .. })
        ));
    }
}
