use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use framesmith::builder::{random_free_polys, FreePoly};
use framesmith::factorization::SosOptions;
use framesmith::moments::self_dual_lambda;
use framesmith::{DilationMatrix, LambdaSet, MultiIndex};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub matrix: Vec<Vec<i64>>,
    pub vm_order: u32,
    #[serde(default)]
    pub lambda: LambdaConfig,
    #[serde(default)]
    pub free_polys: FreePolyConfig,
    #[serde(default)]
    pub free_polys_dual: FreePolyConfig,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Option<SosOptions>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
pub enum LambdaConfig {
    #[default]
    #[serde(skip)]
    Default,
    Named(String),
    SelfDual {
        self_dual: SelfDual,
    },
    Explicit(LambdaSet),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelfDual {
    /// Free imaginary parts, keyed by multi-index.
    #[serde(default)]
    pub imag: Vec<ImagEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagEntry {
    pub alpha: Vec<u32>,
    pub value: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(untagged)]
pub enum FreePolyConfig {
    #[default]
    #[serde(skip)]
    None,
    Random {
        random: RandomFree,
    },
    Explicit(Vec<FreePoly>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomFree {
    pub scale: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Config {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn dilation(&self) -> Result<DilationMatrix> {
        Ok(DilationMatrix::new(self.matrix.clone())?)
    }

    pub fn lambda(&self, d: usize) -> Result<LambdaSet> {
        let n = self.vm_order;
        let lambda = match &self.lambda {
            LambdaConfig::Default => LambdaSet::delta(n, d),
            LambdaConfig::Named(name) if name == "delta" => LambdaSet::delta(n, d),
            LambdaConfig::Named(name) => bail!("unknown lambda preset {name:?}"),
            LambdaConfig::SelfDual { self_dual } => {
                let imag: BTreeMap<MultiIndex, f64> = self_dual
                    .imag
                    .iter()
                    .map(|e| (MultiIndex(e.alpha.clone()), e.value))
                    .collect();
                if let Some(a) = imag.keys().find(|a| a.dim() != d) {
                    bail!("self_dual entry {:?} has the wrong dimension", a.0);
                }
                self_dual_lambda(n, d, &imag)
            }
            LambdaConfig::Explicit(l) => l.clone(),
        };
        Ok(lambda)
    }

    /// Free polynomials and the seed that generated them, if random.
    pub fn free(
        which: &FreePolyConfig,
        m: &DilationMatrix,
        bound: u32,
        seed_override: Option<u64>,
        salt: u64,
    ) -> Result<(Vec<FreePoly>, Option<u64>)> {
        Ok(match which {
            FreePolyConfig::None => (Vec::new(), None),
            FreePolyConfig::Explicit(v) => (v.clone(), None),
            FreePolyConfig::Random { random } => {
                let Some(seed) = seed_override.or(random.seed) else {
                    bail!("random free polynomials need a seed (config or --seed)");
                };
                (
                    random_free_polys(m, bound, random.scale, seed.wrapping_add(salt)),
                    Some(seed),
                )
            }
        })
    }
}
