//! The three hard families behind one tagged type, and their JSON document.

pub mod maxcoord;
pub mod nemyud;

pub use maxcoord::{maxcoord_params, recover_z, MaxCoordInstance, Sign};
pub use nemyud::{cone_width, nemyud_max, nemyud_params, NemYudInstance, NemYudParams};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseVector;
use crate::oracle::{FirstOrderOracle, OracleAnswer};
use crate::random::{OrthonormalTuple, RngStream};
use crate::wall::{WallInstance, WallParams};

/// Version of the instance document schema.
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    MaxCoord,
    NemYud,
    Wall,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::MaxCoord, Family::NemYud, Family::Wall];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::MaxCoord => "maxcoord",
            Family::NemYud => "nemyud",
            Family::Wall => "wall",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown family {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    MaxCoord(MaxCoordInstance),
    NemYud(NemYudInstance),
    Wall(WallInstance),
}

impl Instance {
    /// A random instance of `family` for accuracy `ε`. Families whose nominal
    /// dimension is huge are embedded in `min(ambient_dim, n)` dimensions.
    pub fn generate(
        family: Family,
        epsilon: f64,
        ambient_dim: Option<usize>,
        rng: RngStream,
    ) -> Result<Self> {
        let mut g = rng.generator();
        Ok(match family {
            Family::MaxCoord => {
                Instance::MaxCoord(MaxCoordInstance::from_epsilon(epsilon, &mut g)?)
            }
            Family::NemYud => {
                Instance::NemYud(NemYudInstance::from_epsilon(epsilon, ambient_dim, &mut g)?)
            }
            Family::Wall => {
                Instance::Wall(WallInstance::from_epsilon(epsilon, ambient_dim, &mut g)?)
            }
        })
    }

    pub fn family(&self) -> Family {
        match self {
            Instance::MaxCoord(_) => Family::MaxCoord,
            Instance::NemYud(_) => Family::NemYud,
            Instance::Wall(_) => Family::Wall,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Instance::MaxCoord(i) => i.epsilon(),
            Instance::NemYud(i) => i.epsilon(),
            Instance::Wall(i) => i.epsilon(),
        }
    }

    /// Nominal dimension the parameters were derived for.
    pub fn nominal_n(&self) -> u64 {
        match self {
            Instance::MaxCoord(i) => i.n() as u64,
            Instance::NemYud(i) => i.nominal_n(),
            Instance::Wall(i) => i.params().n,
        }
    }

    /// A point whose value is known in closed form, and that value bound:
    /// the exact minimizer for MaxCoord, `x̃ = -(1/√k) Σ v_i` otherwise.
    pub fn reference(&self) -> Result<(DenseVector, f64)> {
        match self {
            Instance::MaxCoord(i) => Ok(i.optimum()),
            Instance::NemYud(i) => {
                let x = i.reference_point();
                let f = i.value(&x)?;
                Ok((x, f))
            }
            Instance::Wall(i) => {
                let x = i.reference_point();
                let f = i.value(&x)?;
                Ok((x, f))
            }
        }
    }

    pub fn to_document(&self, seed: Option<u64>) -> InstanceDocument {
        let base = InstanceDocument {
            format: FORMAT_VERSION,
            family: self.family(),
            n: self.nominal_n(),
            ambient_dim: self.dim(),
            k: None,
            epsilon: self.epsilon(),
            gamma: None,
            delta: None,
            alpha: None,
            beta: None,
            seed,
            z: None,
            v: None,
        };
        match self {
            Instance::MaxCoord(i) => InstanceDocument {
                z: Some(i.z().to_vec()),
                ..base
            },
            Instance::NemYud(i) => InstanceDocument {
                k: Some(i.k()),
                gamma: Some(i.gamma()),
                v: Some(i.directions().clone()),
                ..base
            },
            Instance::Wall(i) => {
                let p = i.params();
                InstanceDocument {
                    k: Some(p.k),
                    gamma: Some(p.gamma),
                    delta: Some(p.delta),
                    alpha: Some(p.alpha),
                    beta: Some(p.beta),
                    v: Some(i.directions().clone()),
                    ..base
                }
            }
        }
    }

    pub fn to_json(&self, seed: Option<u64>) -> String {
        serde_json::to_string_pretty(&self.to_document(seed)).expect("instance documents serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: InstanceDocument =
            serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: InstanceDocument) -> Result<Self> {
        if doc.format != FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported format version {}",
                doc.format
            )));
        }
        let missing = |field: &str| Error::Format(format!("{} document lacks {field}", doc.family));
        let inst = match doc.family {
            Family::MaxCoord => {
                let z = doc.z.ok_or_else(|| missing("z"))?;
                if z.len() as u64 != doc.n {
                    return Err(Error::Format(format!(
                        "z has {} entries but n = {}",
                        z.len(),
                        doc.n
                    )));
                }
                Instance::MaxCoord(MaxCoordInstance::new(z)?.with_epsilon(doc.epsilon))
            }
            Family::NemYud => {
                let v = doc.v.ok_or_else(|| missing("v"))?;
                let gamma = doc.gamma.ok_or_else(|| missing("gamma"))?;
                check_k(doc.k, &v)?;
                Instance::NemYud(NemYudInstance::new(v, gamma, doc.n)?.with_epsilon(doc.epsilon))
            }
            Family::Wall => {
                let v = doc.v.ok_or_else(|| missing("v"))?;
                check_k(doc.k, &v)?;
                let params = WallParams {
                    k: v.k(),
                    n: doc.n,
                    delta: doc.delta.ok_or_else(|| missing("delta"))?,
                    alpha: doc.alpha.ok_or_else(|| missing("alpha"))?,
                    beta: doc.beta.ok_or_else(|| missing("beta"))?,
                    gamma: doc.gamma.ok_or_else(|| missing("gamma"))?,
                };
                if !(params.delta > 0.0 && params.delta < 1.0 && params.alpha > 0.0) {
                    return Err(Error::Format(
                        "delta must lie in (0, 1) and alpha be positive".into(),
                    ));
                }
                Instance::Wall(WallInstance::new(params, v)?.with_epsilon(doc.epsilon))
            }
        };
        if inst.dim() != doc.ambient_dim {
            return Err(Error::Format(format!(
                "ambient_dim = {} but the hidden data has dimension {}",
                doc.ambient_dim,
                inst.dim()
            )));
        }
        Ok(inst)
    }
}

fn check_k(k: Option<usize>, v: &OrthonormalTuple) -> Result<()> {
    match k {
        Some(k) if k != v.k() => Err(Error::Format(format!(
            "k = {k} but v holds {} vectors",
            v.k()
        ))),
        _ => Ok(()),
    }
}

/// Serialized form of an [`Instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub format: u32,
    pub family: Family,
    /// Nominal dimension.
    pub n: u64,
    /// Dimension the hidden data is stored in (equal to `n` unless embedded).
    pub ambient_dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<Vec<Sign>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<OrthonormalTuple>,
}

impl FirstOrderOracle for Instance {
    fn dim(&self) -> usize {
        match self {
            Instance::MaxCoord(i) => i.dim(),
            Instance::NemYud(i) => i.dim(),
            Instance::Wall(i) => i.dim(),
        }
    }

    fn value(&self, x: &DenseVector) -> Result<f64> {
        match self {
            Instance::MaxCoord(i) => i.value(x),
            Instance::NemYud(i) => i.value(x),
            Instance::Wall(i) => i.value(x),
        }
    }

    fn answer(&self, x: &DenseVector) -> Result<OracleAnswer> {
        match self {
            Instance::MaxCoord(i) => i.answer(x),
            Instance::NemYud(i) => i.answer(x),
            Instance::Wall(i) => i.answer(x),
        }
    }

    fn lipschitz_bound(&self) -> f64 {
        match self {
            Instance::MaxCoord(i) => i.lipschitz_bound(),
            Instance::NemYud(i) => i.lipschitz_bound(),
            Instance::Wall(i) => i.lipschitz_bound(),
        }
    }

    fn positively_homogeneous(&self) -> bool {
        match self {
            Instance::MaxCoord(i) => i.positively_homogeneous(),
            Instance::NemYud(i) => i.positively_homogeneous(),
            Instance::Wall(i) => i.positively_homogeneous(),
        }
    }
}
