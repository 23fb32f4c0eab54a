//! Model selector shared by configuration files: `{"model": "plm" | "cox", "dgp": {...}}`.

use serde::{Deserialize, Serialize};

use crate::cox::{self, CoxDgp};
use crate::error::Result;
use crate::plm::{self, PlmDgp};
use crate::quad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "dgp", rename_all = "kebab-case")]
pub enum ModelSpec {
    Plm(PlmDgp),
    Cox(CoxDgp),
}

impl ModelSpec {
    /// The standard DGP of the named model.
    pub fn standard(name: &str) -> Option<Self> {
        match name {
            "plm" => Some(ModelSpec::Plm(PlmDgp::standard())),
            "cox" => Some(ModelSpec::Cox(CoxDgp::standard())),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Plm(_) => "plm",
            ModelSpec::Cox(_) => "cox",
        }
    }

    pub fn theta0(&self) -> f64 {
        match self {
            ModelSpec::Plm(d) => d.theta0,
            ModelSpec::Cox(d) => d.theta0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::Plm(d) => d.validate(),
            ModelSpec::Cox(d) => d.validate(),
        }
    }

    /// `J` of the semiparametric model.
    pub fn efficient_information(&self) -> Result<f64> {
        match self {
            ModelSpec::Plm(d) => plm::efficient_info_plm(d, None),
            ModelSpec::Cox(d) => Ok(cox::efficient_info_cox(d, quad::DEFAULT_PANELS)?.j),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Wrapper {
        #[serde(flatten)]
        model: ModelSpec,
        n: usize,
    }

    #[test]
    fn flattened_json_shape() {
        let w = Wrapper {
            model: ModelSpec::standard("cox").unwrap(),
            n: 5,
        };
        let s = serde_json::to_string(&w).unwrap();
        assert!(s.starts_with("{\"model\":\"cox\",\"dgp\":{"));
        assert_eq!(serde_json::from_str::<Wrapper>(&s).unwrap(), w);
        let plm: Wrapper = serde_json::from_str(
            r#"{"model":"plm","n":3,"dgp":{"theta0":1.0,"eta0":{"kind":"polynomial","coefficients":[0,0,1]},
               "b0":{"kind":"sine","amplitude":1,"frequency":1},"sigma":1,"w_noise_sd":1}}"#,
        )
        .unwrap();
        assert_eq!(plm.model, ModelSpec::standard("plm").unwrap());
    }
}
