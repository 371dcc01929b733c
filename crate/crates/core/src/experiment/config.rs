use serde::{Deserialize, Serialize};

use crate::bec::{InteractionSpec, SequenceFixture, SlopeTest};
use crate::error::{Error, Result};
use crate::free_balls::CnRule;
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Vacancy,
    Clusters,
    Tail,
    Scaling,
    NuC,
    FreeBalls,
    Clearing,
    BecPartition,
    BecEnergy,
    BecConditions,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Vacancy,
        ExperimentKind::Clusters,
        ExperimentKind::Tail,
        ExperimentKind::Scaling,
        ExperimentKind::NuC,
        ExperimentKind::FreeBalls,
        ExperimentKind::Clearing,
        ExperimentKind::BecPartition,
        ExperimentKind::BecEnergy,
        ExperimentKind::BecConditions,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Vacancy => "vacancy",
            ExperimentKind::Clusters => "clusters",
            ExperimentKind::Tail => "tail",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::NuC => "nu-c",
            ExperimentKind::FreeBalls => "free-balls",
            ExperimentKind::Clearing => "clearing",
            ExperimentKind::BecPartition => "bec-partition",
            ExperimentKind::BecEnergy => "bec-energy",
            ExperimentKind::BecConditions => "bec-conditions",
        }
    }
}

/// One experiment. Every field except `kind` has a default, and the resolved
/// file written next to the results lists all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default = "defaults::trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: String,
    /// Uniform vacancy samples per trial.
    #[serde(default = "defaults::samples")]
    pub samples: usize,
    /// Largest cluster size in the tail fit.
    #[serde(default = "defaults::n_max")]
    pub n_max: usize,
    /// Critical intensity; tail and scaling runs at or below it are refused.
    #[serde(default)]
    pub nu_c: Option<f64>,
    #[serde(default, rename = "L_list")]
    pub l_list: Vec<f64>,
    #[serde(default)]
    pub nu_grid: Vec<f64>,
    #[serde(default, rename = "N_seq")]
    pub n_seq: Vec<u64>,
    /// Particle density used with `N_seq`: `L = (N / rho)^(1/d)`.
    #[serde(default = "defaults::one")]
    pub rho: f64,
    #[serde(default)]
    pub c_n: CnRule,
    #[serde(default = "defaults::probe_budget")]
    pub probe_budget: usize,
    /// Field cells per lattice box side for states on a cluster.
    #[serde(default = "defaults::subdivision")]
    pub subdivision: usize,
    /// Partition cell side; `a / sqrt(d)` when absent.
    #[serde(default)]
    pub cell_side: Option<f64>,
    #[serde(default)]
    pub interaction: InteractionSpec,
    /// With `Some(eps)` the floor becomes `b / (N^eps ln^2 N)`.
    #[serde(default)]
    pub b_decay: Option<f64>,
    #[serde(default = "defaults::one")]
    pub beta: f64,
    /// Sequence fixtures; the built-in rate fixtures when empty.
    #[serde(default)]
    pub fixtures: Vec<SequenceFixture>,
    #[serde(default)]
    pub slope_test: SlopeTest,
}

mod defaults {
    pub fn trials() -> usize {
        100
    }
    pub fn out_dir() -> String {
        "out".to_string()
    }
    pub fn samples() -> usize {
        10_000
    }
    pub fn n_max() -> usize {
        200
    }
    pub fn one() -> f64 {
        1.0
    }
    pub fn probe_budget() -> usize {
        256
    }
    pub fn subdivision() -> usize {
        8
    }
}

impl ExperimentConfig {
    /// Defaults for `kind`, with small sweeps filled in where the kind needs one.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        let mut c: ExperimentConfig =
            serde_json::from_value(serde_json::json!({ "kind": kind })).expect("defaults deserialize");
        match kind {
            ExperimentKind::Scaling => {
                c.model.radius = 1.0;
                c.model.nu = 1.6;
                c.l_list = vec![10.0, 20.0, 40.0];
            }
            ExperimentKind::NuC => {
                c.model.radius = 1.0;
                c.l_list = vec![16.0, 32.0];
                c.nu_grid = vec![0.6, 0.8, 1.0, 1.2, 1.4, 1.6];
            }
            ExperimentKind::Tail | ExperimentKind::Clusters => {
                c.model.radius = 1.0;
                c.model.nu = 1.6;
            }
            ExperimentKind::BecEnergy => {
                c.n_seq = vec![64, 256, 1024];
                c.b_decay = Some(0.1);
                c.trials = 4;
            }
            _ => {}
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        use ExperimentKind as K;
        self.model.validate()?;
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {v}")))
            }
        };
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        if self.samples == 0 {
            return Err(Error::param("samples", "must be at least 1"));
        }
        if self.probe_budget == 0 {
            return Err(Error::param("probe_budget", "must be at least 1"));
        }
        if self.subdivision == 0 {
            return Err(Error::param("subdivision", "must be at least 1"));
        }
        if self.out_dir.is_empty() {
            return Err(Error::param("out_dir", "must not be empty"));
        }
        positive("rho", self.rho)?;
        positive("beta", self.beta)?;
        if let Some(r) = self.cell_side {
            positive("cell_side", r)?;
        }
        if let Some(nc) = self.nu_c {
            if !(nc >= 0.0 && nc.is_finite()) {
                return Err(Error::param("nu_c", format!("must be non-negative, got {nc}")));
            }
        }
        if let Some(e) = self.b_decay {
            if !(e >= 0.0 && e.is_finite()) {
                return Err(Error::param("b_decay", format!("must be non-negative, got {e}")));
            }
        }
        self.interaction.validate()?;
        self.c_n.validate()?;
        if self.l_list.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::param("L_list", "entries must be positive"));
        }
        if self.nu_grid.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::param("nu_grid", "entries must be non-negative"));
        }
        if self.n_seq.iter().any(|&n| n < 2) {
            return Err(Error::param("N_seq", "entries must be at least 2"));
        }
        match self.kind {
            K::Scaling | K::NuC if self.l_list.len() < 2 => {
                return Err(Error::param("L_list", "needs at least two box sides"));
            }
            K::NuC if self.nu_grid.len() < 2 => {
                return Err(Error::param("nu_grid", "needs at least two intensities"));
            }
            K::BecEnergy if self.n_seq.is_empty() => {
                return Err(Error::param("N_seq", "needs at least one particle number"));
            }
            K::Vacancy | K::Clusters | K::Tail | K::Clearing | K::BecPartition if self.model.nu == 0.0 => {
                return Err(Error::param("nu", "must be positive for sampled configurations"));
            }
            K::FreeBalls | K::BecPartition if self.n_seq.is_empty() && self.model.particles < 2 => {
                return Err(Error::param("particles", "needs N >= 2"));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let c: ExperimentConfig = serde_json::from_str(text)?;
    c.validate()?;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_has_valid_defaults() {
        for k in ExperimentKind::ALL {
            let c = ExperimentConfig::for_kind(k);
            c.validate().unwrap();
            let back = parse_config(&c.to_json()).unwrap();
            assert_eq!(back, c, "{}", k.name());
            let name = serde_json::to_value(k).unwrap();
            assert_eq!(name.as_str(), Some(k.name()));
        }
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        assert!(parse_config(r#"{"kind":"vacancy","bogus":1}"#).is_err());
        assert!(parse_config(r#"{"kind":"vacancy","model":{"d":2,"nu":1,"radius":0.5,"side":4,"particles":1,"x":0}}"#).is_err());
        assert!(parse_config(r#"{"kind":"vacancy","model":{"d":2,"nu":-0.5,"radius":0.5,"side":40,"particles":1}}"#).is_err());
        assert!(parse_config(r#"{"kind":"teleport"}"#).is_err());
        assert!(parse_config(r#"{"kind":"scaling","L_list":[10]}"#).is_err());
        assert!(parse_config(r#"{"kind":"bec-energy"}"#).is_err());
        assert!(parse_config(r#"{"kind":"vacancy","trials":0}"#).is_err());
    }

    #[test]
    fn minimal_document_fills_defaults() {
        let c = parse_config(r#"{"kind":"free-balls","c_n":{"ln_power":2.0},"N_seq":[1000]}"#).unwrap();
        assert_eq!(c.trials, 100);
        assert_eq!(c.c_n, CnRule::LnPower(2.0));
        assert!(c.to_json().contains("\"slope_threshold\": 0.05"));
    }
}
