use crate::error::{invalid, Error, Result};
use serde::{Deserialize, Serialize};

/// Damping `γ`, inverse mass `η` and step size `h` for each component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentumParams {
    pub gamma_theta: f64,
    pub eta_theta: f64,
    pub gamma_x: f64,
    pub eta_x: f64,
    pub h_theta: f64,
    pub h_x: f64,
}

impl MomentumParams {
    /// Same `(γ, η)` for both components.
    pub fn shared(gamma: f64, eta: f64, h_theta: f64, h_x: f64) -> Self {
        Self {
            gamma_theta: gamma,
            eta_theta: eta,
            gamma_x: gamma,
            eta_x: eta,
            h_theta,
            h_x,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h_theta", self.h_theta), ("h_x", self.h_x)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("gamma_theta", self.gamma_theta),
            ("eta_theta", self.eta_theta),
            ("gamma_x", self.gamma_x),
            ("eta_x", self.eta_x),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// NAG momentum coefficient `μ_θ = 1 − h_θ γ_θ η_θ`.
    pub fn mu_theta(&self) -> f64 {
        1.0 - self.h_theta * self.gamma_theta * self.eta_theta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "PGD")]
    Pgd,
    #[serde(rename = "MPD_EXP")]
    MpdExp,
    #[serde(rename = "MPD_NC")]
    MpdNc,
}

/// Where the gradients of an MPD step are evaluated: `FULL` uses `θ̄` for the
/// θ-block and the freshly updated `θ` for the x-block, `THETA_ONLY` corrects
/// the θ-block only, `NONE` uses the previous iterate for both.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Correction {
    #[serde(rename = "NONE")]
    None,
    #[serde(rename = "THETA_ONLY")]
    ThetaOnly,
    #[default]
    #[serde(rename = "FULL")]
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    pub algorithm: Algorithm,
    pub enrich_theta: bool,
    pub enrich_x: bool,
    #[serde(default)]
    pub gradient_correction: Correction,
}

impl VariantConfig {
    pub fn pgd() -> Self {
        Self {
            algorithm: Algorithm::Pgd,
            enrich_theta: false,
            enrich_x: false,
            gradient_correction: Correction::Full,
        }
    }

    pub fn mpd() -> Self {
        Self {
            algorithm: Algorithm::MpdExp,
            enrich_theta: true,
            enrich_x: true,
            gradient_correction: Correction::Full,
        }
    }

    pub fn nc() -> Self {
        Self {
            algorithm: Algorithm::MpdNc,
            ..Self::mpd()
        }
    }

    pub fn theta_only() -> Self {
        Self {
            enrich_x: false,
            ..Self::mpd()
        }
    }

    pub fn x_only() -> Self {
        Self {
            enrich_theta: false,
            ..Self::mpd()
        }
    }

    pub fn with_correction(self, gradient_correction: Correction) -> Self {
        Self {
            gradient_correction,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.algorithm {
            Algorithm::Pgd if self.enrich_theta || self.enrich_x => {
                Err(invalid("PGD does not take enrichment flags"))
            }
            Algorithm::MpdExp | Algorithm::MpdNc if !self.enrich_theta && !self.enrich_x => {
                Err(invalid("an MPD variant must enrich at least one component"))
            }
            _ => Ok(()),
        }
    }

    /// Checks the parameter constraints of the enriched components.
    pub fn validate_params(&self, p: &MomentumParams) -> Result<()> {
        self.validate()?;
        p.validate()?;
        if self.enrich_theta && p.gamma_theta * p.eta_theta <= 0.0 {
            return Err(Error::Degenerate(
                "gamma_theta * eta_theta must be positive on an enriched θ".into(),
            ));
        }
        if self.enrich_x && p.gamma_x * p.eta_x <= 0.0 {
            return Err(Error::Degenerate(
                "gamma_x * eta_x must be positive on an enriched x".into(),
            ));
        }
        if self.algorithm == Algorithm::MpdNc && self.enrich_theta {
            let mu = p.mu_theta();
            if !(0.0..1.0).contains(&mu) {
                return Err(invalid(format!(
                    "momentum coefficient 1 - h γ η = {mu} is outside [0, 1)"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_rules() {
        assert!(VariantConfig::pgd().validate().is_ok());
        assert!(VariantConfig::mpd().validate().is_ok());
        let bad = VariantConfig {
            enrich_theta: false,
            enrich_x: false,
            ..VariantConfig::mpd()
        };
        assert!(bad.validate().is_err());
        let bad = VariantConfig {
            enrich_theta: true,
            ..VariantConfig::pgd()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn degenerate_damping_is_rejected_only_where_enriched() {
        let mut p = MomentumParams::shared(0.7, 400.0, 1e-4, 1e-2);
        p.eta_x = 0.0;
        assert!(matches!(
            VariantConfig::mpd().validate_params(&p),
            Err(Error::Degenerate(_))
        ));
        assert!(VariantConfig::theta_only().validate_params(&p).is_ok());
        assert!(VariantConfig::pgd().validate_params(&p).is_ok());
    }

    #[test]
    fn nc_requires_mu_in_unit_interval() {
        let p = MomentumParams::shared(1.0, 2e4, 1e-4, 1e-2);
        assert!(VariantConfig::nc().validate_params(&p).is_err());
        let p = MomentumParams::shared(1.0, 5e3, 1e-4, 1e-2);
        assert!(VariantConfig::nc().validate_params(&p).is_ok());
    }

    #[test]
    fn serde_names() {
        let v: VariantConfig = serde_json::from_str(
            r#"{"algorithm":"MPD_EXP","enrich_theta":true,"enrich_x":false,"gradient_correction":"THETA_ONLY"}"#,
        )
        .unwrap();
        assert_eq!(
            v,
            VariantConfig::theta_only().with_correction(Correction::ThetaOnly)
        );
        let d: VariantConfig =
            serde_json::from_str(r#"{"algorithm":"PGD","enrich_theta":false,"enrich_x":false}"#)
                .unwrap();
        assert_eq!(d.gradient_correction, Correction::Full);
    }
}
