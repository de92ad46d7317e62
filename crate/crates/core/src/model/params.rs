//! Physical parameters, derived dimensionless groups and config ingestion.

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Every rate, coupling and detuning of the rotating-frame model.
///
/// Stored in units of γ when ingested from MHz; otherwise in whatever
/// frequency unit the caller used (all formulas carry γ explicitly).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    #[serde(rename = "N")]
    pub n_qutrits: usize,
    pub gamma0: f64,
    pub gamma1: f64,
    pub gamma_g1: f64,
    pub gamma_g2: f64,
    pub kappa: f64,
    #[serde(rename = "g_A")]
    pub g_a: f64,
    #[serde(rename = "g_B")]
    pub g_b: f64,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "Omega1")]
    pub omega1: f64,
    #[serde(rename = "Omega2")]
    pub omega2: f64,
    pub delta: f64,
    #[serde(rename = "Delta_e1")]
    pub delta_e1: f64,
    #[serde(rename = "Delta_e2")]
    pub delta_e2: f64,
    pub n_max: usize,
    /// γ/2π in MHz when the parameters came from MHz input; used to quote
    /// durations in microseconds.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma_mhz: Option<f64>,
}

/// Dimensionless groups built from [`SystemParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derived {
    pub gamma: f64,
    pub c_a: f64,
    pub c_b: f64,
    pub alpha: f64,
    pub beta: f64,
    /// J/κ.
    pub g: f64,
    /// G/√C_B.
    pub lambda: f64,
    pub warnings: Vec<String>,
}

const REGIME_WARN_RATIO: f64 = 0.2;

pub const DEFAULT_N_QUTRITS: usize = 2;

impl SystemParams {
    /// Caption-rule parameter set used by the CZ figures: κ = 10γ,
    /// γ₀ = γ₁ = γ/2, γ_g1 = γ_g2 = γ, g_A = g_B, Ω₁ = Δ_e1/(10 C_B^{1/4}),
    /// Ω₂ = 4γ C_B^{1/4}.
    pub fn caption(c_b: f64, lambda: f64, delta_e1: f64) -> Self {
        let spec = ParamSpec {
            c_b: Some(c_b),
            lambda: Some(lambda),
            delta_e1: Some(delta_e1),
            drive_rule: Some(DriveRule::Caption),
            ..ParamSpec::default()
        };
        spec.resolve().expect("caption parameters are always consistent")
    }

    pub fn gamma(&self) -> f64 {
        self.gamma0 + self.gamma1
    }

    /// Ω̃ = Ω₁Ω₂/(2Δ_e1).
    pub fn omega_tilde(&self) -> Result<f64, ModelError> {
        if self.delta_e1 == 0.0 {
            return Err(ModelError::ZeroDeltaE1);
        }
        Ok(self.omega1 * self.omega2 / (2.0 * self.delta_e1))
    }

    /// Checks signs and returns the derived groups plus regime warnings.
    pub fn validate(&self) -> Result<Derived, ModelError> {
        let rates = [
            ("gamma0", self.gamma0),
            ("gamma1", self.gamma1),
            ("gamma_g1", self.gamma_g1),
            ("gamma_g2", self.gamma_g2),
            ("kappa", self.kappa),
            ("g_A", self.g_a),
            ("g_B", self.g_b),
            ("J", self.j),
            ("Omega1", self.omega1),
            ("Omega2", self.omega2),
        ];
        for (name, v) in rates {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
            if v < 0.0 {
                return Err(ModelError::NegativeRate { name, value: v });
            }
        }
        for (name, v) in [
            ("delta", self.delta),
            ("Delta_e1", self.delta_e1),
            ("Delta_e2", self.delta_e2),
        ] {
            if !v.is_finite() {
                return Err(ModelError::NonFinite(name));
            }
        }
        if self.gamma() == 0.0 {
            return Err(ModelError::ZeroGamma);
        }
        if self.n_max < 1 {
            return Err(ModelError::NMaxTooSmall(self.n_max));
        }
        let gamma = self.gamma();
        let c_b = self.g_b * self.g_b / (self.kappa * gamma);
        let c_a = self.g_a * self.g_a / (self.kappa * gamma);
        let g = self.j / self.kappa;
        let d = Derived {
            gamma,
            c_a,
            c_b,
            alpha: (self.g_a / self.g_b).powi(2),
            beta: self.gamma_g2 / gamma,
            g,
            lambda: g / c_b.sqrt(),
            warnings: self.regime_warnings(),
        };
        Ok(d)
    }

    fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let de1 = self.delta_e1.abs();
        if de1 > 0.0 {
            if self.omega1 / de1 >= REGIME_WARN_RATIO {
                out.push(format!(
                    "Omega1/Delta_e1 = {:.3} >= {REGIME_WARN_RATIO}: effective model unreliable",
                    self.omega1 / de1
                ));
            }
            if self.omega2 / de1 >= REGIME_WARN_RATIO {
                out.push(format!(
                    "Omega2/Delta_e1 = {:.3} >= {REGIME_WARN_RATIO}: effective model unreliable",
                    self.omega2 / de1
                ));
            }
        }
        if self.j > 0.0 && self.kappa / self.j >= REGIME_WARN_RATIO {
            out.push(format!(
                "kappa/J = {:.3} >= {REGIME_WARN_RATIO}: effective model unreliable",
                self.kappa / self.j
            ));
        }
        out
    }

    /// Converts a duration in units of 1/γ to microseconds, if γ/2π is known.
    pub fn microseconds(&self, t_gamma: f64) -> Option<f64> {
        self.gamma_mhz
            .map(|mhz| t_gamma / (2.0 * std::f64::consts::PI * mhz))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Units {
    /// Frequencies already expressed in units of γ.
    #[default]
    #[serde(rename = "gamma")]
    Gamma,
    /// Frequencies given as ω/2π in MHz; divided by γ/2π on ingestion.
    #[serde(rename = "MHz")]
    Mhz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriveRule {
    /// Ω₁ = Δ_e1/(10 C_B^{1/4}), Ω₂ = 4γ C_B^{1/4}.
    #[serde(rename = "caption")]
    Caption,
}

/// Config-file view of the parameters. Any physical quantity may be given
/// directly or through its dimensionless group (e.g. `C_B` instead of `g_B`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    #[serde(rename = "N")]
    pub n_qutrits: Option<usize>,
    pub n_max: Option<usize>,
    pub units: Option<Units>,
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma_g1: Option<f64>,
    pub gamma_g2: Option<f64>,
    pub kappa: Option<f64>,
    #[serde(rename = "g_A")]
    pub g_a: Option<f64>,
    #[serde(rename = "g_B")]
    pub g_b: Option<f64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    #[serde(rename = "Omega1")]
    pub omega1: Option<f64>,
    #[serde(rename = "Omega2")]
    pub omega2: Option<f64>,
    pub delta: Option<f64>,
    #[serde(rename = "Delta_e1")]
    pub delta_e1: Option<f64>,
    #[serde(rename = "Delta_e2")]
    pub delta_e2: Option<f64>,
    #[serde(rename = "C_A")]
    pub c_a: Option<f64>,
    #[serde(rename = "C_B")]
    pub c_b: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    #[serde(rename = "G")]
    pub g: Option<f64>,
    pub lambda: Option<f64>,
    pub drive_rule: Option<DriveRule>,
}

fn exclusive<T: Copy>(
    a: Option<T>,
    b: Option<T>,
    names: &'static str,
) -> Result<(Option<T>, Option<T>), ModelError> {
    if a.is_some() && b.is_some() {
        return Err(ModelError::Conflict(names));
    }
    Ok((a, b))
}

impl ParamSpec {
    pub fn from_toml(text: &str) -> Result<Self, ModelError> {
        toml::from_str(text).map_err(|e| ModelError::Config(e.to_string()))
    }

    /// Overlays `other` on `self`: fields set in `other` win.
    pub fn merged(&self, other: &ParamSpec) -> ParamSpec {
        macro_rules! pick {
            ($($f:ident),*) => { ParamSpec { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            n_qutrits, n_max, units, gamma0, gamma1, gamma_g1, gamma_g2, kappa, g_a, g_b, j,
            omega1, omega2, delta, delta_e1, delta_e2, c_a, c_b, alpha, beta, g, lambda,
            drive_rule
        )
    }

    /// Fills defaults, converts units and expands dimensionless groups.
    ///
    /// Defaults follow the figure conventions: N = 2, n_max = 2,
    /// γ₀ = γ₁ = γ/2, γ_g1 = γ_g2 = γ, κ = 10γ, α = 1, δ = Δ_e2 = 0,
    /// Δ_e1 = 100γ.
    pub fn resolve(&self) -> Result<SystemParams, ModelError> {
        let units = self.units.unwrap_or_default();
        let (gamma0_in, gamma1_in) = match (units, self.gamma0, self.gamma1) {
            (_, Some(a), Some(b)) => (a, b),
            (Units::Gamma, a, b) => (a.unwrap_or(0.5), b.unwrap_or(0.5)),
            (Units::Mhz, _, _) => {
                return Err(ModelError::Config("MHz units need gamma0 and gamma1".into()))
            }
        };
        let (scale, gamma_mhz) = match units {
            Units::Gamma => (1.0, None),
            Units::Mhz => {
                let g = gamma0_in + gamma1_in;
                if g <= 0.0 {
                    return Err(ModelError::ZeroGamma);
                }
                (1.0 / g, Some(g))
            }
        };
        // Rates and frequencies scale; dimensionless groups do not.
        let f = |v: Option<f64>| v.map(|x| x * scale);
        let gamma0 = gamma0_in * scale;
        let gamma1 = gamma1_in * scale;
        let gamma = gamma0 + gamma1;
        let kappa = f(self.kappa).unwrap_or(10.0 * gamma);

        let (gg2, beta) = exclusive(f(self.gamma_g2), self.beta, "gamma_g2 / beta")?;
        let gamma_g2 = gg2.or(beta.map(|b| b * gamma)).unwrap_or(gamma);
        let gamma_g1 = f(self.gamma_g1).unwrap_or(gamma);

        let (gb, cb) = exclusive(f(self.g_b), self.c_b, "g_B / C_B")?;
        let g_b = match (gb, cb) {
            (Some(g), _) => g,
            (None, Some(c)) => {
                if c < 0.0 {
                    return Err(ModelError::NegativeRate { name: "C_B", value: c });
                }
                (c * kappa * gamma).sqrt()
            }
            (None, None) => return Err(ModelError::Missing("g_B or C_B")),
        };
        let c_b = g_b * g_b / (kappa * gamma);

        if [f(self.g_a).is_some(), self.c_a.is_some(), self.alpha.is_some()]
            .iter()
            .filter(|x| **x)
            .count()
            > 1
        {
            return Err(ModelError::Conflict("g_A / C_A / alpha"));
        }
        let g_a = if let Some(g) = f(self.g_a) {
            g
        } else if let Some(c) = self.c_a {
            (c * kappa * gamma).sqrt()
        } else {
            self.alpha.unwrap_or(1.0).sqrt() * g_b
        };

        if [f(self.j).is_some(), self.g.is_some(), self.lambda.is_some()]
            .iter()
            .filter(|x| **x)
            .count()
            > 1
        {
            return Err(ModelError::Conflict("J / G / lambda"));
        }
        let j = if let Some(j) = f(self.j) {
            j
        } else if let Some(g) = self.g {
            g * kappa
        } else if let Some(l) = self.lambda {
            l * kappa * c_b.sqrt()
        } else {
            return Err(ModelError::Missing("J, G or lambda"));
        };

        let delta_e1 = f(self.delta_e1).unwrap_or(100.0 * gamma);
        let (omega1, omega2) = match self.drive_rule {
            Some(DriveRule::Caption) => {
                if self.omega1.is_some() || self.omega2.is_some() {
                    return Err(ModelError::Conflict("Omega1/Omega2 / drive_rule"));
                }
                let q = c_b.powf(0.25);
                (delta_e1 / (10.0 * q), 4.0 * gamma * q)
            }
            None => (
                f(self.omega1).ok_or(ModelError::Missing("Omega1 or drive_rule"))?,
                f(self.omega2).ok_or(ModelError::Missing("Omega2 or drive_rule"))?,
            ),
        };

        let p = SystemParams {
            n_qutrits: self.n_qutrits.unwrap_or(DEFAULT_N_QUTRITS),
            gamma0,
            gamma1,
            gamma_g1,
            gamma_g2,
            kappa,
            g_a,
            g_b,
            j,
            omega1,
            omega2,
            delta: f(self.delta).unwrap_or(0.0),
            delta_e1,
            delta_e2: f(self.delta_e2).unwrap_or(0.0),
            n_max: self.n_max.unwrap_or(2),
            gamma_mhz,
        };
        p.validate()?;
        Ok(p)
    }
}
