//! Normalized LMS channel estimators with optional sparse penalties and
//! error-driven step-size control.
//!
//! Every variant is a combination of two orthogonal choices:
//!
//! * a step-size policy: invariable (`Iss`, fixed `mu`) or variable (`Vss`,
//!   `mu_max * |p|^2 / (|p|^2 + C)` driven by a smoothed projection vector);
//! * a sparse penalty subtracted after the normalized gradient step: none,
//!   zero-attracting (`rho * sgn(w)`) or reweighted zero-attracting
//!   (`rho * sgn(w) / (1 + eps |w|)`).
//!
//! ```text
//! e(n)     = y(n) - w(n)^T x(n)
//! p(n+1)   = beta p(n) + (1 - beta) x(n) e(n) / (x^T x)        (VSS only)
//! mu(n+1)  = mu_max |p(n+1)|^2 / (|p(n+1)|^2 + C)                (VSS only)
//! w(n+1)   = w(n) + mu e(n) x(n) / (x^T x) - penalty(w(n))
//! ```

mod filter;
mod penalty;
mod vss;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use filter::{
    compute_error, run_until_stop, step, FilterState, StepOutcome, StopCriterion, StopReason,
    TrialTrace, ENERGY_FLOOR,
};
pub use penalty::{rza_penalty, sign, sign_vector, za_penalty};
pub use vss::{vss_step_size, vss_update_projection};

/// How the gradient step size is chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StepPolicy {
    Invariable,
    Variable,
}

/// Sparsity-promoting term subtracted from each update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Penalty {
    None,
    ZeroAttracting,
    Reweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    IssNlms,
    IssZaNlms,
    IssRzaNlms,
    VssNlms,
    VssZaNlms,
    VssRzaNlms,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::IssNlms,
        Variant::IssZaNlms,
        Variant::IssRzaNlms,
        Variant::VssNlms,
        Variant::VssZaNlms,
        Variant::VssRzaNlms,
    ];

    pub fn step_policy(self) -> StepPolicy {
        match self {
            Variant::IssNlms | Variant::IssZaNlms | Variant::IssRzaNlms => StepPolicy::Invariable,
            Variant::VssNlms | Variant::VssZaNlms | Variant::VssRzaNlms => StepPolicy::Variable,
        }
    }

    pub fn penalty(self) -> Penalty {
        match self {
            Variant::IssNlms | Variant::VssNlms => Penalty::None,
            Variant::IssZaNlms | Variant::VssZaNlms => Penalty::ZeroAttracting,
            Variant::IssRzaNlms | Variant::VssRzaNlms => Penalty::Reweighted,
        }
    }

    pub fn is_variable(self) -> bool {
        self.step_policy() == StepPolicy::Variable
    }

    pub fn from_parts(policy: StepPolicy, penalty: Penalty) -> Variant {
        match (policy, penalty) {
            (StepPolicy::Invariable, Penalty::None) => Variant::IssNlms,
            (StepPolicy::Invariable, Penalty::ZeroAttracting) => Variant::IssZaNlms,
            (StepPolicy::Invariable, Penalty::Reweighted) => Variant::IssRzaNlms,
            (StepPolicy::Variable, Penalty::None) => Variant::VssNlms,
            (StepPolicy::Variable, Penalty::ZeroAttracting) => Variant::VssZaNlms,
            (StepPolicy::Variable, Penalty::Reweighted) => Variant::VssRzaNlms,
        }
    }

    /// Lower-case hyphenated identifier used in CLI flags, configs and CSVs.
    pub fn name(self) -> &'static str {
        match self {
            Variant::IssNlms => "iss-nlms",
            Variant::IssZaNlms => "iss-za-nlms",
            Variant::IssRzaNlms => "iss-rza-nlms",
            Variant::VssNlms => "vss-nlms",
            Variant::VssZaNlms => "vss-za-nlms",
            Variant::VssRzaNlms => "vss-rza-nlms",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let wanted = s.trim().to_ascii_lowercase().replace('_', "-");
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == wanted)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown algorithm '{s}' (expected one of: {})",
                    Variant::ALL.map(Variant::name).join(", ")
                ))
            })
    }
}

/// How strictly [`AlgorithmSpec::validate`] reads the step-size ranges.
///
/// `Paper` admits the boundary values used in the published settings
/// (`mu = 1`, `mu_max = 2`); `Strict` requires the open intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValidationLevel {
    Strict,
    #[default]
    Paper,
}

/// Variant selection plus every tuning parameter an update may need.
///
/// Parameters that a variant does not use are carried but ignored, so a
/// single spec can be re-targeted by changing `variant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub variant: Variant,
    /// Fixed step for ISS variants.
    pub mu: f64,
    /// Upper limit of the variable step.
    pub mu_max: f64,
    pub rho_za: f64,
    pub rho_rza: f64,
    pub eps_rza: f64,
    /// Smoothing factor of the projection vector.
    pub beta: f64,
    /// Threshold `C` in the variable step-size rule.
    pub threshold_c: f64,
    /// Drop the `x^T x` normalization for ISS-RZA-NLMS only.
    #[serde(default)]
    pub unnormalized_rza: bool,
}

impl AlgorithmSpec {
    pub const DEFAULT_BETA: f64 = 0.99;

    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            mu: 0.2,
            mu_max: 2.0,
            rho_za: 0.0,
            rho_rza: 0.0,
            eps_rza: 20.0,
            beta: Self::DEFAULT_BETA,
            threshold_c: 1e-5,
            unnormalized_rza: false,
        }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_mu_max(mut self, mu_max: f64) -> Self {
        self.mu_max = mu_max;
        self
    }

    pub fn with_rho_za(mut self, rho: f64) -> Self {
        self.rho_za = rho;
        self
    }

    pub fn with_rho_rza(mut self, rho: f64) -> Self {
        self.rho_rza = rho;
        self
    }

    pub fn with_eps_rza(mut self, eps: f64) -> Self {
        self.eps_rza = eps;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_threshold_c(mut self, c: f64) -> Self {
        self.threshold_c = c;
        self
    }

    pub fn with_unnormalized_rza(mut self, on: bool) -> Self {
        self.unnormalized_rza = on;
        self
    }

    pub fn validate(&self, level: ValidationLevel) -> Result<()> {
        let fail = |what: &str| Err(Error::config(format!("{}: {what}", self.variant)));
        let finite = [
            self.mu,
            self.mu_max,
            self.rho_za,
            self.rho_rza,
            self.eps_rza,
            self.beta,
            self.threshold_c,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return fail("all parameters must be finite");
        }
        let (mu_ok, mu_max_ok) = match level {
            ValidationLevel::Strict => (
                self.mu > 0.0 && self.mu < 1.0,
                self.mu_max > 0.0 && self.mu_max < 2.0,
            ),
            ValidationLevel::Paper => (
                self.mu > 0.0 && self.mu <= 1.0,
                self.mu_max > 0.0 && self.mu_max <= 2.0,
            ),
        };
        if !mu_ok {
            return fail(&format!("mu = {} outside the admitted range", self.mu));
        }
        if !mu_max_ok {
            return fail(&format!(
                "mu_max = {} outside the admitted range",
                self.mu_max
            ));
        }
        if self.rho_za < 0.0 || self.rho_rza < 0.0 {
            return fail("penalty weights must be non-negative");
        }
        if self.eps_rza <= 0.0 {
            return fail("eps_rza must be positive");
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return fail(&format!("beta = {} outside [0, 1]", self.beta));
        }
        if self.threshold_c <= 0.0 {
            return fail("threshold C must be positive");
        }
        Ok(())
    }
}
