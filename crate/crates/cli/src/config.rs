use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use ttspec::hamiltonians::{HamiltonianSpec, Model};
use ttspec::{LocalSolver, SolverConfig};

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    Eigb,
    Deflation,
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eigb" => Ok(SolverKind::Eigb),
            "deflation" => Ok(SolverKind::Deflation),
            other => Err(format!("unknown solver `{other}` (eigb, deflation)")),
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Eigb => "eigb",
            SolverKind::Deflation => "deflation",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerifyMode {
    None,
    /// Closed-form Laplace spectrum and eigenvectors.
    ClosedForm,
    /// Dense diagonalization of the densified operator.
    DenseOracle,
}

impl FromStr for VerifyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(VerifyMode::None),
            "closed-form" => Ok(VerifyMode::ClosedForm),
            "dense-oracle" => Ok(VerifyMode::DenseOracle),
            other => Err(format!("unknown verification `{other}` (none, closed-form, dense-oracle)")),
        }
    }
}

impl fmt::Display for VerifyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerifyMode::None => "none",
            VerifyMode::ClosedForm => "closed-form",
            VerifyMode::DenseOracle => "dense-oracle",
        })
    }
}

/// Pass/fail thresholds of a verification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Absolute eigenvalue error.
    pub eigenvalue: f64,
    /// Largest principal angle per complete degenerate level, radians.
    pub angle: f64,
    /// `|A x - lambda x| / |x|` per state (dense oracle only).
    pub residual: f64,
}

impl Tolerances {
    pub fn for_mode(mode: VerifyMode) -> Self {
        match mode {
            VerifyMode::ClosedForm => Tolerances { eigenvalue: 1e-8, angle: 1e-6, residual: 1e-5 },
            _ => Tolerances { eigenvalue: 1e-6, angle: 1e-6, residual: 1e-5 },
        }
    }
}

/// One experiment: model, solver and verification.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub hamiltonian: HamiltonianSpec,
    pub solver: SolverKind,
    pub solver_config: SolverConfig,
    pub verify: VerifyMode,
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(hamiltonian: HamiltonianSpec, solver_config: SolverConfig) -> Self {
        Self {
            hamiltonian,
            solver: SolverKind::Eigb,
            solver_config,
            verify: VerifyMode::None,
            tolerances: Tolerances::for_mode(VerifyMode::None),
        }
    }

    pub fn with_verify(mut self, verify: VerifyMode) -> Self {
        self.verify = verify;
        self.tolerances = Tolerances::for_mode(verify);
        self
    }

    pub fn with_solver(mut self, solver: SolverKind) -> Self {
        self.solver = solver;
        self
    }

    /// Dimension of the full space, saturating.
    pub fn space_dim(&self) -> u128 {
        (0..self.hamiltonian.d).fold(1u128, |acc, _| acc.saturating_mul(self.hamiltonian.n as u128))
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.hamiltonian.validate().map_err(|e| Error::Usage(e.to_string()))?;
        self.solver_config.validate(&self.hamiltonian.mode_sizes()).map_err(|e| Error::Usage(e.to_string()))?;
        match self.verify {
            VerifyMode::ClosedForm if self.hamiltonian.model != Model::Laplace => {
                return Err(Error::Usage("closed-form verification is only available for the laplace model".into()));
            }
            VerifyMode::DenseOracle if self.space_dim() > self.solver_config.densify_cap as u128 => {
                return Err(Error::Usage(format!(
                    "dense-oracle verification needs N <= {} but N = {}",
                    self.solver_config.densify_cap,
                    self.space_dim()
                )));
            }
            _ => {}
        }
        Ok(())
    }

    pub fn echo(&self) -> ConfigEcho {
        let h = &self.hamiltonian;
        let c = &self.solver_config;
        ConfigEcho {
            model: h.model.name().to_string(),
            d: h.d,
            n: h.n,
            lambda: (h.model == Model::HenonHeiles).then_some(h.lambda),
            solver: self.solver,
            b: c.num_states,
            eps: c.eps,
            rmax: c.rmax,
            max_sweeps: c.max_sweeps,
            conv_tol: c.effective_conv_tol(),
            local_solver: local_solver_name(c.local_solver).to_string(),
            local_size_threshold: c.local_size_threshold,
            initial_rank: c.initial_rank,
            seed: c.seed,
            verify: self.verify,
            tolerances: self.tolerances,
        }
    }
}

pub fn local_solver_name(s: LocalSolver) -> &'static str {
    match s {
        LocalSolver::Dense => "dense",
        LocalSolver::Iterative => "iterative",
        LocalSolver::Auto => "auto",
    }
}

pub fn parse_local_solver(s: &str) -> Result<LocalSolver, String> {
    match s {
        "dense" => Ok(LocalSolver::Dense),
        "iterative" => Ok(LocalSolver::Iterative),
        "auto" => Ok(LocalSolver::Auto),
        other => Err(format!("unknown local solver `{other}` (dense, iterative, auto)")),
    }
}

/// The configuration as recorded in result files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub model: String,
    pub d: usize,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub solver: SolverKind,
    pub b: usize,
    pub eps: f64,
    pub rmax: usize,
    pub max_sweeps: usize,
    pub conv_tol: f64,
    pub local_solver: String,
    pub local_size_threshold: usize,
    pub initial_rank: Option<usize>,
    pub seed: u64,
    pub verify: VerifyMode,
    pub tolerances: Tolerances,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verification_modes_are_checked() {
        let lap = ExperimentConfig::new(HamiltonianSpec::laplace(3, 4), SolverConfig::new(5, 1e-8));
        assert!(lap.clone().with_verify(VerifyMode::ClosedForm).validate().is_ok());
        assert!(lap.clone().with_verify(VerifyMode::DenseOracle).validate().is_ok());
        let spin = ExperimentConfig::new(HamiltonianSpec::heisenberg(8), SolverConfig::new(4, 1e-8));
        assert!(matches!(spin.clone().with_verify(VerifyMode::ClosedForm).validate(), Err(Error::Usage(_))));
        let big = ExperimentConfig::new(HamiltonianSpec::heisenberg(13), SolverConfig::new(2, 1e-3));
        assert!(big.clone().validate().is_ok());
        assert!(matches!(big.with_verify(VerifyMode::DenseOracle).validate(), Err(Error::Usage(_))));
    }

    #[test]
    fn parse_names() {
        assert_eq!("closed-form".parse::<VerifyMode>().unwrap(), VerifyMode::ClosedForm);
        assert_eq!("deflation".parse::<SolverKind>().unwrap(), SolverKind::Deflation);
        assert!("exact".parse::<VerifyMode>().is_err());
        assert_eq!(parse_local_solver("dense").unwrap(), LocalSolver::Dense);
        assert_eq!(VerifyMode::DenseOracle.to_string(), "dense-oracle");
    }

    #[test]
    fn echo_skips_lambda_outside_henon_heiles() {
        let c = ExperimentConfig::new(HamiltonianSpec::laplace(2, 3), SolverConfig::new(2, 1e-6));
        let v = serde_json::to_value(c.echo()).unwrap();
        assert!(v.get("lambda").is_none());
        assert_eq!(v["model"], "laplace");
        assert_eq!(v["verify"], "none");
    }
}
