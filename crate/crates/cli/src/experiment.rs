use std::time::Instant;

use ttspec::hamiltonians::{laplace_spectrum, LaplaceLevel};
use ttspec::oracle::{angle_from_overlap, dense_eig, densify_operator, group_levels, subspace_angle};
use ttspec::{deflation_solve, eigb, BlockTt, SpectrumResult, TtMatrix};

use crate::config::{ExperimentConfig, SolverKind, VerifyMode};
use crate::record::{LevelReport, ResultRecord, Verification};
use crate::Error;

/// Relative gap (of the spectral span) below which eigenvalues count as one
/// level.
pub const LEVEL_GAP: f64 = 1e-8;

/// Result of one run and the exit status it implies.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub record: ResultRecord,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
    VerificationFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => crate::EXIT_NOT_CONVERGED,
            Status::VerificationFailed => crate::EXIT_VERIFICATION,
        }
    }
}

pub fn solve(cfg: &ExperimentConfig, a: &TtMatrix) -> Result<SpectrumResult, Error> {
    let res = match cfg.solver {
        SolverKind::Eigb => eigb(a, None, &cfg.solver_config),
        SolverKind::Deflation => deflation_solve(a, &cfg.solver_config),
    };
    Ok(res?)
}

/// Builds the operator, runs the solver and the requested verification.
pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, Error> {
    cfg.validate()?;
    let a = cfg.hamiltonian.build()?;
    let result = solve(cfg, &a)?;
    let multiplicities = group_levels(&result.eigenvalues, LEVEL_GAP).iter().map(|r| r.len()).collect();
    let mut record = ResultRecord::new(cfg.echo(), &result, multiplicities);
    record.verification = match cfg.verify {
        VerifyMode::None => None,
        VerifyMode::ClosedForm => Some(verify_closed_form(cfg, &result)?),
        VerifyMode::DenseOracle => Some(verify_dense(cfg, &a, &result)?),
    };
    let status = if !record.verified() {
        Status::VerificationFailed
    } else if !record.converged {
        Status::NotConverged
    } else {
        Status::Ok
    };
    Ok(Outcome { record, status })
}

struct Comparison {
    abs: Vec<f64>,
    rel: Vec<f64>,
    max_abs: f64,
}

fn compare(values: &[f64], reference: &[f64]) -> Comparison {
    let abs: Vec<f64> = values.iter().zip(reference).map(|(v, r)| (v - r).abs()).collect();
    let rel = abs.iter().zip(reference).map(|(e, r)| e / r.abs().max(f64::MIN_POSITIVE)).collect();
    let max_abs = abs.iter().copied().fold(0.0, f64::max);
    Comparison { abs, rel, max_abs }
}

/// Levels of `reference` (length `b`); `next` is the first reference value
/// past the computed states, when one exists, to tell whether the last
/// level is complete.
fn levels_of(reference: &[f64], next: Option<f64>, computed: &[f64]) -> Vec<LevelReport> {
    let mut all = reference.to_vec();
    all.extend(next);
    let groups = group_levels(&all, LEVEL_GAP);
    groups
        .iter()
        .enumerate()
        .filter(|(_, g)| g.start < reference.len())
        .map(|(level, g)| {
            let end = g.end.min(reference.len());
            let vals = &computed[g.start..end];
            let spread = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - vals.iter().copied().fold(f64::INFINITY, f64::min);
            LevelReport {
                level,
                start: g.start,
                multiplicity: end - g.start,
                reference_value: reference[g.start],
                complete: g.end <= reference.len(),
                spread,
                angle: None,
            }
        })
        .collect()
}

fn judge(v: &mut Verification, cfg: &ExperimentConfig) {
    let tol = cfg.tolerances;
    let mut failures = Vec::new();
    for (k, e) in v.abs_errors.iter().enumerate() {
        if !(*e < tol.eigenvalue) {
            failures.push(format!("eigenvalue {k}: error {e:.3e} exceeds {:.1e}", tol.eigenvalue));
        }
    }
    for l in &v.levels {
        if let Some(angle) = l.angle {
            if !(angle < tol.angle) {
                failures.push(format!("level {}: angle {angle:.3e} exceeds {:.1e}", l.level, tol.angle));
            }
        }
    }
    if let Some(res) = &v.residuals {
        for (k, r) in res.iter().enumerate() {
            if !(*r < tol.residual) {
                failures.push(format!("state {k}: residual {r:.3e} exceeds {:.1e}", tol.residual));
            }
        }
    }
    v.passed = failures.is_empty();
    v.failures = failures;
}

fn verify_closed_form(cfg: &ExperimentConfig, result: &SpectrumResult) -> Result<Verification, Error> {
    let t = Instant::now();
    let (d, n) = (cfg.hamiltonian.d, cfg.hamiltonian.n);
    let b = result.eigenvalues.len();
    let total = cfg.space_dim();
    let count = if (b as u128) < total { b + 1 } else { b };
    let exact = laplace_spectrum(d, n, count)?;
    let reference: Vec<f64> = exact[..b].iter().map(|l| l.value).collect();
    let next = exact.get(b).map(|l| l.value);
    let cmp = compare(&result.eigenvalues, &reference);
    let mut levels = levels_of(&reference, next, &result.eigenvalues);
    for level in levels.iter_mut().filter(|l| l.complete) {
        let range = level.start..level.start + level.multiplicity;
        level.angle = Some(closed_form_angle(&result.states, &exact[range.clone()], range, n)?);
    }
    let mut v = Verification {
        mode: VerifyMode::ClosedForm,
        reference,
        abs_errors: cmp.abs,
        rel_errors: cmp.rel,
        max_abs_error: cmp.max_abs,
        residuals: None,
        levels,
        passed: false,
        failures: Vec::new(),
        wall_time_seconds: 0.0,
    };
    judge(&mut v, cfg);
    v.wall_time_seconds = t.elapsed().as_secs_f64();
    Ok(v)
}

/// Angle between computed states `range` and the rank-one analytic
/// eigenvectors of the same level, from TT inner products.
fn closed_form_angle(states: &BlockTt, exact: &[LaplaceLevel], range: std::ops::Range<usize>, n: usize) -> Result<f64, Error> {
    let k = range.len();
    let computed = range.map(|s| states.extract_state(s)).collect::<Result<Vec<_>, _>>()?;
    let analytic = exact.iter().map(|l| l.state(n)).collect::<Result<Vec<_>, _>>()?;
    let mut overlap = vec![0.0; k * k];
    for (i, x) in computed.iter().enumerate() {
        for (j, u) in analytic.iter().enumerate() {
            overlap[i + k * j] = x.dot(u)?;
        }
    }
    Ok(angle_from_overlap(&overlap, k)?)
}

fn verify_dense(cfg: &ExperimentConfig, a: &TtMatrix, result: &SpectrumResult) -> Result<Verification, Error> {
    let t = Instant::now();
    let cap = cfg.solver_config.densify_cap;
    let big = a.size();
    let m = densify_operator(a, cap)?;
    let b = result.eigenvalues.len();
    let count = (b + 1).min(big);
    let spectrum = dense_eig(&m, big, count)?;
    let reference = spectrum.eigenvalues[..b].to_vec();
    let next = spectrum.eigenvalues.get(b).copied();
    let cmp = compare(&result.eigenvalues, &reference);

    let states = result.states.to_dense_states_capped(cap)?;
    let residuals = states
        .iter()
        .zip(&result.eigenvalues)
        .map(|(x, l)| {
            let mut r2 = 0.0;
            for i in 0..big {
                let ax: f64 = (0..big).map(|j| m[i + big * j] * x[j]).sum();
                r2 += (ax - l * x[i]).powi(2);
            }
            r2.sqrt() / x.iter().map(|v| v * v).sum::<f64>().sqrt()
        })
        .collect();

    let mut levels = levels_of(&reference, next, &result.eigenvalues);
    for level in levels.iter_mut().filter(|l| l.complete) {
        let (s, k) = (level.start, level.multiplicity);
        let x: Vec<f64> = states[s..s + k].concat();
        let y = &spectrum.eigenvectors[big * s..big * (s + k)];
        level.angle = Some(subspace_angle(&x, y, big, k)?.angle);
    }
    let mut v = Verification {
        mode: VerifyMode::DenseOracle,
        reference,
        abs_errors: cmp.abs,
        rel_errors: cmp.rel,
        max_abs_error: cmp.max_abs,
        residuals: Some(residuals),
        levels,
        passed: false,
        failures: Vec::new(),
        wall_time_seconds: 0.0,
    };
    judge(&mut v, cfg);
    v.wall_time_seconds = t.elapsed().as_secs_f64();
    Ok(v)
}
