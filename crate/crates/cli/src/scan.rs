use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::experiment::{run, solve};
use crate::record::ResultRecord;
use crate::Error;

/// Parameter varied by a scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    D,
    N,
    B,
    Eps,
}

impl std::str::FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "d" => Ok(Axis::D),
            "n" => Ok(Axis::N),
            "b" => Ok(Axis::B),
            "eps" => Ok(Axis::Eps),
            other => Err(format!("unknown scan axis `{other}` (d, n, b, eps)")),
        }
    }
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::D => "d",
            Axis::N => "n",
            Axis::B => "b",
            Axis::Eps => "eps",
        }
    }

    /// `template` with this axis set to `value`.
    pub fn apply(self, template: &ExperimentConfig, value: f64) -> Result<ExperimentConfig, Error> {
        let mut cfg = template.clone();
        let count = || -> Result<usize, Error> {
            if value >= 1.0 && value.fract() == 0.0 && value < 1e9 {
                Ok(value as usize)
            } else {
                Err(Error::Usage(format!("axis {} needs a positive integer, got {value}", self.name())))
            }
        };
        match self {
            Axis::D => cfg.hamiltonian.d = count()?,
            Axis::N => cfg.hamiltonian.n = count()?,
            Axis::B => cfg.solver_config.num_states = count()?,
            Axis::Eps => cfg.solver_config.eps = value,
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub value: f64,
    /// Eigenvalues of a reference run at the same point, if requested.
    pub reference: Option<Vec<f64>>,
    #[serde(serialize_with = "outcome_json")]
    pub outcome: Result<ResultRecord, String>,
}

fn outcome_json<S: serde::Serializer>(o: &Result<ResultRecord, String>, s: S) -> Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    #[serde(untagged)]
    enum Repr<'a> {
        Record(&'a ResultRecord),
        Failure { error: &'a str },
    }
    match o {
        Ok(r) => Repr::Record(r).serialize(s),
        Err(e) => Repr::Failure { error: e }.serialize(s),
    }
}

type Reference = Result<Vec<f64>, String>;

/// Runs `template` once per value, on up to `jobs` threads. A failed run
/// is recorded in its row and does not stop the others. When
/// `reference_eps` is given, every row is compared against a run of the
/// same point at that accuracy.
pub fn scan(template: &ExperimentConfig, axis: Axis, values: &[f64], jobs: usize, reference_eps: Option<f64>) -> Vec<ScanRow> {
    let next = AtomicUsize::new(0);
    let rows: Mutex<Vec<Option<ScanRow>>> = Mutex::new(vec![None; values.len()]);
    let references: Mutex<Vec<(ExperimentConfig, Reference)>> = Mutex::new(Vec::new());

    let reference_for = |cfg: &ExperimentConfig| -> Result<Vec<f64>, String> {
        let eps = reference_eps.expect("reference accuracy");
        let mut rc = cfg.clone();
        rc.solver_config.eps = eps;
        rc.solver_config.conv_tol = Some(eps);
        if let Some((_, r)) = references.lock().unwrap().iter().find(|(c, _)| *c == rc) {
            return r.clone();
        }
        let r = rc
            .validate()
            .and_then(|_| Ok(rc.hamiltonian.build()?))
            .and_then(|a| solve(&rc, &a))
            .map(|res| res.eigenvalues)
            .map_err(|e| format!("reference run: {e}"));
        references.lock().unwrap().push((rc, r.clone()));
        r
    };

    let worker = || loop {
        let i = next.fetch_add(1, Ordering::SeqCst);
        if i >= values.len() {
            break;
        }
        let value = values[i];
        let mut reference = None;
        let outcome = axis.apply(template, value).and_then(|cfg| {
            if reference_eps.is_some() {
                reference = Some(reference_for(&cfg).map_err(Error::Usage)?);
            }
            run(&cfg).map(|o| o.record)
        });
        log::info!("scan {}={value}: {}", axis.name(), if outcome.is_ok() { "done" } else { "failed" });
        rows.lock().unwrap()[i] = Some(ScanRow { value, reference, outcome: outcome.map_err(|e| e.to_string()) });
    };
    let jobs = jobs.clamp(1, values.len().max(1));
    std::thread::scope(|s| {
        for _ in 1..jobs {
            s.spawn(worker);
        }
        worker();
    });
    rows.into_inner().unwrap().into_iter().map(|r| r.expect("every row filled")).collect()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x.iter().zip(y).filter(|(a, b)| **a > 0.0 && **b > 0.0).map(|(a, b)| (a.ln(), b.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
