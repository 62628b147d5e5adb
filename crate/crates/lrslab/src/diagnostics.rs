//! Solver traces, divergence classification, epsilon-sequence studies, and
//! figure-data emission.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::construct::{self, ConstructionSpec};
use crate::error::{Error, Result};
use crate::linalg;

pub const TRACE_CSV_HEADER: &str = "iter,residual,norm_L,norm_S,rank_L,nnz_S";

/// Classifier defaults: the divergence phenomena cross many orders of
/// magnitude, so the thresholds sit well inside the gap.
pub const DEFAULT_RES_TOL: f64 = 1e-4;
pub const DEFAULT_DIVERGENCE_CAP: f64 = 1e3;
pub const DEFAULT_WINDOW: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: u64,
    pub residual: f64,
    #[serde(rename = "norm_L")]
    pub norm_l: f64,
    #[serde(rename = "norm_S")]
    pub norm_s: f64,
    #[serde(rename = "rank_L")]
    pub rank_l: usize,
    #[serde(rename = "nnz_S")]
    pub nnz_s: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverTrace {
    pub algo: String,
    pub records: Vec<TraceRecord>,
    /// Full JSON snapshot of the solver configuration.
    pub config_snapshot: String,
    pub wall_time_secs: f64,
}

impl SolverTrace {
    /// Reference scale of the input, reconstructed from the first record:
    /// after any of the default initializations, max(residual, |L|, |S|)
    /// is within a factor of two of ||M||_F.
    pub fn input_scale(&self) -> f64 {
        self.records
            .first()
            .map(|r| r.residual.max(r.norm_l).max(r.norm_s))
            .unwrap_or(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRACE_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iter, r.residual, r.norm_l, r.norm_s, r.rank_l, r.nnz_s
            ));
        }
        out
    }

    pub fn from_csv(text: &str, path: &Path, algo: &str) -> Result<SolverTrace> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: "empty trace file".into(),
        })?;
        if header.trim() != TRACE_CSV_HEADER {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("expected header {:?}", TRACE_CSV_HEADER),
            });
        }
        let mut records = Vec::new();
        for (lineno, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("expected 6 fields, got {}", fields.len()),
                });
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.trim().parse().map_err(|e| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    msg: format!("bad {}: {}", what, e),
                })
            };
            records.push(TraceRecord {
                iter: parse(fields[0], "iter")? as u64,
                residual: parse(fields[1], "residual")?,
                norm_l: parse(fields[2], "norm_L")?,
                norm_s: parse(fields[3], "norm_S")?,
                rank_l: parse(fields[4], "rank_L")? as usize,
                nnz_s: parse(fields[5], "nnz_S")? as usize,
            });
        }
        Ok(SolverTrace {
            algo: algo.to_string(),
            records,
            config_snapshot: "{}".to_string(),
            wall_time_secs: 0.0,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<SolverTrace> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let algo = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "trace".to_string());
        SolverTrace::from_csv(&text, path, &algo)
    }
}

/// Collects per-iteration records with the standard thinning: every
/// iteration up to 1000, every 10th afterwards, and always the final one.
pub struct TraceBuilder {
    algo: String,
    config_snapshot: String,
    records: Vec<TraceRecord>,
    pending: Option<TraceRecord>,
    started: Instant,
}

impl TraceBuilder {
    pub fn new(algo: &str, config_snapshot: String) -> Self {
        TraceBuilder {
            algo: algo.to_string(),
            config_snapshot,
            records: Vec::new(),
            pending: None,
            started: Instant::now(),
        }
    }

    pub fn record(&mut self, rec: TraceRecord) {
        if rec.iter <= 1000 || rec.iter % 10 == 0 {
            self.records.push(rec);
            self.pending = None;
        } else {
            self.pending = Some(rec);
        }
    }

    pub fn finish(mut self) -> SolverTrace {
        if let Some(p) = self.pending.take() {
            self.records.push(p);
        }
        SolverTrace {
            algo: self.algo,
            records: self.records,
            config_snapshot: self.config_snapshot,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ConvergedFeasible,
    DivergingComponents,
    Stalled,
    BudgetExhausted,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classification {
    pub verdict: Verdict,
    pub final_residual: f64,
    pub max_component_norm: f64,
    pub growth_exponent: Option<f64>,
}

/// Classify a trace.
///
/// DivergingComponents: final residual within res_tol of zero (relative to
/// the initial residual) while some component norm exceeds divergence_cap
/// times the input scale, growing monotonically over the trailing window.
/// ConvergedFeasible: small residual with bounded components. Stalled:
/// residual plateaued above tolerance. Everything else: BudgetExhausted.
pub fn classify(
    trace: &SolverTrace,
    res_tol: f64,
    divergence_cap: f64,
    window: usize,
) -> Result<Classification> {
    let records = &trace.records;
    if records.is_empty() {
        return Err(Error::InvalidParameter("empty trace".into()));
    }
    let res0 = records[0].residual.max(f64::MIN_POSITIVE);
    let scale = trace.input_scale().max(f64::MIN_POSITIVE);
    let last = records[records.len() - 1];
    let max_comp = records
        .iter()
        .map(|r| r.norm_l.max(r.norm_s))
        .fold(0.0f64, f64::max);
    let growth_exponent = growth_rate(trace);

    let res_ok = last.residual <= res_tol * res0;
    let cap = divergence_cap * scale;
    let tail_start = records.len().saturating_sub(window.max(2));
    let tail = &records[tail_start..];
    let monotone = tail.windows(2).all(|w| {
        let a = w[0].norm_l.max(w[0].norm_s);
        let b = w[1].norm_l.max(w[1].norm_s);
        b >= a * (1.0 - 1e-9)
    });
    let plateaued = {
        let first = tail[0].residual;
        let lastr = tail[tail.len() - 1].residual;
        (first - lastr).abs() <= 1e-12 * first.max(f64::MIN_POSITIVE)
    };

    let verdict = if res_ok {
        if max_comp >= cap && monotone {
            Verdict::DivergingComponents
        } else if max_comp < cap {
            Verdict::ConvergedFeasible
        } else {
            Verdict::BudgetExhausted
        }
    } else if plateaued {
        Verdict::Stalled
    } else {
        Verdict::BudgetExhausted
    };

    Ok(Classification {
        verdict,
        final_residual: last.residual,
        max_component_norm: max_comp,
        growth_exponent,
    })
}

/// Least-squares slope of log(norm_L) against log(iter) over the trailing
/// half of the trace: the power-law growth exponent. None when fewer than
/// 10 usable records exist or the fit is degenerate.
pub fn growth_rate(trace: &SolverTrace) -> Option<f64> {
    let usable: Vec<&TraceRecord> = trace
        .records
        .iter()
        .filter(|r| r.norm_l > 0.0 && r.iter > 0)
        .collect();
    if usable.len() < 10 {
        return None;
    }
    let tail = &usable[usable.len() / 2..];
    let n = tail.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for r in tail {
        let x = (r.iter as f64).ln();
        let y = r.norm_l.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let var = sxx - sx * sx / n;
    if var <= 1e-12 {
        return None;
    }
    Some((sxy - sx * sy / n) / var)
}

// ---- epsilon studies ----

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub epsilon: f64,
    pub residual: f64,
    #[serde(rename = "norm_L")]
    pub norm_l: f64,
    #[serde(rename = "norm_S")]
    pub norm_s: f64,
    #[serde(rename = "rank_L")]
    pub rank_l: usize,
    #[serde(rename = "nnz_S")]
    pub nnz_s: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpsilonStudy {
    pub family: String,
    pub rows: Vec<EpsilonRow>,
}

impl EpsilonStudy {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,residual,norm_L,norm_S,rank_L,nnz_S\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.epsilon, r.residual, r.norm_l, r.norm_s, r.rank_l, r.nnz_s
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// One row per epsilon: distance to the limit, component norms, rank and
/// sparsity of the witness split. The same seed drives every row, so the
/// limit matrix is fixed along the schedule.
pub fn epsilon_study(spec: &ConstructionSpec, schedule: &[f64]) -> Result<EpsilonStudy> {
    let mut rows = Vec::with_capacity(schedule.len());
    for &eps in schedule {
        let mut s = spec.clone();
        s.epsilon = eps;
        let out = construct::build(&s)?;
        let (_, rank_l, nnz_s) = construct::witness_stats(&out)?;
        rows.push(EpsilonRow {
            epsilon: eps,
            residual: construct::limit_distance(&out),
            norm_l: out.l_eps.frobenius(),
            norm_s: out.s_eps.frobenius(),
            rank_l,
            nnz_s,
        });
    }
    Ok(EpsilonStudy {
        family: spec.family.name().to_string(),
        rows,
    })
}

/// Serialize an emitted artifact as JSON with path-context errors.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidParameter(format!("serialization failed: {}", e)))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Record helper shared by the solvers.
pub fn make_record(
    iter: u64,
    residual: f64,
    l: &crate::matrix::Matrix,
    s: &crate::matrix::Matrix,
) -> Result<TraceRecord> {
    Ok(TraceRecord {
        iter,
        residual,
        norm_l: l.frobenius(),
        norm_s: s.frobenius(),
        rank_l: linalg::numerical_rank(l, linalg::RANK_REL_TOL)?,
        nnz_s: s.nnz(linalg::L0_ABS_TOL),
    })
}
