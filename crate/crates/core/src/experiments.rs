//! Numerical-experiment pipelines behind the command-line front end.
//!
//! Tables are comma-separated with a `#`-prefixed metadata preamble and a
//! header row; reals carry 17 significant digits and lines end in `\n`.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::bound::{
    bipartite_concurrence_pure, concurrence_from_table, cut_terms, purity_table, purity_table_pure,
    sqrt_clamped_bound, v_expectation, PurityTable, DEFAULT_LATTICE_CAP,
};
use crate::error::{Error, Result};
use crate::hilbert::HilbertStructure;
use crate::measurement::{estimate_bound, parity_distribution, sample_parities, BoundEstimate};
use crate::statefile::{format_real, StateFile};
use crate::states::{derive_seed, haar_random_pure};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Weak, intermediate and strong mixing.
pub const DEFAULT_MIXING_LEVELS: [f64; 3] = [0.05, 0.3, 0.7];
pub const DEFAULT_SAMPLE_COUNT: usize = 1000;

/// The x-axis reference is the exact concurrence of the pre-mixing pure state.
pub const ENSEMBLE_NOTE: &str = "pure-reference";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub sample_count: usize,
    pub mixing_levels: Vec<f64>,
    /// Shots per (state, lambda); 0 evaluates exactly.
    pub shots: u64,
    pub master_seed: u64,
}

impl ExperimentConfig {
    pub fn new(dims: Vec<usize>) -> Self {
        Self {
            dims,
            sample_count: DEFAULT_SAMPLE_COUNT,
            mixing_levels: DEFAULT_MIXING_LEVELS.to_vec(),
            shots: 0,
            master_seed: 0,
        }
    }

    pub fn structure(&self) -> Result<HilbertStructure> {
        let s = HilbertStructure::new(self.dims.clone())?;
        if s.sites() < 2 {
            return Err(Error::Domain("scatter sweeps need at least two sites".into()));
        }
        if s.sites() > DEFAULT_LATTICE_CAP {
            return Err(Error::Capacity(format!(
                "{} sites exceed the purity-lattice cap of {DEFAULT_LATTICE_CAP}",
                s.sites()
            )));
        }
        if self.sample_count == 0 {
            return Err(Error::Domain("sample count must be at least 1".into()));
        }
        if self.mixing_levels.is_empty() {
            return Err(Error::Domain("at least one mixing level is required".into()));
        }
        if let Some(l) = self.mixing_levels.iter().find(|l| !(0.0..=1.0).contains(*l)) {
            return Err(Error::Domain(format!("mixing level {l} outside [0, 1]")));
        }
        Ok(s)
    }

    fn preamble(&self, command: &str) -> String {
        let levels: Vec<String> = self.mixing_levels.iter().map(|&l| format_real(l)).collect();
        format!(
            "# multiconc {VERSION} {command}\n# dims={:?}\n# samples={}\n# lambdas={}\n# shots={}\n# master_seed={}\n",
            self.dims,
            self.sample_count,
            levels.join(";"),
            self.shots,
            self.master_seed
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRow {
    pub state_index: usize,
    pub seed: u64,
    pub lambda: f64,
    pub purity: f64,
    pub v_expectation: f64,
    pub sqrt_clamped_bound: f64,
    pub concurrence_of_underlying_pure: f64,
    /// `(estimate, standard_error)` when shots are simulated.
    pub shot_estimate: Option<(f64, f64)>,
}

/// Row for the Haar state drawn from `seed`, depolarized by `lambda`.
pub fn scatter_row(structure: &HilbertStructure, state_index: usize, seed: u64, lambda: f64, shots: u64) -> Result<ScatterRow> {
    let psi = haar_random_pure(structure, seed);
    let concurrence = concurrence_from_table(&purity_table_pure(&psi)?)?.value();
    mixed_row(&psi.to_density().depolarize(lambda)?, state_index, seed, lambda, shots, concurrence)
}

fn mixed_row(
    rho: &crate::states::DensityMatrix,
    state_index: usize,
    seed: u64,
    lambda: f64,
    shots: u64,
    concurrence: f64,
) -> Result<ScatterRow> {
    let table = purity_table(rho)?;
    let v = v_expectation(&table);
    let shot_estimate = if shots > 0 {
        let dist = parity_distribution(&table)?;
        let est = estimate_bound(&sample_parities(&dist, shots, derive_seed(seed, lambda.to_bits()))?)?;
        Some((est.estimate, est.standard_error))
    } else {
        None
    };
    Ok(ScatterRow {
        state_index,
        seed,
        lambda,
        purity: table.purity(),
        v_expectation: v,
        sqrt_clamped_bound: sqrt_clamped_bound(v),
        concurrence_of_underlying_pure: concurrence,
        shot_estimate,
    })
}

/// Rows for every (state, lambda) pair, in state-index then lambda order.
pub fn run_scatter(config: &ExperimentConfig) -> Result<Vec<ScatterRow>> {
    let structure = config.structure()?;
    let per_state: Vec<Vec<ScatterRow>> = (0..config.sample_count)
        .into_par_iter()
        .map(|index| {
            let seed = derive_seed(config.master_seed, index as u64);
            let psi = haar_random_pure(&structure, seed);
            let concurrence = concurrence_from_table(&purity_table_pure(&psi)?)?.value();
            let pure = psi.to_density();
            config
                .mixing_levels
                .iter()
                .map(|&lambda| mixed_row(&pure.depolarize(lambda)?, index, seed, lambda, config.shots, concurrence))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(per_state.into_iter().flatten().collect())
}

pub fn write_scatter<W: Write>(config: &ExperimentConfig, rows: &[ScatterRow], out: &mut W) -> io::Result<()> {
    out.write_all(config.preamble("scatter").as_bytes())?;
    let mut header = String::from(
        "state_index,seed,lambda,purity,v_expectation,sqrt_clamped_bound,concurrence_of_underlying_pure,ensemble_note",
    );
    if config.shots > 0 {
        header.push_str(",shot_estimate,shot_standard_error");
    }
    writeln!(out, "{header}")?;
    for r in rows {
        write!(
            out,
            "{},{},{},{},{},{},{},{ENSEMBLE_NOTE}",
            r.state_index,
            r.seed,
            format_real(r.lambda),
            format_real(r.purity),
            format_real(r.v_expectation),
            format_real(r.sqrt_clamped_bound),
            format_real(r.concurrence_of_underlying_pure),
        )?;
        if let Some((est, se)) = r.shot_estimate {
            write!(out, ",{},{}", format_real(est), format_real(se))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Repeated finite-shot estimates on one state.
#[derive(Debug, Clone)]
pub struct ShotsReport {
    pub sites: usize,
    pub exact_v_expectation: f64,
    pub estimates: Vec<BoundEstimate>,
    pub mean: f64,
    /// Sample standard deviation across repetitions; 0 for a single one.
    pub empirical_sd: f64,
}

/// `shots = 0` runs the exact plug-in once.
pub fn run_shots(table: &PurityTable, shots: u64, repetitions: usize, seed: u64) -> Result<ShotsReport> {
    if repetitions == 0 {
        return Err(Error::Domain("at least one repetition is required".into()));
    }
    let dist = parity_distribution(table)?;
    let estimates: Vec<BoundEstimate> = if shots == 0 {
        vec![BoundEstimate::exact(&dist)]
    } else {
        (0..repetitions)
            .into_par_iter()
            .map(|rep| estimate_bound(&sample_parities(&dist, shots, derive_seed(seed, rep as u64))?))
            .collect::<Result<_>>()?
    };
    let k = estimates.len() as f64;
    let mean = estimates.iter().map(|e| e.estimate).sum::<f64>() / k;
    let empirical_sd = if estimates.len() > 1 {
        (estimates.iter().map(|e| (e.estimate - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(ShotsReport {
        sites: table.structure().sites(),
        exact_v_expectation: v_expectation(table),
        estimates,
        mean,
        empirical_sd,
    })
}

pub fn write_shots<W: Write>(report: &ShotsReport, dims: &[usize], shots: u64, seed: u64, out: &mut W) -> io::Result<()> {
    write!(
        out,
        "# multiconc {VERSION} shots\n# dims={dims:?}\n# shots={shots}\n# repetitions={}\n# seed={seed}\n",
        report.estimates.len()
    )?;
    writeln!(out, "row,estimate,standard_error,p_even,p_odd,p_all_plus,exact_v_expectation")?;
    let exact = format_real(report.exact_v_expectation);
    for (i, e) in report.estimates.iter().enumerate() {
        writeln!(
            out,
            "{i},{},{},{},{},{},{exact}",
            format_real(e.estimate),
            format_real(e.standard_error),
            format_real(e.events.p_even),
            format_real(e.events.p_odd),
            format_real(e.events.p_all_plus),
        )?;
    }
    let k = report.estimates.len() as f64;
    let mean_of = |f: fn(&BoundEstimate) -> f64| format_real(report.estimates.iter().map(f).sum::<f64>() / k);
    writeln!(
        out,
        "summary,{},{},{},{},{},{exact}",
        format_real(report.mean),
        format_real(report.empirical_sd),
        mean_of(|e| e.events.p_even),
        mean_of(|e| e.events.p_odd),
        mean_of(|e| e.events.p_all_plus),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct CutReport {
    pub sites: Vec<usize>,
    pub purity_side: f64,
    pub purity_complement: f64,
    pub v_cut: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bipartite_concurrence: Option<f64>,
}

/// Structured summary printed by `multiconc bound`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub dims: Vec<usize>,
    pub kind: &'static str,
    pub purity: f64,
    pub v_expectation: f64,
    pub clamped_bound: f64,
    pub sqrt_clamped_bound: f64,
    /// `v_expectation`, or `clamped_bound` when clamping was requested.
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concurrence: Option<f64>,
    pub cuts: Vec<CutReport>,
}

pub fn bound_report(state: &StateFile, clamp: bool) -> Result<BoundReport> {
    let table = state.purity_table()?;
    let v = v_expectation(&table);
    let pure = match state {
        StateFile::Pure(psi) => Some(psi),
        StateFile::Density(_) => None,
    };
    let sites = table.structure().sites();
    let cuts = if sites >= 2 {
        cut_terms(&table)?
            .into_iter()
            .map(|c| {
                Ok(CutReport {
                    sites: c.mask.sites_iter().collect(),
                    purity_side: c.purity_side,
                    purity_complement: c.purity_complement,
                    v_cut: c.v_cut,
                    bipartite_concurrence: pure.map(|psi| bipartite_concurrence_pure(psi, c.mask)).transpose()?,
                })
            })
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let concurrence = match pure {
        Some(_) if sites >= 2 => Some(concurrence_from_table(&table)?.value()),
        _ => None,
    };
    Ok(BoundReport {
        dims: table.structure().dims().to_vec(),
        kind: state.kind(),
        purity: table.purity(),
        v_expectation: v,
        clamped_bound: v.max(0.0),
        sqrt_clamped_bound: sqrt_clamped_bound(v),
        bound: if clamp { v.max(0.0) } else { v },
        concurrence,
        cuts,
    })
}
