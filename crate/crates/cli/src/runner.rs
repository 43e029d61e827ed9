use stabgap::analysis::{equivalence_report, gap_curve, AnalysisSettings};
use stabgap::problems::{build_method, build_problem};
use stabgap::{CompactCloud, Ladder, Method, NormSpec, RegularFamily, Result};

use crate::config::{ExperimentConfig, FamilyConfig};
use crate::report::{
    gap_table, tables_for, CloudSummary, GapDocument, ReportDocument, SCHEMA_VERSION,
};

/// Everything the pipeline needs, built from a configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub method: Method,
    pub guard: RegularFamily,
    pub cloud: CompactCloud,
    pub settings: AnalysisSettings,
}

pub fn build_setup(config: &ExperimentConfig, workers: usize) -> Result<Setup> {
    let mut problem = build_problem(&config.problem, &config.params)?;
    if let Some(o) = config.norm {
        let current = problem.norm();
        let norm = NormSpec::weighted(o.kind, o.weight.unwrap_or(current.weight), current.dim)?;
        problem = problem.with_norm(norm)?;
    }
    let method = build_method(&problem, &config.method, &config.params)?;
    let guard = match config.family {
        FamilyConfig::WholeDomain => RegularFamily::whole_domain(&problem),
        FamilyConfig::NormCap { cap } => RegularFamily::norm_cap(&problem, cap),
    };
    let cloud = CompactCloud::generate(config.cloud.clone(), config.seed)?;

    let l = &config.ladders;
    let mut settings = AnalysisSettings::for_cloud(
        &guard,
        &cloud,
        l.horizon,
        Ladder::geometric(l.dt0, l.dt_depth)?,
    )?;
    if let Some(r) = l.rho_local {
        settings.rho_local = r;
    }
    settings.rho_distant = l.rho.unwrap_or(settings.rho_local);
    let rho0 = l.rho0.unwrap_or(settings.rho_ladder.values()[0]);
    settings.rho_ladder = Ladder::geometric(rho0, l.rho_depth)?;
    settings.theta_factor = l.theta;
    settings.time_points = l.time_points;
    settings.tolerances = config.tolerances;
    settings.workers = workers;
    Ok(Setup {
        method,
        guard,
        cloud,
        settings,
    })
}

fn summary(cloud: &CompactCloud) -> CloudSummary {
    CloudSummary {
        fingerprint: cloud.fingerprint(),
        size: cloud.len(),
        dim: cloud.dim(),
    }
}

/// Runs the full pipeline. Operational failures are recorded in the
/// document's `error` field rather than returned.
pub fn run(config: &ExperimentConfig, workers: usize) -> ReportDocument {
    let mut doc = ReportDocument {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        cloud: None,
        settings: None,
        verdict: None,
        error: None,
        tables: Vec::new(),
    };
    let setup = match build_setup(config, workers) {
        Ok(s) => s,
        Err(e) => {
            doc.error = Some(e.to_string());
            return doc;
        }
    };
    doc.cloud = Some(summary(&setup.cloud));
    doc.settings = Some(setup.settings.clone());
    match equivalence_report(&setup.method, &setup.guard, &setup.cloud, &setup.settings) {
        Ok(v) => {
            doc.tables = tables_for(&v);
            doc.verdict = Some(v);
        }
        Err(e) => doc.error = Some(e.to_string()),
    }
    doc
}

/// The gap curve alone.
pub fn run_gap(config: &ExperimentConfig, workers: usize) -> Result<GapDocument> {
    let s = build_setup(config, workers)?;
    let gap = gap_curve(
        &s.method,
        &s.guard,
        s.settings.horizon,
        &s.cloud,
        &s.settings.rho_ladder,
        &s.settings.dt_ladder,
        workers,
        &s.settings.tolerances,
    )?;
    Ok(GapDocument {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        cloud: summary(&s.cloud),
        tables: vec![gap_table(&gap)],
        gap,
    })
}
