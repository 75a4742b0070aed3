//! Suite orchestration and JSON reports.

mod apply;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::Serialize;

use crate::affine::checks::{
    check_heisenberg_scalar, drinfeld_instances, heisenberg_state_instances, psi_instances,
    AffineChecker, AffineConfig, HEISENBERG_MAX, PSI_WINDOW,
};
use crate::affine::{Level, MomentumWindow};
use crate::error::Error;
use crate::finite::checks::{
    chevalley_instances, intermediate_instances, remark_instances, Checker,
};
use crate::finite::{check_bracket_identities, FiniteRealization, Sabotage, Variant};
use crate::report::{RelationReport, Status};

pub use apply::{apply_expr, parse_word_expr, GenWord};

/// Largest `n` of the telescoping bracket identity run with every finite suite.
pub const BRACKET_MAX_N: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Finite,
    Affine,
}

/// Everything that determines a run; validated before any computation.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub target: Target,
    pub m: usize,
    pub n: usize,
    pub variant: Variant,
    pub max_degree: usize,
    pub sabotage: Option<Sabotage>,
    pub energy_cut: u32,
    pub mode_window: i64,
    pub momentum: MomentumWindow,
    pub level: Level,
    pub overrides: Vec<String>,
    /// keep only relations whose id contains this string
    pub filter: Option<String>,
    pub seed: u64,
    /// wall-clock limit of the affine state sweep
    pub budget: Option<Duration>,
}

impl SuiteConfig {
    pub fn finite(m: usize, n: usize, variant: Variant, max_degree: usize) -> Self {
        SuiteConfig {
            target: Target::Finite,
            m,
            n,
            variant,
            max_degree,
            ..Self::affine(0, 0)
        }
    }

    pub fn affine(energy_cut: u32, mode_window: i64) -> Self {
        let d = AffineConfig::default();
        SuiteConfig {
            target: Target::Affine,
            m: 2,
            n: 1,
            variant: Variant::I,
            max_degree: 0,
            sabotage: None,
            energy_cut,
            mode_window,
            momentum: d.momentum,
            level: Level::Formal,
            overrides: Vec::new(),
            filter: None,
            seed: d.seed,
            budget: None,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self.target {
            Target::Finite => {
                if self.m + self.n < 2 {
                    return Err(Error::Config(format!(
                        "M + N must be at least 2, got ({}, {})",
                        self.m, self.n
                    )));
                }
                // builds the root data and checks the sabotage target
                FiniteRealization::new(self.m, self.n, self.variant, self.sabotage)?;
            }
            Target::Affine => {
                if (self.m, self.n) != (2, 1) {
                    return Err(Error::Config(format!(
                        "the affine realization exists for (2,1) only, got ({}, {})",
                        self.m, self.n
                    )));
                }
                if self.mode_window < 0 {
                    return Err(Error::Config("mode window must be nonnegative".into()));
                }
                AffineConfig::from(self).validate()?;
            }
        }
        Ok(())
    }

    fn parameters(&self) -> BTreeMap<&'static str, String> {
        let mut p = BTreeMap::new();
        p.insert("M", self.m.to_string());
        p.insert("N", self.n.to_string());
        p.insert("seed", self.seed.to_string());
        if let Some(f) = &self.filter {
            p.insert("filter", f.clone());
        }
        match self.target {
            Target::Finite => {
                p.insert("variant", self.variant.to_string());
                p.insert("max_degree", self.max_degree.to_string());
                if let Some(s) = &self.sabotage {
                    p.insert("sabotage", s.to_string());
                }
            }
            Target::Affine => {
                p.insert("energy_cut", self.energy_cut.to_string());
                p.insert("mode_window", self.mode_window.to_string());
                p.insert("momentum", self.momentum.to_string());
                p.insert("k", self.level.to_string());
                if !self.overrides.is_empty() {
                    p.insert("overrides", self.overrides.join(","));
                }
                if let Some(b) = self.budget {
                    p.insert("budget_secs", b.as_secs().to_string());
                }
            }
        }
        p
    }
}

impl From<&SuiteConfig> for AffineConfig {
    fn from(c: &SuiteConfig) -> Self {
        AffineConfig {
            energy_cut: c.energy_cut,
            mode_window: c.mode_window,
            momentum: c.momentum,
            level: c.level,
            overrides: c.overrides.clone(),
            seed: c.seed,
            budget: c.budget,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Metadata {
    pub target: Target,
    pub parameters: BTreeMap<&'static str, String>,
    pub version: &'static str,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
    pub incomplete: usize,
}

impl Summary {
    pub fn tally(reports: &[RelationReport]) -> Self {
        let mut s = Summary {
            total: reports.len(),
            ..Default::default()
        };
        for r in reports {
            match r.status {
                Status::Pass => s.pass += 1,
                Status::Fail => s.fail += 1,
                Status::NotApplicable => s.not_applicable += 1,
                Status::Incomplete => s.incomplete += 1,
            }
        }
        s
    }
}

/// Reports in generation order; no timing data, so equal configurations give
/// byte-identical files (unless a time budget cuts the run short).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub metadata: Metadata,
    pub relations: Vec<RelationReport>,
    pub summary: Summary,
}

impl SuiteReport {
    fn new(cfg: &SuiteConfig, relations: Vec<RelationReport>) -> Self {
        SuiteReport {
            metadata: Metadata {
                target: cfg.target,
                parameters: cfg.parameters(),
                version: env!("CARGO_PKG_VERSION"),
            },
            summary: Summary::tally(&relations),
            relations,
        }
    }

    /// Nothing failed and nothing was cut short by the time budget.
    pub fn all_passed(&self) -> bool {
        self.summary.fail == 0 && self.summary.incomplete == 0
    }

    /// 0 when every relation passed or is not applicable, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &RelationReport> {
        self.relations.iter().filter(|r| r.status == Status::Fail)
    }

    pub fn to_json(&self) -> Result<String, Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<(), Error> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

fn keep<T>(items: Vec<T>, filter: &Option<String>, id: impl Fn(&T) -> &str) -> Vec<T> {
    match filter {
        Some(f) => items
            .into_iter()
            .filter(|x| id(x).contains(f.as_str()))
            .collect(),
        None => items,
    }
}

/// Chevalley relations, intermediate commutators, the two remarks and the
/// bracket identity for one `(M, N)` and variant.
pub fn run_finite(cfg: &SuiteConfig) -> Result<SuiteReport, Error> {
    cfg.validate()?;
    let r = FiniteRealization::new(cfg.m, cfg.n, cfg.variant, cfg.sabotage)?;
    let mut instances = chevalley_instances(&r)?;
    instances.extend(intermediate_instances(&r)?);
    instances.extend(remark_instances(&r)?);
    let instances = keep(instances, &cfg.filter, |i| &i.id);
    let mut reports =
        Checker::new(&r.space, &r.table, cfg.max_degree, cfg.seed).check_all(&instances)?;
    reports.extend(keep(
        check_bracket_identities(BRACKET_MAX_N, cfg.seed)?,
        &cfg.filter,
        |r| &r.id,
    ));
    Ok(SuiteReport::new(cfg, reports))
}

/// Id of the quartic Serre relation, which has no index instance for `(2|1)`.
pub const EQ14_ID: &str = "drinfeld.eq14";

/// Drinfeld relations, ψ consistency and Heisenberg closure for `(2|1)`.
pub fn run_affine(cfg: &SuiteConfig) -> Result<SuiteReport, Error> {
    cfg.validate()?;
    let checker = AffineChecker::new(&AffineConfig::from(cfg))?;
    let ctx = checker.ctx();
    let mut instances = drinfeld_instances(ctx, cfg.mode_window);
    instances.extend(psi_instances(ctx, PSI_WINDOW));
    instances.extend(heisenberg_state_instances(ctx, HEISENBERG_MAX));
    let instances = keep(instances, &cfg.filter, |i| &i.id);
    let mut reports = checker.check_all(&instances)?;
    reports.extend(keep(
        check_heisenberg_scalar(ctx, HEISENBERG_MAX),
        &cfg.filter,
        |r| &r.id,
    ));
    let eq14 = vec![RelationReport::not_applicable(
        format!("{EQ14_ID}.k={}", cfg.level),
        "the quartic Serre relation needs simple roots with indices up to 3; sl(2|1) has two",
    )];
    reports.extend(keep(eq14, &cfg.filter, |r| &r.id));
    Ok(SuiteReport::new(cfg, reports))
}

pub fn run(cfg: &SuiteConfig) -> Result<SuiteReport, Error> {
    match cfg.target {
        Target::Finite => run_finite(cfg),
        Target::Affine => run_affine(cfg),
    }
}
