//! The four commands, writing their human-readable summary to `out`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use trisub::parallel::run_campaign;
use trisub::postprocess::{
    first_rule, postprocess, prototile_seed, star_seed, Family, Postprocessed,
    Status as ResultStatus,
};
use trisub::problem::Problem;
use trisub::{Error, Result};

use crate::archive::{FamiliesFile, Input, ResultArchive, SearchStatus, SCHEMA_VERSION};
use crate::config::CampaignConfig;
use crate::render::{iterate, render_panels, Panel};
use crate::report::Analysis;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Invalid = 1,
    Inadmissible = 2,
    Truncated = 3,
}

impl Exit {
    pub fn for_error(e: &Error) -> Exit {
        match e {
            Error::Inadmissible(_) => Exit::Inadmissible,
            _ => Exit::Invalid,
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub kill_threshold: Option<usize>,
    pub max_results: Option<u64>,
    pub max_nodes: Option<u64>,
    pub starter_side: Option<usize>,
    pub no_orientation: bool,
}

impl Overrides {
    pub fn apply(&self, c: &mut CampaignConfig) -> Result<()> {
        if let Some(w) = self.workers {
            c.workers = w;
        }
        if self.kill_threshold.is_some() {
            c.kill_threshold = self.kill_threshold;
        }
        if self.max_results.is_some() {
            c.max_results = self.max_results;
        }
        if self.max_nodes.is_some() {
            c.max_nodes = self.max_nodes;
        }
        if let Some(s) = self.starter_side {
            c.starter_side = s;
        }
        if self.no_orientation {
            c.orientation = false;
        }
        c.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Seed {
    Prototile(usize),
    Star,
}

#[derive(Clone, Debug, Default)]
pub struct RenderArgs {
    pub k: Option<u32>,
    pub seed: Option<Seed>,
    pub family: Option<usize>,
}

fn io(e: std::io::Error) -> Error {
    Error::Config(format!("cannot write output: {e}"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn analyze(config: &CampaignConfig, out: &mut dyn Write) -> Result<Exit> {
    let problem = config.problem()?;
    let a = Analysis::new(&problem)?;
    write!(out, "{a}").map_err(io)?;
    Ok(if a.admissible() {
        Exit::Ok
    } else {
        Exit::Inadmissible
    })
}

pub fn search(
    config: &CampaignConfig,
    out_path: &Path,
    force: bool,
    out: &mut dyn Write,
) -> Result<Exit> {
    let problem = config.problem()?;
    if let Err(e) = &problem.m {
        if !force {
            return Err(e.clone());
        }
        let archive = ResultArchive::new(&problem, config, SearchStatus::NoResults, &[])?;
        write_file(out_path, &archive.emit())?;
        writeln!(
            out,
            "{e}\nno results; wrote empty archive to {}",
            out_path.display()
        )
        .map_err(io)?;
        return Ok(Exit::Ok);
    }
    let report = run_campaign(&problem, &config.campaign_options())?;
    if let Some(f) = &report.failure {
        return Err(Error::Internal(f.clone()));
    }
    let status = if report.truncated {
        SearchStatus::Truncated
    } else {
        SearchStatus::Complete
    };
    let archive = ResultArchive::new(&problem, config, status, &report.results)?;
    write_file(out_path, &archive.emit())?;
    let mut per: BTreeMap<(u32, u32), usize> = BTreeMap::new();
    for r in &report.results {
        *per.entry((r.t0, r.starter_class)).or_default() += 1;
    }
    writeln!(
        out,
        "{} results, {} nodes, {} splits",
        report.results.len(),
        report.nodes,
        report.snapshots
    )
    .map_err(io)?;
    for (p, t) in problem.protos.iter().enumerate() {
        let total: usize = per
            .range((p as u32, 0)..(p as u32 + 1, 0))
            .map(|(_, c)| c)
            .sum();
        let starters: Vec<String> = per
            .range((p as u32, 0)..(p as u32 + 1, 0))
            .map(|((_, s), c)| format!("a_{s}: {c}"))
            .collect();
        writeln!(out, "  {t}: {total} results [{}]", starters.join(", ")).map_err(io)?;
    }
    if report.truncated {
        writeln!(out, "truncated by limits; archive marked truncated").map_err(io)?;
    }
    writeln!(out, "wrote {}", out_path.display()).map_err(io)?;
    Ok(if report.truncated {
        Exit::Truncated
    } else {
        Exit::Ok
    })
}

pub fn post(input: &Path, out_path: &Path, out: &mut dyn Write) -> Result<Exit> {
    let archive = match Input::load(input)? {
        Input::Archive(a) => a,
        Input::Families(_) => {
            return Err(Error::Archive(
                "expected a result archive, got a families file".into(),
            ))
        }
    };
    let problem = archive.config.problem()?;
    let post = postprocess(&problem, &archive.results())?;
    let file = FamiliesFile {
        schema: SCHEMA_VERSION,
        config: archive.config.clone(),
        status: archive.status,
        post,
    };
    write_file(out_path, &file.emit())?;
    summarize(&problem, &file.post, out).map_err(io)?;
    if archive.status == SearchStatus::Truncated {
        writeln!(
            out,
            "input archive was truncated; families may be incomplete"
        )
        .map_err(io)?;
    }
    writeln!(out, "wrote {}", out_path.display()).map_err(io)?;
    Ok(Exit::Ok)
}

fn summarize(problem: &Problem, post: &Postprocessed, out: &mut dyn Write) -> std::io::Result<()> {
    let count = |s| post.results.iter().filter(|r| r.status == s).count();
    writeln!(
        out,
        "{} canonical results ({} complete, {} partial, {} inconsistent)",
        post.results.len(),
        count(ResultStatus::Complete),
        count(ResultStatus::Partial),
        count(ResultStatus::Inconsistent)
    )?;
    writeln!(
        out,
        "{} breakdown/orientation combinations, {} up to relabeling, in {} orientation classes",
        post.raw_combinations,
        post.families.len(),
        post.orientation_classes.len()
    )?;
    let names: Vec<String> = problem.protos.iter().map(ToString::to_string).collect();
    for (ci, c) in post.orientation_classes.iter().enumerate() {
        let x: String = c
            .orientation
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        writeln!(
            out,
            "class {ci} ({}), orientation {x}:",
            if c.standard {
                "standard"
            } else {
                "non-standard"
            }
        )?;
        for &fi in &c.families {
            let f = &post.families[fi];
            let sizes: Vec<String> = names
                .iter()
                .zip(f.sizes())
                .map(|(n, s)| format!("{n} x{s}"))
                .collect();
            writeln!(out, "  family {fi}: {}", sizes.join(", "))?;
        }
    }
    Ok(())
}

/// Family drawn when none is named: most rules in a standard class, else most rules.
fn default_family(post: &Postprocessed) -> Option<usize> {
    let standard = |f: &Family| post.orientation_classes[f.orientation_class].standard;
    (0..post.families.len()).max_by_key(|&i| {
        let f = &post.families[i];
        (standard(f), f.rule_count(), std::cmp::Reverse(i))
    })
}

pub fn render(
    input: &Path,
    out_path: &Path,
    args: &RenderArgs,
    out: &mut dyn Write,
) -> Result<Exit> {
    let input = Input::load(input)?;
    let problem = input.config().problem()?;
    let panels = match (&input, args.k) {
        (Input::Archive(a), None) => a
            .results()
            .into_iter()
            .zip(a.prototiles.iter().flat_map(|p| &p.results))
            .enumerate()
            .map(|(i, (r, ar))| Panel {
                title: format!("#{i} {}", problem.protos[r.t0 as usize]),
                tiles: r.tiles,
                orientation: ar.orientation.clone(),
            })
            .collect(),
        (Input::Archive(_), Some(_)) => {
            return Err(Error::Config(
                "--k needs a families file; run post first".into(),
            ));
        }
        (Input::Families(f), k) => {
            let post = &f.post;
            let fi = match args.family {
                Some(i) if i < post.families.len() => i,
                Some(i) => {
                    return Err(Error::Config(format!(
                        "no family {i}; there are {}",
                        post.families.len()
                    )))
                }
                None => default_family(post)
                    .ok_or_else(|| Error::Config("the families file has no families".into()))?,
            };
            let rule = first_rule(&problem, post, &post.families[fi])
                .ok_or_else(|| Error::Internal(format!("family {fi} has no rule")))?;
            match k {
                None => rule
                    .results
                    .iter()
                    .map(|r| Panel {
                        title: format!("family {fi}: {}", problem.protos[r.t0 as usize]),
                        tiles: r.tiles.clone(),
                        orientation: Some(rule.orientation.clone()),
                    })
                    .collect(),
                Some(k) => {
                    let seed = match args.seed.unwrap_or(Seed::Prototile(0)) {
                        Seed::Prototile(p) if p < problem.num_protos() => prototile_seed(p),
                        Seed::Prototile(p) => {
                            return Err(Error::Config(format!("no prototile {p}")))
                        }
                        Seed::Star => star_seed(&problem)?,
                    };
                    let tiles = iterate(&problem, &rule, &seed, k)?;
                    vec![Panel {
                        title: format!("family {fi}, level {k}, {} tiles", tiles.len()),
                        tiles,
                        orientation: Some(rule.orientation.clone()),
                    }]
                }
            }
        }
    };
    let svg = render_panels(&problem, &panels);
    write_file(out_path, &svg)?;
    writeln!(
        out,
        "wrote {} ({} panel{})",
        out_path.display(),
        panels.len(),
        if panels.len() == 1 { "" } else { "s" }
    )
    .map_err(io)?;
    Ok(Exit::Ok)
}

/// Default output path next to the input, with a new extension.
pub fn sibling(input: &Path, ext: &str) -> PathBuf {
    input.with_extension(ext)
}
