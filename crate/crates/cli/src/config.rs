//! Line-oriented campaign configuration.
//!
//! ```text
//! # sevenfold, lambda = a_1 + a_2
//! n = 7
//! lambda = 1 1 0
//! prototiles = 1 2 4, 1 3 3, 2 2 3
//! workers = 4
//! ```
//!
//! `prototiles` defaults to the special set of `n`. Blank lines and `#` comments are
//! ignored; unknown keys are an error.

use serde::{Deserialize, Serialize};
use trisub::cyclotomic::AngleTriple;
use trisub::geometry::special_set;
use trisub::parallel::CampaignOptions;
use trisub::problem::Problem;
use trisub::search::SearchOptions;
use trisub::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub n: u32,
    pub prototiles: Vec<[u32; 3]>,
    pub lambda: Vec<u32>,
    pub workers: usize,
    pub kill_threshold: Option<usize>,
    pub starter_side: usize,
    pub max_results: Option<u64>,
    pub max_nodes: Option<u64>,
    pub orientation: bool,
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<u32>> {
    v.split_whitespace().map(|t| parse_num(key, t)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got {v:?}"
        ))),
    }
}

fn parse_limit<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>> {
    if v.trim() == "none" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut n = None;
        let mut prototiles = None;
        let mut lambda = None;
        let mut cfg = CampaignConfig {
            n: 0,
            prototiles: Vec::new(),
            lambda: Vec::new(),
            workers: 1,
            kill_threshold: None,
            starter_side: 0,
            max_results: None,
            max_nodes: None,
            orientation: true,
        };
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "n" => n = Some(parse_num(key, value)?),
                "lambda" => lambda = Some(parse_list(key, value)?),
                "prototiles" => {
                    let mut out = Vec::new();
                    for t in value.split(',') {
                        let v = parse_list(key, t)?;
                        let t: [u32; 3] = v.try_into().map_err(|_| {
                            Error::Config(format!("prototiles: {t:?} is not an angle triple"))
                        })?;
                        out.push(t);
                    }
                    prototiles = Some(out);
                }
                "workers" => cfg.workers = parse_num(key, value)?,
                "kill_threshold" => cfg.kill_threshold = parse_limit(key, value)?,
                "starter_side" => cfg.starter_side = parse_num(key, value)?,
                "max_results" => cfg.max_results = parse_limit(key, value)?,
                "max_nodes" => cfg.max_nodes = parse_limit(key, value)?,
                "orientation" => cfg.orientation = parse_bool(key, value)?,
                _ => {
                    return Err(Error::Config(format!(
                        "line {}: unknown key {key:?}",
                        lineno + 1
                    )))
                }
            }
        }
        cfg.n = n.ok_or_else(|| Error::Config("missing n".into()))?;
        cfg.lambda = lambda.ok_or_else(|| Error::Config("missing lambda".into()))?;
        cfg.prototiles = match prototiles {
            Some(p) => p,
            None => {
                if !trisub::cyclotomic::is_odd_prime(cfg.n) {
                    return Err(Error::UnsupportedOrder(cfg.n));
                }
                special_set(cfg.n).iter().map(|t| t.angles()).collect()
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        if self.starter_side > 2 {
            return Err(Error::Config(format!(
                "starter_side {} is not 0, 1 or 2",
                self.starter_side
            )));
        }
        self.triples().map(|_| ())
    }

    pub fn triples(&self) -> Result<Vec<AngleTriple>> {
        self.prototiles
            .iter()
            .map(|&[a, b, c]| AngleTriple::new(self.n, a, b, c))
            .collect()
    }

    /// Builds the problem; an inadmissible substitution matrix is kept inside it.
    pub fn problem(&self) -> Result<Problem> {
        Problem::new(self.n, &self.triples()?, &self.lambda)
    }

    pub fn campaign_options(&self) -> CampaignOptions {
        CampaignOptions {
            workers: self.workers,
            kill_threshold: self.kill_threshold,
            starter_side: self.starter_side,
            search: SearchOptions {
                orientation: self.orientation,
                ..SearchOptions::default()
            },
            max_nodes: self.max_nodes,
            max_results: self.max_results,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_to_special_set() {
        let c = CampaignConfig::parse("n = 7\nlambda = 1 1 0\n").unwrap();
        assert_eq!(c.prototiles, vec![[1, 2, 4], [1, 3, 3], [2, 2, 3]]);
        assert_eq!(c.workers, 1);
        assert!(c.orientation);
    }

    #[test]
    fn reads_every_key() {
        let c = CampaignConfig::parse(
            "# comment\nn = 5\nlambda = 1 1 # a_1 + a_2\nprototiles = 1 1 3, 1 2 2\nworkers = 3\n\
             kill_threshold = 6\nstarter_side = 2\nmax_results = 10\nmax_nodes = none\norientation = false\n",
        )
        .unwrap();
        assert_eq!(c.kill_threshold, Some(6));
        assert_eq!(c.starter_side, 2);
        assert_eq!(c.max_results, Some(10));
        assert_eq!(c.max_nodes, None);
        assert!(!c.orientation);
        assert!(!c.campaign_options().search.orientation);
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "lambda = 1 1",
            "n = 5",
            "n = 9\nlambda = 1 1 1 1",
            "n = 5\nlambda = 1 1\ncolour = red",
            "n = 5\nlambda = 1 1\nprototiles = 1 1",
            "n = 5\nlambda = 1 1\nprototiles = 1 1 2",
            "n = 5\nlambda = 1 1\nworkers = 0",
            "n = 5\nlambda = 1 1\nstarter_side = 3",
            "n = 5\nlambda = x",
            "n = 5\nlambda 1 1",
        ] {
            assert!(CampaignConfig::parse(text).is_err(), "{text}");
        }
    }
}
