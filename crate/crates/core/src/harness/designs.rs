//! Initial designs shared by every solver of a case study.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::format::{self, header, parse_line, read_body, write_json_line};
use super::seed::design_seed;
use crate::benchmarks::{latin_hypercube, BenchmarkId};
use crate::error::{Error, Result};

pub const KIND: &str = "designs";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct DesignMeta {
    pub benchmark: BenchmarkId,
    pub n: usize,
    pub experiments: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Design {
    pub experiment: usize,
    pub seed: u64,
    pub points: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignSet {
    pub meta: DesignMeta,
    pub designs: Vec<Design>,
}

/// One Latin hypercube design of `n` points per experiment, each drawn from
/// its own derived stream.
pub fn gen_designs(benchmark: BenchmarkId, n: usize, experiments: usize, seed: u64) -> Result<DesignSet> {
    if n == 0 {
        return Err(Error::config("n", "must be at least 1"));
    }
    if experiments == 0 {
        return Err(Error::config("experiments", "must be at least 1"));
    }
    let bounds = benchmark.search_box();
    let designs = (0..experiments)
        .map(|e| {
            let s = design_seed(seed, benchmark.name(), e);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            Design {
                experiment: e,
                seed: s,
                points: latin_hypercube(n, &bounds, &mut rng),
            }
        })
        .collect();
    Ok(DesignSet {
        meta: DesignMeta {
            benchmark,
            n,
            experiments,
            seed,
        },
        designs,
    })
}

impl DesignSet {
    pub fn to_text(&self) -> Result<String> {
        let mut buf = Vec::new();
        buf.extend_from_slice(header(KIND).as_bytes());
        buf.push(b'\n');
        write_json_line(&mut buf, &self.meta)?;
        for d in &self.designs {
            write_json_line(&mut buf, d)?;
        }
        Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let body = read_body(text, KIND, false)?;
        let mut it = body.into_iter();
        let (line, meta_text) = it.next().ok_or(Error::Format {
            what: KIND,
            line: 2,
            message: "missing metadata line".into(),
        })?;
        let meta: DesignMeta = parse_line(KIND, line, &meta_text)?;
        let bounds = meta.benchmark.search_box();
        let mut designs = Vec::new();
        for (line, text) in it {
            let d: Design = parse_line(KIND, line, &text)?;
            let bad = |message: String| Error::Format {
                what: KIND,
                line,
                message,
            };
            if d.experiment != designs.len() {
                return Err(bad(format!(
                    "expected experiment {}, found {}",
                    designs.len(),
                    d.experiment
                )));
            }
            if d.points.len() != meta.n {
                return Err(bad(format!("expected {} points, found {}", meta.n, d.points.len())));
            }
            if let Some(p) = d.points.iter().find(|p| !bounds.contains(p)) {
                return Err(bad(format!("point {p:?} lies outside the {} domain", meta.benchmark)));
            }
            designs.push(d);
        }
        if designs.len() != meta.experiments {
            return Err(Error::Format {
                what: KIND,
                line: designs.len() + 3,
                message: format!("expected {} designs, found {}", meta.experiments, designs.len()),
            });
        }
        Ok(Self { meta, designs })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&format::read_to_string(path)?)
    }
}
