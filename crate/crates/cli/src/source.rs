//! Input streams: a point file or one of the synthetic generators.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use piecy::datagen::{
    gen_lower_bound, gen_random, gen_structured_with_noise, LowerBoundConfig, RandomConfig, SwnConfig,
};
use piecy::format::{Format, PointReader};
use piecy::WeightedPoint;

#[derive(Clone, Debug)]
pub enum Source {
    File {
        path: PathBuf,
        format: Format,
        weighted: bool,
    },
    Swn(SwnConfig),
    LowerBound(LowerBoundConfig),
    Random(RandomConfig),
}

pub type PointStream = Box<dyn Iterator<Item = Result<WeightedPoint>>>;

impl Source {
    /// Opens a fresh pass over the input. Generators restart from their seed.
    pub fn open(&self) -> Result<PointStream> {
        Ok(match self {
            Source::File { path, format, weighted } => {
                let reader = PointReader::open(path, *format, *weighted)
                    .with_context(|| format!("cannot open {}", path.display()))?;
                let path = path.clone();
                Box::new(reader.map(move |r| r.with_context(|| format!("reading {}", path.display()))))
            }
            Source::Swn(cfg) => unit(gen_structured_with_noise(cfg.clone())?),
            Source::LowerBound(cfg) => unit(gen_lower_bound(cfg.clone())?),
            Source::Random(cfg) => unit(gen_random(cfg.clone())?),
        })
    }

    pub fn is_weighted(&self) -> bool {
        matches!(self, Source::File { weighted: true, .. })
    }

    pub fn describe(&self) -> String {
        match self {
            Source::File { path, format, weighted } => format!(
                "file {} ({}{})",
                path.display(),
                match format {
                    Format::Csv => "csv",
                    Format::Bin => "bin",
                },
                if *weighted { ", weighted" } else { "" }
            ),
            Source::Swn(c) => format!(
                "swn clusters={} y={} d={} x={} spread={} noise={} seed={}",
                c.clusters, c.points_per_cluster, c.dim, c.active_dims, c.spread, c.noise, c.seed
            ),
            Source::LowerBound(c) => format!(
                "lower-bound k={} n={} outer={} inner={} seed={}",
                c.k, c.n, c.outer, c.inner, c.seed
            ),
            Source::Random(c) => format!("random n={} half_width={} seed={}", c.n, c.half_width, c.seed),
        }
    }
}

fn unit<I>(it: I) -> PointStream
where
    I: Iterator<Item = Vec<f64>> + 'static,
{
    Box::new(it.map(|x| Ok(WeightedPoint::unit(x))))
}

/// Rejects weighted input for pipelines that only take unit points.
pub fn require_unweighted(source: &Source, algo: &str) -> Result<()> {
    if source.is_weighted() {
        bail!("weighted input is only supported with --algo bico, not {algo}");
    }
    Ok(())
}
