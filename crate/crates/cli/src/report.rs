//! Run report, emitted as TOML.
//!
//! Schema (version 1):
//!
//! ```toml
//! report_version = 1
//! algorithm = "piecy"        # bico | piecy | piecy-mr
//! input = "..."              # file or generator description
//! seed = 0
//! n = 10000                  # points read (total weight for weighted input)
//! d = 200
//! k = 20
//! coreset_points = 812       # number of weighted points in the coreset
//! coreset_weight = 10000     # sum of coreset weights, equals n
//!
//! [config]                   # every knob the pipeline ran with
//! [timings]                  # seconds: ingest, svd, coreset, eval, total
//! [stats]                    # pieces, svd_calls; tree counters for piecy-mr
//! [coreset_cost]             # min/max/avg/median over repetitions, on the coreset
//! [full_cost]                # same centers evaluated on the full input
//! [spectrum]                 # optional: leading singular values of the input
//! [svd_comparison]           # optional: exact vs randomized truncated SVD
//! ```
//!
//! Apart from `[timings]` and the `*_seconds` fields of `[svd_comparison]`,
//! identical flags produce identical reports.

use piecy::CostSummary;
use serde::Serialize;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub report_version: u32,
    pub algorithm: String,
    pub input: String,
    pub seed: u64,
    pub n: u64,
    pub d: usize,
    pub k: usize,
    pub coreset_points: usize,
    pub coreset_weight: u64,
    pub config: ConfigEcho,
    pub timings: Timings,
    pub stats: Stats,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coreset_cost: Option<CostEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_cost: Option<CostEcho>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svd_comparison: Option<SvdComparisonEcho>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigEcho {
    pub coreset_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub piece_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svd_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_pieces: Option<usize>,
    pub svd_backend: String,
    pub oversample: usize,
    pub power_iterations: usize,
    pub reps: usize,
    pub max_iters: usize,
    pub eval: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub ingest: f64,
    pub svd: f64,
    pub coreset: f64,
    pub eval: f64,
    pub total: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Stats {
    pub pieces: usize,
    pub svd_calls: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flushes_per_level: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub received_per_level: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_live_engines: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_projectors: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostEcho {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    pub median: f64,
    pub costs: Vec<f64>,
}

impl From<&CostSummary> for CostEcho {
    fn from(s: &CostSummary) -> Self {
        Self {
            min: s.min,
            max: s.max,
            avg: s.avg,
            median: s.median,
            costs: s.costs.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Spectrum {
    pub singular_values: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SvdComparisonEcho {
    pub rank: usize,
    pub exact_error: f64,
    pub randomized_error: f64,
    pub relative_deviation: f64,
    pub exact_seconds: f64,
    pub randomized_seconds: f64,
}

impl RunReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report fields are all representable in TOML")
    }
}
