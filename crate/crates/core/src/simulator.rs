//! Simulated touch-grid player.
//!
//! Two play styles are built in, each a deterministic 18-state chain before
//! noise is added:
//!
//! * `linear`: left to right along a row, lift the finger, start the next row
//!   up; after the top row, return to the bottom row.
//! * `loopy`: around the grid perimeter `0→1→2→5→8→7→6→3`, lift the finger
//!   after each loop and start again at the bottom-left cell.
//!
//! Unvisited states still get a single successor (off-screen states return
//! to cell 0, the centre cell of `loopy` lifts the finger) so that every row
//! is stochastic. Both styles can be replaced through a JSON style catalog.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::creativity::{self, CreativityError, CreativityTrace, ModelClass, WindowSpec};
pub use crate::grid::GridSpec;
use crate::markov::{rng_from_seed, EventStream, FitOptions, MarkovError, MarkovModel};

pub const LINEAR: &str = "linear";
pub const LOOPY: &str = "loopy";

/// Noise levels plotted in the reference experiment.
pub const FIGURE2_EPSILONS: [f64; 4] = [0.0, 1e-5, 1e-4, 1e-3];
/// Block length of the reference schedule.
pub const BLOCK_LEN: usize = 300;
/// Median window used for the peak-to-median summary.
pub const MEDIAN_RANGE: (usize, usize) = (1200, 2300);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulatorError {
    #[error("unknown style `{0}`")]
    UnknownStyle(String),
    #[error("style `{name}` has {found} states, expected {expected}")]
    StyleShape { name: String, expected: usize, found: usize },
    #[error("block {0} has zero length")]
    EmptyBlock(usize),
    #[error("schedule has no blocks")]
    EmptySchedule,
    #[error("epsilon must be finite and >= 0, got {0}")]
    InvalidEpsilon(f64),
    #[error("json: {0}")]
    Json(String),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Creativity(#[from] CreativityError),
}

pub type Result<T> = std::result::Result<T, SimulatorError>;

#[derive(Debug, Clone, PartialEq)]
pub struct StyleDefinition {
    pub name: String,
    pub model: MarkovModel,
}

/// Chain with one certain successor per state.
fn deterministic_chain(grid: &GridSpec, start: usize, next: impl Fn(usize) -> usize) -> MarkovModel {
    let n = grid.n_states();
    let mut pi = vec![0.0; n];
    pi[start] = 1.0;
    let theta = (0..n)
        .map(|s| {
            let mut row = vec![0.0; n];
            row[next(s)] = 1.0;
            row
        })
        .collect();
    MarkovModel::new(pi, theta).expect("deterministic chains are stochastic")
}

pub fn build_linear_style() -> StyleDefinition {
    let g = GridSpec::default();
    let model = deterministic_chain(&g, 0, |s| {
        if g.is_off_screen(s) {
            let cell = g.last_cell(s);
            if cell % g.cols == g.cols - 1 {
                let row = cell / g.cols;
                return g.cell((row + 1) % g.rows, 0);
            }
            return 0;
        }
        if s % g.cols == g.cols - 1 {
            g.off_screen(s)
        } else {
            s + 1
        }
    });
    StyleDefinition { name: LINEAR.to_string(), model }
}

pub fn build_loopy_style() -> StyleDefinition {
    let g = GridSpec::default();
    let perimeter = [0usize, 1, 2, 5, 8, 7, 6, 3];
    let model = deterministic_chain(&g, 0, |s| {
        if g.is_off_screen(s) {
            return 0;
        }
        match perimeter.iter().position(|&c| c == s) {
            Some(i) if i + 1 < perimeter.len() => perimeter[i + 1],
            // The loop closes by lifting the finger; the centre cell is off the path.
            _ => g.off_screen(s),
        }
    });
    StyleDefinition { name: LOOPY.to_string(), model }
}

/// Named play styles, serialized as a JSON object `{name: model}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StyleCatalog {
    styles: BTreeMap<String, MarkovModel>,
}

impl StyleCatalog {
    pub fn builtin() -> Self {
        let mut styles = BTreeMap::new();
        for s in [build_linear_style(), build_loopy_style()] {
            styles.insert(s.name, s.model);
        }
        Self { styles }
    }

    pub fn get(&self, name: &str) -> Option<&MarkovModel> {
        self.styles.get(name)
    }

    pub fn insert(&mut self, style: StyleDefinition) {
        self.styles.insert(style.name, style.model);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.styles.keys().map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("catalog serialization is infallible")
    }

    /// Parses a catalog; entries override or extend the built-in styles.
    pub fn from_json(s: &str) -> Result<Self> {
        let raw: BTreeMap<String, serde_json::Value> = serde_json::from_str(s).map_err(|e| SimulatorError::Json(e.to_string()))?;
        let mut catalog = Self::builtin();
        let n = GridSpec::default().n_states();
        for (name, value) in raw {
            let model = MarkovModel::from_json(&value.to_string())?;
            if model.n_states() != n {
                return Err(SimulatorError::StyleShape { name, expected: n, found: model.n_states() });
            }
            catalog.styles.insert(name, model);
        }
        Ok(catalog)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub style: String,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub blocks: Vec<Block>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Schedule {
    /// Eight blocks of 300 events: linear ×3, then loopy/linear alternating.
    pub fn reference(epsilon: f64, seed: u64) -> Self {
        let order = [LINEAR, LINEAR, LINEAR, LOOPY, LINEAR, LOOPY, LINEAR, LOOPY];
        let blocks = order.iter().map(|s| Block { style: s.to_string(), length: BLOCK_LEN }).collect();
        Self { blocks, epsilon, seed }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| SimulatorError::Json(e.to_string()))
    }

    pub fn total_len(&self) -> usize {
        self.blocks.iter().map(|b| b.length).sum()
    }
}

/// Samples the schedule as one continuous play session.
///
/// The first event is drawn from the first style's initial distribution;
/// after that each block keeps walking from the last state of the previous
/// block using its own (ε-perturbed) transitions. Sessions are split
/// wherever the finger returns to the screen.
pub fn run_schedule(schedule: &Schedule, catalog: &StyleCatalog) -> Result<EventStream> {
    let eps = schedule.epsilon;
    if !(eps.is_finite() && eps >= 0.0) {
        return Err(SimulatorError::InvalidEpsilon(eps));
    }
    if schedule.blocks.is_empty() {
        return Err(SimulatorError::EmptySchedule);
    }
    let mut models: BTreeMap<&str, MarkovModel> = BTreeMap::new();
    for (i, block) in schedule.blocks.iter().enumerate() {
        if block.length == 0 {
            return Err(SimulatorError::EmptyBlock(i));
        }
        if !models.contains_key(block.style.as_str()) {
            let base = catalog.get(&block.style).ok_or_else(|| SimulatorError::UnknownStyle(block.style.clone()))?;
            models.insert(&block.style, base.perturb(eps)?);
        }
    }

    let grid = GridSpec::default();
    let mut rng = rng_from_seed(schedule.seed);
    let mut events = Vec::with_capacity(schedule.total_len());
    for block in &schedule.blocks {
        let model = &models[block.style.as_str()];
        for _ in 0..block.length {
            let next = match events.last() {
                None => model.draw_initial(&mut rng),
                Some(&prev) => model.draw_next(prev, &mut rng),
            };
            events.push(next);
        }
    }
    Ok(EventStream::split_by(grid.n_states(), events, |a, b| grid.is_session_boundary(a, b))?)
}

/// A random sparse chain: every state gets `out_degree` distinct successors
/// with weights uniform in `[0.5, 1.5]`, and the initial distribution is
/// uniform. Used for synthetic change-point streams.
pub fn random_chain<R: Rng + ?Sized>(n_states: usize, out_degree: usize, rng: &mut R) -> MarkovModel {
    let k = out_degree.clamp(1, n_states);
    let theta = (0..n_states)
        .map(|_| {
            let mut row = vec![0.0; n_states];
            for j in rand::seq::index::sample(rng, n_states, k) {
                row[j] = rng.random_range(0.5..1.5);
            }
            let total: f64 = row.iter().sum();
            row.iter().map(|w| w / total).collect()
        })
        .collect();
    MarkovModel::new(vec![1.0 / n_states as f64; n_states], theta).expect("rows are normalized")
}

/// Window setup of the reference experiment: the whole history against the
/// whole remainder, evaluated each time the finger leaves the screen.
pub fn figure2_spec() -> WindowSpec {
    WindowSpec::all_history_offscreen()
}

/// Runs the reference schedule once per ε (same seed for every ε) and scans
/// each stream with the Markov split-vs-pooled measure.
pub fn figure2_experiment(epsilons: &[f64], seed: u64) -> Result<Vec<(f64, CreativityTrace)>> {
    let catalog = StyleCatalog::builtin();
    epsilons
        .par_iter()
        .map(|&eps| {
            let stream = run_schedule(&Schedule::reference(eps, seed), &catalog)?;
            let trace = creativity::scan(&stream, &figure2_spec(), ModelClass::Markov, FitOptions::default())?;
            Ok((eps, trace))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceSummary {
    pub points: usize,
    pub peak_t: usize,
    pub peak_c_scaled: f64,
    /// Median `c/ν` over evaluation points with `t` in [`MEDIAN_RANGE`].
    pub median_c_scaled: f64,
    pub peak_to_median: f64,
}

pub fn summarize(trace: &CreativityTrace) -> Option<TraceSummary> {
    let peak = trace.argmax()?;
    let mut tail: Vec<f64> =
        trace.records.iter().filter(|r| (MEDIAN_RANGE.0..=MEDIAN_RANGE.1).contains(&r.t)).map(|r| r.c_scaled).collect();
    tail.sort_by(f64::total_cmp);
    let median = match tail.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => tail[n / 2],
        n => 0.5 * (tail[n / 2 - 1] + tail[n / 2]),
    };
    Some(TraceSummary {
        points: trace.records.len(),
        peak_t: peak.t,
        peak_c_scaled: peak.c_scaled,
        median_c_scaled: median,
        peak_to_median: peak.c_scaled / median,
    })
}
