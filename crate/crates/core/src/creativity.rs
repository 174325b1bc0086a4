//! Windowed creativity measure.
//!
//! At split point `t` the stream is cut into a past window ending just
//! before `t` and a future window starting at `t`. The measure `c` is the
//! log likelihood ratio of "past and future come from separately fitted
//! models" against one of two alternatives:
//!
//! * [`Variant::SplitVsPooled`]: one model fitted on both windows.
//! * [`Variant::SplitVsFuture`]: both windows explained by the future model,
//!   which reduces to `LL(past | H_past) − LL(past | H_future)`.
//!
//! Windows never share the boundary transition: the pooled model sees past
//! and future as separate sessions, so with maximum-likelihood fits the
//! pooled variant is always `c ≥ 0`.

use std::io::{BufRead, Write};
use std::ops::Range;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::markov::{EventStream, FitOptions, MarkovError, TransitionCounts};
use crate::stats::{self, CountVector, StatsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CreativityError {
    #[error("split point {t} leaves an empty or incomplete window")]
    EmptyWindow { t: usize },
    #[error("the split-vs-future variant needs a positive pseudocount")]
    PseudocountRequired,
    #[error("split point {t}: the future model gives zero probability to the past (infinite evidence)")]
    InfiniteEvidence { t: usize },
    #[error("no evaluation point has complete windows")]
    NoEvalPoints,
    #[error("multi-scale scans require the multinomial model class")]
    UnsupportedModelClass,
    #[error("smoothing width must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("trace csv line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

pub type Result<T> = std::result::Result<T, CreativityError>;

/// Extent of one side of the split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    /// Exactly this many events.
    Fixed(usize),
    /// Everything up to (past) or from (future) the split.
    All,
}

impl Window {
    fn scaled(self, sigma: f64) -> Window {
        match self {
            Window::Fixed(n) => Window::Fixed(((n as f64) * sigma).ceil() as usize),
            Window::All => Window::All,
        }
    }
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(Window::All);
        }
        match s.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Window::Fixed(n)),
            _ => Err(format!("expected a positive integer or `all`, got `{s}`")),
        }
    }
}

/// Which split points are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalPoints {
    All,
    /// Only points right after the finger leaves the screen, i.e. the last
    /// past event is an off-screen grid state.
    OffScreen,
}

impl FromStr for EvalPoints {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "all" => Ok(EvalPoints::All),
            "offscreen" => Ok(EvalPoints::OffScreen),
            _ => Err(format!("expected `all` or `offscreen`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Variant {
    #[default]
    SplitVsPooled,
    SplitVsFuture,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::SplitVsPooled => "pooled",
            Variant::SplitVsFuture => "future",
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "pooled" => Ok(Variant::SplitVsPooled),
            "future" => Ok(Variant::SplitVsFuture),
            _ => Err(format!("expected `pooled` or `future`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelClass {
    Markov,
    Multinomial,
}

impl FromStr for ModelClass {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "markov" => Ok(ModelClass::Markov),
            "multinomial" => Ok(ModelClass::Multinomial),
            _ => Err(format!("expected `markov` or `multinomial`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub kappa: Window,
    pub tau: Window,
    pub eval_points: EvalPoints,
    pub variant: Variant,
}

impl WindowSpec {
    /// Whole history against whole remainder, evaluated after every
    /// finger lift, split-vs-pooled.
    pub fn all_history_offscreen() -> Self {
        Self { kappa: Window::All, tau: Window::All, eval_points: EvalPoints::OffScreen, variant: Variant::SplitVsPooled }
    }

    pub fn fixed(kappa: usize, tau: usize) -> Self {
        Self { kappa: Window::Fixed(kappa), tau: Window::Fixed(tau), eval_points: EvalPoints::All, variant: Variant::SplitVsPooled }
    }

    /// Past and future index ranges at split `t` for a stream of `len`
    /// events, or `None` if either would be empty or truncated.
    pub fn windows(&self, t: usize, len: usize) -> Option<(Range<usize>, Range<usize>)> {
        if t == 0 || t >= len {
            return None;
        }
        let past = match self.kappa {
            Window::All => 0..t,
            Window::Fixed(k) if k >= 1 && k <= t => t - k..t,
            Window::Fixed(_) => return None,
        };
        let future = match self.tau {
            Window::All => t..len,
            Window::Fixed(k) if k >= 1 && t + k <= len => t..t + k,
            Window::Fixed(_) => return None,
        };
        Some((past, future))
    }

    fn selects(&self, stream: &EventStream, t: usize) -> bool {
        match self.eval_points {
            EvalPoints::All => true,
            EvalPoints::OffScreen => GridSpec::default().is_off_screen(stream.events()[t - 1]),
        }
    }

    fn scaled(&self, sigma: f64) -> Self {
        Self { kappa: self.kappa.scaled(sigma), tau: self.tau.scaled(sigma), ..*self }
    }
}

/// Low-pass kernel applied to one-hot encoded events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// Centered box of width `⌈σ⌉`, rounded up to an odd width.
    #[default]
    Box,
    /// Two-sided `exp(−|d| / σ)`, truncated at `|d| ≤ ⌊3σ⌋`.
    Exponential,
}

impl FromStr for Kernel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "box" => Ok(Kernel::Box),
            "exponential" | "exp" => Ok(Kernel::Exponential),
            _ => Err(format!("expected `box` or `exponential`, got `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub sigma: f64,
    pub kernel: Kernel,
}

impl SmoothingSpec {
    pub fn new(sigma: f64, kernel: Kernel) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(CreativityError::InvalidSigma(sigma));
        }
        Ok(Self { sigma, kernel })
    }

    /// Kernel weights for offsets `-r..=r`.
    fn taps(&self) -> Vec<f64> {
        match self.kernel {
            Kernel::Box => {
                let mut width = self.sigma.ceil().max(1.0) as usize;
                if width.is_multiple_of(2) {
                    width += 1;
                }
                vec![1.0; width]
            }
            Kernel::Exponential => {
                let r = (3.0 * self.sigma).floor() as i64;
                (-r..=r).map(|d| (-(d.abs() as f64) / self.sigma).exp()).collect()
            }
        }
    }
}

/// Per-event fractional state weights; every row sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftCounts {
    n_states: usize,
    weights: Vec<f64>,
}

impl SoftCounts {
    pub fn len(&self) -> usize {
        self.weights.len() / self.n_states
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn at(&self, t: usize) -> &[f64] {
        &self.weights[t * self.n_states..(t + 1) * self.n_states]
    }

    /// Running sums: row `t` holds the total weight of events `0..t`.
    fn prefix_sums(&self) -> Vec<f64> {
        let n = self.n_states;
        let mut out = vec![0.0; (self.len() + 1) * n];
        for t in 0..self.len() {
            for s in 0..n {
                out[(t + 1) * n + s] = out[t * n + s] + self.weights[t * n + s];
            }
        }
        out
    }
}

/// Convolves the one-hot encoding of `stream` with the smoothing kernel,
/// renormalizing the kernel where it runs past either end of the stream.
pub fn smooth(stream: &EventStream, spec: &SmoothingSpec) -> SoftCounts {
    let n = stream.n_states();
    let events = stream.events();
    let taps = spec.taps();
    let radius = (taps.len() / 2) as i64;
    let len = events.len() as i64;
    let mut weights = vec![0.0; events.len() * n];
    for t in 0..len {
        let row = &mut weights[t as usize * n..(t as usize + 1) * n];
        let mut mass = 0.0;
        for (k, w) in taps.iter().enumerate() {
            let u = t + k as i64 - radius;
            if (0..len).contains(&u) {
                row[events[u as usize]] += w;
                mass += w;
            }
        }
        row.iter_mut().for_each(|x| *x /= mass);
    }
    SoftCounts { n_states: n, weights }
}

/// Creativity at one split point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub c: f64,
    pub nu: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CreativityRecord {
    pub t: usize,
    pub c: f64,
    pub nu: usize,
    pub c_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreativityTrace {
    pub records: Vec<CreativityRecord>,
    pub spec: WindowSpec,
    pub sigma: f64,
    pub model_class: ModelClass,
}

impl CreativityTrace {
    /// Record with the largest `c/ν`; the earliest one on ties.
    pub fn argmax(&self) -> Option<&CreativityRecord> {
        self.records.iter().fold(None, |best: Option<&CreativityRecord>, r| match best {
            Some(b) if b.c_scaled >= r.c_scaled => Some(b),
            _ => Some(r),
        })
    }

    pub fn max_scaled(&self) -> Option<f64> {
        self.argmax().map(|r| r.c_scaled)
    }
}

fn record(t: usize, p: Point) -> CreativityRecord {
    let nu = p.nu.max(1);
    CreativityRecord { t, c: p.c, nu, c_scaled: p.c / nu as f64 }
}

/// Creativity `c` and its degrees of freedom `ν` at split point `t`.
pub fn creativity_at(stream: &EventStream, t: usize, spec: &WindowSpec, model_class: ModelClass, fit_opts: FitOptions) -> Result<Point> {
    if spec.variant == Variant::SplitVsFuture && (fit_opts.pseudocount.is_nan() || fit_opts.pseudocount <= 0.0) {
        return Err(CreativityError::PseudocountRequired);
    }
    let (past, future) = spec.windows(t, stream.len()).ok_or(CreativityError::EmptyWindow { t })?;
    match model_class {
        ModelClass::Markov => markov_point(stream, t, past, future, spec.variant, fit_opts),
        ModelClass::Multinomial => {
            let n = stream.n_states();
            let r = CountVector::histogram(&stream.events()[past], n)?;
            let s = CountVector::histogram(&stream.events()[future], n)?;
            multinomial_point(&r, &s, t, spec.variant, fit_opts)
        }
    }
}

/// `ν` is the free-parameter count of the pooled fit: occupied transition
/// cells and start states, minus one normalization per occupied row and one
/// for `π`. Counting over the union of both windows keeps `ν` meaningful
/// when one window explores states the other never visits.
fn markov_point(
    stream: &EventStream,
    t: usize,
    past: Range<usize>,
    future: Range<usize>,
    variant: Variant,
    opts: FitOptions,
) -> Result<Point> {
    let past = TransitionCounts::from_range(stream, past);
    let future = TransitionCounts::from_range(stream, future);
    let pooled = past.merged(&future);
    let h_past = past.fit(opts)?;
    let h_future = future.fit(opts)?;
    let c = match variant {
        Variant::SplitVsPooled => {
            let h_pooled = pooled.fit(opts)?;
            past.log_likelihood(&h_past)? + future.log_likelihood(&h_future)? - pooled.log_likelihood(&h_pooled)?
        }
        Variant::SplitVsFuture => {
            let cross = match past.log_likelihood(&h_future) {
                Err(MarkovError::ZeroProbability { .. }) => return Err(CreativityError::InfiniteEvidence { t }),
                other => other?,
            };
            past.log_likelihood(&h_past)? - cross
        }
    };
    Ok(Point { c, nu: pooled.free_parameters().max(1) })
}

/// Smoothed multinomial estimate `(count + λ) / (total + Nλ)`.
fn fit_multinomial(counts: &CountVector, lambda: f64) -> Result<CountVector> {
    let denom = counts.total() + lambda * counts.len() as f64;
    if denom <= 0.0 {
        return Err(StatsError::AllZero.into());
    }
    Ok(CountVector::new(counts.counts().iter().map(|c| (c + lambda) / denom).collect())?)
}

fn multinomial_log_likelihood(counts: &CountVector, probs: &CountVector) -> f64 {
    counts.counts().iter().zip(probs.counts()).filter(|(c, _)| **c > 0.0).map(|(c, p)| c * p.ln()).sum()
}

fn multinomial_point(r: &CountVector, s: &CountVector, t: usize, variant: Variant, opts: FitOptions) -> Result<Point> {
    let lambda = opts.pseudocount;
    let c = match variant {
        Variant::SplitVsPooled if lambda == 0.0 => stats::two_way_likelihood_ratio(r, s)?,
        Variant::SplitVsPooled => {
            let pooled = CountVector::new(r.counts().iter().zip(s.counts()).map(|(a, b)| a + b).collect())?;
            multinomial_log_likelihood(r, &fit_multinomial(r, lambda)?) + multinomial_log_likelihood(s, &fit_multinomial(s, lambda)?)
                - multinomial_log_likelihood(&pooled, &fit_multinomial(&pooled, lambda)?)
        }
        Variant::SplitVsFuture => match stats::one_way_likelihood_ratio(r, &fit_multinomial(r, lambda)?, &fit_multinomial(s, lambda)?) {
            Err(StatsError::InfiniteEvidence { .. }) => return Err(CreativityError::InfiniteEvidence { t }),
            other => other?,
        },
    };
    Ok(Point { c, nu: stats::degrees_of_freedom(r, s)? })
}

fn eval_points(stream: &EventStream, spec: &WindowSpec, window_spec: &WindowSpec) -> Vec<usize> {
    (1..stream.len()).filter(|&t| window_spec.windows(t, stream.len()).is_some() && spec.selects(stream, t)).collect()
}

/// Evaluates every selected split point. Points are computed in parallel and
/// returned in increasing `t`.
pub fn scan(stream: &EventStream, spec: &WindowSpec, model_class: ModelClass, fit_opts: FitOptions) -> Result<CreativityTrace> {
    let points = eval_points(stream, spec, spec);
    if points.is_empty() {
        return Err(CreativityError::NoEvalPoints);
    }
    let records = points
        .into_par_iter()
        .map(|t| creativity_at(stream, t, spec, model_class, fit_opts).map(|p| record(t, p)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CreativityTrace { records, spec: *spec, sigma: 1.0, model_class })
}

/// One multinomial scan per smoothing width: events are smoothed with
/// `kernel` at width σ and both windows are stretched to `⌈σκ⌉`, `⌈στ⌉`.
/// Evaluation points are chosen on the unsmoothed stream.
pub fn multiscale_scan(
    stream: &EventStream,
    base_spec: &WindowSpec,
    sigmas: &[f64],
    kernel: Kernel,
    model_class: ModelClass,
    fit_opts: FitOptions,
) -> Result<Vec<CreativityTrace>> {
    if model_class != ModelClass::Multinomial {
        return Err(CreativityError::UnsupportedModelClass);
    }
    if base_spec.variant == Variant::SplitVsFuture && (fit_opts.pseudocount.is_nan() || fit_opts.pseudocount <= 0.0) {
        return Err(CreativityError::PseudocountRequired);
    }
    let n = stream.n_states();
    sigmas
        .iter()
        .map(|&sigma| {
            let smoothing = SmoothingSpec::new(sigma, kernel)?;
            let spec = base_spec.scaled(sigma);
            let prefix = smooth(stream, &smoothing).prefix_sums();
            let window_counts =
                |r: Range<usize>| CountVector::new((0..n).map(|s| prefix[r.end * n + s] - prefix[r.start * n + s]).collect());
            let records = eval_points(stream, base_spec, &spec)
                .into_par_iter()
                .map(|t| {
                    let (past, future) = spec.windows(t, stream.len()).expect("filtered by eval_points");
                    let p = multinomial_point(&window_counts(past)?, &window_counts(future)?, t, spec.variant, fit_opts)?;
                    Ok(record(t, p))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CreativityTrace { records, spec, sigma, model_class })
        })
        .collect()
}

/// Local maxima of `c/ν` strictly above `threshold`. A maximum must strictly
/// exceed its neighbours; a flat top counts once, at its leftmost record.
/// The first and last records are never peaks.
pub fn detect_peaks(trace: &CreativityTrace, threshold: f64) -> Vec<(usize, f64)> {
    let v: Vec<f64> = trace.records.iter().map(|r| r.c_scaled).collect();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < v.len() {
        if v[i] > v[i - 1] {
            let mut j = i;
            while j + 1 < v.len() && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < v.len() && v[j + 1] < v[i] && v[i] > threshold {
                peaks.push((trace.records[i].t, v[i]));
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

pub const TRACE_CSV_HEADER: &str = "t,c,nu,c_scaled,sigma,variant";

/// Writes the header followed by every record of every trace.
pub fn write_traces_csv<W: Write>(traces: &[CreativityTrace], mut out: W) -> std::io::Result<()> {
    use crate::format_f64;
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for trace in traces {
        for r in &trace.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.t,
                format_f64(r.c),
                r.nu,
                format_f64(r.c_scaled),
                format_f64(trace.sigma),
                trace.spec.variant.as_str()
            )?;
        }
    }
    Ok(())
}

/// Parses trace CSV rows back into `(sigma, record)` pairs.
pub fn read_traces_csv<R: BufRead>(input: R) -> Result<Vec<(f64, CreativityRecord)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line.map_err(|e| CreativityError::Csv { line: line_no, message: e.to_string() })?;
        if i == 0 {
            if line.trim() != TRACE_CSV_HEADER {
                return Err(CreativityError::Csv { line: 1, message: format!("unexpected header `{line}`") });
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |message: String| CreativityError::Csv { line: line_no, message };
        if fields.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", fields.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(format!("`{s}`: {e}")));
        let real = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("`{s}`: {e}")));
        let record = CreativityRecord { t: int(fields[0])?, c: real(fields[1])?, nu: int(fields[2])?, c_scaled: real(fields[3])? };
        out.push((real(fields[4])?, record));
    }
    Ok(out)
}
