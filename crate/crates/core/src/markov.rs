//! Fully observed first-order Markov chains over a finite alphabet.
//!
//! Streams are split into sessions. Each session starts from the initial
//! distribution `pi`; the step across a session boundary is never a
//! transition. Likelihoods are exact products over sessions, so a zero
//! probability factor is reported as [`MarkovError::ZeroProbability`] instead
//! of leaking `-inf` into arithmetic.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for "sums to one" checks.
const STOCHASTIC_TOL: f64 = 1e-9;

/// The sampling generator. ChaCha with 8 rounds, seeded through
/// `SeedableRng::seed_from_u64`; its output stream is fixed by the algorithm
/// and identical on every platform.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarkovError {
    #[error("a model needs at least one state")]
    NoStates,
    #[error("state {state} out of range for {n_states} states")]
    StateOutOfRange { state: usize, n_states: usize },
    #[error("session {0} is empty")]
    EmptySession(usize),
    #[error("{what} does not sum to 1 (sum = {sum})")]
    NotStochastic { what: String, sum: f64 },
    #[error("{what} has a negative or non-finite entry")]
    InvalidProbability { what: String },
    #[error("expected {expected} entries, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("cannot fit a model to an empty stream without a pseudocount")]
    EmptyStream,
    #[error("zero-probability event in session {session} at position {position}")]
    ZeroProbability { session: usize, position: usize },
    #[error("transition out of state {0}, whose row was never observed during fitting")]
    UnobservedRow(usize),
    #[error("pseudocount must be finite and >= 0, got {0}")]
    InvalidPseudocount(f64),
    #[error("epsilon must be finite and >= 0, got {0}")]
    InvalidEpsilon(f64),
    #[error("session lengths must be >= 1")]
    InvalidLength,
    #[error("model json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, MarkovError>;

/// A time-ordered sequence of state indices split into sessions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    n_states: usize,
    events: Vec<usize>,
    /// Offset of the first event of each session; strictly increasing,
    /// `session_starts[0] == 0` whenever the stream is non-empty.
    session_starts: Vec<usize>,
}

impl EventStream {
    pub fn new(n_states: usize, sessions: Vec<Vec<usize>>) -> Result<Self> {
        let mut events = Vec::with_capacity(sessions.iter().map(Vec::len).sum());
        let mut session_starts = Vec::with_capacity(sessions.len());
        for (i, s) in sessions.into_iter().enumerate() {
            if s.is_empty() {
                return Err(MarkovError::EmptySession(i));
            }
            session_starts.push(events.len());
            events.extend(s);
        }
        Self::from_parts(n_states, events, session_starts)
    }

    /// Builds a stream from a flat event list and session offsets.
    pub fn from_parts(n_states: usize, events: Vec<usize>, session_starts: Vec<usize>) -> Result<Self> {
        if n_states == 0 {
            return Err(MarkovError::NoStates);
        }
        if let Some(&state) = events.iter().find(|&&e| e >= n_states) {
            return Err(MarkovError::StateOutOfRange { state, n_states });
        }
        if events.is_empty() {
            if !session_starts.is_empty() {
                return Err(MarkovError::EmptySession(0));
            }
        } else {
            if session_starts.first() != Some(&0) {
                return Err(MarkovError::EmptySession(0));
            }
            for (i, w) in session_starts.windows(2).enumerate() {
                if w[1] <= w[0] {
                    return Err(MarkovError::EmptySession(i));
                }
            }
            if *session_starts.last().unwrap() >= events.len() {
                return Err(MarkovError::EmptySession(session_starts.len() - 1));
            }
        }
        Ok(Self { n_states, events, session_starts })
    }

    pub fn single_session(n_states: usize, events: Vec<usize>) -> Result<Self> {
        let starts = if events.is_empty() { vec![] } else { vec![0] };
        Self::from_parts(n_states, events, starts)
    }

    /// Splits `events` into sessions wherever `is_boundary(prev, next)` holds.
    pub fn split_by(n_states: usize, events: Vec<usize>, mut is_boundary: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        let mut starts = Vec::new();
        for i in 0..events.len() {
            if i == 0 || is_boundary(events[i - 1], events[i]) {
                starts.push(i);
            }
        }
        Self::from_parts(n_states, events, starts)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn events(&self) -> &[usize] {
        &self.events
    }

    pub fn session_starts(&self) -> &[usize] {
        &self.session_starts
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn n_sessions(&self) -> usize {
        self.session_starts.len()
    }

    pub fn sessions(&self) -> impl Iterator<Item = &[usize]> + '_ {
        self.session_ranges().map(move |r| &self.events[r])
    }

    fn session_ranges(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        let ends = self.session_starts.iter().skip(1).copied().chain(std::iter::once(self.events.len()));
        self.session_starts.iter().copied().zip(ends).map(|(a, b)| a..b)
    }

    /// True when a transition `events[i] -> events[i + 1]` exists inside a session.
    pub fn is_transition(&self, i: usize) -> bool {
        i + 1 < self.events.len() && self.session_starts.binary_search(&(i + 1)).is_err()
    }

    /// The sub-stream covering `range`. A session cut by the range start
    /// becomes a fresh session.
    pub fn window(&self, range: Range<usize>) -> EventStream {
        let range = range.start.min(self.len())..range.end.min(self.len());
        let events = self.events[range.clone()].to_vec();
        let mut starts = Vec::new();
        if !events.is_empty() {
            starts.push(0);
            let first = self.session_starts.partition_point(|&s| s <= range.start);
            starts.extend(self.session_starts[first..].iter().take_while(|&&s| s < range.end).map(|s| s - range.start));
        }
        EventStream { n_states: self.n_states, events, session_starts: starts }
    }

    /// Appends the sessions of `other` after those of `self`, never merging
    /// the last session of `self` with the first of `other`.
    pub fn concat(&self, other: &EventStream) -> Result<EventStream> {
        if other.n_states != self.n_states {
            return Err(MarkovError::ShapeMismatch { expected: self.n_states, found: other.n_states });
        }
        let mut events = self.events.clone();
        let mut starts = self.session_starts.clone();
        starts.extend(other.session_starts.iter().map(|s| s + events.len()));
        events.extend_from_slice(&other.events);
        Ok(EventStream { n_states: self.n_states, events, session_starts: starts })
    }
}

/// Additive smoothing applied when fitting.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitOptions {
    pub pseudocount: f64,
}

impl FitOptions {
    pub fn with_pseudocount(pseudocount: f64) -> Result<Self> {
        if !(pseudocount.is_finite() && pseudocount >= 0.0) {
            return Err(MarkovError::InvalidPseudocount(pseudocount));
        }
        Ok(Self { pseudocount })
    }
}

/// Sufficient statistics of a stream for a first-order chain: how often each
/// state opens a session and how often each transition occurs.
///
/// Counts are real-valued so that weighted (soft) counts can be used.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    n_states: usize,
    starts: Vec<f64>,
    /// Row-major `n_states × n_states`.
    transitions: Vec<f64>,
}

impl TransitionCounts {
    pub fn zeros(n_states: usize) -> Self {
        Self { n_states, starts: vec![0.0; n_states], transitions: vec![0.0; n_states * n_states] }
    }

    pub fn from_stream(stream: &EventStream) -> Self {
        Self::from_range(stream, 0..stream.len())
    }

    /// Counts for `stream.window(range)` without materializing the window.
    pub fn from_range(stream: &EventStream, range: Range<usize>) -> Self {
        let n = stream.n_states;
        let mut counts = Self::zeros(n);
        let range = range.start.min(stream.len())..range.end.min(stream.len());
        if range.is_empty() {
            return counts;
        }
        let ev = &stream.events;
        counts.starts[ev[range.start]] += 1.0;
        let mut next_start = stream.session_starts.partition_point(|&s| s <= range.start);
        for i in range.start + 1..range.end {
            if stream.session_starts.get(next_start) == Some(&i) {
                next_start += 1;
                counts.starts[ev[i]] += 1.0;
            } else {
                counts.transitions[ev[i - 1] * n + ev[i]] += 1.0;
            }
        }
        counts
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn starts(&self) -> &[f64] {
        &self.starts
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.transitions[from * self.n_states + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.transitions[from * self.n_states..(from + 1) * self.n_states]
    }

    pub fn add_start(&mut self, state: usize, weight: f64) {
        self.starts[state] += weight;
    }

    pub fn add_transition(&mut self, from: usize, to: usize, weight: f64) {
        self.transitions[from * self.n_states + to] += weight;
    }

    /// Element-wise sum; the pooled statistics of two windows.
    pub fn merged(&self, other: &Self) -> Self {
        assert_eq!(self.n_states, other.n_states, "merging counts over different alphabets");
        Self {
            n_states: self.n_states,
            starts: self.starts.iter().zip(&other.starts).map(|(a, b)| a + b).collect(),
            transitions: self.transitions.iter().zip(&other.transitions).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn total_starts(&self) -> f64 {
        self.starts.iter().sum()
    }

    pub fn total_transitions(&self) -> f64 {
        self.transitions.iter().sum()
    }

    /// Independent parameters of the maximum-likelihood chain restricted to
    /// the observed support: occupied transition cells, minus one row-sum
    /// constraint per observed source state, plus occupied start states
    /// minus the `pi` sum constraint. Floored at zero.
    pub fn free_parameters(&self) -> usize {
        let n = self.n_states;
        let cells = self.transitions.iter().filter(|&&c| c > 0.0).count();
        let sources = (0..n).filter(|&i| self.row(i).iter().any(|&c| c > 0.0)).count();
        let starts = self.starts.iter().filter(|&&c| c > 0.0).count();
        (cells + starts).saturating_sub(sources + 1)
    }

    /// Maximum-likelihood (λ = 0) or additively smoothed estimate.
    pub fn fit(&self, opts: FitOptions) -> Result<MarkovModel> {
        let lambda = opts.pseudocount;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(MarkovError::InvalidPseudocount(lambda));
        }
        let n = self.n_states;
        let start_total = self.total_starts() + n as f64 * lambda;
        if start_total <= 0.0 {
            return Err(MarkovError::EmptyStream);
        }
        let pi = self.starts.iter().map(|c| (c + lambda) / start_total).collect();
        let mut theta = Vec::with_capacity(n);
        let mut unobserved_rows = Vec::new();
        for i in 0..n {
            let row = self.row(i);
            let total = row.iter().sum::<f64>() + n as f64 * lambda;
            if total > 0.0 {
                theta.push(row.iter().map(|c| (c + lambda) / total).collect());
            } else {
                // Placeholder keeps the matrix stochastic; the flag makes any
                // likelihood evaluation through this row an error.
                unobserved_rows.push(i);
                theta.push(vec![1.0 / n as f64; n]);
            }
        }
        Ok(MarkovModel { n_states: n, pi, theta, unobserved_rows })
    }

    /// `Σ starts_i ln pi_i + Σ n_ij ln theta_ij` under `model`.
    pub fn log_likelihood(&self, model: &MarkovModel) -> Result<f64> {
        if model.n_states != self.n_states {
            return Err(MarkovError::ShapeMismatch { expected: model.n_states, found: self.n_states });
        }
        let mut acc = 0.0;
        for (i, &c) in self.starts.iter().enumerate() {
            if c > 0.0 {
                if model.pi[i] == 0.0 {
                    return Err(MarkovError::ZeroProbability { session: 0, position: 0 });
                }
                acc += c * model.pi[i].ln();
            }
        }
        for i in 0..self.n_states {
            let row = self.row(i);
            if row.iter().all(|&c| c == 0.0) {
                continue;
            }
            if model.is_unobserved(i) {
                return Err(MarkovError::UnobservedRow(i));
            }
            for (j, &c) in row.iter().enumerate() {
                if c > 0.0 {
                    let p = model.theta[i][j];
                    if p == 0.0 {
                        return Err(MarkovError::ZeroProbability { session: 0, position: 0 });
                    }
                    acc += c * p.ln();
                }
            }
        }
        Ok(acc)
    }
}

/// Initial distribution and row-stochastic transition matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkovModel {
    n_states: usize,
    pi: Vec<f64>,
    theta: Vec<Vec<f64>>,
    /// Rows that received no mass during fitting. They hold a uniform
    /// placeholder and may not be used for likelihood evaluation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    unobserved_rows: Vec<usize>,
}

fn check_distribution(what: impl Fn() -> String, v: &[f64]) -> Result<()> {
    if v.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(MarkovError::InvalidProbability { what: what() });
    }
    let sum: f64 = v.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(MarkovError::NotStochastic { what: what(), sum });
    }
    Ok(())
}

impl MarkovModel {
    pub fn new(pi: Vec<f64>, theta: Vec<Vec<f64>>) -> Result<Self> {
        let model = Self { n_states: pi.len(), pi, theta, unobserved_rows: Vec::new() };
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n_states;
        if n == 0 {
            return Err(MarkovError::NoStates);
        }
        for v in std::iter::once(&self.pi).chain(&self.theta) {
            if v.len() != n {
                return Err(MarkovError::ShapeMismatch { expected: n, found: v.len() });
            }
        }
        if self.theta.len() != n {
            return Err(MarkovError::ShapeMismatch { expected: n, found: self.theta.len() });
        }
        check_distribution(|| "pi".to_string(), &self.pi)?;
        for (i, row) in self.theta.iter().enumerate() {
            check_distribution(|| format!("theta row {i}"), row)?;
        }
        if let Some(&state) = self.unobserved_rows.iter().find(|&&r| r >= n) {
            return Err(MarkovError::StateOutOfRange { state, n_states: n });
        }
        Ok(())
    }

    /// Uniform initial distribution and transitions.
    pub fn uniform(n_states: usize) -> Result<Self> {
        if n_states == 0 {
            return Err(MarkovError::NoStates);
        }
        let u = 1.0 / n_states as f64;
        Self::new(vec![u; n_states], vec![vec![u; n_states]; n_states])
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn theta(&self) -> &[Vec<f64>] {
        &self.theta
    }

    pub fn unobserved_rows(&self) -> &[usize] {
        &self.unobserved_rows
    }

    pub fn is_unobserved(&self, row: usize) -> bool {
        self.unobserved_rows.contains(&row)
    }

    /// Exact log-likelihood of `stream`: over sessions,
    /// `ln pi(first) + Σ_t ln theta(x_t, x_{t+1})`.
    pub fn log_likelihood(&self, stream: &EventStream) -> Result<f64> {
        if stream.n_states() > self.n_states {
            if let Some(&state) = stream.events().iter().find(|&&e| e >= self.n_states) {
                return Err(MarkovError::StateOutOfRange { state, n_states: self.n_states });
            }
        }
        let mut acc = 0.0;
        for (session, events) in stream.sessions().enumerate() {
            let p0 = self.pi[events[0]];
            if p0 == 0.0 {
                return Err(MarkovError::ZeroProbability { session, position: 0 });
            }
            acc += p0.ln();
            for (k, w) in events.windows(2).enumerate() {
                if self.is_unobserved(w[0]) {
                    return Err(MarkovError::UnobservedRow(w[0]));
                }
                let p = self.theta[w[0]][w[1]];
                if p == 0.0 {
                    return Err(MarkovError::ZeroProbability { session, position: k + 1 });
                }
                acc += p.ln();
            }
        }
        Ok(acc)
    }

    /// Adds `epsilon` to every entry of `pi` and `theta`, then renormalizes.
    pub fn perturb(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(MarkovError::InvalidEpsilon(epsilon));
        }
        if epsilon == 0.0 {
            return Ok(self.clone());
        }
        let bump = |v: &[f64]| -> Vec<f64> {
            let total: f64 = v.iter().sum::<f64>() + epsilon * v.len() as f64;
            v.iter().map(|p| (p + epsilon) / total).collect()
        };
        Ok(Self {
            n_states: self.n_states,
            pi: bump(&self.pi),
            theta: self.theta.iter().map(|r| bump(r)).collect(),
            unobserved_rows: self.unobserved_rows.clone(),
        })
    }

    /// Draws the first state of a session from `pi`.
    pub fn draw_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        draw_categorical(&self.pi, rng)
    }

    /// Draws the successor of `from` from row `from` of `theta`.
    pub fn draw_next<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        draw_categorical(&self.theta[from], rng)
    }

    /// One session per entry of `session_lengths`, each started from `pi`.
    /// Deterministic for a given seed (see [`SimRng`]).
    pub fn sample(&self, session_lengths: &[usize], seed: u64) -> Result<EventStream> {
        if session_lengths.contains(&0) {
            return Err(MarkovError::InvalidLength);
        }
        let mut rng = rng_from_seed(seed);
        let mut events = Vec::with_capacity(session_lengths.iter().sum());
        let mut starts = Vec::with_capacity(session_lengths.len());
        for &len in session_lengths {
            starts.push(events.len());
            let mut state = self.draw_initial(&mut rng);
            events.push(state);
            for _ in 1..len {
                state = self.draw_next(state, &mut rng);
                events.push(state);
            }
        }
        EventStream::from_parts(self.n_states, events, starts)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialization is infallible")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Self = serde_json::from_str(s).map_err(|e| MarkovError::Json(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

/// Inverse-CDF draw from a probability vector with one uniform variate.
fn draw_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left the cumulative sum just below u.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// Maximum-likelihood (or smoothed) chain for `stream` over `n_states` states.
pub fn fit(stream: &EventStream, n_states: usize, opts: FitOptions) -> Result<MarkovModel> {
    if let Some(&state) = stream.events().iter().find(|&&e| e >= n_states) {
        return Err(MarkovError::StateOutOfRange { state, n_states });
    }
    if n_states == 0 {
        return Err(MarkovError::NoStates);
    }
    if stream.is_empty() && opts.pseudocount == 0.0 {
        return Err(MarkovError::EmptyStream);
    }
    let counts = if stream.n_states() == n_states {
        TransitionCounts::from_stream(stream)
    } else {
        let resized = EventStream::from_parts(n_states, stream.events.clone(), stream.session_starts.clone())?;
        TransitionCounts::from_stream(&resized)
    };
    counts.fit(opts)
}

/// Free parameters of the maximum-likelihood chain on `stream`; see
/// [`TransitionCounts::free_parameters`].
pub fn free_parameters(stream: &EventStream, n_states: usize) -> Result<usize> {
    let stream = EventStream::from_parts(n_states, stream.events.clone(), stream.session_starts.clone())?;
    Ok(TransitionCounts::from_stream(&stream).free_parameters())
}
