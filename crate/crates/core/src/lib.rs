//! Likelihood-ratio change-point detection for discrete event streams.
//!
//! The crate measures how strongly the past and future of an event stream
//! look like the output of two different processes. A split is scored by
//! the log likelihood ratio of separately fitted past/future models against
//! a single pooled model, normalized by its degrees of freedom.
//!
//! * [`stats`]: two-way likelihood ratio, χ² and G statistics, χ² p-values.
//! * [`markov`]: fully observed Markov chains (fit, likelihood, sampling).
//! * [`creativity`]: the windowed measure, scans and peak detection.
//! * [`simulator`]: the two-style touch-grid player and its reference experiment.
//! * [`ingest`]: touch logs to grid-state streams, CSV formats.
//! * [`cli`]: the `creadet` command line.

pub mod cli;
pub mod creativity;
pub mod grid;
pub mod ingest;
pub mod markov;
pub mod simulator;
pub mod stats;

use thiserror::Error;

/// Any error raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Stats(#[from] stats::StatsError),
    #[error(transparent)]
    Markov(#[from] markov::MarkovError),
    #[error(transparent)]
    Creativity(#[from] creativity::CreativityError),
    #[error(transparent)]
    Simulator(#[from] simulator::SimulatorError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
}

/// Formats a float with 17 significant digits (`d.dddddddddddddddde±x`),
/// which round-trips every `f64` exactly.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::format_f64;

    #[test]
    fn seventeen_digit_round_trip() {
        for x in [0.0, 1.0, std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            let s = format_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_f64(20.0 * std::f64::consts::LN_2), "1.3862943611198906e1");
    }
}
