//! A leak guard for the evaluation loop.
//!
//! Test targets must never reach a model before their batch has been
//! predicted. Instead of trusting the loop to index carefully, the runner
//! goes through this ledger: it hands out input windows only up to the
//! reveal frontier and advances the frontier only through [`reveal`],
//! keeping a log of every reveal so tests can audit the order.
//!
//! [`reveal`]: ObservationLedger::reveal

use std::ops::Range;

use crate::error::{Error, Result};
use crate::series::TimeSeries;
use crate::window::extract_input_window;

/// Guarded access to one evaluation run.
#[derive(Debug)]
pub struct ObservationLedger<'a> {
    series: &'a TimeSeries,
    /// First index that has not been revealed yet.
    frontier: usize,
    reveals: Vec<Range<usize>>,
}

impl<'a> ObservationLedger<'a> {
    /// Start a ledger over `series` with its first `burn_in` steps
    /// already revealed, to serve as context for the first window.
    pub fn new(series: &'a TimeSeries, burn_in: usize) -> Result<Self> {
        if burn_in > series.len() {
            return Err(Error::SeriesTooShort { needed: burn_in, actual: series.len() });
        }
        Ok(Self { series, frontier: burn_in, reveals: Vec::new() })
    }

    /// First unrevealed index.
    pub fn frontier(&self) -> usize {
        self.frontier
    }

    /// Steps left to reveal.
    pub fn remaining(&self) -> usize {
        self.series.len() - self.frontier
    }

    /// The input window of `n_x` steps ending just before `end`, allowed
    /// only when every step of the window has been revealed.
    pub fn input_window(&self, end: usize, n_x: usize) -> Result<Vec<f64>> {
        if end > self.frontier {
            return Err(Error::Protocol(format!(
                "input window ending at step {end} reaches past the reveal frontier {}",
                self.frontier
            )));
        }
        extract_input_window(self.series, end, n_x)
    }

    /// Reveal the next `count` targets and return them.
    pub fn reveal(&mut self, count: usize) -> Result<&[f64]> {
        if count == 0 {
            return Err(Error::Protocol("reveal of zero steps".into()));
        }
        if self.frontier + count > self.series.len() {
            return Err(Error::Protocol(format!(
                "reveal of {count} steps at frontier {} overruns the series of length {}",
                self.frontier,
                self.series.len()
            )));
        }
        let range = self.frontier..self.frontier + count;
        self.frontier = range.end;
        self.reveals.push(range.clone());
        Ok(&self.series.target()[range])
    }

    /// Timestamps of the `count` steps that [`ObservationLedger::reveal`]
    /// would return next.
    pub fn upcoming_timestamps(&self, count: usize) -> Result<&[i64]> {
        if self.frontier + count > self.series.len() {
            return Err(Error::Protocol(format!(
                "timestamps of {count} steps at frontier {} overrun the series of length {}",
                self.frontier,
                self.series.len()
            )));
        }
        Ok(&self.series.timestamps()[self.frontier..self.frontier + count])
    }

    /// Every reveal so far, in order.
    pub fn reveal_log(&self) -> &[Range<usize>] {
        &self.reveals
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(n: usize) -> TimeSeries {
        let ts: Vec<i64> = (0..n as i64).map(|i| i * 60).collect();
        let target: Vec<f64> = (0..n).map(|i| i as f64).collect();
        TimeSeries::new(ts, target, vec![], 60).unwrap()
    }

    #[test]
    fn windows_stop_at_the_frontier() {
        let s = series(20);
        let ledger = ObservationLedger::new(&s, 5).unwrap();
        // Ends at or before the frontier are fine.
        assert_eq!(ledger.input_window(5, 3).unwrap(), vec![2.0, 3.0, 4.0]);
        assert_eq!(ledger.input_window(4, 2).unwrap(), vec![2.0, 3.0]);
        // One step past the frontier would read an unrevealed target.
        assert!(matches!(ledger.input_window(6, 3), Err(Error::Protocol(_))));
    }

    #[test]
    fn reveal_advances_and_logs() {
        let s = series(10);
        let mut ledger = ObservationLedger::new(&s, 4).unwrap();
        assert_eq!(ledger.reveal(3).unwrap(), &[4.0, 5.0, 6.0]);
        assert_eq!(ledger.frontier(), 7);
        assert_eq!(ledger.remaining(), 3);
        assert_eq!(ledger.reveal(3).unwrap(), &[7.0, 8.0, 9.0]);
        assert_eq!(ledger.reveal_log(), &[4..7, 7..10]);
        assert!(matches!(ledger.reveal(1), Err(Error::Protocol(_))));
    }

    #[test]
    fn upcoming_timestamps_do_not_advance() {
        let s = series(10);
        let mut ledger = ObservationLedger::new(&s, 4).unwrap();
        assert_eq!(ledger.upcoming_timestamps(2).unwrap(), &[240, 300]);
        assert_eq!(ledger.frontier(), 4);
        ledger.reveal(2).unwrap();
        assert_eq!(ledger.upcoming_timestamps(2).unwrap(), &[360, 420]);
        assert!(ledger.upcoming_timestamps(5).is_err());
    }

    #[test]
    fn burn_in_cannot_exceed_the_series() {
        let s = series(5);
        assert!(matches!(
            ObservationLedger::new(&s, 6),
            Err(Error::SeriesTooShort { needed: 6, actual: 5 })
        ));
    }
}
