//! Producer/consumer/solution counters derived from the tabling event log,
//! plus continuation-size accounting.
//!
//! `n_p` counts producers (distinct variant classes), `n_c` consumer calls,
//! `n_s` answers across all tables; the reported ratios are
//! `r_c = n_c / n_p` and `r_s = n_s / n_p`. Copy costs are reported as
//! event counts (captures, resumptions, entry creations) rather than bytes.

use crate::machine::MachineStats;
use crate::tabling::{AnswerEvent, EventKind};
use crate::EngineError;

#[derive(Clone, Copy, Default, Debug)]
pub struct Metrics {
    /// Producer count: distinct variant classes entered.
    pub n_p: u64,
    /// Consumer call count.
    pub n_c: u64,
    /// Total answers across tables.
    pub n_s: u64,
    /// Duplicate answer derivations (rejected inserts).
    pub n_dup: u64,
    /// Top-level answers emitted.
    pub n_emitted: u64,
    pub first_emit_ordinal: Option<u64>,
    pub last_insert_ordinal: Option<u64>,
    pub last_ordinal: Option<u64>,
    /// Sum of captured segment lengths over all continuation captures.
    pub cont_frames_total: u64,
    /// Largest single captured segment.
    pub max_cont_frames: u64,
    pub captures: u64,
    pub resumes: u64,
}

impl Metrics {
    /// Folds one event into the counters. Events must arrive in ordinal
    /// order; each is counted once.
    pub fn record(&mut self, ev: &AnswerEvent) -> Result<(), EngineError> {
        if let Some(seen) = self.last_ordinal {
            if ev.ordinal <= seen {
                return Err(EngineError::EventOrder { got: ev.ordinal, seen });
            }
        }
        self.last_ordinal = Some(ev.ordinal);
        match ev.kind {
            EventKind::ProducerStarted => self.n_p += 1,
            EventKind::ConsumerRegistered => self.n_c += 1,
            EventKind::AnswerInserted => {
                self.n_s += 1;
                self.last_insert_ordinal = Some(ev.ordinal);
            }
            EventKind::AnswerDuplicate => self.n_dup += 1,
            EventKind::AnswerEmitted => {
                self.n_emitted += 1;
                if self.first_emit_ordinal.is_none() {
                    self.first_emit_ordinal = Some(ev.ordinal);
                }
            }
        }
        Ok(())
    }

    /// Merges the machine's continuation counters into the run metrics.
    pub fn absorb_machine(&mut self, stats: &MachineStats) {
        self.cont_frames_total = stats.captured_frames;
        self.max_cont_frames = stats.max_segment;
        self.captures = stats.captures;
        self.resumes = stats.resumes;
    }

    pub fn r_c(&self) -> f64 {
        if self.n_p == 0 {
            0.0
        } else {
            self.n_c as f64 / self.n_p as f64
        }
    }

    pub fn r_s(&self) -> f64 {
        if self.n_p == 0 {
            0.0
        } else {
            self.n_s as f64 / self.n_p as f64
        }
    }

    /// One benchmark-table row: name, n_p, n_c, n_s and the two ratios
    /// rounded to one decimal.
    pub fn report(&self, name: &str) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{:.1}\t{:.1}",
            name,
            self.n_p,
            self.n_c,
            self.n_s,
            self.r_c(),
            self.r_s()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::{variant_key, Bindings, Term};

    fn ev(kind: EventKind, ordinal: u64) -> AnswerEvent {
        let b = Bindings::new();
        AnswerEvent {
            kind,
            key: variant_key(&Term::atom("k"), &b),
            tuple: None,
            ordinal,
        }
    }

    #[test]
    fn record_examples() {
        let mut m = Metrics::default();
        m.record(&ev(EventKind::ProducerStarted, 1)).unwrap();
        assert_eq!(m.n_p, 1);
        m.record(&ev(EventKind::AnswerDuplicate, 2)).unwrap();
        assert_eq!(m.n_s, 0);
        m.record(&ev(EventKind::ConsumerRegistered, 3)).unwrap();
        assert_eq!(m.n_c, 1);
    }

    #[test]
    fn out_of_order_ordinals_rejected() {
        let mut m = Metrics::default();
        m.record(&ev(EventKind::ProducerStarted, 5)).unwrap();
        assert!(matches!(
            m.record(&ev(EventKind::ProducerStarted, 5)),
            Err(EngineError::EventOrder { .. })
        ));
    }

    #[test]
    fn report_rounds_to_one_decimal() {
        let m = Metrics { n_p: 50, n_c: 2402, n_s: 2401, ..Default::default() };
        // 2402/50 = 48.04 and 2401/50 = 48.02 both print as 48.0
        assert_eq!(m.report("path_dfst(50)"), "path_dfst(50)\t50\t2402\t2401\t48.0\t48.0");
        let m = Metrics { n_p: 50, n_c: 4803, n_s: 4802, ..Default::default() };
        // 96.06 rounds up to 96.1, 96.04 down to 96.0
        assert_eq!(
            m.report("path_dfst_loop(50)"),
            "path_dfst_loop(50)\t50\t4803\t4802\t96.1\t96.0"
        );
        let m = Metrics { n_p: 1001, n_c: 998, n_s: 1001, ..Default::default() };
        assert_eq!(m.report("fib(1000)"), "fib(1000)\t1001\t998\t1001\t1.0\t1.0");
    }
}
