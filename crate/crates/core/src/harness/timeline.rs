//! Down / erroneous / correct classification of simulated time.

use serde::{Deserialize, Serialize};

use crate::fpga::{CheckpointRecord, NodeOutput};
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Class {
    Down,
    Erroneous,
    Correct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub start: SimTime,
    pub end: SimTime,
    pub class: Class,
}

impl Interval {
    pub fn len(&self) -> SimTime {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Shares {
    pub down: f64,
    pub erroneous: f64,
    pub correct: f64,
}

impl Shares {
    pub fn sum(&self) -> f64 {
        self.down + self.erroneous + self.correct
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalityTimeline {
    pub duration: SimTime,
    pub intervals: Vec<Interval>,
    /// Percentages of `duration`.
    pub totals: Shares,
}

impl FunctionalityTimeline {
    /// Builds a timeline from per-window classes; adjacent windows of the
    /// same class merge.
    pub fn from_windows(window: SimTime, classes: &[Class]) -> Self {
        let mut intervals: Vec<Interval> = Vec::new();
        for (i, &class) in classes.iter().enumerate() {
            let start = SimTime(window.0 * i as u64);
            let end = start + window;
            match intervals.last_mut() {
                Some(last) if last.class == class => last.end = end,
                _ => intervals.push(Interval { start, end, class }),
            }
        }
        Self::from_intervals(intervals)
    }

    pub fn from_intervals(intervals: Vec<Interval>) -> Self {
        let duration = intervals.last().map_or(SimTime::ZERO, |i| i.end);
        let mut t = Shares::default();
        for i in &intervals {
            let us = i.len().0 as f64;
            match i.class {
                Class::Down => t.down += us,
                Class::Erroneous => t.erroneous += us,
                Class::Correct => t.correct += us,
            }
        }
        if duration.0 > 0 {
            let d = duration.0 as f64;
            t = Shares { down: 100.0 * t.down / d, erroneous: 100.0 * t.erroneous / d, correct: 100.0 * t.correct / d };
        }
        Self { duration, intervals, totals: t }
    }

    pub fn time_in(&self, class: Class) -> SimTime {
        SimTime(self.intervals.iter().filter(|i| i.class == class).map(|i| i.len().0).sum())
    }

    /// Number of correct intervals followed by a non-correct one.
    pub fn failure_onsets(&self) -> usize {
        self.intervals.windows(2).filter(|w| w[0].class == Class::Correct && w[1].class != Class::Correct).count()
    }

    /// Intervals tile `[0, duration]` without gaps or overlap.
    pub fn is_partition(&self) -> bool {
        let mut at = SimTime::ZERO;
        for i in &self.intervals {
            if i.start != at || i.end <= i.start {
                return false;
            }
            at = i.end;
        }
        at == self.duration
    }
}

pub fn classify_output(rec: &CheckpointRecord, golden: &[i64]) -> Class {
    match &rec.output {
        NodeOutput::InReset | NodeOutput::NoOutput => Class::Down,
        NodeOutput::Samples(s) if s.as_slice() == golden => Class::Correct,
        NodeOutput::Samples(_) => Class::Erroneous,
    }
}

/// One class per evaluation window from the checkpoint taken at its end.
/// A window without a checkpoint counts as down.
pub fn classify_timeline(checkpoints: &[CheckpointRecord], golden: &[i64], window: SimTime, windows: u32) -> FunctionalityTimeline {
    let mut classes = vec![Class::Down; windows as usize];
    for c in checkpoints {
        if let Some(slot) = classes.get_mut(c.window as usize) {
            *slot = classify_output(c, golden);
        }
    }
    FunctionalityTimeline::from_windows(window, &classes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cp(window: u32, output: NodeOutput) -> CheckpointRecord {
        CheckpointRecord { window, time: SimTime(0), output, uncorrectable_votes: 0 }
    }

    #[test]
    fn all_correct() {
        let g = vec![1, 2];
        let cps: Vec<_> = (0..10).map(|w| cp(w, NodeOutput::Samples(g.clone()))).collect();
        let t = classify_timeline(&cps, &g, SimTime::from_ms(4), 10);
        assert_eq!(t.intervals.len(), 1);
        assert_eq!(t.totals.correct, 100.0);
        assert!(t.is_partition());
        assert_eq!(t.failure_onsets(), 0);
    }

    #[test]
    fn mixed_windows_merge() {
        let g = vec![1];
        let cps = vec![
            cp(0, NodeOutput::Samples(vec![1])),
            cp(1, NodeOutput::Samples(vec![1])),
            cp(2, NodeOutput::Samples(vec![2])),
            cp(3, NodeOutput::InReset),
            cp(4, NodeOutput::NoOutput),
            cp(5, NodeOutput::Samples(vec![1])),
        ];
        let t = classify_timeline(&cps, &g, SimTime(10), 6);
        let classes: Vec<Class> = t.intervals.iter().map(|i| i.class).collect();
        assert_eq!(classes, vec![Class::Correct, Class::Erroneous, Class::Down, Class::Correct]);
        assert_eq!(t.failure_onsets(), 1);
        assert!((t.totals.sum() - 100.0).abs() < 1e-9);
        assert!(t.is_partition());
    }
}
