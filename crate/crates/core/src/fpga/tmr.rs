//! Majority voting and the triplicated FIR pipeline.

use serde::{Deserialize, Serialize};

use super::fir::fir_on_instance;
use super::layout::Component;
use crate::corruption::CorruptionTag;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoteStatus {
    Unanimous,
    Corrected,
    Uncorrectable,
}

/// Element-wise 2-of-3 majority. With no majority the first input wins and
/// the element is flagged.
pub fn tmr_vote<T: PartialEq + Copy>(a: &[T], b: &[T], c: &[T]) -> Result<(Vec<T>, Vec<VoteStatus>)> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() != c.len() {
        return Err(Error::LengthMismatch(a.len(), c.len()));
    }
    let mut out = Vec::with_capacity(a.len());
    let mut status = Vec::with_capacity(a.len());
    for i in 0..a.len() {
        let (x, y, z) = (a[i], b[i], c[i]);
        let (v, s) = if x == y && y == z {
            (x, VoteStatus::Unanimous)
        } else if x == y || x == z {
            (x, VoteStatus::Corrected)
        } else if y == z {
            (y, VoteStatus::Corrected)
        } else {
            (x, VoteStatus::Uncorrectable)
        };
        out.push(v);
        status.push(s);
    }
    Ok((out, status))
}

/// Per-instance health as seen by the datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InstanceHealth {
    #[default]
    Healthy,
    Faulty(CorruptionTag),
    /// Stalled: produces no output at all.
    Hung,
}

impl InstanceHealth {
    pub fn fault(self) -> Option<CorruptionTag> {
        match self {
            InstanceHealth::Faulty(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PipelineOutput {
    Samples(Vec<i64>),
    NoOutput,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TmrOutcome {
    pub output: PipelineOutput,
    pub uncorrectable: usize,
    /// Replicas that disagreed with the vote or produced nothing.
    pub repair_requests: Vec<Component>,
}

/// Health of the five TMR datapath units.
#[derive(Debug, Clone, Copy, Default)]
pub struct TmrHealth {
    pub voter_in: InstanceHealth,
    pub replicas: [InstanceHealth; 3],
    pub voter_out: InstanceHealth,
}

/// Input voting, three FIR instances, output voting.
pub fn run_tmr_pipeline(input: &[i64], coeffs: &[i64], h: &TmrHealth) -> TmrOutcome {
    if h.voter_in == InstanceHealth::Hung || h.voter_out == InstanceHealth::Hung {
        return TmrOutcome { output: PipelineOutput::NoOutput, uncorrectable: 0, repair_requests: Vec::new() };
    }
    // three replicated input paths through the input voter
    let (mut voted_in, _) = tmr_vote(input, input, input).expect("equal lengths");
    if let Some(tag) = h.voter_in.fault() {
        tag.apply_i64(&mut voted_in);
    }

    let streams: Vec<Option<Vec<i64>>> = h
        .replicas
        .iter()
        .enumerate()
        .map(|(i, r)| match r {
            InstanceHealth::Hung => None,
            other => Some(fir_on_instance(&voted_in, coeffs, other.fault().map(|t| t.salted(i as u64)))),
        })
        .collect();

    let live: Vec<&Vec<i64>> = streams.iter().flatten().collect();
    let (mut voted, uncorrectable) = match live.len() {
        3 => {
            let (v, st) = tmr_vote(live[0], live[1], live[2]).expect("equal lengths");
            let bad = st.iter().filter(|s| **s == VoteStatus::Uncorrectable).count();
            (v, bad)
        }
        2 => {
            let bad = live[0].iter().zip(live[1]).filter(|(a, b)| a != b).count();
            (live[0].clone(), bad)
        }
        _ => {
            let repair_requests = h
                .replicas
                .iter()
                .zip(Component::REPLICAS)
                .filter(|(r, _)| **r != InstanceHealth::Healthy)
                .map(|(_, c)| c)
                .collect();
            return TmrOutcome { output: PipelineOutput::NoOutput, uncorrectable: 0, repair_requests };
        }
    };

    // With only two live replicas a disagreement cannot be attributed, so
    // both are named.
    let two_disagree = live.len() == 2 && uncorrectable > 0;
    let repair_requests = streams
        .iter()
        .zip(Component::REPLICAS)
        .filter(|(s, _)| s.as_ref().is_none_or(|s| two_disagree || s != &voted))
        .map(|(_, c)| c)
        .collect();

    if let Some(tag) = h.voter_out.fault() {
        tag.apply_i64(&mut voted);
    }
    TmrOutcome { output: PipelineOutput::Samples(voted), uncorrectable, repair_requests }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpga::fir::fir_filter;

    #[test]
    fn vote_cases() {
        let (v, s) = tmr_vote(&[5], &[5], &[5]).unwrap();
        assert_eq!((v[0], s[0]), (5, VoteStatus::Unanimous));
        let (v, s) = tmr_vote(&[5], &[7], &[5]).unwrap();
        assert_eq!((v[0], s[0]), (5, VoteStatus::Corrected));
        let (v, s) = tmr_vote(&[1], &[2], &[3]).unwrap();
        assert_eq!((v[0], s[0]), (1, VoteStatus::Uncorrectable));
        assert!(tmr_vote(&[1, 2], &[1], &[1, 2]).is_err());
    }

    fn setup() -> (Vec<i64>, Vec<i64>, Vec<i64>) {
        let input: Vec<i64> = (0..32).map(|i| (i * 37 % 11) - 5).collect();
        let coeffs = vec![1, 3, 3, 1];
        let golden = fir_filter(&input, &coeffs);
        (input, coeffs, golden)
    }

    #[test]
    fn healthy_pipeline_is_golden() {
        let (input, coeffs, golden) = setup();
        let o = run_tmr_pipeline(&input, &coeffs, &TmrHealth::default());
        assert_eq!(o.output, PipelineOutput::Samples(golden));
        assert!(o.repair_requests.is_empty());
    }

    #[test]
    fn one_faulty_replica_is_masked_and_named() {
        let (input, coeffs, golden) = setup();
        let mut h = TmrHealth::default();
        h.replicas[1] = InstanceHealth::Faulty(CorruptionTag(99));
        let o = run_tmr_pipeline(&input, &coeffs, &h);
        assert_eq!(o.output, PipelineOutput::Samples(golden));
        assert_eq!(o.repair_requests, vec![Component::Fir1]);
    }

    #[test]
    fn two_faulty_replicas_break_the_vote() {
        let (input, coeffs, golden) = setup();
        let mut h = TmrHealth::default();
        h.replicas[0] = InstanceHealth::Faulty(CorruptionTag(1));
        h.replicas[2] = InstanceHealth::Faulty(CorruptionTag(2));
        let o = run_tmr_pipeline(&input, &coeffs, &h);
        let PipelineOutput::Samples(out) = &o.output else { panic!() };
        assert_ne!(out, &golden);
        assert!(o.uncorrectable > 0);
        assert!(o.repair_requests.contains(&Component::Fir0));
        assert!(o.repair_requests.contains(&Component::Fir2));
    }

    #[test]
    fn hung_voter_means_no_output() {
        let (input, coeffs, _) = setup();
        let h = TmrHealth { voter_out: InstanceHealth::Hung, ..Default::default() };
        assert_eq!(run_tmr_pipeline(&input, &coeffs, &h).output, PipelineOutput::NoOutput);
    }
}
