use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Action, DatumId, ModelError, Schedule};
use crate::topology::ProcessRef;

/// Flat-network cost parameters. All values are non-negative time units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogPParams {
    pub latency: f64,
    pub o_send: f64,
    pub o_recv: f64,
    /// Minimum gap between consecutive sends of one process.
    pub gap: f64,
}

impl LogPParams {
    pub fn new(latency: f64, o_send: f64, o_recv: f64, gap: f64) -> Self {
        assert!(
            latency >= 0.0 && o_send >= 0.0 && o_recv >= 0.0 && gap >= 0.0,
            "LogP parameters must be non-negative"
        );
        LogPParams {
            latency,
            o_send,
            o_recv,
            gap,
        }
    }
}

/// Completion time of a transfer-only schedule on a flat LogP network.
///
/// Transfers are taken in schedule order. A transfer starts once its whole
/// payload is available at the sender and the sender's previous send started
/// at least `max(o_send, g)` earlier; it arrives `o_send + L + o_recv` after
/// starting. Data a process sends without having received it are assumed to
/// be available at time 0. Topology is not consulted.
pub fn logp_time(s: &Schedule, params: LogPParams) -> Result<f64, ModelError> {
    let pacing = params.o_send.max(params.gap);
    let flight = params.o_send + params.latency + params.o_recv;
    let mut available: HashMap<(ProcessRef, DatumId), f64> = HashMap::new();
    let mut last_send: HashMap<ProcessRef, f64> = HashMap::new();
    let mut finish = 0.0f64;
    for round in &s.rounds {
        for action in &round.actions {
            let (sender, receiver, payload) = match action {
                Action::ExternalTransfer {
                    sender,
                    receiver,
                    payload,
                } => (sender, receiver, payload),
                Action::Assemble { .. } => return Err(ModelError::NonTransferAction("assemble")),
                Action::LocalWrite { .. } => {
                    return Err(ModelError::NonTransferAction("local write"))
                }
            };
            let ready = payload
                .iter()
                .map(|d| available.get(&(*sender, *d)).copied().unwrap_or(0.0))
                .fold(0.0f64, f64::max);
            let paced = last_send.get(sender).map_or(0.0, |t| t + pacing);
            let start = ready.max(paced);
            last_send.insert(*sender, start);
            let arrival = start + flight;
            for d in payload {
                let slot = available.entry((*receiver, *d)).or_insert(f64::INFINITY);
                *slot = slot.min(arrival);
            }
            finish = finish.max(arrival);
        }
    }
    Ok(finish)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RoundSchedule;

    fn pr(m: usize, i: usize) -> ProcessRef {
        ProcessRef::new(m, i)
    }

    fn xfer(a: usize, b: usize) -> Action {
        Action::transfer(pr(a, 0), pr(b, 0), [DatumId::Root])
    }

    #[test]
    fn single_transfer() {
        let s = Schedule::new(vec![RoundSchedule::new(vec![xfer(0, 1)])]);
        let p = LogPParams::new(5.0, 1.5, 2.0, 0.5);
        assert_eq!(logp_time(&s, p).unwrap(), 1.5 + 5.0 + 2.0);
    }

    #[test]
    fn gap_paces_back_to_back_sends() {
        let s = Schedule::new(vec![
            RoundSchedule::new(vec![xfer(0, 1)]),
            RoundSchedule::new(vec![xfer(0, 2)]),
        ]);
        let p = LogPParams::new(2.0, 1.0, 1.0, 3.0);
        assert_eq!(logp_time(&s, p).unwrap(), 3.0 + 1.0 + 2.0 + 1.0);
    }

    #[test]
    fn rejects_shared_memory_actions() {
        let s = Schedule::new(vec![RoundSchedule::new(vec![Action::assemble(pr(0, 1))])]);
        assert!(logp_time(&s, LogPParams::new(1.0, 1.0, 1.0, 1.0)).is_err());
    }
}
