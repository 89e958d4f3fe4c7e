use serde::{Deserialize, Serialize};

use crate::grid::EmissionCaps;

/// Backlogs of the two time-average emission constraints.
///
/// `q <- max(q + total - cap, 0)`; a queue that grows sublinearly certifies
/// that its time-average cap holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VirtualQueues {
    pub q_co2: f64,
    pub q_hap: f64,
    pub caps: EmissionCaps,
}

impl VirtualQueues {
    pub fn new(caps: EmissionCaps) -> Self {
        Self {
            q_co2: 0.0,
            q_hap: 0.0,
            caps,
        }
    }
}

/// One step of the virtual-queue recursion for slot totals `(co2, hap)`.
pub fn update_queues(queues: &VirtualQueues, co2_total: f64, hap_total: f64) -> VirtualQueues {
    VirtualQueues {
        q_co2: (queues.q_co2 + co2_total - queues.caps.co2).max(0.0),
        q_hap: (queues.q_hap + hap_total - queues.caps.hap).max(0.0),
        caps: queues.caps,
    }
}
