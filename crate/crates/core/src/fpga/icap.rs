//! The single configuration access port shared by scrubbing and partial
//! reconfiguration.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcapOwner {
    Cms,
    Dpr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Acquire {
    Granted,
    Queued,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IcapStats {
    pub grants: u64,
    pub releases: u64,
    pub queued: u64,
    /// Instants where two owners held the port. Must stay zero.
    pub double_grants: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Icap {
    holder: Option<IcapOwner>,
    waiting: VecDeque<IcapOwner>,
    stats: IcapStats,
}

impl Icap {
    pub fn holder(&self) -> Option<IcapOwner> {
        self.holder
    }

    pub fn is_waiting(&self, owner: IcapOwner) -> bool {
        self.waiting.contains(&owner)
    }

    pub fn stats(&self) -> IcapStats {
        self.stats
    }

    pub fn acquire(&mut self, owner: IcapOwner) -> Result<Acquire> {
        if self.holder == Some(owner) || self.waiting.contains(&owner) {
            return Err(Error::Invariant(format!("re-entrant ICAP request by {owner:?}")));
        }
        match self.holder {
            None => {
                self.holder = Some(owner);
                self.stats.grants += 1;
                Ok(Acquire::Granted)
            }
            Some(_) => {
                self.waiting.push_back(owner);
                self.stats.queued += 1;
                Ok(Acquire::Queued)
            }
        }
    }

    /// Releases the port and hands it to the next waiter, which is returned.
    pub fn release(&mut self, owner: IcapOwner) -> Result<Option<IcapOwner>> {
        if self.holder != Some(owner) {
            return Err(Error::Invariant(format!("{owner:?} released an ICAP it does not hold ({:?})", self.holder)));
        }
        self.holder = None;
        self.stats.releases += 1;
        let next = self.waiting.pop_front();
        if let Some(n) = next {
            if self.holder.is_some() {
                self.stats.double_grants += 1;
            }
            self.holder = Some(n);
            self.stats.grants += 1;
        }
        Ok(next)
    }

    /// Withdraws a queued request, e.g. when its owner lost its purpose.
    pub fn withdraw(&mut self, owner: IcapOwner) {
        self.waiting.retain(|&o| o != owner);
    }

    /// Whole-device reset: holder and queue are dropped.
    pub fn reset(&mut self) {
        self.holder = None;
        self.waiting.clear();
    }
}
