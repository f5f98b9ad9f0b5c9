//! Classic ddmin as an explicit state machine.
//!
//! Each attempt names the set of candidates to delete. The list is split
//! into `n` contiguous chunks, chunk `i` spanning `i*len/n .. (i+1)*len/n`.
//! The subsets phase tries deleting each chunk; the complements phase tries
//! deleting everything except one chunk. Complements are skipped when there
//! are only two chunks since they repeat the subsets.
//!
//! After an accepted deletion the caller supplies the surviving candidates,
//! which may differ from a plain set difference. An accept in the subsets
//! phase restarts at `n = 2`; an accept in the complements phase continues
//! with `n - 1` chunks (at least 2, at most the list length). After a full
//! round of rejects `n` doubles; the search ends once a round at `n = len`
//! is rejected.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Subsets,
    Complements,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StateError {
    #[error("an accept must supply the surviving candidates")]
    MissingSurvivors,
    #[error("the search is exhausted")]
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DdminState<T> {
    items: Vec<T>,
    n: usize,
    cursor: usize,
    phase: Phase,
    exhausted: bool,
}

impl<T: Clone> DdminState<T> {
    pub fn new(items: Vec<T>) -> Self {
        let exhausted = items.is_empty();
        Self { items, n: 2, cursor: 0, phase: Phase::Subsets, exhausted }
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn granularity(&self) -> usize {
        self.n
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    fn parts(&self) -> usize {
        self.n.min(self.items.len())
    }

    fn chunk(&self, i: usize) -> std::ops::Range<usize> {
        let (len, parts) = (self.items.len(), self.parts());
        i * len / parts..(i + 1) * len / parts
    }

    /// The set to delete next, or `None` once exhausted.
    pub fn next_candidate(&self) -> Option<Vec<T>> {
        if self.exhausted {
            return None;
        }
        let chunk = self.chunk(self.cursor);
        Some(match self.phase {
            Phase::Subsets => self.items[chunk].to_vec(),
            Phase::Complements => {
                self.items.iter().enumerate().filter(|(i, _)| !chunk.contains(i)).map(|(_, x)| x.clone()).collect()
            }
        })
    }

    pub fn update(&mut self, accepted: bool, survivors: Option<Vec<T>>) -> Result<(), StateError> {
        if self.exhausted {
            return Err(StateError::Exhausted);
        }
        if accepted {
            self.accept(survivors.ok_or(StateError::MissingSurvivors)?);
        } else {
            self.reject();
        }
        Ok(())
    }

    pub fn accept(&mut self, survivors: Vec<T>) {
        let n = match self.phase {
            Phase::Subsets => 2,
            Phase::Complements => (self.n - 1).min(survivors.len()).max(2),
        };
        self.items = survivors;
        self.n = n;
        self.cursor = 0;
        self.phase = Phase::Subsets;
        self.exhausted = self.items.is_empty();
    }

    pub fn reject(&mut self) {
        self.cursor += 1;
        if self.cursor < self.parts() {
            return;
        }
        self.cursor = 0;
        if self.phase == Phase::Subsets && self.parts() > 2 {
            self.phase = Phase::Complements;
            return;
        }
        self.phase = Phase::Subsets;
        if self.n >= self.items.len() {
            self.exhausted = true;
        } else {
            self.n = (self.n * 2).min(self.items.len());
        }
    }
}

/// Runs the search to exhaustion with `decide` as the verdict on each
/// deletion, removing accepted sets from the list. Returns every attempt
/// with its verdict.
pub fn trace<T: Clone + PartialEq>(items: Vec<T>, mut decide: impl FnMut(&[T]) -> bool) -> Vec<(Vec<T>, bool)> {
    let mut state = DdminState::new(items);
    let mut attempts = Vec::new();
    while let Some(deleted) = state.next_candidate() {
        let accepted = decide(&deleted);
        if accepted {
            let survivors = state.items().iter().filter(|x| !deleted.contains(x)).cloned().collect();
            state.accept(survivors);
        } else {
            state.reject();
        }
        attempts.push((deleted, accepted));
    }
    attempts
}
