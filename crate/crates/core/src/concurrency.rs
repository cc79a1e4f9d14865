//! Locking protocols: ordered exclusive acquisition for writers (G2PL with
//! locks held to commit) and single-lock shared guards for readers.

use std::cell::Cell;
use std::ops::Deref;

use parking_lot::{RwLock, RwLockReadGuard, RwLockWriteGuard};

use crate::types::VertexId;

thread_local! {
    static READ_HELD: Cell<usize> = const { Cell::new(0) };
    static READ_MAX: Cell<usize> = const { Cell::new(0) };
}

/// Shared guard on one vertex; a reader never holds two at once.
pub struct ReadGuard<'a, T>(RwLockReadGuard<'a, T>);

impl<'a, T> ReadGuard<'a, T> {
    #[inline]
    pub fn acquire(lock: &'a RwLock<T>) -> Self {
        READ_HELD.with(|h| {
            let n = h.get() + 1;
            h.set(n);
            READ_MAX.with(|m| m.set(m.get().max(n)));
        });
        ReadGuard(lock.read())
    }
}

impl<T> Deref for ReadGuard<'_, T> {
    type Target = T;

    #[inline]
    fn deref(&self) -> &T {
        &self.0
    }
}

impl<T> Drop for ReadGuard<'_, T> {
    #[inline]
    fn drop(&mut self) {
        READ_HELD.with(|h| h.set(h.get() - 1));
    }
}

/// Largest number of reader guards this thread has held simultaneously
/// since the last reset.
pub fn max_reader_guards_held() -> usize {
    READ_MAX.with(|m| m.get())
}

pub fn reset_reader_guard_probe() {
    READ_MAX.with(|m| m.set(0));
}

/// Sort and deduplicate a write set into acquisition order.
pub fn lock_order(delta_v: impl IntoIterator<Item = VertexId>) -> Vec<VertexId> {
    let mut ids: Vec<VertexId> = delta_v.into_iter().collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Exclusive guards on a write set, taken in ascending vertex ID order and
/// held until the set is dropped.
pub struct LockSet<'a, T> {
    ids: Vec<VertexId>,
    guards: Vec<RwLockWriteGuard<'a, T>>,
}

impl<'a, T> LockSet<'a, T> {
    /// `resolve` maps an ID to its lock. Blocks on contention; the global
    /// order rules out wait-for cycles.
    pub fn acquire<F>(delta_v: impl IntoIterator<Item = VertexId>, mut resolve: F) -> Option<Self>
    where
        F: FnMut(VertexId) -> Option<&'a RwLock<T>>,
    {
        let ids = lock_order(delta_v);
        let mut guards = Vec::with_capacity(ids.len());
        for &u in &ids {
            guards.push(resolve(u)?.write());
        }
        Some(LockSet { ids, guards })
    }

    /// IDs in the order their locks were taken.
    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    #[inline]
    pub fn position(&self, u: VertexId) -> Option<usize> {
        self.ids.binary_search(&u).ok()
    }

    #[inline]
    pub fn get(&self, idx: usize) -> &T {
        &self.guards[idx]
    }

    #[inline]
    pub fn get_mut(&mut self, idx: usize) -> &mut T {
        &mut self.guards[idx]
    }

    pub fn iter_mut<'s>(&'s mut self) -> impl Iterator<Item = &'s mut T> + use<'s, 'a, T> {
        self.guards.iter_mut().map(|g| &mut **g)
    }
}
