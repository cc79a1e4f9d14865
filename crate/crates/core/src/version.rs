//! Version metadata, visibility rules, the global clock and the reader
//! registry that yields the compaction watermark.
//!
//! A version word packs the operation type into bit 63 and a timestamp into
//! the low bits. Uncommitted writes carry a provisional marker (bit 62 set,
//! low bits = transaction id); the marker is numerically larger than every
//! real timestamp, so a reader comparing `word <= t(Q)` never sees it.

use std::sync::atomic::{AtomicU64, Ordering};

use crossbeam_utils::CachePadded;

use crate::types::Timestamp;

const DELETE_BIT: u64 = 1 << 63;
const PROVISIONAL_BIT: u64 = 1 << 62;
const VALUE_MASK: u64 = PROVISIONAL_BIT - 1;

/// Open end of an interval version.
pub const INF: u64 = u64::MAX;

/// Largest timestamp a version word can carry.
pub const MAX_TS: u64 = VALUE_MASK;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VersionOp {
    Insert,
    Delete,
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(transparent)]
pub struct VersionWord(u64);

impl VersionWord {
    #[inline]
    pub fn committed(ts: Timestamp, op: VersionOp) -> Self {
        debug_assert!(ts.0 <= MAX_TS);
        VersionWord(ts.0 | op_bit(op))
    }

    #[inline]
    pub fn provisional(txn: u64, op: VersionOp) -> Self {
        VersionWord((txn & VALUE_MASK) | PROVISIONAL_BIT | op_bit(op))
    }

    #[inline]
    pub fn from_raw(raw: u64) -> Self {
        VersionWord(raw)
    }

    #[inline]
    pub fn raw(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn op(self) -> VersionOp {
        if self.0 & DELETE_BIT != 0 {
            VersionOp::Delete
        } else {
            VersionOp::Insert
        }
    }

    #[inline]
    pub fn is_provisional(self) -> bool {
        self.0 & PROVISIONAL_BIT != 0
    }

    /// The commit timestamp, or `None` while the write is uncommitted.
    #[inline]
    pub fn ts(self) -> Option<Timestamp> {
        (!self.is_provisional()).then_some(Timestamp(self.0 & VALUE_MASK))
    }

    /// Timestamp-or-marker value used for ordering; provisional words sort
    /// after every committed one.
    #[inline]
    pub fn order_key(self) -> u64 {
        self.0 & !DELETE_BIT
    }

    #[inline]
    pub fn visible_at(self, t: Timestamp) -> bool {
        self.order_key() <= t.0
    }

    #[inline]
    pub fn is_insert(self) -> bool {
        self.0 & DELETE_BIT == 0
    }

    /// Replace a provisional marker with the commit timestamp, keeping the op.
    #[inline]
    pub fn stamp(self, ts: Timestamp) -> Self {
        VersionWord::committed(ts, self.op())
    }

    #[inline]
    pub fn with_op(self, op: VersionOp) -> Self {
        VersionWord((self.0 & !DELETE_BIT) | op_bit(op))
    }
}

impl std::fmt::Debug for VersionWord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = match self.op() {
            VersionOp::Insert => "I",
            VersionOp::Delete => "D",
        };
        match self.ts() {
            Some(ts) => write!(f, "{op}@{ts}"),
            None => write!(f, "{op}@txn{}", self.0 & VALUE_MASK),
        }
    }
}

#[inline]
fn op_bit(op: VersionOp) -> u64 {
    match op {
        VersionOp::Insert => 0,
        VersionOp::Delete => DELETE_BIT,
    }
}

/// Chain rule: walking newest-first, the first version with `ts <= t_q`
/// decides; an Insert means present. An empty or fully-newer chain means
/// absent.
pub fn chain_visible<I>(chain: I, t_q: Timestamp) -> bool
where
    I: IntoIterator<Item = VersionWord>,
{
    chain
        .into_iter()
        .find(|w| w.visible_at(t_q))
        .is_some_and(|w| w.is_insert())
}

/// Interval rule: visible iff `begin <= t_q < end`. Provisional markers in
/// either field compare above every committed timestamp.
#[inline]
pub fn interval_visible(begin: u64, end: u64, t_q: Timestamp) -> bool {
    begin <= t_q.0 && t_q.0 < end
}

/// Source of provisional markers.
#[derive(Debug, Default)]
pub struct TxnIds(AtomicU64);

impl TxnIds {
    pub fn next(&self) -> u64 {
        (self.0.fetch_add(1, Ordering::Relaxed) + 1) & VALUE_MASK
    }
}

/// Global clock `t(G)`.
///
/// Commits allocate `ts = next + 1` while still holding their locks, stamp
/// their versions, release the locks and then publish in timestamp order.
/// Readers only ever observe the published value, so a reader at `t` sees
/// every commit `<= t` fully stamped.
#[derive(Debug, Default)]
pub struct Clock {
    next: CachePadded<AtomicU64>,
    published: CachePadded<AtomicU64>,
}

impl Clock {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn now(&self) -> Timestamp {
        Timestamp(self.published.load(Ordering::Acquire))
    }

    #[inline]
    pub fn allocate(&self) -> Timestamp {
        Timestamp(self.next.fetch_add(1, Ordering::AcqRel) + 1)
    }

    /// Make `ts` visible. Blocks until every smaller timestamp is published.
    pub fn publish(&self, ts: Timestamp) {
        let mut spins = 0u32;
        while self.published.load(Ordering::Acquire) != ts.0 - 1 {
            spins += 1;
            if spins < 64 {
                std::hint::spin_loop();
            } else {
                std::thread::yield_now();
            }
        }
        self.published.store(ts.0, Ordering::Release);
    }
}

const IDLE: u64 = u64::MAX;

/// Registry of active reader start timestamps.
///
/// A reader claims a slot, stores its candidate `t(Q)` and re-reads the clock
/// until the two agree. Compaction computes the watermark as the minimum over
/// claimed slots and the current clock; a reader that registered after the
/// scan necessarily observes a timestamp at least as large as the clock value
/// read before the scan.
pub struct ReaderRegistry {
    slots: Box<[CachePadded<AtomicU64>]>,
    hint: AtomicU64,
}

impl ReaderRegistry {
    pub fn new(slots: usize) -> Self {
        let slots = (0..slots.max(1))
            .map(|_| CachePadded::new(AtomicU64::new(IDLE)))
            .collect();
        ReaderRegistry {
            slots,
            hint: AtomicU64::new(0),
        }
    }

    /// Claim a slot and pin a start timestamp. Returns `None` when all slots
    /// are busy; such a reader must not rely on compaction safety.
    pub fn register(&self, clock: &Clock) -> (Option<usize>, Timestamp) {
        let n = self.slots.len();
        let start = self.hint.fetch_add(1, Ordering::Relaxed) as usize;
        for i in 0..n {
            let idx = (start + i) % n;
            let slot = &self.slots[idx];
            let mut ts = clock.now();
            if slot
                .compare_exchange(IDLE, ts.0, Ordering::AcqRel, Ordering::Relaxed)
                .is_ok()
            {
                loop {
                    let again = clock.now();
                    if again == ts {
                        return (Some(idx), ts);
                    }
                    ts = again;
                    slot.store(ts.0, Ordering::Release);
                }
            }
        }
        (None, clock.now())
    }

    pub fn unregister(&self, slot: usize) {
        self.slots[slot].store(IDLE, Ordering::Release);
    }

    pub fn active(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| s.load(Ordering::Acquire) != IDLE)
            .count()
    }

    /// Minimum start timestamp over active readers, or the clock if none.
    pub fn watermark(&self, clock: &Clock) -> Timestamp {
        let mut wm = clock.now().0;
        for s in self.slots.iter() {
            let v = s.load(Ordering::Acquire);
            if v != IDLE {
                wm = wm.min(v);
            }
        }
        Timestamp(wm)
    }
}

impl std::fmt::Debug for ReaderRegistry {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReaderRegistry")
            .field("slots", &self.slots.len())
            .field("active", &self.active())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(ts: u64, op: VersionOp) -> VersionWord {
        VersionWord::committed(Timestamp(ts), op)
    }

    #[test]
    fn chain_examples() {
        use VersionOp::*;
        let chain = [w(7, Insert), w(5, Delete), w(2, Insert)];
        assert!(!chain_visible(chain, Timestamp(6)));
        assert!(chain_visible(chain, Timestamp(3)));
        assert!(!chain_visible(chain, Timestamp(1)));
        assert!(chain_visible(chain, Timestamp(7)));
        assert!(!chain_visible([], Timestamp(9)));
    }

    #[test]
    fn interval_examples() {
        assert!(!interval_visible(3, INF, Timestamp(2)));
        assert!(interval_visible(3, INF, Timestamp(3)));
        assert!(interval_visible(3, 8, Timestamp(7)));
        assert!(!interval_visible(3, 8, Timestamp(8)));
    }

    #[test]
    fn provisional_words_are_invisible() {
        let p = VersionWord::provisional(12, VersionOp::Insert);
        assert!(p.is_provisional());
        assert_eq!(p.ts(), None);
        assert!(!p.visible_at(Timestamp(MAX_TS)));
        let c = p.stamp(Timestamp(4));
        assert_eq!(c.ts(), Some(Timestamp(4)));
        assert_eq!(c.op(), VersionOp::Insert);
        let d = VersionWord::provisional(12, VersionOp::Delete).stamp(Timestamp(5));
        assert_eq!(d.op(), VersionOp::Delete);
        assert!(d.visible_at(Timestamp(5)));
    }

    #[test]
    fn clock_publishes_in_order() {
        let c = std::sync::Arc::new(Clock::new());
        let a = c.allocate();
        let b = c.allocate();
        let c2 = c.clone();
        let h = std::thread::spawn(move || c2.publish(b));
        std::thread::sleep(std::time::Duration::from_millis(5));
        assert_eq!(c.now(), Timestamp(0));
        c.publish(a);
        h.join().unwrap();
        assert_eq!(c.now(), Timestamp(2));
    }

    #[test]
    fn watermark_tracks_oldest_reader() {
        let clock = Clock::new();
        let reg = ReaderRegistry::new(4);
        let (s1, t1) = reg.register(&clock);
        let ts = clock.allocate();
        clock.publish(ts);
        assert_eq!(reg.watermark(&clock), t1);
        reg.unregister(s1.unwrap());
        assert_eq!(reg.watermark(&clock), Timestamp(1));
    }
}
