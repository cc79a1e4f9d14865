//! Operation counters used by the complexity-trend checks.
//!
//! Search paths take a `&mut impl Probe`; the unit type is the no-op probe so
//! the counting compiles away in normal use.

pub trait Probe {
    /// One key comparison.
    #[inline]
    fn compare(&mut self) {}

    /// One index node or slot visited.
    #[inline]
    fn visit(&mut self) {}
}

impl Probe for () {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub comparisons: u64,
    pub visits: u64,
}

impl Probe for OpCounts {
    #[inline]
    fn compare(&mut self) {
        self.comparisons += 1;
    }

    #[inline]
    fn visit(&mut self) {
        self.visits += 1;
    }
}
