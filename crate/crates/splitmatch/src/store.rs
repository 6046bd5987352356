//! Splittable/mergeable edge-weight store.
//!
//! Every edge owns one weight cell reachable through a handle. A split of
//! `(U, W)` duplicates the single shared edge's cell into two independent
//! side cells in O(1); the matching merge collapses them back to one cell
//! holding the max of the two side values. Nested splits on the same edge
//! id are fine as long as each targets a currently live cell.

use crate::error::{Error, Result};

/// Handle to one weight cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum CellState {
    Live,
    /// Split into two side cells; unreadable until merged back.
    Split {
        u: CellId,
        w: CellId,
    },
    /// Side cell consumed by a merge.
    Dead,
}

#[derive(Debug, Clone, Copy)]
struct CellMeta {
    /// For a side cell: (parent, sibling).
    origin: Option<(CellId, CellId)>,
}

/// Pair of independently writable views produced by [`WeightStore::split`].
#[derive(Debug, Clone, Copy)]
pub struct SplitViews {
    pub u_view: CellId,
    pub w_view: CellId,
}

#[derive(Debug, Clone)]
pub struct WeightStore {
    values: Vec<i64>,
    states: Vec<CellState>,
    metas: Vec<CellMeta>,
    /// Root cell per edge id.
    base: Vec<CellId>,
}

impl WeightStore {
    /// O(m) initialization; all weights start at 0.
    pub fn new(m: usize) -> WeightStore {
        WeightStore {
            values: vec![0; m],
            states: vec![CellState::Live; m],
            metas: vec![CellMeta { origin: None }; m],
            base: (0..m).map(CellId).collect(),
        }
    }

    pub fn edge_cell(&self, eid: usize) -> CellId {
        self.base[eid]
    }

    pub fn read(&self, c: CellId) -> i64 {
        debug_assert!(matches!(self.states[c.0], CellState::Live));
        self.values[c.0]
    }

    pub fn write(&mut self, c: CellId, v: i64) {
        debug_assert!(matches!(self.states[c.0], CellState::Live));
        self.values[c.0] = v;
    }

    pub fn add(&mut self, c: CellId, v: i64) {
        debug_assert!(matches!(self.states[c.0], CellState::Live));
        self.values[c.0] += v;
    }

    /// Duplicate the shared edge's live cell into two side views, each
    /// initially seeing the pre-split weight. Constant work.
    pub fn split(&mut self, shared: CellId) -> Result<SplitViews> {
        match self.states[shared.0] {
            CellState::Live => {}
            CellState::Split { .. } => {
                return Err(Error::Store(format!(
                    "cell {} already split without an intervening merge",
                    shared.0
                )))
            }
            CellState::Dead => return Err(Error::Store(format!("cell {} is dead", shared.0))),
        }
        let v = self.values[shared.0];
        let u = CellId(self.values.len());
        let w = CellId(self.values.len() + 1);
        self.values.push(v);
        self.states.push(CellState::Live);
        self.metas.push(CellMeta {
            origin: Some((shared, w)),
        });
        self.values.push(v);
        self.states.push(CellState::Live);
        self.metas.push(CellMeta {
            origin: Some((shared, u)),
        });
        self.states[shared.0] = CellState::Split { u, w };
        Ok(SplitViews {
            u_view: u,
            w_view: w,
        })
    }

    /// Merge two side views from the same split back into their parent
    /// cell, which takes `max` of the two side values. Constant work.
    pub fn merge(&mut self, u_view: CellId, w_view: CellId) -> Result<CellId> {
        let (parent, sibling) = self.metas[u_view.0]
            .origin
            .ok_or_else(|| Error::Store(format!("cell {} is not a split view", u_view.0)))?;
        if sibling != w_view {
            return Err(Error::Store(format!(
                "mismatched views: {} and {} come from different splits",
                u_view.0, w_view.0
            )));
        }
        if !matches!(self.states[u_view.0], CellState::Live)
            || !matches!(self.states[w_view.0], CellState::Live)
        {
            return Err(Error::Store(
                "views must be live (fully merged below) before merging".into(),
            ));
        }
        let merged = self.values[u_view.0].max(self.values[w_view.0]);
        self.states[u_view.0] = CellState::Dead;
        self.states[w_view.0] = CellState::Dead;
        self.values[parent.0] = merged;
        self.states[parent.0] = CellState::Live;
        Ok(parent)
    }

    /// Snapshot of the per-edge weights through the root cells. Only valid
    /// once every split has been merged back.
    pub fn snapshot(&self) -> Result<Vec<i64>> {
        self.base
            .iter()
            .map(|c| match self.states[c.0] {
                CellState::Live => Ok(self.values[c.0]),
                _ => Err(Error::Store(format!(
                    "edge cell {} still split; merge before snapshot",
                    c.0
                ))),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_exposes_pre_split_weight() {
        let mut s = WeightStore::new(3);
        let c = s.edge_cell(1);
        s.write(c, 3);
        let views = s.split(c).unwrap();
        assert_eq!(s.read(views.u_view), 3);
        assert_eq!(s.read(views.w_view), 3);
    }

    #[test]
    fn views_are_independent() {
        let mut s = WeightStore::new(1);
        let c = s.edge_cell(0);
        s.write(c, 3);
        let views = s.split(c).unwrap();
        s.write(views.u_view, 5);
        assert_eq!(s.read(views.w_view), 3);
    }

    #[test]
    fn double_split_rejected() {
        let mut s = WeightStore::new(1);
        let c = s.edge_cell(0);
        s.split(c).unwrap();
        assert!(matches!(s.split(c), Err(Error::Store(_))));
    }

    #[test]
    fn merge_takes_max() {
        for (a, b, want) in [(5, 3, 5), (0, 0, 0), (2, 2, 2)] {
            let mut s = WeightStore::new(1);
            let c = s.edge_cell(0);
            let views = s.split(c).unwrap();
            s.write(views.u_view, a);
            s.write(views.w_view, b);
            let parent = s.merge(views.u_view, views.w_view).unwrap();
            assert_eq!(parent, c);
            assert_eq!(s.read(c), want);
        }
    }

    #[test]
    fn mismatched_views_rejected() {
        let mut s = WeightStore::new(2);
        let v0 = s.split(s.edge_cell(0)).unwrap();
        let v1 = s.split(s.edge_cell(1)).unwrap();
        assert!(matches!(
            s.merge(v0.u_view, v1.w_view),
            Err(Error::Store(_))
        ));
    }

    #[test]
    fn round_trip_reproduces_store() {
        let mut s = WeightStore::new(4);
        for e in 0..4 {
            s.write(s.edge_cell(e), e as i64 * 7);
        }
        let before = s.snapshot().unwrap();
        let views = s.split(s.edge_cell(2)).unwrap();
        s.merge(views.u_view, views.w_view).unwrap();
        assert_eq!(s.snapshot().unwrap(), before);
    }

    #[test]
    fn nested_split_on_side_view_ok() {
        let mut s = WeightStore::new(1);
        let c = s.edge_cell(0);
        s.write(c, 4);
        let outer = s.split(c).unwrap();
        let inner = s.split(outer.u_view).unwrap();
        s.write(inner.u_view, 9);
        s.merge(inner.u_view, inner.w_view).unwrap();
        assert_eq!(s.read(outer.u_view), 9);
        s.merge(outer.u_view, outer.w_view).unwrap();
        assert_eq!(s.read(c), 9);
    }
}
