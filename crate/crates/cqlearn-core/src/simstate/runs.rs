use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Run-length encoded per-site list: `(value, multiplicity)` runs in site order.
///
/// Large product states repeat a handful of distinct site states many times;
/// storing runs keeps memory independent of the number of sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Runs<T> {
    runs: Vec<(T, u64)>,
}

impl<T> Runs<T> {
    /// Drops zero-length runs.
    pub fn from_runs(runs: Vec<(T, u64)>) -> Self {
        Self { runs: runs.into_iter().filter(|(_, c)| *c > 0).collect() }
    }

    pub fn from_sites(sites: Vec<T>) -> Self {
        Self { runs: sites.into_iter().map(|s| (s, 1)).collect() }
    }

    pub fn uniform(value: T, count: u64) -> Self {
        Self::from_runs(alloc::vec![(value, count)])
    }

    pub fn len(&self) -> u64 {
        self.runs.iter().map(|(_, c)| c).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    pub fn runs(&self) -> &[(T, u64)] {
        &self.runs
    }

    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.runs.iter().map(|(v, _)| v)
    }

    /// `(start, len, value)` for each run.
    pub fn spans(&self) -> impl Iterator<Item = (u64, u64, &T)> {
        let mut start = 0u64;
        self.runs.iter().map(move |(v, c)| {
            let s = start;
            start += c;
            (s, *c, v)
        })
    }

    /// Value at site `i`.
    pub fn site(&self, i: u64) -> Option<&T> {
        self.spans().find(|(s, l, _)| i >= *s && i < s + l).map(|(_, _, v)| v)
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Runs<U> {
        Runs { runs: self.runs.iter().map(|(v, c)| (f(v), *c)).collect() }
    }

    pub fn try_map<U, E>(&self, mut f: impl FnMut(&T) -> Result<U, E>) -> Result<Runs<U>, E> {
        let runs = self.runs.iter().map(|(v, c)| Ok((f(v)?, *c))).collect::<Result<_, E>>()?;
        Ok(Runs { runs })
    }

    /// Exclusive end of every run.
    pub fn ends(&self) -> impl Iterator<Item = u64> + '_ {
        self.spans().map(|(s, l, _)| s + l)
    }

    /// Run index covering each cell of a partition that refines this list.
    pub fn locate(&self, cells: &[Cell]) -> Vec<usize> {
        let mut out = Vec::with_capacity(cells.len());
        let mut run = 0usize;
        let mut end = self.runs.first().map_or(0, |r| r.1);
        for cell in cells {
            while cell.start >= end && run + 1 < self.runs.len() {
                run += 1;
                end += self.runs[run].1;
            }
            out.push(run);
        }
        out
    }
}

/// A contiguous range of sites `[start, start + len)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub start: u64,
    pub len: u64,
}

/// Coarsest partition of `[0, n)` whose cells never straddle one of the given run ends.
pub fn common_refinement(n: u64, ends: impl IntoIterator<Item = u64>) -> Vec<Cell> {
    let mut cuts: Vec<u64> = ends.into_iter().filter(|&e| e > 0 && e < n).collect();
    cuts.push(n);
    cuts.sort_unstable();
    cuts.dedup();
    let mut start = 0;
    cuts.into_iter()
        .map(|end| {
            let c = Cell { start, len: end - start };
            start = end;
            c
        })
        .collect()
}

impl<T: Clone> Runs<T> {
    /// One entry per site; only sensible for small lists.
    pub fn expand(&self) -> Vec<T> {
        let mut out = Vec::new();
        for (v, c) in &self.runs {
            for _ in 0..*c {
                out.push(v.clone());
            }
        }
        out
    }

    /// Picks `count` sites from run `index` for each `(index, count)` pair, in order.
    ///
    /// Sites within a run are interchangeable, so a selection by run index and count
    /// determines the restricted list.
    pub fn select(&self, selection: &[(usize, u64)]) -> Option<Self> {
        let mut runs = Vec::with_capacity(selection.len());
        for &(idx, count) in selection {
            let (v, avail) = self.runs.get(idx)?;
            if count > *avail {
                return None;
            }
            if count > 0 {
                runs.push((v.clone(), count));
            }
        }
        Some(Self { runs })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn spans_and_lookup() {
        let r = Runs::from_runs(vec![('a', 2), ('b', 0), ('c', 3)]);
        assert_eq!(r.len(), 5);
        assert_eq!(r.run_count(), 2);
        assert_eq!(r.site(1), Some(&'a'));
        assert_eq!(r.site(2), Some(&'c'));
        assert_eq!(r.site(5), None);
        assert_eq!(r.expand(), vec!['a', 'a', 'c', 'c', 'c']);
    }

    #[test]
    fn select_by_run() {
        let r = Runs::from_runs(vec![('a', 2), ('c', 3)]);
        let s = r.select(&[(1, 2), (0, 1)]).unwrap();
        assert_eq!(s.expand(), vec!['c', 'c', 'a']);
        assert!(r.select(&[(0, 3)]).is_none());
    }

    #[test]
    fn refinement_and_location() {
        let a = Runs::from_runs(vec![('a', 3), ('b', 4)]);
        let b = Runs::from_runs(vec![(1, 5), (2, 2)]);
        let cells = common_refinement(7, a.ends().chain(b.ends()));
        let lens: Vec<u64> = cells.iter().map(|c| c.len).collect();
        assert_eq!(lens, vec![3, 2, 2]);
        assert_eq!(a.locate(&cells), vec![0, 1, 1]);
        assert_eq!(b.locate(&cells), vec![0, 0, 1]);
    }
}
