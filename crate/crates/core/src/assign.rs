//! Rectangular linear sum assignment.
//!
//! Shortest augmenting path with dual potentials (Jonker-Volgenant style),
//! one row at a time. Missing edges are `None` in the matrix and are never
//! priced, so no sentinel cost can leak into a total.

use thiserror::Error;

use crate::num::{Lex, Weight};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignError {
    #[error("row {row} has no feasible column")]
    EmptyRow { row: usize },
    #[error("no assignment covers every row")]
    Infeasible,
    #[error("{rows} rows exceed {cols} columns")]
    Shape { rows: usize, cols: usize },
}

/// Dense matrix of optional weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightMatrix<W> {
    rows: usize,
    cols: usize,
    entries: Vec<Option<W>>,
}

impl<W: Weight> WeightMatrix<W> {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![None; rows * cols],
        }
    }

    /// From row vectors; all rows must have the same length.
    pub fn from_rows(rows: Vec<Vec<Option<W>>>) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged weight matrix");
        Self {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    pub fn dense(rows: &[Vec<W>]) -> Self {
        Self::from_rows(rows.iter().map(|r| r.iter().copied().map(Some).collect()).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<W> {
        self.entries[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, w: Option<W>) {
        self.entries[row * self.cols + col] = w;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::new(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c));
            }
        }
        t
    }

    fn map<V: Weight>(&self, f: impl Fn(W) -> V) -> WeightMatrix<V> {
        WeightMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.map(&f)).collect(),
        }
    }
}

/// Complete row-to-column assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<W> {
    pub row_to_col: Vec<usize>,
    pub total: W,
}

/// Best-cover assignment where rows may stay unmatched.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching<W> {
    pub row_to_col: Vec<Option<usize>>,
    pub total: W,
}

impl<W> Matching<W> {
    pub fn cardinality(&self) -> usize {
        self.row_to_col.iter().filter(|c| c.is_some()).count()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.row_to_col.iter().enumerate().filter_map(|(r, c)| c.map(|c| (r, c)))
    }
}

#[inline]
fn lt<W: Weight>(a: Option<W>, b: Option<W>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x < y,
        (Some(_), None) => true,
        _ => false,
    }
}

/// Minimum-cost assignment covering every row; `rows <= cols`.
fn min_cost<W: Weight>(cost: &WeightMatrix<W>) -> Result<Vec<usize>, AssignError> {
    let (nr, nc) = (cost.rows, cost.cols);
    if nr > nc {
        return Err(AssignError::Shape { rows: nr, cols: nc });
    }
    if let Some(row) = (0..nr).find(|&r| (0..nc).all(|c| cost.get(r, c).is_none())) {
        return Err(AssignError::EmptyRow { row });
    }
    let mut u = vec![W::zero(); nr];
    let mut v = vec![W::zero(); nc];
    let mut col4row: Vec<Option<usize>> = vec![None; nr];
    let mut row4col: Vec<Option<usize>> = vec![None; nc];
    let mut path = vec![0usize; nc];
    let mut shortest: Vec<Option<W>> = vec![None; nc];
    let mut seen_row = vec![false; nr];
    let mut seen_col = vec![false; nc];
    let mut remaining: Vec<usize> = Vec::with_capacity(nc);

    for cur in 0..nr {
        shortest.iter_mut().for_each(|s| *s = None);
        seen_row.iter_mut().for_each(|s| *s = false);
        seen_col.iter_mut().for_each(|s| *s = false);
        remaining.clear();
        remaining.extend(0..nc);

        let mut min_val = W::zero();
        let mut i = cur;
        let sink = loop {
            seen_row[i] = true;
            let mut best: Option<(usize, W)> = None;
            for (k, &j) in remaining.iter().enumerate() {
                if let Some(c) = cost.get(i, j) {
                    let reduced = min_val + c - u[i] - v[j];
                    if lt(Some(reduced), shortest[j]) {
                        path[j] = i;
                        shortest[j] = Some(reduced);
                    }
                }
                let Some(s) = shortest[j] else { continue };
                let better = match best {
                    None => true,
                    Some((bk, bv)) => {
                        let bj = remaining[bk];
                        s < bv
                            || (s == bv && {
                                let free = row4col[j].is_none();
                                let bfree = row4col[bj].is_none();
                                (free && !bfree) || (free == bfree && j < bj)
                            })
                    }
                };
                if better {
                    best = Some((k, s));
                }
            }
            let Some((k, lowest)) = best else {
                return Err(AssignError::Infeasible);
            };
            min_val = lowest;
            let j = remaining.swap_remove(k);
            seen_col[j] = true;
            match row4col[j] {
                None => break j,
                Some(r) => i = r,
            }
        };

        u[cur] = u[cur] + min_val;
        for r in 0..nr {
            if seen_row[r] && r != cur {
                let c = col4row[r].expect("scanned rows are matched");
                u[r] = u[r] + min_val - shortest[c].expect("scanned column has a label");
            }
        }
        for c in 0..nc {
            if seen_col[c] {
                v[c] = v[c] - (min_val - shortest[c].expect("scanned column has a label"));
            }
        }
        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = Some(r);
            let prev = col4row[r].replace(j);
            if r == cur {
                break;
            }
            j = prev.expect("path rows are matched");
        }
    }
    Ok(col4row.into_iter().map(|c| c.expect("every row matched")).collect())
}

/// Among equal-cost alternatives reachable by moving one row to a free
/// column or swapping two rows, prefer lower column indices for lower rows.
fn canonicalize<W: Weight>(cost: &WeightMatrix<W>, assign: &mut [usize], max_col: usize) {
    let mut owner: Vec<Option<usize>> = vec![None; cost.cols];
    for (r, &c) in assign.iter().enumerate() {
        owner[c] = Some(r);
    }
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..assign.len() {
            let ci = assign[i];
            if ci >= max_col {
                continue;
            }
            let wi = cost.get(i, ci).expect("assigned edge exists");
            for c in 0..ci {
                let Some(w_new) = cost.get(i, c) else { continue };
                match owner[c] {
                    None => {
                        if w_new == wi {
                            owner[ci] = None;
                            owner[c] = Some(i);
                            assign[i] = c;
                            changed = true;
                            break;
                        }
                    }
                    Some(k) if k > i => {
                        let Some(wk) = cost.get(k, c) else { continue };
                        let Some(wk_new) = cost.get(k, ci) else { continue };
                        if w_new + wk_new == wi + wk {
                            assign[i] = c;
                            assign[k] = ci;
                            owner[c] = Some(i);
                            owner[ci] = Some(k);
                            changed = true;
                            break;
                        }
                    }
                    _ => {}
                }
            }
        }
    }
}

fn total<W: Weight>(w: &WeightMatrix<W>, pairs: impl Iterator<Item = (usize, usize)>) -> W {
    pairs.fold(W::zero(), |acc, (r, c)| acc + w.get(r, c).expect("assigned edge exists"))
}

/// Optimal assignment using every row exactly once. Requires `rows <= cols`.
///
/// Ties between optimal assignments are broken towards lower column indices
/// (local swaps after optimality).
pub fn solve_assignment<W: Weight>(w: &WeightMatrix<W>, sense: Sense) -> Result<Assignment<W>, AssignError> {
    let cost = match sense {
        Sense::Minimize => w.clone(),
        Sense::Maximize => w.map(|x| W::zero() - x),
    };
    let mut row_to_col = min_cost(&cost)?;
    canonicalize(&cost, &mut row_to_col, cost.cols);
    let total = total(w, row_to_col.iter().copied().enumerate());
    Ok(Assignment { row_to_col, total })
}

/// Largest matching first, then the best total among largest matchings.
/// Any shape is accepted; rows without a usable column stay unmatched.
pub fn solve_max_cardinality<W: Weight>(w: &WeightMatrix<W>, sense: Sense) -> Matching<W> {
    let (nr, nc) = (w.rows, w.cols);
    let mut aug: WeightMatrix<Lex<W>> = WeightMatrix::new(nr, nc + nr);
    for r in 0..nr {
        for c in 0..nc {
            let e = w.get(r, c).map(|x| match sense {
                Sense::Minimize => Lex::new(0, x),
                Sense::Maximize => Lex::new(0, W::zero() - x),
            });
            aug.set(r, c, e);
        }
        aug.set(r, nc + r, Some(Lex::new(1, W::zero())));
    }
    let mut assign = min_cost(&aug).expect("dummy columns make every row feasible");
    canonicalize(&aug, &mut assign, nc);
    let row_to_col: Vec<Option<usize>> = assign.into_iter().map(|c| (c < nc).then_some(c)).collect();
    let total = total(w, row_to_col.iter().enumerate().filter_map(|(r, c)| c.map(|c| (r, c))));
    Matching { row_to_col, total }
}
