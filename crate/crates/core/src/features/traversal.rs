//! Exact cell traversal between two pixel centers.
//!
//! Pixel `(i, j)` covers `[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5)`. Because
//! both endpoints sit on pixel centers, every boundary crossing happens at a
//! rational segment parameter, so crossings are ordered with integer
//! arithmetic: no floating-point ties, and the visit order is exactly
//! equivariant under 90° rotations and mirror images of the grid.
//!
//! When the segment passes exactly through a cell corner it moves straight
//! into the diagonal cell; the two side cells only touch the segment at a
//! single point and are not visited.

/// Iterator over the cells a segment passes through, start and end included.
#[derive(Clone, Debug)]
pub struct CellWalk {
    cell: (i64, i64),
    step: (i64, i64),
    // |dr| and |dc|; crossing k of an axis with extent n happens at t = (2k+1)/(2n)
    extent: (i64, i64),
    crossed: (i64, i64),
    started: bool,
}

impl CellWalk {
    pub fn new(from: (i64, i64), to: (i64, i64)) -> Self {
        let (dr, dc) = (to.0 - from.0, to.1 - from.1);
        Self {
            cell: from,
            step: (dr.signum(), dc.signum()),
            extent: (dr.abs(), dc.abs()),
            crossed: (0, 0),
            started: false,
        }
    }
}

impl Iterator for CellWalk {
    type Item = (i64, i64);

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
            return Some(self.cell);
        }
        let (nr, nc) = self.extent;
        let (i, j) = self.crossed;
        let rows_left = i < nr;
        let cols_left = j < nc;
        if !rows_left && !cols_left {
            return None;
        }
        // compare (2i+1)/(2nr) against (2j+1)/(2nc) without division
        let order = match (rows_left, cols_left) {
            (true, false) => std::cmp::Ordering::Less,
            (false, true) => std::cmp::Ordering::Greater,
            _ => ((2 * i + 1) * nc).cmp(&((2 * j + 1) * nr)),
        };
        match order {
            std::cmp::Ordering::Less => {
                self.cell.0 += self.step.0;
                self.crossed.0 += 1;
            }
            std::cmp::Ordering::Greater => {
                self.cell.1 += self.step.1;
                self.crossed.1 += 1;
            }
            std::cmp::Ordering::Equal => {
                self.cell.0 += self.step.0;
                self.cell.1 += self.step.1;
                self.crossed.0 += 1;
                self.crossed.1 += 1;
            }
        }
        Some(self.cell)
    }
}

/// Calls `on_entry` for every air-to-wall transition along the walk from
/// `from` to `to`. The starting cell contributes no transition.
pub(crate) fn for_each_wall_entry(
    is_wall: impl Fn(usize, usize) -> bool,
    from: (usize, usize),
    to: (usize, usize),
    mut on_entry: impl FnMut(usize, usize),
) {
    let mut walk = CellWalk::new((from.0 as i64, from.1 as i64), (to.0 as i64, to.1 as i64));
    let start = walk.next().expect("walk yields its start");
    let mut prev_wall = is_wall(start.0 as usize, start.1 as usize);
    for (r, c) in walk {
        let (r, c) = (r as usize, c as usize);
        let wall = is_wall(r, c);
        if wall && !prev_wall {
            on_entry(r, c);
        }
        prev_wall = wall;
    }
}
