//! Connected-component labelling on boolean pixel grids.

use std::collections::VecDeque;

pub(crate) const UNLABELLED: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
            Connectivity::Eight => &[
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ],
        }
    }
}

/// Row-major grid of `width * height` cells.
#[derive(Debug, Clone)]
pub(crate) struct Grid<T> {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn new(width: usize, height: usize, fill: T) -> Self {
        Grid {
            width,
            height,
            cells: vec![fill; width * height],
        }
    }
}

impl<T> Grid<T> {
    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.cells[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: T) {
        let i = self.index(x, y);
        self.cells[i] = v;
    }

    pub fn neighbours(
        &self,
        x: usize,
        y: usize,
        conn: Connectivity,
    ) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (w, h) = (self.width as isize, self.height as isize);
        conn.offsets().iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            (nx >= 0 && ny >= 0 && nx < w && ny < h).then_some((nx as usize, ny as usize))
        })
    }
}

/// Labels the `true` cells of `mask`. Labels are assigned in row-major
/// order of each component's first cell, so they are canonical.
pub(crate) fn label(mask: &Grid<bool>, conn: Connectivity) -> (Grid<u32>, usize) {
    let mut labels = Grid::new(mask.width, mask.height, UNLABELLED);
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for y in 0..mask.height {
        for x in 0..mask.width {
            if !*mask.get(x, y) || *labels.get(x, y) != UNLABELLED {
                continue;
            }
            labels.set(x, y, next);
            queue.push_back((x, y));
            while let Some((cx, cy)) = queue.pop_front() {
                for (nx, ny) in mask.neighbours(cx, cy, conn) {
                    if *mask.get(nx, ny) && *labels.get(nx, ny) == UNLABELLED {
                        labels.set(nx, ny, next);
                        queue.push_back((nx, ny));
                    }
                }
            }
            next += 1;
        }
    }
    (labels, next as usize)
}

/// Number of components of `mask` alone.
pub(crate) fn count_components(mask: &Grid<bool>, conn: Connectivity) -> usize {
    label(mask, conn).1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> Grid<bool> {
        let h = rows.len();
        let w = rows[0].len();
        let mut g = Grid::new(w, h, false);
        for (y, row) in rows.iter().enumerate() {
            for (x, c) in row.bytes().enumerate() {
                g.set(x, y, c == b'#');
            }
        }
        g
    }

    #[test]
    fn diagonal_touch_depends_on_connectivity() {
        let g = grid(&["#.", ".#"]);
        assert_eq!(count_components(&g, Connectivity::Four), 2);
        assert_eq!(count_components(&g, Connectivity::Eight), 1);
    }

    #[test]
    fn ring_and_hole() {
        let g = grid(&["#####", "#...#", "#.#.#", "#...#", "#####"]);
        assert_eq!(count_components(&g, Connectivity::Four), 2);
        let inv = Grid {
            width: g.width,
            height: g.height,
            cells: g.cells.iter().map(|b| !b).collect(),
        };
        assert_eq!(count_components(&inv, Connectivity::Four), 1);
    }

    #[test]
    fn labels_are_row_major() {
        let g = grid(&["..#", "#..", "..."]);
        let (l, n) = label(&g, Connectivity::Four);
        assert_eq!(n, 2);
        assert_eq!(*l.get(2, 0), 0);
        assert_eq!(*l.get(0, 1), 1);
    }
}
