use std::collections::HashMap;

use super::GeoError;

/// Integer coordinates of a grid square (units of 100 m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Square {
    pub x: i64,
    pub y: i64,
}

impl Square {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    /// Squared centroid-to-centroid distance in square units.
    pub fn distance2(self, other: Square) -> i64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }
}

/// One resident-year: location plus the five indicator flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResidentRecord {
    pub person_id: u64,
    pub square: Square,
    pub adult: bool,
    pub flags: [bool; 5],
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SquareCounts {
    pub population: u64,
    pub indicators: [u64; 5],
}

impl SquareCounts {
    fn add(&mut self, flags: &[bool; 5]) {
        self.population += 1;
        for (c, &f) in self.indicators.iter_mut().zip(flags) {
            *c += u64::from(f);
        }
    }
}

/// Adult population and indicator counts per occupied square.
#[derive(Debug, Clone, Default)]
pub struct GridIndex {
    squares: HashMap<Square, SquareCounts>,
    total_population: u64,
    bounds: Option<(Square, Square)>,
}

impl GridIndex {
    pub fn get(&self, square: Square) -> Option<&SquareCounts> {
        self.squares.get(&square)
    }

    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    pub fn occupied_squares(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    /// Occupied squares in coordinate order.
    pub fn squares(&self) -> Vec<(Square, SquareCounts)> {
        let mut v: Vec<_> = self.squares.iter().map(|(s, c)| (*s, *c)).collect();
        v.sort_by_key(|(s, _)| *s);
        v
    }

    /// Bounding box (min corner, max corner) of occupied squares.
    pub fn bounds(&self) -> Option<(Square, Square)> {
        self.bounds
    }

    /// Largest squared distance from `square` to any corner of the bounding box.
    pub(crate) fn max_distance2_from(&self, square: Square) -> i64 {
        match self.bounds {
            None => 0,
            Some((lo, hi)) => {
                let dx = (square.x - lo.x).abs().max((hi.x - square.x).abs());
                let dy = (square.y - lo.y).abs().max((hi.y - square.y).abs());
                dx * dx + dy * dy
            }
        }
    }
}

/// Tally residents per square. Only adults are counted.
pub fn build_grid_index<'a, I>(records: I) -> Result<GridIndex, GeoError>
where
    I: IntoIterator<Item = &'a ResidentRecord>,
{
    let mut index = GridIndex::default();
    for r in records {
        if r.square.x < 0 || r.square.y < 0 {
            return Err(GeoError::NegativeCoordinate { person_id: r.person_id });
        }
        if !r.adult {
            if r.flags.iter().any(|&f| f) {
                return Err(GeoError::FlagWithoutAdult { person_id: r.person_id });
            }
            continue;
        }
        index.squares.entry(r.square).or_default().add(&r.flags);
        index.total_population += 1;
        index.bounds = Some(match index.bounds {
            None => (r.square, r.square),
            Some((lo, hi)) => (
                Square::new(lo.x.min(r.square.x), lo.y.min(r.square.y)),
                Square::new(hi.x.max(r.square.x), hi.y.max(r.square.y)),
            ),
        });
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, x: i64, y: i64, flags: [bool; 5]) -> ResidentRecord {
        ResidentRecord { person_id: id, square: Square::new(x, y), adult: true, flags }
    }

    #[test]
    fn empty_input_gives_empty_index() {
        let idx = build_grid_index(&[]).unwrap();
        assert!(idx.is_empty());
        assert_eq!(idx.total_population(), 0);
    }

    #[test]
    fn counts_one_square() {
        let none = [false; 5];
        let unemployed = [false, false, false, true, false];
        let recs = [rec(1, 2, 3, none), rec(2, 2, 3, unemployed), rec(3, 2, 3, none)];
        let idx = build_grid_index(&recs).unwrap();
        let c = idx.get(Square::new(2, 3)).unwrap();
        assert_eq!(c.population, 3);
        assert_eq!(c.indicators[3], 1);
    }

    #[test]
    fn flag_on_non_adult_is_an_error() {
        let mut r = rec(9, 0, 0, [true, false, false, false, false]);
        r.adult = false;
        assert_eq!(build_grid_index(&[r]).unwrap_err(), GeoError::FlagWithoutAdult { person_id: 9 });
    }

    #[test]
    fn negative_coordinate_rejected() {
        let r = rec(4, -1, 0, [false; 5]);
        assert!(matches!(build_grid_index(&[r]), Err(GeoError::NegativeCoordinate { person_id: 4 })));
    }
}
