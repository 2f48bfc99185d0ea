use rayon::prelude::*;

use super::grid::{GridIndex, ResidentRecord, Square};
use super::GeoError;

/// Neighborhood composition around one ego.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborhoodShares {
    /// Adults accumulated; at least `k`, often more because the last ring is
    /// taken whole.
    pub neighbor_count: u64,
    /// Shares in [`super::INDICATORS`] order.
    pub shares: [f64; 5],
    /// Squared radius (square units) of the outermost ring included.
    pub radius2: i64,
    pub squares_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoNeighborhood {
    pub person_id: u64,
    pub shares: NeighborhoodShares,
}

/// Offsets `(dx, dy)` grouped into rings of equal squared distance, grown on
/// demand.
#[derive(Debug, Clone, Default)]
pub struct RingCache {
    rings: Vec<(i64, Vec<(i64, i64)>)>,
    limit2: i64,
}

impl RingCache {
    pub fn new() -> Self {
        let mut c = Self { rings: vec![(0, vec![(0, 0)])], limit2: 0 };
        c.grow();
        c
    }

    fn grow(&mut self) {
        let new_limit = (self.limit2 * 4).max(16);
        let r = (new_limit as f64).sqrt().floor() as i64;
        let mut fresh: Vec<(i64, (i64, i64))> = Vec::new();
        for dx in -r..=r {
            for dy in -r..=r {
                let d2 = dx * dx + dy * dy;
                if d2 > self.limit2 && d2 <= new_limit {
                    fresh.push((d2, (dx, dy)));
                }
            }
        }
        fresh.sort_unstable();
        for (d2, off) in fresh {
            match self.rings.last_mut() {
                Some((last, v)) if *last == d2 => v.push(off),
                _ => self.rings.push((d2, vec![off])),
            }
        }
        self.limit2 = new_limit;
    }

    fn ring(&mut self, i: usize) -> &(i64, Vec<(i64, i64)>) {
        while i >= self.rings.len() {
            self.grow();
        }
        &self.rings[i]
    }
}

/// Aggregate the nearest adults around `ego_square` until at least `k` are
/// included. Squares at equal centroid distance enter together. When
/// `exclude` is given, one adult with those flags is removed from the ego's
/// own square first.
pub fn k_nearest_aggregate(
    index: &GridIndex,
    ego_square: Square,
    k: u64,
    exclude: Option<&[bool; 5]>,
) -> Result<NeighborhoodShares, GeoError> {
    k_nearest_with(index, &mut RingCache::new(), ego_square, k, exclude)
}

pub(crate) fn k_nearest_with(
    index: &GridIndex,
    cache: &mut RingCache,
    ego_square: Square,
    k: u64,
    exclude: Option<&[bool; 5]>,
) -> Result<NeighborhoodShares, GeoError> {
    if k == 0 {
        return Err(GeoError::InvalidK);
    }
    let excluded = u64::from(exclude.is_some());
    let available = index.total_population().saturating_sub(excluded);
    if available < k {
        return Err(GeoError::InsufficientPopulation { needed: k, available });
    }
    let max_d2 = index.max_distance2_from(ego_square);
    let mut population: i64 = 0;
    let mut counts = [0i64; 5];
    if let Some(flags) = exclude {
        population = -1;
        for (c, &f) in counts.iter_mut().zip(flags) {
            *c -= i64::from(f);
        }
    }
    let mut squares_used = 0;
    let mut i = 0;
    loop {
        let (d2, offsets) = cache.ring(i);
        let d2 = *d2;
        for &(dx, dy) in offsets {
            if let Some(c) = index.get(Square::new(ego_square.x + dx, ego_square.y + dy)) {
                population += c.population as i64;
                for (acc, &v) in counts.iter_mut().zip(&c.indicators) {
                    *acc += v as i64;
                }
                squares_used += 1;
            }
        }
        if population >= k as i64 || d2 >= max_d2 {
            let n = population as f64;
            let shares = counts.map(|c| c as f64 / n);
            return Ok(NeighborhoodShares { neighbor_count: population as u64, shares, radius2: d2, squares_used });
        }
        i += 1;
    }
}

/// Neighborhood shares for every adult record of one year, each ego excluded
/// from their own counts. Output order follows `records`.
pub fn neighborhoods_for_year(records: &[ResidentRecord], k: u64) -> Result<Vec<EgoNeighborhood>, GeoError> {
    let index = super::build_grid_index(records)?;
    records
        .par_iter()
        .filter(|r| r.adult)
        .map_init(RingCache::new, |cache, r| {
            k_nearest_with(&index, cache, r.square, k, Some(&r.flags))
                .map(|shares| EgoNeighborhood { person_id: r.person_id, shares })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::build_grid_index;
    use super::*;

    fn fill(x: i64, y: i64, n: usize, flagged: usize, start: u64) -> Vec<ResidentRecord> {
        (0..n)
            .map(|i| ResidentRecord {
                person_id: start + i as u64,
                square: Square::new(x, y),
                adult: true,
                flags: [i < flagged, false, i < flagged, false, false],
            })
            .collect()
    }

    #[test]
    fn single_square_suffices() {
        let mut recs = fill(5, 5, 60, 15, 0);
        recs.extend(fill(6, 5, 10, 0, 100));
        let idx = build_grid_index(&recs).unwrap();
        let s = k_nearest_aggregate(&idx, Square::new(5, 5), 50, None).unwrap();
        assert_eq!(s.neighbor_count, 60);
        assert_eq!(s.squares_used, 1);
        assert!((s.shares[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn overshoot_takes_whole_square() {
        let mut recs = fill(5, 5, 30, 0, 0);
        recs.extend(fill(5, 6, 40, 0, 100));
        recs.extend(fill(9, 9, 100, 0, 200));
        let idx = build_grid_index(&recs).unwrap();
        let s = k_nearest_aggregate(&idx, Square::new(5, 5), 50, None).unwrap();
        assert_eq!(s.neighbor_count, 70);
    }

    #[test]
    fn equidistant_squares_enter_together() {
        let mut recs = fill(5, 5, 10, 0, 0);
        recs.extend(fill(6, 5, 10, 0, 100));
        recs.extend(fill(4, 5, 10, 0, 200));
        let idx = build_grid_index(&recs).unwrap();
        let s = k_nearest_aggregate(&idx, Square::new(5, 5), 15, None).unwrap();
        assert_eq!(s.neighbor_count, 30);
    }

    #[test]
    fn ego_exclusion_removes_one_adult() {
        let recs = fill(1, 1, 5, 1, 0);
        let idx = build_grid_index(&recs).unwrap();
        let s = k_nearest_aggregate(&idx, Square::new(1, 1), 4, Some(&recs[0].flags)).unwrap();
        assert_eq!(s.neighbor_count, 4);
        assert_eq!(s.shares[0], 0.0);
    }

    #[test]
    fn insufficient_population_reports_shortfall() {
        let recs = fill(0, 0, 3, 0, 0);
        let idx = build_grid_index(&recs).unwrap();
        let err = k_nearest_aggregate(&idx, Square::new(0, 0), 5, None).unwrap_err();
        assert_eq!(err, GeoError::InsufficientPopulation { needed: 5, available: 3 });
        assert!(err.to_string().contains("short by 2"));
    }
}
