use std::collections::BTreeMap;

use medflow::geo::{
    build_grid_index, disadvantage_scores, k_nearest_aggregate, neighborhoods_for_year, ResidentRecord, Square,
};
use medflow::synthdata::stream_rng;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::Rng;

fn random_grid(seed: u64, side: i64, n: usize) -> Vec<ResidentRecord> {
    let mut rng = stream_rng(seed, 1);
    (0..n)
        .map(|i| {
            let adult = rng.random_bool(0.8);
            ResidentRecord {
                person_id: i as u64,
                square: Square::new(rng.random_range(0..side), rng.random_range(0..side)),
                adult,
                flags: std::array::from_fn(|_| adult && rng.random_bool(0.3)),
            }
        })
        .collect()
}

/// Full distance sort over occupied squares, whole rings at a time.
fn brute_force(records: &[ResidentRecord], ego: Square, k: u64) -> Option<(u64, [f64; 5], i64)> {
    let mut rings: BTreeMap<i64, (u64, [u64; 5])> = BTreeMap::new();
    for r in records.iter().filter(|r| r.adult) {
        let e = rings.entry(r.square.distance2(ego)).or_default();
        e.0 += 1;
        for (c, &f) in e.1.iter_mut().zip(&r.flags) {
            *c += u64::from(f);
        }
    }
    let (mut pop, mut flags) = (0_u64, [0_u64; 5]);
    for (d2, (p, f)) in rings {
        pop += p;
        for (c, x) in flags.iter_mut().zip(f) {
            *c += x;
        }
        if pop >= k {
            return Some((pop, flags.map(|c| c as f64 / pop as f64), d2));
        }
    }
    None
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_matches_brute_force(seed in 0u64..100_000, side in 1i64..=20, n in 1usize..400, k in 1u64..60) {
        let records = random_grid(seed, side, n);
        let index = build_grid_index(&records).unwrap();
        let ego = records[seed as usize % n].square;
        match (k_nearest_aggregate(&index, ego, k, None), brute_force(&records, ego, k)) {
            (Ok(got), Some((count, shares, d2))) => {
                prop_assert_eq!(got.neighbor_count, count);
                prop_assert_eq!(got.shares, shares);
                prop_assert_eq!(got.radius2, d2);
            }
            (Err(_), None) => {}
            (got, want) => prop_assert!(false, "{got:?} vs {want:?}"),
        }
    }

    #[test]
    fn larger_k_extends_the_neighborhood(seed in 0u64..100_000, side in 2i64..=20, k in 1u64..40, extra in 1u64..40) {
        let records = random_grid(seed, side, 500);
        let index = build_grid_index(&records).unwrap();
        let ego = records[0].square;
        if let (Ok(small), Ok(large)) =
            (k_nearest_aggregate(&index, ego, k, None), k_nearest_aggregate(&index, ego, k + extra, None))
        {
            // Rings are nested, so a radius that does not shrink means a superset.
            prop_assert!(small.radius2 <= large.radius2);
            prop_assert!(small.squares_used <= large.squares_used);
            prop_assert!(small.neighbor_count <= large.neighbor_count);
        }
    }

    #[test]
    fn shifting_every_square_changes_nothing(seed in 0u64..100_000, dx in 0i64..500, dy in 0i64..500, k in 1u64..30) {
        let records = random_grid(seed, 12, 300);
        let shifted: Vec<ResidentRecord> = records
            .iter()
            .map(|r| ResidentRecord { square: Square::new(r.square.x + dx, r.square.y + dy), ..*r })
            .collect();
        let a = neighborhoods_for_year(&records, k);
        let b = neighborhoods_for_year(&shifted, k);
        match (a, b) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
            (Err(a), Err(b)) => prop_assert_eq!(a, b),
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }
}

#[test]
fn loadings_match_dense_eigensolver() {
    let mut rng = stream_rng(99, 0);
    let shares: Vec<[f64; 5]> = (0..1000)
        .map(|_| {
            let latent: f64 = rng.random_range(0.0..1.0);
            std::array::from_fn(|j| (0.2 + 0.5 * latent * (j as f64 + 1.0) / 5.0 + rng.random_range(0.0..0.2)).min(1.0))
        })
        .collect();
    let out = disadvantage_scores(&shares).unwrap();
    let d = &out.diagnostics;

    let n = shares.len() as f64;
    let z: Vec<[f64; 5]> =
        shares.iter().map(|r| std::array::from_fn(|j| (r[j] - d.column_means[j]) / d.column_sds[j])).collect();
    let corr = DMatrix::from_fn(5, 5, |a, b| z.iter().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1.0));
    let eig = SymmetricEigen::new(corr);
    let top = eig.eigenvalues.imax();
    let mut v: Vec<f64> = eig.eigenvectors.column(top).iter().copied().collect();
    if v[2] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    for (j, (got, want)) in d.loadings.iter().zip(&v).enumerate() {
        assert!((got - want).abs() < 1e-8, "loading {j}: {got} vs {want}");
    }
    assert!((d.eigenvalues[0] - eig.eigenvalues[top]).abs() < 1e-8);
    assert!((d.variance_explained - eig.eigenvalues[top] / 5.0).abs() < 1e-8);
    let (lo, hi) = out.scores.iter().fold((f64::MAX, f64::MIN), |(l, h), &s| (l.min(s), h.max(s)));
    assert_eq!((lo, hi), (0.0, 1.0));
}
