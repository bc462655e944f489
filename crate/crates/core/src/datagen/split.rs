use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::Dataset;
use crate::simcore::SimRng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("split fractions must be non-negative and sum to 1, got {0:?}")]
pub struct InvalidFractions(pub Vec<f64>);

/// Partitions whole flights. Flights are visited in a seed-shuffled order
/// and each goes to the partition furthest below its sample target
/// (ties to the lower index), so every partition ends within one flight of
/// its target.
pub fn split_dataset(ds: &Dataset, fractions: &[f64], seed: u64) -> Result<Vec<Dataset>, InvalidFractions> {
    let sum: f64 = fractions.iter().sum();
    if fractions.is_empty() || fractions.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(InvalidFractions(fractions.to_vec()));
    }
    let mut flights: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, s) in ds.samples.iter().enumerate() {
        flights.entry(s.flight_id).or_default().push(i);
    }
    let mut order: Vec<u32> = flights.keys().copied().collect();
    order.shuffle(&mut SimRng::from_seed(seed));

    let total = ds.samples.len() as f64;
    let mut parts: Vec<Dataset> = fractions.iter().map(|_| Dataset::empty(ds.width, ds.height, ds.prev_k)).collect();
    for id in order {
        let pick = (0..parts.len())
            .max_by(|&a, &b| {
                let deficit = |p: usize| fractions[p] * total - parts[p].samples.len() as f64;
                deficit(a).total_cmp(&deficit(b)).then(b.cmp(&a))
            })
            .expect("at least one partition");
        let part = &mut parts[pick];
        part.flight_count += 1;
        part.samples.extend(flights[&id].iter().map(|&i| ds.samples[i].clone()));
    }
    Ok(parts)
}

#[cfg(test)]
mod tests {
    use super::super::Sample;
    use super::*;
    use crate::drone::FlightCommand;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn dataset(flight_sizes: &[usize]) -> Dataset {
        let mut ds = Dataset::empty(1, 1, 0);
        for (id, &n) in flight_sizes.iter().enumerate() {
            for _ in 0..n {
                ds.samples.push(Sample {
                    flight_id: id as u32,
                    label: FlightCommand::Forward,
                    height_m: 0.0,
                    tof_m: 0.0,
                    cmd_count: 0.0,
                    prev_cmds: vec![],
                    pixels: vec![id as u8],
                });
            }
        }
        ds.flight_count = flight_sizes.len() as u32;
        ds
    }

    #[test]
    fn ten_equal_flights_seventy_fifteen_fifteen() {
        let parts = split_dataset(&dataset(&[5; 10]), &[0.7, 0.15, 0.15], 3).unwrap();
        let counts: Vec<u32> = parts.iter().map(|p| p.flight_count).collect();
        assert_eq!(counts, vec![7, 2, 1]);
    }

    #[test]
    fn same_seed_same_split() {
        let ds = dataset(&[3, 9, 4, 12, 7, 1, 8, 8, 2, 5, 6]);
        let a = split_dataset(&ds, &[0.7, 0.15, 0.15], 42).unwrap();
        assert_eq!(a, split_dataset(&ds, &[0.7, 0.15, 0.15], 42).unwrap());
        assert_ne!(a, split_dataset(&ds, &[0.7, 0.15, 0.15], 43).unwrap());
    }

    #[test]
    fn bad_fractions() {
        let ds = dataset(&[1]);
        assert!(split_dataset(&ds, &[0.5, 0.4], 0).is_err());
        assert!(split_dataset(&ds, &[1.5, -0.5], 0).is_err());
        assert!(split_dataset(&ds, &[], 0).is_err());
        assert!(split_dataset(&ds, &[f64::NAN, 1.0], 0).is_err());
    }

    proptest! {
        #[test]
        fn flights_stay_whole_and_targets_hold(sizes in proptest::collection::vec(1usize..30, 1..40), seed in any::<u64>()) {
            let ds = dataset(&sizes);
            let fr = [0.7, 0.15, 0.15];
            let parts = split_dataset(&ds, &fr, seed).unwrap();
            let mut seen = HashSet::new();
            let mut n = 0;
            let biggest = *sizes.iter().max().unwrap() as f64;
            for (p, f) in parts.iter().zip(fr) {
                let ids: HashSet<u32> = p.samples.iter().map(|s| s.flight_id).collect();
                prop_assert_eq!(ids.len() as u32, p.flight_count);
                for id in ids {
                    prop_assert!(seen.insert(id), "flight {} in two partitions", id);
                    prop_assert_eq!(p.samples.iter().filter(|s| s.flight_id == id).count(), sizes[id as usize]);
                }
                n += p.samples.len();
                prop_assert!((p.samples.len() as f64 - f * ds.len() as f64).abs() <= biggest + 1e-9);
            }
            prop_assert_eq!(n, ds.len());
        }
    }
}
