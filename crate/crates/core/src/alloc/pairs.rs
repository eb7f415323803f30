//! Station pairs and per-(satellite, pair) key allocations.

use std::io::Write;

use thiserror::Error;

use crate::sched::KeyPools;

/// Unordered station pairs `(a, b)` with `a < b`, as station indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairSet {
    station_count: usize,
    pairs: Vec<(usize, usize)>,
}

impl PairSet {
    /// Every pair, in lexicographic order.
    pub fn all(station_count: usize) -> Self {
        let pairs = (0..station_count)
            .flat_map(|a| (a + 1..station_count).map(move |b| (a, b)))
            .collect();
        Self { station_count, pairs }
    }

    /// Normalizes each pair to `a < b`; sorted and deduplicated.
    pub fn from_pairs(station_count: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .map(|(a, b)| (a.min(b), a.max(b)))
            .inspect(|&(a, b)| assert!(a != b && b < station_count, "bad pair ({a}, {b})"))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        Self { station_count, pairs }
    }

    pub fn station_count(&self) -> usize {
        self.station_count
    }
    pub fn len(&self) -> usize {
        self.pairs.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }
    pub fn get(&self, u: usize) -> (usize, usize) {
        self.pairs[u]
    }
    pub fn index_of(&self, a: usize, b: usize) -> Option<usize> {
        self.pairs.binary_search(&(a.min(b), a.max(b))).ok()
    }
    /// `g ∈ u`.
    pub fn contains(&self, u: usize, g: usize) -> bool {
        let (a, b) = self.pairs[u];
        a == g || b == g
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AllocViolation {
    #[error("satellite {satellite} station {station}: {used} bits allocated, pool holds {pool}")]
    Capacity {
        satellite: u32,
        station: u32,
        used: u128,
        pool: u64,
    },
    #[error("allocation shape does not match the pools")]
    Shape,
}

/// `y_{s,u}`: bits of pair `u` established through satellite `s`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairAllocation {
    satellite_ids: Vec<u32>,
    station_ids: Vec<u32>,
    pairs: PairSet,
    bits: Vec<u64>,
}

impl PairAllocation {
    pub fn zeros(satellite_ids: Vec<u32>, station_ids: Vec<u32>, pairs: PairSet) -> Self {
        assert_eq!(pairs.station_count(), station_ids.len());
        let bits = vec![0; satellite_ids.len() * pairs.len()];
        Self {
            satellite_ids,
            station_ids,
            pairs,
            bits,
        }
    }

    pub fn for_pools(pools: &KeyPools, pairs: PairSet) -> Self {
        Self::zeros(pools.satellite_ids().to_vec(), pools.station_ids().to_vec(), pairs)
    }

    pub fn satellite_ids(&self) -> &[u32] {
        &self.satellite_ids
    }
    pub fn station_ids(&self) -> &[u32] {
        &self.station_ids
    }
    pub fn pairs(&self) -> &PairSet {
        &self.pairs
    }
    pub fn satellite_count(&self) -> usize {
        self.satellite_ids.len()
    }

    #[inline]
    pub fn get(&self, satellite: usize, pair: usize) -> u64 {
        self.bits[satellite * self.pairs.len() + pair]
    }

    pub fn set(&mut self, satellite: usize, pair: usize, bits: u64) {
        let p = self.pairs.len();
        self.bits[satellite * p + pair] = bits;
    }

    pub fn add(&mut self, satellite: usize, pair: usize, bits: u64) {
        let p = self.pairs.len();
        self.bits[satellite * p + pair] += bits;
    }

    /// `Σ_s y_{s,u}` per pair.
    pub fn pair_totals(&self) -> Vec<u64> {
        let p = self.pairs.len();
        let mut out = vec![0u64; p];
        for row in self.bits.chunks(p.max(1)) {
            for (o, &b) in out.iter_mut().zip(row) {
                *o += b;
            }
        }
        out
    }

    pub fn total(&self) -> u128 {
        self.bits.iter().map(|&b| u128::from(b)).sum()
    }

    /// Bits drawn from pool `(s, g)`.
    pub fn used(&self, satellite: usize, station: usize) -> u128 {
        (0..self.pairs.len())
            .filter(|&u| self.pairs.contains(u, station))
            .map(|u| u128::from(self.get(satellite, u)))
            .sum()
    }

    /// Checks `Σ_{u ∋ g} y_{s,u} ≤ |K_{s,g}|` for every pool.
    pub fn validate(&self, pools: &KeyPools) -> Result<(), AllocViolation> {
        if pools.satellite_ids() != self.satellite_ids.as_slice() || pools.station_ids() != self.station_ids.as_slice() {
            return Err(AllocViolation::Shape);
        }
        for s in 0..self.satellite_count() {
            for g in 0..self.station_ids.len() {
                let used = self.used(s, g);
                if used > u128::from(pools.get(s, g)) {
                    return Err(AllocViolation::Capacity {
                        satellite: self.satellite_ids[s],
                        station: self.station_ids[g],
                        used,
                        pool: pools.get(s, g),
                    });
                }
            }
        }
        Ok(())
    }

    /// Pools left after this allocation is drawn. Panics if it overdraws.
    pub fn remaining(&self, pools: &KeyPools) -> KeyPools {
        let mut left = pools.clone();
        for s in 0..self.satellite_count() {
            for g in 0..self.station_ids.len() {
                let used = u64::try_from(self.used(s, g)).expect("allocation fits the pools");
                left.set(s, g, pools.get(s, g).checked_sub(used).expect("allocation fits the pools"));
            }
        }
        left
    }

    /// CSV `satellite_id,station_a,station_b,bits`, nonzero entries only.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(out);
        writeln!(w, "satellite_id,station_a,station_b,bits")?;
        for s in 0..self.satellite_count() {
            for (u, &(a, b)) in self.pairs.pairs().iter().enumerate() {
                let y = self.get(s, u);
                if y > 0 {
                    writeln!(
                        w,
                        "{},{},{},{y}",
                        self.satellite_ids[s], self.station_ids[a], self.station_ids[b]
                    )?;
                }
            }
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_pairs_count() {
        for g in 0..7 {
            assert_eq!(PairSet::all(g).len(), g * g.saturating_sub(1) / 2);
        }
        let p = PairSet::all(4);
        assert_eq!(p.get(0), (0, 1));
        assert_eq!(p.index_of(3, 2), Some(5));
        assert!(p.contains(5, 3) && !p.contains(5, 0));
        assert_eq!(PairSet::from_pairs(4, [(2, 1), (1, 2), (0, 3)]).pairs(), &[(0, 3), (1, 2)]);
    }

    #[test]
    fn validate_and_remaining() {
        let pools = KeyPools::from_matrix(vec![7], vec![1, 2, 3], &[vec![5, 4, 3]]);
        let mut a = PairAllocation::for_pools(&pools, PairSet::all(3));
        a.set(0, 0, 3); // (0,1)
        a.set(0, 1, 2); // (0,2)
        assert!(a.validate(&pools).is_ok());
        assert_eq!(a.pair_totals(), vec![3, 2, 0]);
        let left = a.remaining(&pools);
        assert_eq!((left.get(0, 0), left.get(0, 1), left.get(0, 2)), (0, 1, 1));
        a.add(0, 2, 2); // (1,2)
        assert_eq!(
            a.validate(&pools),
            Err(AllocViolation::Capacity {
                satellite: 7,
                station: 2,
                used: 5,
                pool: 4
            })
        );
        let mut out = Vec::new();
        a.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "satellite_id,station_a,station_b,bits\n7,1,2,3\n7,1,3,2\n7,2,3,2\n"
        );
    }
}
