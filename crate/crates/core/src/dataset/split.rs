use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    /// 70/10/20 of `n_ics`; rounding slack goes to train.
    pub fn proportional(n_ics: usize) -> Self {
        let val = n_ics / 10;
        let test = n_ics / 5;
        SplitCounts {
            train: n_ics - val - test,
            val,
            test,
        }
    }

    pub fn total(&self) -> usize {
        self.train + self.val + self.test
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Val,
    Test,
}

/// Disjoint IC index sets covering `0..n_ics`, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub split_seed: u64,
}

impl SplitSpec {
    pub fn partition_of(&self, ic: usize) -> Option<Partition> {
        if self.train.binary_search(&ic).is_ok() {
            Some(Partition::Train)
        } else if self.val.binary_search(&ic).is_ok() {
            Some(Partition::Val)
        } else if self.test.binary_search(&ic).is_ok() {
            Some(Partition::Test)
        } else {
            None
        }
    }

    pub fn n_ics(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    /// `(partition, ic_index)` pairs, ascending by IC.
    pub fn assignments(&self) -> Vec<(Partition, usize)> {
        let mut out: Vec<(Partition, usize)> = [
            (Partition::Train, &self.train),
            (Partition::Val, &self.val),
            (Partition::Test, &self.test),
        ]
        .into_iter()
        .flat_map(|(p, ics)| ics.iter().map(move |&ic| (p, ic)))
        .collect();
        out.sort_by_key(|&(_, ic)| ic);
        out
    }
}

#[derive(Serialize)]
struct SplitRow {
    partition: Partition,
    ic_index: usize,
}

/// CSV with columns `partition,ic_index`, one row per IC.
pub fn write_split_csv<W: Write>(out: W, split: &SplitSpec) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (partition, ic_index) in split.assignments() {
        w.serialize(SplitRow {
            partition,
            ic_index,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// Seeded random partition: shuffle `0..n_ics`, then take train, val, test
/// in that order.
pub fn split_ics(n_ics: usize, counts: SplitCounts, split_seed: u64) -> Result<SplitSpec> {
    if counts.total() != n_ics {
        return Err(Error::param(
            "split",
            format!(
                "{}/{}/{} does not sum to {n_ics}",
                counts.train, counts.val, counts.test
            ),
        ));
    }
    let mut order: Vec<usize> = (0..n_ics).collect();
    Stream::new(split_seed).shuffle(&mut order);
    let (train, rest) = order.split_at(counts.train);
    let (val, test) = rest.split_at(counts.val);
    let sorted = |s: &[usize]| {
        let mut v = s.to_vec();
        v.sort_unstable();
        v
    };
    Ok(SplitSpec {
        train: sorted(train),
        val: sorted(val),
        test: sorted(test),
        split_seed,
    })
}
