//! Naive baseline: the canonical name representation is the oeuvre, i.e.
//! every block stays one cluster. Its pairwise and best recall are 1 by
//! construction, which is the floor every real strategy must beat.

use crate::blocking::Block;
use crate::clustering::Clustering;

pub fn run_baseline(block: &Block) -> Clustering {
    Clustering::single_cluster(block.mention_ids.clone())
}
