use crate::error::{Error, Result};
use crate::fourier::{band_limit, dft, idft_real};

use super::{one_hot, ClassField, FieldKind, LabelMap};

/// How a block-wise annotation is derived from a pixel-wise map.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BlockMode {
    /// Majority class per block, painted back over the block.
    #[default]
    MajorityVote,
    /// Ideal low-pass of each class indicator at the band limit, then argmax.
    LowPassArgmax,
}

/// Block edge along an axis of length `side` for band limit `nu_max`.
///
/// An axis whose Nyquist radius `side / 2` is already covered keeps single
/// pixels; otherwise the axis is cut into `2·nu_max` blocks of
/// `ceil(side / (2·nu_max))` pixels, the trailing block possibly shorter.
pub fn block_edge(side: usize, nu_max: usize) -> usize {
    if nu_max >= side / 2 {
        1
    } else {
        side.div_ceil(2 * nu_max)
    }
}

/// Majority-vote block annotation at band limit `nu_max`.
pub fn block_annotation(map: &LabelMap, nu_max: usize) -> Result<LabelMap> {
    block_annotation_with(map, nu_max, BlockMode::MajorityVote)
}

pub fn block_annotation_with(map: &LabelMap, nu_max: usize, mode: BlockMode) -> Result<LabelMap> {
    if nu_max == 0 {
        return Err(Error::InvalidInput("block annotation needs nu_max >= 1".into()));
    }
    match mode {
        BlockMode::MajorityVote => Ok(majority_vote(map, nu_max)),
        BlockMode::LowPassArgmax => low_pass_argmax(map, nu_max),
    }
}

fn majority_vote(map: &LabelMap, nu_max: usize) -> LabelMap {
    let (h, w) = (map.height(), map.width());
    let (eh, ew) = (block_edge(h, nu_max), block_edge(w, nu_max));
    if eh == 1 && ew == 1 {
        return map.clone();
    }
    let mut labels = map.labels().to_vec();
    let mut counts = vec![0usize; map.num_classes()];
    for r0 in (0..h).step_by(eh) {
        for c0 in (0..w).step_by(ew) {
            let (r1, c1) = ((r0 + eh).min(h), (c0 + ew).min(w));
            counts.iter_mut().for_each(|n| *n = 0);
            for r in r0..r1 {
                for c in c0..c1 {
                    counts[map.get(r, c) as usize] += 1;
                }
            }
            // max_by_key keeps the last maximum; scan in reverse for lowest-index ties
            let winner = (0..counts.len()).rev().max_by_key(|&k| counts[k]).unwrap_or(0) as u32;
            for r in r0..r1 {
                labels[r * w + c0..r * w + c1].fill(winner);
            }
        }
    }
    LabelMap::new(h, w, map.num_classes(), labels).expect("winner labels are in range")
}

fn low_pass_argmax(map: &LabelMap, nu_max: usize) -> Result<LabelMap> {
    let b = one_hot(map);
    let plane = map.height() * map.width();
    let mut values = Vec::with_capacity(b.values().len());
    for c in 0..map.num_classes() {
        let spec = band_limit(&dft(&b.class_grid(c))?, nu_max);
        let filtered = idft_real(&spec)?;
        debug_assert_eq!(filtered.len(), plane);
        values.extend_from_slice(filtered.values());
    }
    let smooth = ClassField::new(map.height(), map.width(), map.num_classes(), FieldKind::Logit, values)?;
    Ok(smooth.argmax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn edges() {
        assert_eq!(block_edge(513, 256), 1);
        assert_eq!(block_edge(513, 8), 33);
        assert_eq!(block_edge(32, 16), 1);
        assert_eq!(block_edge(32, 4), 4);
        assert_eq!(block_edge(4, 1), 2);
    }

    #[test]
    fn zero_band_rejected() {
        let m = LabelMap::new(2, 2, 2, vec![0, 1, 1, 0]).unwrap();
        assert!(block_annotation(&m, 0).is_err());
    }

    #[test]
    fn hand_enumerated_4x4() {
        // 3x3 block of class 1 in the top-left corner.
        let m = LabelMap::from_fn(4, 4, 2, |r, c| u32::from(r < 3 && c < 3)).unwrap();
        let out = block_annotation(&m, 1).unwrap();
        // Blocks: TL has 4 ones -> 1; TR and BL tie 2:2 -> 0; BR has 1 one -> 0.
        #[rustfmt::skip]
        let expect = vec![
            1, 1, 0, 0,
            1, 1, 0, 0,
            0, 0, 0, 0,
            0, 0, 0, 0,
        ];
        assert_eq!(out.labels(), expect.as_slice());
    }

    #[test]
    fn uniform_map_unchanged() {
        let m = LabelMap::from_fn(9, 7, 3, |_, _| 2).unwrap();
        for nu in 1..6 {
            assert_eq!(block_annotation(&m, nu).unwrap(), m);
            assert_eq!(block_annotation_with(&m, nu, BlockMode::LowPassArgmax).unwrap(), m);
        }
    }

    #[test]
    fn trailing_blocks_are_shorter() {
        // side 5, nu 1 -> edge 3: blocks [0,3) and [3,5)
        let m = LabelMap::new(1, 5, 2, vec![1, 1, 0, 0, 1]).unwrap();
        // width-only: height 1 keeps edge 1 since 1/2 = 0 <= nu
        assert_eq!(block_annotation(&m, 1).unwrap().labels(), &[1, 1, 1, 0, 0]);
    }

    #[test]
    fn idempotent_on_random_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..10 {
            let m = LabelMap::from_fn(17, 23, 4, |_, _| rng.gen_range(0..4)).unwrap();
            let nu = rng.gen_range(1..6);
            let once = block_annotation(&m, nu).unwrap();
            assert_eq!(block_annotation(&once, nu).unwrap(), once);
        }
    }

    #[test]
    fn low_pass_full_band_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = LabelMap::from_fn(8, 8, 3, |_, _| rng.gen_range(0..3)).unwrap();
        assert_eq!(block_annotation_with(&m, 4, BlockMode::LowPassArgmax).unwrap(), m);
    }
}
