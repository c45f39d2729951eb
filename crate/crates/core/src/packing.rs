//! Three mono planes per RGB frame. The projector shows the channels one
//! after another, so one 24-bit frame carries three consecutive
//! transforms.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Which channel each frame of a triple lands in.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ChannelOrder {
    /// First frame red, second green, third blue (display order).
    #[default]
    Rgb,
    /// First frame blue, second green, third red.
    Bgr,
}

impl ChannelOrder {
    /// Byte offset within an RGB pixel for the `k`-th frame of a triple.
    #[inline]
    pub fn channel_of(self, k: usize) -> usize {
        match self {
            ChannelOrder::Rgb => k,
            ChannelOrder::Bgr => 2 - k,
        }
    }
}

/// Interleave three equal-length planes into RGB888.
pub fn pack_planes(planes: [&[u8]; 3], order: ChannelOrder) -> Result<Vec<u8>> {
    let mut out = vec![0u8; 3 * planes[0].len()];
    pack_planes_into(planes, order, &mut out)?;
    Ok(out)
}

/// As [`pack_planes`], into a caller-owned buffer of exactly three bytes
/// per pixel.
///
/// Always inlined so that a caller compiled with wider vector features
/// gets a vectorized interleave.
#[inline(always)]
pub fn pack_planes_into(planes: [&[u8]; 3], order: ChannelOrder, out: &mut [u8]) -> Result<()> {
    let n = planes[0].len();
    if planes.iter().any(|p| p.len() != n) {
        return Err(Error::InvalidInput(format!(
            "plane lengths differ: {} {} {}",
            planes[0].len(),
            planes[1].len(),
            planes[2].len()
        )));
    }
    if out.len() != 3 * n {
        return Err(Error::InvalidInput(format!(
            "output holds {} bytes, {} pixels need {}",
            out.len(),
            n,
            3 * n
        )));
    }
    // planes in byte order, then one interleaving pass
    let mut by_channel = planes;
    for (k, plane) in planes.iter().enumerate() {
        by_channel[order.channel_of(k)] = plane;
    }
    let [r, g, b] = by_channel;
    // fixed-size blocks let the compiler drop bounds checks and vectorize
    const BLOCK: usize = 32;
    let mut out_blocks = out.chunks_exact_mut(3 * BLOCK);
    let mut in_blocks = r
        .chunks_exact(BLOCK)
        .zip(g.chunks_exact(BLOCK))
        .zip(b.chunks_exact(BLOCK));
    for (o, ((r, g), b)) in (&mut out_blocks).zip(&mut in_blocks) {
        let o: &mut [u8; 3 * BLOCK] = o.try_into().expect("block size");
        let (r, g, b): (&[u8; BLOCK], &[u8; BLOCK], &[u8; BLOCK]) = (
            r.try_into().expect("block size"),
            g.try_into().expect("block size"),
            b.try_into().expect("block size"),
        );
        for i in 0..BLOCK {
            o[3 * i] = r[i];
            o[3 * i + 1] = g[i];
            o[3 * i + 2] = b[i];
        }
    }
    let tail = n - n % BLOCK;
    for (i, px) in out_blocks.into_remainder().chunks_exact_mut(3).enumerate() {
        px.copy_from_slice(&[r[tail + i], g[tail + i], b[tail + i]]);
    }
    Ok(())
}

/// Split RGB888 back into the three planes in triple order.
pub fn unpack_planes(rgb: &[u8], order: ChannelOrder) -> Result<[Vec<u8>; 3]> {
    if !rgb.len().is_multiple_of(3) {
        return Err(Error::InvalidInput(format!(
            "{} bytes is not a whole number of RGB pixels",
            rgb.len()
        )));
    }
    let mut planes: [Vec<u8>; 3] = Default::default();
    for (k, plane) in planes.iter_mut().enumerate() {
        let c = order.channel_of(k);
        *plane = rgb.chunks_exact(3).map(|px| px[c]).collect();
    }
    Ok(planes)
}
