use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::ops::ConvSpec;

/// Channel widths of the residual U-Net. The topology itself is fixed:
///
/// ```text
/// stem      conv 3→c1                      + IN + ReLU           (full res)
/// down1     conv c1→c2 stride 2            + IN + ReLU           (1/2)
/// down2     conv c2→c3 stride 2            + IN + ReLU           (1/4)
/// res0..3   conv + IN + ReLU, conv + IN, identity skip, ReLU     (1/4)
/// up1       nearest ×2, conv c3→c2         + IN + ReLU, + down1  (1/2)
/// up2       nearest ×2, conv c2→c1         + IN + ReLU, + stem   (full res)
/// out       conv c1→3, no norm, no activation
/// ```
///
/// 1 + 2 + 8 + 2 + 1 = 14 convolutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetworkConfig {
    pub stem_channels: usize,
    pub mid_channels: usize,
    pub bottleneck_channels: usize,
}

pub const RESIDUAL_BLOCKS: usize = 4;
pub const IMAGE_CHANNELS: usize = 3;
/// Height and width must be multiples of this (two stride-2 stages).
pub const SIZE_DIVISOR: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Stem,
    Down,
    ResidualFirst,
    ResidualSecond,
    Up,
    Output,
}

/// One convolution of the fixed topology.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayerDesc {
    pub name: String,
    pub stage: Stage,
    pub conv: ConvSpec,
    pub has_norm: bool,
    /// Output resolution is the input resolution divided by this.
    pub scale_divisor: usize,
}

impl LayerDesc {
    pub fn has_relu(&self) -> bool {
        !matches!(self.stage, Stage::ResidualSecond | Stage::Output)
    }
}

impl Default for NetworkConfig {
    fn default() -> Self {
        build_default()
    }
}

pub fn build_default() -> NetworkConfig {
    NetworkConfig {
        stem_channels: 8,
        mid_channels: 16,
        bottleneck_channels: 32,
    }
}

impl NetworkConfig {
    pub fn new(stem_channels: usize, mid_channels: usize, bottleneck_channels: usize) -> Self {
        NetworkConfig {
            stem_channels,
            mid_channels,
            bottleneck_channels,
        }
    }

    pub fn layers(&self) -> Vec<LayerDesc> {
        let (c1, c2, c3) = (self.stem_channels, self.mid_channels, self.bottleneck_channels);
        let layer = |name: String, stage, conv, has_norm, scale_divisor| LayerDesc {
            name,
            stage,
            conv,
            has_norm,
            scale_divisor,
        };
        let mut v = Vec::with_capacity(14);
        v.push(layer("stem".into(), Stage::Stem, ConvSpec::k3(IMAGE_CHANNELS, c1, 1), true, 1));
        v.push(layer("down1".into(), Stage::Down, ConvSpec::k3(c1, c2, 2), true, 2));
        v.push(layer("down2".into(), Stage::Down, ConvSpec::k3(c2, c3, 2), true, 4));
        for b in 0..RESIDUAL_BLOCKS {
            v.push(layer(format!("res{b}.conv1"), Stage::ResidualFirst, ConvSpec::k3(c3, c3, 1), true, 4));
            v.push(layer(format!("res{b}.conv2"), Stage::ResidualSecond, ConvSpec::k3(c3, c3, 1), true, 4));
        }
        v.push(layer("up1".into(), Stage::Up, ConvSpec::k3(c3, c2, 1), true, 2));
        v.push(layer("up2".into(), Stage::Up, ConvSpec::k3(c2, c1, 1), true, 1));
        v.push(layer("out".into(), Stage::Output, ConvSpec::k3(c1, IMAGE_CHANNELS, 1), false, 1));
        v
    }

    pub fn conv_count(&self) -> usize {
        self.layers().len()
    }

    pub fn residual_block_count(&self) -> usize {
        self.layers().iter().filter(|l| l.stage == Stage::ResidualFirst).count()
    }

    /// Exact scalar count: conv weights and biases plus norm scale and shift.
    pub fn param_count(&self) -> usize {
        self.layers()
            .iter()
            .map(|l| l.conv.param_count() + if l.has_norm { 2 * l.conv.out_channels } else { 0 })
            .sum()
    }

    /// Analytic floating-point operation count of one forward pass on an
    /// `h × w` image.
    ///
    /// Per convolution `2·outC·inC·k²·outH·outW` plus one add per output for the
    /// bias; 8 per element for instance norm (mean 1, variance 3, normalize 2,
    /// affine 2); 1 per element for each ReLU and each skip addition.
    /// Nearest upsampling is a copy and costs nothing.
    pub fn flops_estimate(&self, h: usize, w: usize) -> u64 {
        let mut total = 0u64;
        for l in self.layers() {
            let (oh, ow) = ((h / l.scale_divisor) as u64, (w / l.scale_divisor) as u64);
            let c = &l.conv;
            let out_elems = c.out_channels as u64 * oh * ow;
            total += 2 * (c.in_channels * c.kernel_h * c.kernel_w) as u64 * out_elems;
            if c.has_bias {
                total += out_elems;
            }
            if l.has_norm {
                total += 8 * out_elems;
            }
            if l.has_relu() {
                total += out_elems;
            }
            // residual identity add, and encoder skip add after each up conv
            if matches!(l.stage, Stage::ResidualSecond | Stage::Up) {
                total += out_elems;
            }
            // ReLU after the residual sum
            if l.stage == Stage::ResidualSecond {
                total += out_elems;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_has_fourteen_convs_and_four_blocks() {
        let cfg = build_default();
        assert_eq!(cfg.conv_count(), 14);
        assert_eq!(cfg.residual_block_count(), 4);
    }

    #[test]
    fn topology_invariant_under_widths() {
        let cfg = NetworkConfig::new(1, 1, 1);
        assert_eq!(cfg.conv_count(), 14);
        assert_eq!(cfg.residual_block_count(), 4);
    }

    #[test]
    fn default_param_count_matches_hand_formula() {
        // Σ (outC·inC·9 + outC) over convs + 2·C per normalized conv
        let conv = |i: usize, o: usize| o * i * 9 + o;
        let want = conv(3, 8) + conv(8, 16) + conv(16, 32) + 8 * conv(32, 32)
            + conv(32, 16) + conv(16, 8) + conv(8, 3)
            + 2 * (8 + 16 + 32 + 8 * 32 + 16 + 8);
        let cfg = build_default();
        assert_eq!(cfg.param_count(), want);
        assert_eq!(want, 86_691);
        assert!((70_000..=90_000).contains(&want));
    }

    #[test]
    fn flops_in_budget_and_scale_quadratically() {
        let cfg = build_default();
        let f256 = cfg.flops_estimate(256, 256);
        assert!((300_000_000..=1_200_000_000).contains(&f256), "{f256}");
        assert_eq!(cfg.flops_estimate(128, 128) * 4, f256);
    }
}
