use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One makeup look. Sizes are fractions of the image side except the
/// eyeliner thickness, which is in pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct StyleSpec {
    pub style_id: u32,
    pub name: String,
    pub lip_color: [f64; 3],
    pub lip_alpha: f64,
    pub eyeshadow_color: [f64; 3],
    pub eyeshadow_alpha: f64,
    pub eyeshadow_extent: f64,
    pub blush_color: [f64; 3],
    pub blush_alpha: f64,
    pub blush_radius: f64,
    pub eyeliner_color: [f64; 3],
    pub eyeliner_alpha: f64,
    pub eyeliner_thickness: u32,
}

impl StyleSpec {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        for (name, a) in [
            ("lip_alpha", self.lip_alpha),
            ("eyeshadow_alpha", self.eyeshadow_alpha),
            ("blush_alpha", self.blush_alpha),
            ("eyeliner_alpha", self.eyeliner_alpha),
        ] {
            if !unit(a) {
                return Err(Error::invalid("style", alloc::format!("{name} must lie in [0, 1], got {a}")));
            }
        }
        for c in [&self.lip_color, &self.eyeshadow_color, &self.blush_color, &self.eyeliner_color] {
            if !c.iter().all(|&v| unit(v)) {
                return Err(Error::invalid("style", "colors must lie in [0, 1]"));
            }
        }
        if self.eyeliner_thickness < 1 {
            return Err(Error::invalid("style", "eyeliner_thickness must be >= 1"));
        }
        if !(self.eyeshadow_extent >= 0.0 && self.blush_radius >= 0.0) {
            return Err(Error::invalid("style", "extents must be >= 0"));
        }
        Ok(())
    }

    /// Every alpha multiplied by `strength`.
    pub fn scaled(&self, strength: f64) -> StyleSpec {
        StyleSpec {
            lip_alpha: self.lip_alpha * strength,
            eyeshadow_alpha: self.eyeshadow_alpha * strength,
            blush_alpha: self.blush_alpha * strength,
            eyeliner_alpha: self.eyeliner_alpha * strength,
            ..self.clone()
        }
    }
}

/// The five built-in looks, ids 0 through 4.
pub fn builtin_styles() -> Vec<StyleSpec> {
    let style = |style_id: u32, name: &str, lip: ([f64; 3], f64), shadow: ([f64; 3], f64, f64), blush: ([f64; 3], f64, f64), liner: ([f64; 3], f64, u32)| StyleSpec {
        style_id,
        name: name.into(),
        lip_color: lip.0,
        lip_alpha: lip.1,
        eyeshadow_color: shadow.0,
        eyeshadow_alpha: shadow.1,
        eyeshadow_extent: shadow.2,
        blush_color: blush.0,
        blush_alpha: blush.1,
        blush_radius: blush.2,
        eyeliner_color: liner.0,
        eyeliner_alpha: liner.1,
        eyeliner_thickness: liner.2,
    };
    alloc::vec![
        style(0, "classic", ([0.72, 0.08, 0.14], 0.75), ([0.45, 0.30, 0.42], 0.45, 0.05), ([0.90, 0.45, 0.50], 0.30, 0.07), ([0.05, 0.04, 0.05], 0.95, 2)),
        style(1, "nude", ([0.78, 0.52, 0.46], 0.55), ([0.62, 0.48, 0.38], 0.35, 0.04), ([0.88, 0.60, 0.55], 0.20, 0.06), ([0.22, 0.15, 0.12], 0.80, 1)),
        style(2, "smoky", ([0.55, 0.25, 0.30], 0.60), ([0.18, 0.16, 0.20], 0.65, 0.06), ([0.80, 0.50, 0.50], 0.15, 0.06), ([0.02, 0.02, 0.03], 1.00, 3)),
        style(3, "coral", ([0.95, 0.42, 0.35], 0.70), ([0.95, 0.62, 0.40], 0.40, 0.05), ([0.98, 0.55, 0.45], 0.35, 0.08), ([0.30, 0.16, 0.10], 0.85, 2)),
        style(4, "berry", ([0.50, 0.05, 0.30], 0.80), ([0.40, 0.20, 0.45], 0.50, 0.05), ([0.85, 0.40, 0.55], 0.30, 0.07), ([0.10, 0.03, 0.12], 0.95, 2)),
    ]
}

pub fn find_style(styles: &[StyleSpec], style_id: u32) -> Result<&StyleSpec> {
    styles
        .iter()
        .find(|s| s.style_id == style_id)
        .ok_or(Error::UnknownStyle(style_id))
}
