use serde::{Deserialize, Serialize};

use super::SimError;

/// Row-major grid of palette-indexed pixels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Screen {
    width: usize,
    height: usize,
    palette_size: u8,
    pixels: Vec<u8>,
}

impl Screen {
    pub fn new(
        width: usize,
        height: usize,
        palette_size: u8,
        pixels: Vec<u8>,
    ) -> Result<Self, SimError> {
        if width == 0 || height == 0 {
            return Err(SimError::InvalidDimensions(format!(
                "screen must be non-empty, got {width}x{height}"
            )));
        }
        if palette_size == 0 {
            return Err(SimError::InvalidDimensions("palette must be non-empty".into()));
        }
        if pixels.len() != width * height {
            return Err(SimError::InvalidDimensions(format!(
                "pixel buffer has {} entries, expected {}",
                pixels.len(),
                width * height
            )));
        }
        if let Some(&bad) = pixels.iter().find(|&&p| p >= palette_size) {
            return Err(SimError::InvalidDimensions(format!(
                "pixel color {bad} outside palette of {palette_size}"
            )));
        }
        Ok(Self {
            width,
            height,
            palette_size,
            pixels,
        })
    }

    /// A screen where every pixel has color `color`.
    pub fn filled(width: usize, height: usize, palette_size: u8, color: u8) -> Self {
        assert!(color < palette_size);
        Self {
            width,
            height,
            palette_size,
            pixels: vec![color; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn palette_size(&self) -> u8 {
        self.palette_size
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, color: u8) {
        assert!(color < self.palette_size);
        self.pixels[y * self.width + x] = color;
    }

    /// Paints a `w`x`h` rectangle, clipped to the screen.
    pub fn fill_rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, color: u8) {
        assert!(color < self.palette_size);
        let x1 = (x0 + w).min(self.width);
        let y1 = (y0 + h).min(self.height);
        for y in y0..y1 {
            let row = y * self.width;
            self.pixels[row + x0..row + x1].fill(color);
        }
    }

    /// Grayscale intensities in `[0, 1]`: color `c` maps to `c / (palette_size - 1)`.
    pub fn grayscale(&self) -> Vec<f32> {
        let denom = (self.palette_size.max(2) - 1) as f32;
        self.pixels.iter().map(|&p| p as f32 / denom).collect()
    }
}
