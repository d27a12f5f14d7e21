use rand::Rng;

use crate::error::{HaisError, Result};
use crate::linalg::Matrix;

/// A grayscale image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(name: impl Into<String>, width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(HaisError::dims("image pixels", width * height, pixels.len()));
        }
        Ok(Self {
            name: name.into(),
            width,
            height,
            pixels,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchConfig {
    pub patch_edge: usize,
    pub n_patches: usize,
    /// Take the natural log of every pixel.
    pub apply_log: bool,
}

impl Default for PatchConfig {
    fn default() -> Self {
        Self {
            patch_edge: 16,
            n_patches: 10_000,
            apply_log: true,
        }
    }
}

/// Draws `n_patches` square patches, flattened row-major, one per row.
///
/// Each patch picks an image uniformly, then a placement uniformly within it.
pub fn extract_patches<R: Rng + ?Sized>(
    images: &[Image],
    cfg: &PatchConfig,
    rng: &mut R,
) -> Result<Matrix<f64>> {
    let edge = cfg.patch_edge;
    if edge == 0 {
        return Err(HaisError::param("patch_edge", "must be at least 1"));
    }
    if images.is_empty() && cfg.n_patches > 0 {
        return Err(HaisError::Input("no images to sample patches from".into()));
    }
    for img in images {
        if img.width < edge || img.height < edge {
            return Err(HaisError::Input(format!(
                "image `{}` is {}x{}, smaller than the {edge}x{edge} patch",
                img.name, img.width, img.height
            )));
        }
    }

    let mut out = Matrix::zeros(cfg.n_patches, edge * edge);
    for p in 0..cfg.n_patches {
        let img = &images[rng.random_range(0..images.len())];
        let x0 = rng.random_range(0..=img.width - edge);
        let y0 = rng.random_range(0..=img.height - edge);
        let row = out.row_mut(p);
        for dy in 0..edge {
            for dx in 0..edge {
                let v = img.get(x0 + dx, y0 + dy);
                row[dy * edge + dx] = if cfg.apply_log {
                    if v <= 0.0 {
                        return Err(HaisError::Input(format!(
                            "image `{}` has nonpositive pixel {v} at (x={}, y={}); cannot take its log",
                            img.name,
                            x0 + dx,
                            y0 + dy
                        )));
                    }
                    v.ln()
                } else {
                    v
                };
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    fn ramp(w: usize, h: usize) -> Image {
        Image::new("ramp", w, h, (0..w * h).map(|i| 1.0 + i as f64).collect()).unwrap()
    }

    #[test]
    fn constant_e_image_logs_to_ones() {
        let img = Image::new("e", 4, 4, vec![E; 16]).unwrap();
        let cfg = PatchConfig {
            patch_edge: 2,
            n_patches: 1,
            apply_log: true,
        };
        let p = extract_patches(&[img], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(p.as_slice().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn full_size_patch_is_the_image() {
        let img = ramp(3, 3);
        let cfg = PatchConfig {
            patch_edge: 3,
            n_patches: 2,
            apply_log: false,
        };
        let p = extract_patches(std::slice::from_ref(&img), &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(p.row(0), img.pixels.as_slice());
        assert_eq!(p.row(1), img.pixels.as_slice());
    }

    #[test]
    fn same_seed_same_patches() {
        let imgs = [ramp(20, 17), ramp(9, 30)];
        let cfg = PatchConfig {
            patch_edge: 5,
            n_patches: 40,
            apply_log: true,
        };
        let a = extract_patches(&imgs, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = extract_patches(&imgs, &cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn patches_are_contiguous_blocks() {
        let img = ramp(10, 8);
        let cfg = PatchConfig {
            patch_edge: 3,
            n_patches: 25,
            apply_log: false,
        };
        let p = extract_patches(&[img], &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        for r in p.iter_rows() {
            // pixel value is 1 + y*10 + x
            assert_eq!(r[1] - r[0], 1.0);
            assert_eq!(r[3] - r[0], 10.0);
        }
    }

    #[test]
    fn nonpositive_pixel_error_names_location() {
        let mut px = vec![1.0; 4];
        px[3] = 0.0;
        let img = Image::new("dark.pgm", 2, 2, px).unwrap();
        let cfg = PatchConfig {
            patch_edge: 2,
            n_patches: 1,
            apply_log: true,
        };
        let msg = extract_patches(&[img], &cfg, &mut ChaCha8Rng::seed_from_u64(0))
            .unwrap_err()
            .to_string();
        assert!(msg.contains("dark.pgm") && msg.contains("x=1, y=1"), "{msg}");
    }

    #[test]
    fn undersized_image_rejected() {
        let cfg = PatchConfig {
            patch_edge: 4,
            n_patches: 1,
            apply_log: false,
        };
        assert!(extract_patches(&[ramp(3, 10)], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }
}
