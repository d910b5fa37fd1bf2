//! Deterministic synthetic digit dataset in the MNIST container shape.
//!
//! Renders seeded, jittered seven-segment-style glyphs onto a 28x28 canvas
//! with additive noise. Used by the examples and the test suite so the full
//! IDX -> train -> quantize -> contract pipeline runs end to end on machines
//! that do not have the real MNIST files on disk; any real IDX pair supplied
//! by path works identically.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::mnist::{ImageSet, LabelSet};

pub const SIDE: usize = 28;

/// Segment endpoints in a unit glyph box, y pointing down.
/// Order: top, upper-right, lower-right, bottom, lower-left, upper-left, middle.
const SEGMENTS: [((f64, f64), (f64, f64)); 7] = [
    ((0.0, 0.0), (1.0, 0.0)),
    ((1.0, 0.0), (1.0, 0.5)),
    ((1.0, 0.5), (1.0, 1.0)),
    ((0.0, 1.0), (1.0, 1.0)),
    ((0.0, 0.5), (0.0, 1.0)),
    ((0.0, 0.0), (0.0, 0.5)),
    ((0.0, 0.5), (1.0, 0.5)),
];

/// Which segments each digit lights, as indices into [`SEGMENTS`].
const DIGIT_SEGMENTS: [&[usize]; 10] = [
    &[0, 1, 2, 3, 4, 5],    // 0
    &[1, 2],                // 1
    &[0, 1, 6, 4, 3],       // 2
    &[0, 1, 6, 2, 3],       // 3
    &[5, 6, 1, 2],          // 4
    &[0, 5, 6, 2, 3],       // 5
    &[0, 5, 6, 4, 2, 3],    // 6
    &[0, 1, 2],             // 7
    &[0, 1, 2, 3, 4, 5, 6], // 8
    &[0, 1, 2, 3, 5, 6],    // 9
];

fn point_segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (px - a.0, py - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    };
    let (dx, dy) = (px - (a.0 + t * vx), py - (a.1 + t * vy));
    (dx * dx + dy * dy).sqrt()
}

/// Renders one digit with seeded jitter (placement, size, stroke, intensity)
/// and per-pixel noise.
pub fn render_digit(label: u8, rng: &mut ChaCha8Rng) -> [u8; SIDE * SIDE] {
    assert!(label < 10, "digit label out of range");
    let glyph_w = rng.gen_range(10.0..16.0);
    let glyph_h = rng.gen_range(16.0..22.0);
    let x0 = rng.gen_range(2.0..(SIDE as f64 - glyph_w - 4.0));
    let y0 = rng.gen_range(2.0..(SIDE as f64 - glyph_h - 4.0));
    let thickness = rng.gen_range(1.1..1.9);
    let intensity = rng.gen_range(170.0..255.0);

    let segs: Vec<((f64, f64), (f64, f64))> = DIGIT_SEGMENTS[label as usize]
        .iter()
        .map(|&i| {
            let (a, b) = SEGMENTS[i];
            (
                (x0 + a.0 * glyph_w, y0 + a.1 * glyph_h),
                (x0 + b.0 * glyph_w, y0 + b.1 * glyph_h),
            )
        })
        .collect();

    let mut canvas = [0.0f64; SIDE * SIDE];
    for r in 0..SIDE {
        for c in 0..SIDE {
            let (px, py) = (c as f64 + 0.5, r as f64 + 0.5);
            let d = segs
                .iter()
                .map(|&(a, b)| point_segment_distance(px, py, a, b))
                .fold(f64::INFINITY, f64::min);
            if d < thickness {
                let ratio = d / thickness;
                canvas[r * SIDE + c] = intensity * (1.0 - ratio * ratio);
            }
        }
    }

    let mut out = [0u8; SIDE * SIDE];
    for (o, v) in out.iter_mut().zip(canvas.iter()) {
        let noisy = v + rng.gen_range(0.0..24.0);
        *o = noisy.clamp(0.0, 255.0).floor() as u8;
    }
    out
}

/// Generates `n` images with uniformly random labels; fully determined by `seed`.
pub fn generate(n: usize, seed: u64) -> (ImageSet, LabelSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = Vec::with_capacity(n * SIDE * SIDE);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let label = rng.gen_range(0u8..10);
        labels.push(label);
        pixels.extend_from_slice(&render_digit(label, &mut rng));
    }
    let images = ImageSet::new(n, SIDE, SIDE, pixels).expect("consistent dimensions");
    let labels = LabelSet::new(labels).expect("labels in range");
    (images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let (a_img, a_lab) = generate(8, 7);
        let (b_img, b_lab) = generate(8, 7);
        assert_eq!(a_img, b_img);
        assert_eq!(a_lab, b_lab);
        let (c_img, _) = generate(8, 8);
        assert_ne!(a_img, c_img);
    }

    #[test]
    fn images_have_ink() {
        let (img, _) = generate(10, 3);
        for i in 0..img.count() {
            let ink: u32 = img.image(i).iter().map(|&b| u32::from(b)).sum();
            assert!(ink > 2000, "image {i} nearly blank (sum {ink})");
        }
    }
}
