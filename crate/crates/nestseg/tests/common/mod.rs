#![allow(dead_code)]

use std::path::Path;

use nestseg::io;
use nestseg_core::image::RgbImage;
use nestseg_core::label::LabelMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two-tone image with a bright square in the middle and mild noise.
pub fn square_scene(w: usize, h: usize, seed: u64) -> (RgbImage, LabelMap) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = RgbImage::filled(w, h, [0, 0, 0]).unwrap();
    let mut objects = vec![0u32; w * h];
    for y in 0..h {
        for x in 0..w {
            let inside = x >= w / 4 && x < 3 * w / 4 && y >= h / 4 && y < 3 * h / 4;
            let base: i32 = if inside { 200 } else { 50 };
            let noise = |rng: &mut ChaCha8Rng| (base + rng.random_range(-20..=20)).clamp(0, 255) as u8;
            img.put_pixel(x, y, [noise(&mut rng), noise(&mut rng), noise(&mut rng)]);
            objects[y * w + x] = inside as u32;
        }
    }
    (img, LabelMap::new(w, h, objects).unwrap())
}

pub fn write_scene(dir: &Path, w: usize, h: usize, seed: u64) {
    let (img, objects) = square_scene(w, h, seed);
    io::save_rgb_png(&dir.join("image.png"), &img).unwrap();
    io::save_label_map(&dir.join("objects.png"), &objects).unwrap();
}
