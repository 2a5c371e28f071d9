//! Contrast normalization and binarization.

use image::GrayImage;

use super::BinaryMap;

/// Separable `[1 2 1]` smoothing.
pub fn smooth3(img: &GrayImage) -> GrayImage {
    let (w, h) = img.dimensions();
    let (wu, hu) = (w as usize, h as usize);
    if wu == 0 || hu == 0 {
        return img.clone();
    }
    let src = img.as_raw();
    let mut tmp = vec![0u32; wu * hu];
    for y in 0..hu {
        let row = &src[y * wu..(y + 1) * wu];
        for x in 0..wu {
            let l = row[x.saturating_sub(1)] as u32;
            let r = row[(x + 1).min(wu - 1)] as u32;
            tmp[y * wu + x] = l + 2 * row[x] as u32 + r;
        }
    }
    let mut out = vec![0u8; wu * hu];
    for y in 0..hu {
        let up = y.saturating_sub(1) * wu;
        let mid = y * wu;
        let down = (y + 1).min(hu - 1) * wu;
        for x in 0..wu {
            let s = tmp[up + x] + 2 * tmp[mid + x] + tmp[down + x];
            out[mid + x] = ((s + 8) / 16) as u8;
        }
    }
    GrayImage::from_raw(w, h, out).expect("buffer matches dimensions")
}

fn tile_lut(hist: &[u32; 256], area: u32, clip_limit: f64) -> [u8; 256] {
    let mut h = *hist;
    let clip = ((clip_limit * area as f64 / 256.0).floor() as u32).max(1);
    let mut excess = 0u32;
    for v in h.iter_mut() {
        if *v > clip {
            excess += *v - clip;
            *v = clip;
        }
    }
    let share = excess / 256;
    let rest = (excess % 256) as usize;
    for (i, v) in h.iter_mut().enumerate() {
        *v += share + u32::from(i < rest);
    }
    let mut lut = [0u8; 256];
    let mut cdf = 0u64;
    for (i, v) in h.iter().enumerate() {
        cdf += *v as u64;
        lut[i] = ((cdf * 255 + area as u64 / 2) / area.max(1) as u64).min(255) as u8;
    }
    lut
}

/// Contrast-limited adaptive histogram equalization with bilinear blending
/// between tile mappings.
pub fn clahe(img: &GrayImage, clip_limit: f64, tiles: (u32, u32)) -> GrayImage {
    let (w, h) = img.dimensions();
    let (tx, ty) = (tiles.0.clamp(1, w.max(1)), tiles.1.clamp(1, h.max(1)));
    let tw = w.div_ceil(tx);
    let th = h.div_ceil(ty);
    let mut luts = Vec::with_capacity((tx * ty) as usize);
    for j in 0..ty {
        for i in 0..tx {
            let (x0, y0) = (i * tw, j * th);
            let (x1, y1) = ((x0 + tw).min(w), (y0 + th).min(h));
            let mut hist = [0u32; 256];
            for y in y0..y1 {
                let row = &img.as_raw()[(y * w) as usize..((y + 1) * w) as usize];
                for &p in &row[x0 as usize..x1 as usize] {
                    hist[p as usize] += 1;
                }
            }
            let area = (x1.saturating_sub(x0)) * (y1.saturating_sub(y0));
            luts.push(tile_lut(&hist, area.max(1), clip_limit));
        }
    }
    // Bilinear weights depend only on the column (resp. row), so compute
    // them once per axis.
    let axis = |size: u32, tile: u32, n: u32| -> Vec<(usize, usize, f32)> {
        (0..size)
            .map(|p| {
                let f = (p as f64 + 0.5) / tile as f64 - 0.5;
                let lo = f.floor().clamp(0.0, (n - 1) as f64);
                let hi = (lo + 1.0).min((n - 1) as f64);
                (lo as usize, hi as usize, (f - lo).clamp(0.0, 1.0) as f32)
            })
            .collect()
    };
    let cols = axis(w, tw, tx);
    let rows = axis(h, th, ty);
    let src = img.as_raw();
    let mut out = vec![0u8; (w * h) as usize];
    let txu = tx as usize;
    for (y, &(j0, j1, wy)) in rows.iter().enumerate() {
        let base = y * w as usize;
        for (x, &(i0, i1, wx)) in cols.iter().enumerate() {
            let v = src[base + x] as usize;
            let l = |i: usize, j: usize| luts[j * txu + i][v] as f32;
            let top = l(i0, j0) * (1.0 - wx) + l(i1, j0) * wx;
            let bot = l(i0, j1) * (1.0 - wx) + l(i1, j1) * wx;
            out[base + x] = (top * (1.0 - wy) + bot * wy).round() as u8;
        }
    }
    GrayImage::from_raw(w, h, out).expect("buffer matches dimensions")
}

/// Foreground where a pixel is darker than its `block × block` mean by more than `offset`.
pub fn adaptive_threshold(img: &GrayImage, block: u32, offset: f64) -> BinaryMap {
    let (w, h) = img.dimensions();
    let (wu, hu) = (w as usize, h as usize);
    let src = img.as_raw();
    let mut integral = vec![0u64; (wu + 1) * (hu + 1)];
    for y in 0..hu {
        let mut row = 0u64;
        for x in 0..wu {
            row += src[y * wu + x] as u64;
            integral[(y + 1) * (wu + 1) + x + 1] = integral[y * (wu + 1) + x + 1] + row;
        }
    }
    let r = (block / 2) as usize;
    let mut out = BinaryMap::new(w, h);
    for y in 0..hu {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(hu));
        for x in 0..wu {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(wu));
            let s = integral[y1 * (wu + 1) + x1] + integral[y0 * (wu + 1) + x0]
                - integral[y0 * (wu + 1) + x1]
                - integral[y1 * (wu + 1) + x0];
            let mean = s as f64 / ((x1 - x0) * (y1 - y0)) as f64;
            let p = src[y * wu + x] as f64;
            if p < mean - offset {
                out.set(x as u32, y as u32, true);
            }
        }
    }
    out
}
