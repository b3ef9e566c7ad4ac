use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_image, Image};
use crate::rng::{streams, substream, Rng};
use crate::{Error, Result};

/// Reads a corpus from a directory of `.pgm`/`.ppm`/`.pnm` files (sorted by
/// name) or from a manifest listing one path per line. Relative manifest
/// entries resolve against the manifest's directory; blank lines and lines
/// starting with `#` are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Image>> {
    let path = path.as_ref();
    let files = if path.is_dir() {
        let mut files = Vec::new();
        for entry in std::fs::read_dir(path).map_err(|e| Error::io(path, e))? {
            let p = entry.map_err(|e| Error::io(path, e))?.path();
            let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if matches!(ext.as_deref(), Some("pgm" | "ppm" | "pnm")) {
                files.push(p);
            }
        }
        files.sort();
        files
    } else {
        read_manifest(path)?
    };
    if files.is_empty() {
        return Err(Error::validation(format!("no images found in {}", path.display())));
    }
    files.iter().map(load_image).collect()
}

pub fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new(""));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}

/// Parameters of the generated stand-in corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticCorpus {
    pub count: usize,
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub seed: u64,
}

impl Default for SyntheticCorpus {
    fn default() -> Self {
        Self { count: 100, width: 96, height: 96, channels: 3, seed: 0 }
    }
}

impl SyntheticCorpus {
    pub fn generate(&self) -> Result<Vec<Image>> {
        if self.count == 0 || self.width < 8 || self.height < 8 || !matches!(self.channels, 1 | 3) {
            return Err(Error::validation(format!("invalid synthetic corpus {self:?}")));
        }
        Ok((0..self.count).map(|i| dead_leaves(self, i)).collect())
    }
}

/// Dead-leaves image: occluding disks with power-law radii, mild shading,
/// a slight blur and sensor noise. Scale invariant like natural scenes, with
/// flat regions separated by sharp edges.
pub fn dead_leaves(spec: &SyntheticCorpus, index: usize) -> Image {
    let (w, h, ch) = (spec.width, spec.height, spec.channels);
    let mut rng = substream(spec.seed, streams::CORPUS, index as u64);
    let (rmin, rmax) = (1.5f64, (w.min(h) as f64) / 3.0);
    let (ia, ib) = (rmin.powi(-2), rmax.powi(-2));

    let color = |rng: &mut rand_chacha::ChaCha8Rng| -> [f64; 3] {
        let lum: f64 = rng.random::<f64>().powf(1.3);
        let mut c = [lum; 3];
        if ch == 3 {
            let sat = rng.random::<f64>() * 0.35;
            for v in c.iter_mut() {
                *v = (*v + sat * (rng.random::<f64>() - 0.5)).clamp(0.0, 1.0);
            }
        }
        c
    };

    let mut canvas = vec![0f64; w * h * ch];
    let bg = color(&mut rng);
    for px in canvas.chunks_exact_mut(ch) {
        px.copy_from_slice(&bg[..ch]);
    }
    let disks = w * h / 14;
    for _ in 0..disks {
        let u: f64 = rng.random();
        let r = (ia - u * (ia - ib)).powf(-0.5);
        let cx = rng.random::<f64>() * w as f64;
        let cy = rng.random::<f64>() * h as f64;
        let c = color(&mut rng);
        let (gx, gy) = (0.01 * (rng.random::<f64>() - 0.5), 0.01 * (rng.random::<f64>() - 0.5));
        let x0 = (cx - r).floor().max(0.0) as usize;
        let x1 = ((cx + r).ceil() as usize).min(w);
        let y0 = (cy - r).floor().max(0.0) as usize;
        let y1 = ((cy + r).ceil() as usize).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= r * r {
                    let shade = gx * dx + gy * dy;
                    let px = &mut canvas[(y * w + x) * ch..][..ch];
                    for (v, base) in px.iter_mut().zip(c) {
                        *v = (base + shade).clamp(0.0, 1.0);
                    }
                }
            }
        }
    }

    // [1 2 1]/4 blur along both axes, edges replicated
    let blur = |src: &[f64], stride: usize, len: usize, other: usize, other_stride: usize| {
        let mut out = vec![0f64; src.len()];
        for o in 0..other {
            for i in 0..len {
                for c in 0..ch {
                    let at = |k: usize| src[o * other_stride + k * stride + c];
                    let prev = at(i.saturating_sub(1));
                    let next = at((i + 1).min(len - 1));
                    out[o * other_stride + i * stride + c] = 0.25 * prev + 0.5 * at(i) + 0.25 * next;
                }
            }
        }
        out
    };
    let canvas = blur(&canvas, ch, w, h, w * ch);
    let canvas = blur(&canvas, w * ch, h, w, ch);

    let data = canvas
        .iter()
        .map(|v| (255.0 * v + 3.0 * (rng.random::<f64>() - 0.5)).round().clamp(0.0, 255.0) as u8)
        .collect();
    Image::new(w, h, ch, data).expect("generated buffer matches its shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::save_image;

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticCorpus { count: 3, width: 32, height: 24, channels: 3, seed: 5 };
        let a = spec.generate().unwrap();
        assert_eq!(a, spec.generate().unwrap());
        assert_eq!((a[0].width(), a[0].height(), a[0].channels()), (32, 24, 3));
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn manifest_and_directory_loading() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticCorpus { count: 2, width: 16, height: 16, channels: 1, seed: 1 };
        let imgs = spec.generate().unwrap();
        save_image(&imgs[0], dir.path().join("b.pgm")).unwrap();
        save_image(&imgs[1], dir.path().join("a.pgm")).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let loaded = load_corpus(dir.path()).unwrap();
        assert_eq!(loaded, vec![imgs[1].clone(), imgs[0].clone()]);

        let manifest = dir.path().join("list.txt");
        std::fs::write(&manifest, "# corpus\nb.pgm\n\na.pgm\n").unwrap();
        assert_eq!(load_corpus(&manifest).unwrap(), imgs);

        let empty = tempfile::tempdir().unwrap();
        assert!(matches!(load_corpus(empty.path()), Err(Error::Validation(_))));
        assert!(matches!(load_corpus(dir.path().join("missing.txt")), Err(Error::Io { .. })));
    }
}
