//! Output directory layout: images, CSV series, manifest and summary.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use memcnn::io;
use memcnn::lattice::{decode_output, to_pixels, DecayMode, Dynamics, Grid};

/// Ordered `key = value` record of everything needed to repeat a run.
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            entries: vec![
                ("mcnn".into(), env!("CARGO_PKG_VERSION").into()),
                ("command".into(), command.into()),
            ],
        }
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }
}

fn key_values(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        Ok(OutDir {
            root: root.to_path_buf(),
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Output lattice as PGM. Sign outputs must be ternary.
    pub fn output(&self, stem: &str, y: &Grid<f64>, dynamics: Dynamics) -> Result<()> {
        let px = match dynamics {
            Dynamics::Standard => to_pixels(y),
            _ => decode_output(y, false)?,
        };
        let path = self.path(&format!("{stem}.pgm"));
        io::write_pgm(&px, &path).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn ppm(&self, stem: &str, rgb: &Grid<[u8; 3]>) -> Result<()> {
        let path = self.path(&format!("{stem}.ppm"));
        io::write_ppm(rgb, &path).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn csv(&self, stem: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
        let path = self.path(&format!("{stem}.csv"));
        io::write_csv(header, rows, &path).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn manifest(&self, m: &Manifest) -> Result<()> {
        fs::write(self.path("manifest.txt"), key_values(&m.entries)).context("cannot write manifest")
    }

    pub fn summary(&self, entries: &[(String, String)]) -> Result<()> {
        fs::write(self.path("summary.txt"), key_values(entries)).context("cannot write summary")
    }
}

/// Decayed cells yellow (sign kept) or red (sign flipped), the rest blue.
pub fn decay_colors(mask: &Grid<bool>, mode: DecayMode) -> Grid<[u8; 3]> {
    let hit = match mode {
        DecayMode::Preserve => [255, 255, 0],
        DecayMode::Flip => [255, 0, 0],
    };
    mask.map(|&m| if m { hit } else { [0, 0, 255] })
}
