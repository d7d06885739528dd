//! Folder-per-subject corpus ingestion, batch extraction and the feature store file.
//!
//! # Feature store layout (version 1, little-endian)
//!
//! ```text
//! magic        4 bytes  "LDFV"
//! version      u16      1
//! name         u32 length + UTF-8 bytes ("ldrp" or "lbp")
//! params       5 x u8   N, M1, M2, B, sampling (0 = round, 1 = bilinear)
//! count        u32
//! dimension    u32
//! records      count x { label u32, path (u32 length + UTF-8), dimension x f64 }
//! ```
//!
//! LBP stores its neighbor count in the `N` slot and its radius in both scale
//! slots.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::evaluation::{LabeledStore, Record};
use crate::lbp::{lbp_histogram, LbpParams};
use crate::ldrp::{multiscale_descriptor, DescriptorError, LdrpParams};
use crate::pixel_grid::{from_dynamic, resize, GrayImage, GridError, SamplingMode};

pub const MAGIC: &[u8; 4] = b"LDFV";
pub const VERSION: u16 = 1;
pub const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "pgm", "pnm"];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("corpus root {0} does not exist or is not a directory")]
    MissingRoot(PathBuf),
    #[error("corpus root {0} contains no subject directories with images")]
    EmptyRoot(PathBuf),
    #[error("I/O error at {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Extract {
        path: String,
        source: DescriptorError,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("worker pool: {0}")]
    Pool(String),
}

/// One ingested image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub label: u32,
    /// Path relative to the corpus root, `/`-separated.
    pub path: String,
}

/// Subjects in lexicographic order; `label` indexes into `subjects`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CorpusManifest {
    pub subjects: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

/// Manifest with decoded images, index-aligned with `manifest.entries`.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    pub images: Vec<GrayImage>,
    pub skipped: Vec<SkippedFile>,
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut entries = fs::read_dir(dir)
        .map_err(io_err)?
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err)?;
    entries.sort_by_key(|e| e.file_name());
    Ok(entries)
}

fn has_image_extension(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn load_image(path: &Path, resize_to: Option<(usize, usize)>) -> Result<GrayImage, String> {
    let decoded = image::open(path).map_err(|e| e.to_string())?;
    let gray = from_dynamic(&decoded);
    match resize_to {
        Some((w, h)) => resize(&gray, w, h).map_err(|e| e.to_string()),
        None => Ok(gray),
    }
}

/// Reads `root/<subject>/<image>`, converting to gray and resizing when asked.
///
/// Subjects and files are visited in lexicographic order. Files reached twice
/// (e.g. through a symlink) are kept once. Undecodable files are skipped and
/// reported in [`Corpus::skipped`].
pub fn ingest(root: &Path, resize_to: Option<(usize, usize)>) -> Result<Corpus, CorpusError> {
    if !root.is_dir() {
        return Err(CorpusError::MissingRoot(root.to_path_buf()));
    }
    if let Some((w, h)) = resize_to {
        if w == 0 || h == 0 {
            return Err(
                GridError::Argument(format!("resize target {w}x{h} must be positive")).into(),
            );
        }
    }
    let mut manifest = CorpusManifest::default();
    let mut images = Vec::new();
    let mut skipped = Vec::new();
    let mut seen = HashSet::new();

    for subject in sorted_entries(root)? {
        let subject_path = subject.path();
        if !subject_path.is_dir() {
            continue;
        }
        let name = subject.file_name().to_string_lossy().into_owned();
        let label = manifest.subjects.len() as u32;
        let mut added = 0;
        for file in sorted_entries(&subject_path)? {
            let path = file.path();
            if !path.is_file() || !has_image_extension(&path) {
                continue;
            }
            let canonical = fs::canonicalize(&path).map_err(|source| CorpusError::Io {
                path: path.clone(),
                source,
            })?;
            if !seen.insert(canonical) {
                continue;
            }
            match load_image(&path, resize_to) {
                Ok(img) => {
                    manifest.entries.push(ManifestEntry {
                        label,
                        path: format!("{name}/{}", file.file_name().to_string_lossy()),
                    });
                    images.push(img);
                    added += 1;
                }
                Err(reason) => skipped.push(SkippedFile { path, reason }),
            }
        }
        if added > 0 {
            manifest.subjects.push(name);
        }
    }
    if manifest.entries.is_empty() && skipped.is_empty() {
        return Err(CorpusError::EmptyRoot(root.to_path_buf()));
    }
    Ok(Corpus {
        manifest,
        images,
        skipped,
    })
}

/// Descriptor family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DescriptorConfig {
    Ldrp(LdrpParams),
    Lbp(LbpParams),
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig::Ldrp(LdrpParams::default())
    }
}

impl DescriptorConfig {
    pub fn name(&self) -> &'static str {
        match self {
            DescriptorConfig::Ldrp(_) => "ldrp",
            DescriptorConfig::Lbp(_) => "lbp",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            DescriptorConfig::Ldrp(p) => p.dimension(),
            DescriptorConfig::Lbp(p) => p.dimension(),
        }
    }

    pub fn validate(&self) -> Result<(), DescriptorError> {
        match self {
            DescriptorConfig::Ldrp(p) => p.validate(),
            DescriptorConfig::Lbp(p) => p.validate(),
        }
    }

    pub fn describe(&self, image: &GrayImage) -> Result<Vec<f64>, DescriptorError> {
        match self {
            DescriptorConfig::Ldrp(p) => Ok(multiscale_descriptor(image, p)?.into_values()),
            DescriptorConfig::Lbp(p) => lbp_histogram(image, p),
        }
    }

    /// Header parameter block `[N, M1, M2, B, sampling]`.
    fn param_block(&self) -> [u8; 5] {
        match self {
            DescriptorConfig::Ldrp(p) => [
                p.directions as u8,
                p.min_scale as u8,
                p.max_scale as u8,
                p.bit_depth,
                p.sampling.code(),
            ],
            DescriptorConfig::Lbp(p) => [
                p.neighbors as u8,
                p.radius as u8,
                p.radius as u8,
                8,
                p.sampling.code(),
            ],
        }
    }

    fn from_header(name: &str, block: [u8; 5]) -> Result<Self, StoreFileError> {
        let sampling = SamplingMode::from_code(block[4])
            .ok_or_else(|| StoreFileError::Params(format!("unknown sampling code {}", block[4])))?;
        let config = match name {
            "ldrp" => DescriptorConfig::Ldrp(LdrpParams {
                directions: u32::from(block[0]),
                min_scale: u32::from(block[1]),
                max_scale: u32::from(block[2]),
                bit_depth: block[3],
                sampling,
            }),
            "lbp" => {
                if block[1] != block[2] {
                    return Err(StoreFileError::Params(format!(
                        "LBP radius slots disagree: {} vs {}",
                        block[1], block[2]
                    )));
                }
                DescriptorConfig::Lbp(LbpParams {
                    neighbors: u32::from(block[0]),
                    radius: u32::from(block[1]),
                    sampling,
                })
            }
            other => return Err(StoreFileError::UnknownDescriptor(other.to_string())),
        };
        config
            .validate()
            .map_err(|e| StoreFileError::Params(e.to_string()))?;
        Ok(config)
    }
}

/// Runs `f` on a rayon pool of `workers` threads, or the global pool when 0.
pub fn with_workers<R: Send>(
    workers: usize,
    f: impl FnOnce() -> R + Send,
) -> Result<R, CorpusError> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CorpusError::Pool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Describes every image of `corpus`; output order equals manifest order.
pub fn extract_all(
    corpus: &Corpus,
    config: &DescriptorConfig,
    workers: usize,
) -> Result<LabeledStore, CorpusError> {
    config.validate().map_err(|source| CorpusError::Extract {
        path: "<parameters>".into(),
        source,
    })?;
    let vectors = with_workers(workers, || {
        corpus
            .images
            .par_iter()
            .map(|img| config.describe(img))
            .collect::<Vec<_>>()
    })?;
    let mut store = LabeledStore::new();
    for (entry, vector) in corpus.manifest.entries.iter().zip(vectors) {
        let vector = vector.map_err(|source| CorpusError::Extract {
            path: entry.path.clone(),
            source,
        })?;
        store
            .push(entry.label, entry.path.clone(), vector)
            .expect("one descriptor configuration yields one dimension");
    }
    Ok(store)
}

/// Descriptor records together with the configuration that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStore {
    pub config: DescriptorConfig,
    pub store: LabeledStore,
}

#[derive(Debug, Error)]
pub enum StoreFileError {
    #[error("not a feature store: bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported feature store version {0} (expected {VERSION})")]
    Version(u16),
    #[error("feature store is truncated: needed {needed} more bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("dimension inconsistency: {0}")]
    Dimension(String),
    #[error("unknown descriptor `{0}`")]
    UnknownDescriptor(String),
    #[error("invalid descriptor parameters: {0}")]
    Params(String),
    #[error("invalid UTF-8 in {0}")]
    Utf8(&'static str),
    #[error("{0} trailing bytes after the last record")]
    TrailingBytes(usize),
    #[error("{0} does not fit the format")]
    TooLarge(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<(), StoreFileError> {
    let len = u32::try_from(s.len()).map_err(|_| StoreFileError::TooLarge("string length"))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

impl FeatureStore {
    pub fn new(config: DescriptorConfig, store: LabeledStore) -> Result<Self, StoreFileError> {
        if !store.is_empty() && store.dimension() != config.dimension() {
            return Err(StoreFileError::Dimension(format!(
                "{} descriptor has dimension {} but records have {}",
                config.name(),
                config.dimension(),
                store.dimension()
            )));
        }
        Ok(Self { config, store })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, StoreFileError> {
        let dimension = self.config.dimension();
        let count = u32::try_from(self.store.len())
            .map_err(|_| StoreFileError::TooLarge("record count"))?;
        let mut out = Vec::with_capacity(32 + self.store.len() * (dimension * 8 + 32));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, self.config.name())?;
        out.extend_from_slice(&self.config.param_block());
        out.extend_from_slice(&count.to_le_bytes());
        out.extend_from_slice(&(dimension as u32).to_le_bytes());
        for r in self.store.records() {
            if r.vector.len() != dimension {
                return Err(StoreFileError::Dimension(format!(
                    "record {} has {} values, expected {dimension}",
                    r.id,
                    r.vector.len()
                )));
            }
            out.extend_from_slice(&r.label.to_le_bytes());
            put_str(&mut out, &r.id)?;
            for v in &r.vector {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, StoreFileError> {
        let mut cur = Cursor { bytes, pos: 0 };
        let magic: [u8; 4] = cur.array()?;
        if &magic != MAGIC {
            return Err(StoreFileError::BadMagic(magic));
        }
        let version = u16::from_le_bytes(cur.array()?);
        if version != VERSION {
            return Err(StoreFileError::Version(version));
        }
        let name = cur.string("descriptor name")?;
        let config = DescriptorConfig::from_header(&name, cur.array()?)?;
        let count = cur.u32()? as usize;
        let dimension = cur.u32()? as usize;
        if dimension != config.dimension() {
            return Err(StoreFileError::Dimension(format!(
                "header dimension {dimension} but {name} parameters give {}",
                config.dimension()
            )));
        }
        let mut records = Vec::with_capacity(count.min(1 << 16));
        for _ in 0..count {
            let label = cur.u32()?;
            let id = cur.string("record path")?;
            let raw = cur.take(dimension * 8)?;
            let vector = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            records.push(Record { label, id, vector });
        }
        if cur.pos != bytes.len() {
            return Err(StoreFileError::TrailingBytes(bytes.len() - cur.pos));
        }
        let store = LabeledStore::from_records(records)
            .map_err(|e| StoreFileError::Dimension(e.to_string()))?;
        Ok(Self { config, store })
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreFileError> {
        let available = self.bytes.len() - self.pos;
        if n > available {
            return Err(StoreFileError::Truncated {
                offset: self.pos,
                needed: n - available,
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], StoreFileError> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    fn u32(&mut self) -> Result<u32, StoreFileError> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn string(&mut self, what: &'static str) -> Result<String, StoreFileError> {
        let len = self.u32()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|_| StoreFileError::Utf8(what))
    }
}

/// Writes `store` to `path` in the feature store format.
pub fn save_store(store: &FeatureStore, path: &Path) -> Result<(), StoreFileError> {
    let bytes = store.to_bytes()?;
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    file.write_all(&bytes)?;
    file.flush()?;
    Ok(())
}

pub fn load_store(path: &Path) -> Result<FeatureStore, StoreFileError> {
    FeatureStore::from_bytes(&fs::read(path)?)
}

/// CSV export: header `label,path,v0..v{d-1}`, one row per record.
pub fn write_csv<W: Write>(store: &LabeledStore, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["label".to_string(), "path".to_string()];
    header.extend((0..store.dimension()).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for r in store.records() {
        let mut row = vec![r.label.to_string(), r.id.clone()];
        row.extend(r.vector.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
