//! Dataset ingestion, binarization, splitting and label corruption.
//!
//! All randomness comes from a ChaCha8 generator seeded with
//! `ChaCha8Rng::seed_from_u64(seed)`, so every operation is a pure function of
//! its inputs and seed on every platform.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ratio::{round_half_up_mul, Rational};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Number of digit classes in MNIST.
pub const MNIST_CLASSES: usize = 10;

/// Seeded generator used for all dataset randomness.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Grayscale instances before binarization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawDataset {
    pub instances: Vec<(Vec<u8>, usize)>,
    pub feature_count: usize,
    pub class_count: usize,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub x: Vec<bool>,
    pub label: usize,
}

/// Instances over binary features with labels in `0..class_count`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryDataset {
    instances: Vec<Instance>,
    feature_count: usize,
    class_count: usize,
}

impl BinaryDataset {
    pub fn new(instances: Vec<Instance>, feature_count: usize, class_count: usize) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::Dataset(format!(
                "need at least 2 classes, got {class_count}"
            )));
        }
        for (i, inst) in instances.iter().enumerate() {
            if inst.x.len() != feature_count {
                return Err(Error::Dataset(format!(
                    "instance {i} has {} features, expected {feature_count}",
                    inst.x.len()
                )));
            }
            if inst.label >= class_count {
                return Err(Error::Dataset(format!(
                    "instance {i} has label {} outside 0..{class_count}",
                    inst.label
                )));
            }
        }
        Ok(Self {
            instances,
            feature_count,
            class_count,
        })
    }

    /// Convenience constructor from rows of 0/1 values.
    pub fn from_rows(rows: &[(&[u8], usize)], class_count: usize) -> Result<Self> {
        let feature_count = rows.first().map_or(0, |(x, _)| x.len());
        let instances = rows
            .iter()
            .map(|(x, label)| Instance {
                x: x.iter().map(|&v| v != 0).collect(),
                label: *label,
            })
            .collect();
        Self::new(instances, feature_count, class_count)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = usize> + '_ {
        self.instances.iter().map(|i| i.label)
    }

    fn with_instances(&self, instances: Vec<Instance>) -> Self {
        Self {
            instances,
            feature_count: self.feature_count,
            class_count: self.class_count,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub train_count: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CorruptionSpec {
    pub fraction: Rational,
    pub seed: u64,
}

fn read_maybe_gzipped(path: &Path) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut raw = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut raw)
        .map_err(|e| Error::io(path, e))?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(|e| Error::io(path, e))?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Parses an IDX header, returning the dimensions and the payload.
fn parse_idx<'a>(path: &Path, bytes: &'a [u8], magic: u32) -> Result<(Vec<usize>, &'a [u8])> {
    let err = |reason: String| Error::Idx {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 4 {
        return Err(err("file shorter than the magic number".into()));
    }
    let found = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
    if found != magic {
        return Err(err(format!("magic 0x{found:08x}, expected 0x{magic:08x}")));
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(err("truncated dimension header".into()));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|d| u32::from_be_bytes(bytes[4 + 4 * d..8 + 4 * d].try_into().unwrap()) as usize)
        .collect();
    let expected: usize = dims.iter().product();
    let payload = &bytes[header..];
    if payload.len() < expected {
        return Err(err(format!(
            "truncated payload: {} bytes, expected {expected}",
            payload.len()
        )));
    }
    Ok((dims, &payload[..expected]))
}

/// Reads an IDX image file (magic 0x803) and label file (magic 0x801).
/// Gzipped files are decompressed transparently.
pub fn load_idx(
    images_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
    class_count: usize,
) -> Result<RawDataset> {
    let images_path = images_path.as_ref();
    let labels_path = labels_path.as_ref();
    let image_bytes = read_maybe_gzipped(images_path)?;
    let label_bytes = read_maybe_gzipped(labels_path)?;
    let (image_dims, pixels) = parse_idx(images_path, &image_bytes, IDX_IMAGES_MAGIC)?;
    let (label_dims, labels) = parse_idx(labels_path, &label_bytes, IDX_LABELS_MAGIC)?;
    if image_dims[0] != label_dims[0] {
        return Err(Error::Idx {
            path: labels_path.to_path_buf(),
            reason: format!("{} labels for {} images", label_dims[0], image_dims[0]),
        });
    }
    let feature_count = image_dims[1] * image_dims[2];
    let mut instances = Vec::with_capacity(image_dims[0]);
    for (i, &label) in labels.iter().enumerate() {
        let label = label as usize;
        if label >= class_count {
            return Err(Error::Idx {
                path: labels_path.to_path_buf(),
                reason: format!("label {label} at index {i} outside 0..{class_count}"),
            });
        }
        let start = i * feature_count;
        instances.push((pixels[start..start + feature_count].to_vec(), label));
    }
    Ok(RawDataset {
        instances,
        feature_count,
        class_count,
    })
}

/// Reads rows of `x_1,...,x_F,label` with binary features.
///
/// A first row containing non-numeric fields is treated as a header. The class
/// count is one more than the largest label (and at least 2).
pub fn load_csv(path: impl AsRef<Path>) -> Result<BinaryDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::parse(path, 0, e.to_string()))?;

    let mut instances = Vec::new();
    let mut feature_count = None;
    let mut max_label = 0;
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(path, row_idx + 1, e.to_string()))?;
        let line = record.position().map_or(row_idx + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let is_header = row_idx == 0 && record.iter().any(|f| f.parse::<i64>().is_err());
        if is_header {
            continue;
        }
        if record.len() < 2 {
            return Err(Error::parse(
                path,
                line,
                "row needs at least one feature and a label",
            ));
        }
        let width = record.len() - 1;
        match feature_count {
            None => feature_count = Some(width),
            Some(f) if f != width => {
                return Err(Error::parse(
                    path,
                    line,
                    format!("ragged row: {width} features, expected {f}"),
                ))
            }
            _ => {}
        }
        let mut x = Vec::with_capacity(width);
        for field in record.iter().take(width) {
            match field {
                "0" => x.push(false),
                "1" => x.push(true),
                other => {
                    return Err(Error::parse(
                        path,
                        line,
                        format!("non-binary feature value {other:?}"),
                    ))
                }
            }
        }
        let label_field = &record[width];
        let label: i64 = label_field
            .parse()
            .map_err(|_| Error::parse(path, line, format!("invalid label {label_field:?}")))?;
        if label < 0 {
            return Err(Error::parse(path, line, format!("negative label {label}")));
        }
        let label = label as usize;
        max_label = max_label.max(label);
        instances.push(Instance { x, label });
    }
    let class_count = (max_label + 1).max(2);
    BinaryDataset::new(instances, feature_count.unwrap_or(0), class_count)
}

/// Writes a dataset in the format read by [`load_csv`].
pub fn write_csv(ds: &BinaryDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for inst in ds.instances() {
        for &bit in &inst.x {
            out.push(if bit { '1' } else { '0' });
            out.push(',');
        }
        out.push_str(&inst.label.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Default MNIST threshold: a pixel is on when its value exceeds 255/2.
pub fn default_threshold() -> Rational {
    Rational::new(255, 2)
}

/// Sets a feature to 1 iff its value is strictly greater than `threshold`.
pub fn binarize(raw: &RawDataset, threshold: Rational) -> Result<BinaryDataset> {
    let (num, den) = (*threshold.numer(), *threshold.denom());
    let instances = raw
        .instances
        .iter()
        .map(|(values, label)| Instance {
            x: values.iter().map(|&v| i64::from(v) * den > num).collect(),
            label: *label,
        })
        .collect();
    BinaryDataset::new(instances, raw.feature_count, raw.class_count)
}

/// Seeded shuffle, then the first `train_count` instances form the training set.
pub fn split(ds: &BinaryDataset, spec: SplitSpec) -> Result<(BinaryDataset, BinaryDataset)> {
    if spec.train_count >= ds.len() {
        return Err(Error::Split {
            k: spec.train_count,
            total: ds.len(),
        });
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut rng_from_seed(spec.seed));
    let pick = |idx: &[usize]| idx.iter().map(|&i| ds.instances[i].clone()).collect();
    let train = ds.with_instances(pick(&order[..spec.train_count]));
    let test = ds.with_instances(pick(&order[spec.train_count..]));
    Ok((train, test))
}

/// Reassigns exactly `round(fraction * len)` labels (halves up) to a different
/// class drawn uniformly.
pub fn corrupt_labels(train: &BinaryDataset, spec: CorruptionSpec) -> Result<BinaryDataset> {
    let zero = Rational::from_integer(0);
    let one = Rational::from_integer(1);
    if spec.fraction < zero || spec.fraction > one {
        return Err(Error::Dataset(format!(
            "corruption fraction {} outside [0, 1]",
            spec.fraction
        )));
    }
    let count = round_half_up_mul(spec.fraction, train.len()) as usize;
    if count == 0 {
        return Ok(train.clone());
    }
    let classes = train.class_count;
    if classes < 2 {
        return Err(Error::Dataset("corruption needs at least 2 classes".into()));
    }
    let mut rng = rng_from_seed(spec.seed);
    let mut chosen = index::sample(&mut rng, train.len(), count).into_vec();
    chosen.sort_unstable();
    let mut instances = train.instances.clone();
    for i in chosen {
        let original = instances[i].label;
        let draw = rng.gen_range(0..classes - 1);
        instances[i].label = if draw >= original { draw + 1 } else { draw };
    }
    Ok(train.with_instances(instances))
}
