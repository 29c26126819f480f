//! IDX decoding, binary classification tasks and batch scheduling.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{check_binary, check_len, check_unit_range, Error, Result};
use crate::linalg::dot;
use crate::rng::{seeded, StdRng};

pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdxError {
    #[error("idx header truncated: {0} bytes")]
    TruncatedHeader(usize),
    #[error("unsupported element type or rank: magic {0:#010x} (expected 0x00000801 or 0x00000803)")]
    UnsupportedMagic(u32),
    #[error("idx dimensions overflow")]
    DimensionOverflow,
    #[error("idx payload truncated: expected {expected} bytes, found {found}")]
    TruncatedPayload { expected: usize, found: usize },
    #[error("idx payload has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("expected an idx {expected} file")]
    WrongKind { expected: &'static str },
}

/// A decoded unsigned-byte IDX file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxFile {
    pub magic: u32,
    pub dims: Vec<u32>,
    pub payload: Vec<u8>,
}

impl IdxFile {
    pub fn labels(labels: Vec<u8>) -> Self {
        Self {
            magic: IDX_LABELS_MAGIC,
            dims: vec![labels.len() as u32],
            payload: labels,
        }
    }

    pub fn images(count: u32, rows: u32, cols: u32, payload: Vec<u8>) -> Result<Self, IdxError> {
        let f = Self {
            magic: IDX_IMAGES_MAGIC,
            dims: vec![count, rows, cols],
            payload,
        };
        let expected = f.element_count()?;
        if expected != f.payload.len() {
            return Err(IdxError::TruncatedPayload {
                expected,
                found: f.payload.len(),
            });
        }
        Ok(f)
    }

    pub fn element_count(&self) -> Result<usize, IdxError> {
        self.dims.iter().try_fold(1usize, |acc, &d| {
            acc.checked_mul(d as usize).ok_or(IdxError::DimensionOverflow)
        })
    }

    pub fn is_images(&self) -> bool {
        self.magic == IDX_IMAGES_MAGIC
    }

    pub fn is_labels(&self) -> bool {
        self.magic == IDX_LABELS_MAGIC
    }

    /// Re-encodes the file: big-endian magic, big-endian sizes, raw payload.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.payload.len());
        out.extend_from_slice(&self.magic.to_be_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }
}

pub fn parse_idx(bytes: &[u8]) -> Result<IdxFile, IdxError> {
    if bytes.len() < 4 {
        return Err(IdxError::TruncatedHeader(bytes.len()));
    }
    let magic = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    let rank = match magic {
        IDX_LABELS_MAGIC => 1,
        IDX_IMAGES_MAGIC => 3,
        other => return Err(IdxError::UnsupportedMagic(other)),
    };
    let header_len = 4 + 4 * rank;
    if bytes.len() < header_len {
        return Err(IdxError::TruncatedHeader(bytes.len()));
    }
    let dims: Vec<u32> = bytes[4..header_len]
        .chunks_exact(4)
        .map(|c| u32::from_be_bytes(c.try_into().unwrap()))
        .collect();
    let mut file = IdxFile {
        magic,
        dims,
        payload: Vec::new(),
    };
    let expected = file.element_count()?;
    let body = &bytes[header_len..];
    if body.len() < expected {
        return Err(IdxError::TruncatedPayload {
            expected,
            found: body.len(),
        });
    }
    if body.len() > expected {
        return Err(IdxError::TrailingBytes(body.len() - expected));
    }
    file.payload = body.to_vec();
    Ok(file)
}

/// Images paired with their class labels, pixels kept as raw bytes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledImages {
    pub pixels: Vec<u8>,
    pub image_len: usize,
    pub labels: Vec<u8>,
}

impl LabeledImages {
    pub fn from_idx(images: &IdxFile, labels: &IdxFile) -> Result<Self, IdxError> {
        if !images.is_images() {
            return Err(IdxError::WrongKind { expected: "images" });
        }
        if !labels.is_labels() {
            return Err(IdxError::WrongKind { expected: "labels" });
        }
        let count = images.dims[0] as usize;
        if labels.payload.len() != count {
            return Err(IdxError::TruncatedPayload {
                expected: count,
                found: labels.payload.len(),
            });
        }
        Ok(Self {
            pixels: images.payload.clone(),
            image_len: (images.dims[1] * images.dims[2]) as usize,
            labels: labels.payload.clone(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image(&self, i: usize) -> &[u8] {
        &self.pixels[i * self.image_len..(i + 1) * self.image_len]
    }

    /// Pixel bytes scaled to `[0, 1]` by division by 255.
    pub fn normalized(&self, i: usize) -> Vec<f64> {
        self.image(i).iter().map(|&p| p as f64 / 255.0).collect()
    }

    pub fn indices_of(&self, class: u8) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == class).collect()
    }
}

/// One training pair borrowed from a [`Dataset`].
#[derive(Clone, Copy, Debug)]
pub struct Example<'a> {
    pub input: &'a [f64],
    pub target: &'a [f64],
}

/// Real-valued inputs in `[0, 1]` with binary target vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<Vec<f64>>,
    /// Original class identifiers mapped to label 0 and label 1.
    pub classes: Option<(u8, u8)>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        check_len("dataset targets", inputs.len(), targets.len())?;
        if let (Some(x0), Some(y0)) = (inputs.first(), targets.first()) {
            for (x, y) in inputs.iter().zip(&targets) {
                check_len("dataset input width", x0.len(), x.len())?;
                check_len("dataset target width", y0.len(), y.len())?;
                check_unit_range("dataset input", x)?;
                check_binary("dataset target", y)?;
            }
        }
        Ok(Self {
            inputs,
            targets,
            classes: None,
        })
    }

    /// Binary task with a single output unit.
    pub fn from_labels(inputs: Vec<Vec<f64>>, labels: &[u8]) -> Result<Self> {
        let targets = labels.iter().map(|&l| vec![l as f64]).collect();
        Self::new(inputs, targets)
    }

    pub fn empty() -> Self {
        Self {
            inputs: Vec::new(),
            targets: Vec::new(),
            classes: None,
        }
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_len(&self) -> Option<usize> {
        self.inputs.first().map(Vec::len)
    }

    pub fn output_len(&self) -> Option<usize> {
        self.targets.first().map(Vec::len)
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i]
    }

    pub fn example(&self, i: usize) -> Example<'_> {
        Example {
            input: &self.inputs[i],
            target: &self.targets[i],
        }
    }

    pub fn examples(&self) -> Vec<Example<'_>> {
        (0..self.len()).map(|i| self.example(i)).collect()
    }

    pub fn batch(&self, indices: &[usize]) -> Vec<Example<'_>> {
        indices.iter().map(|&i| self.example(i)).collect()
    }

    /// Label of a single-output example (`target[0]`).
    pub fn label(&self, i: usize) -> u8 {
        self.targets[i][0] as u8
    }

    /// Counts of label 0 and label 1 (first output unit).
    pub fn label_counts(&self) -> (usize, usize) {
        let ones = (0..self.len()).filter(|&i| self.label(i) == 1).count();
        (self.len() - ones, ones)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i].clone()).collect(),
            classes: self.classes,
        }
    }
}

/// Builds a balanced two-class training set and the full two-class test set.
///
/// The smaller class identifier maps to label 0. `train_count / 2` images of
/// each class are drawn without replacement using `seed`.
pub fn make_binary_task(
    train: &LabeledImages,
    test: &LabeledImages,
    class_a: u8,
    class_b: u8,
    train_count: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if class_a == class_b {
        return Err(Error::InvalidConfig("class pair must name two distinct classes".into()));
    }
    if train_count == 0 || !train_count.is_multiple_of(2) {
        return Err(Error::InvalidConfig(alloc::format!(
            "train_count must be positive and even, got {train_count}"
        )));
    }
    let (low, high) = (class_a.min(class_b), class_a.max(class_b));
    let per_class = train_count / 2;
    let mut rng = seeded(seed);

    let mut chosen = Vec::with_capacity(train_count);
    for (label, class) in [(0u8, low), (1u8, high)] {
        let mut idx = train.indices_of(class);
        if idx.len() < per_class {
            return Err(Error::InsufficientClass {
                class,
                needed: per_class,
                found: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        chosen.extend(idx[..per_class].iter().map(|&i| (i, label)));
    }
    chosen.shuffle(&mut rng);

    let build = |source: &LabeledImages, picks: &[(usize, u8)]| -> Result<Dataset> {
        let inputs = picks.iter().map(|&(i, _)| source.normalized(i)).collect();
        let labels: Vec<u8> = picks.iter().map(|&(_, l)| l).collect();
        let mut ds = Dataset::from_labels(inputs, &labels)?;
        ds.classes = Some((low, high));
        Ok(ds)
    };
    let train_set = build(train, &chosen)?;

    let test_picks: Vec<(usize, u8)> = (0..test.len())
        .filter_map(|i| match test.labels[i] {
            l if l == low => Some((i, 0)),
            l if l == high => Some((i, 1)),
            _ => None,
        })
        .collect();
    for (class, label) in [(low, 0u8), (high, 1u8)] {
        if !test_picks.iter().any(|&(_, l)| l == label) {
            return Err(Error::InsufficientClass {
                class,
                needed: 1,
                found: 0,
            });
        }
    }
    let test_set = build(test, &test_picks)?;
    Ok((train_set, test_set))
}

/// Linearly separable points in `[0, 1]^n_inputs` labelled by a seeded
/// hyperplane through the cube's centre. Points closer than a small margin
/// to the plane are redrawn.
pub fn synthetic_task(n_inputs: usize, n_samples: usize, seed: u64) -> Result<Dataset> {
    if n_inputs == 0 {
        return Err(Error::InvalidConfig("synthetic task needs at least one input".into()));
    }
    let mut rng = seeded(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let normal_vec: Vec<f64> = (0..n_inputs).map(|_| normal.sample(&mut rng)).collect();
    let norm = crate::float::sqrt(dot(&normal_vec, &normal_vec)).max(1e-12);
    let margin = 0.05;

    let mut inputs = Vec::with_capacity(n_samples);
    let mut labels = Vec::with_capacity(n_samples);
    while inputs.len() < n_samples {
        let x: Vec<f64> = (0..n_inputs).map(|_| rng.random::<f64>()).collect();
        let side = x.iter().zip(&normal_vec).map(|(xi, w)| (xi - 0.5) * w).sum::<f64>() / norm;
        if crate::float::abs(side) < margin {
            continue;
        }
        labels.push(u8::from(side > 0.0));
        inputs.push(x);
    }
    Dataset::from_labels(inputs, &labels)
}

/// Yields index batches over a dataset, reshuffling at every epoch boundary.
///
/// Two schedules built from the same `(len, batch_size, seed)` produce the
/// same batch sequence, which is what lockstep training relies on.
#[derive(Clone, Debug)]
pub struct BatchSchedule {
    order: Vec<usize>,
    position: usize,
    batch_size: usize,
    rng: StdRng,
}

impl BatchSchedule {
    pub fn new(len: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if len == 0 {
            return Err(Error::EmptyDataset);
        }
        if batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        let mut rng = seeded(seed);
        let mut order: Vec<usize> = (0..len).collect();
        order.shuffle(&mut rng);
        Ok(Self {
            order,
            position: 0,
            batch_size: batch_size.min(len),
            rng,
        })
    }

    pub fn next_batch(&mut self) -> Vec<usize> {
        if self.position + self.batch_size > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.position = 0;
        }
        let batch = self.order[self.position..self.position + self.batch_size].to_vec();
        self.position += self.batch_size;
        batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_split(per_class: usize, classes: &[u8]) -> LabeledImages {
        let mut pixels = Vec::new();
        let mut labels = Vec::new();
        for &c in classes {
            for i in 0..per_class {
                pixels.extend_from_slice(&[c, (i % 256) as u8, 255, 0]);
                labels.push(c);
            }
        }
        LabeledImages {
            pixels,
            image_len: 4,
            labels,
        }
    }

    #[test]
    fn parses_hand_built_label_file() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 2, 7, 3];
        let f = parse_idx(&bytes).unwrap();
        assert!(f.is_labels());
        assert_eq!(f.dims, [2]);
        assert_eq!(f.payload, [7, 3]);
        assert_eq!(f.to_bytes(), bytes);
    }

    #[test]
    fn rejects_unsupported_magic() {
        let err = parse_idx(&[0, 0, 8, 5, 0, 0, 0, 0]).unwrap_err();
        assert_eq!(err, IdxError::UnsupportedMagic(0x0805));
        assert!(alloc::format!("{err}").contains("unsupported element type"));
    }

    #[test]
    fn rejects_truncation_and_trailing_bytes() {
        assert!(matches!(parse_idx(&[0, 0, 8]), Err(IdxError::TruncatedHeader(3))));
        assert!(matches!(
            parse_idx(&[0, 0, 8, 1, 0, 0, 0, 3, 1, 2]),
            Err(IdxError::TruncatedPayload { expected: 3, found: 2 })
        ));
        assert!(matches!(
            parse_idx(&[0, 0, 8, 1, 0, 0, 0, 1, 1, 2]),
            Err(IdxError::TrailingBytes(1))
        ));
    }

    #[test]
    fn rejects_dimension_overflow() {
        let mut bytes = vec![0, 0, 8, 3];
        for _ in 0..3 {
            bytes.extend_from_slice(&u32::MAX.to_be_bytes());
        }
        if usize::BITS == 64 {
            // 2^96 elements cannot be addressed.
            assert_eq!(parse_idx(&bytes), Err(IdxError::DimensionOverflow));
        }
    }

    #[test]
    fn binary_task_is_balanced_seeded_and_normalized() {
        let train = toy_split(15, &[1, 3, 7]);
        let test = toy_split(4, &[3, 7, 9]);
        let (tr, te) = make_binary_task(&train, &test, 7, 3, 20, 11).unwrap();
        assert_eq!(tr.len(), 20);
        assert_eq!(tr.label_counts(), (10, 10));
        assert_eq!(tr.classes, Some((3, 7)));
        assert_eq!(te.len(), 8);
        for i in 0..tr.len() {
            let x = tr.input(i);
            assert_eq!(x[2], 1.0);
            assert_eq!(x[3], 0.0);
            // class 3 carries label 0, class 7 label 1
            let class = (x[0] * 255.0).round() as u8;
            assert_eq!(tr.label(i), u8::from(class == 7));
        }
        let (again, _) = make_binary_task(&train, &test, 7, 3, 20, 11).unwrap();
        assert_eq!(tr, again);
        let (other, _) = make_binary_task(&train, &test, 7, 3, 20, 12).unwrap();
        assert_ne!(tr, other);
    }

    #[test]
    fn binary_task_errors() {
        let train = toy_split(5, &[0, 1]);
        assert!(matches!(
            make_binary_task(&train, &train, 0, 1, 12, 0),
            Err(Error::InsufficientClass {
                needed: 6,
                found: 5,
                ..
            })
        ));
        assert!(make_binary_task(&train, &train, 0, 1, 3, 0).is_err());
        assert!(make_binary_task(&train, &train, 1, 1, 4, 0).is_err());
    }

    #[test]
    fn synthetic_task_is_deterministic() {
        assert!(synthetic_task(3, 0, 1).unwrap().is_empty());
        assert_eq!(synthetic_task(2, 40, 5).unwrap(), synthetic_task(2, 40, 5).unwrap());
        assert!(synthetic_task(0, 4, 1).is_err());
    }

    #[test]
    fn batch_schedule_covers_each_epoch() {
        let mut a = BatchSchedule::new(20, 5, 3).unwrap();
        let mut b = BatchSchedule::new(20, 5, 3).unwrap();
        let mut seen: Vec<usize> = (0..4).flat_map(|_| a.next_batch()).collect();
        let replay: Vec<usize> = (0..4).flat_map(|_| b.next_batch()).collect();
        assert_eq!(seen, replay);
        seen.sort_unstable();
        assert_eq!(seen, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn dataset_validates_ranges() {
        assert!(Dataset::from_labels(vec![vec![1.5]], &[0]).is_err());
        assert!(Dataset::new(vec![vec![0.5]], vec![vec![0.5]]).is_err());
    }
}
