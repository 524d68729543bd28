//! Datasets, node shards and the label-flipping transform.

mod idx;
mod shard;

pub use idx::{load_idx, read_idx_images, read_idx_labels, IDX_IMAGE_MAGIC, IDX_LABEL_MAGIC};
pub use shard::{flip_labels, shard_iid, shard_noniid, ShardAssignment};

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::seed;

/// Pixel count of a 28×28 image.
pub const IMAGE_DIM: usize = 784;

/// A labeled image corpus stored row-major, one image per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    classes: usize,
    images: Vec<f64>,
    labels: Vec<u8>,
}

impl Dataset {
    pub fn new(dim: usize, classes: usize, images: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        if dim == 0 || images.len() != dim * labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} pixel values do not form {} images of dimension {dim}",
                images.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| usize::from(l) >= classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            dim,
            classes,
            images,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn image(&self, index: usize) -> &[f64] {
        &self.images[index * self.dim..(index + 1) * self.dim]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// The first `n` samples (or all, if fewer exist).
    pub fn take(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            dim: self.dim,
            classes: self.classes,
            images: self.images[..n * self.dim].to_vec(),
            labels: self.labels[..n].to_vec(),
        }
    }

    /// Samples `..n` and `n..`.
    pub fn split_at(&self, n: usize) -> (Dataset, Dataset) {
        let n = n.min(self.len());
        let tail = Dataset {
            dim: self.dim,
            classes: self.classes,
            images: self.images[n * self.dim..].to_vec(),
            labels: self.labels[n..].to_vec(),
        };
        (self.take(n), tail)
    }

    /// A shard holding every sample with its true label.
    pub fn full_shard(&self) -> Shard {
        Shard {
            indices: (0..self.len()).collect(),
            labels: self.labels.clone(),
        }
    }

    /// Per-class sample counts.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.classes];
        for &l in &self.labels {
            h[usize::from(l)] += 1;
        }
        h
    }
}

/// The samples a node trains on: indices into a [`Dataset`] plus the labels
/// the node holds for them (which differ from the dataset's under LF).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shard {
    pub indices: Vec<usize>,
    pub labels: Vec<u8>,
}

impl Shard {
    pub fn from_indices(dataset: &Dataset, indices: Vec<usize>) -> Self {
        let labels = indices.iter().map(|&i| dataset.labels[i]).collect();
        Self { indices, labels }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Gaussian class blobs clamped to `[0, 1]`.
///
/// Each class gets a random prototype image; samples are the prototype plus
/// isotropic noise. Sample `i` has label `i mod classes`, so classes are
/// balanced to within one sample.
pub fn gen_synthetic(n: usize, classes: usize, seed: u64) -> Result<Dataset> {
    gen_synthetic_with_dim(n, classes, IMAGE_DIM, seed)
}

pub fn gen_synthetic_with_dim(n: usize, classes: usize, dim: usize, seed: u64) -> Result<Dataset> {
    if classes == 0 || classes > usize::from(u8::MAX) + 1 {
        return Err(Error::InvalidArgument(format!("unsupported class count {classes}")));
    }
    if n < classes {
        return Err(Error::InvalidArgument(format!(
            "need at least one sample per class: n = {n}, classes = {classes}"
        )));
    }
    let mut rng = seed::rng(seed::derive(seed, seed::Stream::Synthetic, &[]));
    let prototypes: Vec<f64> = (0..classes * dim).map(|_| rng.random::<f64>()).collect();
    let noise = Normal::new(0.0, 0.35).expect("valid std dev");
    let mut images = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % classes;
        let proto = &prototypes[class * dim..(class + 1) * dim];
        images.extend(proto.iter().map(|p| (p + noise.sample(&mut rng)).clamp(0.0, 1.0)));
        labels.push(class as u8);
    }
    Dataset::new(dim, classes, images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_is_balanced_and_deterministic() {
        let d = gen_synthetic(100, 10, 5).unwrap();
        assert_eq!(d.label_histogram(), vec![10; 10]);
        assert_eq!(d, gen_synthetic(100, 10, 5).unwrap());
        assert_ne!(d, gen_synthetic(100, 10, 6).unwrap());
        assert!(d.images.iter().all(|&p| (0.0..=1.0).contains(&p)));

        let odd = gen_synthetic(23, 10, 1).unwrap();
        let h = odd.label_histogram();
        assert!(h.iter().max().unwrap() - h.iter().min().unwrap() <= 1);
    }

    #[test]
    fn synthetic_rejects_too_few_samples() {
        assert!(gen_synthetic(5, 10, 0).is_err());
    }

    // Nearest-class-mean is a linear classifier; on well separated blobs it
    // should be near perfect on held-out samples.
    #[test]
    fn synthetic_blobs_are_linearly_separable() {
        let all = gen_synthetic(1200, 10, 11).unwrap();
        let dim = all.dim();
        let mut means = vec![0.0; 10 * dim];
        let mut counts = [0usize; 10];
        for i in 0..1000 {
            let c = usize::from(all.labels()[i]);
            counts[c] += 1;
            for (m, p) in means[c * dim..(c + 1) * dim].iter_mut().zip(all.image(i)) {
                *m += p;
            }
        }
        for c in 0..10 {
            for m in &mut means[c * dim..(c + 1) * dim] {
                *m /= counts[c] as f64;
            }
        }
        let mut correct = 0;
        for i in 1000..1200 {
            let img = all.image(i);
            let best = (0..10)
                .map(|c| {
                    let d: f64 = means[c * dim..(c + 1) * dim]
                        .iter()
                        .zip(img)
                        .map(|(m, p)| (m - p) * (m - p))
                        .sum();
                    (c, d)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0;
            if best == usize::from(all.labels()[i]) {
                correct += 1;
            }
        }
        assert!(correct as f64 / 200.0 > 0.9, "accuracy {}", correct as f64 / 200.0);
    }

    #[test]
    fn dataset_validates_shapes() {
        assert!(Dataset::new(2, 2, vec![0.0; 3], vec![0, 1]).is_err());
        assert!(Dataset::new(1, 2, vec![0.0; 2], vec![0, 2]).is_err());
        let d = Dataset::new(1, 3, vec![0.1, 0.2, 0.3], vec![2, 1, 0]).unwrap();
        assert_eq!(d.take(2).labels(), &[2, 1]);
        assert_eq!(d.full_shard().labels, vec![2, 1, 0]);
    }
}
