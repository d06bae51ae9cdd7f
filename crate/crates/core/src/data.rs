//! Dataset ingestion and generation: CSV loading, stratified splitting, the
//! Gaussian XOR generator with its Bayes oracle, a four-class synthetic
//! generator, and balanced subsampling.
//!
//! All generators run on ChaCha8 streams seeded from a caller-supplied `u64`,
//! so datasets are reproducible across platforms.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use serde_json::json;

use crate::encoding::standard_normal_quantile;
use crate::error::{Error, Result};

/// A labeled dataset with dense class indices in first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Generator parameters, when the set was synthesized.
    pub metadata: Option<serde_json::Value>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Row count per class, indexed by class.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }

    fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            metadata: self.metadata.clone(),
        }
    }
}

/// Load a CSV with a header row. Feature columns are parsed as floats;
/// labels map to dense indices in first-appearance order.
pub fn load_csv(path: &Path, feature_cols: &[&str], label_col: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Parse {
            line: 0,
            msg: format!("{}: {e}", path.display()),
        })?;
    let headers = reader.headers()?.clone();
    let col_index = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("column `{name}` not found in header"),
        })
    };
    let feature_idx: Vec<usize> = feature_cols.iter().map(|c| col_index(c)).collect::<Result<_>>()?;
    let label_idx = col_index(label_col)?;

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // 1-based, after the header
        let record = record?;
        let mut row = Vec::with_capacity(feature_idx.len());
        for &idx in &feature_idx {
            let cell = record.get(idx).ok_or_else(|| Error::Parse {
                line,
                msg: format!("missing column {idx}"),
            })?;
            row.push(cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("`{cell}` is not a number (column `{}`)", headers.get(idx).unwrap_or("?")),
            })?);
        }
        let label = record
            .get(label_idx)
            .ok_or_else(|| Error::Parse {
                line,
                msg: "missing label column".into(),
            })?
            .trim()
            .to_string();
        let class = match class_names.iter().position(|c| c == &label) {
            Some(k) => k,
            None => {
                class_names.push(label);
                class_names.len() - 1
            }
        };
        features.push(row);
        labels.push(class);
    }
    if features.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    Ok(Dataset {
        features,
        labels,
        class_names,
        metadata: None,
    })
}

/// Write a dataset to CSV with columns `x0..x{d-1}` and a final `label`
/// column holding class names.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    let dim = ds.dim();
    for i in 0..dim {
        out.push_str(&format!("x{i},"));
    }
    out.push_str("label\n");
    for (row, &y) in ds.features.iter().zip(&ds.labels) {
        for v in row {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&ds.class_names[y]);
        out.push('\n');
    }
    crate::write_atomic(path, out.as_bytes())
}

/// Split per class with a seeded shuffle, preserving class ratios.
pub fn stratified_split(ds: &Dataset, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::OutOfRange {
            what: "test fraction",
            range: "(0, 1)",
            got: test_fraction,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in 0..ds.num_classes() {
        let mut indices: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        indices.shuffle(&mut rng);
        let n_test = (indices.len() as f64 * test_fraction).round() as usize;
        if n_test == 0 || n_test == indices.len() {
            return Err(Error::ClassTooSmall(ds.class_names[class].clone(), indices.len()));
        }
        test_idx.extend_from_slice(&indices[..n_test]);
        train_idx.extend_from_slice(&indices[n_test..]);
    }
    Ok((ds.select(&train_idx), ds.select(&test_idx)))
}

/// Uniform per-class subsample of exactly `n / K` rows per class.
pub fn subsample_balanced(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset> {
    let k = ds.num_classes();
    if k == 0 || n == 0 {
        return Err(Error::Empty("dataset"));
    }
    if n % k != 0 {
        return Err(Error::UnbalancedSubsample { n, k });
    }
    let per_class = n / k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n);
    for class in 0..k {
        let mut indices: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == class).collect();
        if indices.len() < per_class {
            return Err(Error::ClassTooSmall(ds.class_names[class].clone(), indices.len()));
        }
        indices.shuffle(&mut rng);
        picked.extend_from_slice(&indices[..per_class]);
    }
    Ok(ds.select(&picked))
}

/// Distance from origin to each Gaussian XOR center.
pub const XOR_CENTER_DISTANCE: f64 = 1.0;

/// Noise level at which the Bayes classifier for the Gaussian XOR mixture
/// has accuracy exactly 29/30 ≈ 96.67%.
///
/// With centers at distance `a` and isotropic noise σ, rotating coordinates
/// by 45° shows the Bayes error is 2p(1-p) with p = Φ(a/(√2 σ)); solving for
/// error 1/30 gives σ ≈ 0.33336 at a = 1.
pub fn xor_sigma_star() -> f64 {
    let p = (1.0 + (1.0 - 2.0 / 30.0_f64).sqrt()) / 2.0;
    XOR_CENTER_DISTANCE / (std::f64::consts::SQRT_2 * standard_normal_quantile(p))
}

/// Four isotropic Gaussians centered at (±a, 0) with label 0 and (0, ±a)
/// with label 1, `per_center` samples each.
pub fn gen_gaussian_xor(per_center: usize, sigma: f64, a: f64, seed: u64) -> Result<Dataset> {
    if sigma <= 0.0 {
        return Err(Error::OutOfRange {
            what: "sigma",
            range: "(0, inf)",
            got: sigma,
        });
    }
    let centers = [
        ([a, 0.0], 0usize),
        ([-a, 0.0], 0),
        ([0.0, a], 1),
        ([0.0, -a], 1),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma > 0");
    let mut features = Vec::with_capacity(per_center * 4);
    let mut labels = Vec::with_capacity(per_center * 4);
    for (center, label) in centers {
        for _ in 0..per_center {
            features.push(vec![center[0] + noise.sample(&mut rng), center[1] + noise.sample(&mut rng)]);
            labels.push(label);
        }
    }
    Ok(Dataset {
        features,
        labels,
        class_names: vec!["0".into(), "1".into()],
        metadata: Some(json!({
            "generator": "gaussian-xor",
            "per_center": per_center,
            "sigma": sigma,
            "center_distance": a,
            "seed": seed,
        })),
    })
}

/// Posterior-argmax label for the Gaussian XOR mixture: class 0 iff
/// |x₀| ≥ |x₁| (the nearest-center rule; ties go to class 0).
pub fn bayes_xor(x: &[f64]) -> usize {
    if x[0].abs() >= x[1].abs() {
        0
    } else {
        1
    }
}

/// Four-class 2-D generator: four anisotropic Gaussian clusters with
/// seed-randomized means and covariances, plus 1% label flips. One tight
/// "core" cluster sits inside a broad "halo" cluster near the origin, and
/// two elongated "wing" clusters sit on opposite sides; separating the core
/// from its halo needs a closed boundary, so no linear one-vs-rest
/// classifier can do well. The drawn geometry is recorded in the metadata.
pub fn gen_synthetic4(n: usize, seed: u64) -> Result<Dataset> {
    if n < 4 {
        return Err(Error::Empty("synthetic dataset needs n >= 4"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rotation = rng.gen_range(0.0..std::f64::consts::PI);
    let flip_rate = 0.01;

    let mut means = Vec::new();
    let mut axes = Vec::new(); // (major σ, minor σ, orientation)

    // class 0: core
    let center = [rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)];
    means.push(center);
    let core_sigma = rng.gen_range(0.12..0.17);
    axes.push((core_sigma, core_sigma * rng.gen_range(0.8..1.0), rng.gen_range(0.0..std::f64::consts::PI)));

    // class 1: halo around the core
    means.push([
        center[0] + rng.gen_range(-0.05..0.05),
        center[1] + rng.gen_range(-0.05..0.05),
    ]);
    axes.push((
        rng.gen_range(0.9..1.05),
        rng.gen_range(0.72..0.85),
        rng.gen_range(0.0..std::f64::consts::PI),
    ));

    // classes 2 and 3: wings on opposite sides
    for side in [1.0, -1.0] {
        let angle = rotation + rng.gen_range(-0.2..0.2);
        let r = rng.gen_range(1.5..1.75);
        means.push([side * r * angle.cos(), side * r * angle.sin()]);
        let tilt = angle + std::f64::consts::FRAC_PI_2 + rng.gen_range(-0.3..0.3);
        axes.push((rng.gen_range(0.4..0.55), rng.gen_range(0.12..0.2), tilt));
    }

    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let base = n / 4;
    let remainder = n % 4;
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for k in 0..4 {
        let count = base + usize::from(k < remainder);
        let (major, minor, tilt) = axes[k];
        let (cos_t, sin_t) = (tilt.cos(), tilt.sin());
        for _ in 0..count {
            let u = major * unit.sample(&mut rng);
            let v = minor * unit.sample(&mut rng);
            features.push(vec![
                means[k][0] + u * cos_t - v * sin_t,
                means[k][1] + u * sin_t + v * cos_t,
            ]);
            labels.push(k);
        }
    }
    for y in labels.iter_mut() {
        if rng.gen::<f64>() < flip_rate {
            *y = rng.gen_range(0..4);
        }
    }
    Ok(Dataset {
        features,
        labels,
        class_names: (0..4).map(|k| k.to_string()).collect(),
        metadata: Some(json!({
            "generator": "synthetic4",
            "n": n,
            "seed": seed,
            "flip_rate": flip_rate,
            "means": means,
            "axes_major_minor_tilt": axes,
        })),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toy_dataset(per_class: usize, k: usize) -> Dataset {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for class in 0..k {
            for i in 0..per_class {
                features.push(vec![class as f64, i as f64]);
                labels.push(class);
            }
        }
        Dataset {
            features,
            labels,
            class_names: (0..k).map(|c| c.to_string()).collect(),
            metadata: None,
        }
    }

    #[test]
    fn stratified_split_sizes() {
        let ds = toy_dataset(50, 3); // Iris-shaped
        let (train, test) = stratified_split(&ds, 0.4, 7).unwrap();
        assert_eq!(train.len(), 90);
        assert_eq!(test.len(), 60);
        assert_eq!(train.class_counts(), vec![30, 30, 30]);
        assert_eq!(test.class_counts(), vec![20, 20, 20]);
    }

    #[test]
    fn stratified_split_partitions_the_multiset() {
        let ds = toy_dataset(10, 2);
        let (train, test) = stratified_split(&ds, 0.3, 3).unwrap();
        let mut all: Vec<Vec<f64>> = train.features.iter().chain(&test.features).cloned().collect();
        let mut orig = ds.features.clone();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        orig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(all, orig);
    }

    #[test]
    fn stratified_split_rejects_bad_fraction() {
        let ds = toy_dataset(10, 2);
        assert!(stratified_split(&ds, 0.0, 1).is_err());
        assert!(stratified_split(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn skin_style_split_sizes() {
        let ds = toy_dataset(500, 2);
        let (train, test) = stratified_split(&ds, 0.4, 11).unwrap();
        assert_eq!((train.len(), test.len()), (600, 400));
        assert_eq!(test.class_counts(), vec![200, 200]);
    }

    #[test]
    fn synthetic_split_sizes() {
        let ds = toy_dataset(1250, 4);
        let (train, test) = stratified_split(&ds, 0.4, 2).unwrap();
        assert_eq!((train.len(), test.len()), (3000, 2000));
    }

    #[test]
    fn subsample_balanced_counts() {
        let ds = toy_dataset(600, 2);
        let sub = subsample_balanced(&ds, 1000, 4).unwrap();
        assert_eq!(sub.len(), 1000);
        assert_eq!(sub.class_counts(), vec![500, 500]);
        let one_each = subsample_balanced(&ds, 2, 4).unwrap();
        assert_eq!(one_each.class_counts(), vec![1, 1]);
    }

    #[test]
    fn subsample_rejects_indivisible_or_starved() {
        let ds = toy_dataset(600, 2);
        assert!(matches!(
            subsample_balanced(&ds, 999, 4),
            Err(Error::UnbalancedSubsample { .. })
        ));
        assert!(matches!(
            subsample_balanced(&ds, 1300, 4),
            Err(Error::ClassTooSmall(..))
        ));
    }

    #[test]
    fn xor_generator_shape_and_priors() {
        let ds = gen_gaussian_xor(20, 0.3, 1.0, 5).unwrap();
        assert_eq!(ds.len(), 80);
        assert_eq!(ds.class_counts(), vec![40, 40]);
        let again = gen_gaussian_xor(20, 0.3, 1.0, 5).unwrap();
        assert_eq!(ds, again);
    }

    #[test]
    fn xor_with_vanishing_noise_is_separable_by_diagonals() {
        let ds = gen_gaussian_xor(25, 1e-9, 1.0, 2).unwrap();
        for (x, &y) in ds.features.iter().zip(&ds.labels) {
            assert_eq!(bayes_xor(x), y);
        }
    }

    #[test]
    fn bayes_xor_nearest_center() {
        assert_eq!(bayes_xor(&[0.9, 0.1]), 0);
        assert_eq!(bayes_xor(&[0.1, -0.9]), 1);
        assert_eq!(bayes_xor(&[0.5, 0.5]), 0); // tie rule
    }

    #[test]
    fn sigma_star_value() {
        // The one-sided tail approximation 2Φ(−a/(√2σ)) = 1/30 gives ≈ 0.332;
        // the exact two-sided calibration lands a hair higher.
        assert_abs_diff_eq!(xor_sigma_star(), 0.3334, epsilon = 2e-3);
    }

    #[test]
    fn bayes_accuracy_at_sigma_star_monte_carlo() {
        // 10^7-point Monte-Carlo estimate of the Bayes accuracy.
        let sigma = xor_sigma_star();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let noise = Normal::new(0.0, sigma).unwrap();
        let centers = [([1.0, 0.0], 0usize), ([-1.0, 0.0], 0), ([0.0, 1.0], 1), ([0.0, -1.0], 1)];
        let n = 10_000_000usize;
        let mut correct = 0usize;
        for i in 0..n {
            let (c, y) = centers[i % 4];
            let x = [c[0] + noise.sample(&mut rng), c[1] + noise.sample(&mut rng)];
            if bayes_xor(&x) == y {
                correct += 1;
            }
        }
        let acc = correct as f64 / n as f64;
        assert!((acc - 29.0 / 30.0).abs() < 0.001, "Bayes accuracy {acc}");
    }

    #[test]
    fn synthetic4_shape_and_determinism() {
        let ds = gen_synthetic4(5000, 0).unwrap();
        assert_eq!(ds.len(), 5000);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.num_classes(), 4);
        // ~1250 per class before label flips; flips move at most a few dozen.
        for c in ds.class_counts() {
            assert!((c as i64 - 1250).abs() < 120, "class count {c}");
        }
        assert_eq!(gen_synthetic4(5000, 0).unwrap(), ds);
        assert!(ds.metadata.is_some());
    }

    #[test]
    fn csv_round_trip(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ds.csv");
        let ds = gen_gaussian_xor(5, 0.2, 1.0, 9).unwrap();
        write_csv(&ds, &path).unwrap();
        let back = load_csv(&path, &["x0", "x1"], "label").unwrap();
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.class_names, ds.class_names);
        for (a, b) in back.features.iter().zip(&ds.features) {
            assert_abs_diff_eq!(a[0], b[0], epsilon = 1e-12);
            assert_abs_diff_eq!(a[1], b[1], epsilon = 1e-12);
        }
    }

    #[test]
    fn load_csv_errors_name_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x0,x1,label\n1.0,2.0,a\n1.0,oops,b\n").unwrap();
        let err = load_csv(&path, &["x0", "x1"], "label").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        std::fs::write(&path, "x0,x1,label\n").unwrap();
        assert!(matches!(load_csv(&path, &["x0", "x1"], "label"), Err(Error::Empty(_))));

        std::fs::write(&path, "x0,x1,label\n1,2,a\n").unwrap();
        assert!(load_csv(&path, &["nope"], "label").is_err());
    }

    #[test]
    fn iris_fixture_loads() {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data/iris.csv");
        let ds = load_csv(
            &path,
            &["sepal_length", "sepal_width", "petal_length", "petal_width"],
            "label",
        )
        .unwrap();
        assert_eq!(ds.len(), 150);
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.num_classes(), 3);
        assert_eq!(ds.class_counts(), vec![50, 50, 50]);
    }
}
