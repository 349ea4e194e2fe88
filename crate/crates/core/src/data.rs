//! Sparse datasets, the LIBSVM text format, and the ridge regression
//! objective used as the workload of the simulated network.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::Allocation;

/// One sample's features as parallel index/value arrays. Indices are
/// 0-based and strictly increasing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseRow {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| v * w[i as usize])
            .sum()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub rows: Vec<SparseRow>,
    pub labels: Vec<f64>,
    pub dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Subset of rows in the given order, keeping `dim`.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            dim: self.dim,
        }
    }

    /// `X^T X` (unnormalized).
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.dim, self.dim);
        for row in &self.rows {
            for (a, (&i, &vi)) in row.indices.iter().zip(&row.values).enumerate() {
                for (&j, &vj) in row.indices[a..].iter().zip(&row.values[a..]) {
                    g[(i as usize, j as usize)] += vi * vj;
                }
            }
        }
        g.fill_lower_triangle_with_upper_triangle();
        g
    }

    /// `X^T y` (unnormalized).
    pub fn xty(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim);
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            for (&i, &x) in row.indices.iter().zip(&row.values) {
                v[i as usize] += x * y;
            }
        }
        v
    }

    /// `X^T (X w - y)` (unnormalized) and `||X w - y||^2`.
    fn residual_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.dim];
        let mut sq = 0.0;
        for (row, &y) in self.rows.iter().zip(&self.labels) {
            let r = row.dot(w) - y;
            sq += r * r;
            for (&i, &x) in row.indices.iter().zip(&row.values) {
                grad[i as usize] += x * r;
            }
        }
        (sq, grad)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads LIBSVM text: `label idx:value idx:value ...` per line, 1-based
/// strictly increasing indices, `#` comments, blank lines ignored.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut data = Dataset::default();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(parse_err(lineno, "label is not finite"));
        }
        let mut row = SparseRow::default();
        let mut last = 0u64;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected index:value, got `{tok}`")))?;
            let idx: u64 = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid feature index `{idx}`")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid feature value `{val}`")))?;
            if idx < 1 {
                return Err(parse_err(lineno, "feature indices start at 1"));
            }
            if idx <= last {
                return Err(parse_err(
                    lineno,
                    format!("feature index {idx} not greater than {last}"),
                ));
            }
            if !val.is_finite() {
                return Err(parse_err(lineno, format!("feature {idx} is not finite")));
            }
            let zero_based =
                u32::try_from(idx - 1).map_err(|_| parse_err(lineno, format!("feature index {idx} too large")))?;
            last = idx;
            row.indices.push(zero_based);
            row.values.push(val);
        }
        data.dim = data.dim.max(last as usize);
        data.rows.push(row);
        data.labels.push(label);
    }
    Ok(data)
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

/// Writes LIBSVM text. Numbers use the shortest representation that
/// parses back to the same `f64`.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> Result<()> {
    for (row, label) in data.rows.iter().zip(&data.labels) {
        write!(out, "{label}")?;
        for (&i, &v) in row.indices.iter().zip(&row.values) {
            write!(out, " {}:{v}", i + 1)?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// `y = X w_true + noise` with standard normal features and weights.
pub fn gen_synthetic(n_samples: usize, dim: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if n_samples == 0 || dim == 0 {
        return Err(Error::Domain("synthetic data needs n_samples >= 1 and dim >= 1".into()));
    }
    if !(noise_sd >= 0.0) {
        return Err(Error::Domain(format!("noise_sd must be nonnegative, got {noise_sd}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w_true: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut data = Dataset {
        dim,
        ..Dataset::default()
    };
    for _ in 0..n_samples {
        let dense: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let noise: f64 = rng.sample(StandardNormal);
        let y = dense.iter().zip(&w_true).map(|(x, w)| x * w).sum::<f64>() + noise_sd * noise;
        let mut row = SparseRow::default();
        for (i, v) in dense.into_iter().enumerate() {
            if v != 0.0 {
                row.indices.push(i as u32);
                row.values.push(v);
            }
        }
        data.rows.push(row);
        data.labels.push(y);
    }
    Ok(data)
}

/// Disjoint per-device datasets and the shuffle that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ShardSet {
    pub shards: Vec<Dataset>,
    pub permutation: Vec<usize>,
}

/// Shuffles with `seed`, then cuts contiguous blocks of the allocated
/// sizes. The server (device 1) receives the first block.
pub fn shard(data: &Dataset, alloc: &Allocation, seed: u64) -> Result<ShardSet> {
    if alloc.total() != data.len() {
        return Err(Error::Domain(format!(
            "allocation covers {} samples but the dataset has {}",
            alloc.total(),
            data.len()
        )));
    }
    let mut permutation: Vec<usize> = (0..data.len()).collect();
    permutation.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut shards = Vec::with_capacity(alloc.n_devices());
    let mut start = 0;
    for &b in alloc.sizes() {
        shards.push(data.select(&permutation[start..start + b]));
        start += b;
    }
    Ok(ShardSet { shards, permutation })
}

/// `(1/2b) ||X w - y||^2 + (lambda/2) ||w||^2` over the `b` rows of `data`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeProblem {
    pub data: Dataset,
    pub lambda: f64,
}

impl RidgeProblem {
    pub fn new(data: Dataset, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("lambda must be nonnegative, got {lambda}")));
        }
        Ok(RidgeProblem { data, lambda })
    }

    pub fn dim(&self) -> usize {
        self.data.dim
    }

    /// Hessian `X^T X / b + lambda I`.
    pub fn hessian(&self) -> DMatrix<f64> {
        let b = self.data.len().max(1) as f64;
        self.data.gram() / b + DMatrix::identity(self.dim(), self.dim()) * self.lambda
    }

    /// Exact minimizer via a dense solve.
    pub fn solve_direct(&self) -> Result<DVector<f64>> {
        let b = self.data.len().max(1) as f64;
        let rhs = self.data.xty() / b;
        self.hessian()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::Singular("ridge Hessian is not positive definite".into()))
    }
}

/// Objective value and gradient: `(1/b) X^T (X w - y) + lambda w`.
pub fn ridge_value_grad(problem: &RidgeProblem, w: &[f64]) -> Result<(f64, Vec<f64>)> {
    if w.len() != problem.dim() {
        return Err(Error::Dimension {
            expected: problem.dim(),
            got: w.len(),
        });
    }
    let b = problem.data.len().max(1) as f64;
    let (sq, mut grad) = problem.data.residual_grad(w);
    let norm2: f64 = w.iter().map(|x| x * x).sum();
    for (g, &x) in grad.iter_mut().zip(w) {
        *g = *g / b + problem.lambda * x;
    }
    Ok((sq / (2.0 * b) + 0.5 * problem.lambda * norm2, grad))
}

/// How the strong-convexity constant is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MuSource {
    /// `mu = lambda`, a valid lower bound for any data.
    #[default]
    Regularizer,
    /// `mu = lambda_min(X^T X / N) + lambda`.
    MinEigen,
}

const POWER_TOL: f64 = 1e-8;
const POWER_MAX_ITERS: usize = 10_000;

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
pub fn power_iteration(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> Result<f64> {
    if dim == 0 {
        return Ok(0.0);
    }
    // fixed, non-symmetric start so runs are reproducible
    let mut v: Vec<f64> = (0..dim).map(|i| 1.0 + 0.01 * i as f64).collect();
    normalize(&mut v);
    let mut lambda = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITERS {
        let av = apply(&v);
        let next: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
        residual = av
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - next * b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        let converged = (next - lambda).abs() <= POWER_TOL * next.abs() || residual <= POWER_TOL * next.abs();
        lambda = next;
        if converged {
            return Ok(lambda);
        }
        v = av.into_iter().map(|x| x / norm).collect();
    }
    Err(Error::NoConvergence { residual })
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn gram_apply(data: &Dataset, v: &[f64]) -> Vec<f64> {
    let n = data.len().max(1) as f64;
    let mut out = vec![0.0; data.dim];
    for row in &data.rows {
        let xv = row.dot(v);
        for (&i, &x) in row.indices.iter().zip(&row.values) {
            out[i as usize] += x * xv / n;
        }
    }
    out
}

/// `(L, mu)` with `L = lambda_max(X^T X / N) + lambda` and `mu = lambda`.
pub fn spectral_constants(problem: &RidgeProblem) -> Result<(f64, f64)> {
    spectral_constants_with(problem, MuSource::Regularizer)
}

pub fn spectral_constants_with(problem: &RidgeProblem, mu_source: MuSource) -> Result<(f64, f64)> {
    if problem.data.is_empty() {
        return Err(Error::Domain("dataset is empty".into()));
    }
    let data = &problem.data;
    let top = power_iteration(data.dim, |v| gram_apply(data, v))?;
    let mu = match mu_source {
        MuSource::Regularizer => problem.lambda,
        MuSource::MinEigen => {
            let shifted = power_iteration(data.dim, |v| {
                let g = gram_apply(data, v);
                v.iter().zip(g).map(|(x, gx)| top * x - gx).collect()
            })?;
            (top - shifted).max(0.0) + problem.lambda
        }
    };
    Ok((top + problem.lambda, mu))
}

/// Spectral norm of `X^T X / N - X_1^T X_1 / b_1`: the Hessian dissimilarity
/// between the full ridge objective and a shard's.
pub fn hessian_similarity(full: &Dataset, part: &Dataset) -> f64 {
    let n = full.len().max(1) as f64;
    let b = part.len().max(1) as f64;
    let diff = full.gram() / n - part.gram() / b;
    SymmetricEigen::new(diff)
        .eigenvalues
        .iter()
        .fold(0.0, |m, e| m.max(e.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn identity_problem(lambda: f64) -> RidgeProblem {
        let data = parse_libsvm_str("1 1:1\n1 2:1\n").unwrap();
        RidgeProblem::new(data, lambda).unwrap()
    }

    #[test]
    fn parse_examples() {
        let d = parse_libsvm_str("1 1:0.5 3:2.0").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.labels, vec![1.0]);
        assert_eq!(d.rows[0].nnz(), 2);
        assert_eq!(d.dim, 3);
        assert_eq!(d.rows[0].indices, vec![0, 2]);

        let d = parse_libsvm_str("+1 2:1\n-1 1:3").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.labels, vec![1.0, -1.0]);
        assert_eq!(d.dim, 2);
    }

    #[test]
    fn parse_skips_blank_and_comment_lines() {
        let d = parse_libsvm_str("# header\n\n1 1:1 # trailing\n   \n0 2:2\n").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.labels, vec![1.0, 0.0]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("1 a:b", 1),
            ("1 1:1\nx 1:1", 2),
            ("1 1:1\n\n1 2:1 2:3", 3),
            ("1 3:1 2:1", 1),
            ("1 0:1", 1),
            ("1 1", 1),
            ("1 1:nan", 1),
            ("1 1:1\n1 -2:1", 2),
        ];
        for (text, line) in cases {
            match parse_libsvm_str(text) {
                Err(Error::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?}: expected parse error, got {other:?}"),
            }
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = gen_synthetic(30, 4, 0.1, 9).unwrap();
        let b = gen_synthetic(30, 4, 0.1, 9).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_synthetic(30, 4, 0.1, 10).unwrap());
        assert_eq!(gen_synthetic(1, 3, 0.0, 1).unwrap().len(), 1);
        assert!(gen_synthetic(0, 3, 0.0, 1).is_err());
    }

    #[test]
    fn noiseless_synthetic_recovers_weights() {
        let data = gen_synthetic(200, 5, 0.0, 3).unwrap();
        // regenerate w_true from the same stream
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w_true: Vec<f64> = (0..5).map(|_| rng.sample(StandardNormal)).collect();
        let w = RidgeProblem::new(data, 1e-12).unwrap().solve_direct().unwrap();
        for (a, b) in w.iter().zip(&w_true) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn shard_examples() {
        let data = gen_synthetic(4, 2, 0.1, 0).unwrap();
        let set = shard(&data, &Allocation::new(vec![2, 1, 1]).unwrap(), 5).unwrap();
        assert_eq!(set.shards.iter().map(Dataset::len).collect::<Vec<_>>(), vec![2, 1, 1]);
        let mut seen = set.permutation.clone();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3]);

        let whole = shard(&data, &Allocation::new(vec![4]).unwrap(), 5).unwrap();
        assert_eq!(whole.shards[0], data.select(&whole.permutation));
        assert_eq!(shard(&data, &Allocation::new(vec![2, 1, 1]).unwrap(), 5).unwrap(), set);
        assert!(shard(&data, &Allocation::new(vec![2, 1]).unwrap(), 5).is_err());
    }

    #[test]
    fn ridge_gradient_at_zero() {
        let data = gen_synthetic(10, 3, 0.1, 1).unwrap();
        let p = RidgeProblem::new(data.clone(), 0.3).unwrap();
        let (_, g) = ridge_value_grad(&p, &[0.0; 3]).unwrap();
        let xty = data.xty();
        for i in 0..3 {
            assert!((g[i] + xty[i] / 10.0).abs() < 1e-12);
        }
        assert!(ridge_value_grad(&p, &[0.0; 2]).is_err());
    }

    #[test]
    fn ridge_gradient_vanishes_at_optimum() {
        let p = RidgeProblem::new(gen_synthetic(40, 4, 0.5, 2).unwrap(), 0.05).unwrap();
        let w = p.solve_direct().unwrap();
        let (_, g) = ridge_value_grad(&p, w.as_slice()).unwrap();
        assert!(g.iter().map(|x| x * x).sum::<f64>().sqrt() <= 1e-10);
    }

    #[test]
    fn spectral_examples() {
        let (l, mu) = spectral_constants(&identity_problem(0.1)).unwrap();
        assert!((l - 0.6).abs() < 1e-8);
        assert_eq!(mu, 0.1);

        let zero = RidgeProblem::new(parse_libsvm_str("1\n2\n").unwrap(), 0.1).unwrap();
        let zero = RidgeProblem::new(Dataset { dim: 3, ..zero.data }, 0.1).unwrap();
        assert_eq!(spectral_constants(&zero).unwrap(), (0.1, 0.1));

        let p = RidgeProblem::new(gen_synthetic(50, 4, 0.1, 4).unwrap(), 0.2).unwrap();
        let mut scaled = p.clone();
        for row in &mut scaled.data.rows {
            row.values.iter_mut().for_each(|v| *v *= 2.0);
        }
        let (l1, _) = spectral_constants(&p).unwrap();
        let (l2, _) = spectral_constants(&scaled).unwrap();
        assert!(((l2 - 0.2) - 4.0 * (l1 - 0.2)).abs() < 1e-6 * l2);
    }

    #[test]
    fn power_iteration_matches_dense_eigensolver() {
        let p = RidgeProblem::new(gen_synthetic(80, 6, 0.1, 8).unwrap(), 0.01).unwrap();
        let eig = SymmetricEigen::new(p.data.gram() / 80.0).eigenvalues;
        let top = eig.iter().cloned().fold(f64::MIN, f64::max);
        let bottom = eig.iter().cloned().fold(f64::MAX, f64::min);
        let (l, _) = spectral_constants(&p).unwrap();
        assert!((l - 0.01 - top).abs() < 1e-6 * top);
        let (_, mu) = spectral_constants_with(&p, MuSource::MinEigen).unwrap();
        assert!((mu - 0.01 - bottom).abs() < 1e-5 * top);
    }

    #[test]
    fn similarity_vanishes_for_whole_dataset() {
        let d = gen_synthetic(50, 3, 0.1, 4).unwrap();
        assert!(hessian_similarity(&d, &d) < 1e-12);
    }

    proptest! {
        #[test]
        fn libsvm_round_trip(rows in proptest::collection::vec(
            (-1e6f64..1e6, proptest::collection::btree_map(1u32..50, -1e3f64..1e3, 0..6)), 0..8)) {
            let mut text = String::new();
            for (label, feats) in &rows {
                text.push_str(&label.to_string());
                for (i, v) in feats {
                    text.push_str(&format!(" {i}:{v}"));
                }
                text.push('\n');
            }
            let parsed = parse_libsvm_str(&text).unwrap();
            let mut out = Vec::new();
            write_libsvm(&parsed, &mut out).unwrap();
            let again = parse_libsvm(&out[..]).unwrap();
            prop_assert_eq!(&parsed, &again);
            prop_assert_eq!(String::from_utf8(out).unwrap(), text);
        }

        #[test]
        fn sharding_partitions(sizes in proptest::collection::vec(0usize..6, 1..6), seed in 0u64..1000) {
            let mut sizes = sizes;
            sizes[0] += 1;
            let total: usize = sizes.iter().sum();
            let data = gen_synthetic(total, 2, 0.1, seed).unwrap();
            let set = shard(&data, &Allocation::new(sizes.clone()).unwrap(), seed).unwrap();
            prop_assert_eq!(set.shards.iter().map(Dataset::len).collect::<Vec<_>>(), sizes);
            let mut rows: Vec<_> = set.shards.iter().flat_map(|s| s.labels.clone()).map(f64::to_bits).collect();
            let mut orig: Vec<_> = data.labels.iter().map(|x| x.to_bits()).collect();
            rows.sort();
            orig.sort();
            prop_assert_eq!(rows, orig);
        }

        #[test]
        fn full_gradient_is_weighted_shard_average(seed in 0u64..200, cut in 1usize..19) {
            let data = gen_synthetic(20, 3, 0.3, seed).unwrap();
            let lambda = 0.07;
            let alloc = Allocation::new(vec![cut, 20 - cut]).unwrap();
            let set = shard(&data, &alloc, seed).unwrap();
            let w = [0.3, -1.2, 0.8];
            let (_, full) = ridge_value_grad(&RidgeProblem::new(data, lambda).unwrap(), &w).unwrap();
            let mut avg = [0.0; 3];
            for s in &set.shards {
                if s.is_empty() { continue; }
                let weight = s.len() as f64 / 20.0;
                let (_, g) = ridge_value_grad(&RidgeProblem::new(s.clone(), 0.0).unwrap(), &w).unwrap();
                for k in 0..3 { avg[k] += weight * g[k]; }
            }
            for k in 0..3 {
                prop_assert!((full[k] - (avg[k] + lambda * w[k])).abs() <= 1e-10);
            }
        }

        #[test]
        fn gradient_matches_finite_differences(seed in 0u64..500, w in proptest::collection::vec(-2.0f64..2.0, 4)) {
            let p = RidgeProblem::new(gen_synthetic(15, 4, 0.5, seed).unwrap(), 0.1).unwrap();
            let (_, g) = ridge_value_grad(&p, &w).unwrap();
            let h = 1e-5;
            for k in 0..4 {
                let mut up = w.clone();
                let mut down = w.clone();
                up[k] += h;
                down[k] -= h;
                let fd = (ridge_value_grad(&p, &up).unwrap().0 - ridge_value_grad(&p, &down).unwrap().0) / (2.0 * h);
                prop_assert!((fd - g[k]).abs() <= 1e-6);
            }
        }
    }
}
