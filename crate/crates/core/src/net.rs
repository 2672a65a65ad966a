//! Two-layer sigmoid network: representation, forward pass, output
//! normalization and the squared-error cost shared by both optimizers.
//!
//! All arithmetic is `f64`. There are no bias units unless the topology asks
//! for them, in which case a constant 1 is appended to the input of each
//! layer and the weight matrices gain one trailing column.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Layer, Result};

/// Logistic activation `1 / (1 + e^-v)`.
///
/// Saturates to exactly 0 or 1 far in the tails and never returns NaN for a
/// finite argument.
#[inline]
pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Layer sizes of a single-hidden-layer network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub input_size: usize,
    pub hidden_size: usize,
    pub output_size: usize,
    /// Append a constant-1 unit to the input of each layer.
    #[serde(default)]
    pub bias: bool,
}

impl NetworkTopology {
    pub fn new(input_size: usize, hidden_size: usize, output_size: usize) -> Result<Self> {
        let topology = Self {
            input_size,
            hidden_size,
            output_size,
            bias: false,
        };
        topology.validate()?;
        Ok(topology)
    }

    pub fn with_bias(mut self, bias: bool) -> Self {
        self.bias = bias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_size == 0 || self.hidden_size == 0 || self.output_size == 0 {
            return Err(Error::Argument(format!(
                "layer sizes must all be >= 1, got {}-{}-{}",
                self.input_size, self.hidden_size, self.output_size
            )));
        }
        Ok(())
    }

    /// Shape `(rows, cols)` of the input-to-hidden matrix.
    pub fn theta1_shape(&self) -> (usize, usize) {
        (self.hidden_size, self.input_size + usize::from(self.bias))
    }

    /// Shape `(rows, cols)` of the hidden-to-output matrix.
    pub fn theta2_shape(&self) -> (usize, usize) {
        (self.output_size, self.hidden_size + usize::from(self.bias))
    }

    pub fn parameter_count(&self) -> usize {
        let (r1, c1) = self.theta1_shape();
        let (r2, c2) = self.theta2_shape();
        r1 * c1 + r2 * c2
    }
}

impl std::fmt::Display for NetworkTopology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}-{}", self.input_size, self.hidden_size, self.output_size)?;
        if self.bias {
            f.write_str(" (bias)")?;
        }
        Ok(())
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Argument("ragged matrix rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    /// Every entry drawn independently as `scale * u`, `u ~ U[-1, 1]`.
    pub fn random_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let mut m = Self::zeros(rows, cols);
        m.fill_uniform(scale, rng);
        m
    }

    pub fn fill_uniform<R: Rng + ?Sized>(&mut self, scale: f64, rng: &mut R) {
        for v in &mut self.data {
            *v = scale * rng.random_range(-1.0..=1.0);
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

fn check_shape(layer: Layer, m: &Matrix, expected: (usize, usize)) -> Result<()> {
    if m.shape() != expected {
        return Err(Error::Dimension {
            layer,
            expected: format!("{}x{}", expected.0, expected.1),
            actual: format!("{}x{}", m.rows, m.cols),
        });
    }
    Ok(())
}

/// Input-to-hidden (`theta1`) and hidden-to-output (`theta2`) weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub theta1: Matrix,
    pub theta2: Matrix,
}

impl WeightSet {
    pub fn zeros(topology: &NetworkTopology) -> Self {
        let (r1, c1) = topology.theta1_shape();
        let (r2, c2) = topology.theta2_shape();
        Self {
            theta1: Matrix::zeros(r1, c1),
            theta2: Matrix::zeros(r2, c2),
        }
    }

    pub fn new(topology: &NetworkTopology, theta1: Matrix, theta2: Matrix) -> Result<Self> {
        let w = Self { theta1, theta2 };
        w.check(topology)?;
        Ok(w)
    }

    pub fn random_uniform<R: Rng + ?Sized>(topology: &NetworkTopology, scale: f64, rng: &mut R) -> Self {
        let (r1, c1) = topology.theta1_shape();
        let (r2, c2) = topology.theta2_shape();
        let theta1 = Matrix::random_uniform(r1, c1, scale, rng);
        let theta2 = Matrix::random_uniform(r2, c2, scale, rng);
        Self { theta1, theta2 }
    }

    /// Checks both matrix shapes against `topology`.
    pub fn check(&self, topology: &NetworkTopology) -> Result<()> {
        check_shape(Layer::Hidden, &self.theta1, topology.theta1_shape())?;
        check_shape(Layer::Output, &self.theta2, topology.theta2_shape())
    }

    pub fn is_finite(&self) -> bool {
        self.theta1.data.iter().chain(&self.theta2.data).all(|v| v.is_finite())
    }

    /// `theta += delta`, layer by layer.
    pub fn apply(&mut self, delta: &DeltaSet) {
        self.theta1.add_assign(&delta.dtheta1);
        self.theta2.add_assign(&delta.dtheta2);
    }
}

/// Per-weight increments, same shapes as the paired [`WeightSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSet {
    pub dtheta1: Matrix,
    pub dtheta2: Matrix,
}

impl DeltaSet {
    pub fn zeros(topology: &NetworkTopology) -> Self {
        let w = WeightSet::zeros(topology);
        Self {
            dtheta1: w.theta1,
            dtheta2: w.theta2,
        }
    }

    pub fn random_uniform<R: Rng + ?Sized>(topology: &NetworkTopology, lambda: f64, rng: &mut R) -> Self {
        let w = WeightSet::random_uniform(topology, lambda, rng);
        Self {
            dtheta1: w.theta1,
            dtheta2: w.theta2,
        }
    }

    /// Redraws every entry as `lambda * u`, `u ~ U[-1, 1]`, `dtheta1` first.
    pub fn resample<R: Rng + ?Sized>(&mut self, lambda: f64, rng: &mut R) {
        self.dtheta1.fill_uniform(lambda, rng);
        self.dtheta2.fill_uniform(lambda, rng);
    }

    pub fn max_abs(&self) -> f64 {
        self.dtheta1
            .data
            .iter()
            .chain(&self.dtheta2.data)
            .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// One training example: features in `[0, 1]` and a one-hot target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    x: Vec<f64>,
    y: Vec<f64>,
    label: usize,
    /// Indices of non-zero features, kept only when `x` is mostly zeros.
    nonzero: Option<Vec<u32>>,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let ones = y.iter().filter(|&&v| v == 1.0).count();
        let zeros = y.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != y.len() {
            return Err(Error::Argument(format!("label vector is not one-hot: {y:?}")));
        }
        if let Some(bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Argument(format!("feature {bad} outside [0, 1]")));
        }
        let label = y.iter().position(|&v| v == 1.0).unwrap_or_default();
        let nz: Vec<u32> = (0..x.len()).filter(|&i| x[i] != 0.0).map(|i| i as u32).collect();
        let nonzero = (nz.len() * 2 < x.len()).then_some(nz);
        Ok(Self { x, y, label, nonzero })
    }

    /// Builds a sample whose target is class `label` out of `classes`.
    pub fn with_label(x: Vec<f64>, label: usize, classes: usize) -> Result<Self> {
        if label >= classes {
            return Err(Error::Argument(format!("label {label} out of range for {classes} classes")));
        }
        let mut y = vec![0.0; classes];
        y[label] = 1.0;
        Self::new(x, y)
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn label(&self) -> usize {
        self.label
    }
}

/// Non-empty ordered collection of samples with uniform shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::Argument("dataset must contain at least one sample".into()))?;
        let (nx, ny) = (first.x.len(), first.y.len());
        if let Some(i) = samples.iter().position(|s| s.x.len() != nx || s.y.len() != ny) {
            return Err(Error::Consistency(format!(
                "sample {i} has shape {}/{}, expected {nx}/{ny}",
                samples[i].x.len(),
                samples[i].y.len()
            )));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_size(&self) -> usize {
        self.samples[0].x.len()
    }

    pub fn output_size(&self) -> usize {
        self.samples[0].y.len()
    }

    /// Checks that the dataset's feature and label widths fit `topology`.
    pub fn check(&self, topology: &NetworkTopology) -> Result<()> {
        if self.input_size() != topology.input_size {
            return Err(Error::Dimension {
                layer: Layer::Input,
                expected: topology.input_size.to_string(),
                actual: self.input_size().to_string(),
            });
        }
        if self.output_size() != topology.output_size {
            return Err(Error::Dimension {
                layer: Layer::Output,
                expected: topology.output_size.to_string(),
                actual: self.output_size().to_string(),
            });
        }
        Ok(())
    }
}

/// Hidden and output activations of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Activations {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// `z = f(W a)` for each row of `w`, with the trailing column as bias when
/// `bias` is set.
#[inline]
fn layer_into(w: &Matrix, input: &[f64], bias: bool, out: &mut [f64]) {
    let n = input.len();
    for (j, o) in out.iter_mut().enumerate() {
        let row = w.row(j);
        let mut acc: f64 = row[..n].iter().zip(input).map(|(a, b)| a * b).sum();
        if bias {
            acc += row[n];
        }
        *o = sigmoid(acc);
    }
}

#[inline]
fn forward_into(topology: &NetworkTopology, w: &WeightSet, x: &[f64], hidden: &mut [f64], output: &mut [f64]) {
    layer_into(&w.theta1, x, topology.bias, hidden);
    layer_into(&w.theta2, hidden, topology.bias, output);
}

/// `theta1` stored feature-major: the hidden weights of feature `k` are
/// contiguous at `[k * hidden .. (k + 1) * hidden]`.
fn transpose_theta1(w: &WeightSet) -> Vec<f64> {
    let (rows, cols) = w.theta1.shape();
    let mut out = vec![0.0; rows * cols];
    for (j, row) in w.theta1.data.chunks_exact(cols).enumerate() {
        for (k, &v) in row.iter().enumerate() {
            out[k * rows + j] = v;
        }
    }
    out
}

/// Hidden pre-activations for a hidden layer of width `H`, held in registers.
#[inline]
fn accumulate_fixed<const H: usize>(theta1_t: &[f64], sample: &Sample, hidden: &mut [f64]) {
    let mut acc = [0.0f64; H];
    let mut add = |k: usize| {
        let v = sample.x[k];
        let wk: &[f64; H] = theta1_t[k * H..(k + 1) * H].try_into().expect("H weights");
        for j in 0..H {
            acc[j] += wk[j] * v;
        }
    };
    match &sample.nonzero {
        Some(nonzero) => nonzero.iter().for_each(|&k| add(k as usize)),
        None => (0..sample.x.len()).for_each(add),
    }
    hidden.copy_from_slice(&acc);
}

/// Same as [`forward_into`], but accumulates all hidden units together from
/// feature-major weights and skips zero features of sparse samples. Each
/// unit still sums its terms in feature order and a zero term adds exactly
/// nothing, so both paths agree bit for bit.
#[inline]
fn forward_sample(topology: &NetworkTopology, w: &WeightSet, theta1_t: &[f64], sample: &Sample, hidden: &mut [f64], output: &mut [f64]) {
    let x = &sample.x;
    let h = hidden.len();
    match h {
        1 => accumulate_fixed::<1>(theta1_t, sample, hidden),
        2 => accumulate_fixed::<2>(theta1_t, sample, hidden),
        3 => accumulate_fixed::<3>(theta1_t, sample, hidden),
        4 => accumulate_fixed::<4>(theta1_t, sample, hidden),
        5 => accumulate_fixed::<5>(theta1_t, sample, hidden),
        6 => accumulate_fixed::<6>(theta1_t, sample, hidden),
        8 => accumulate_fixed::<8>(theta1_t, sample, hidden),
        10 => accumulate_fixed::<10>(theta1_t, sample, hidden),
        _ => {
            hidden.fill(0.0);
            let mut accumulate = |k: usize| {
                let v = x[k];
                for (acc, &wk) in hidden.iter_mut().zip(&theta1_t[k * h..(k + 1) * h]) {
                    *acc += wk * v;
                }
            };
            match &sample.nonzero {
                Some(nonzero) => nonzero.iter().for_each(|&k| accumulate(k as usize)),
                None => (0..x.len()).for_each(accumulate),
            }
        }
    }
    if topology.bias {
        let n = x.len();
        for (acc, &b) in hidden.iter_mut().zip(&theta1_t[n * h..(n + 1) * h]) {
            *acc += b;
        }
    }
    for v in hidden.iter_mut() {
        *v = sigmoid(*v);
    }
    layer_into(&w.theta2, hidden, topology.bias, output);
}

/// Forward pass: `hidden = f(theta1 x)`, `output = f(theta2 hidden)`.
pub fn forward(topology: &NetworkTopology, w: &WeightSet, x: &[f64]) -> Result<Activations> {
    if x.len() != topology.input_size {
        return Err(Error::Dimension {
            layer: Layer::Input,
            expected: topology.input_size.to_string(),
            actual: x.len().to_string(),
        });
    }
    w.check(topology)?;
    let mut hidden = vec![0.0; topology.hidden_size];
    let mut output = vec![0.0; topology.output_size];
    forward_into(topology, w, x, &mut hidden, &mut output);
    Ok(Activations { hidden, output })
}

/// Scales the output activations so they sum to one.
pub fn normalize_output(z3: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = z3.iter().sum();
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::Domain(format!("cannot normalize output vector with sum {sum}")));
    }
    Ok(z3.iter().map(|v| v / sum).collect())
}

/// `0.5 * sum_j (h_j - y_j)^2`.
pub fn cost(h: &[f64], y: &[f64]) -> Result<f64> {
    if h.len() != y.len() {
        return Err(Error::Dimension {
            layer: Layer::Output,
            expected: y.len().to_string(),
            actual: h.len().to_string(),
        });
    }
    Ok(squared_error(h, y))
}

#[inline]
fn squared_error(h: &[f64], y: &[f64]) -> f64 {
    0.5 * h.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Mean per-sample cost of the network over `data`.
pub fn dataset_cost(topology: &NetworkTopology, w: &WeightSet, data: &Dataset) -> Result<f64> {
    w.check(topology)?;
    data.check(topology)?;
    let mut hidden = vec![0.0; topology.hidden_size];
    let mut output = vec![0.0; topology.output_size];
    let theta1_t = transpose_theta1(w);
    let mut total = 0.0;
    for sample in &data.samples {
        forward_sample(topology, w, &theta1_t, sample, &mut hidden, &mut output);
        let sum: f64 = output.iter().sum();
        if !(sum > 0.0) {
            return Err(Error::Domain(format!("cannot normalize output vector with sum {sum}")));
        }
        let inv = 1.0 / sum;
        total += 0.5
            * output
                .iter()
                .zip(&sample.y)
                .map(|(z, y)| {
                    let d = z * inv - y;
                    d * d
                })
                .sum::<f64>();
    }
    Ok(total / data.len() as f64)
}

/// Fraction of samples whose largest output matches the one-hot label.
pub fn accuracy(topology: &NetworkTopology, w: &WeightSet, data: &Dataset) -> Result<f64> {
    w.check(topology)?;
    data.check(topology)?;
    let mut hidden = vec![0.0; topology.hidden_size];
    let mut output = vec![0.0; topology.output_size];
    let theta1_t = transpose_theta1(w);
    let mut correct = 0usize;
    for sample in &data.samples {
        forward_sample(topology, w, &theta1_t, sample, &mut hidden, &mut output);
        let predicted = output
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best })
            .0;
        correct += usize::from(predicted == sample.label);
    }
    Ok(correct as f64 / data.len() as f64)
}
