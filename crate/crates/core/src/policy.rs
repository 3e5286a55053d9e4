//! Genomes and the feed-forward controllers they decode into.
//!
//! A genome is a flat vector of reals. Layers are stored in forward order;
//! each layer contributes its weight matrix row-major (one row per output
//! unit) followed by one bias per output unit.

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound of every genome coordinate.
pub const PARAM_MIN: f64 = -5.0;
/// Upper bound of every genome coordinate.
pub const PARAM_MAX: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
        }
    }
}

/// Shape of a dense controller network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub output_dim: usize,
    pub activation: Activation,
    pub output_activation: Activation,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden: Vec<usize>, output_dim: usize) -> Result<Self> {
        let spec = Self {
            input_dim,
            hidden,
            output_dim,
            activation: Activation::Tanh,
            output_activation: Activation::Tanh,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidSpec(format!(
                "every layer width must be at least 1 (got {} -> {:?} -> {})",
                self.input_dim, self.hidden, self.output_dim
            )));
        }
        Ok(())
    }

    /// Layer widths from input to output.
    pub fn widths(&self) -> Vec<usize> {
        let mut widths = Vec::with_capacity(self.hidden.len() + 2);
        widths.push(self.input_dim);
        widths.extend_from_slice(&self.hidden);
        widths.push(self.output_dim);
        widths
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }

    /// Run-metadata view of the network: widths, activation and genome length.
    pub fn metadata(&self) -> serde_json::Value {
        serde_json::json!({
            "input_dim": self.input_dim,
            "hidden": self.hidden,
            "output_dim": self.output_dim,
            "activation": self.activation,
            "param_count": self.param_count(),
        })
    }
}

/// Number of weights and biases of a dense network with one bias per unit.
pub fn param_count(spec: &MlpSpec) -> usize {
    spec.widths().windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

/// Flat genome, every coordinate within `[PARAM_MIN, PARAM_MAX]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    /// Wraps `values`, clipping each coordinate into bounds.
    pub fn clipped(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = clip(*v);
        }
        Self(values)
    }

    /// Wraps `values`, rejecting out-of-bound or non-finite coordinates.
    pub fn try_new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values
            .iter()
            .find(|v| !(PARAM_MIN..=PARAM_MAX).contains(*v))
        {
            return Err(Error::OutOfBounds(*v));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Euclidean distance in parameter space.
    pub fn distance(&self, other: &ParameterVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[inline]
fn clip(v: f64) -> f64 {
    v.clamp(PARAM_MIN, PARAM_MAX)
}

/// Draws a genome from N(0, I), clipped to bounds.
pub fn sample_initial<R: Rng + ?Sized>(spec: &MlpSpec, rng: &mut R) -> ParameterVector {
    sample_dim(spec.param_count(), rng)
}

pub(crate) fn sample_dim<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ParameterVector {
    let values = (0..dim)
        .map(|_| clip(StandardNormal.sample(rng)))
        .collect();
    ParameterVector(values)
}

/// Draws a genome from N(center, sigma^2 I), clipped to bounds.
pub fn sample_around<R: Rng + ?Sized>(
    center: &ParameterVector,
    sigma: f64,
    rng: &mut R,
) -> ParameterVector {
    let mut child = center.clone();
    perturb(&mut child.0, sigma, rng);
    child
}

fn perturb<R: Rng + ?Sized>(values: &mut [f64], sigma: f64, rng: &mut R) {
    if sigma == 0.0 {
        return;
    }
    let noise = Normal::new(0.0, sigma).expect("sigma is finite and non-negative");
    for v in values {
        *v = clip(*v + noise.sample(rng));
    }
}

/// Gaussian mutation: `m` children of `parent`, each perturbed by i.i.d.
/// N(0, sigma^2) noise and clipped.
///
/// With `sigma == 0` no randomness is consumed.
pub fn mutate<R: Rng + ?Sized>(
    parent: &ParameterVector,
    sigma: f64,
    m: usize,
    rng: &mut R,
) -> Vec<ParameterVector> {
    assert!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and >= 0");
    (0..m).map(|_| sample_around(parent, sigma, rng)).collect()
}

/// Dense forward pass, activation after every layer.
pub fn forward(spec: &MlpSpec, params: &ParameterVector, observation: &[f64]) -> Result<Vec<f64>> {
    if params.len() != spec.param_count() {
        return Err(Error::DimensionMismatch {
            what: "genome",
            expected: spec.param_count(),
            got: params.len(),
        });
    }
    if observation.len() != spec.input_dim {
        return Err(Error::DimensionMismatch {
            what: "observation",
            expected: spec.input_dim,
            got: observation.len(),
        });
    }
    let mut controller = Controller::new(spec, params.as_slice());
    Ok(controller.act(observation).to_vec())
}

/// Reusable forward-pass evaluator for one genome. Keeps its scratch
/// buffers between calls so the simulators do not allocate per step.
pub(crate) struct Controller<'a> {
    widths: Vec<usize>,
    params: &'a [f64],
    hidden_act: Activation,
    output_act: Activation,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl<'a> Controller<'a> {
    pub(crate) fn new(spec: &MlpSpec, params: &'a [f64]) -> Self {
        debug_assert_eq!(params.len(), spec.param_count());
        let widths = spec.widths();
        let max = widths.iter().copied().max().unwrap_or(0);
        Self {
            widths,
            params,
            hidden_act: spec.activation,
            output_act: spec.output_activation,
            a: vec![0.0; max],
            b: vec![0.0; max],
        }
    }

    pub(crate) fn act(&mut self, observation: &[f64]) -> &[f64] {
        let layers = self.widths.len() - 1;
        self.a[..observation.len()].copy_from_slice(observation);
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.widths[l], self.widths[l + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + (n_in + 1) * n_out];
            offset += (n_in + 1) * n_out;
            let act = if l + 1 == layers {
                self.output_act
            } else {
                self.hidden_act
            };
            let input = &self.a[..n_in];
            for (j, out) in self.b[..n_out].iter_mut().enumerate() {
                let row = &weights[j * n_in..(j + 1) * n_in];
                let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + biases[j];
                *out = act.apply(z);
            }
            std::mem::swap(&mut self.a, &mut self.b);
        }
        &self.a[..self.widths[layers]]
    }
}
