//! Small MLP mapping a tri-plane feature to density and color.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DEC1";
pub const OUTPUT_WIDTH: usize = 4;
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Softplus,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Activation::Softplus => 0,
        }
    }

    fn from_tag(tag: u8) -> Option<Activation> {
        match tag {
            0 => Some(Activation::Softplus),
            _ => None,
        }
    }

    /// Value and slope at `x`, sharing one exponential.
    #[inline]
    fn eval(self, x: f64) -> (f64, f64) {
        match self {
            Activation::Softplus => {
                let e = (-x.abs()).exp();
                let value = x.max(0.0) + e.ln_1p();
                let slope = if x >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                (value, slope)
            }
        }
    }
}

/// Dot product with four partial sums.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`softplus`] for positive values.
pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp_m1()).ln()
    } else {
        y.exp_m1().ln()
    }
}

/// Dense layer, `out x in` weights stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub outputs: usize,
    pub inputs: usize,
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

impl Layer {
    pub fn new(outputs: usize, inputs: usize, weights: Vec<f32>, bias: Vec<f32>) -> Result<Layer> {
        if outputs == 0 || inputs == 0 {
            return Err(Error::Parameter("layer dimensions must be positive".into()));
        }
        if weights.len() != outputs * inputs || bias.len() != outputs {
            return Err(Error::Shape(format!(
                "layer {outputs}x{inputs} given {} weights and {} biases",
                weights.len(),
                bias.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Input("layer parameters must be finite".into()));
        }
        Ok(Layer {
            outputs,
            inputs,
            weights,
            bias,
        })
    }
}

/// Density and color produced for one feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decoded {
    pub density: f64,
    pub color: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderWeights {
    layers: Vec<Layer>,
    activation: Activation,
    /// `f64` copies of each layer's weights and bias for the hot path.
    wide: Vec<(Vec<f64>, Vec<f64>)>,
}

/// Scratch buffers for one forward/backward evaluation.
#[derive(Debug, Default, Clone)]
pub struct DecoderScratch {
    /// Pre-activation values per layer.
    pre: Vec<Vec<f64>>,
    /// Activation slopes of each hidden layer.
    slope: Vec<Vec<f64>>,
    /// Layer inputs (the feature, then post-activation hidden values).
    inputs: Vec<Vec<f64>>,
    grad_a: Vec<f64>,
    grad_b: Vec<f64>,
}

impl DecoderWeights {
    pub fn new(layers: Vec<Layer>, activation: Activation) -> Result<DecoderWeights> {
        validate_chain(&layers).map_err(|(_, msg)| Error::Shape(msg))?;
        Ok(DecoderWeights::assemble(layers, activation))
    }

    /// Builds without validating the layer chain.
    fn assemble(layers: Vec<Layer>, activation: Activation) -> DecoderWeights {
        let wide = layers
            .iter()
            .map(|l| {
                (
                    l.weights.iter().map(|&w| w as f64).collect(),
                    l.bias.iter().map(|&b| b as f64).collect(),
                )
            })
            .collect();
        DecoderWeights {
            layers,
            activation,
            wide,
        }
    }

    /// Decoder with hidden softplus layers of the given widths and
    /// uniformly initialised weights scaled by fan-in.
    pub fn random(input_width: usize, hidden: &[usize], seed: u64) -> Result<DecoderWeights> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut widths = vec![input_width];
        widths.extend_from_slice(hidden);
        widths.push(OUTPUT_WIDTH);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = (3.0 / inputs as f64).sqrt();
                let weights = (0..outputs * inputs)
                    .map(|_| rng.random_range(-bound..bound) as f32)
                    .collect();
                let bias = (0..outputs).map(|_| rng.random_range(-0.1..0.1) as f32).collect();
                Layer::new(outputs, inputs, weights, bias)
            })
            .collect::<Result<Vec<_>>>()?;
        DecoderWeights::new(layers, Activation::Softplus)
    }

    /// The default decoder: two hidden layers of width 64.
    pub fn default_random(input_width: usize, seed: u64) -> Result<DecoderWeights> {
        DecoderWeights::random(input_width, &DEFAULT_HIDDEN, seed)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn decode(&self, feature: &[f64]) -> Result<Decoded> {
        if feature.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "feature has {} channels, decoder expects {}",
                feature.len(),
                self.input_width()
            )));
        }
        let out = self.forward(feature, &mut DecoderScratch::default());
        if !(out.density.is_finite() && out.color.iter().all(|c| c.is_finite())) {
            return Err(Error::Numeric(format!(
                "decoder produced non-finite output for {feature:?}"
            )));
        }
        Ok(out)
    }

    /// Forward pass retaining the intermediates needed by [`Self::backward`].
    pub(crate) fn forward(&self, feature: &[f64], s: &mut DecoderScratch) -> Decoded {
        let n = self.layers.len();
        s.pre.resize_with(n, Vec::new);
        s.slope.resize_with(n, Vec::new);
        s.inputs.resize_with(n, Vec::new);
        s.inputs[0].clear();
        s.inputs[0].extend_from_slice(feature);
        for (i, (layer, (w, b))) in self.layers.iter().zip(&self.wide).enumerate() {
            let pre = &mut s.pre[i];
            pre.clear();
            pre.extend_from_slice(b);
            let x = &s.inputs[i];
            for (o, acc) in pre.iter_mut().enumerate() {
                let row = &w[o * layer.inputs..(o + 1) * layer.inputs];
                *acc += dot(row, x);
            }
            if i + 1 < n {
                let next = &mut s.inputs[i + 1];
                let slope = &mut s.slope[i];
                next.clear();
                slope.clear();
                for &z in s.pre[i].iter() {
                    let (v, d) = self.activation.eval(z);
                    next.push(v);
                    slope.push(d);
                }
            }
        }
        let raw = &s.pre[n - 1];
        Decoded {
            density: softplus(raw[0]),
            color: [sigmoid(raw[1]), sigmoid(raw[2]), sigmoid(raw[3])],
        }
    }

    /// Gradient of `d_density * density + <d_color, color>` w.r.t. the input
    /// feature of the preceding [`Self::forward`] call, written to `out`.
    pub(crate) fn backward(&self, s: &mut DecoderScratch, d_density: f64, d_color: [f64; 3], out: &mut [f64]) {
        let n = self.layers.len();
        let raw = &s.pre[n - 1];
        s.grad_a.clear();
        s.grad_a.push(d_density * sigmoid(raw[0]));
        for k in 0..3 {
            let c = sigmoid(raw[k + 1]);
            s.grad_a.push(d_color[k] * c * (1.0 - c));
        }
        for i in (0..n).rev() {
            let inputs = self.layers[i].inputs;
            let w = &self.wide[i].0;
            s.grad_b.clear();
            s.grad_b.resize(inputs, 0.0);
            for (o, &g) in s.grad_a.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &w[o * inputs..(o + 1) * inputs];
                for (acc, &wv) in s.grad_b.iter_mut().zip(row) {
                    *acc += g * wv;
                }
            }
            if i > 0 {
                for (g, &d) in s.grad_b.iter_mut().zip(&s.slope[i - 1]) {
                    *g *= d;
                }
            }
            std::mem::swap(&mut s.grad_a, &mut s.grad_b);
        }
        out.copy_from_slice(&s.grad_a);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(MAGIC);
        w.u32(binio::dim_u32(self.layers.len(), "layer count")?);
        for layer in &self.layers {
            w.u32(binio::dim_u32(layer.outputs, "layer width")?)
                .u32(binio::dim_u32(layer.inputs, "layer width")?)
                .f32s(&layer.weights)
                .f32s(&layer.bias);
        }
        w.u8(self.activation.tag());
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<DecoderWeights> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        let count = r.u32()? as usize;
        if count == 0 {
            return Err(r.invalid("decoder has no layers"));
        }
        let mut layers = Vec::new();
        let mut layer_offsets = Vec::new();
        for i in 0..count {
            layer_offsets.push(r.offset());
            let outputs = r.u32()? as usize;
            let inputs = r.u32()? as usize;
            if outputs == 0 || inputs == 0 {
                return Err(Error::Format {
                    offset: layer_offsets[i],
                    message: format!("layer {} has a zero dimension", i + 1),
                });
            }
            let weight_count = outputs
                .checked_mul(inputs)
                .ok_or_else(|| r.invalid(format!("layer {} dimensions overflow", i + 1)))?;
            let weights = r.f32_vec(weight_count)?;
            let bias = r.f32_vec(outputs)?;
            if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
                return Err(Error::Format {
                    offset: layer_offsets[i],
                    message: format!("layer {} has non-finite parameters", i + 1),
                });
            }
            layers.push(Layer {
                outputs,
                inputs,
                weights,
                bias,
            });
        }
        let tag_offset = r.offset();
        let tag = r.bytes(1)?[0];
        let activation = Activation::from_tag(tag).ok_or(Error::Format {
            offset: tag_offset,
            message: format!("unknown activation tag {tag}"),
        })?;
        r.finish()?;
        validate_chain(&layers).map_err(|(i, message)| Error::Format {
            offset: layer_offsets[i],
            message,
        })?;
        Ok(DecoderWeights::assemble(layers, activation))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DecoderWeights> {
        let path = path.as_ref();
        DecoderWeights::from_bytes(&binio::read_file(path)?).map_err(|e| e.in_file(path))
    }
}

/// Checks that layer widths chain and the final width is 4. On failure
/// returns the offending layer index and a message naming it (1-based).
fn validate_chain(layers: &[Layer]) -> std::result::Result<(), (usize, String)> {
    if layers.is_empty() {
        return Err((0, "decoder has no layers".into()));
    }
    for (i, pair) in layers.windows(2).enumerate() {
        if pair[0].outputs != pair[1].inputs {
            return Err((
                i + 1,
                format!(
                    "layer {} expects {} inputs but layer {} produces {}",
                    i + 2,
                    pair[1].inputs,
                    i + 1,
                    pair[0].outputs
                ),
            ));
        }
    }
    let last = layers.len() - 1;
    if layers[last].outputs != OUTPUT_WIDTH {
        return Err((
            last,
            format!(
                "layer {} outputs {} values, expected {OUTPUT_WIDTH}",
                last + 1,
                layers[last].outputs
            ),
        ));
    }
    Ok(())
}
