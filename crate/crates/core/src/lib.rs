//! Tri-plane neural fields for one-shot head avatars.
//!
//! The core pieces are the [`TriPlane`] feature volume, the small MLP
//! [`DecoderWeights`] that turns sampled features into density and color,
//! and the differentiable volume renderer in [`render`]. Around them sit
//! depth-based lifting of 2D features into tri-planes ([`lifting`]), a
//! linear morphable face model with a mesh rasterizer ([`morphable`]),
//! training objectives ([`objectives`]) and evaluation metrics
//! ([`metrics`]).

mod binio;
mod kdtree;
mod textfmt;

pub mod cli;
pub mod config;
pub mod decoder;
pub mod error;
pub mod geometry;
pub mod imaging;
pub mod lifting;
pub mod metrics;
pub mod morphable;
pub mod objectives;
pub mod pipeline;
pub mod render;
pub mod triplane;

pub use decoder::{Activation, Decoded, DecoderWeights, Layer};
pub use error::{Error, Result};
pub use geometry::{procrustes_align, Camera, Ray, Similarity2, Similarity3, SimilarityTransform};
pub use imaging::{FeatureImage, FloatMap, Image, PixelMask};
pub use lifting::{lift, mask_apply, rasterize, NeuralPointCloud};
pub use metrics::{psnr, ssim, KeypointSet, MetricReport};
pub use morphable::{assemble_shape, render_mesh, Coefficients, MorphableBasis};
pub use objectives::{FeatureExtractor, LossWeights};
pub use pipeline::{reenact, ReenactJob};
pub use render::{fit_triplane, render, render_backward, FitOptions, RenderConfig, RenderOutput};
pub use triplane::{Plane, TriPlane, TriPlaneGradient};
