//! Linear 3D morphable face model and its flat-shaded mesh renderer.
//!
//! Shape `S = S_mean + B_id * alpha + B_exp * beta` and color
//! `T = clamp(T_mean + B_tex * delta, 0, 1)`, with bases stored column-major
//! over the flattened `3V` vertex coordinates. Rendering uses per-vertex
//! colors without lighting.

use std::path::Path;

use rayon::prelude::*;

use crate::binio::{self, Reader, Writer};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::imaging::{Image, PixelMask};
use crate::textfmt;

const MAGIC: &[u8; 4] = b"MMB1";

#[derive(Debug, Clone, PartialEq)]
pub struct MorphableBasis {
    vertex_count: usize,
    mean_shape: Vec<f32>,
    mean_texture: Vec<f32>,
    id_basis: Vec<f32>,
    exp_basis: Vec<f32>,
    tex_basis: Vec<f32>,
    id_dims: usize,
    exp_dims: usize,
    tex_dims: usize,
    triangles: Vec<[u32; 3]>,
    facial: Vec<bool>,
}

/// Raw parts of a [`MorphableBasis`]; see the field docs on the accessors.
#[derive(Debug, Clone, Default)]
pub struct BasisParts {
    pub mean_shape: Vec<f32>,
    pub mean_texture: Vec<f32>,
    pub id_basis: Vec<f32>,
    pub exp_basis: Vec<f32>,
    pub tex_basis: Vec<f32>,
    pub id_dims: usize,
    pub exp_dims: usize,
    pub tex_dims: usize,
    pub triangles: Vec<[u32; 3]>,
    pub facial: Vec<bool>,
}

impl MorphableBasis {
    pub fn new(parts: BasisParts) -> Result<MorphableBasis> {
        let n3 = parts.mean_shape.len();
        if !n3.is_multiple_of(3) {
            return Err(Error::Shape(format!("mean shape has {n3} values, not a multiple of 3")));
        }
        let v = n3 / 3;
        let check = |name: &str, len: usize, expected: usize| {
            if len != expected {
                Err(Error::Shape(format!("{name} has {len} values, expected {expected}")))
            } else {
                Ok(())
            }
        };
        check("mean texture", parts.mean_texture.len(), n3)?;
        check("identity basis", parts.id_basis.len(), n3 * parts.id_dims)?;
        check("expression basis", parts.exp_basis.len(), n3 * parts.exp_dims)?;
        check("texture basis", parts.tex_basis.len(), n3 * parts.tex_dims)?;
        check("facial mask", parts.facial.len(), v)?;
        if let Some(t) = parts.triangles.iter().find(|t| t.iter().any(|&i| i as usize >= v)) {
            return Err(Error::Input(format!("triangle {t:?} indexes past {v} vertices")));
        }
        let all = [
            &parts.mean_shape,
            &parts.mean_texture,
            &parts.id_basis,
            &parts.exp_basis,
            &parts.tex_basis,
        ];
        if all.iter().any(|b| b.iter().any(|x| !x.is_finite())) {
            return Err(Error::Input("basis values must be finite".into()));
        }
        Ok(MorphableBasis {
            vertex_count: v,
            mean_shape: parts.mean_shape,
            mean_texture: parts.mean_texture,
            id_basis: parts.id_basis,
            exp_basis: parts.exp_basis,
            tex_basis: parts.tex_basis,
            id_dims: parts.id_dims,
            exp_dims: parts.exp_dims,
            tex_dims: parts.tex_dims,
            triangles: parts.triangles,
            facial: parts.facial,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn id_dims(&self) -> usize {
        self.id_dims
    }

    pub fn exp_dims(&self) -> usize {
        self.exp_dims
    }

    pub fn tex_dims(&self) -> usize {
        self.tex_dims
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn facial_mask(&self) -> &[bool] {
        &self.facial
    }

    /// Mean shape, `3V` values (x, y, z per vertex).
    pub fn mean_shape(&self) -> &[f32] {
        &self.mean_shape
    }

    pub fn mean_texture(&self) -> &[f32] {
        &self.mean_texture
    }

    /// Identity basis, `3V x K_id`, column-major.
    pub fn id_basis(&self) -> &[f32] {
        &self.id_basis
    }

    pub fn exp_basis(&self) -> &[f32] {
        &self.exp_basis
    }

    pub fn tex_basis(&self) -> &[f32] {
        &self.tex_basis
    }

    /// Zero coefficients sized for this basis (the neutral expression).
    pub fn zero_coefficients(&self) -> Coefficients {
        Coefficients {
            alpha: vec![0.0; self.id_dims],
            beta: vec![0.0; self.exp_dims],
            delta: vec![0.0; self.tex_dims],
        }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::with_magic(MAGIC);
        w.u32(binio::dim_u32(self.vertex_count, "vertex count")?)
            .u32(binio::dim_u32(self.triangles.len(), "triangle count")?)
            .u32(binio::dim_u32(self.id_dims, "identity dims")?)
            .u32(binio::dim_u32(self.exp_dims, "expression dims")?)
            .u32(binio::dim_u32(self.tex_dims, "texture dims")?)
            .f32s(&self.mean_shape)
            .f32s(&self.mean_texture)
            .f32s(&self.id_basis)
            .f32s(&self.exp_basis)
            .f32s(&self.tex_basis);
        for t in &self.triangles {
            w.u32(t[0]).u32(t[1]).u32(t[2]);
        }
        for &f in &self.facial {
            w.u8(f as u8);
        }
        Ok(w.into_bytes())
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<MorphableBasis> {
        let mut r = Reader::new(bytes);
        r.magic(MAGIC)?;
        let v = r.u32()? as usize;
        let f = r.u32()? as usize;
        let id_dims = r.u32()? as usize;
        let exp_dims = r.u32()? as usize;
        let tex_dims = r.u32()? as usize;
        let n3 = v.checked_mul(3).ok_or_else(|| r.invalid("vertex count overflows"))?;
        let block = |k: usize, r: &Reader| n3.checked_mul(k).ok_or_else(|| r.invalid("basis size overflows"));
        let mean_shape = r.f32_vec(n3)?;
        let mean_texture = r.f32_vec(n3)?;
        let n = block(id_dims, &r)?;
        let id_basis = r.f32_vec(n)?;
        let n = block(exp_dims, &r)?;
        let exp_basis = r.f32_vec(n)?;
        let n = block(tex_dims, &r)?;
        let tex_basis = r.f32_vec(n)?;
        let tri_offset = r.offset();
        let tri_count = f.checked_mul(3).ok_or_else(|| r.invalid("triangle count overflows"))?;
        let flat = r.u32_vec(tri_count)?;
        if let Some(i) = flat.iter().position(|&i| i as usize >= v) {
            return Err(Error::Format {
                offset: tri_offset + 4 * i,
                message: format!("triangle index {} out of range for {v} vertices", flat[i]),
            });
        }
        let triangles = flat.chunks_exact(3).map(|t| [t[0], t[1], t[2]]).collect();
        let mask_offset = r.offset();
        let mask_bytes = r.bytes(v)?;
        if let Some(i) = mask_bytes.iter().position(|&b| b > 1) {
            return Err(Error::Format {
                offset: mask_offset + i,
                message: format!("facial mask byte {} is not 0 or 1", mask_bytes[i]),
            });
        }
        let facial = mask_bytes.iter().map(|&b| b == 1).collect();
        r.finish()?;
        MorphableBasis::new(BasisParts {
            mean_shape,
            mean_texture,
            id_basis,
            exp_basis,
            tex_basis,
            id_dims,
            exp_dims,
            tex_dims,
            triangles,
            facial,
        })
        .map_err(|e| Error::Format {
            offset: 4,
            message: e.to_string(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        binio::write_file(path.as_ref(), &self.to_bytes()?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<MorphableBasis> {
        let path = path.as_ref();
        MorphableBasis::from_bytes(&binio::read_file(path)?).map_err(|e| e.in_file(path))
    }

    /// Procedural head: a subdivided icosphere squashed into an ellipsoid,
    /// with four identity, four expression and four texture directions.
    /// Vertices on the front (+z) face region are flagged facial.
    pub fn synthetic_head() -> MorphableBasis {
        synthetic::head()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Coefficients {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Coefficient file contents: the three model blocks plus an optional pose
/// vector used for pose-distance evaluation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CoefficientFile {
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub delta: Option<Vec<f64>>,
    pub pose: Option<Vec<f64>>,
}

impl CoefficientFile {
    pub fn parse(text: &str) -> Result<CoefficientFile> {
        let mut out = CoefficientFile::default();
        for e in textfmt::parse_entries(text)? {
            let values = textfmt::parse_floats(&e.value, e.line)?;
            let slot = match e.key.as_str() {
                "alpha" => &mut out.alpha,
                "beta" => &mut out.beta,
                "delta" => &mut out.delta,
                "pose" => &mut out.pose,
                other => return Err(Error::Input(format!("line {}: unknown block `{other}`", e.line))),
            };
            if slot.is_some() {
                return Err(Error::Input(format!("line {}: duplicate `{}` block", e.line, e.key)));
            }
            *slot = Some(values);
        }
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, v) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("delta", &self.delta),
            ("pose", &self.pose),
        ] {
            if let Some(v) = v {
                s.push_str(&format!("{name}: {}\n", textfmt::format_floats(v.iter().copied())));
            }
        }
        s
    }

    pub fn load(path: impl AsRef<Path>) -> Result<CoefficientFile> {
        let path = path.as_ref();
        let text = String::from_utf8(binio::read_file(path)?)
            .map_err(|_| Error::Input("coefficient file is not UTF-8".into()).in_file(path))?;
        CoefficientFile::parse(&text).map_err(|e| e.in_file(path))
    }

    /// Model coefficients for `basis`; absent blocks are zero.
    pub fn coefficients_for(&self, basis: &MorphableBasis) -> Coefficients {
        let zeros = basis.zero_coefficients();
        Coefficients {
            alpha: self.alpha.clone().unwrap_or(zeros.alpha),
            beta: self.beta.clone().unwrap_or(zeros.beta),
            delta: self.delta.clone().unwrap_or(zeros.delta),
        }
    }
}

/// Assembled mesh: `V` positions and `V` colors.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledMesh {
    pub vertices: Vec<[f64; 3]>,
    pub colors: Vec<[f64; 3]>,
}

fn add_basis(acc: &mut [f64], basis: &[f32], coeffs: &[f64]) {
    let n3 = acc.len();
    for (k, &c) in coeffs.iter().enumerate() {
        let column = &basis[k * n3..(k + 1) * n3];
        for (a, &b) in acc.iter_mut().zip(column) {
            *a += b as f64 * c;
        }
    }
}

/// Vertex positions and colors for the given coefficients.
pub fn assemble_shape(b: &MorphableBasis, c: &Coefficients) -> Result<AssembledMesh> {
    for (name, got, want) in [
        ("alpha", c.alpha.len(), b.id_dims),
        ("beta", c.beta.len(), b.exp_dims),
        ("delta", c.delta.len(), b.tex_dims),
    ] {
        if got != want {
            return Err(Error::Shape(format!("{name} has {got} coefficients, basis has {want}")));
        }
    }
    if c.alpha.iter().chain(&c.beta).chain(&c.delta).any(|v| !v.is_finite()) {
        return Err(Error::Input("coefficients must be finite".into()));
    }
    let mut shape: Vec<f64> = b.mean_shape.iter().map(|&v| v as f64).collect();
    add_basis(&mut shape, &b.id_basis, &c.alpha);
    add_basis(&mut shape, &b.exp_basis, &c.beta);
    let mut tex: Vec<f64> = b.mean_texture.iter().map(|&v| v as f64).collect();
    add_basis(&mut tex, &b.tex_basis, &c.delta);
    Ok(AssembledMesh {
        vertices: shape.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect(),
        colors: tex
            .chunks_exact(3)
            .map(|p| [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0), p[2].clamp(0.0, 1.0)])
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshRender {
    pub image: Image,
    pub mask: PixelMask,
    /// Camera-space depth of the visible surface; `far` where uncovered.
    pub depth: Image,
}

#[derive(Clone, Copy)]
struct ScreenTriangle {
    /// Screen positions, oriented so the signed area is positive.
    v: [[f64; 2]; 3],
    inv_depth: [f64; 3],
    colors: [[f64; 3]; 3],
    area: f64,
    facial: bool,
    y_min: f64,
    y_max: f64,
    x_min: f64,
    x_max: f64,
}

#[inline]
fn edge(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

/// Top-left rule for pixel centers lying exactly on an edge: of the two
/// opposite traversals of a shared edge exactly one owns it.
#[inline]
fn owns_edge(a: [f64; 2], b: [f64; 2]) -> bool {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    dy > 0.0 || (dy == 0.0 && dx < 0.0)
}

/// Rasterizes the assembled mesh with a z-buffer. Triangles with a vertex
/// at or behind the near plane are skipped.
pub fn render_assembled(
    mesh: &AssembledMesh,
    triangles: &[[u32; 3]],
    facial: &[bool],
    cam: &Camera,
) -> Result<MeshRender> {
    let (width, height) = (cam.width() as usize, cam.height() as usize);
    let far = cam.far();
    let projected: Vec<Option<(f64, f64, f64)>> = mesh.vertices.iter().map(|p| cam.project(&(*p).into())).collect();

    let mut tris = Vec::with_capacity(triangles.len());
    for t in triangles {
        let idx = t.map(|i| i as usize);
        let Some(proj) = idx
            .iter()
            .map(|&i| projected[i].filter(|&(_, _, d)| d >= cam.near()))
            .collect::<Option<Vec<_>>>()
        else {
            continue;
        };
        let mut v = [[proj[0].0, proj[0].1], [proj[1].0, proj[1].1], [proj[2].0, proj[2].1]];
        let mut inv_depth = [1.0 / proj[0].2, 1.0 / proj[1].2, 1.0 / proj[2].2];
        let mut colors = idx.map(|i| mesh.colors[i]);
        let mut area = edge(v[0], v[1], v[2]);
        if area == 0.0 || !area.is_finite() {
            continue;
        }
        if area < 0.0 {
            v.swap(1, 2);
            inv_depth.swap(1, 2);
            colors.swap(1, 2);
            area = -area;
        }
        tris.push(ScreenTriangle {
            v,
            inv_depth,
            colors,
            area,
            facial: idx.iter().all(|&i| facial[i]),
            y_min: v.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min),
            y_max: v.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max),
            x_min: v.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min),
            x_max: v.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max),
        });
    }

    // Scanlines are independent; each walks the triangles in order.
    let rows: Vec<(Vec<f64>, Vec<bool>, Vec<f64>)> = (0..height)
        .into_par_iter()
        .map(|y| {
            let py = y as f64 + 0.5;
            let mut rgb = vec![0.0; width * 3];
            let mut mask = vec![false; width];
            let mut depth = vec![far; width];
            for tri in tris.iter().filter(|t| t.y_min <= py && py <= t.y_max) {
                let x_start = (tri.x_min - 0.5).ceil().max(0.0) as usize;
                let x_end = ((tri.x_max - 0.5).floor() + 1.0).clamp(0.0, width as f64) as usize;
                for x in x_start..x_end {
                    let p = [x as f64 + 0.5, py];
                    let [a, b, c] = tri.v;
                    let w0 = edge(b, c, p);
                    let w1 = edge(c, a, p);
                    let w2 = edge(a, b, p);
                    let inside = |w: f64, s: [f64; 2], e: [f64; 2]| w > 0.0 || (w == 0.0 && owns_edge(s, e));
                    if !(inside(w0, b, c) && inside(w1, c, a) && inside(w2, a, b)) {
                        continue;
                    }
                    let bary = [w0 / tri.area, w1 / tri.area, w2 / tri.area];
                    let inv_z = bary[0] * tri.inv_depth[0] + bary[1] * tri.inv_depth[1] + bary[2] * tri.inv_depth[2];
                    let z = 1.0 / inv_z;
                    if !(z < depth[x]) {
                        continue;
                    }
                    depth[x] = z;
                    mask[x] = tri.facial;
                    for k in 0..3 {
                        let num: f64 = (0..3).map(|i| bary[i] * tri.inv_depth[i] * tri.colors[i][k]).sum();
                        rgb[3 * x + k] = (num * z).clamp(0.0, 1.0);
                    }
                }
            }
            (rgb, mask, depth)
        })
        .collect();

    let mut image = Vec::with_capacity(width * height * 3);
    let mut depth = Vec::with_capacity(width * height);
    let mut mask = PixelMask::new(width, height, false);
    for (y, (r, m, d)) in rows.into_iter().enumerate() {
        image.extend(r);
        depth.extend(d);
        for (x, v) in m.into_iter().enumerate() {
            mask.set(x, y, v);
        }
    }
    Ok(MeshRender {
        image: Image::from_vec(width, height, 3, image)?,
        mask,
        depth: Image::from_vec(width, height, 1, depth)?,
    })
}

/// Renders the model with coefficients `c` from `cam` at `width x height`
/// (the camera's intrinsics are rescaled if its resolution differs).
pub fn render_mesh(b: &MorphableBasis, c: &Coefficients, cam: &Camera, width: u32, height: u32) -> Result<MeshRender> {
    if width == 0 || height == 0 {
        return Err(Error::Parameter(format!(
            "render size {width}x{height} must be positive"
        )));
    }
    let cam = if (cam.width(), cam.height()) == (width, height) {
        cam.clone()
    } else {
        cam.with_resolution(width, height)?
    };
    let mesh = assemble_shape(b, c)?;
    render_assembled(&mesh, &b.triangles, &b.facial, &cam)
}

/// The expression-conditioning image: identity `alpha_s` with expression
/// `beta_t`, zero texture offset, seen from the frontal camera.
pub fn frontal_expression_render(
    b: &MorphableBasis,
    alpha_s: &[f64],
    beta_t: &[f64],
    c_front: &Camera,
    width: u32,
    height: u32,
) -> Result<MeshRender> {
    let coeffs = Coefficients {
        alpha: alpha_s.to_vec(),
        beta: beta_t.to_vec(),
        delta: vec![0.0; b.tex_dims],
    };
    render_mesh(b, &coeffs, c_front, width, height)
}

/// Neutral-expression render (`beta = 0`) with the given identity.
pub fn neutral_render(
    b: &MorphableBasis,
    alpha_s: &[f64],
    cam: &Camera,
    width: u32,
    height: u32,
) -> Result<MeshRender> {
    let coeffs = Coefficients {
        alpha: alpha_s.to_vec(),
        beta: vec![0.0; b.exp_dims],
        delta: vec![0.0; b.tex_dims],
    };
    render_mesh(b, &coeffs, cam, width, height)
}

mod synthetic {
    use std::collections::HashMap;

    use super::{BasisParts, MorphableBasis};

    const SUBDIVISIONS: usize = 3;
    const RADII: [f64; 3] = [0.42, 0.55, 0.48];

    fn icosphere() -> (Vec<[f64; 3]>, Vec<[u32; 3]>) {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<[f64; 3]> = vec![
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ];
        for v in verts.iter_mut() {
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            *v = [v[0] / n, v[1] / n, v[2] / n];
        }
        let mut faces: Vec<[u32; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..SUBDIVISIONS {
            let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
            let mut mid = |a: u32, b: u32, verts: &mut Vec<[f64; 3]>| -> u32 {
                let key = (a.min(b), a.max(b));
                *midpoints.entry(key).or_insert_with(|| {
                    let (p, q) = (verts[a as usize], verts[b as usize]);
                    let m = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0];
                    let n = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
                    verts.push([m[0] / n, m[1] / n, m[2] / n]);
                    (verts.len() - 1) as u32
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for [a, b, c] in faces {
                let ab = mid(a, b, &mut verts);
                let bc = mid(b, c, &mut verts);
                let ca = mid(c, a, &mut verts);
                next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
            }
            faces = next;
        }
        (verts, faces)
    }

    pub(super) fn head() -> MorphableBasis {
        let (unit, triangles) = icosphere();
        let v = unit.len();
        let n3 = 3 * v;
        let mut mean_shape = Vec::with_capacity(n3);
        let mut mean_texture = Vec::with_capacity(n3);
        let mut facial = Vec::with_capacity(v);
        let mut id = vec![0f32; n3 * 4];
        let mut exp = vec![0f32; n3 * 4];
        let mut tex = vec![0f32; n3 * 4];

        for (i, u) in unit.iter().enumerate() {
            let p = [u[0] * RADII[0], u[1] * RADII[1], u[2] * RADII[2]];
            mean_shape.extend(p.map(|x| x as f32));
            let front = u[2].max(0.0);
            let is_face = u[2] > 0.35 && u[1] < 0.75;
            facial.push(is_face);
            let shade = 0.75 + 0.25 * front;
            mean_texture.extend([0.85 * shade, 0.64 * shade, 0.52 * shade].map(|x| x as f32));

            let put = |basis: &mut Vec<f32>, k: usize, d: [f64; 3]| {
                for a in 0..3 {
                    basis[k * n3 + 3 * i + a] = d[a] as f32;
                }
            };
            // identity: width, height, depth, chin length
            put(&mut id, 0, [0.1 * p[0], 0.0, 0.0]);
            put(&mut id, 1, [0.0, 0.1 * p[1], 0.0]);
            put(&mut id, 2, [0.0, 0.0, 0.1 * p[2]]);
            put(&mut id, 3, [0.0, -0.08 * (-u[1]).max(0.0) * front, 0.0]);
            // expression: jaw open, smile, brow raise, cheek puff
            let lower = (-u[1]).max(0.0) * front;
            let upper = u[1].max(0.0) * front;
            put(&mut exp, 0, [0.0, -0.06 * lower, -0.02 * lower]);
            put(&mut exp, 1, [0.04 * u[0] * lower, 0.03 * lower * u[0].abs(), 0.0]);
            put(&mut exp, 2, [0.0, 0.04 * upper, 0.0]);
            put(&mut exp, 3, [0.03 * u[0] * front, 0.0, 0.03 * front]);
            // texture: tone, redness, vertical gradient, lateral gradient
            put(&mut tex, 0, [0.1, 0.1, 0.1]);
            put(&mut tex, 1, [0.1, -0.05, -0.05]);
            put(&mut tex, 2, [0.05 * u[1], 0.05 * u[1], 0.05 * u[1]]);
            put(&mut tex, 3, [0.05 * u[0], 0.0, -0.05 * u[0]]);
        }

        MorphableBasis::new(BasisParts {
            mean_shape,
            mean_texture,
            id_basis: id,
            exp_basis: exp,
            tex_basis: tex,
            id_dims: 4,
            exp_dims: 4,
            tex_dims: 4,
            triangles,
            facial,
        })
        .expect("synthetic basis is well formed")
    }
}
