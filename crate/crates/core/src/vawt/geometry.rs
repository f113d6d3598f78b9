//! Blade curves, swept solids and binary STL.
//!
//! Mesh coordinates are centred on the shaft axis with `z = 0` at the bottom
//! of the lower plate.

use std::f64::consts::TAU;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{TurbineConstants, VawtGenome, Z1, Z2, ZX1, ZX2, ZY1, ZY2};
use crate::error::{Error, Result};

/// Samples per Bézier segment and blade layers used unless told otherwise.
/// Sweep validity is always judged at this sampling.
pub const DEFAULT_RESOLUTION: usize = 16;

/// Slack allowed on the plate radius when checking sweeps.
const DISC_TOLERANCE: f64 = 1e-9;

pub fn quadratic_bezier(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2], t: f64) -> [f64; 2] {
    let u = 1.0 - t;
    let (a, b, c) = (u * u, 2.0 * u * t, t * t);
    [a * p0[0] + b * p1[0] + c * p2[0], a * p0[1] + b * p1[1] + c * p2[1]]
}

pub fn cubic_bezier(c: [f64; 4], t: f64) -> f64 {
    let u = 1.0 - t;
    u * u * u * c[0] + 3.0 * u * u * t * c[1] + 3.0 * u * t * t * c[2] + t * t * t * c[3]
}

/// Point on profile segment `segment` (0 or 1) at parameter `t`, grid frame.
pub fn profile_point(g: &VawtGenome, segment: usize, t: f64) -> [f64; 2] {
    let k = 2 * segment;
    quadratic_bezier(g.point(k), g.point(k + 1), g.point(k + 2), t)
}

/// Both segments sampled at `samples` steps each; `2 * samples + 1` points
/// with the shared joint listed once.
pub fn blade_profile(g: &VawtGenome, samples: usize) -> Vec<[f64; 2]> {
    let n = samples.max(1);
    let mut pts = Vec::with_capacity(2 * n + 1);
    for seg in 0..2 {
        for i in 0..n {
            pts.push(profile_point(g, seg, i as f64 / n as f64));
        }
    }
    pts.push(g.point(4));
    pts
}

/// Curve parameter at which the height curve `(0, z1, z2, top)` reaches
/// `frac * top`.
fn height_parameter(z1: f64, z2: f64, top: f64, frac: f64) -> f64 {
    if frac <= 0.0 {
        return 0.0;
    }
    if frac >= 1.0 {
        return 1.0;
    }
    let target = frac * top;
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if cubic_bezier([0.0, z1, z2, top], mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Horizontal offset `(dx, dy)` of the profile at height fraction `frac` of
/// a stage.
pub fn z_offset(g: &VawtGenome, consts: &TurbineConstants, frac: f64) -> (f64, f64) {
    let t = height_parameter(g.genes[Z1], g.genes[Z2], consts.blade_height(), frac);
    let dx = cubic_bezier([0.0, g.genes[ZX1], g.genes[ZX2], 0.0], t);
    let dy = cubic_bezier([0.0, g.genes[ZY1], g.genes[ZY2], 0.0], t);
    (dx, dy)
}

fn rotate(p: [f64; 2], deg: f64) -> [f64; 2] {
    let (s, c) = deg.to_radians().sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

fn norm(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}

/// Closed outline of the blade wall, centred frame: the centreline followed
/// by the offset line in reverse. Returns the outline and the number of
/// centreline points.
fn blade_section(g: &VawtGenome, consts: &TurbineConstants, samples: usize) -> Result<(Vec<[f64; 2]>, usize)> {
    let r = consts.plate_radius();
    let centre: Vec<[f64; 2]> = blade_profile(g, samples)
        .into_iter()
        .map(|[x, y]| [x - r, y - r])
        .collect();
    let n = centre.len();
    let mut tangents: Vec<Option<[f64; 2]>> = (0..n)
        .map(|i| {
            let a = centre[i.saturating_sub(1)];
            let b = centre[(i + 1).min(n - 1)];
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = norm(d);
            (len > 1e-12).then(|| [d[0] / len, d[1] / len])
        })
        .collect();
    let Some(first) = tangents.iter().flatten().next().copied() else {
        return Err(Error::DegenerateGeometry("blade profile collapses to a point".into()));
    };
    let mut last = first;
    for t in tangents.iter_mut() {
        match t {
            Some(v) => last = *v,
            None => *t = Some(last),
        }
    }
    let w = consts.blade_thickness;
    let side = |sign: f64| -> Vec<[f64; 2]> {
        centre
            .iter()
            .zip(&tangents)
            .map(|(c, t)| {
                let t = t.expect("filled above");
                [c[0] - sign * w * t[1], c[1] + sign * w * t[0]]
            })
            .collect()
    };
    let reach = |pts: &[[f64; 2]]| pts.iter().map(|p| norm(*p)).fold(0.0, f64::max);
    let (left, right) = (side(1.0), side(-1.0));
    let wall = if reach(&right) < reach(&left) { right } else { left };
    let mut outline = centre;
    outline.extend(wall.into_iter().rev());
    Ok((outline, n))
}

/// Blade outline at every layer of one stage, before the per-blade
/// rotation. Layer `j` sits at height fraction `j / layers`.
fn blade_layers(g: &VawtGenome, consts: &TurbineConstants, resolution: usize) -> Result<(Vec<Vec<[f64; 2]>>, usize)> {
    let (outline, n) = blade_section(g, consts, resolution)?;
    let layers = resolution.max(1);
    let rings = (0..=layers)
        .map(|j| {
            let frac = j as f64 / layers as f64;
            let (dx, dy) = z_offset(g, consts, frac);
            let twist = g.twist() * frac;
            outline
                .iter()
                .map(|p| rotate([p[0] + dx, p[1] + dy], twist))
                .collect()
        })
        .collect();
    Ok((rings, n))
}

/// Rejects designs whose swept blade leaves the plate disc.
pub fn check_sweep(g: &VawtGenome, consts: &TurbineConstants) -> Result<()> {
    let (rings, _) = blade_layers(g, consts, DEFAULT_RESOLUTION)?;
    let r = consts.plate_radius();
    let worst = rings.iter().flatten().map(|p| norm(*p)).fold(0.0, f64::max);
    if worst > r + DISC_TOLERANCE {
        return Err(Error::OutOfDisc(format!(
            "swept blade reaches {worst:.3} mm from the axis; plate radius is {r} mm"
        )));
    }
    Ok(())
}

/// Closed triangle shell with its own vertex list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Shell {
    pub name: String,
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[u32; 3]>,
}

impl Shell {
    fn named(name: impl Into<String>) -> Self {
        Shell {
            name: name.into(),
            ..Shell::default()
        }
    }

    fn vertex(&mut self, p: [f64; 3]) -> u32 {
        self.vertices.push(p);
        (self.vertices.len() - 1) as u32
    }

    fn quad(&mut self, a: u32, b: u32, c: u32, d: u32) {
        self.triangles.push([a, b, c]);
        self.triangles.push([a, c, d]);
    }

    fn flip(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    pub fn triangle(&self, i: usize) -> [[f64; 3]; 3] {
        self.triangles[i].map(|v| self.vertices[v as usize])
    }

    /// Signed volume; positive when faces point outwards.
    pub fn volume(&self) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle(i);
                a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0])
            })
            .sum::<f64>()
            / 6.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mesh {
    pub shells: Vec<Shell>,
}

impl Mesh {
    pub fn triangle_count(&self) -> usize {
        self.shells.iter().map(|s| s.triangles.len()).sum()
    }

    pub fn triangles(&self) -> impl Iterator<Item = [[f64; 3]; 3]> + '_ {
        self.shells
            .iter()
            .flat_map(|s| (0..s.triangles.len()).map(move |i| s.triangle(i)))
    }

    /// Sum of shell volumes in mm³; overlaps are counted twice.
    pub fn volume(&self) -> f64 {
        self.shells.iter().map(Shell::volume).sum()
    }

    /// Largest distance of any vertex from the z-axis.
    pub fn max_radius(&self) -> f64 {
        self.shells
            .iter()
            .flat_map(|s| &s.vertices)
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max)
    }

    pub fn z_range(&self) -> (f64, f64) {
        self.shells
            .iter()
            .flat_map(|s| &s.vertices)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[2]), hi.max(v[2])))
    }
}

fn ring(shell: &mut Shell, radius: f64, z: f64, segments: usize) -> Vec<u32> {
    (0..segments)
        .map(|i| {
            let a = TAU * i as f64 / segments as f64;
            shell.vertex([radius * a.cos(), radius * a.sin(), z])
        })
        .collect()
}

fn disc(name: &str, radius: f64, z0: f64, z1: f64, segments: usize) -> Shell {
    let mut s = Shell::named(name);
    let bottom_centre = s.vertex([0.0, 0.0, z0]);
    let top_centre = s.vertex([0.0, 0.0, z1]);
    let b = ring(&mut s, radius, z0, segments);
    let t = ring(&mut s, radius, z1, segments);
    for i in 0..segments {
        let j = (i + 1) % segments;
        s.triangles.push([bottom_centre, b[j], b[i]]);
        s.triangles.push([top_centre, t[i], t[j]]);
        s.quad(b[i], b[j], t[j], t[i]);
    }
    s
}

fn tube(name: &str, inner: f64, outer: f64, z0: f64, z1: f64, segments: usize) -> Shell {
    if inner <= 0.0 {
        return disc(name, outer, z0, z1, segments);
    }
    let mut s = Shell::named(name);
    let ob = ring(&mut s, outer, z0, segments);
    let ot = ring(&mut s, outer, z1, segments);
    let ib = ring(&mut s, inner, z0, segments);
    let it = ring(&mut s, inner, z1, segments);
    for i in 0..segments {
        let j = (i + 1) % segments;
        s.quad(ob[i], ob[j], ot[j], ot[i]);
        s.quad(ib[i], it[i], it[j], ib[j]);
        s.quad(ot[i], ot[j], it[j], it[i]);
        s.quad(ob[i], ib[i], ib[j], ob[j]);
    }
    s
}

fn signed_area(pts: &[[f64; 2]]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn blade_shell(name: String, rings: &[Vec<[f64; 2]>], n: usize, spin: f64, z0: f64, height: f64) -> Shell {
    let mut s = Shell::named(name);
    let layers = rings.len() - 1;
    let width = rings[0].len();
    for (j, ring) in rings.iter().enumerate() {
        let z = z0 + height * j as f64 / layers as f64;
        for p in ring {
            let [x, y] = rotate(*p, spin);
            s.vertex([x, y, z]);
        }
    }
    let at = |j: usize, i: usize| (j * width + i) as u32;
    for j in 0..layers {
        for i in 0..width {
            let k = (i + 1) % width;
            s.quad(at(j, i), at(j, k), at(j + 1, k), at(j + 1, i));
        }
    }
    // caps: strip of quads between the centreline and its offset
    for i in 0..n - 1 {
        let (c0, c1) = (i, i + 1);
        let (o1, o0) = (width - 1 - (i + 1), width - 1 - i);
        s.quad(at(layers, c0), at(layers, c1), at(layers, o1), at(layers, o0));
        s.quad(at(0, c0), at(0, o0), at(0, o1), at(0, c1));
    }
    if signed_area(&rings[0]) < 0.0 {
        s.flip();
    }
    s
}

/// Plates, hollow shaft and every blade as separate closed shells.
pub fn build_turbine(g: &VawtGenome, consts: &TurbineConstants, resolution: usize) -> Result<Mesh> {
    consts.validate()?;
    g.validate(consts)?;
    check_sweep(g, consts)?;
    let (rings, n) = blade_layers(g, consts, resolution)?;
    let segments = 4 * resolution.max(4);
    let r = consts.plate_radius();
    let mut shells = Vec::new();
    for p in 0..=consts.stages {
        let z0 = p as f64 * (consts.blade_height() + consts.plate_thickness);
        shells.push(disc(&format!("plate{p}"), r, z0, z0 + consts.plate_thickness, segments));
    }
    let inner = consts.shaft_hollow_diameter / 2.0;
    shells.push(tube("shaft", inner, inner + consts.shaft_thickness, 0.0, consts.shaft_height, segments));
    let per_blade = 360.0 / consts.blades_per_stage as f64;
    for stage in 0..consts.stages {
        for blade in 0..consts.blades_per_stage {
            let spin = stage as f64 * consts.stage_rotation + blade as f64 * per_blade;
            shells.push(blade_shell(
                format!("stage{stage}_blade{blade}"),
                &rings,
                n,
                spin,
                consts.stage_base(stage),
                consts.blade_height(),
            ));
        }
    }
    Ok(Mesh { shells })
}

fn facet_normal(t: &[[f64; 3]; 3]) -> [f64; 3] {
    let u = [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]];
    let v = [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]];
    let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if len > 0.0 {
        n.map(|c| c / len)
    } else {
        [0.0; 3]
    }
}

/// Binary STL: 80-byte header, little-endian count, 50 bytes per facet.
pub fn write_stl<W: Write>(mesh: &Mesh, out: &mut W) -> std::io::Result<()> {
    let mut header = [b' '; 80];
    let tag = b"binary STL written by scgalab";
    header[..tag.len()].copy_from_slice(tag);
    out.write_all(&header)?;
    out.write_all(&(mesh.triangle_count() as u32).to_le_bytes())?;
    for t in mesh.triangles() {
        for c in facet_normal(&t) {
            out.write_all(&(c as f32).to_le_bytes())?;
        }
        for v in t {
            for c in v {
                out.write_all(&(c as f32).to_le_bytes())?;
            }
        }
        out.write_all(&0u16.to_le_bytes())?;
    }
    Ok(())
}

pub fn export_stl(mesh: &Mesh, path: &Path) -> Result<()> {
    if mesh.triangle_count() == 0 {
        return Err(Error::DegenerateGeometry("refusing to write an empty mesh".into()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_stl(mesh, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Facets of a binary STL as `[normal, v0, v1, v2]`.
pub fn read_stl(path: &Path) -> Result<Vec<[[f32; 3]; 4]>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let bad = |m: String| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        field: "stl".into(),
        message: m,
    };
    if bytes.len() < 84 {
        return Err(bad(format!("{} bytes is too short for a binary STL", bytes.len())));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().expect("4 bytes")) as usize;
    if bytes.len() != 84 + 50 * count {
        return Err(bad(format!("header announces {count} facets but file has {} bytes", bytes.len())));
    }
    let f = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    Ok((0..count)
        .map(|k| {
            let base = 84 + 50 * k;
            std::array::from_fn(|r| std::array::from_fn(|c| f(base + 12 * r + 4 * c)))
        })
        .collect())
}
