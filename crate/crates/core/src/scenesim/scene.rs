use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Finite rectangular patch of a plane.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneFeature {
    pub anchor: Vec3,
    pub normal: Vec3,
    /// In-plane axis for the first half extent; orthogonal to `normal`.
    pub u_axis: Vec3,
    pub half_extents: [f64; 2],
}

impl PlaneFeature {
    pub fn new(anchor: Vec3, normal: Vec3, u_axis: Vec3, half_extents: [f64; 2]) -> Result<Self> {
        let n = normal
            .try_normalize(0.0)
            .ok_or_else(|| Error::param("plane normal must be non-zero"))?;
        // Gram-Schmidt so that u is exactly in-plane.
        let u = (u_axis - n * n.dot(&u_axis))
            .try_normalize(1e-12)
            .ok_or_else(|| Error::param("plane u_axis must not be parallel to the normal"))?;
        if !(half_extents[0] > 0.0 && half_extents[1] > 0.0) {
            return Err(Error::param("plane half_extents must be positive"));
        }
        Ok(Self {
            anchor,
            normal: n,
            u_axis: u,
            half_extents,
        })
    }

    pub fn v_axis(&self) -> Vec3 {
        self.normal.cross(&self.u_axis)
    }

    /// Signed distance of `p` to the infinite plane.
    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(&(p - self.anchor))
    }

    /// Euclidean distance from `p` to the finite rectangle.
    pub fn patch_distance(&self, p: &Vec3) -> f64 {
        let d = p - self.anchor;
        let du = (d.dot(&self.u_axis).abs() - self.half_extents[0]).max(0.0);
        let dv = (d.dot(&self.v_axis()).abs() - self.half_extents[1]).max(0.0);
        let dn = d.dot(&self.normal);
        (du * du + dv * dv + dn * dn).sqrt()
    }

    /// Ray parameter of the hit with the finite patch, if any.
    pub fn intersect(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = self.normal.dot(&(self.anchor - origin)) / denom;
        if t <= 0.0 {
            return None;
        }
        let d = origin + dir * t - self.anchor;
        let inside = d.dot(&self.u_axis).abs() <= self.half_extents[0]
            && d.dot(&self.v_axis()).abs() <= self.half_extents[1];
        inside.then_some(t)
    }
}

/// Finite line segment feature (room corners, wall junctions, poles).
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFeature {
    pub anchor: Vec3,
    pub direction: Vec3,
    pub half_length: f64,
}

impl EdgeFeature {
    pub fn new(anchor: Vec3, direction: Vec3, half_length: f64) -> Result<Self> {
        let direction = direction
            .try_normalize(0.0)
            .ok_or_else(|| Error::param("edge direction must be non-zero"))?;
        if !(half_length > 0.0) {
            return Err(Error::param("edge half_length must be positive"));
        }
        Ok(Self {
            anchor,
            direction,
            half_length,
        })
    }

    /// Distance from `p` to the infinite line.
    pub fn line_distance(&self, p: &Vec3) -> f64 {
        (p - self.anchor).cross(&self.direction).norm()
    }

    /// Distance from `p` to the finite segment.
    pub fn segment_distance(&self, p: &Vec3) -> f64 {
        let d = p - self.anchor;
        let s = d.dot(&self.direction).clamp(-self.half_length, self.half_length);
        (d - self.direction * s).norm()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] - 1e-9 && p[i] <= self.max[i] + 1e-9)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Plane,
    Edge,
}

impl SurfaceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SurfaceKind::Plane => "plane",
            SurfaceKind::Edge => "edge",
        }
    }
}

/// Index into [`Scene::planes`] or [`Scene::edges`], depending on `kind`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SurfaceId {
    pub kind: SurfaceKind,
    pub index: usize,
}

impl SurfaceId {
    pub fn plane(index: usize) -> Self {
        Self {
            kind: SurfaceKind::Plane,
            index,
        }
    }
    pub fn edge(index: usize) -> Self {
        Self {
            kind: SurfaceKind::Edge,
            index,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub planes: Vec<PlaneFeature>,
    pub edges: Vec<EdgeFeature>,
    pub extent: Aabb,
}

impl Scene {
    pub fn contains(&self, id: SurfaceId) -> bool {
        match id.kind {
            SurfaceKind::Plane => id.index < self.planes.len(),
            SurfaceKind::Edge => id.index < self.edges.len(),
        }
    }

    /// One row per surface. `dir_*` is the plane normal or the edge
    /// direction; edges leave the `u_*` and `half_v` columns empty.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "kind,index,anchor_x,anchor_y,anchor_z,dir_x,dir_y,dir_z,u_x,u_y,u_z,half_u,half_v")?;
        for (i, p) in self.planes.iter().enumerate() {
            let (a, n, u) = (p.anchor, p.normal, p.u_axis);
            writeln!(
                out,
                "plane,{i},{},{},{},{},{},{},{},{},{},{},{}",
                a.x, a.y, a.z, n.x, n.y, n.z, u.x, u.y, u.z, p.half_extents[0], p.half_extents[1]
            )?;
        }
        for (i, e) in self.edges.iter().enumerate() {
            let (a, d) = (e.anchor, e.direction);
            writeln!(out, "edge,{i},{},{},{},{},{},{},,,,{},", a.x, a.y, a.z, d.x, d.y, d.z, e.half_length)?;
        }
        Ok(())
    }
}

/// Scene description as it appears in configuration files. All lengths in
/// meters. Every scene lives in `x ∈ [0, length]`, `y ∈ [-width/2, width/2]`,
/// `z ∈ [0, height]` (open ground: a square of side `size` centered at the
/// origin).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SceneSpec {
    /// Two side walls and a floor along +x. The first `ribbed_length` meters
    /// carry wall pilasters whose side faces constrain motion along x.
    Corridor {
        length: f64,
        width: f64,
        height: f64,
        #[serde(default)]
        ribbed_length: f64,
        #[serde(default = "default_rib_spacing")]
        rib_spacing: f64,
        #[serde(default = "default_rib_depth")]
        rib_depth: f64,
        #[serde(default = "default_rib_width")]
        rib_width: f64,
        #[serde(default)]
        end_caps: bool,
    },
    /// Four walls (sides, floor, ceiling) forming an open-ended duct along +x.
    Tunnel { length: f64, width: f64, height: f64 },
    BoxRoom { length: f64, width: f64, height: f64 },
    OpenGround { size: f64 },
    /// Box room with a full-width partition at `wall_x` facing the start.
    WallApproach {
        length: f64,
        width: f64,
        height: f64,
        wall_x: f64,
    },
}

fn default_rib_spacing() -> f64 {
    2.5
}
fn default_rib_depth() -> f64 {
    0.25
}
fn default_rib_width() -> f64 {
    0.4
}

impl SceneSpec {
    pub fn corridor(length: f64, width: f64, height: f64) -> Self {
        SceneSpec::Corridor {
            length,
            width,
            height,
            ribbed_length: 0.0,
            rib_spacing: default_rib_spacing(),
            rib_depth: default_rib_depth(),
            rib_width: default_rib_width(),
            end_caps: false,
        }
    }

    pub fn box_room(length: f64, width: f64, height: f64) -> Self {
        SceneSpec::BoxRoom {
            length,
            width,
            height,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            SceneSpec::Corridor { .. } => "corridor",
            SceneSpec::Tunnel { .. } => "tunnel",
            SceneSpec::BoxRoom { .. } => "box_room",
            SceneSpec::OpenGround { .. } => "open_ground",
            SceneSpec::WallApproach { .. } => "wall_approach",
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!("scene.{name} must be positive, got {v}")))
    }
}

struct Builder {
    planes: Vec<PlaneFeature>,
    edges: Vec<EdgeFeature>,
}

impl Builder {
    fn plane(&mut self, anchor: [f64; 3], normal: [f64; 3], u: [f64; 3], half: [f64; 2]) -> Result<()> {
        self.planes.push(PlaneFeature::new(
            Vec3::from(anchor),
            Vec3::from(normal),
            Vec3::from(u),
            half,
        )?);
        Ok(())
    }

    fn edge(&mut self, anchor: [f64; 3], dir: [f64; 3], half_length: f64) -> Result<()> {
        self.edges
            .push(EdgeFeature::new(Vec3::from(anchor), Vec3::from(dir), half_length)?);
        Ok(())
    }

    /// Axis-aligned room interior: 6 inward-facing planes.
    fn room(&mut self, l: f64, w: f64, h: f64) -> Result<()> {
        let (hl, hw, hh) = (l / 2.0, w / 2.0, h / 2.0);
        self.plane([hl, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [hl, hw])?;
        self.plane([hl, 0.0, h], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [hl, hw])?;
        self.plane([hl, -hw, hh], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [hl, hh])?;
        self.plane([hl, hw, hh], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [hl, hh])?;
        self.plane([0.0, 0.0, hh], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [hw, hh])?;
        self.plane([l, 0.0, hh], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [hw, hh])?;
        Ok(())
    }

    fn vertical_corners(&mut self, x0: f64, x1: f64, w: f64, h: f64) -> Result<()> {
        let hw = w / 2.0;
        for (x, y) in [(x0, -hw), (x0, hw), (x1, -hw), (x1, hw)] {
            self.edge([x, y, h / 2.0], [0.0, 0.0, 1.0], h / 2.0)?;
        }
        Ok(())
    }
}

/// Builds one of the canonical test scenes.
pub fn build_scene(spec: &SceneSpec) -> Result<Scene> {
    let mut b = Builder {
        planes: Vec::new(),
        edges: Vec::new(),
    };
    let extent = match *spec {
        SceneSpec::Corridor {
            length,
            width,
            height,
            ribbed_length,
            rib_spacing,
            rib_depth,
            rib_width,
            end_caps,
        } => {
            positive("length", length)?;
            positive("width", width)?;
            positive("height", height)?;
            let (hl, hw, hh) = (length / 2.0, width / 2.0, height / 2.0);
            b.plane([hl, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [hl, hw])?;
            b.plane([hl, -hw, hh], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [hl, hh])?;
            b.plane([hl, hw, hh], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [hl, hh])?;
            // wall/floor junctions run along the corridor axis
            b.edge([hl, -hw, 0.0], [1.0, 0.0, 0.0], hl)?;
            b.edge([hl, hw, 0.0], [1.0, 0.0, 0.0], hl)?;
            if ribbed_length < 0.0 || ribbed_length > length {
                return Err(Error::param("scene.ribbed_length must lie in [0, length]"));
            }
            if ribbed_length > 0.0 {
                positive("rib_spacing", rib_spacing)?;
                positive("rib_depth", rib_depth)?;
                positive("rib_width", rib_width)?;
                if rib_depth >= hw || rib_width >= rib_spacing {
                    return Err(Error::param(
                        "scene ribs must be shallower than half the width and narrower than their spacing",
                    ));
                }
                add_ribs(&mut b, ribbed_length, hw, height, rib_spacing, rib_depth, rib_width)?;
            }
            if end_caps {
                b.plane([0.0, 0.0, hh], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [hw, hh])?;
                b.plane([length, 0.0, hh], [-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [hw, hh])?;
            }
            box_extent(length, width, height)
        }
        SceneSpec::Tunnel {
            length,
            width,
            height,
        } => {
            positive("length", length)?;
            positive("width", width)?;
            positive("height", height)?;
            let (hl, hw, hh) = (length / 2.0, width / 2.0, height / 2.0);
            b.plane([hl, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [hl, hw])?;
            b.plane([hl, 0.0, height], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [hl, hw])?;
            b.plane([hl, -hw, hh], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [hl, hh])?;
            b.plane([hl, hw, hh], [0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [hl, hh])?;
            box_extent(length, width, height)
        }
        SceneSpec::BoxRoom {
            length,
            width,
            height,
        } => {
            positive("length", length)?;
            positive("width", width)?;
            positive("height", height)?;
            b.room(length, width, height)?;
            b.vertical_corners(0.0, length, width, height)?;
            box_extent(length, width, height)
        }
        SceneSpec::OpenGround { size } => {
            positive("size", size)?;
            let h = size / 2.0;
            b.plane([0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [h, h])?;
            Aabb {
                min: Vec3::new(-h, -h, 0.0),
                max: Vec3::new(h, h, size),
            }
        }
        SceneSpec::WallApproach {
            length,
            width,
            height,
            wall_x,
        } => {
            positive("length", length)?;
            positive("width", width)?;
            positive("height", height)?;
            if !(wall_x > 0.0 && wall_x < length) {
                return Err(Error::param("scene.wall_x must lie strictly inside (0, length)"));
            }
            b.room(length, width, height)?;
            b.vertical_corners(0.0, length, width, height)?;
            b.plane(
                [wall_x, 0.0, height / 2.0],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [width / 2.0, height / 2.0],
            )?;
            Aabb {
                min: Vec3::new(0.0, -width / 2.0, 0.0),
                max: Vec3::new(wall_x, width / 2.0, height),
            }
        }
    };
    Ok(Scene {
        planes: b.planes,
        edges: b.edges,
        extent,
    })
}

fn box_extent(l: f64, w: f64, h: f64) -> Aabb {
    Aabb {
        min: Vec3::new(0.0, -w / 2.0, 0.0),
        max: Vec3::new(l, w / 2.0, h),
    }
}

/// Pilasters on both side walls at `x = spacing * (i + 1/2)`.
fn add_ribs(
    b: &mut Builder,
    ribbed_length: f64,
    hw: f64,
    height: f64,
    spacing: f64,
    depth: f64,
    rib_width: f64,
) -> Result<()> {
    let hh = height / 2.0;
    let half_w = rib_width / 2.0;
    let count = (ribbed_length / spacing).floor() as usize;
    for i in 0..count {
        let xc = spacing * (i as f64 + 0.5);
        for side in [-1.0, 1.0] {
            let face_y = side * (hw - depth);
            let mid_y = side * (hw - depth / 2.0);
            // front face, parallel to the wall
            b.plane([xc, face_y, hh], [0.0, -side, 0.0], [1.0, 0.0, 0.0], [half_w, hh])?;
            // side faces, normals along the corridor axis
            b.plane(
                [xc - half_w, mid_y, hh],
                [-1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [depth / 2.0, hh],
            )?;
            b.plane(
                [xc + half_w, mid_y, hh],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [depth / 2.0, hh],
            )?;
        }
    }
    Ok(())
}
