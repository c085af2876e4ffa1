//! Conforming triangular meshes with full edge topology, newest-vertex
//! bisection refinement and Dörfler marking.
//!
//! Conventions:
//! - triangles are counter-clockwise; local edge `i` is opposite local
//!   vertex `i` (edge 0 = (v1,v2), edge 1 = (v2,v0), edge 2 = (v0,v1));
//! - the newest vertex of every triangle is local vertex 2, so the
//!   refinement edge is always local edge 2;
//! - interior edges are stored with ascending global vertex ids; boundary
//!   edges are stored in the traversal order of their unique triangle so
//!   that `n_F` is outward to the domain;
//! - `n_F` is the 90-degree clockwise rotation of the unit vector from the
//!   stored start vertex to the stored end vertex, so `t_F = (-n_2, n_1)`
//!   points from `s_F` to `e_F`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::{FemError, Result};

pub const DEFAULT_MIN_ANGLE_DEG: f64 = 15.0;
const CLOSURE_CAP: usize = 10_000;

/// Boundary condition carried by a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bc {
    Dirichlet,
    Neumann,
}

/// Classification of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Dirichlet,
    Neumann,
}

/// How boundary edges get their tags during topology construction.
pub enum BoundarySpec<'a> {
    AllDirichlet,
    /// Sorted vertex pair -> tag. Every boundary edge must be present.
    ByPair(&'a HashMap<(usize, usize), Bc>),
    /// Tag from the edge midpoint.
    ByMidpoint(&'a dyn Fn([f64; 2]) -> Bc),
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    /// CCW vertex triples; local vertex 2 is the newest vertex.
    pub triangles: Vec<[usize; 3]>,
    /// Stored edges (start, end); see module docs for orientation.
    pub edges: Vec<[usize; 2]>,
    /// Per triangle: the ids of its three local edges.
    pub edge_of_triangle: Vec<[usize; 3]>,
    /// Per triangle and local edge: true iff the triangle's CCW traversal
    /// of the edge matches the stored direction, i.e. mu_K(F) = +1.
    pub edge_orient: Vec<[bool; 3]>,
    /// Per edge: (K_F^-, Some(K_F^+) for interior edges).
    pub elements_of_edge: Vec<(usize, Option<usize>)>,
    pub edge_kind: Vec<EdgeKind>,
    pub subdomain_id: Vec<usize>,
    pub min_angle_floor_deg: f64,
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn norm(a: [f64; 2]) -> f64 {
    dot(a, a).sqrt()
}

pub fn signed_area(v: &[[f64; 2]; 3]) -> f64 {
    0.5 * cross(sub(v[1], v[0]), sub(v[2], v[0]))
}

fn min_angle_deg(v: &[[f64; 2]; 3]) -> f64 {
    let mut best = f64::MAX;
    for i in 0..3 {
        let a = sub(v[(i + 1) % 3], v[i]);
        let b = sub(v[(i + 2) % 3], v[i]);
        let ang = (dot(a, b) / (norm(a) * norm(b))).clamp(-1.0, 1.0).acos();
        best = best.min(ang.to_degrees());
    }
    best
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn tri_vertices(&self, k: usize) -> [[f64; 2]; 3] {
        let t = self.triangles[k];
        [
            self.vertices[t[0]],
            self.vertices[t[1]],
            self.vertices[t[2]],
        ]
    }

    pub fn area(&self, k: usize) -> f64 {
        signed_area(&self.tri_vertices(k))
    }

    pub fn centroid(&self, k: usize) -> [f64; 2] {
        let v = self.tri_vertices(k);
        [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ]
    }

    /// Element diameter (longest edge).
    pub fn diameter(&self, k: usize) -> f64 {
        let v = self.tri_vertices(k);
        let mut h: f64 = 0.0;
        for i in 0..3 {
            h = h.max(norm(sub(v[(i + 1) % 3], v[i])));
        }
        h
    }

    /// The newest vertex (global id) used by bisection.
    pub fn refinement_vertex(&self, k: usize) -> usize {
        self.triangles[k][2]
    }

    pub fn edge_len(&self, f: usize) -> f64 {
        let [a, b] = self.edges[f];
        norm(sub(self.vertices[b], self.vertices[a]))
    }

    /// Start point s_F of the stored edge.
    pub fn edge_start(&self, f: usize) -> [f64; 2] {
        self.vertices[self.edges[f][0]]
    }

    /// End point e_F of the stored edge.
    pub fn edge_end(&self, f: usize) -> [f64; 2] {
        self.vertices[self.edges[f][1]]
    }

    /// Unit tangent t_F from s_F to e_F.
    pub fn edge_tangent(&self, f: usize) -> [f64; 2] {
        let d = sub(self.edge_end(f), self.edge_start(f));
        let h = norm(d);
        [d[0] / h, d[1] / h]
    }

    /// Unit normal n_F; t_F = (-n_2, n_1).
    pub fn edge_normal(&self, f: usize) -> [f64; 2] {
        let t = self.edge_tangent(f);
        [t[1], -t[0]]
    }

    pub fn edge_midpoint(&self, f: usize) -> [f64; 2] {
        let s = self.edge_start(f);
        let e = self.edge_end(f);
        [0.5 * (s[0] + e[0]), 0.5 * (s[1] + e[1])]
    }

    pub fn is_boundary_edge(&self, f: usize) -> bool {
        self.elements_of_edge[f].1.is_none()
    }

    /// Local index (0..3) of edge `f` within element `k`.
    pub fn local_edge_index(&self, k: usize, f: usize) -> Result<usize> {
        self.edge_of_triangle[k]
            .iter()
            .position(|&e| e == f)
            .ok_or(FemError::EdgeNotOnElement { element: k, edge: f })
    }

    /// mu_K(F): +1 iff the outward normal of K on F equals n_F.
    pub fn sign_mu(&self, k: usize, f: usize) -> Result<i32> {
        let le = self.local_edge_index(k, f)?;
        Ok(if self.edge_orient[k][le] { 1 } else { -1 })
    }

    /// chi_F(F'): +1 if the shared vertex is e_{F'}, -1 if it is s_{F'}.
    pub fn sign_chi(&self, f: usize, f_prime: usize) -> Result<i32> {
        if f == f_prime {
            return Err(FemError::EdgesNotAdjacent {
                f,
                f_prime,
            });
        }
        let (km, kp) = self.elements_of_edge[f];
        let adjacent = self.edge_of_triangle[km].contains(&f_prime)
            || kp.map(|k| self.edge_of_triangle[k].contains(&f_prime)) == Some(true);
        if !adjacent {
            return Err(FemError::EdgesNotAdjacent { f, f_prime });
        }
        let [a, b] = self.edges[f];
        let [s, e] = self.edges[f_prime];
        let shares_s = s == a || s == b;
        let shares_e = e == a || e == b;
        match (shares_s, shares_e) {
            (false, true) => Ok(1),
            (true, false) => Ok(-1),
            _ => Err(FemError::EdgesNotAdjacent { f, f_prime }),
        }
    }

    /// Edges by kind.
    pub fn edges_of_kind(&self, kind: EdgeKind) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_edges()).filter(move |&f| self.edge_kind[f] == kind)
    }

    pub fn has_dirichlet_boundary(&self) -> bool {
        self.edge_kind.iter().any(|&k| k == EdgeKind::Dirichlet)
    }

    /// FNV-1a checksum of the full mesh data, used to pair dumped artifacts.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        feed(&(self.vertices.len() as u64).to_le_bytes());
        feed(&(self.triangles.len() as u64).to_le_bytes());
        for v in &self.vertices {
            feed(&v[0].to_bits().to_le_bytes());
            feed(&v[1].to_bits().to_le_bytes());
        }
        for (t, &s) in self.triangles.iter().zip(&self.subdomain_id) {
            for &i in t {
                feed(&(i as u64).to_le_bytes());
            }
            feed(&(s as u64).to_le_bytes());
        }
        for (e, k) in self.edges.iter().zip(&self.edge_kind) {
            feed(&(e[0] as u64).to_le_bytes());
            feed(&(e[1] as u64).to_le_bytes());
            feed(&[match k {
                EdgeKind::Interior => 0u8,
                EdgeKind::Dirichlet => 1,
                EdgeKind::Neumann => 2,
            }]);
        }
        h
    }
}

/// Raw triangle input for topology construction.
#[derive(Debug, Clone, Copy)]
pub struct RawTriangle {
    pub vertices: [usize; 3],
    pub subdomain: usize,
}

pub fn build_topology(
    vertices: Vec<[f64; 2]>,
    raw: Vec<RawTriangle>,
    spec: &BoundarySpec,
) -> Result<Mesh> {
    build_topology_with(vertices, raw, spec, DEFAULT_MIN_ANGLE_DEG)
}

pub fn build_topology_with(
    vertices: Vec<[f64; 2]>,
    raw: Vec<RawTriangle>,
    spec: &BoundarySpec,
    min_angle_floor_deg: f64,
) -> Result<Mesh> {
    build_impl(vertices, raw, spec, min_angle_floor_deg, true, true)
}

fn build_impl(
    vertices: Vec<[f64; 2]>,
    raw: Vec<RawTriangle>,
    spec: &BoundarySpec,
    min_angle_floor_deg: f64,
    retag_newest_vertex: bool,
    check_hanging: bool,
) -> Result<Mesh> {
    let nv = vertices.len();
    let mut triangles = Vec::with_capacity(raw.len());
    let mut subdomain_id = Vec::with_capacity(raw.len());
    for (ti, rt) in raw.iter().enumerate() {
        for &i in &rt.vertices {
            if i >= nv {
                return Err(FemError::BadVertexIndex { tri: ti, index: i });
            }
        }
        let mut t = rt.vertices;
        let v = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
        if signed_area(&v) <= 0.0 {
            return Err(FemError::BadOrientation { tri: ti });
        }
        let ang = min_angle_deg(&v);
        if ang < min_angle_floor_deg {
            return Err(FemError::MinAngle {
                tri: ti,
                angle_deg: ang,
                floor_deg: min_angle_floor_deg,
            });
        }
        if retag_newest_vertex {
            // rotate so the vertex opposite the longest edge is local 2
            let mut lens = [0.0; 3];
            for i in 0..3 {
                lens[i] = norm(sub(
                    vertices[t[(i + 2) % 3]],
                    vertices[t[(i + 1) % 3]],
                ));
            }
            let mut peak = 0;
            for i in 1..3 {
                if lens[i] > lens[peak] {
                    peak = i;
                }
            }
            t.rotate_left((peak + 1) % 3);
        }
        triangles.push(t);
        subdomain_id.push(rt.subdomain);
    }

    // edge table
    let mut edge_map: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut incident: Vec<Vec<(usize, usize, bool)>> = Vec::new(); // (tri, local, forward)
    let mut edge_of_triangle = vec![[usize::MAX; 3]; triangles.len()];
    for (ti, t) in triangles.iter().enumerate() {
        for le in 0..3 {
            let a = t[(le + 1) % 3];
            let b = t[(le + 2) % 3];
            let key = (a.min(b), a.max(b));
            let eid = *edge_map.entry(key).or_insert_with(|| {
                edges.push([key.0, key.1]);
                incident.push(Vec::new());
                edges.len() - 1
            });
            incident[eid].push((ti, le, a == key.0));
            edge_of_triangle[ti][le] = eid;
        }
    }
    for (eid, inc) in incident.iter().enumerate() {
        if inc.len() > 2 {
            let [a, b] = edges[eid];
            return Err(FemError::OverSharedEdge { a, b });
        }
        if inc.len() == 2 && inc[0].2 == inc[1].2 {
            return Err(FemError::BadOrientation { tri: inc[1].0 });
        }
    }

    // boundary orientation: flip stored edge so the single triangle traverses
    // it forward, making n_F outward
    for (eid, inc) in incident.iter_mut().enumerate() {
        if inc.len() == 1 && !inc[0].2 {
            edges[eid].swap(0, 1);
            inc[0].2 = true;
        }
    }

    if check_hanging {
        // a vertex strictly inside a boundary segment means a hanging node
        for (eid, inc) in incident.iter().enumerate() {
            if inc.len() != 1 {
                continue;
            }
            let [a, b] = edges[eid];
            let pa = vertices[a];
            let pb = vertices[b];
            let d = sub(pb, pa);
            let h2 = dot(d, d);
            for (vi, &p) in vertices.iter().enumerate() {
                if vi == a || vi == b {
                    continue;
                }
                let t = dot(sub(p, pa), d) / h2;
                if t > 1e-9 && t < 1.0 - 1e-9 {
                    let proj = [pa[0] + t * d[0], pa[1] + t * d[1]];
                    if norm(sub(p, proj)) < 1e-9 * h2.sqrt() {
                        return Err(FemError::HangingVertex { vertex: vi, a, b });
                    }
                }
            }
        }
    }

    let mut elements_of_edge = Vec::with_capacity(edges.len());
    let mut edge_kind = vec![EdgeKind::Interior; edges.len()];
    let mut edge_orient = vec![[false; 3]; triangles.len()];
    for (eid, inc) in incident.iter().enumerate() {
        for &(ti, le, fwd) in inc {
            edge_orient[ti][le] = fwd;
        }
        let minus = inc
            .iter()
            .find(|&&(_, _, fwd)| fwd)
            .expect("every edge has a forward-traversing triangle")
            .0;
        let plus = inc.iter().find(|&&(_, _, fwd)| !fwd).map(|&(ti, _, _)| ti);
        elements_of_edge.push((minus, plus));
        if inc.len() == 1 {
            let bc = match spec {
                BoundarySpec::AllDirichlet => Bc::Dirichlet,
                BoundarySpec::ByPair(map) => {
                    let [a, b] = edges[eid];
                    let key = (a.min(b), a.max(b));
                    *map.get(&key).ok_or_else(|| FemError::Parse {
                        what: "boundary spec",
                        detail: format!("boundary edge ({a}, {b}) has no tag"),
                    })?
                }
                BoundarySpec::ByMidpoint(f) => {
                    let [a, b] = edges[eid];
                    f([
                        0.5 * (vertices[a][0] + vertices[b][0]),
                        0.5 * (vertices[a][1] + vertices[b][1]),
                    ])
                }
            };
            edge_kind[eid] = match bc {
                Bc::Dirichlet => EdgeKind::Dirichlet,
                Bc::Neumann => EdgeKind::Neumann,
            };
        }
    }

    Ok(Mesh {
        vertices,
        triangles,
        edges,
        edge_of_triangle,
        edge_orient,
        elements_of_edge,
        edge_kind,
        subdomain_id,
        min_angle_floor_deg,
    })
}

// ---------------------------------------------------------------------------
// newest-vertex bisection

struct RefineState {
    vertices: Vec<[f64; 2]>,
    tris: Vec<[usize; 3]>,
    subdomain: Vec<usize>,
    alive: Vec<bool>,
    /// sorted vertex pair -> alive triangles on that edge
    adjacency: HashMap<(usize, usize), Vec<usize>>,
    midpoint: HashMap<(usize, usize), usize>,
    boundary: HashMap<(usize, usize), Bc>,
}

impl RefineState {
    fn key(a: usize, b: usize) -> (usize, usize) {
        (a.min(b), a.max(b))
    }

    fn neighbor_on(&self, t: usize, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(&Self::key(a, b))
            .and_then(|v| v.iter().copied().find(|&o| o != t && self.alive[o]))
    }

    fn detach(&mut self, t: usize) {
        let tri = self.tris[t];
        for le in 0..3 {
            let key = Self::key(tri[(le + 1) % 3], tri[(le + 2) % 3]);
            if let Some(v) = self.adjacency.get_mut(&key) {
                v.retain(|&o| o != t);
            }
        }
        self.alive[t] = false;
    }

    fn attach(&mut self, tri: [usize; 3], subdomain: usize) -> usize {
        let id = self.tris.len();
        self.tris.push(tri);
        self.subdomain.push(subdomain);
        self.alive.push(true);
        for le in 0..3 {
            let key = Self::key(tri[(le + 1) % 3], tri[(le + 2) % 3]);
            self.adjacency.entry(key).or_default().push(id);
        }
        id
    }

    fn midpoint_of(&mut self, a: usize, b: usize) -> usize {
        let key = Self::key(a, b);
        if let Some(&m) = self.midpoint.get(&key) {
            return m;
        }
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let m = self.vertices.len();
        self.vertices
            .push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        self.midpoint.insert(key, m);
        // split the boundary tag if the parent edge was on the boundary
        if let Some(bc) = self.boundary.remove(&key) {
            self.boundary.insert(Self::key(a, m), bc);
            self.boundary.insert(Self::key(m, b), bc);
        }
        m
    }

    /// Split one triangle at the midpoint of its refinement edge (v0, v1).
    /// Children keep CCW order with the new peak at local index 2.
    fn split(&mut self, t: usize) {
        let [v0, v1, v2] = self.tris[t];
        let sd = self.subdomain[t];
        let m = self.midpoint_of(v0, v1);
        self.detach(t);
        self.attach([v2, v0, m], sd);
        self.attach([v1, v2, m], sd);
    }

    /// Refinement edge of `t` is (v0, v1); returns true when the neighbor
    /// across that edge (if any) shares it as its own refinement edge.
    fn bisect(&mut self, t: usize, depth: usize) -> Result<()> {
        if depth > CLOSURE_CAP {
            return Err(FemError::ClosureOverflow { cap: CLOSURE_CAP });
        }
        if !self.alive[t] {
            return Ok(());
        }
        loop {
            let [v0, v1, _] = self.tris[t];
            match self.neighbor_on(t, v0, v1) {
                None => break,
                Some(n) => {
                    let [n0, n1, _] = self.tris[n];
                    if Self::key(n0, n1) == Self::key(v0, v1) {
                        self.split(t);
                        self.split(n);
                        return Ok(());
                    }
                    self.bisect(n, depth + 1)?;
                }
            }
        }
        self.split(t);
        Ok(())
    }
}

/// Newest-vertex bisection of every marked element plus conformity closure.
pub fn refine(mesh: &Mesh, marked: &[usize]) -> Result<Mesh> {
    let mut boundary = HashMap::new();
    for f in 0..mesh.n_edges() {
        let bc = match mesh.edge_kind[f] {
            EdgeKind::Interior => continue,
            EdgeKind::Dirichlet => Bc::Dirichlet,
            EdgeKind::Neumann => Bc::Neumann,
        };
        let [a, b] = mesh.edges[f];
        boundary.insert(RefineState::key(a, b), bc);
    }
    let mut adjacency: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (ti, t) in mesh.triangles.iter().enumerate() {
        for le in 0..3 {
            let key = RefineState::key(t[(le + 1) % 3], t[(le + 2) % 3]);
            adjacency.entry(key).or_default().push(ti);
        }
    }
    let mut st = RefineState {
        vertices: mesh.vertices.clone(),
        tris: mesh.triangles.clone(),
        subdomain: mesh.subdomain_id.clone(),
        alive: vec![true; mesh.n_triangles()],
        adjacency,
        midpoint: HashMap::new(),
        boundary,
    };
    let mut marked = marked.to_vec();
    marked.sort_unstable();
    marked.dedup();
    for &k in &marked {
        if k >= mesh.n_triangles() {
            return Err(FemError::Invalid(format!(
                "marked element {k} out of range"
            )));
        }
        if st.alive[k] {
            st.bisect(k, 0)?;
        }
    }
    let raw: Vec<RawTriangle> = st
        .tris
        .iter()
        .zip(&st.subdomain)
        .zip(&st.alive)
        .filter(|&(_, &alive)| alive)
        .map(|((t, &s), _)| RawTriangle {
            vertices: *t,
            subdomain: s,
        })
        .collect();
    build_impl(
        st.vertices,
        raw,
        &BoundarySpec::ByPair(&st.boundary),
        mesh.min_angle_floor_deg,
        false,
        false,
    )
}

/// Dörfler (bulk) marking: minimal-cardinality set with
/// sum_{K in M} eta_K^2 >= theta * sum_K eta_K^2.
/// Greedy by descending indicator, ties broken by element id.
pub fn dorfler_mark(indicators: &[f64], theta: f64) -> Vec<usize> {
    assert!(theta > 0.0 && theta < 1.0, "theta must be in (0, 1)");
    let total: f64 = indicators.iter().map(|e| e * e).sum();
    if total == 0.0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..indicators.len()).collect();
    order.sort_by(|&a, &b| {
        indicators[b]
            .partial_cmp(&indicators[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let mut acc = 0.0;
    let mut marked = Vec::new();
    for k in order {
        if acc >= theta * total {
            break;
        }
        if indicators[k] == 0.0 {
            break;
        }
        acc += indicators[k] * indicators[k];
        marked.push(k);
    }
    marked.sort_unstable();
    marked
}

// ---------------------------------------------------------------------------
// mesh generators

pub mod generators {
    use super::*;

    /// Single reference triangle (0,0), (1,0), (0,1).
    pub fn reference_triangle() -> Mesh {
        build_topology(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![RawTriangle {
                vertices: [0, 1, 2],
                subdomain: 0,
            }],
            &BoundarySpec::AllDirichlet,
        )
        .expect("reference triangle")
    }

    /// Unit square split along the (0,0)-(1,1) diagonal.
    pub fn unit_square_two() -> Mesh {
        build_topology(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![
                RawTriangle {
                    vertices: [0, 1, 2],
                    subdomain: 0,
                },
                RawTriangle {
                    vertices: [0, 2, 3],
                    subdomain: 0,
                },
            ],
            &BoundarySpec::AllDirichlet,
        )
        .expect("unit square")
    }

    /// Two-triangle mesh of (-1,1) x (0,1) split along the x = 0 interface?
    /// No: two triangles of the square (-1,1)^2 is not interface aligned;
    /// this builds (-1,0,1) strip meshes elsewhere. Kept here: a square
    /// [0,1]^2 with a vertical subdomain interface is not representable with
    /// two triangles, so interface tests use `square_interface`.
    ///
    /// N x N criss-cross mesh of (-1,1)^2 (N even): each cell is split into
    /// four triangles through its center; subdomain id is the quadrant
    /// (0: x>0,y>0; 1: x<0,y>0; 2: x<0,y<0; 3: x>0,y<0).
    pub fn criss_cross(n: usize) -> Mesh {
        assert!(n >= 2 && n % 2 == 0, "criss-cross needs even N");
        let mut vertices = Vec::new();
        let mut grid = vec![vec![0usize; n + 1]; n + 1];
        let coord = |i: usize| -1.0 + 2.0 * i as f64 / n as f64;
        for (j, row) in grid.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = vertices.len();
                vertices.push([coord(i), coord(j)]);
            }
        }
        let mut raw = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let c = vertices.len();
                let cx = 0.5 * (coord(i) + coord(i + 1));
                let cy = 0.5 * (coord(j) + coord(j + 1));
                vertices.push([cx, cy]);
                let quad = match (cx > 0.0, cy > 0.0) {
                    (true, true) => 0,
                    (false, true) => 1,
                    (false, false) => 2,
                    (true, false) => 3,
                };
                let v00 = grid[j][i];
                let v10 = grid[j][i + 1];
                let v11 = grid[j + 1][i + 1];
                let v01 = grid[j + 1][i];
                for quadtri in [[v00, v10, c], [v10, v11, c], [v11, v01, c], [v01, v00, c]] {
                    raw.push(RawTriangle {
                        vertices: quadtri,
                        subdomain: quad,
                    });
                }
            }
        }
        build_topology(vertices, raw, &BoundarySpec::AllDirichlet).expect("criss-cross mesh")
    }

    /// Six-triangle fan of the L-shaped domain (-1,1)^2 \ [0,1]x[-1,0],
    /// fanned around the reentrant corner at the origin.
    pub fn lshape_fan() -> Mesh {
        let vertices = vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [1.0, 1.0],
            [0.0, 1.0],
            [-1.0, 1.0],
            [-1.0, 0.0],
            [-1.0, -1.0],
            [0.0, -1.0],
        ];
        let corners = [1, 2, 3, 4, 5, 6, 7];
        let raw = corners
            .windows(2)
            .map(|w| RawTriangle {
                vertices: [w[0], w[1], 0],
                subdomain: 0,
            })
            .collect();
        build_topology(vertices, raw, &BoundarySpec::AllDirichlet).expect("L-shape fan")
    }

    /// Square (-1,1)^2 with a vertical interface at x = 0; subdomain 0 for
    /// x < 0 and 1 for x > 0. `n` cells per direction per half (n >= 1).
    pub fn square_interface(n: usize) -> Mesh {
        let nx = 2 * n;
        let mut vertices = Vec::new();
        let mut grid = vec![vec![0usize; nx + 1]; nx + 1];
        let coord = |i: usize| -1.0 + 2.0 * i as f64 / nx as f64;
        for (j, row) in grid.iter_mut().enumerate() {
            for (i, v) in row.iter_mut().enumerate() {
                *v = vertices.len();
                vertices.push([coord(i), coord(j)]);
            }
        }
        let mut raw = Vec::new();
        for j in 0..nx {
            for i in 0..nx {
                let sd = if coord(i) + coord(i + 1) < 0.0 { 0 } else { 1 };
                let v00 = grid[j][i];
                let v10 = grid[j][i + 1];
                let v11 = grid[j + 1][i + 1];
                let v01 = grid[j + 1][i];
                raw.push(RawTriangle {
                    vertices: [v00, v10, v11],
                    subdomain: sd,
                });
                raw.push(RawTriangle {
                    vertices: [v00, v11, v01],
                    subdomain: sd,
                });
            }
        }
        build_topology(vertices, raw, &BoundarySpec::AllDirichlet).expect("interface mesh")
    }

    /// Refine every element `rounds` times.
    pub fn refine_uniform(mesh: &Mesh, rounds: usize) -> Mesh {
        let mut m = mesh.clone();
        for _ in 0..rounds {
            let all: Vec<usize> = (0..m.n_triangles()).collect();
            m = refine(&m, &all).expect("uniform refinement");
        }
        m
    }
}

// ---------------------------------------------------------------------------
// text format and SVG export

impl Mesh {
    /// Serialize to the `mesh2d v1` text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str("mesh2d v1\n");
        let _ = writeln!(s, "vertices {}", self.n_vertices());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.17e} {:.17e}", v[0], v[1]);
        }
        let _ = writeln!(s, "triangles {}", self.n_triangles());
        for (t, sd) in self.triangles.iter().zip(&self.subdomain_id) {
            let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], sd);
        }
        let nb = self
            .edge_kind
            .iter()
            .filter(|&&k| k != EdgeKind::Interior)
            .count();
        let _ = writeln!(s, "boundary {nb}");
        for f in 0..self.n_edges() {
            let tag = match self.edge_kind[f] {
                EdgeKind::Interior => continue,
                EdgeKind::Dirichlet => "D",
                EdgeKind::Neumann => "N",
            };
            let [a, b] = self.edges[f];
            let _ = writeln!(s, "{a} {b} {tag}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Mesh> {
        let mut lines = text.lines();
        let parse_err = |detail: String| FemError::Parse {
            what: "mesh2d",
            detail,
        };
        let header = lines.next().ok_or_else(|| parse_err("empty file".into()))?;
        if header.trim() != "mesh2d v1" {
            return Err(parse_err(format!("bad header {header:?}")));
        }
        let section = |line: Option<&str>, name: &str| -> Result<usize> {
            let line = line.ok_or_else(|| parse_err(format!("missing `{name}` section")))?;
            let mut it = line.split_whitespace();
            if it.next() != Some(name) {
                return Err(parse_err(format!("expected `{name}`, got {line:?}")));
            }
            it.next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| parse_err(format!("bad `{name}` count")))
        };
        let nv = section(lines.next(), "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let l = lines.next().ok_or_else(|| parse_err("truncated vertices".into()))?;
            let mut it = l.split_whitespace();
            let x: f64 = it
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| parse_err(format!("bad vertex line {l:?}")))?;
            let y: f64 = it
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| parse_err(format!("bad vertex line {l:?}")))?;
            vertices.push([x, y]);
        }
        let nt = section(lines.next(), "triangles")?;
        let mut raw = Vec::with_capacity(nt);
        for _ in 0..nt {
            let l = lines.next().ok_or_else(|| parse_err("truncated triangles".into()))?;
            let nums: Vec<usize> = l
                .split_whitespace()
                .map(|c| c.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| parse_err(format!("bad triangle line {l:?}: {e}")))?;
            if nums.len() != 4 {
                return Err(parse_err(format!("bad triangle line {l:?}")));
            }
            raw.push(RawTriangle {
                vertices: [nums[0], nums[1], nums[2]],
                subdomain: nums[3],
            });
        }
        let nb = section(lines.next(), "boundary")?;
        let mut map = HashMap::new();
        for _ in 0..nb {
            let l = lines.next().ok_or_else(|| parse_err("truncated boundary".into()))?;
            let mut it = l.split_whitespace();
            let a: usize = it
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| parse_err(format!("bad boundary line {l:?}")))?;
            let b: usize = it
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| parse_err(format!("bad boundary line {l:?}")))?;
            let tag = match it.next() {
                Some("D") => Bc::Dirichlet,
                Some("N") => Bc::Neumann,
                other => return Err(parse_err(format!("bad boundary tag {other:?}"))),
            };
            map.insert((a.min(b), a.max(b)), tag);
        }
        build_topology(vertices, raw, &BoundarySpec::ByPair(&map))
    }

    /// Wireframe SVG of the mesh.
    pub fn to_svg(&self, width_px: f64) -> String {
        let (mut xmin, mut ymin) = (f64::MAX, f64::MAX);
        let (mut xmax, mut ymax) = (f64::MIN, f64::MIN);
        for v in &self.vertices {
            xmin = xmin.min(v[0]);
            xmax = xmax.max(v[0]);
            ymin = ymin.min(v[1]);
            ymax = ymax.max(v[1]);
        }
        let w = xmax - xmin;
        let h = ymax - ymin;
        let scale = width_px / w;
        let height_px = h * scale;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width_px:.0}\" height=\"{height_px:.0}\" viewBox=\"0 0 {width_px:.2} {height_px:.2}\">"
        );
        let _ = writeln!(
            s,
            "<g stroke=\"#1f3b57\" stroke-width=\"0.5\" fill=\"none\" stroke-linecap=\"round\">"
        );
        for f in 0..self.n_edges() {
            let a = self.edge_start(f);
            let b = self.edge_end(f);
            let _ = writeln!(
                s,
                "<line x1=\"{:.3}\" y1=\"{:.3}\" x2=\"{:.3}\" y2=\"{:.3}\"/>",
                (a[0] - xmin) * scale,
                (ymax - a[1]) * scale,
                (b[0] - xmin) * scale,
                (ymax - b[1]) * scale
            );
        }
        s.push_str("</g>\n</svg>\n");
        s
    }
}
