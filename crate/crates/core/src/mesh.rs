//! Conforming 2D triangulations with newest-vertex bisection.
//!
//! Conventions used throughout the crate:
//!
//! * An element is a triple `[a, b, c]` of vertex ids, positively oriented
//!   (counterclockwise). Its **refinement edge** is `(a, b)`, the edge
//!   opposite the newest vertex `c`. Bisection inserts the midpoint `m` of
//!   `(a, b)` and produces the children `[c, a, m]` and `[b, c, m]`, which
//!   are again positively oriented and carry `(c, a)` / `(b, c)` as their
//!   refinement edges.
//! * Edges are undirected vertex pairs `[v0, v1]` with `v0 < v1`, listed in
//!   lexicographic order. `element_edges[t][k]` is the edge opposite local
//!   vertex `k` of element `t`, so the refinement edge of `t` is
//!   `element_edges[t][2]`.
//! * Every boundary edge carries a [`BoundaryTag`]; interior edges carry
//!   none. Tags are assigned on the initial mesh by a coordinate predicate
//!   (tolerances are the predicate's business) and inherited by the halves of
//!   a split boundary edge, so refinement never re-evaluates geometry
//!   predicates.
//! * Refinement produces a new mesh whose vertex list starts with the parent
//!   mesh's vertices. The [`Lineage`] records, for each new vertex, which
//!   parent edge it bisects — in id order, so that every entry only
//!   references vertices created before it. This makes nodal interpolation
//!   between meshes exact and loss-free.

use std::collections::HashMap;

/// Classification of a boundary edge.
///
/// `Dirichlet` edges prescribe the velocity (inflow profiles and no-slip
/// walls alike, via the boundary-data function of the problem description);
/// `Outlet` edges are traction-free: they impose no velocity constraint and
/// are skipped by the state-residual indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    Dirichlet,
    Outlet,
}

/// A set of element ids selected for refinement.
#[derive(Debug, Clone, Default)]
pub struct MarkedSet {
    /// Sorted, deduplicated element ids.
    pub element_ids: Vec<usize>,
}

impl MarkedSet {
    pub fn from_ids(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        MarkedSet { element_ids: ids }
    }

    pub fn len(&self) -> usize {
        self.element_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_ids.is_empty()
    }

    pub fn contains(&self, id: usize) -> bool {
        self.element_ids.binary_search(&id).is_ok()
    }
}

/// Parent→child bookkeeping attached to a refined mesh.
#[derive(Debug, Clone)]
pub struct Lineage {
    /// Vertex count of the mesh this one was refined from. The parent's
    /// vertices are a prefix of this mesh's vertex list.
    pub parent_vertices: usize,
    /// For each new vertex `parent_vertices + i`, the pair of (earlier)
    /// vertex ids whose midpoint it is.
    pub midpoint_of: Vec<[usize; 2]>,
    /// For each element, the id of the parent-mesh element containing it.
    pub parent_of_element: Vec<usize>,
}

/// A conforming triangulation. See the module docs for the invariants.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Vertex coordinates.
    pub vertices: Vec<[f64; 2]>,
    /// Positively oriented vertex triples; refinement edge = first two.
    pub elements: Vec<[usize; 3]>,
    /// Bisection depth of each element (0 on a freshly built mesh).
    pub generation: Vec<u32>,
    /// Undirected edges `[v0, v1]`, `v0 < v1`, lexicographically sorted.
    pub edges: Vec<[usize; 2]>,
    /// Edge opposite each local vertex: `element_edges[t][k]`.
    pub element_edges: Vec<[usize; 3]>,
    /// Incident elements per edge, lower id first; `[t, None]` on ∂Ω.
    pub edge_elements: Vec<[Option<usize>; 2]>,
    /// Boundary tag per edge (`None` on interior edges).
    pub boundary_tag: Vec<Option<BoundaryTag>>,
    /// Refinement bookkeeping (absent on a freshly built mesh).
    pub lineage: Option<Lineage>,
}

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("invalid mesh extents: [{x0}, {x1}] x [{y0}, {y1}] with {nx} x {ny} cells")]
    InvalidExtents { x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize },
    #[error("boundary edge with midpoint ({0}, {1}) not covered by any tag predicate")]
    UntaggedBoundary(f64, f64),
    #[error("marked element id {id} out of range (mesh has {n} elements)")]
    MarkOutOfRange { id: usize, n: usize },
    #[error("conformity closure did not terminate; refinement-edge labels are inconsistent")]
    ClosureOverflow,
    #[error("nonconforming input: edge ({0}, {1}) has more than two incident elements")]
    NonManifoldEdge(usize, usize),
    #[error("field transfer between meshes that are not parent and child")]
    LineageMismatch,
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

fn cross(u: [f64; 2], v: [f64; 2]) -> f64 {
    u[0] * v[1] - u[1] * v[0]
}

impl Mesh {
    /// The three corner coordinates of element `t`.
    pub fn tri_points(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.elements[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Signed area of element `t` (positive by the orientation invariant).
    pub fn area(&self, t: usize) -> f64 {
        let p = self.tri_points(t);
        0.5 * cross(
            [p[1][0] - p[0][0], p[1][1] - p[0][1]],
            [p[2][0] - p[0][0], p[2][1] - p[0][1]],
        )
    }

    /// Length of edge `e`.
    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    /// Midpoint of edge `e`.
    pub fn edge_midpoint(&self, e: usize) -> [f64; 2] {
        let [a, b] = self.edges[e];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_elements[e][1].is_none()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Builds a mesh from raw triangles (any vertex order per triangle).
    ///
    /// Orientation is normalized, the refinement edge of each triangle is set
    /// to its longest edge (ties broken by lowest edge id), and boundary
    /// edges are tagged by `tag`, which receives the edge midpoint and must
    /// cover all of ∂Ω.
    pub fn from_triangles(
        vertices: Vec<[f64; 2]>,
        mut elements: Vec<[usize; 3]>,
        tag: &dyn Fn([f64; 2]) -> Option<BoundaryTag>,
    ) -> Result<Mesh, MeshError> {
        // Normalize orientation.
        for tri in elements.iter_mut() {
            let [a, b, c] = *tri;
            let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
            if cross([pb[0] - pa[0], pb[1] - pa[1]], [pc[0] - pa[0], pc[1] - pa[1]]) < 0.0 {
                tri.swap(1, 2);
            }
        }
        // Pick refinement edges: longest, ties by lowest edge id. Edge ids
        // only depend on the vertex pairs, so compute them first.
        let (edges, element_edges, _) = build_topology(&elements)?;
        let len2 = |e: usize| -> f64 {
            let [u, v] = edges[e];
            let (pu, pv) = (vertices[u], vertices[v]);
            (pv[0] - pu[0]).powi(2) + (pv[1] - pu[1]).powi(2)
        };
        for (tri, ee) in elements.iter_mut().zip(element_edges.iter()) {
            // Local edge k is opposite vertex k; rotating the triple left by
            // (k+1) makes edge k the refinement edge while preserving
            // orientation.
            let mut best = 0usize;
            for k in 1..3 {
                let (lb, le) = (len2(ee[best]), len2(ee[k]));
                if le > lb || (le == lb && ee[k] < ee[best]) {
                    best = k;
                }
            }
            tri.rotate_left((best + 1) % 3);
        }
        let n_elements = elements.len();
        let mut mesh = Mesh {
            vertices,
            elements,
            generation: vec![0; n_elements],
            edges: Vec::new(),
            element_edges: Vec::new(),
            edge_elements: Vec::new(),
            boundary_tag: Vec::new(),
            lineage: None,
        };
        mesh.rebuild_topology()?;
        for e in 0..mesh.n_edges() {
            if mesh.is_boundary_edge(e) {
                let m = mesh.edge_midpoint(e);
                mesh.boundary_tag[e] =
                    Some(tag(m).ok_or(MeshError::UntaggedBoundary(m[0], m[1]))?);
            }
        }
        Ok(mesh)
    }

    fn rebuild_topology(&mut self) -> Result<(), MeshError> {
        let (edges, element_edges, edge_elements) = build_topology(&self.elements)?;
        self.boundary_tag = vec![None; edges.len()];
        self.edges = edges;
        self.element_edges = element_edges;
        self.edge_elements = edge_elements;
        Ok(())
    }

    /// Checks the structural invariants, returning a description of the
    /// first violation. With `thorough`, also scans for hanging nodes
    /// (quadratic cost — meant for tests on small meshes).
    pub fn verify_invariants(&self, thorough: bool) -> Result<(), String> {
        for t in 0..self.n_elements() {
            if self.area(t) <= 0.0 {
                return Err(format!("element {t} has non-positive area {}", self.area(t)));
            }
            for k in 0..3 {
                let e = self.element_edges[t][k];
                let mut pair = [self.elements[t][(k + 1) % 3], self.elements[t][(k + 2) % 3]];
                pair.sort_unstable();
                if self.edges[e] != pair {
                    return Err(format!("element {t}: edge {k} does not match edge table"));
                }
            }
        }
        for e in 0..self.n_edges() {
            let boundary = self.is_boundary_edge(e);
            if boundary != self.boundary_tag[e].is_some() {
                return Err(format!(
                    "edge {e}: boundary status {boundary} inconsistent with tag {:?}",
                    self.boundary_tag[e]
                ));
            }
        }
        if thorough {
            for e in 0..self.n_edges() {
                let [a, b] = self.edges[e];
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                let len = self.edge_length(e);
                for (v, p) in self.vertices.iter().enumerate() {
                    if v == a || v == b {
                        continue;
                    }
                    let da = ((p[0] - pa[0]).powi(2) + (p[1] - pa[1]).powi(2)).sqrt();
                    let db = ((p[0] - pb[0]).powi(2) + (p[1] - pb[1]).powi(2)).sqrt();
                    if (da + db - len).abs() < 1e-12 * len {
                        return Err(format!("vertex {v} hangs on edge {e} = ({a}, {b})"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Builds the edge table from element triples: lexicographically sorted
/// unique vertex pairs, per-element edge ids (opposite each local vertex),
/// and incident elements per edge (lower element id first).
#[allow(clippy::type_complexity)]
fn build_topology(
    elements: &[[usize; 3]],
) -> Result<(Vec<[usize; 2]>, Vec<[usize; 3]>, Vec<[Option<usize>; 2]>), MeshError> {
    let mut half: Vec<([usize; 2], u32, u8)> = Vec::with_capacity(3 * elements.len());
    for (t, tri) in elements.iter().enumerate() {
        for k in 0..3u8 {
            let mut pair = [tri[(k as usize + 1) % 3], tri[(k as usize + 2) % 3]];
            pair.sort_unstable();
            half.push((pair, t as u32, k));
        }
    }
    half.sort_unstable();
    let mut edges = Vec::with_capacity(half.len() / 2 + elements.len());
    let mut element_edges = vec![[usize::MAX; 3]; elements.len()];
    let mut edge_elements: Vec<[Option<usize>; 2]> = Vec::with_capacity(edges.capacity());
    let mut i = 0;
    while i < half.len() {
        let pair = half[i].0;
        let mut j = i;
        while j < half.len() && half[j].0 == pair {
            j += 1;
        }
        if j - i > 2 {
            return Err(MeshError::NonManifoldEdge(pair[0], pair[1]));
        }
        let id = edges.len();
        edges.push(pair);
        let mut incident = [None, None];
        for (slot, h) in half[i..j].iter().enumerate() {
            element_edges[h.1 as usize][h.2 as usize] = id;
            incident[slot] = Some(h.1 as usize);
        }
        edge_elements.push(incident);
        i = j;
    }
    Ok((edges, element_edges, edge_elements))
}

/// Builds a structured triangulation of a rectangle: `nx × ny` cells, each
/// split along its lower-left→upper-right diagonal. The diagonal is each
/// triangle's longest edge, so it becomes the refinement edge.
///
/// `tag` classifies boundary edges by their midpoint and must cover all of
/// ∂Ω; see [`BoundaryTag`].
pub fn build_rect_mesh(
    extents: Rect,
    nx: usize,
    ny: usize,
    tag: &dyn Fn([f64; 2]) -> Option<BoundaryTag>,
) -> Result<Mesh, MeshError> {
    let Rect { x0, y0, x1, y1 } = extents;
    if !(x1 > x0) || !(y1 > y0) || nx == 0 || ny == 0 {
        return Err(MeshError::InvalidExtents { x0, x1, y0, y1, nx, ny });
    }
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // Exact endpoints on the last row/column keep the boundary
            // predicates robust.
            let x = if i == nx { x1 } else { x0 + (x1 - x0) * i as f64 / nx as f64 };
            let y = if j == ny { y1 } else { y0 + (y1 - y0) * j as f64 / ny as f64 };
            vertices.push([x, y]);
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut elements = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10) = (vid(i, j), vid(i + 1, j));
            let (v01, v11) = (vid(i, j + 1), vid(i + 1, j + 1));
            elements.push([v11, v00, v10]);
            elements.push([v00, v11, v01]);
        }
    }
    Mesh::from_triangles(vertices, elements, tag)
}

/// Refines `mesh` by newest-vertex bisection: every marked element is
/// bisected at least once, and the conformity closure bisects whatever else
/// is needed so the result has no hanging nodes.
pub fn bisect(mesh: &Mesh, marked: &MarkedSet) -> Result<Mesh, MeshError> {
    for &id in &marked.element_ids {
        if id >= mesh.n_elements() {
            return Err(MeshError::MarkOutOfRange { id, n: mesh.n_elements() });
        }
    }

    // Phase 1: fixpoint of the compatibility rule "if any edge of T is
    // split, the refinement edge of T is split". Only parent-mesh edges ever
    // enter the split set: the refinement edges of first-generation children
    // are parent edges, and those of second-generation children touch a
    // midpoint vertex, which no parent edge does.
    let ref_edge = |t: usize| mesh.element_edges[t][2];
    let mut split = vec![false; mesh.n_edges()];
    let mut queue: Vec<usize> = Vec::new();
    let push_incident = |queue: &mut Vec<usize>, e: usize| {
        for t in mesh.edge_elements[e].iter().flatten() {
            queue.push(*t);
        }
    };
    for &t in &marked.element_ids {
        let e = ref_edge(t);
        if !split[e] {
            split[e] = true;
            push_incident(&mut queue, e);
        }
    }
    let mut budget = 8 * (mesh.n_elements() + mesh.n_edges()) + 64;
    while let Some(t) = queue.pop() {
        if budget == 0 {
            return Err(MeshError::ClosureOverflow);
        }
        budget -= 1;
        let e = ref_edge(t);
        if !split[e] && mesh.element_edges[t].iter().any(|&f| split[f]) {
            split[e] = true;
            push_incident(&mut queue, e);
        }
    }

    // Phase 2: insert midpoints (in edge-id order, so new vertex ids are
    // deterministic and lineage entries reference earlier vertices only).
    let parent_nv = mesh.n_vertices();
    let mut vertices = mesh.vertices.clone();
    let mut midpoint_of = Vec::new();
    let mut mid_of_edge = vec![usize::MAX; mesh.n_edges()];
    for e in 0..mesh.n_edges() {
        if split[e] {
            mid_of_edge[e] = vertices.len();
            vertices.push(mesh.edge_midpoint(e));
            midpoint_of.push(mesh.edges[e]);
        }
    }

    // Phase 3: subdivide each element according to which of its edges are
    // split. Children of [a, b, c] are [c, a, m] and [b, c, m]; a child is
    // split again (at most once) when its own refinement edge — a parent
    // edge — is in the split set.
    let mut elements = Vec::with_capacity(mesh.n_elements() + 2 * midpoint_of.len());
    let mut generation = Vec::with_capacity(elements.capacity());
    let mut parent_of_element = Vec::with_capacity(elements.capacity());
    for t in 0..mesh.n_elements() {
        let [a, b, c] = mesh.elements[t];
        let [e_bc, e_ca, e_ab] = mesh.element_edges[t];
        let gen = mesh.generation[t];
        let mut emit = |tri: [usize; 3], depth: u32, out: &mut Vec<[usize; 3]>| {
            out.push(tri);
            generation.push(gen + depth);
            parent_of_element.push(t);
        };
        if !split[e_ab] {
            debug_assert!(!split[e_bc] && !split[e_ca], "closure must split the refinement edge");
            emit([a, b, c], 0, &mut elements);
            continue;
        }
        let m = mid_of_edge[e_ab];
        // Child [c, a, m] with refinement edge (c, a) = edge e_ca.
        if split[e_ca] {
            let m1 = mid_of_edge[e_ca];
            emit([m, c, m1], 2, &mut elements);
            emit([a, m, m1], 2, &mut elements);
        } else {
            emit([c, a, m], 1, &mut elements);
        }
        // Child [b, c, m] with refinement edge (b, c) = edge e_bc.
        if split[e_bc] {
            let m0 = mid_of_edge[e_bc];
            emit([m, b, m0], 2, &mut elements);
            emit([c, m, m0], 2, &mut elements);
        } else {
            emit([b, c, m], 1, &mut elements);
        }
    }

    let mut child = Mesh {
        vertices,
        elements,
        generation,
        edges: Vec::new(),
        element_edges: Vec::new(),
        edge_elements: Vec::new(),
        boundary_tag: Vec::new(),
        lineage: Some(Lineage { parent_vertices: parent_nv, midpoint_of, parent_of_element }),
    };
    child.rebuild_topology()?;

    // Phase 4: inherit boundary tags. A child edge either survives from the
    // parent, is one half of a split parent edge, or is new and interior.
    let mut parent_edge_id: HashMap<[usize; 2], usize> = HashMap::with_capacity(mesh.n_edges());
    for (e, pair) in mesh.edges.iter().enumerate() {
        parent_edge_id.insert(*pair, e);
    }
    let lineage = child.lineage.as_ref().unwrap();
    for e in 0..child.n_edges() {
        let [u, v] = child.edges[e];
        let tag = if v < parent_nv {
            // Surviving parent edge (u < v < parent_nv).
            parent_edge_id.get(&[u, v]).and_then(|&pe| mesh.boundary_tag[pe])
        } else if u < parent_nv {
            // Half of a split parent edge iff u is one of the endpoints.
            let [p, q] = lineage.midpoint_of[v - parent_nv];
            if u == p || u == q {
                mesh.boundary_tag[parent_edge_id[&[p.min(q), p.max(q)]]]
            } else {
                None
            }
        } else {
            None
        };
        child.boundary_tag[e] = tag;
    }
    debug_assert_eq!(child.verify_invariants(false), Ok(()));
    Ok(child)
}

/// Two full bisection sweeps: every triangle is split into four and every
/// edge is halved. The returned lineage maps directly back to `mesh` (the
/// intermediate sweep's vertices keep their ids, and its midpoint entries
/// reference them, so nodal transfer can run through the combined list).
pub fn uniform_refine(mesh: &Mesh) -> Result<Mesh, MeshError> {
    let all = |m: &Mesh| MarkedSet::from_ids((0..m.n_elements()).collect());
    let mid = bisect(mesh, &all(mesh))?;
    let mut fine = bisect(&mid, &all(&mid))?;
    let l1 = mid.lineage.as_ref().unwrap();
    let l2 = fine.lineage.as_ref().unwrap();
    let mut midpoint_of = l1.midpoint_of.clone();
    midpoint_of.extend_from_slice(&l2.midpoint_of);
    let parent_of_element =
        l2.parent_of_element.iter().map(|&p| l1.parent_of_element[p]).collect();
    fine.lineage = Some(Lineage {
        parent_vertices: mesh.n_vertices(),
        midpoint_of,
        parent_of_element,
    });
    Ok(fine)
}

/// The REFINE step of the adaptive loop: two bisection sweeps of the marked
/// region, so every marked triangle is split into four (its edges halved,
/// matching what uniform refinement does to it), plus whatever the
/// conformity closure forces on neighbors. Marking every element reproduces
/// [`uniform_refine`] exactly.
pub fn refine_marked(mesh: &Mesh, marked: &MarkedSet) -> Result<Mesh, MeshError> {
    let mid = bisect(mesh, marked)?;
    let children: Vec<usize> = {
        let parent_of = &mid.lineage.as_ref().unwrap().parent_of_element;
        (0..mid.n_elements()).filter(|&t| marked.contains(parent_of[t])).collect()
    };
    let mut fine = bisect(&mid, &MarkedSet::from_ids(children))?;
    let l1 = mid.lineage.as_ref().unwrap();
    let l2 = fine.lineage.as_ref().unwrap();
    let mut midpoint_of = l1.midpoint_of.clone();
    midpoint_of.extend_from_slice(&l2.midpoint_of);
    let parent_of_element =
        l2.parent_of_element.iter().map(|&p| l1.parent_of_element[p]).collect();
    fine.lineage = Some(Lineage {
        parent_vertices: mesh.n_vertices(),
        midpoint_of,
        parent_of_element,
    });
    Ok(fine)
}

/// Geometric quantities derived from a mesh.
#[derive(Debug, Clone)]
pub struct MeshMetrics {
    /// Element area |T|.
    pub area: Vec<f64>,
    /// Local mesh size h_T = |T|^{1/2}.
    pub h_t: Vec<f64>,
    /// Edge length h_F = |F|.
    pub h_f: Vec<f64>,
    /// Unit normal per edge: points from the first incident element into the
    /// second (interior), or outward (boundary).
    pub normal: Vec<[f64; 2]>,
    /// Smallest interior angle over all elements, in degrees.
    pub min_angle_deg: f64,
}

/// Computes areas, mesh sizes, edge normals, and the global minimum angle.
pub fn mesh_metrics(mesh: &Mesh) -> MeshMetrics {
    let n_t = mesh.n_elements();
    let mut area = Vec::with_capacity(n_t);
    let mut h_t = Vec::with_capacity(n_t);
    let mut min_angle = f64::INFINITY;
    for t in 0..n_t {
        let a = mesh.area(t);
        area.push(a);
        h_t.push(a.sqrt());
        let p = mesh.tri_points(t);
        for k in 0..3 {
            let u = [p[(k + 1) % 3][0] - p[k][0], p[(k + 1) % 3][1] - p[k][1]];
            let v = [p[(k + 2) % 3][0] - p[k][0], p[(k + 2) % 3][1] - p[k][1]];
            let dot = u[0] * v[0] + u[1] * v[1];
            let ang = cross(u, v).abs().atan2(dot);
            min_angle = min_angle.min(ang);
        }
    }
    let mut h_f = Vec::with_capacity(mesh.n_edges());
    let mut normal = Vec::with_capacity(mesh.n_edges());
    for e in 0..mesh.n_edges() {
        h_f.push(mesh.edge_length(e));
        let [a, b] = mesh.edges[e];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = h_f[e];
        let mut n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        // Orient away from the first incident element.
        let t = mesh.edge_elements[e][0].expect("edge with no incident element");
        let p = mesh.tri_points(t);
        let centroid = [
            (p[0][0] + p[1][0] + p[2][0]) / 3.0,
            (p[0][1] + p[1][1] + p[2][1]) / 3.0,
        ];
        let mid = mesh.edge_midpoint(e);
        if n[0] * (mid[0] - centroid[0]) + n[1] * (mid[1] - centroid[1]) < 0.0 {
            n = [-n[0], -n[1]];
        }
        normal.push(n);
    }
    MeshMetrics { area, h_t, h_f, normal, min_angle_deg: min_angle.to_degrees() }
}
