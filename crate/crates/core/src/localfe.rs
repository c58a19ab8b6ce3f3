//! Local finite elements: shape functions, local keys and interpolation.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock};

use crate::dense::{DenseMatrix, Lu};
use crate::geometry::{reference_subentity_geometry, AffineGeometry, Geometry};
use crate::quadrature::{quadrature_rule, QuadPoint};
use crate::refelem::{reference_element, GeometryKind, ReferenceElement, Shape};
use crate::{Error, Result};

/// Attachment of a shape function to a subentity of the reference element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalKey {
    pub sub_entity: usize,
    pub codim: usize,
    pub index: usize,
}

impl LocalKey {
    pub const fn new(sub_entity: usize, codim: usize, index: usize) -> Self {
        Self {
            sub_entity,
            codim,
            index,
        }
    }
}

pub trait LocalBasis: Send + Sync {
    fn size(&self) -> usize;
    fn domain_dim(&self) -> usize;
    /// 1 for scalar elements, `d` for vector-valued ones.
    fn range_dim(&self) -> usize;
    /// `size` values of length `range_dim`.
    fn evaluate(&self, x: &[f64]) -> Vec<Vec<f64>>;
    /// `size` matrices of shape `range_dim x domain_dim`.
    fn jacobian(&self, x: &[f64]) -> Vec<DenseMatrix>;
}

pub type LocalFunction<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

pub trait LocalInterpolation: Send + Sync {
    fn interpolate(&self, f: LocalFunction<'_>) -> Vec<f64>;
}

/// One flag per facet; a set flag flips the sign of that facet's function.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FaceOrientation {
    bits: u32,
    count: usize,
}

impl FaceOrientation {
    pub fn new(bits: u32, count: usize) -> Result<Self> {
        if count > 32 || (count < 32 && bits >> count != 0) {
            return Err(Error::InvalidArgument(format!(
                "orientation {bits:#b} does not fit in {count} facet flags"
            )));
        }
        Ok(Self { bits, count })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_flipped(&self, facet: usize) -> bool {
        self.bits >> facet & 1 == 1
    }

    pub fn sign(&self, facet: usize) -> f64 {
        if self.is_flipped(facet) {
            -1.0
        } else {
            1.0
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    LagrangeSimplex,
    LagrangeCube,
    P1Bubble,
    P2Bubble,
    RefinedLagrange,
    CrouzeixRaviart,
    Rt0Prism,
    Rt0Pyramid,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::LagrangeSimplex,
        Family::LagrangeCube,
        Family::P1Bubble,
        Family::P2Bubble,
        Family::RefinedLagrange,
        Family::CrouzeixRaviart,
        Family::Rt0Prism,
        Family::Rt0Pyramid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::LagrangeSimplex => "lagrange_simplex",
            Family::LagrangeCube => "lagrange_cube",
            Family::P1Bubble => "p1_bubble",
            Family::P2Bubble => "p2_bubble",
            Family::RefinedLagrange => "refined_lagrange",
            Family::CrouzeixRaviart => "crouzeix_raviart",
            Family::Rt0Prism => "rt0_prism",
            Family::Rt0Pyramid => "rt0_pyramid",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == name)
            .ok_or_else(|| Error::UnsupportedElement(format!("unknown element family '{name}'")))
    }
}

#[derive(Clone)]
pub struct LocalFiniteElement {
    kind: GeometryKind,
    family: Family,
    order: usize,
    basis: Arc<dyn LocalBasis>,
    keys: Vec<LocalKey>,
    interpolation: Arc<dyn LocalInterpolation>,
    orientation: Option<FaceOrientation>,
}

impl fmt::Debug for LocalFiniteElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LocalFiniteElement")
            .field("name", &self.name())
            .field("size", &self.size())
            .field("keys", &self.keys)
            .finish()
    }
}

impl LocalFiniteElement {
    fn assemble(
        kind: GeometryKind,
        family: Family,
        order: usize,
        basis: Arc<dyn LocalBasis>,
        keys: Vec<LocalKey>,
        interpolation: Arc<dyn LocalInterpolation>,
    ) -> Self {
        debug_assert_eq!(keys.len(), basis.size());
        Self {
            kind,
            family,
            order,
            basis,
            keys,
            interpolation,
            orientation: None,
        }
    }

    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn name(&self) -> String {
        match self.family {
            Family::Rt0Prism | Family::Rt0Pyramid => self.family.name().to_string(),
            Family::P1Bubble | Family::P2Bubble | Family::CrouzeixRaviart => {
                format!("{}(d={})", self.family.name(), self.kind.dim())
            }
            _ => format!("{}(d={},k={})", self.family.name(), self.kind.dim(), self.order),
        }
    }

    pub fn size(&self) -> usize {
        self.basis.size()
    }

    pub fn range_dim(&self) -> usize {
        self.basis.range_dim()
    }

    pub fn basis(&self) -> &dyn LocalBasis {
        self.basis.as_ref()
    }

    pub fn keys(&self) -> &[LocalKey] {
        &self.keys
    }

    pub fn interpolation(&self) -> &dyn LocalInterpolation {
        self.interpolation.as_ref()
    }

    pub fn interpolate(&self, f: LocalFunction<'_>) -> Vec<f64> {
        self.interpolation.interpolate(f)
    }

    /// Facet orientation of face-attached vector elements.
    pub fn orientation(&self) -> Option<FaceOrientation> {
        self.orientation
    }

    /// Whether the span contains only affine functions.
    pub fn spans_only_affine(&self) -> bool {
        self.family == Family::LagrangeSimplex && self.order <= 1
    }
}

fn barycentric(x: &[f64]) -> Vec<f64> {
    let mut l = Vec::with_capacity(x.len() + 1);
    l.push(1.0 - x.iter().sum::<f64>());
    l.extend_from_slice(x);
    l
}

fn barycentric_gradient(d: usize, i: usize) -> Vec<f64> {
    if i == 0 {
        vec![-1.0; d]
    } else {
        let mut g = vec![0.0; d];
        g[i - 1] = 1.0;
        g
    }
}

/// Vertices followed by edge midpoints, edges in reference numbering.
fn p2_layout(d: usize) -> (Vec<Vec<f64>>, Vec<(usize, usize)>) {
    let re = reference_element(GeometryKind::simplex(d).expect("dimension checked"));
    let mut nodes = re.corners().to_vec();
    let edges: Vec<(usize, usize)> = (0..re.size(d - 1))
        .map(|e| {
            let c = &re.subentity(e, d - 1).expect("edge exists").corners;
            (c[0], c[1])
        })
        .collect();
    for &(a, b) in &edges {
        nodes.push(
            re.corner(a)
                .iter()
                .zip(re.corner(b))
                .map(|(p, q)| 0.5 * (p + q))
                .collect(),
        );
    }
    (nodes, edges)
}

/// Keys for point-attached functions: each point is matched to the
/// lowest-dimensional subentity whose barycenter it is.
fn keys_for_points(re: &ReferenceElement, points: &[Vec<f64>]) -> Vec<LocalKey> {
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    points
        .iter()
        .map(|p| {
            let (sub, codim) = (0..=re.dim())
                .rev()
                .find_map(|codim| {
                    (0..re.size(codim))
                        .find(|&i| {
                            re.position(i, codim)
                                .expect("subentity exists")
                                .iter()
                                .zip(p)
                                .all(|(a, b)| (a - b).abs() < 1e-12)
                        })
                        .map(|i| (i, codim))
                })
                .expect("node at a subentity barycenter");
            let count = counts.entry((sub, codim)).or_insert(0);
            let key = LocalKey::new(sub, codim, *count);
            *count += 1;
            key
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
enum ScalarSpace {
    LagrangeSimplex(usize),
    LagrangeCube(usize),
    P1Bubble,
    P2Bubble,
    Refined(usize),
    CrouzeixRaviart,
}

/// Scalar shape functions, evaluated together with their gradients.
struct ScalarBasis {
    dim: usize,
    size: usize,
    space: ScalarSpace,
    edges: Vec<(usize, usize)>,
}

impl ScalarBasis {
    fn new(dim: usize, space: ScalarSpace) -> Self {
        let edges = if dim > 0 { p2_layout(dim).1 } else { Vec::new() };
        let n_vertices = dim + 1;
        let size = match space {
            ScalarSpace::LagrangeSimplex(0) | ScalarSpace::LagrangeCube(0) => 1,
            ScalarSpace::LagrangeSimplex(1) => n_vertices,
            ScalarSpace::LagrangeSimplex(_) => n_vertices + edges.len(),
            ScalarSpace::LagrangeCube(k) => (k + 1).pow(dim as u32),
            ScalarSpace::P1Bubble => n_vertices + 1,
            ScalarSpace::P2Bubble => n_vertices + edges.len() + 1,
            ScalarSpace::Refined(0) => 1 << dim,
            ScalarSpace::Refined(_) => n_vertices + edges.len(),
            ScalarSpace::CrouzeixRaviart => n_vertices,
        };
        Self {
            dim,
            size,
            space,
            edges,
        }
    }

    fn values_and_gradients(&self, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = self.dim;
        match self.space {
            ScalarSpace::LagrangeSimplex(0) | ScalarSpace::LagrangeCube(0) => {
                (vec![1.0], vec![vec![0.0; d]])
            }
            ScalarSpace::LagrangeSimplex(k) => {
                let l = barycentric(x);
                let mut values = Vec::with_capacity(self.size);
                let mut grads = Vec::with_capacity(self.size);
                for (i, &li) in l.iter().enumerate() {
                    let g = barycentric_gradient(d, i);
                    if k == 1 {
                        values.push(li);
                        grads.push(g);
                    } else {
                        values.push(li * (2.0 * li - 1.0));
                        grads.push(g.iter().map(|v| v * (4.0 * li - 1.0)).collect());
                    }
                }
                if k == 2 {
                    self.push_edge_functions(&l, &mut values, &mut grads);
                }
                (values, grads)
            }
            ScalarSpace::LagrangeCube(k) => {
                let one_d = |t: f64| -> (Vec<f64>, Vec<f64>) {
                    if k == 1 {
                        (vec![1.0 - t, t], vec![-1.0, 1.0])
                    } else {
                        (
                            vec![(2.0 * t - 1.0) * (t - 1.0), 4.0 * t * (1.0 - t), t * (2.0 * t - 1.0)],
                            vec![4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
                        )
                    }
                };
                let factors: Vec<_> = x.iter().map(|&t| one_d(t)).collect();
                let n = k + 1;
                let mut values = Vec::with_capacity(self.size);
                let mut grads = Vec::with_capacity(self.size);
                for idx in 0..self.size {
                    let digits: Vec<usize> = (0..d).map(|b| idx / n.pow(b as u32) % n).collect();
                    values.push((0..d).map(|b| factors[b].0[digits[b]]).product());
                    grads.push(
                        (0..d)
                            .map(|a| {
                                (0..d)
                                    .map(|b| {
                                        if a == b {
                                            factors[b].1[digits[b]]
                                        } else {
                                            factors[b].0[digits[b]]
                                        }
                                    })
                                    .product()
                            })
                            .collect(),
                    );
                }
                (values, grads)
            }
            ScalarSpace::P1Bubble | ScalarSpace::P2Bubble => {
                let l = barycentric(x);
                let mut values = l.clone();
                let mut grads: Vec<Vec<f64>> = (0..=d).map(|i| barycentric_gradient(d, i)).collect();
                if matches!(self.space, ScalarSpace::P2Bubble) {
                    self.push_edge_functions(&l, &mut values, &mut grads);
                }
                let c = ((d + 1) as f64).powi(d as i32 + 1);
                values.push(c * l.iter().product::<f64>());
                let mut g = vec![0.0; d];
                for i in 0..=d {
                    let others: f64 = (0..=d).filter(|&j| j != i).map(|j| l[j]).product();
                    g.iter_mut()
                        .zip(barycentric_gradient(d, i))
                        .for_each(|(a, b)| *a += c * others * b);
                }
                grads.push(g);
                (values, grads)
            }
            ScalarSpace::Refined(k) => self.refined(x, k),
            ScalarSpace::CrouzeixRaviart => {
                let l = barycentric(x);
                let df = d as f64;
                (0..=d)
                    .map(|i| {
                        let v = d - i;
                        (
                            1.0 - df * l[v],
                            barycentric_gradient(d, v).iter().map(|g| -df * g).collect(),
                        )
                    })
                    .unzip()
            }
        }
    }

    fn push_edge_functions(&self, l: &[f64], values: &mut Vec<f64>, grads: &mut Vec<Vec<f64>>) {
        for &(a, b) in &self.edges {
            values.push(4.0 * l[a] * l[b]);
            grads.push(
                barycentric_gradient(self.dim, a)
                    .iter()
                    .zip(barycentric_gradient(self.dim, b))
                    .map(|(ga, gb)| 4.0 * (l[b] * ga + l[a] * gb))
                    .collect(),
            );
        }
    }

    /// Child of the red refinement containing `l`: corner child `i` where
    /// `l_i >= 1/2`, otherwise the middle child `d + 1` (only for d = 2).
    fn child(l: &[f64]) -> usize {
        l.iter()
            .position(|&li| li >= 0.5)
            .unwrap_or(l.len())
    }

    fn refined(&self, x: &[f64], k: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
        let d = self.dim;
        let l = barycentric(x);
        let child = Self::child(&l);
        let mut values = vec![0.0; self.size];
        let mut grads = vec![vec![0.0; d]; self.size];
        if k == 0 {
            values[child] = 1.0;
            return (values, grads);
        }
        let edge_node = |a: usize, b: usize| {
            let e = self
                .edges
                .iter()
                .position(|&(p, q)| (p, q) == (a.min(b), a.max(b)))
                .expect("edge of the simplex");
            d + 1 + e
        };
        let scaled = |i: usize, s: f64| -> Vec<f64> {
            barycentric_gradient(d, i).iter().map(|g| s * g).collect()
        };
        if child <= d {
            // corner child: vertex coordinate 2 l_i - 1, midpoint coordinates 2 l_j
            values[child] = 2.0 * l[child] - 1.0;
            grads[child] = scaled(child, 2.0);
            for j in (0..=d).filter(|&j| j != child) {
                let n = edge_node(child, j);
                values[n] = 2.0 * l[j];
                grads[n] = scaled(j, 2.0);
            }
        } else {
            // middle child: the midpoint of edge (i, j) has coordinate 1 - 2 l_k
            for &(a, b) in &self.edges {
                let c = (0..=d).find(|&c| c != a && c != b).expect("triangle");
                let n = edge_node(a, b);
                values[n] = 1.0 - 2.0 * l[c];
                grads[n] = scaled(c, -2.0);
            }
        }
        (values, grads)
    }
}

impl LocalBasis for ScalarBasis {
    fn size(&self) -> usize {
        self.size
    }
    fn domain_dim(&self) -> usize {
        self.dim
    }
    fn range_dim(&self) -> usize {
        1
    }
    fn evaluate(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.values_and_gradients(x)
            .0
            .into_iter()
            .map(|v| vec![v])
            .collect()
    }
    fn jacobian(&self, x: &[f64]) -> Vec<DenseMatrix> {
        self.values_and_gradients(x)
            .1
            .into_iter()
            .map(|g| DenseMatrix::from_row_slice(1, self.dim, &g).expect("gradient length"))
            .collect()
    }
}

/// Coefficient `i` is the value of `f` at node `i`.
struct PointInterpolation {
    nodes: Vec<Vec<f64>>,
}

impl LocalInterpolation for PointInterpolation {
    fn interpolate(&self, f: LocalFunction<'_>) -> Vec<f64> {
        self.nodes.iter().map(|x| f(x)[0]).collect()
    }
}

/// Point values at the nodes mapped through the inverse of the nodal matrix
/// `V_ij = phi_j(x_i)`, for bases that are not nodal.
struct NodalSolveInterpolation {
    nodes: Vec<Vec<f64>>,
    lu: Lu,
}

impl NodalSolveInterpolation {
    fn new(basis: &dyn LocalBasis, nodes: Vec<Vec<f64>>) -> Result<Self> {
        let n = nodes.len();
        let mut v = DenseMatrix::zeros(n, n);
        for (i, x) in nodes.iter().enumerate() {
            for (j, phi) in basis.evaluate(x).iter().enumerate() {
                v[(i, j)] = phi[0];
            }
        }
        Ok(Self {
            nodes,
            lu: Lu::new(&v)?,
        })
    }
}

impl LocalInterpolation for NodalSolveInterpolation {
    fn interpolate(&self, f: LocalFunction<'_>) -> Vec<f64> {
        let values: Vec<f64> = self.nodes.iter().map(|x| f(x)[0]).collect();
        self.lu.solve(&values)
    }
}

/// Facet geometry, oriented unit normal and quadrature rule.
struct FacetData {
    normal: Vec<f64>,
    geometry: AffineGeometry,
    rule: &'static [QuadPoint],
}

fn facet_data(kind: GeometryKind) -> Vec<FacetData> {
    let re = reference_element(kind);
    (0..re.size(1))
        .map(|f| {
            let geometry = reference_subentity_geometry(re, f, 1).expect("facet exists");
            FacetData {
                normal: re.outer_normal(f).expect("facet exists"),
                rule: quadrature_rule(geometry.kind(), 3)
                    .expect("order 3 on every facet")
                    .points(),
                geometry,
            }
        })
        .collect()
}

/// `int_F v . n ds` with the unit outer normal.
fn facet_flux(facet: &FacetData, v: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    facet
        .rule
        .iter()
        .map(|q| {
            let x = facet.geometry.global(&q.position);
            let vn: f64 = v(&x).iter().zip(&facet.normal).map(|(a, b)| a * b).sum();
            q.weight * facet.geometry.integration_element(&q.position) * vn
        })
        .sum()
}

/// Coefficient `i` is `sigma_i int_{F_i} f . n_i ds`.
struct FacetFluxInterpolation {
    facets: Vec<FacetData>,
    orientation: FaceOrientation,
}

impl LocalInterpolation for FacetFluxInterpolation {
    fn interpolate(&self, f: LocalFunction<'_>) -> Vec<f64> {
        self.facets
            .iter()
            .enumerate()
            .map(|(i, facet)| self.orientation.sign(i) * facet_flux(facet, f))
            .collect()
    }
}

/// Lowest order Raviart-Thomas shape functions on the prism or pyramid.
///
/// `phi_j = sigma_j sum_m C_mj psi_m` where `psi` spans the raw space and
/// `C` inverts the facet flux matrix of `psi`.
struct Rt0Basis {
    shape: Shape,
    coefficients: DenseMatrix,
    orientation: FaceOrientation,
}

impl Rt0Basis {
    fn raw(shape: Shape, x: &[f64]) -> ([[f64; 3]; 5], [[[f64; 3]; 3]; 5]) {
        let (px, py, pz) = (x[0], x[1], x[2]);
        let zero = [[0.0; 3]; 3];
        match shape {
            Shape::Prism => {
                let mut j = [zero; 5];
                j[2][0][0] = 1.0;
                j[2][1][1] = 1.0;
                j[4][2][2] = 1.0;
                (
                    [
                        [1.0, 0.0, 0.0],
                        [0.0, 1.0, 0.0],
                        [px, py, 0.0],
                        [0.0, 0.0, 1.0],
                        [0.0, 0.0, pz],
                    ],
                    j,
                )
            }
            _ => {
                let s = 1.0 - pz;
                let (r, dr) = if s.abs() > 1e-15 {
                    (
                        [px / s, -py / s, 0.0],
                        [[1.0 / s, 0.0, px / (s * s)], [0.0, -1.0 / s, -py / (s * s)], [0.0; 3]],
                    )
                } else {
                    ([0.0; 3], zero)
                };
                let mut j = [zero; 5];
                j[3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
                j[4] = dr;
                (
                    [
                        [1.0, 0.0, 0.0],
                        [0.0, 1.0, 0.0],
                        [0.0, 0.0, 1.0],
                        [px, py, pz],
                        r,
                    ],
                    j,
                )
            }
        }
    }

    fn new(kind: GeometryKind, orientation: FaceOrientation) -> Result<Self> {
        let facets = facet_data(kind);
        let shape = kind.shape();
        let mut flux = DenseMatrix::zeros(5, 5);
        for (i, facet) in facets.iter().enumerate() {
            for m in 0..5 {
                flux[(i, m)] = facet_flux(facet, |x| Self::raw(shape, x).0[m].to_vec());
            }
        }
        let coefficients = Lu::new(&flux)?.inverse();
        let basis = Self {
            shape,
            coefficients,
            orientation,
        };
        if cfg!(debug_assertions) {
            for (i, facet) in facets.iter().enumerate() {
                for j in 0..5 {
                    let v = facet_flux(facet, |x| basis.evaluate(x)[j].clone());
                    let expected = if i == j { orientation.sign(i) } else { 0.0 };
                    debug_assert!(
                        (v - expected).abs() < 1e-10,
                        "flux of function {j} through facet {i} is {v}"
                    );
                }
            }
        }
        Ok(basis)
    }
}

impl LocalBasis for Rt0Basis {
    fn size(&self) -> usize {
        5
    }
    fn domain_dim(&self) -> usize {
        3
    }
    fn range_dim(&self) -> usize {
        3
    }
    fn evaluate(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let (psi, _) = Self::raw(self.shape, x);
        (0..5)
            .map(|j| {
                let s = self.orientation.sign(j);
                (0..3)
                    .map(|c| s * (0..5).map(|m| self.coefficients[(m, j)] * psi[m][c]).sum::<f64>())
                    .collect()
            })
            .collect()
    }
    fn jacobian(&self, x: &[f64]) -> Vec<DenseMatrix> {
        let (_, dpsi) = Self::raw(self.shape, x);
        (0..5)
            .map(|j| {
                let s = self.orientation.sign(j);
                DenseMatrix::from_fn(3, 3, |r, c| {
                    s * (0..5)
                        .map(|m| self.coefficients[(m, j)] * dpsi[m][r][c])
                        .sum::<f64>()
                })
            })
            .collect()
    }
}

fn simplex_kind(family: Family, d: usize, lo: usize, hi: usize) -> Result<GeometryKind> {
    if d < lo || d > hi {
        return Err(Error::UnsupportedElement(format!(
            "{} is available for dimensions {lo}..={hi}, got {d}",
            family.name()
        )));
    }
    GeometryKind::simplex(d)
}

fn check_order(family: Family, k: usize, max: usize) -> Result<()> {
    if k > max {
        return Err(Error::UnsupportedOrder {
            kind: family.name().to_string(),
            order: k,
            max,
        });
    }
    Ok(())
}

fn point_element(
    kind: GeometryKind,
    family: Family,
    order: usize,
    basis: ScalarBasis,
    nodes: Vec<Vec<f64>>,
) -> LocalFiniteElement {
    let keys = keys_for_points(reference_element(kind), &nodes);
    LocalFiniteElement::assemble(
        kind,
        family,
        order,
        Arc::new(basis),
        keys,
        Arc::new(PointInterpolation { nodes }),
    )
}

pub fn lagrange_simplex(d: usize, k: usize) -> Result<LocalFiniteElement> {
    let family = Family::LagrangeSimplex;
    let kind = simplex_kind(family, d, 1, 3)?;
    check_order(family, k, 2)?;
    let re = reference_element(kind);
    let nodes = match k {
        0 => vec![re.barycenter().to_vec()],
        1 => re.corners().to_vec(),
        _ => p2_layout(d).0,
    };
    Ok(point_element(
        kind,
        family,
        k,
        ScalarBasis::new(d, ScalarSpace::LagrangeSimplex(k)),
        nodes,
    ))
}

pub fn lagrange_cube(d: usize, k: usize) -> Result<LocalFiniteElement> {
    let family = Family::LagrangeCube;
    if !(1..=3).contains(&d) {
        return Err(Error::UnsupportedElement(format!(
            "lagrange_cube is available for dimensions 1..=3, got {d}"
        )));
    }
    check_order(family, k, 2)?;
    let kind = GeometryKind::cube(d)?;
    let nodes = if k == 0 {
        vec![vec![0.5; d]]
    } else {
        let n = k + 1;
        (0..n.pow(d as u32))
            .map(|idx| {
                (0..d)
                    .map(|b| (idx / n.pow(b as u32) % n) as f64 / k as f64)
                    .collect()
            })
            .collect()
    };
    Ok(point_element(
        kind,
        family,
        k,
        ScalarBasis::new(d, ScalarSpace::LagrangeCube(k)),
        nodes,
    ))
}

fn bubble_element(family: Family, d: usize, lo: usize) -> Result<LocalFiniteElement> {
    let kind = simplex_kind(family, d, lo, 3)?;
    let re = reference_element(kind);
    let (space, order, mut nodes) = match family {
        Family::P1Bubble => (ScalarSpace::P1Bubble, 1, re.corners().to_vec()),
        _ => (ScalarSpace::P2Bubble, 2, p2_layout(d).0),
    };
    nodes.push(re.barycenter().to_vec());
    let basis = ScalarBasis::new(d, space);
    let keys = keys_for_points(re, &nodes);
    let interpolation = NodalSolveInterpolation::new(&basis, nodes)?;
    Ok(LocalFiniteElement::assemble(
        kind,
        family,
        order,
        Arc::new(basis),
        keys,
        Arc::new(interpolation),
    ))
}

/// Vertex hats enriched by the normalized element bubble.
pub fn hierarchical_p1_bubble(d: usize) -> Result<LocalFiniteElement> {
    bubble_element(Family::P1Bubble, d, 1)
}

/// Hierarchical quadratic element (vertex hats, edge functions `4 l_i l_j`)
/// enriched by the element bubble. In one dimension the bubble coincides with
/// the edge function, so `d = 1` is rejected.
pub fn hierarchical_p2_bubble(d: usize) -> Result<LocalFiniteElement> {
    bubble_element(Family::P2Bubble, d, 2)
}

/// Piecewise `P_k` on the red refinement of the reference simplex.
///
/// Children are numbered by corner (child `i` holds the points with
/// `l_i >= 1/2`), the middle triangle last.
pub fn refined_lagrange(d: usize, k: usize) -> Result<LocalFiniteElement> {
    let family = Family::RefinedLagrange;
    let kind = simplex_kind(family, d, 1, 2)?;
    check_order(family, k, 1)?;
    let basis = ScalarBasis::new(d, ScalarSpace::Refined(k));
    if k == 1 {
        return Ok(point_element(kind, family, k, basis, p2_layout(d).0));
    }
    let nodes = refined_child_barycenters(d);
    let keys = (0..nodes.len()).map(|t| LocalKey::new(0, 0, t)).collect();
    Ok(LocalFiniteElement::assemble(
        kind,
        family,
        k,
        Arc::new(basis),
        keys,
        Arc::new(PointInterpolation { nodes }),
    ))
}

/// Barycenters of the red refinement children, in child order.
pub fn refined_child_barycenters(d: usize) -> Vec<Vec<f64>> {
    let kind = GeometryKind::simplex(d).expect("dimension 1 or 2");
    let re = reference_element(kind);
    let center = re.barycenter();
    let mut out: Vec<Vec<f64>> = re
        .corners()
        .iter()
        .map(|c| c.iter().zip(center).map(|(a, b)| 0.5 * (a + b)).collect())
        .collect();
    if d == 2 {
        out.push(center.to_vec());
    }
    out
}

/// Nonconforming linear element with one function per facet.
pub fn crouzeix_raviart(d: usize) -> Result<LocalFiniteElement> {
    let family = Family::CrouzeixRaviart;
    let kind = simplex_kind(family, d, 2, 3)?;
    let re = reference_element(kind);
    let nodes: Vec<Vec<f64>> = (0..re.size(1))
        .map(|i| re.position(i, 1).expect("facet").to_vec())
        .collect();
    Ok(point_element(
        kind,
        family,
        1,
        ScalarBasis::new(d, ScalarSpace::CrouzeixRaviart),
        nodes,
    ))
}

fn rt0(kind: GeometryKind, family: Family, orientation: FaceOrientation) -> Result<LocalFiniteElement> {
    let facets = reference_element(kind).size(1);
    if orientation.count() != facets {
        return Err(Error::InvalidArgument(format!(
            "{} needs {facets} orientation flags, got {}",
            family.name(),
            orientation.count()
        )));
    }
    let basis = Rt0Basis::new(kind, orientation)?;
    let keys = (0..facets).map(|f| LocalKey::new(f, 1, 0)).collect();
    let mut fe = LocalFiniteElement::assemble(
        kind,
        family,
        0,
        Arc::new(basis),
        keys,
        Arc::new(FacetFluxInterpolation {
            facets: facet_data(kind),
            orientation,
        }),
    );
    fe.orientation = Some(orientation);
    Ok(fe)
}

pub fn rt0_prism(orientation: FaceOrientation) -> Result<LocalFiniteElement> {
    rt0(GeometryKind::PRISM, Family::Rt0Prism, orientation)
}

pub fn rt0_pyramid(orientation: FaceOrientation) -> Result<LocalFiniteElement> {
    rt0(GeometryKind::PYRAMID, Family::Rt0Pyramid, orientation)
}

/// Builds an element by family name: `dim` and `order` are ignored where
/// the family fixes them, `bits` only applies to the RT0 families.
pub fn element_by_name(name: &str, dim: usize, order: usize, bits: u32) -> Result<LocalFiniteElement> {
    match Family::parse(name)? {
        Family::LagrangeSimplex => lagrange_simplex(dim, order),
        Family::LagrangeCube => lagrange_cube(dim, order),
        Family::P1Bubble => hierarchical_p1_bubble(dim),
        Family::P2Bubble => hierarchical_p2_bubble(dim),
        Family::RefinedLagrange => refined_lagrange(dim, order),
        Family::CrouzeixRaviart => crouzeix_raviart(dim),
        Family::Rt0Prism => rt0_prism(FaceOrientation::new(bits, 5)?),
        Family::Rt0Pyramid => rt0_pyramid(FaceOrientation::new(bits, 5)?),
    }
}

/// Every shipped element, including the oriented RT0 variants.
pub fn all_elements() -> &'static [LocalFiniteElement] {
    static CATALOG: OnceLock<Vec<LocalFiniteElement>> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let mut out = Vec::new();
        for d in 1..=3 {
            for k in 0..=2 {
                out.push(lagrange_simplex(d, k).expect("in range"));
                out.push(lagrange_cube(d, k).expect("in range"));
            }
            out.push(hierarchical_p1_bubble(d).expect("in range"));
        }
        for d in 2..=3 {
            out.push(hierarchical_p2_bubble(d).expect("in range"));
            out.push(crouzeix_raviart(d).expect("in range"));
        }
        for d in 1..=2 {
            for k in 0..=1 {
                out.push(refined_lagrange(d, k).expect("in range"));
            }
        }
        for bits in [0, 0b00001, 0b00101] {
            let o = FaceOrientation::new(bits, 5).expect("five flags");
            out.push(rt0_prism(o).expect("unisolvent"));
            out.push(rt0_pyramid(o).expect("unisolvent"));
        }
        out
    })
}

/// Facet flux matrix: entry `(i, j)` is `int_{F_i} phi_j . n_i ds` with the
/// unit outer normal.
pub fn flux_matrix(element: &LocalFiniteElement) -> Result<DenseMatrix> {
    if element.range_dim() != element.kind().dim() {
        return Err(Error::InvalidArgument(
            "flux matrix needs a vector-valued element".into(),
        ));
    }
    let facets = facet_data(element.kind());
    let n = element.size();
    let mut m = DenseMatrix::zeros(facets.len(), n);
    for (i, facet) in facets.iter().enumerate() {
        for j in 0..n {
            m[(i, j)] = facet_flux(facet, |x| element.basis().evaluate(x)[j].clone());
        }
    }
    Ok(m)
}

/// Divergence of each shape function from the analytic Jacobian.
pub fn divergence(element: &LocalFiniteElement, x: &[f64]) -> Vec<f64> {
    element
        .basis()
        .jacobian(x)
        .iter()
        .map(|j| (0..j.rows().min(j.cols())).map(|i| j[(i, i)]).sum())
        .collect()
}
