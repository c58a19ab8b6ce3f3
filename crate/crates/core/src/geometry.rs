//! Element geometries: maps from reference coordinates to world coordinates.
//!
//! Every implementation provides `global` and `jacobian_transposed`; the
//! non-transposed Jacobian, the (pseudo-)inverses, the integration element
//! and the Newton-based inverse map are derived from those two.
//!
//! For geometries of positive codimension the Jacobian `J` (`w x d`) is not
//! square. `jacobian_inverse` is then the left pseudo-inverse
//! `(J^T J)^{-1} J^T` and `jacobian_inverse_transposed` the right
//! pseudo-inverse of `J^T`.

use crate::dense::{
    left_pseudo_inverse, matmul, matvec, norm, right_pseudo_inverse, transposed_view,
    DenseMatrix, MatrixRead,
};
use crate::localfe::LocalFiniteElement;
use crate::quadrature::quadrature_rule;
use crate::refelem::{reference_element, GeometryKind, ReferenceElement, Shape};
use crate::{Error, Result};

/// Maximum number of Newton updates in [`Geometry::local`].
pub const NEWTON_MAX_ITERATIONS: usize = 30;
/// Relative residual tolerance of [`Geometry::local`].
pub const NEWTON_TOLERANCE: f64 = 1e-12;

pub trait Geometry {
    fn kind(&self) -> GeometryKind;

    /// Dimension of the world the element is embedded in.
    fn world_dim(&self) -> usize;

    fn local_dim(&self) -> usize {
        self.kind().dim()
    }

    fn global(&self, local: &[f64]) -> Vec<f64>;

    /// The `d x w` transposed Jacobian.
    fn jacobian_transposed(&self, local: &[f64]) -> DenseMatrix;

    fn is_affine(&self) -> bool;

    /// The `w x d` Jacobian.
    fn jacobian(&self, local: &[f64]) -> DenseMatrix {
        transposed_view(&self.jacobian_transposed(local)).to_dense()
    }

    /// The `d x w` left pseudo-inverse of the Jacobian.
    fn jacobian_inverse(&self, local: &[f64]) -> Result<DenseMatrix> {
        let jt = self.jacobian_transposed(local);
        left_pseudo_inverse(&transposed_view(&jt)).map_err(|e| singular_at(e, local))
    }

    /// The `w x d` right pseudo-inverse of the transposed Jacobian.
    fn jacobian_inverse_transposed(&self, local: &[f64]) -> Result<DenseMatrix> {
        let jt = self.jacobian_transposed(local);
        right_pseudo_inverse(&jt).map_err(|e| singular_at(e, local))
    }

    /// `sqrt(det(J^T J))`.
    fn integration_element(&self, local: &[f64]) -> f64 {
        let jt = self.jacobian_transposed(local);
        gram_determinant(&jt).max(0.0).sqrt()
    }

    fn corner_count(&self) -> usize {
        reference_element(self.kind()).corner_count()
    }

    fn corner(&self, i: usize) -> Vec<f64> {
        self.global(reference_element(self.kind()).corner(i))
    }

    fn center(&self) -> Vec<f64> {
        self.global(reference_element(self.kind()).barycenter())
    }

    fn volume(&self, order: usize) -> Result<f64> {
        let rule = quadrature_rule(self.kind(), order)?;
        Ok(rule
            .iter()
            .map(|q| q.weight * self.integration_element(&q.position))
            .sum())
    }

    /// Local coordinate of the world point `x`, by Newton iteration.
    fn local(&self, x: &[f64]) -> Result<Vec<f64>> {
        newton_local(self, x).map(|r| r.local)
    }
}

impl<G: Geometry + ?Sized> Geometry for Box<G> {
    fn kind(&self) -> GeometryKind {
        (**self).kind()
    }
    fn world_dim(&self) -> usize {
        (**self).world_dim()
    }
    fn global(&self, local: &[f64]) -> Vec<f64> {
        (**self).global(local)
    }
    fn jacobian_transposed(&self, local: &[f64]) -> DenseMatrix {
        (**self).jacobian_transposed(local)
    }
    fn is_affine(&self) -> bool {
        (**self).is_affine()
    }
    fn jacobian(&self, local: &[f64]) -> DenseMatrix {
        (**self).jacobian(local)
    }
}

fn singular_at(e: Error, local: &[f64]) -> Error {
    match e {
        Error::Singular { .. } => Error::SingularJacobian {
            local: local.to_vec(),
        },
        other => other,
    }
}

/// `det(Jt Jt^T)` for a `d x w` matrix.
fn gram_determinant(jt: &DenseMatrix) -> f64 {
    let d = jt.rows();
    let gram = DenseMatrix::from_fn(d, d, |a, b| {
        jt.row(a).iter().zip(jt.row(b)).map(|(x, y)| x * y).sum()
    });
    crate::dense::determinant(&gram).unwrap_or(0.0)
}

/// Outcome of the Newton inversion.
#[derive(Clone, Debug, PartialEq)]
pub struct NewtonReport {
    pub local: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Newton iteration `xi <- xi + J^+(xi) (x - global(xi))` from the reference
/// barycenter.
///
/// Stops when `|x - global(xi)| <= 1e-12 (1 + |x|)`. For `w > d` the
/// iteration is Gauss-Newton and also stops once the update stagnates, which
/// returns the closest-point parameter for points off the surface; the
/// residual is then reported as is.
pub fn newton_local<G: Geometry + ?Sized>(g: &G, x: &[f64]) -> Result<NewtonReport> {
    if x.len() != g.world_dim() {
        return Err(Error::ShapeMismatch(format!(
            "world point of dimension {} for a geometry in dimension {}",
            x.len(),
            g.world_dim()
        )));
    }
    let tol = NEWTON_TOLERANCE * (1.0 + norm(x));
    let surface = g.world_dim() > g.local_dim();
    let mut xi = reference_element(g.kind()).barycenter().to_vec();
    let residual_at = |xi: &[f64]| -> (Vec<f64>, f64) {
        let r: Vec<f64> = x.iter().zip(g.global(xi)).map(|(a, b)| a - b).collect();
        let n = norm(&r);
        (r, n)
    };
    let mut iterations = 0;
    loop {
        let (r, res) = residual_at(&xi);
        if res <= tol {
            return Ok(NewtonReport {
                local: xi,
                residual: res,
                iterations,
            });
        }
        if iterations == NEWTON_MAX_ITERATIONS {
            return Err(Error::NoConvergence {
                iterations,
                residual: res,
            });
        }
        let step = matvec(&g.jacobian_inverse(&xi)?, &r)?;
        xi.iter_mut().zip(step.iter()).for_each(|(a, b)| *a += b);
        iterations += 1;
        if surface && norm(&step) <= 1e-14 * (1.0 + norm(&xi)) {
            let (_, res) = residual_at(&xi);
            return Ok(NewtonReport {
                local: xi,
                residual: res,
                iterations,
            });
        }
    }
}

/// `x0 + A xi` with a constant `w x d` matrix `A`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineGeometry {
    kind: GeometryKind,
    origin: Vec<f64>,
    matrix: DenseMatrix,
}

impl AffineGeometry {
    pub fn new(kind: GeometryKind, origin: Vec<f64>, matrix: DenseMatrix) -> Result<Self> {
        if matrix.rows() != origin.len() || matrix.cols() != kind.dim() {
            return Err(Error::ShapeMismatch(format!(
                "affine map of {kind} needs a {}x{} matrix, got {}x{}",
                origin.len(),
                kind.dim(),
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(Self {
            kind,
            origin,
            matrix,
        })
    }

    /// Identity map of the reference element into `R^d`.
    pub fn reference(kind: GeometryKind) -> Self {
        let d = kind.dim();
        Self {
            kind,
            origin: vec![0.0; d],
            matrix: DenseMatrix::identity(d),
        }
    }

    /// Affine map determined by the images of corner 0 and of the corners
    /// at the unit coordinate directions. Remaining corners are ignored.
    pub fn from_corners(kind: GeometryKind, corners: &[Vec<f64>]) -> Result<Self> {
        let re = reference_element(kind);
        if corners.len() != re.corner_count() {
            return Err(Error::ShapeMismatch(format!(
                "{kind} has {} corners, got {}",
                re.corner_count(),
                corners.len()
            )));
        }
        let origin = corners.first().cloned().unwrap_or_default();
        let w = origin.len();
        let axes = unit_corners(re);
        let mut matrix = DenseMatrix::zeros(w, kind.dim());
        for (col, &c) in axes.iter().enumerate() {
            if corners[c].len() != w {
                return Err(Error::ShapeMismatch("corners of differing dimension".into()));
            }
            for i in 0..w {
                matrix[(i, col)] = corners[c][i] - origin[i];
            }
        }
        Ok(Self {
            kind,
            origin,
            matrix,
        })
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }
}

/// Corner numbers at `e_0, ..., e_{d-1}`.
fn unit_corners(re: &ReferenceElement) -> Vec<usize> {
    let d = re.dim();
    (0..d)
        .map(|k| {
            (0..re.corner_count())
                .find(|&c| {
                    re.corner(c)
                        .iter()
                        .enumerate()
                        .all(|(j, &v)| v == if j == k { 1.0 } else { 0.0 })
                })
                .expect("every reference element has its unit corners")
        })
        .collect()
}

impl Geometry for AffineGeometry {
    fn kind(&self) -> GeometryKind {
        self.kind
    }
    fn world_dim(&self) -> usize {
        self.origin.len()
    }
    fn global(&self, local: &[f64]) -> Vec<f64> {
        (0..self.origin.len())
            .map(|i| {
                self.origin[i]
                    + self
                        .matrix
                        .row(i)
                        .iter()
                        .zip(local)
                        .map(|(a, x)| a * x)
                        .sum::<f64>()
            })
            .collect()
    }
    fn jacobian_transposed(&self, _local: &[f64]) -> DenseMatrix {
        self.matrix.transposed()
    }
    fn jacobian(&self, _local: &[f64]) -> DenseMatrix {
        self.matrix.clone()
    }
    fn is_affine(&self) -> bool {
        true
    }
}

/// Affine geometry of subentity `(i, codim)` inside its reference element.
pub fn reference_subentity_geometry(
    re: &ReferenceElement,
    i: usize,
    codim: usize,
) -> Result<AffineGeometry> {
    let sub = re.subentity(i, codim)?;
    let corners: Vec<Vec<f64>> = sub.corners.iter().map(|&c| re.corner(c).to_vec()).collect();
    AffineGeometry::from_corners(sub.kind, &corners)
}

/// Values and reference gradients of the corner interpolation basis: the
/// multilinear functions on cubes, barycentric coordinates on simplices, and
/// their products or (rational) collapse on prisms and pyramids.
pub(crate) fn corner_basis(kind: GeometryKind, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = kind.dim();
    match kind.shape() {
        Shape::Vertex => (vec![1.0], vec![vec![]]),
        Shape::Simplex => {
            let mut values = Vec::with_capacity(d + 1);
            let mut grads = Vec::with_capacity(d + 1);
            values.push(1.0 - x.iter().sum::<f64>());
            grads.push(vec![-1.0; d]);
            for k in 0..d {
                values.push(x[k]);
                let mut g = vec![0.0; d];
                g[k] = 1.0;
                grads.push(g);
            }
            (values, grads)
        }
        Shape::Cube => {
            let n = 1usize << d;
            let mut values = Vec::with_capacity(n);
            let mut grads = Vec::with_capacity(n);
            for c in 0..n {
                let factor = |b: usize| if c >> b & 1 == 1 { x[b] } else { 1.0 - x[b] };
                let dfactor = |b: usize| if c >> b & 1 == 1 { 1.0 } else { -1.0 };
                values.push((0..d).map(factor).product());
                grads.push(
                    (0..d)
                        .map(|k| {
                            (0..d)
                                .map(|b| if b == k { dfactor(b) } else { factor(b) })
                                .product()
                        })
                        .collect(),
                );
            }
            (values, grads)
        }
        Shape::Prism => {
            let (tri, tri_grad) = corner_basis(GeometryKind::TRIANGLE, &x[..2]);
            let z = x[2];
            let mut values = Vec::with_capacity(6);
            let mut grads = Vec::with_capacity(6);
            for (layer, (h, dh)) in [(1.0 - z, -1.0), (z, 1.0)].into_iter().enumerate() {
                let _ = layer;
                for (t, tg) in tri.iter().zip(&tri_grad) {
                    values.push(t * h);
                    grads.push(vec![tg[0] * h, tg[1] * h, t * dh]);
                }
            }
            (values, grads)
        }
        Shape::Pyramid => {
            let (px, py, pz) = (x[0], x[1], x[2]);
            let s = 1.0 - pz;
            // q = xy / (1 - z), bounded by (1 - z) inside the pyramid
            let (q, dq) = if s.abs() > 1e-15 {
                (px * py / s, [py / s, px / s, px * py / (s * s)])
            } else {
                (0.0, [0.0; 3])
            };
            let values = vec![s - px - py + q, px - q, py - q, q, pz];
            let grads = vec![
                vec![-1.0 + dq[0], -1.0 + dq[1], -1.0 + dq[2]],
                vec![1.0 - dq[0], -dq[1], -dq[2]],
                vec![-dq[0], 1.0 - dq[1], -dq[2]],
                dq.to_vec(),
                vec![0.0, 0.0, 1.0],
            ];
            (values, grads)
        }
    }
}

/// Geometry interpolating its corners with the corner basis of the kind.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiLinearGeometry {
    kind: GeometryKind,
    corners: Vec<Vec<f64>>,
    affine: bool,
}

impl MultiLinearGeometry {
    pub fn new(kind: GeometryKind, corners: Vec<Vec<f64>>) -> Result<Self> {
        let re = reference_element(kind);
        if corners.len() != re.corner_count() {
            return Err(Error::ShapeMismatch(format!(
                "{kind} has {} corners, got {}",
                re.corner_count(),
                corners.len()
            )));
        }
        let w = corners[0].len();
        if w < kind.dim() || corners.iter().any(|c| c.len() != w) {
            return Err(Error::ShapeMismatch(
                "corners must share a world dimension of at least the element dimension".into(),
            ));
        }
        let affine = {
            let a = AffineGeometry::from_corners(kind, &corners)?;
            let scale = corners
                .iter()
                .flatten()
                .fold(1.0f64, |m, v| m.max(v.abs()));
            corners.iter().enumerate().all(|(i, c)| {
                a.global(re.corner(i))
                    .iter()
                    .zip(c)
                    .all(|(p, q)| (p - q).abs() <= 1e-14 * scale)
            })
        };
        Ok(Self {
            kind,
            corners,
            affine,
        })
    }
}

impl Geometry for MultiLinearGeometry {
    fn kind(&self) -> GeometryKind {
        self.kind
    }
    fn world_dim(&self) -> usize {
        self.corners[0].len()
    }
    fn global(&self, local: &[f64]) -> Vec<f64> {
        let (values, _) = corner_basis(self.kind, local);
        let mut x = vec![0.0; self.world_dim()];
        for (n, c) in values.iter().zip(&self.corners) {
            x.iter_mut().zip(c).for_each(|(xi, ci)| *xi += n * ci);
        }
        x
    }
    fn jacobian_transposed(&self, local: &[f64]) -> DenseMatrix {
        let (_, grads) = corner_basis(self.kind, local);
        let mut jt = DenseMatrix::zeros(self.kind.dim(), self.world_dim());
        for (g, c) in grads.iter().zip(&self.corners) {
            for (a, ga) in g.iter().enumerate() {
                for (i, ci) in c.iter().enumerate() {
                    jt[(a, i)] += ga * ci;
                }
            }
        }
        jt
    }
    fn is_affine(&self) -> bool {
        self.affine
    }
}

/// A map `R^m -> R^n` with an analytic derivative.
pub trait DifferentiableMap {
    fn domain_dim(&self) -> usize;
    fn range_dim(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> Vec<f64>;
    /// The `n x m` derivative.
    fn derivative(&self, x: &[f64]) -> DenseMatrix;

    fn is_affine(&self) -> bool {
        false
    }
}

impl<M: DifferentiableMap + ?Sized> DifferentiableMap for Box<M> {
    fn domain_dim(&self) -> usize {
        (**self).domain_dim()
    }
    fn range_dim(&self) -> usize {
        (**self).range_dim()
    }
    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        (**self).evaluate(x)
    }
    fn derivative(&self, x: &[f64]) -> DenseMatrix {
        (**self).derivative(x)
    }
    fn is_affine(&self) -> bool {
        (**self).is_affine()
    }
}

/// A differentiable map from a pair of closures.
pub struct FnMap<F, D> {
    domain: usize,
    range: usize,
    f: F,
    df: D,
}

impl<F, D> FnMap<F, D>
where
    F: Fn(&[f64]) -> Vec<f64>,
    D: Fn(&[f64]) -> DenseMatrix,
{
    pub fn new(domain: usize, range: usize, f: F, df: D) -> Self {
        Self {
            domain,
            range,
            f,
            df,
        }
    }
}

impl<F, D> DifferentiableMap for FnMap<F, D>
where
    F: Fn(&[f64]) -> Vec<f64>,
    D: Fn(&[f64]) -> DenseMatrix,
{
    fn domain_dim(&self) -> usize {
        self.domain
    }
    fn range_dim(&self) -> usize {
        self.range
    }
    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
    fn derivative(&self, x: &[f64]) -> DenseMatrix {
        (self.df)(x)
    }
}

/// The surface `(x, y) -> (x, y, sin(x y))`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SineSurface;

impl DifferentiableMap for SineSurface {
    fn domain_dim(&self) -> usize {
        2
    }
    fn range_dim(&self) -> usize {
        3
    }
    fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0], x[1], (x[0] * x[1]).sin()]
    }
    fn derivative(&self, x: &[f64]) -> DenseMatrix {
        let c = (x[0] * x[1]).cos();
        DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [x[1] * c, x[0] * c]])
    }
}

/// A base geometry composed with a differentiable chart.
pub struct MappedGeometry<M, G> {
    chart: M,
    base: G,
}

impl<M: DifferentiableMap, G: Geometry> MappedGeometry<M, G> {
    pub fn new(chart: M, base: G) -> Result<Self> {
        if chart.domain_dim() != base.world_dim() {
            return Err(Error::ShapeMismatch(format!(
                "chart on R^{} composed with a geometry into R^{}",
                chart.domain_dim(),
                base.world_dim()
            )));
        }
        if chart.range_dim() < base.local_dim() {
            return Err(Error::ShapeMismatch(
                "chart range is smaller than the element dimension".into(),
            ));
        }
        Ok(Self { chart, base })
    }

    pub fn chart(&self) -> &M {
        &self.chart
    }

    pub fn base(&self) -> &G {
        &self.base
    }
}

impl<M: DifferentiableMap, G: Geometry> Geometry for MappedGeometry<M, G> {
    fn kind(&self) -> GeometryKind {
        self.base.kind()
    }
    fn world_dim(&self) -> usize {
        self.chart.range_dim()
    }
    fn global(&self, local: &[f64]) -> Vec<f64> {
        self.chart.evaluate(&self.base.global(local))
    }
    fn jacobian_transposed(&self, local: &[f64]) -> DenseMatrix {
        // (Dchart * J_base)^T = J_base^T * Dchart^T
        let dchart = self.chart.derivative(&self.base.global(local));
        let jt_base = self.base.jacobian_transposed(local);
        matmul(&jt_base, &transposed_view(&dchart)).expect("chart dimensions checked")
    }
    fn is_affine(&self) -> bool {
        self.chart.is_affine() && self.base.is_affine()
    }
}

/// The unit square lifted onto [`SineSurface`].
pub fn sine_surface_geometry() -> MappedGeometry<SineSurface, AffineGeometry> {
    MappedGeometry::new(SineSurface, AffineGeometry::reference(GeometryKind::QUADRILATERAL))
        .expect("dimensions agree")
}

/// Geometry parametrized in a scalar local finite element basis:
/// `global(xi) = sum_i c_i phi_i(xi)`.
#[derive(Clone)]
pub struct LocalFeGeometry {
    element: LocalFiniteElement,
    coefficients: Vec<Vec<f64>>,
}

impl LocalFeGeometry {
    pub fn new(element: LocalFiniteElement, coefficients: Vec<Vec<f64>>) -> Result<Self> {
        if element.range_dim() != 1 {
            return Err(Error::InvalidArgument(
                "geometry parametrization needs a scalar element".into(),
            ));
        }
        if coefficients.len() != element.size() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for an element of size {}",
                coefficients.len(),
                element.size()
            )));
        }
        let w = coefficients.first().map_or(0, Vec::len);
        if w < element.kind().dim() || coefficients.iter().any(|c| c.len() != w) {
            return Err(Error::ShapeMismatch("inconsistent coefficient dimensions".into()));
        }
        Ok(Self {
            element,
            coefficients,
        })
    }

    /// Interpolates `f: reference -> R^w` into the element space.
    pub fn interpolate(
        element: LocalFiniteElement,
        world_dim: usize,
        f: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let mut coefficients = vec![vec![0.0; world_dim]; element.size()];
        for comp in 0..world_dim {
            let c = element.interpolate(&|x: &[f64]| vec![f(x)[comp]]);
            for (coef, v) in coefficients.iter_mut().zip(c) {
                coef[comp] = v;
            }
        }
        Self::new(element, coefficients)
    }

    pub fn element(&self) -> &LocalFiniteElement {
        &self.element
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coefficients
    }
}

impl Geometry for LocalFeGeometry {
    fn kind(&self) -> GeometryKind {
        self.element.kind()
    }
    fn world_dim(&self) -> usize {
        self.coefficients[0].len()
    }
    fn global(&self, local: &[f64]) -> Vec<f64> {
        let values = self.element.basis().evaluate(local);
        let mut x = vec![0.0; self.world_dim()];
        for (v, c) in values.iter().zip(&self.coefficients) {
            x.iter_mut().zip(c).for_each(|(xi, ci)| *xi += v[0] * ci);
        }
        x
    }
    fn jacobian_transposed(&self, local: &[f64]) -> DenseMatrix {
        let grads = self.element.basis().jacobian(local);
        let mut jt = DenseMatrix::zeros(self.kind().dim(), self.world_dim());
        for (g, c) in grads.iter().zip(&self.coefficients) {
            for a in 0..g.cols() {
                let ga = g[(0, a)];
                for (i, ci) in c.iter().enumerate() {
                    jt[(a, i)] += ga * ci;
                }
            }
        }
        jt
    }
    fn is_affine(&self) -> bool {
        self.element.spans_only_affine()
    }
}
