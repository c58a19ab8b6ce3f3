//! Randomized invariant suites over geometries, quadrature and elements.
//!
//! Each suite returns one [`CheckResult`] per property; the `geomcheck`
//! subcommand prints them. All randomness derives from one seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{matmul, DenseMatrix};
use crate::geometry::{
    newton_local, AffineGeometry, DifferentiableMap, FnMap, Geometry, LocalFeGeometry,
    MappedGeometry, MultiLinearGeometry, SineSurface, NEWTON_MAX_ITERATIONS,
};
use crate::localfe::{all_elements, flux_matrix, Family, LocalFiniteElement};
use crate::quadrature::{max_order, quadrature_rule};
use crate::refelem::{reference_element, GeometryKind, Shape};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    fn bound(name: impl Into<String>, worst: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: worst <= tolerance,
            worst,
            tolerance,
        }
    }
}

/// Uniform point of the reference element, pulled towards the barycenter by
/// `shrink` to stay clear of the boundary.
pub fn random_point(kind: GeometryKind, rng: &mut impl Rng, shrink: f64) -> Vec<f64> {
    let re = reference_element(kind);
    let d = kind.dim();
    let p = loop {
        let p: Vec<f64> = (0..d).map(|_| rng.random_range(0.0..1.0)).collect();
        if re.check_inside(&p, 0.0) {
            break p;
        }
    };
    p.iter()
        .zip(re.barycenter())
        .map(|(x, b)| b + shrink * (x - b))
        .collect()
}

/// Uniform point on the boundary of the reference element.
pub fn random_boundary_point(kind: GeometryKind, rng: &mut impl Rng) -> Vec<f64> {
    let re = reference_element(kind);
    let facet = rng.random_range(0..re.size(1));
    let sub = re.subentity(facet, 1).expect("facet exists");
    let local = random_point(sub.kind, rng, 1.0);
    let geo = crate::geometry::reference_subentity_geometry(re, facet, 1).expect("facet exists");
    geo.global(&local)
}

pub fn finite_difference_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DenseMatrix {
    let d = x.len();
    let mut columns = Vec::with_capacity(d);
    for k in 0..d {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[k] += h;
        m[k] -= h;
        let (fp, fm) = (f(&p), f(&m));
        columns.push(
            fp.iter()
                .zip(&fm)
                .map(|(a, b)| (a - b) / (2.0 * h))
                .collect::<Vec<f64>>(),
        );
    }
    let r = columns.first().map_or(0, Vec::len);
    DenseMatrix::from_fn(r, d, |i, k| columns[k][i])
}

/// Smooth invertible chart `R^w -> R^w` close to the identity.
fn wobble(w: usize) -> Box<dyn DifferentiableMap> {
    Box::new(FnMap::new(
        w,
        w,
        move |x: &[f64]| (0..w).map(|i| x[i] + 0.1 * x[(i + 1) % w].sin()).collect(),
        move |x: &[f64]| {
            DenseMatrix::from_fn(w, w, |i, j| {
                let mut v = if i == j { 1.0 } else { 0.0 };
                if j == (i + 1) % w {
                    v += 0.1 * x[j].cos();
                }
                v
            })
        },
    ))
}

/// A well-conditioned `w x d` matrix: the embedding plus a small perturbation.
fn random_embedding(w: usize, d: usize, rng: &mut impl Rng) -> DenseMatrix {
    DenseMatrix::from_fn(w, d, |i, j| {
        let base = if i == j { 1.0 } else { 0.0 };
        base + rng.random_range(-0.2..0.2)
    })
}

/// Geometries of the four implementations for a reference kind and world
/// dimension, labelled by implementation.
pub fn sample_geometries(
    kind: GeometryKind,
    w: usize,
    rng: &mut impl Rng,
) -> Vec<(&'static str, Box<dyn Geometry>)> {
    let d = kind.dim();
    let re = reference_element(kind);
    let a = random_embedding(w, d, rng);
    let origin: Vec<f64> = (0..w).map(|_| rng.random_range(-1.0..1.0)).collect();
    let affine = AffineGeometry::new(kind, origin, a).expect("shapes agree");
    let corners: Vec<Vec<f64>> = re
        .corners()
        .iter()
        .map(|c| {
            affine
                .global(c)
                .into_iter()
                .map(|v| v + rng.random_range(-0.08..0.08))
                .collect()
        })
        .collect();
    let multilinear = MultiLinearGeometry::new(kind, corners).expect("corner count");
    let mut out: Vec<(&'static str, Box<dyn Geometry>)> = vec![
        ("affine", Box::new(affine.clone())),
        ("multilinear", Box::new(multilinear.clone())),
    ];
    let mapped: Box<dyn Geometry> = if w == d + 1 && d == 2 {
        let flat = random_embedding(2, 2, rng);
        let base = AffineGeometry::new(kind, vec![0.1, 0.2], flat).expect("shapes agree");
        Box::new(MappedGeometry::new(SineSurface, base).expect("dimensions agree"))
    } else {
        Box::new(MappedGeometry::new(wobble(w), multilinear).expect("dimensions agree"))
    };
    out.push(("mapped", mapped));
    let lagrange = match kind.shape() {
        Shape::Simplex => crate::localfe::lagrange_simplex(d, 2).ok(),
        Shape::Cube => crate::localfe::lagrange_cube(d, 2).ok(),
        _ => None,
    };
    if let Some(fe) = lagrange {
        let chart = wobble(w);
        let lfe = LocalFeGeometry::interpolate(fe, w, |x| chart.evaluate(&affine.global(x)))
            .expect("scalar element");
        out.push(("localfe", Box::new(lfe)));
    }
    out
}

fn kinds_of_dim(d: usize) -> Vec<GeometryKind> {
    GeometryKind::all().into_iter().filter(|k| k.dim() == d).collect()
}

/// Finite-difference Jacobians, `J^+ J = I` and the Newton round trip.
pub fn geometry_suite(seed: u64, points: usize) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (d, w) in [(2, 2), (2, 3), (3, 3)] {
        let mut worst = [0.0f64; 4];
        let mut newton_fail = 0usize;
        for kind in kinds_of_dim(d) {
            for (_, g) in sample_geometries(kind, w, &mut rng) {
                for _ in 0..points {
                    let x = random_point(kind, &mut rng, 0.95);
                    let j = g.jacobian(&x);
                    let fd = finite_difference_jacobian(|p| g.global(p), &x, 1e-6);
                    worst[0] = worst[0].max(j.max_abs_diff(&fd) / j.max_abs().max(1.0));
                    let id = match g.jacobian_inverse(&x).and_then(|ji| matmul(&ji, &j)) {
                        Ok(p) => p.max_abs_diff(&DenseMatrix::identity(d)),
                        Err(_) => f64::INFINITY,
                    };
                    worst[1] = worst[1].max(id);
                    match newton_local(g.as_ref(), &g.global(&x)) {
                        Ok(r) => {
                            let err = r
                                .local
                                .iter()
                                .zip(&x)
                                .map(|(a, b)| (a - b).abs())
                                .fold(0.0, f64::max);
                            worst[2] = worst[2].max(err);
                            worst[3] = worst[3].max(r.iterations as f64);
                        }
                        Err(_) => newton_fail += 1,
                    }
                }
            }
        }
        let tag = format!("d={d} w={w}");
        out.push(CheckResult::bound(format!("geometry {tag} jacobian vs finite differences"), worst[0], 1e-6));
        out.push(CheckResult::bound(format!("geometry {tag} inverse times jacobian"), worst[1], 1e-12));
        let roundtrip = if newton_fail > 0 { f64::INFINITY } else { worst[2] };
        out.push(CheckResult::bound(format!("geometry {tag} local of global"), roundtrip, 1e-10));
        out.push(CheckResult::bound(
            format!("geometry {tag} newton iterations"),
            worst[3],
            NEWTON_MAX_ITERATIONS as f64,
        ));
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Exact integral of `x^a` over the reference element.
pub fn monomial_moment(kind: GeometryKind, a: &[usize]) -> f64 {
    match kind.shape() {
        Shape::Vertex => 1.0,
        Shape::Cube => a.iter().map(|&k| 1.0 / (k as f64 + 1.0)).product(),
        Shape::Simplex => {
            let total: usize = a.iter().sum();
            a.iter().map(|&k| factorial(k)).product::<f64>() / factorial(total + kind.dim())
        }
        Shape::Prism => monomial_moment(GeometryKind::TRIANGLE, &a[..2]) / (a[2] as f64 + 1.0),
        Shape::Pyramid => {
            let (p, q, r) = (a[0], a[1], a[2]);
            factorial(r) * factorial(p + q + 2)
                / factorial(p + q + r + 3)
                / ((p + 1) as f64 * (q + 1) as f64)
        }
    }
}

/// Exponent tuples of total degree at most `degree` in `d` variables.
pub fn exponents(d: usize, degree: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for first in 0..=degree {
        for mut rest in exponents(d - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn monomial(x: &[f64], a: &[usize]) -> f64 {
    x.iter().zip(a).map(|(v, &k)| v.powi(k as i32)).product()
}

/// Every monomial up to the rule order against the closed-form moments.
pub fn quadrature_suite() -> Vec<CheckResult> {
    GeometryKind::all()
        .into_iter()
        .map(|kind| {
            let mut worst = 0.0f64;
            for order in 0..=max_order(kind) {
                let rule = quadrature_rule(kind, order).expect("order within range");
                for a in exponents(kind.dim(), order) {
                    let q = rule.integrate(|x| monomial(x, &a));
                    worst = worst.max((q - monomial_moment(kind, &a)).abs());
                }
            }
            CheckResult::bound(format!("quadrature {kind} monomial exactness"), worst, 1e-12)
        })
        .collect()
}

fn kronecker_error(m: &DenseMatrix, signs: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let e = if i == j { signs[i] } else { 0.0 };
            worst = worst.max((m[(i, j)] - e).abs());
        }
    }
    worst
}

/// Interpolation of each shape function against the unit vectors.
pub fn unisolvence_error(fe: &LocalFiniteElement) -> f64 {
    let n = fe.size();
    let mut m = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let c = fe.interpolate(&|x: &[f64]| fe.basis().evaluate(x)[j].clone());
        for (i, v) in c.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    kronecker_error(&m, &vec![1.0; n])
}

fn is_piecewise(fe: &LocalFiniteElement) -> bool {
    fe.family() == Family::RefinedLagrange
}

/// Interior point where every barycentric coordinate is away from 1/2, so
/// difference stencils of piecewise elements stay inside one child.
fn smooth_point(fe: &LocalFiniteElement, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let x = random_point(fe.kind(), rng, 0.95);
        if !is_piecewise(fe) {
            return x;
        }
        let l0 = 1.0 - x.iter().sum::<f64>();
        if std::iter::once(l0).chain(x.iter().copied()).all(|l| (l - 0.5).abs() > 1e-3) {
            return x;
        }
    }
}

fn reproduced_degree(fe: &LocalFiniteElement) -> usize {
    match fe.family() {
        Family::P1Bubble | Family::CrouzeixRaviart => 1,
        Family::P2Bubble => 2,
        Family::Rt0Prism | Family::Rt0Pyramid => 0,
        _ => fe.order(),
    }
}

/// Interpolates random members of the advertised space and compares the
/// interpolant with the original at random points.
fn reproduction_error(fe: &LocalFiniteElement, rng: &mut impl Rng) -> f64 {
    let d = fe.kind().dim();
    let r = fe.range_dim();
    let coefficients: Vec<(Vec<usize>, Vec<f64>)> =
        exponents(d, reproduced_degree(fe))
            .into_iter()
            .map(|a| (a, (0..r).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
    let radial = rng.random_range(-1.0..1.0);
    let vector_field = r > 1;
    let f = |x: &[f64]| -> Vec<f64> {
        let mut v = vec![0.0; r];
        for (a, c) in &coefficients {
            let m = monomial(x, a);
            v.iter_mut().zip(c).for_each(|(vi, ci)| *vi += m * ci);
        }
        if vector_field {
            v.iter_mut().zip(x).for_each(|(vi, xi)| *vi += radial * xi);
        }
        v
    };
    let c = fe.interpolate(&f);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = random_point(fe.kind(), rng, 0.95);
        let values = fe.basis().evaluate(&x);
        let exact = f(&x);
        for k in 0..r {
            let u: f64 = c.iter().zip(&values).map(|(ci, v)| ci * v[k]).sum();
            worst = worst.max((u - exact[k]).abs());
        }
    }
    worst
}

/// Properties of every shipped element, grouped by property.
pub fn element_suite(seed: u64, points: usize) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unisolvence = 0.0f64;
    let mut kronecker = 0.0f64;
    let mut partition = 0.0f64;
    let mut bubble = 0.0f64;
    let mut jacobian = 0.0f64;
    let mut keys = 0.0f64;
    let mut reproduction = 0.0f64;
    for fe in all_elements() {
        unisolvence = unisolvence.max(unisolvence_error(fe));
        kronecker = kronecker.max(match fe.family() {
            Family::Rt0Prism | Family::Rt0Pyramid => {
                let m = flux_matrix(fe).expect("vector element");
                let o = fe.orientation().expect("oriented element");
                let signs: Vec<f64> = (0..m.rows()).map(|i| o.sign(i)).collect();
                kronecker_error(&m, &signs)
            }
            _ => unisolvence_error(fe),
        });
        let re = reference_element(fe.kind());
        let mut seen = std::collections::HashSet::new();
        for k in fe.keys() {
            let valid = k.codim <= re.dim() && k.sub_entity < re.size(k.codim);
            if !valid || !seen.insert(*k) {
                keys = 1.0;
            }
        }
        let unit_sum = matches!(
            fe.family(),
            Family::LagrangeSimplex | Family::LagrangeCube | Family::RefinedLagrange | Family::CrouzeixRaviart
        );
        for _ in 0..points {
            let x = smooth_point(fe, &mut rng);
            let values = fe.basis().evaluate(&x);
            if unit_sum {
                let s: f64 = values.iter().map(|v| v[0]).sum();
                partition = partition.max((s - 1.0).abs());
            }
            let analytic = fe.basis().jacobian(&x);
            let fd = finite_difference_jacobian(
                |p| fe.basis().evaluate(p).into_iter().flatten().collect(),
                &x,
                1e-6,
            );
            let r = fe.range_dim();
            for (i, j) in analytic.iter().enumerate() {
                let scale = j.max_abs().max(1.0);
                for a in 0..r {
                    for b in 0..fe.kind().dim() {
                        jacobian = jacobian.max((j[(a, b)] - fd[(i * r + a, b)]).abs() / scale);
                    }
                }
            }
            if matches!(fe.family(), Family::P1Bubble | Family::P2Bubble) {
                let y = random_boundary_point(fe.kind(), &mut rng);
                let v = fe.basis().evaluate(&y);
                bubble = bubble.max(v[fe.size() - 1][0].abs());
            }
        }
        reproduction = reproduction.max(reproduction_error(fe, &mut rng));
    }
    vec![
        CheckResult::bound("elements unisolvence", unisolvence, 1e-12),
        CheckResult::bound("elements nodal or flux kronecker", kronecker, 1e-10),
        CheckResult::bound("elements partition of unity", partition, 1e-13),
        CheckResult::bound("elements bubble vanishes on boundary", bubble, 1e-13),
        CheckResult::bound("elements jacobian vs finite differences", jacobian, 1e-6),
        CheckResult::bound("elements keys reference subentities", keys, 0.0),
        CheckResult::bound("elements polynomial reproduction", reproduction, 1e-12),
    ]
}

/// The geometry and quadrature suites, plus the element suite if requested.
pub fn run_all(seed: u64, elements: bool) -> Result<Vec<CheckResult>> {
    let mut out = geometry_suite(seed, 100);
    out.extend(quadrature_suite());
    if elements {
        out.extend(element_suite(seed, 100));
    }
    Ok(out)
}
