mod common;

use common::{fd_jacobian, interior_point, max_abs_diff};
use fekern::dense::{matmul, DenseMatrix};
use fekern::geometry::{
    newton_local, reference_subentity_geometry, sine_surface_geometry, AffineGeometry, Geometry,
    LocalFeGeometry, MappedGeometry, MultiLinearGeometry, SineSurface, NEWTON_MAX_ITERATIONS,
};
use fekern::localfe::{lagrange_cube, lagrange_simplex};
use fekern::refelem::{reference_element, GeometryKind};
use fekern::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn sine_surface_at_one_one() {
    let g = sine_surface_geometry();
    assert_eq!((g.local_dim(), g.world_dim()), (2, 3));
    let x = [1.0, 1.0];
    let p = g.global(&x);
    assert!(max_abs_diff(&p, &[1.0, 1.0, 1f64.sin()]) < 1e-15);
    let c = 1f64.cos();
    let j = g.jacobian(&x);
    assert!(j.max_abs_diff(&DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [c, c]])) < 1e-14);
    assert!((g.integration_element(&x) - (1.0 + 2.0 * c * c).sqrt()).abs() < 1e-12);
    let fd = fd_jacobian(|p| g.global(p), &x, 1e-6);
    assert!(fd.max_abs_diff(&j) < 1e-8);
}

#[test]
fn surface_pseudo_inverses() {
    let g = sine_surface_geometry();
    let x = [0.3, 0.7];
    let j = g.jacobian(&x);
    let ji = g.jacobian_inverse(&x).unwrap();
    assert!(matmul(&ji, &j).unwrap().max_abs_diff(&DenseMatrix::identity(2)) < 1e-12);
    let jt = g.jacobian_transposed(&x);
    let jit = g.jacobian_inverse_transposed(&x).unwrap();
    assert!(matmul(&jt, &jit).unwrap().max_abs_diff(&DenseMatrix::identity(2)) < 1e-12);
}

#[test]
fn affine_volume_is_determinant() {
    let a = DenseMatrix::from_rows(&[[2.0, 0.5, 0.0], [0.0, 1.0, 0.3], [0.1, 0.0, 3.0]]);
    let det = fekern::dense::determinant(&a).unwrap();
    for kind in [GeometryKind::TETRAHEDRON, GeometryKind::HEXAHEDRON, GeometryKind::PRISM, GeometryKind::PYRAMID] {
        let g = AffineGeometry::new(kind, vec![1.0, -1.0, 0.0], a.clone()).unwrap();
        assert!(g.is_affine());
        let v = reference_element(kind).volume() * det;
        assert!((g.volume(2).unwrap() - v).abs() < 1e-13, "{kind}");
    }
}

#[test]
fn twisted_square_volume() {
    // corners (0,0), (1,0), (0,1), (2,2): area of the quadrilateral is 2
    let g = MultiLinearGeometry::new(
        GeometryKind::QUADRILATERAL,
        vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![2.0, 2.0]],
    )
    .unwrap();
    assert!(!g.is_affine());
    assert!((g.volume(2).unwrap() - 2.0).abs() < 1e-14);
    assert!(max_abs_diff(&g.center(), &g.global(&[0.5, 0.5])) < 1e-15);
}

#[test]
fn affine_detection_of_multilinear() {
    let parallelogram = MultiLinearGeometry::new(
        GeometryKind::QUADRILATERAL,
        vec![vec![0.0, 0.0], vec![2.0, 0.5], vec![0.3, 1.0], vec![2.3, 1.5]],
    )
    .unwrap();
    assert!(parallelogram.is_affine());
    let tri = MultiLinearGeometry::new(
        GeometryKind::TRIANGLE,
        vec![vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]],
    )
    .unwrap();
    assert!(tri.is_affine());
    assert!((tri.volume(1).unwrap() - 3f64.sqrt() / 2.0).abs() < 1e-14);
}

#[test]
fn degenerate_map_reports_singular_jacobian() {
    let g = AffineGeometry::new(
        GeometryKind::TRIANGLE,
        vec![0.0, 0.0],
        DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]),
    )
    .unwrap();
    match g.jacobian_inverse(&[0.2, 0.2]) {
        Err(Error::SingularJacobian { local }) => assert_eq!(local, vec![0.2, 0.2]),
        other => panic!("expected SingularJacobian, got {other:?}"),
    }
}

#[test]
fn newton_on_identity_takes_one_step() {
    let g = AffineGeometry::reference(GeometryKind::HEXAHEDRON);
    let r = newton_local(&g, &[0.1, 0.9, 0.4]).unwrap();
    assert_eq!(r.iterations, 1);
    assert!(max_abs_diff(&r.local, &[0.1, 0.9, 0.4]) < 1e-15);
}

#[test]
fn newton_projects_off_surface_points() {
    let g = sine_surface_geometry();
    let on = g.global(&[0.4, 0.2]);
    // gradient of sin(xy) is cos(xy) (y, x)
    let c = 0.08f64.cos();
    let normal = [-0.2 * c, -0.4 * c, 1.0];
    let off: Vec<f64> = on.iter().zip(normal).map(|(a, n)| a + 1e-3 * n).collect();
    let r = newton_local(&g, &off).unwrap();
    assert!(r.iterations <= NEWTON_MAX_ITERATIONS);
    assert!(max_abs_diff(&r.local, &[0.4, 0.2]) < 1e-12);
}

#[test]
fn subentity_geometry_maps_onto_facets() {
    for kind in GeometryKind::all().into_iter().filter(|k| k.dim() > 0) {
        let re = reference_element(kind);
        for i in 0..re.size(1) {
            let g = reference_subentity_geometry(re, i, 1).unwrap();
            let sub = re.subentity(i, 1).unwrap();
            for (c, &corner) in sub.corners.iter().enumerate() {
                assert!(max_abs_diff(&g.corner(c), re.corner(corner)) < 1e-15);
            }
        }
    }
}

#[test]
fn localfe_geometry_reproduces_quadratic_map() {
    let f = |x: &[f64]| vec![x[0] + 0.2 * x[1] * x[1], x[1] + 0.1 * x[0] * x[1]];
    let g = LocalFeGeometry::interpolate(lagrange_simplex(2, 2).unwrap(), 2, f).unwrap();
    let h = LocalFeGeometry::interpolate(lagrange_cube(2, 2).unwrap(), 2, f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x = interior_point(GeometryKind::TRIANGLE, &mut rng, 1.0);
        assert!(max_abs_diff(&g.global(&x), &f(&x)) < 1e-14);
        assert!(max_abs_diff(&h.global(&x), &f(&x)) < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multilinear_hexahedron_round_trip(
        perturb in prop::collection::vec(-0.15f64..0.15, 24),
        x in prop::collection::vec(0.05f64..0.95, 3),
    ) {
        let re = reference_element(GeometryKind::HEXAHEDRON);
        let corners: Vec<Vec<f64>> = re.corners().iter().enumerate()
            .map(|(i, c)| c.iter().enumerate().map(|(k, v)| v + perturb[3 * i + k]).collect())
            .collect();
        let g = MultiLinearGeometry::new(GeometryKind::HEXAHEDRON, corners).unwrap();
        let fd = fd_jacobian(|p| g.global(p), &x, 1e-6);
        prop_assert!(fd.max_abs_diff(&g.jacobian(&x)) < 1e-8);
        let r = newton_local(&g, &g.global(&x)).unwrap();
        prop_assert!(max_abs_diff(&r.local, &x) < 1e-10);
        prop_assert!(r.iterations <= NEWTON_MAX_ITERATIONS);
    }

    #[test]
    fn mapped_surface_element_matches_gram_determinant(
        x in prop::collection::vec(0.0f64..1.0, 2),
    ) {
        let base = MultiLinearGeometry::new(
            GeometryKind::QUADRILATERAL,
            vec![vec![0.0, 0.0], vec![1.5, 0.0], vec![0.0, 1.0], vec![1.5, 1.2]],
        ).unwrap();
        let g = MappedGeometry::new(SineSurface, base).unwrap();
        let j = g.jacobian(&x);
        let gram = matmul(&j.transposed(), &j).unwrap();
        let det = gram[(0, 0)] * gram[(1, 1)] - gram[(0, 1)] * gram[(1, 0)];
        prop_assert!((g.integration_element(&x) - det.sqrt()).abs() < 1e-12);
    }
}
