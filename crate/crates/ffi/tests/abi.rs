use std::ffi::{c_void, CStr, CString};
use std::ptr;

use fekern::geometry::{sine_surface_geometry, Geometry};
use fekern::localfe::element_by_name;
use fekern::sparse::{spy_file, SpyStyle};
use fekern_ffi::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn last_error() -> String {
    unsafe { CStr::from_ptr(fekern_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn sine() -> *mut FekernGeometry {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { fekern_geometry_sine_surface(&mut g) }, FekernStatus::Ok);
    g
}

fn element(name: &str, dim: usize, order: usize, bits: u32) -> *mut FekernElement {
    let name = CString::new(name).unwrap();
    let mut e = ptr::null_mut();
    let s = unsafe { fekern_element_new(name.as_ptr(), dim, order, bits, &mut e) };
    assert_eq!(s, FekernStatus::Ok, "{}", last_error());
    e
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(fekern_version()) };
    assert_eq!(v.to_str().unwrap(), fekern::VERSION);
}

#[test]
fn sine_surface_parity() {
    let g = sine();
    let native = sine_surface_geometry();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut ld, mut wd) = (0, 0);
    unsafe {
        assert_eq!(fekern_geometry_dims(g, &mut ld, &mut wd), FekernStatus::Ok);
        assert_eq!((ld, wd), (2, 3));
        for _ in 0..100 {
            let x = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
            let mut p = [0.0; 3];
            assert_eq!(fekern_geometry_global(g, x.as_ptr(), 2, p.as_mut_ptr(), 3), FekernStatus::Ok);
            let mut j = [0.0; 6];
            assert_eq!(fekern_geometry_jacobian(g, x.as_ptr(), 2, j.as_mut_ptr(), 6), FekernStatus::Ok);
            let mut ji = [0.0; 6];
            assert_eq!(fekern_geometry_jacobian_inverse(g, x.as_ptr(), 2, ji.as_mut_ptr(), 6), FekernStatus::Ok);
            let mut mu = 0.0;
            assert_eq!(fekern_geometry_integration_element(g, x.as_ptr(), 2, &mut mu), FekernStatus::Ok);
            let mut back = [0.0; 2];
            assert_eq!(fekern_geometry_local(g, p.as_ptr(), 3, back.as_mut_ptr(), 2), FekernStatus::Ok);

            let np = native.global(&x);
            let nj = native.jacobian(&x);
            let nji = native.jacobian_inverse(&x).unwrap();
            for k in 0..3 {
                assert!((p[k] - np[k]).abs() <= 1e-14);
            }
            for k in 0..6 {
                assert!((j[k] - nj.as_slice()[k]).abs() <= 1e-14);
                assert!((ji[k] - nji.as_slice()[k]).abs() <= 1e-14);
            }
            assert!((mu - native.integration_element(&x)).abs() <= 1e-14);
            assert!((back[0] - x[0]).abs() < 1e-10 && (back[1] - x[1]).abs() < 1e-10);
        }
        fekern_geometry_free(g);
    }
}

#[test]
fn jacobian_third_row_at_one_one() {
    let g = sine();
    let x = [1.0, 1.0];
    let mut j = [0.0; 6];
    unsafe {
        assert_eq!(fekern_geometry_jacobian(g, x.as_ptr(), 2, j.as_mut_ptr(), 6), FekernStatus::Ok);
        fekern_geometry_free(g);
    }
    let c = 1f64.cos();
    assert!((j[4] - c).abs() < 1e-14 && (j[5] - c).abs() < 1e-14);
}

#[test]
fn status_codes_and_messages() {
    let g = sine();
    let x = [0.5, 0.5];
    let mut p = [0.0; 2];
    unsafe {
        assert_eq!(fekern_geometry_global(g, x.as_ptr(), 2, p.as_mut_ptr(), 2), FekernStatus::BufferSize);
        assert!(last_error().contains("3 needed"));
        assert_eq!(fekern_geometry_global(ptr::null(), x.as_ptr(), 2, p.as_mut_ptr(), 3), FekernStatus::NullPointer);
        assert_eq!(fekern_geometry_global(g, ptr::null(), 2, p.as_mut_ptr(), 3), FekernStatus::NullPointer);
        assert_eq!(fekern_geometry_sine_surface(ptr::null_mut()), FekernStatus::NullPointer);
        fekern_geometry_free(g);
        fekern_geometry_free(ptr::null_mut());

        let name = CString::new("lagrange_simplex").unwrap();
        let mut e = ptr::null_mut();
        assert_eq!(fekern_element_new(name.as_ptr(), 2, 7, 0, &mut e), FekernStatus::Unsupported);
        assert!(e.is_null());
        let bogus = CString::new("nedelec").unwrap();
        assert_eq!(fekern_element_new(bogus.as_ptr(), 3, 1, 0, &mut e), FekernStatus::Unsupported);
        assert!(last_error().contains("nedelec"));
    }
}

#[test]
fn singular_affine_map() {
    let kind = CString::new("triangle").unwrap();
    let origin = [0.0, 0.0];
    let a = [1.0, 2.0, 2.0, 4.0];
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(fekern_geometry_affine(kind.as_ptr(), 2, origin.as_ptr(), a.as_ptr(), 4, &mut g), FekernStatus::Ok);
        let x = [0.1, 0.1];
        let mut ji = [0.0; 4];
        assert_eq!(fekern_geometry_jacobian_inverse(g, x.as_ptr(), 2, ji.as_mut_ptr(), 4), FekernStatus::Singular);
        fekern_geometry_free(g);
        assert_eq!(fekern_geometry_affine(kind.as_ptr(), 2, origin.as_ptr(), a.as_ptr(), 3, &mut g), FekernStatus::BufferSize);
    }
}

#[test]
fn multilinear_round_trip() {
    let kind = CString::new("quadrilateral").unwrap();
    let corners = [0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 2.0, 2.0];
    let mut g = ptr::null_mut();
    unsafe {
        assert_eq!(fekern_geometry_multilinear(kind.as_ptr(), 2, corners.as_ptr(), 4, &mut g), FekernStatus::Ok);
        let x = [0.3, 0.8];
        let mut p = [0.0; 2];
        let mut back = [0.0; 2];
        assert_eq!(fekern_geometry_global(g, x.as_ptr(), 2, p.as_mut_ptr(), 2), FekernStatus::Ok);
        assert_eq!(fekern_geometry_local(g, p.as_ptr(), 2, back.as_mut_ptr(), 2), FekernStatus::Ok);
        assert!((back[0] - 0.3).abs() < 1e-10 && (back[1] - 0.8).abs() < 1e-10);
        fekern_geometry_free(g);
    }
}

#[test]
fn p1_at_barycenter() {
    let e = element("lagrange_simplex", 2, 1, 0);
    let (mut size, mut range, mut dim) = (0, 0, 0);
    let x = [1.0 / 3.0, 1.0 / 3.0];
    let mut v = [0.0; 3];
    unsafe {
        assert_eq!(fekern_element_info(e, &mut size, &mut range, &mut dim), FekernStatus::Ok);
        assert_eq!((size, range, dim), (3, 1, 2));
        assert_eq!(fekern_element_evaluate(e, x.as_ptr(), 2, v.as_mut_ptr(), 3), FekernStatus::Ok);
        fekern_element_free(e);
    }
    assert!(v.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn element_parity_with_native() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (name, dim, order, bits) in [
        ("lagrange_cube", 3, 2, 0),
        ("p2_bubble", 3, 2, 0),
        ("rt0_prism", 3, 0, 0b00001),
        ("crouzeix_raviart", 2, 1, 0),
    ] {
        let e = element(name, dim, order, bits);
        let native = element_by_name(name, dim, order, bits).unwrap();
        let n = native.size() * native.range_dim();
        for _ in 0..25 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(0.0..0.3)).collect();
            let mut v = vec![0.0; n];
            let mut j = vec![0.0; n * dim];
            unsafe {
                assert_eq!(fekern_element_evaluate(e, x.as_ptr(), dim, v.as_mut_ptr(), n), FekernStatus::Ok);
                assert_eq!(fekern_element_jacobian(e, x.as_ptr(), dim, j.as_mut_ptr(), n * dim), FekernStatus::Ok);
            }
            let nv: Vec<f64> = native.basis().evaluate(&x).concat();
            let nj: Vec<f64> = native.basis().jacobian(&x).iter().flat_map(|m| m.as_slice().to_vec()).collect();
            assert!(v.iter().zip(&nv).all(|(a, b)| (a - b).abs() <= 1e-14), "{name}");
            assert!(j.iter().zip(&nj).all(|(a, b)| (a - b).abs() <= 1e-14), "{name}");
        }
        unsafe { fekern_element_free(e) };
    }
}

#[test]
fn pyramid_orientation_flips_columns() {
    let flux = |bits| {
        let e = element("rt0_pyramid", 3, 0, bits);
        let mut m = [0.0; 25];
        unsafe {
            assert_eq!(fekern_element_flux_matrix(e, m.as_mut_ptr(), 25), FekernStatus::Ok);
            fekern_element_free(e);
        }
        m
    };
    let plain = flux(0);
    let flipped = flux(0b00101);
    for i in 0..5 {
        for j in 0..5 {
            let s = if j == 0 || j == 2 { -1.0 } else { 1.0 };
            assert_eq!(flipped[5 * i + j], s * plain[5 * i + j]);
        }
    }
}

unsafe extern "C" fn basis_function(x: *const f64, dim: usize, out: *mut f64, range: usize, user: *mut c_void) {
    let fe = &*(user as *const (fekern::localfe::LocalFiniteElement, usize));
    let x = std::slice::from_raw_parts(x, dim);
    let out = std::slice::from_raw_parts_mut(out, range);
    out.copy_from_slice(&fe.0.basis().evaluate(x)[fe.1]);
}

#[test]
fn callback_interpolation_is_unisolvent() {
    let e = element("rt0_pyramid", 3, 0, 0b00101);
    for j in 0..5 {
        let mut ctx = (element_by_name("rt0_pyramid", 3, 0, 0b00101).unwrap(), j);
        let mut c = [0.0; 5];
        let s = unsafe {
            fekern_element_interpolate(e, Some(basis_function), &mut ctx as *mut _ as *mut c_void, c.as_mut_ptr(), 5)
        };
        assert_eq!(s, FekernStatus::Ok);
        for (i, v) in c.iter().enumerate() {
            assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }
    let mut c = [0.0; 5];
    assert_eq!(
        unsafe { fekern_element_interpolate(e, None, ptr::null_mut(), c.as_mut_ptr(), 5) },
        FekernStatus::NullPointer
    );
    unsafe { fekern_element_free(e) };
}

#[test]
fn spy_matches_native_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("m.mtx");
    std::fs::write(&input, "%%MatrixMarket matrix coordinate real general\n3 3 4\n1 1 1\n2 2 1\n3 3 1\n1 3 5\n").unwrap();
    let via_ffi = dir.path().join("ffi.svg");
    let native = dir.path().join("native.svg");
    let cin = CString::new(input.to_str().unwrap()).unwrap();
    let cout = CString::new(via_ffi.to_str().unwrap()).unwrap();
    let (mut r, mut c, mut n) = (0, 0, 0);
    let s = unsafe { fekern_spy(cin.as_ptr(), cout.as_ptr(), 10, 2, &mut r, &mut c, &mut n) };
    assert_eq!(s, FekernStatus::Ok);
    assert_eq!((r, c, n), (3, 3, 4));
    spy_file(&input, &native, &SpyStyle::default()).unwrap();
    let native_bytes = std::fs::read(&native).unwrap();
    assert_eq!(std::fs::read(&via_ffi).unwrap(), native_bytes);

    let mut m = ptr::null_mut();
    let mut svg = ptr::null_mut();
    unsafe {
        assert_eq!(fekern_matrix_read(cin.as_ptr(), &mut m), FekernStatus::Ok);
        assert_eq!(fekern_matrix_info(m, &mut r, &mut c, &mut n), FekernStatus::Ok);
        assert_eq!(n, 4);
        assert_eq!(fekern_matrix_svg(m, 10, 2, &mut svg), FekernStatus::Ok);
        assert_eq!(CStr::from_ptr(svg).to_bytes(), native_bytes.as_slice());
        fekern_string_free(svg);
        fekern_matrix_free(m);
    }
}

#[test]
fn spy_errors_map_to_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let missing = CString::new(dir.path().join("nope.mtx").to_str().unwrap()).unwrap();
    let out = CString::new(dir.path().join("o.svg").to_str().unwrap()).unwrap();
    let (mut r, mut c, mut n) = (0, 0, 0);
    let s = unsafe { fekern_spy(missing.as_ptr(), out.as_ptr(), 10, 2, &mut r, &mut c, &mut n) };
    assert_eq!(s, FekernStatus::Io);
    assert!(last_error().contains("nope.mtx"));

    let bad = dir.path().join("bad.mtx");
    std::fs::write(&bad, "%%MatrixMarket matrix coordinate complex general\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { fekern_matrix_read(bad.as_ptr(), &mut m) }, FekernStatus::Parse);
    assert!(m.is_null());
}

#[test]
fn header_declares_every_export() {
    let header = include_str!("../include/fekern.h");
    let source = include_str!("../src/lib.rs");
    let mut count = 0;
    for line in source.lines().filter(|l| l.contains("extern \"C\" fn fekern_")) {
        let name = line.split("fn ").nth(1).unwrap().split('(').next().unwrap();
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
        count += 1;
    }
    assert!(count >= 25);
    assert!(header.contains("FEKERN_STATUS_BUFFER_SIZE = 3"));
}
