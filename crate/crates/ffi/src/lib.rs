//! C ABI over the fekern kernels.
//!
//! Objects cross the boundary as opaque handles created by a `*_new` or
//! constructor function and released by the matching `*_free`. Every
//! fallible function returns a [`FekernStatus`]; on failure the message is
//! available from [`fekern_last_error_message`] on the same thread. Vectors
//! and matrices are flat `double` buffers, matrices row-major, with explicit
//! lengths checked on entry.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use fekern::dense::DenseMatrix;
use fekern::geometry::{sine_surface_geometry, AffineGeometry, Geometry, MultiLinearGeometry};
use fekern::localfe::{element_by_name, flux_matrix, LocalFiniteElement};
use fekern::refelem::GeometryKind;
use fekern::sparse::{read_matrix_market, spy_file, write_svg, BcrsMatrix, SpyStyle};
use fekern::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FekernStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferSize = 3,
    Singular = 4,
    NoConvergence = 5,
    Unsupported = 6,
    Parse = 7,
    Io = 8,
    Panic = 9,
}

/// Element geometry handle.
pub struct FekernGeometry(Box<dyn Geometry>);

/// Local finite element handle.
pub struct FekernElement(LocalFiniteElement);

/// Scalar sparse matrix handle.
pub struct FekernMatrix(BcrsMatrix<f64>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FekernStatus {
    match e {
        Error::Singular { .. } | Error::SingularJacobian { .. } => FekernStatus::Singular,
        Error::NoConvergence { .. } => FekernStatus::NoConvergence,
        Error::UnsupportedOrder { .. } | Error::UnsupportedElement(_) | Error::IllegalKind { .. } => {
            FekernStatus::Unsupported
        }
        Error::Parse { .. } => FekernStatus::Parse,
        Error::Io(_) => FekernStatus::Io,
        _ => FekernStatus::InvalidArgument,
    }
}

struct Failure(FekernStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn guard(f: impl FnOnce() -> Outcome) -> FekernStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FekernStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(&message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            FekernStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(FekernStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len != need {
        return Err(Failure(
            FekernStatus::BufferSize,
            format!("{what} holds {len} values, {need} needed"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FekernStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Outcome {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

fn write_matrix(m: &DenseMatrix, out: &mut [f64]) {
    out.copy_from_slice(m.as_slice());
}

fn check_len(got: usize, need: usize, what: &str) -> Outcome {
    if got != need {
        return Err(Failure(
            FekernStatus::BufferSize,
            format!("{what} has {got} values, {need} expected"),
        ));
    }
    Ok(())
}

/// Message of the last failed call on this thread; valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn fekern_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fekern_version() -> *const c_char {
    static VERSION: &[u8] = concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes();
    VERSION.as_ptr().cast()
}

/// Affine geometry `x0 + A xi`; `matrix` is the row-major
/// `world_dim x dim(kind)` matrix `A`.
#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_affine(
    kind: *const c_char,
    world_dim: usize,
    origin: *const f64,
    matrix: *const f64,
    matrix_len: usize,
    out: *mut *mut FekernGeometry,
) -> FekernStatus {
    guard(|| {
        let kind = GeometryKind::parse(text(kind, "kind")?)?;
        let origin = input(origin, world_dim, "origin")?.to_vec();
        check_len(matrix_len, world_dim * kind.dim(), "matrix")?;
        let a = DenseMatrix::from_row_slice(world_dim, kind.dim(), input(matrix, matrix_len, "matrix")?)?;
        let g = AffineGeometry::new(kind, origin, a)?;
        store(out, FekernGeometry(Box::new(g)))
    })
}

/// Corner-interpolating geometry; `corners` holds `corner_count` points of
/// dimension `world_dim`, one after the other.
#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_multilinear(
    kind: *const c_char,
    world_dim: usize,
    corners: *const f64,
    corner_count: usize,
    out: *mut *mut FekernGeometry,
) -> FekernStatus {
    guard(|| {
        let kind = GeometryKind::parse(text(kind, "kind")?)?;
        if world_dim == 0 {
            return Err(Failure(FekernStatus::InvalidArgument, "world_dim is zero".into()));
        }
        let flat = input(corners, world_dim * corner_count, "corners")?;
        let corners = flat.chunks(world_dim).map(<[f64]>::to_vec).collect();
        let g = MultiLinearGeometry::new(kind, corners)?;
        store(out, FekernGeometry(Box::new(g)))
    })
}

/// The unit square lifted onto `(x, y, sin(x y))`.
#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_sine_surface(out: *mut *mut FekernGeometry) -> FekernStatus {
    guard(|| store(out, FekernGeometry(Box::new(sine_surface_geometry()))))
}

#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_free(g: *mut FekernGeometry) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_dims(
    g: *const FekernGeometry,
    local_dim: *mut usize,
    world_dim: *mut usize,
) -> FekernStatus {
    guard(|| {
        let g = handle(g, "geometry")?;
        if local_dim.is_null() || world_dim.is_null() {
            return Err(null("dimension output"));
        }
        *local_dim = g.0.local_dim();
        *world_dim = g.0.world_dim();
        Ok(())
    })
}

unsafe fn with_point<'a>(
    g: *const FekernGeometry,
    x: *const f64,
    x_len: usize,
) -> Result<(&'a dyn Geometry, &'a [f64]), Failure> {
    let g = handle(g, "geometry")?;
    check_len(x_len, g.0.local_dim(), "local coordinate")?;
    Ok((g.0.as_ref(), input(x, x_len, "local coordinate")?))
}

#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_global(
    g: *const FekernGeometry,
    local: *const f64,
    local_len: usize,
    out: *mut f64,
    out_len: usize,
) -> FekernStatus {
    guard(|| {
        let (g, x) = with_point(g, local, local_len)?;
        let out = output(out, out_len, g.world_dim(), "output")?;
        out.copy_from_slice(&g.global(x));
        Ok(())
    })
}

/// Row-major `world_dim x local_dim` Jacobian.
#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_jacobian(
    g: *const FekernGeometry,
    local: *const f64,
    local_len: usize,
    out: *mut f64,
    out_len: usize,
) -> FekernStatus {
    guard(|| {
        let (g, x) = with_point(g, local, local_len)?;
        let out = output(out, out_len, g.world_dim() * g.local_dim(), "output")?;
        write_matrix(&g.jacobian(x), out);
        Ok(())
    })
}

/// Row-major `local_dim x world_dim` (pseudo-)inverse of the Jacobian.
#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_jacobian_inverse(
    g: *const FekernGeometry,
    local: *const f64,
    local_len: usize,
    out: *mut f64,
    out_len: usize,
) -> FekernStatus {
    guard(|| {
        let (g, x) = with_point(g, local, local_len)?;
        let out = output(out, out_len, g.world_dim() * g.local_dim(), "output")?;
        write_matrix(&g.jacobian_inverse(x)?, out);
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_integration_element(
    g: *const FekernGeometry,
    local: *const f64,
    local_len: usize,
    out: *mut f64,
) -> FekernStatus {
    guard(|| {
        let (g, x) = with_point(g, local, local_len)?;
        let out = output(out, 1, 1, "output")?;
        out[0] = g.integration_element(x);
        Ok(())
    })
}

/// Local coordinate of a world point by Newton iteration.
#[no_mangle]
pub unsafe extern "C" fn fekern_geometry_local(
    g: *const FekernGeometry,
    global: *const f64,
    global_len: usize,
    out: *mut f64,
    out_len: usize,
) -> FekernStatus {
    guard(|| {
        let g = handle(g, "geometry")?;
        check_len(global_len, g.0.world_dim(), "world point")?;
        let x = input(global, global_len, "world point")?;
        let out = output(out, out_len, g.0.local_dim(), "output")?;
        out.copy_from_slice(&g.0.local(x)?);
        Ok(())
    })
}

/// Element by family name (`lagrange_simplex`, `lagrange_cube`, `p1_bubble`,
/// `p2_bubble`, `refined_lagrange`, `crouzeix_raviart`, `rt0_prism`,
/// `rt0_pyramid`). `bits` are the facet orientation flags of the RT0 families.
#[no_mangle]
pub unsafe extern "C" fn fekern_element_new(
    name: *const c_char,
    dim: usize,
    order: usize,
    bits: u32,
    out: *mut *mut FekernElement,
) -> FekernStatus {
    guard(|| {
        let fe = element_by_name(text(name, "name")?, dim, order, bits)?;
        store(out, FekernElement(fe))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fekern_element_free(e: *mut FekernElement) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Number of shape functions, range dimension and reference dimension.
#[no_mangle]
pub unsafe extern "C" fn fekern_element_info(
    e: *const FekernElement,
    size: *mut usize,
    range_dim: *mut usize,
    dim: *mut usize,
) -> FekernStatus {
    guard(|| {
        let e = handle(e, "element")?;
        if size.is_null() || range_dim.is_null() || dim.is_null() {
            return Err(null("info output"));
        }
        *size = e.0.size();
        *range_dim = e.0.range_dim();
        *dim = e.0.kind().dim();
        Ok(())
    })
}

unsafe fn element_point<'a>(
    e: *const FekernElement,
    x: *const f64,
    x_len: usize,
) -> Result<(&'a LocalFiniteElement, &'a [f64]), Failure> {
    let e = handle(e, "element")?;
    check_len(x_len, e.0.kind().dim(), "local coordinate")?;
    Ok((&e.0, input(x, x_len, "local coordinate")?))
}

/// Shape function values, `size x range_dim` row-major.
#[no_mangle]
pub unsafe extern "C" fn fekern_element_evaluate(
    e: *const FekernElement,
    local: *const f64,
    local_len: usize,
    out: *mut f64,
    out_len: usize,
) -> FekernStatus {
    guard(|| {
        let (fe, x) = element_point(e, local, local_len)?;
        let out = output(out, out_len, fe.size() * fe.range_dim(), "output")?;
        for (chunk, v) in out.chunks_mut(fe.range_dim()).zip(fe.basis().evaluate(x)) {
            chunk.copy_from_slice(&v);
        }
        Ok(())
    })
}

/// Shape function Jacobians, `size x range_dim x dim` row-major.
#[no_mangle]
pub unsafe extern "C" fn fekern_element_jacobian(
    e: *const FekernElement,
    local: *const f64,
    local_len: usize,
    out: *mut f64,
    out_len: usize,
) -> FekernStatus {
    guard(|| {
        let (fe, x) = element_point(e, local, local_len)?;
        let block = fe.range_dim() * fe.kind().dim();
        let out = output(out, out_len, fe.size() * block, "output")?;
        if block > 0 {
            for (chunk, j) in out.chunks_mut(block).zip(fe.basis().jacobian(x)) {
                write_matrix(&j, chunk);
            }
        }
        Ok(())
    })
}

/// Reference-domain function: writes `range_dim` values at `x` into `out`.
pub type FekernFunction =
    Option<unsafe extern "C" fn(x: *const f64, dim: usize, out: *mut f64, range_dim: usize, user: *mut c_void)>;

/// Interpolation coefficients (length `size`) of a callback function.
#[no_mangle]
pub unsafe extern "C" fn fekern_element_interpolate(
    e: *const FekernElement,
    f: FekernFunction,
    user: *mut c_void,
    out: *mut f64,
    out_len: usize,
) -> FekernStatus {
    guard(|| {
        let e = handle(e, "element")?;
        let f = f.ok_or_else(|| null("function"))?;
        let fe = &e.0;
        let out = output(out, out_len, fe.size(), "output")?;
        let r = fe.range_dim();
        let call = |x: &[f64]| -> Vec<f64> {
            let mut v = vec![0.0; r];
            f(x.as_ptr(), x.len(), v.as_mut_ptr(), r, user);
            v
        };
        out.copy_from_slice(&fe.interpolate(&call));
        Ok(())
    })
}

/// Facet flux matrix `facets x size` of a vector-valued element.
#[no_mangle]
pub unsafe extern "C" fn fekern_element_flux_matrix(
    e: *const FekernElement,
    out: *mut f64,
    out_len: usize,
) -> FekernStatus {
    guard(|| {
        let e = handle(e, "element")?;
        let m = flux_matrix(&e.0)?;
        let out = output(out, out_len, m.rows() * m.cols(), "output")?;
        write_matrix(&m, out);
        Ok(())
    })
}

/// Reads a MatrixMarket coordinate file.
#[no_mangle]
pub unsafe extern "C" fn fekern_matrix_read(path: *const c_char, out: *mut *mut FekernMatrix) -> FekernStatus {
    guard(|| {
        let path = text(path, "path")?;
        let file = std::fs::File::open(path)
            .map_err(|e| Failure(FekernStatus::Io, format!("{path}: {e}")))?;
        let m = read_matrix_market(std::io::BufReader::new(file))?;
        store(out, FekernMatrix(m))
    })
}

#[no_mangle]
pub unsafe extern "C" fn fekern_matrix_free(m: *mut FekernMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

#[no_mangle]
pub unsafe extern "C" fn fekern_matrix_info(
    m: *const FekernMatrix,
    rows: *mut usize,
    cols: *mut usize,
    nnz: *mut usize,
) -> FekernStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        if rows.is_null() || cols.is_null() || nnz.is_null() {
            return Err(null("info output"));
        }
        *rows = m.0.rows();
        *cols = m.0.cols();
        *nnz = m.0.nnz();
        Ok(())
    })
}

fn style(cell: usize, pad: usize) -> SpyStyle {
    SpyStyle {
        cell,
        padding: pad,
        ..SpyStyle::default()
    }
}

/// SVG spy plot of a matrix as a string owned by the caller, released with
/// [`fekern_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fekern_matrix_svg(
    m: *const FekernMatrix,
    cell: usize,
    pad: usize,
    out: *mut *mut c_char,
) -> FekernStatus {
    guard(|| {
        let m = handle(m, "matrix")?;
        if out.is_null() {
            return Err(null("output string"));
        }
        let svg = write_svg(&m.0, &style(cell, pad))?;
        *out = CString::new(svg)
            .map_err(|_| Failure(FekernStatus::Panic, "NUL in document".into()))?
            .into_raw();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fekern_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Reads a MatrixMarket file and writes its spy plot, exactly as the `spy`
/// subcommand does. Any of the size outputs may be null.
#[no_mangle]
pub unsafe extern "C" fn fekern_spy(
    input: *const c_char,
    output: *const c_char,
    cell: usize,
    pad: usize,
    rows: *mut usize,
    cols: *mut usize,
    nnz: *mut usize,
) -> FekernStatus {
    guard(|| {
        let input = Path::new(text(input, "input path")?);
        let output = Path::new(text(output, "output path")?);
        let s = spy_file(input, output, &style(cell, pad))?;
        for (p, v) in [(rows, s.rows), (cols, s.cols), (nnz, s.nnz)] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}
