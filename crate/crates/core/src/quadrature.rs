//! Quadrature rules on reference elements.
//!
//! One-dimensional rules are Gauss-Legendre on `[0, 1]`. Cubes are tensor
//! products, the prism is triangle times interval, and simplices and the
//! pyramid are conical (Duffy) products whose collapsed direction uses a
//! Gauss-Jacobi rule with weight `(1 - t)^k` absorbing the collapse factor.
//! Point ordering is lexicographic in the tensor indices, last index fastest.

use std::sync::OnceLock;

use crate::refelem::{GeometryKind, Shape};
use crate::{Error, Result};

pub const MAX_ORDER: usize = 10;
pub const MAX_PYRAMID_ORDER: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadPoint {
    pub position: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    kind: GeometryKind,
    order: usize,
    points: Vec<QuadPoint>,
}

impl QuadratureRule {
    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    /// Largest total polynomial degree integrated exactly.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[QuadPoint] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::Iter<'_, QuadPoint> {
        self.points.iter()
    }

    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.points.iter().map(|q| q.weight * f(&q.position)).sum()
    }
}

impl<'a> IntoIterator for &'a QuadratureRule {
    type Item = &'a QuadPoint;
    type IntoIter = std::slice::Iter<'a, QuadPoint>;

    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

pub fn integrate(rule: &QuadratureRule, f: impl Fn(&[f64]) -> f64) -> f64 {
    rule.integrate(f)
}

pub fn max_order(kind: GeometryKind) -> usize {
    match kind.shape() {
        Shape::Pyramid => MAX_PYRAMID_ORDER,
        _ => MAX_ORDER,
    }
}

/// Cached rule of at least the requested order.
pub fn quadrature_rule(kind: GeometryKind, order: usize) -> Result<&'static QuadratureRule> {
    static CACHE: [[OnceLock<QuadratureRule>; MAX_ORDER + 1]; 9] =
        [const { [const { OnceLock::new() }; MAX_ORDER + 1] }; 9];
    let max = max_order(kind);
    if order > max {
        return Err(Error::UnsupportedOrder {
            kind: kind.to_string(),
            order,
            max,
        });
    }
    Ok(CACHE[kind.slot()][order].get_or_init(|| build(kind, order)))
}

/// `v` with 17 significant digits, shortest form as printed by `%.17g`.
pub fn format_g17(v: f64) -> String {
    const P: i32 = 17;
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if (-4..P).contains(&exp) {
        trim(&format!("{:.*}", (P - 1 - exp) as usize, v))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    }
}

/// One tab-separated line per point: coordinates, then the weight.
pub fn rule_table(rule: &QuadratureRule) -> String {
    let mut out = String::new();
    for q in rule {
        let mut cols: Vec<String> = q.position.iter().map(|&x| format_g17(x)).collect();
        cols.push(format_g17(q.weight));
        out.push_str(&cols.join("\t"));
        out.push('\n');
    }
    out
}

fn points_for(order: usize) -> usize {
    order / 2 + 1
}

fn build(kind: GeometryKind, order: usize) -> QuadratureRule {
    let n = points_for(order);
    let points = match kind.shape() {
        Shape::Vertex => vec![QuadPoint {
            position: vec![],
            weight: 1.0,
        }],
        Shape::Cube => tensor_cube(kind.dim(), n),
        Shape::Simplex => simplex(kind.dim(), n),
        Shape::Prism => {
            let tri = simplex(2, n);
            let line = gauss_legendre(n);
            let mut pts = Vec::with_capacity(tri.len() * line.len());
            for t in &tri {
                for (z, wz) in &line {
                    pts.push(QuadPoint {
                        position: vec![t.position[0], t.position[1], *z],
                        weight: t.weight * wz,
                    });
                }
            }
            pts
        }
        Shape::Pyramid => {
            let square = tensor_cube(2, n);
            let collapse = gauss_jacobi(n, 2.0);
            let mut pts = Vec::with_capacity(square.len() * collapse.len());
            for s in &square {
                for (t, wt) in &collapse {
                    let scale = 1.0 - t;
                    pts.push(QuadPoint {
                        position: vec![scale * s.position[0], scale * s.position[1], *t],
                        weight: s.weight * wt,
                    });
                }
            }
            pts
        }
    };
    QuadratureRule {
        kind,
        order,
        points,
    }
}

fn tensor_cube(dim: usize, n: usize) -> Vec<QuadPoint> {
    let line = gauss_legendre(n);
    let mut pts = vec![QuadPoint {
        position: vec![],
        weight: 1.0,
    }];
    for _ in 0..dim {
        let mut next = Vec::with_capacity(pts.len() * line.len());
        for p in &pts {
            for (x, w) in &line {
                let mut position = p.position.clone();
                position.push(*x);
                next.push(QuadPoint {
                    position,
                    weight: p.weight * w,
                });
            }
        }
        pts = next;
    }
    pts
}

fn simplex(dim: usize, n: usize) -> Vec<QuadPoint> {
    if dim == 1 {
        return gauss_legendre(n)
            .into_iter()
            .map(|(x, w)| QuadPoint {
                position: vec![x],
                weight: w,
            })
            .collect();
    }
    let base = simplex(dim - 1, n);
    let collapse = gauss_jacobi(n, (dim - 1) as f64);
    let mut pts = Vec::with_capacity(base.len() * collapse.len());
    for b in &base {
        for (t, wt) in &collapse {
            let scale = 1.0 - t;
            let mut position: Vec<f64> = b.position.iter().map(|x| scale * x).collect();
            position.push(*t);
            pts.push(QuadPoint {
                position,
                weight: b.weight * wt,
            });
        }
    }
    pts
}

/// `n`-point Gauss-Legendre rule on `[0, 1]`, nodes ascending.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    gauss_jacobi(n, 0.0)
}

/// `n`-point Gauss rule on `[0, 1]` for the weight `(1 - t)^alpha`, nodes
/// ascending. Exact for polynomials of degree `2n - 1` against that weight.
pub fn gauss_jacobi(n: usize, alpha: f64) -> Vec<(f64, f64)> {
    assert!(n > 0 && alpha > -1.0);
    // Monic Jacobi recurrence on [-1, 1] for (1 - x)^alpha (1 + x)^0.
    let (a, b) = (alpha, 0.0f64);
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        diag[k] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let m = kf + 1.0;
            let s = 2.0 * m + a + b;
            let beta = 4.0 * m * (m + a) * (m + b) * (m + a + b) / (s * s * (s + 1.0) * (s - 1.0));
            off[k] = beta.sqrt();
        }
    }
    let mut first = vec![0.0; n];
    first[0] = 1.0;
    symmetric_tridiagonal_eigen(&mut diag, &mut off, &mut first);

    // Total mass of (1 - t)^alpha on [0, 1].
    let mass = 1.0 / (alpha + 1.0);
    let mut rule: Vec<(f64, f64)> = diag
        .iter()
        .zip(&first)
        .map(|(x, v)| (0.5 * (1.0 + x), mass * v * v))
        .collect();
    rule.sort_by(|p, q| p.0.total_cmp(&q.0));
    rule
}

/// Implicit QL iteration on a symmetric tridiagonal matrix. On return
/// `diag` holds the eigenvalues and `first` the first components of the
/// matching normalized eigenvectors (pass `first = e_0`).
fn symmetric_tridiagonal_eigen(diag: &mut [f64], off: &mut [f64], first: &mut [f64]) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    off[n - 1] = 0.0;
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            assert!(iterations < 100, "tridiagonal QL did not converge");
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let fz = first[i + 1];
                first[i + 1] = s * first[i] + c * fz;
                first[i] = c * first[i] - s * fz;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
}
