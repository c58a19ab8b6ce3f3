#![allow(dead_code)]

use fekern::dense::DenseMatrix;
use fekern::refelem::{reference_element, GeometryKind, Shape};
use fekern::sparse::BcrsMatrix;
use rand::Rng;

/// Central differences with step `h`.
pub fn fd_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DenseMatrix {
    let cols: Vec<Vec<f64>> = (0..x.len())
        .map(|k| {
            let mut p = x.to_vec();
            let mut m = x.to_vec();
            p[k] += h;
            m[k] -= h;
            f(&p).iter().zip(f(&m)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
        })
        .collect();
    let rows = cols.first().map_or(0, Vec::len);
    DenseMatrix::from_fn(rows, x.len(), |i, k| cols[k][i])
}

/// Fourth-order central differences.
pub fn fd4_jacobian(f: impl Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> DenseMatrix {
    let shifted = |k: usize, s: f64| {
        let mut p = x.to_vec();
        p[k] += s;
        f(&p)
    };
    let cols: Vec<Vec<f64>> = (0..x.len())
        .map(|k| {
            let (p1, m1, p2, m2) = (shifted(k, h), shifted(k, -h), shifted(k, 2.0 * h), shifted(k, -2.0 * h));
            (0..p1.len())
                .map(|i| (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * h))
                .collect()
        })
        .collect();
    let rows = cols.first().map_or(0, Vec::len);
    DenseMatrix::from_fn(rows, x.len(), |i, k| cols[k][i])
}

pub fn factorial(n: usize) -> f64 {
    (2..=n).fold(1.0, |a, k| a * k as f64)
}

/// `int_0^1 t^a (1 - t)^b dt`.
pub fn beta(a: usize, b: usize) -> f64 {
    factorial(a) * factorial(b) / factorial(a + b + 1)
}

/// Exact `int x^a` over the reference element, by iterated one-dimensional
/// integrals.
pub fn moment(kind: GeometryKind, a: &[usize]) -> f64 {
    match kind.shape() {
        Shape::Vertex => 1.0,
        Shape::Cube => a.iter().map(|&k| 1.0 / (k + 1) as f64).product(),
        Shape::Simplex => {
            // peel the last coordinate: x_d in [0, 1], the rest in (1 - x_d) * simplex
            let d = a.len();
            if d == 1 {
                return 1.0 / (a[0] + 1) as f64;
            }
            let inner: usize = a[..d - 1].iter().sum::<usize>() + (d - 1);
            let lower = GeometryKind::simplex(d - 1).unwrap();
            moment(lower, &a[..d - 1]) * beta(a[d - 1], inner)
        }
        Shape::Prism => moment(GeometryKind::TRIANGLE, &a[..2]) / (a[2] + 1) as f64,
        Shape::Pyramid => {
            // x, y in [0, 1 - z]
            let (p, q, r) = (a[0], a[1], a[2]);
            beta(r, p + q + 2) / ((p + 1) as f64 * (q + 1) as f64)
        }
    }
}

pub fn exponents(d: usize, degree: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|e: Vec<usize>| {
                let used: usize = e.iter().sum();
                (0..=degree - used).map(move |k| {
                    let mut n = e.clone();
                    n.push(k);
                    n
                })
            })
            .collect();
    }
    out
}

pub fn monomial(x: &[f64], a: &[usize]) -> f64 {
    x.iter().zip(a).map(|(v, &k)| v.powi(k as i32)).product()
}

/// Uniform point of the reference element shrunk towards its barycenter.
pub fn interior_point(kind: GeometryKind, rng: &mut impl Rng, shrink: f64) -> Vec<f64> {
    let re = reference_element(kind);
    loop {
        let p: Vec<f64> = (0..kind.dim()).map(|_| rng.random_range(0.0..1.0)).collect();
        if re.check_inside(&p, 0.0) {
            return p
                .iter()
                .zip(re.barycenter())
                .map(|(x, b)| b + shrink * (x - b))
                .collect();
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Scalar nonzeros counted through row traversal.
pub trait ScalarCount {
    fn count(&self) -> usize;
}

impl ScalarCount for f64 {
    fn count(&self) -> usize {
        1
    }
}

impl ScalarCount for DenseMatrix {
    fn count(&self) -> usize {
        self.rows() * self.cols()
    }
}

impl<B: ScalarCount + fekern::sparse::Block> ScalarCount for BcrsMatrix<B> {
    fn count(&self) -> usize {
        (0..self.rows())
            .flat_map(|i| self.row(i).unwrap())
            .map(|(b, _)| b.count())
            .sum()
    }
}

pub struct ParsedSvg {
    pub width: f64,
    pub height: f64,
    pub view_box: Vec<f64>,
    pub rects: Vec<[f64; 4]>,
}

/// Re-parses an SVG document as XML.
pub fn parse_svg(text: &str) -> Result<ParsedSvg, String> {
    let doc = roxmltree::Document::parse(text).map_err(|e| e.to_string())?;
    let root = doc.root_element();
    if root.tag_name().name() != "svg" || root.tag_name().namespace() != Some("http://www.w3.org/2000/svg") {
        return Err("root is not an SVG element".into());
    }
    let num = |n: roxmltree::Node, a: &str| -> Result<f64, String> {
        n.attribute(a)
            .ok_or(format!("missing {a}"))?
            .parse()
            .map_err(|e| format!("{a}: {e}"))
    };
    let view_box = root
        .attribute("viewBox")
        .ok_or("missing viewBox")?
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rects = Vec::new();
    for n in root.descendants().filter(|n| n.has_tag_name("rect")) {
        rects.push([num(n, "x")?, num(n, "y")?, num(n, "width")?, num(n, "height")?]);
    }
    Ok(ParsedSvg {
        width: num(root, "width")?,
        height: num(root, "height")?,
        view_box,
        rects,
    })
}
