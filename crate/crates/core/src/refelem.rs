//! Reference elements.
//!
//! Corner conventions:
//! - d-simplex: the origin followed by the unit coordinate vectors.
//! - d-cube: `{0,1}^d`, numbered by binary counting with coordinate 0 as
//!   the least significant bit.
//! - prism: triangle corners at `z = 0`, then the same corners at `z = 1`.
//! - pyramid: base square `(0,0,0), (1,0,0), (0,1,0), (1,1,0)` and apex
//!   `(0,0,1)`.
//!
//! Subentities of codim `dim` are the corners in corner order. All other
//! subentities are ordered by their sorted corner tuples. The corner list of
//! a subentity is stored in the subentity's own reference order, so that
//! corner `k` of the subentity maps to corner `k` of its reference element.

use std::fmt;
use std::sync::OnceLock;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Vertex,
    Simplex,
    Cube,
    Prism,
    Pyramid,
}

impl Shape {
    fn name(self) -> &'static str {
        match self {
            Shape::Vertex => "vertex",
            Shape::Simplex => "simplex",
            Shape::Cube => "cube",
            Shape::Prism => "prism",
            Shape::Pyramid => "pyramid",
        }
    }
}

/// A legal (shape, dimension) combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GeometryKind {
    shape: Shape,
    dim: usize,
}

impl GeometryKind {
    pub const VERTEX: Self = Self { shape: Shape::Vertex, dim: 0 };
    pub const LINE: Self = Self { shape: Shape::Simplex, dim: 1 };
    pub const TRIANGLE: Self = Self { shape: Shape::Simplex, dim: 2 };
    pub const TETRAHEDRON: Self = Self { shape: Shape::Simplex, dim: 3 };
    pub const QUADRILATERAL: Self = Self { shape: Shape::Cube, dim: 2 };
    pub const HEXAHEDRON: Self = Self { shape: Shape::Cube, dim: 3 };
    pub const PRISM: Self = Self { shape: Shape::Prism, dim: 3 };
    pub const PYRAMID: Self = Self { shape: Shape::Pyramid, dim: 3 };

    pub fn new(shape: Shape, dim: usize) -> Result<Self> {
        let legal = match shape {
            Shape::Vertex => dim == 0,
            Shape::Simplex | Shape::Cube => (1..=3).contains(&dim),
            Shape::Prism | Shape::Pyramid => dim == 3,
        };
        if !legal {
            return Err(Error::IllegalKind {
                shape: shape.name().into(),
                dim,
            });
        }
        Ok(Self { shape, dim })
    }

    pub fn simplex(dim: usize) -> Result<Self> {
        Self::new(Shape::Simplex, dim)
    }

    pub fn cube(dim: usize) -> Result<Self> {
        Self::new(Shape::Cube, dim)
    }

    pub fn shape(self) -> Shape {
        self.shape
    }

    pub fn dim(self) -> usize {
        self.dim
    }

    pub fn is_simplex(self) -> bool {
        // a point and a 1-cube are also simplices
        matches!(self.shape, Shape::Simplex | Shape::Vertex)
            || (self.shape == Shape::Cube && self.dim == 1)
    }

    /// Every legal kind, in a fixed order.
    pub fn all() -> [GeometryKind; 9] {
        [
            Self::VERTEX,
            Self::LINE,
            Self::TRIANGLE,
            Self::TETRAHEDRON,
            Self { shape: Shape::Cube, dim: 1 },
            Self::QUADRILATERAL,
            Self::HEXAHEDRON,
            Self::PRISM,
            Self::PYRAMID,
        ]
    }

    pub(crate) fn slot(self) -> usize {
        match (self.shape, self.dim) {
            (Shape::Vertex, _) => 0,
            (Shape::Simplex, d) => d,
            (Shape::Cube, d) => 3 + d,
            (Shape::Prism, _) => 7,
            (Shape::Pyramid, _) => 8,
        }
    }

    /// Parses names such as `triangle`, `cube`, `cube:2` or `simplex:3`.
    /// A bare `simplex` or `cube` is one-dimensional.
    pub fn parse(name: &str) -> Result<Self> {
        let (base, dim) = match name.split_once(':') {
            Some((b, d)) => (
                b,
                Some(d.parse::<usize>().map_err(|_| {
                    Error::InvalidArgument(format!("bad dimension in kind '{name}'"))
                })?),
            ),
            None => (name, None),
        };
        let kind = match (base.to_ascii_lowercase().as_str(), dim) {
            ("vertex" | "point", None | Some(0)) => Self::VERTEX,
            ("line" | "interval", None | Some(1)) => Self::LINE,
            ("triangle", None | Some(2)) => Self::TRIANGLE,
            ("tetrahedron" | "tet", None | Some(3)) => Self::TETRAHEDRON,
            ("quadrilateral" | "quad" | "square", None | Some(2)) => Self::QUADRILATERAL,
            ("hexahedron" | "hex", None | Some(3)) => Self::HEXAHEDRON,
            ("prism", None | Some(3)) => Self::PRISM,
            ("pyramid", None | Some(3)) => Self::PYRAMID,
            ("simplex", d) => Self::simplex(d.unwrap_or(1))?,
            ("cube", d) => Self::cube(d.unwrap_or(1))?,
            _ => return Err(Error::InvalidArgument(format!("unknown geometry kind '{name}'"))),
        };
        Ok(kind)
    }
}

impl fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.shape, self.dim) {
            (Shape::Vertex, _) => write!(f, "vertex"),
            (Shape::Simplex, 1) => write!(f, "line"),
            (Shape::Simplex, 2) => write!(f, "triangle"),
            (Shape::Simplex, 3) => write!(f, "tetrahedron"),
            (Shape::Cube, 2) => write!(f, "quadrilateral"),
            (Shape::Cube, 3) => write!(f, "hexahedron"),
            (s, d) => write!(f, "{}{d}d", s.name()),
        }
    }
}

/// One subentity of a reference element.
#[derive(Clone, Debug, PartialEq)]
pub struct SubEntity {
    pub kind: GeometryKind,
    /// Element corner numbers, in the subentity's reference order.
    pub corners: Vec<usize>,
    pub barycenter: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceElement {
    kind: GeometryKind,
    corners: Vec<Vec<f64>>,
    /// `subentities[codim][i]`
    subentities: Vec<Vec<SubEntity>>,
    volume: f64,
}

impl ReferenceElement {
    pub fn kind(&self) -> GeometryKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.kind.dim
    }

    /// Number of subentities of the given codimension.
    pub fn size(&self, codim: usize) -> usize {
        self.subentities.get(codim).map_or(0, Vec::len)
    }

    pub fn corner_count(&self) -> usize {
        self.corners.len()
    }

    pub fn corner(&self, i: usize) -> &[f64] {
        &self.corners[i]
    }

    pub fn corners(&self) -> &[Vec<f64>] {
        &self.corners
    }

    pub fn subentity(&self, i: usize, codim: usize) -> Result<&SubEntity> {
        let list = self.subentities.get(codim).ok_or(Error::OutOfBounds {
            dim: 1,
            index: codim,
            extent: self.dim() + 1,
        })?;
        list.get(i).ok_or(Error::OutOfBounds {
            dim: 0,
            index: i,
            extent: list.len(),
        })
    }

    /// Barycenter of subentity `(i, codim)`.
    pub fn position(&self, i: usize, codim: usize) -> Result<&[f64]> {
        Ok(&self.subentity(i, codim)?.barycenter)
    }

    pub fn barycenter(&self) -> &[f64] {
        &self.subentities[0][0].barycenter
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Whether `x` lies in the closed reference domain inflated by `tol`.
    pub fn check_inside(&self, x: &[f64], tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let nonneg = |v: f64| v >= -tol;
        match self.kind.shape {
            Shape::Vertex => true,
            Shape::Simplex => x.iter().all(|&v| nonneg(v)) && x.iter().sum::<f64>() <= 1.0 + tol,
            Shape::Cube => x.iter().all(|&v| nonneg(v) && v <= 1.0 + tol),
            Shape::Prism => {
                nonneg(x[0])
                    && nonneg(x[1])
                    && x[0] + x[1] <= 1.0 + tol
                    && nonneg(x[2])
                    && x[2] <= 1.0 + tol
            }
            Shape::Pyramid => {
                nonneg(x[0])
                    && nonneg(x[1])
                    && nonneg(x[2])
                    && x[0] + x[2] <= 1.0 + tol
                    && x[1] + x[2] <= 1.0 + tol
            }
        }
    }

    /// Unit outer normal of facet `i`.
    pub fn outer_normal(&self, facet: usize) -> Result<Vec<f64>> {
        let f = self.subentity(facet, 1)?;
        let d = self.dim();
        let p = |k: usize| &self.corners[f.corners[k]];
        let mut n = match d {
            1 => vec![1.0],
            2 => {
                let (a, b) = (p(0), p(1));
                vec![b[1] - a[1], a[0] - b[0]]
            }
            3 => {
                let (a, b, c) = (p(0), p(1), p(2));
                let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                vec![
                    u[1] * v[2] - u[2] * v[1],
                    u[2] * v[0] - u[0] * v[2],
                    u[0] * v[1] - u[1] * v[0],
                ]
            }
            _ => {
                return Err(Error::InvalidArgument(
                    "outer normals need dimension 1 to 3".into(),
                ))
            }
        };
        let len = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        n.iter_mut().for_each(|v| *v /= len);
        let c = self.barycenter();
        let outward: f64 = n
            .iter()
            .zip(f.barycenter.iter().zip(c))
            .map(|(ni, (fi, ci))| ni * (fi - ci))
            .sum();
        if outward < 0.0 {
            n.iter_mut().for_each(|v| *v = -*v);
        }
        Ok(n)
    }
}

/// Returns the cached reference element for `kind`.
pub fn reference_element(kind: GeometryKind) -> &'static ReferenceElement {
    static CACHE: [OnceLock<ReferenceElement>; 9] = [const { OnceLock::new() }; 9];
    CACHE[kind.slot()].get_or_init(|| build(kind))
}

fn mean(points: &[Vec<f64>], ids: &[usize], dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for &i in ids {
        for (mk, pk) in m.iter_mut().zip(&points[i]) {
            *mk += pk;
        }
    }
    m.iter_mut().for_each(|v| *v /= ids.len() as f64);
    m
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn kind(shape: Shape, dim: usize) -> GeometryKind {
    GeometryKind { shape, dim }
}

/// Subentities of one codimension as (kind, corners in local order).
fn subentity_list(k: GeometryKind, codim: usize) -> Vec<(GeometryKind, Vec<usize>)> {
    let d = k.dim;
    let sub_dim = d - codim;
    if sub_dim == 0 {
        let n = corner_list(k).len();
        return (0..n).map(|i| (GeometryKind::VERTEX, vec![i])).collect();
    }
    let mut list: Vec<(GeometryKind, Vec<usize>)> = match k.shape {
        Shape::Vertex => vec![(k, vec![0])],
        Shape::Simplex => combinations(d + 1, sub_dim + 1)
            .into_iter()
            .map(|c| (kind(Shape::Simplex, sub_dim), c))
            .collect(),
        Shape::Cube => {
            let mut out = Vec::new();
            for free in combinations(d, sub_dim) {
                let fixed: Vec<usize> = (0..d).filter(|c| !free.contains(c)).collect();
                for bits in 0..(1usize << fixed.len()) {
                    let mut base = 0;
                    for (b, &c) in fixed.iter().enumerate() {
                        if bits >> b & 1 == 1 {
                            base |= 1 << c;
                        }
                    }
                    let corners = (0..(1usize << sub_dim))
                        .map(|local| {
                            let mut id = base;
                            for (b, &c) in free.iter().enumerate() {
                                if local >> b & 1 == 1 {
                                    id |= 1 << c;
                                }
                            }
                            id
                        })
                        .collect();
                    out.push((kind(Shape::Cube, sub_dim), corners));
                }
            }
            out
        }
        Shape::Prism => match codim {
            0 => vec![(k, (0..6).collect())],
            1 => vec![
                (GeometryKind::TRIANGLE, vec![0, 1, 2]),
                (GeometryKind::TRIANGLE, vec![3, 4, 5]),
                (GeometryKind::QUADRILATERAL, vec![0, 1, 3, 4]),
                (GeometryKind::QUADRILATERAL, vec![0, 2, 3, 5]),
                (GeometryKind::QUADRILATERAL, vec![1, 2, 4, 5]),
            ],
            _ => [[0, 1], [0, 2], [1, 2], [3, 4], [3, 5], [4, 5], [0, 3], [1, 4], [2, 5]]
                .iter()
                .map(|e| (GeometryKind::LINE, e.to_vec()))
                .collect(),
        },
        Shape::Pyramid => match codim {
            0 => vec![(k, (0..5).collect())],
            1 => vec![
                (GeometryKind::QUADRILATERAL, vec![0, 1, 2, 3]),
                (GeometryKind::TRIANGLE, vec![0, 1, 4]),
                (GeometryKind::TRIANGLE, vec![0, 2, 4]),
                (GeometryKind::TRIANGLE, vec![1, 3, 4]),
                (GeometryKind::TRIANGLE, vec![2, 3, 4]),
            ],
            _ => [[0, 1], [0, 2], [1, 3], [2, 3], [0, 4], [1, 4], [2, 4], [3, 4]]
                .iter()
                .map(|e| (GeometryKind::LINE, e.to_vec()))
                .collect(),
        },
    };
    list.sort_by_cached_key(|(_, c)| {
        let mut s = c.clone();
        s.sort_unstable();
        s
    });
    list
}

fn corner_list(k: GeometryKind) -> Vec<Vec<f64>> {
    let d = k.dim;
    match k.shape {
        Shape::Vertex => vec![vec![]],
        Shape::Simplex => (0..=d)
            .map(|i| {
                let mut c = vec![0.0; d];
                if i > 0 {
                    c[i - 1] = 1.0;
                }
                c
            })
            .collect(),
        Shape::Cube => (0..(1usize << d))
            .map(|id| (0..d).map(|b| (id >> b & 1) as f64).collect())
            .collect(),
        Shape::Prism => vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
        ],
        Shape::Pyramid => vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ],
    }
}

fn build(k: GeometryKind) -> ReferenceElement {
    let d = k.dim;
    let corners = corner_list(k);
    let subentities = (0..=d)
        .map(|codim| {
            subentity_list(k, codim)
                .into_iter()
                .map(|(kind, ids)| SubEntity {
                    kind,
                    barycenter: mean(&corners, &ids, d),
                    corners: ids,
                })
                .collect()
        })
        .collect();
    let volume = match k.shape {
        Shape::Vertex | Shape::Cube => 1.0,
        Shape::Simplex => 1.0 / factorial(d),
        Shape::Prism => 0.5,
        Shape::Pyramid => 1.0 / 3.0,
    };
    ReferenceElement {
        kind: k,
        corners,
        subentities,
        volume,
    }
}
