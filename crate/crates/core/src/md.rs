//! Multidimensional extents, layout mappings and arrays.
//!
//! [`MdView`] is a non-owning view over contiguous storage, [`MdArray`] its
//! owning counterpart. Both are addressed through an [`MdExtents`] and a
//! [`LayoutMapping`] that turns a multi-index into a flat offset.

use crate::{Error, Result};

/// Maximum supported rank.
pub const MAX_RANK: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MdExtents {
    sizes: Vec<usize>,
}

impl MdExtents {
    pub fn new(sizes: &[usize]) -> Result<Self> {
        if sizes.len() > MAX_RANK {
            return Err(Error::InvalidLayout(format!(
                "rank {} exceeds the maximum of {MAX_RANK}",
                sizes.len()
            )));
        }
        Ok(Self {
            sizes: sizes.to_vec(),
        })
    }

    pub fn rank(&self) -> usize {
        self.sizes.len()
    }

    pub fn extent(&self, dim: usize) -> usize {
        self.sizes[dim]
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Number of elements; the empty product is 1.
    pub fn size(&self) -> usize {
        self.sizes.iter().product()
    }

    pub fn check(&self, index: &[usize]) -> Result<()> {
        if index.len() != self.rank() {
            return Err(Error::ShapeMismatch(format!(
                "index of rank {} for extents of rank {}",
                index.len(),
                self.rank()
            )));
        }
        for (dim, (&i, &e)) in index.iter().zip(&self.sizes).enumerate() {
            if i >= e {
                return Err(Error::OutOfBounds {
                    dim,
                    index: i,
                    extent: e,
                });
            }
        }
        Ok(())
    }

    /// All valid multi-indices, last index fastest.
    pub fn indices(&self) -> Indices<'_> {
        Indices {
            extents: self,
            next: if self.size() == 0 {
                None
            } else {
                Some(vec![0; self.rank()])
            },
        }
    }
}

pub struct Indices<'a> {
    extents: &'a MdExtents,
    next: Option<Vec<usize>>,
}

impl Iterator for Indices<'_> {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut dim = succ.len();
        loop {
            if dim == 0 {
                break;
            }
            dim -= 1;
            succ[dim] += 1;
            if succ[dim] < self.extents.sizes[dim] {
                self.next = Some(succ);
                break;
            }
            succ[dim] = 0;
        }
        Some(current)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LayoutKind {
    RowMajor,
    ColumnMajor,
    Strided,
}

/// Index-to-offset policy. Strides are stored for every kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayoutMapping {
    kind: LayoutKind,
    strides: Vec<usize>,
}

impl LayoutMapping {
    pub fn row_major(extents: &MdExtents) -> Self {
        let mut strides = vec![1; extents.rank()];
        for k in (0..extents.rank().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * extents.extent(k + 1);
        }
        Self {
            kind: LayoutKind::RowMajor,
            strides,
        }
    }

    pub fn column_major(extents: &MdExtents) -> Self {
        let mut strides = vec![1; extents.rank()];
        for k in 1..extents.rank() {
            strides[k] = strides[k - 1] * extents.extent(k - 1);
        }
        Self {
            kind: LayoutKind::ColumnMajor,
            strides,
        }
    }

    /// Explicit strides. Negative strides and mappings that are not
    /// injective on `extents` are rejected.
    pub fn strided(extents: &MdExtents, strides: &[isize]) -> Result<Self> {
        if strides.len() != extents.rank() {
            return Err(Error::InvalidLayout(format!(
                "{} strides for rank {}",
                strides.len(),
                extents.rank()
            )));
        }
        if let Some(s) = strides.iter().find(|s| **s < 0) {
            return Err(Error::InvalidLayout(format!("negative stride {s}")));
        }
        let strides: Vec<usize> = strides.iter().map(|&s| s as usize).collect();
        // Sorted by stride, each stride must clear the span of the smaller ones.
        let mut order: Vec<usize> = (0..strides.len())
            .filter(|&k| extents.extent(k) > 1)
            .collect();
        order.sort_by_key(|&k| strides[k]);
        let mut span = 1;
        for k in order {
            if strides[k] < span {
                return Err(Error::InvalidLayout(format!(
                    "stride {} of dimension {k} overlaps earlier dimensions",
                    strides[k]
                )));
            }
            span += strides[k] * (extents.extent(k) - 1);
        }
        Ok(Self {
            kind: LayoutKind::Strided,
            strides,
        })
    }

    pub fn kind(&self) -> LayoutKind {
        self.kind
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn offset(&self, extents: &MdExtents, index: &[usize]) -> Result<usize> {
        extents.check(index)?;
        Ok(index.iter().zip(&self.strides).map(|(i, s)| i * s).sum())
    }

    /// One past the largest offset reachable through `extents`.
    pub fn required_span(&self, extents: &MdExtents) -> usize {
        if extents.size() == 0 {
            return 0;
        }
        1 + extents
            .sizes()
            .iter()
            .zip(&self.strides)
            .map(|(e, s)| (e - 1) * s)
            .sum::<usize>()
    }
}

pub fn layout_offset(extents: &MdExtents, layout: &LayoutMapping, index: &[usize]) -> Result<usize> {
    layout.offset(extents, index)
}

fn check_storage(extents: &MdExtents, layout: &LayoutMapping, len: usize) -> Result<()> {
    if layout.strides.len() != extents.rank() {
        return Err(Error::InvalidLayout("layout rank differs from extents".into()));
    }
    let span = layout.required_span(extents);
    if len < span {
        return Err(Error::ShapeMismatch(format!(
            "storage of length {len} is shorter than the required span {span}"
        )));
    }
    Ok(())
}

/// Non-owning view over contiguous storage.
#[derive(Clone, Debug)]
pub struct MdView<'a, T> {
    extents: MdExtents,
    layout: LayoutMapping,
    data: &'a [T],
}

impl<'a, T> MdView<'a, T> {
    pub fn new(data: &'a [T], extents: MdExtents, layout: LayoutMapping) -> Result<Self> {
        check_storage(&extents, &layout, data.len())?;
        Ok(Self {
            extents,
            layout,
            data,
        })
    }

    /// Row-major view.
    pub fn row_major(data: &'a [T], extents: MdExtents) -> Result<Self> {
        let layout = LayoutMapping::row_major(&extents);
        Self::new(data, extents, layout)
    }

    pub fn extents(&self) -> &MdExtents {
        &self.extents
    }

    pub fn extent(&self, dim: usize) -> usize {
        self.extents.extent(dim)
    }

    pub fn get(&self, index: &[usize]) -> Result<&'a T> {
        let off = self.layout.offset(&self.extents, index)?;
        Ok(&self.data[off])
    }
}

/// Owning multidimensional array.
#[derive(Clone, Debug, PartialEq)]
pub struct MdArray<T> {
    extents: MdExtents,
    layout: LayoutMapping,
    data: Vec<T>,
}

impl<T: Clone> MdArray<T> {
    /// Row-major array filled with `value`.
    pub fn filled(extents: MdExtents, value: T) -> Self {
        let layout = LayoutMapping::row_major(&extents);
        Self::with_layout(extents, layout, value)
    }

    pub fn with_layout(extents: MdExtents, layout: LayoutMapping, value: T) -> Self {
        let data = vec![value; layout.required_span(&extents)];
        Self {
            extents,
            layout,
            data,
        }
    }
}

impl<T> MdArray<T> {
    pub fn from_vec(data: Vec<T>, extents: MdExtents, layout: LayoutMapping) -> Result<Self> {
        check_storage(&extents, &layout, data.len())?;
        Ok(Self {
            extents,
            layout,
            data,
        })
    }

    pub fn extents(&self) -> &MdExtents {
        &self.extents
    }

    pub fn extent(&self, dim: usize) -> usize {
        self.extents.extent(dim)
    }

    pub fn layout(&self) -> &LayoutMapping {
        &self.layout
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn get(&self, index: &[usize]) -> Result<&T> {
        let off = self.layout.offset(&self.extents, index)?;
        Ok(&self.data[off])
    }

    pub fn get_mut(&mut self, index: &[usize]) -> Result<&mut T> {
        let off = self.layout.offset(&self.extents, index)?;
        Ok(&mut self.data[off])
    }

    pub fn set(&mut self, index: &[usize], value: T) -> Result<()> {
        *self.get_mut(index)? = value;
        Ok(())
    }

    pub fn view(&self) -> MdView<'_, T> {
        MdView {
            extents: self.extents.clone(),
            layout: self.layout.clone(),
            data: &self.data,
        }
    }
}
