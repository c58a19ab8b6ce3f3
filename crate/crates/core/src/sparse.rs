//! Sparsity patterns and block compressed-row matrices.
//!
//! [`MatrixIndexSet`] collects a pattern one `(i, j)` at a time and exports
//! it into a [`BcrsMatrix`] without re-sorting. Blocks may be scalars, dense
//! matrices or further BCRS matrices; [`write_svg`] renders the nested
//! structure as a spy plot.

use std::collections::btree_set;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dense::DenseMatrix;
use crate::{Error, Result};

/// Row size above which a row switches from a sorted array to a tree set.
pub const DEFAULT_THRESHOLD: usize = 64;

#[derive(Clone, Debug)]
enum IndexRow {
    Flat(Vec<usize>),
    Tree(BTreeSet<usize>),
}

impl IndexRow {
    fn len(&self) -> usize {
        match self {
            IndexRow::Flat(v) => v.len(),
            IndexRow::Tree(s) => s.len(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MatrixIndexSet {
    rows: usize,
    cols: usize,
    threshold: usize,
    data: Vec<IndexRow>,
}

impl MatrixIndexSet {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self::with_threshold(rows, cols, DEFAULT_THRESHOLD)
    }

    pub fn with_threshold(rows: usize, cols: usize, threshold: usize) -> Self {
        Self {
            rows,
            cols,
            threshold,
            data: vec![IndexRow::Flat(Vec::new()); rows],
        }
    }

    /// The pattern of an existing matrix.
    pub fn from_pattern<B: Block>(m: &BcrsMatrix<B>) -> Self {
        let mut s = Self::new(m.rows(), m.cols());
        for i in 0..m.rows() {
            for &j in m.row_columns(i) {
                s.add(i, j).expect("pattern within bounds");
            }
        }
        s
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn threshold(&self) -> usize {
        self.threshold
    }

    fn check_row(&self, i: usize) -> Result<()> {
        if i >= self.rows {
            return Err(Error::OutOfBounds {
                dim: 0,
                index: i,
                extent: self.rows,
            });
        }
        Ok(())
    }

    pub fn add(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_row(i)?;
        if j >= self.cols {
            return Err(Error::OutOfBounds {
                dim: 1,
                index: j,
                extent: self.cols,
            });
        }
        let threshold = self.threshold;
        let row = &mut self.data[i];
        match row {
            IndexRow::Flat(v) => {
                if let Err(pos) = v.binary_search(&j) {
                    if v.len() < threshold {
                        v.insert(pos, j);
                    } else {
                        let mut set: BTreeSet<usize> = v.iter().copied().collect();
                        set.insert(j);
                        *row = IndexRow::Tree(set);
                    }
                }
            }
            IndexRow::Tree(s) => {
                s.insert(j);
            }
        }
        Ok(())
    }

    pub fn row_size(&self, i: usize) -> Result<usize> {
        self.check_row(i)?;
        Ok(self.data[i].len())
    }

    /// Whether row `i` has switched to the tree representation.
    pub fn is_tree_row(&self, i: usize) -> Result<bool> {
        self.check_row(i)?;
        Ok(matches!(self.data[i], IndexRow::Tree(_)))
    }

    /// Strictly increasing column indices of row `i`, borrowed from storage.
    pub fn column_indices(&self, i: usize) -> Result<ColumnIndices<'_>> {
        self.check_row(i)?;
        Ok(match &self.data[i] {
            IndexRow::Flat(v) => ColumnIndices::Flat(v.iter()),
            IndexRow::Tree(s) => ColumnIndices::Tree(s.iter()),
        })
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(IndexRow::len).sum()
    }

    /// Builds the structure of `m` through the no-sort path.
    pub fn export<B: Block>(&self, m: &mut BcrsMatrix<B>) -> Result<()> {
        if m.rows() != self.rows || m.cols() != self.cols {
            return Err(Error::ShapeMismatch(format!(
                "index set is {}x{}, matrix is {}x{}",
                self.rows,
                self.cols,
                m.rows(),
                m.cols()
            )));
        }
        m.set_indices_no_sort(self.data.iter().map(|row| match row {
            IndexRow::Flat(v) => ColumnIndices::Flat(v.iter()),
            IndexRow::Tree(s) => ColumnIndices::Tree(s.iter()),
        }))
    }

    pub fn to_matrix<B: Block>(&self, template: B) -> Result<BcrsMatrix<B>> {
        let mut m = BcrsMatrix::new(self.rows, self.cols, template);
        self.export(&mut m)?;
        Ok(m)
    }
}

impl PartialEq for MatrixIndexSet {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && (0..self.rows).all(|i| {
                self.column_indices(i)
                    .expect("row in range")
                    .eq(other.column_indices(i).expect("row in range"))
            })
    }
}

#[derive(Clone, Debug)]
pub enum ColumnIndices<'a> {
    Flat(std::slice::Iter<'a, usize>),
    Tree(btree_set::Iter<'a, usize>),
}

impl Iterator for ColumnIndices<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        match self {
            ColumnIndices::Flat(it) => it.next().copied(),
            ColumnIndices::Tree(it) => it.next().copied(),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self {
            ColumnIndices::Flat(it) => it.size_hint(),
            ColumnIndices::Tree(it) => it.size_hint(),
        }
    }
}

impl ExactSizeIterator for ColumnIndices<'_> {}

/// A matrix entry: a scalar, a dense block or a nested sparse matrix.
pub trait Block: Clone {
    /// Scalar rows covered by the block.
    fn scalar_rows(&self) -> usize;
    fn scalar_cols(&self) -> usize;
    /// Matrix nesting levels inside the block (0 for scalars).
    fn depth(&self) -> usize;
    fn scalar_nnz(&self) -> usize;
    /// Same structure, all values zero.
    fn zeroed(&self) -> Self;
    /// Calls `f(row, col, value)` for every stored scalar, offset by `(r0, c0)`.
    fn for_each_scalar(&self, r0: usize, c0: usize, f: &mut dyn FnMut(usize, usize, f64));
    /// Calls `f(level, r0, c0, rows, cols)` for the block and every non-scalar
    /// block nested in it.
    fn for_each_frame(
        &self,
        _level: usize,
        _r0: usize,
        _c0: usize,
        _f: &mut dyn FnMut(usize, usize, usize, usize, usize),
    ) {
    }
    /// `y += B x` on the scalar level.
    fn mult_add(&self, x: &[f64], y: &mut [f64]) {
        self.for_each_scalar(0, 0, &mut |i, j, v| y[i] += v * x[j]);
    }
}

impl Block for f64 {
    fn scalar_rows(&self) -> usize {
        1
    }
    fn scalar_cols(&self) -> usize {
        1
    }
    fn depth(&self) -> usize {
        0
    }
    fn scalar_nnz(&self) -> usize {
        1
    }
    fn zeroed(&self) -> Self {
        0.0
    }
    fn for_each_scalar(&self, r0: usize, c0: usize, f: &mut dyn FnMut(usize, usize, f64)) {
        f(r0, c0, *self)
    }
    fn mult_add(&self, x: &[f64], y: &mut [f64]) {
        y[0] += self * x[0];
    }
}

impl Block for DenseMatrix {
    fn scalar_rows(&self) -> usize {
        self.rows()
    }
    fn scalar_cols(&self) -> usize {
        self.cols()
    }
    fn depth(&self) -> usize {
        1
    }
    fn scalar_nnz(&self) -> usize {
        self.rows() * self.cols()
    }
    fn zeroed(&self) -> Self {
        DenseMatrix::zeros(self.rows(), self.cols())
    }
    fn for_each_scalar(&self, r0: usize, c0: usize, f: &mut dyn FnMut(usize, usize, f64)) {
        for i in 0..self.rows() {
            for (j, &v) in self.row(i).iter().enumerate() {
                f(r0 + i, c0 + j, v);
            }
        }
    }
    fn for_each_frame(
        &self,
        level: usize,
        r0: usize,
        c0: usize,
        f: &mut dyn FnMut(usize, usize, usize, usize, usize),
    ) {
        f(level, r0, c0, self.rows(), self.cols());
    }
}

/// Block compressed-row storage.
#[derive(Clone, Debug, PartialEq)]
pub struct BcrsMatrix<B> {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    columns: Vec<usize>,
    template: B,
    blocks: Vec<B>,
}

impl<B: Block> BcrsMatrix<B> {
    /// An empty pattern; every stored block will be a zeroed copy of `template`.
    pub fn new(rows: usize, cols: usize, template: B) -> Self {
        Self {
            rows,
            cols,
            offsets: vec![0; rows + 1],
            columns: Vec::new(),
            template: template.zeroed(),
            blocks: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn blocks(&self) -> &[B] {
        &self.blocks
    }

    pub fn template(&self) -> &B {
        &self.template
    }

    /// Stored blocks.
    pub fn nnz(&self) -> usize {
        self.columns.len()
    }

    pub fn row_columns(&self, i: usize) -> &[usize] {
        &self.columns[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Sets the structure from rows that are already strictly increasing.
    ///
    /// Sortedness is a caller contract, checked only in debug builds.
    pub fn set_indices_no_sort<R, I>(&mut self, rows: R) -> Result<()>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = usize>,
    {
        let mut offsets = Vec::with_capacity(self.rows + 1);
        let mut columns = Vec::with_capacity(self.columns.len());
        offsets.push(0);
        for (i, row) in rows.into_iter().enumerate() {
            if i >= self.rows {
                return Err(Error::ShapeMismatch(format!("more than {} rows", self.rows)));
            }
            let start = columns.len();
            columns.extend(row);
            let row = &columns[start..];
            if cfg!(debug_assertions) && row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::UnsortedRow { row: i });
            }
            if let Some(&j) = row.iter().find(|&&j| j >= self.cols) {
                return Err(Error::OutOfBounds {
                    dim: 1,
                    index: j,
                    extent: self.cols,
                });
            }
            offsets.push(columns.len());
        }
        if offsets.len() != self.rows + 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} rows given for a matrix with {} rows",
                offsets.len() - 1,
                self.rows
            )));
        }
        self.install(offsets, columns);
        Ok(())
    }

    /// Sets the structure from rows in any order, with duplicates allowed.
    pub fn set_indices<R, I>(&mut self, rows: R) -> Result<()>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = usize>,
    {
        let mut offsets = Vec::with_capacity(self.rows + 1);
        let mut columns: Vec<usize> = Vec::with_capacity(self.columns.len());
        offsets.push(0);
        for (i, row) in rows.into_iter().enumerate() {
            if i >= self.rows {
                return Err(Error::ShapeMismatch(format!("more than {} rows", self.rows)));
            }
            let start = columns.len();
            columns.extend(row);
            columns[start..].sort_unstable();
            let mut tail = start;
            for k in start..columns.len() {
                if k == start || columns[k] != columns[tail - 1] {
                    columns[tail] = columns[k];
                    tail += 1;
                }
            }
            columns.truncate(tail);
            if columns[start..].last().is_some_and(|&j| j >= self.cols) {
                return Err(Error::OutOfBounds {
                    dim: 1,
                    index: *columns.last().expect("nonempty"),
                    extent: self.cols,
                });
            }
            offsets.push(columns.len());
        }
        if offsets.len() != self.rows + 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} rows given for a matrix with {} rows",
                offsets.len() - 1,
                self.rows
            )));
        }
        self.install(offsets, columns);
        Ok(())
    }

    fn install(&mut self, offsets: Vec<usize>, columns: Vec<usize>) {
        self.blocks = vec![self.template.clone(); columns.len()];
        self.offsets = offsets;
        self.columns = columns;
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.rows {
            return None;
        }
        let start = self.offsets[i];
        self.row_columns(i).binary_search(&j).ok().map(|k| start + k)
    }

    pub fn exists(&self, i: usize, j: usize) -> bool {
        self.position(i, j).is_some()
    }

    pub fn entry(&self, i: usize, j: usize) -> Option<&B> {
        self.position(i, j).map(|k| &self.blocks[k])
    }

    /// Mutable access to an existing entry; `None` outside the pattern.
    pub fn entry_mut(&mut self, i: usize, j: usize) -> Option<&mut B> {
        self.position(i, j).map(|k| &mut self.blocks[k])
    }

    /// Replaces an existing entry with a block of the uniform shape.
    pub fn set_block(&mut self, i: usize, j: usize, block: B) -> Result<()> {
        if block.scalar_rows() != self.template.scalar_rows()
            || block.scalar_cols() != self.template.scalar_cols()
            || block.depth() != self.template.depth()
        {
            return Err(Error::ShapeMismatch(
                "blocks of one matrix share a single shape".into(),
            ));
        }
        let k = self
            .position(i, j)
            .ok_or_else(|| Error::InvalidArgument(format!("({i}, {j}) is not in the pattern")))?;
        self.blocks[k] = block;
        Ok(())
    }

    /// Row `i` as `(block, column)` pairs in ascending column order.
    pub fn row(&self, i: usize) -> Result<BcrsRow<'_, B>> {
        if i >= self.rows {
            return Err(Error::OutOfBounds {
                dim: 0,
                index: i,
                extent: self.rows,
            });
        }
        let range = self.offsets[i]..self.offsets[i + 1];
        Ok(BcrsRow {
            blocks: self.blocks[range.clone()].iter(),
            columns: self.columns[range].iter(),
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (br, bc) = (self.template.scalar_rows(), self.template.scalar_cols());
        if x.len() != self.cols * bc {
            return Err(Error::ShapeMismatch(format!(
                "vector of length {} for {} scalar columns",
                x.len(),
                self.cols * bc
            )));
        }
        let mut y = vec![0.0; self.rows * br];
        self.mult_add(x, &mut y);
        Ok(y)
    }
}

impl<B: Block> Block for BcrsMatrix<B> {
    fn scalar_rows(&self) -> usize {
        self.rows * self.template.scalar_rows()
    }
    fn scalar_cols(&self) -> usize {
        self.cols * self.template.scalar_cols()
    }
    fn depth(&self) -> usize {
        1 + self.template.depth()
    }
    fn scalar_nnz(&self) -> usize {
        self.blocks.iter().map(Block::scalar_nnz).sum()
    }
    fn zeroed(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            offsets: self.offsets.clone(),
            columns: self.columns.clone(),
            template: self.template.clone(),
            blocks: self.blocks.iter().map(Block::zeroed).collect(),
        }
    }
    fn for_each_scalar(&self, r0: usize, c0: usize, f: &mut dyn FnMut(usize, usize, f64)) {
        let (br, bc) = (self.template.scalar_rows(), self.template.scalar_cols());
        for i in 0..self.rows {
            for k in self.offsets[i]..self.offsets[i + 1] {
                self.blocks[k].for_each_scalar(r0 + i * br, c0 + self.columns[k] * bc, f);
            }
        }
    }
    fn for_each_frame(
        &self,
        level: usize,
        r0: usize,
        c0: usize,
        f: &mut dyn FnMut(usize, usize, usize, usize, usize),
    ) {
        f(level, r0, c0, self.scalar_rows(), self.scalar_cols());
        self.for_each_block_frame(level + 1, r0, c0, f);
    }
    fn mult_add(&self, x: &[f64], y: &mut [f64]) {
        let (br, bc) = (self.template.scalar_rows(), self.template.scalar_cols());
        for i in 0..self.rows {
            for k in self.offsets[i]..self.offsets[i + 1] {
                let j = self.columns[k];
                self.blocks[k].mult_add(&x[j * bc..(j + 1) * bc], &mut y[i * br..(i + 1) * br]);
            }
        }
    }
}

impl<B: Block> BcrsMatrix<B> {
    fn for_each_block_frame(
        &self,
        level: usize,
        r0: usize,
        c0: usize,
        f: &mut dyn FnMut(usize, usize, usize, usize, usize),
    ) {
        let (br, bc) = (self.template.scalar_rows(), self.template.scalar_cols());
        for i in 0..self.rows {
            for k in self.offsets[i]..self.offsets[i + 1] {
                self.blocks[k].for_each_frame(level, r0 + i * br, c0 + self.columns[k] * bc, f);
            }
        }
    }
}

pub struct BcrsRow<'a, B> {
    blocks: std::slice::Iter<'a, B>,
    columns: std::slice::Iter<'a, usize>,
}

impl<'a, B> Iterator for BcrsRow<'a, B> {
    type Item = (&'a B, usize);

    fn next(&mut self) -> Option<Self::Item> {
        Some((self.blocks.next()?, *self.columns.next()?))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.columns.size_hint()
    }
}

impl<B> ExactSizeIterator for BcrsRow<'_, B> {}

/// Square diagonal matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalMatrix(pub Vec<f64>);

/// Row-wise traversal yielding `(value, column)` pairs in ascending column order.
pub trait SparseRows {
    type Value;
    type Row<'a>: Iterator<Item = (&'a Self::Value, usize)>
    where
        Self: 'a;

    fn row_count(&self) -> usize;
    fn col_count(&self) -> usize;
    fn sparse_row(&self, i: usize) -> Result<Self::Row<'_>>;
}

fn row_error(i: usize, rows: usize) -> Error {
    Error::OutOfBounds {
        dim: 0,
        index: i,
        extent: rows,
    }
}

impl<B: Block> SparseRows for BcrsMatrix<B> {
    type Value = B;
    type Row<'a>
        = BcrsRow<'a, B>
    where
        B: 'a;

    fn row_count(&self) -> usize {
        self.rows
    }
    fn col_count(&self) -> usize {
        self.cols
    }
    fn sparse_row(&self, i: usize) -> Result<BcrsRow<'_, B>> {
        self.row(i)
    }
}

impl SparseRows for DenseMatrix {
    type Value = f64;
    type Row<'a> = std::iter::Zip<std::slice::Iter<'a, f64>, std::ops::Range<usize>>;

    fn row_count(&self) -> usize {
        self.rows()
    }
    fn col_count(&self) -> usize {
        self.cols()
    }
    fn sparse_row(&self, i: usize) -> Result<Self::Row<'_>> {
        if i >= self.rows() {
            return Err(row_error(i, self.rows()));
        }
        Ok(self.row(i).iter().zip(0..self.cols()))
    }
}

impl SparseRows for DiagonalMatrix {
    type Value = f64;
    type Row<'a> = std::iter::Once<(&'a f64, usize)>;

    fn row_count(&self) -> usize {
        self.0.len()
    }
    fn col_count(&self) -> usize {
        self.0.len()
    }
    fn sparse_row(&self, i: usize) -> Result<Self::Row<'_>> {
        self.0
            .get(i)
            .map(|v| std::iter::once((v, i)))
            .ok_or_else(|| row_error(i, self.0.len()))
    }
}

/// `y = A x` by traversing sparse rows.
pub fn sparse_matvec<M>(a: &M, x: &[f64]) -> Result<Vec<f64>>
where
    M: SparseRows<Value = f64>,
{
    if x.len() != a.col_count() {
        return Err(Error::ShapeMismatch(format!(
            "vector of length {} for {} columns",
            x.len(),
            a.col_count()
        )));
    }
    let mut y = vec![0.0; a.row_count()];
    for (i, yi) in y.iter_mut().enumerate() {
        for (a_ij, j) in a.sparse_row(i)? {
            *yi += a_ij * x[j];
        }
    }
    Ok(y)
}

/// Spy plot geometry and colors.
#[derive(Clone, Debug, PartialEq)]
pub struct SpyStyle {
    /// Pixels per scalar cell.
    pub cell: usize,
    /// Margin added per nesting level.
    pub padding: usize,
    /// Colors by nesting depth, cycled.
    pub colors: Vec<String>,
    pub background: String,
}

impl Default for SpyStyle {
    fn default() -> Self {
        Self {
            cell: 10,
            padding: 2,
            colors: vec!["#1f3b73".into(), "#c0504d".into(), "#4f8f3a".into()],
            background: "#ffffff".into(),
        }
    }
}

impl SpyStyle {
    fn color(&self, depth: usize) -> &str {
        if self.colors.is_empty() {
            "#000000"
        } else {
            &self.colors[depth % self.colors.len()]
        }
    }
}

/// Pixel size `(width, height)` of the spy plot of `m`.
pub fn svg_dimensions<B: Block>(m: &BcrsMatrix<B>, style: &SpyStyle) -> (usize, usize) {
    let margin = 2 * style.padding * m.depth();
    (
        m.scalar_cols() * style.cell + margin,
        m.scalar_rows() * style.cell + margin,
    )
}

/// Renders the pattern of `m` as an SVG document.
///
/// Every stored scalar becomes one `rect`; frames around nested blocks and
/// the background are drawn as `path` elements so that the rectangle count
/// equals the scalar nonzero count.
pub fn write_svg<B: Block>(m: &BcrsMatrix<B>, style: &SpyStyle) -> Result<String> {
    if style.cell == 0 {
        return Err(Error::InvalidArgument("cell size must be positive".into()));
    }
    let depth = m.depth();
    let origin = style.padding * depth;
    let cell = style.cell;
    let (w, h) = svg_dimensions(m, style);
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">"
    );
    let _ = writeln!(
        out,
        "<path d=\"M0 0H{w}V{h}H0Z\" fill=\"{}\"/>",
        style.background
    );
    let mut frames: Vec<String> = vec![String::new(); depth.saturating_sub(1)];
    m.for_each_block_frame(0, 0, 0, &mut |level, r0, c0, rows, cols| {
        let _ = write!(
            frames[level],
            "M{} {}h{}v{}h-{}Z",
            origin + c0 * cell,
            origin + r0 * cell,
            cols * cell,
            rows * cell,
            cols * cell
        );
    });
    for (level, d) in frames.iter().enumerate() {
        if !d.is_empty() {
            let _ = writeln!(
                out,
                "<path d=\"{d}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\"/>",
                style.color(level)
            );
        }
    }
    let fill = style.color(depth.saturating_sub(1));
    m.for_each_scalar(0, 0, &mut |r, c, _| {
        let _ = writeln!(
            out,
            "<rect x=\"{}\" y=\"{}\" width=\"{cell}\" height=\"{cell}\" fill=\"{fill}\"/>",
            origin + c * cell,
            origin + r * cell
        );
    });
    out.push_str("</svg>\n");
    Ok(out)
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a `coordinate real general` MatrixMarket file. Repeated entries are
/// summed.
pub fn read_matrix_market(reader: impl BufRead) -> Result<BcrsMatrix<f64>> {
    let mut lines = reader.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (_, header) = lines.next().ok_or_else(|| parse_error(1, "empty input"))?;
    let header = header?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields != ["%%matrixmarket", "matrix", "coordinate", "real", "general"] {
        return Err(parse_error(
            1,
            "expected header '%%MatrixMarket matrix coordinate real general'",
        ));
    }
    let mut size = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut declared = 0;
    for (no, line) in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(parse_error(no, "expected 'rows cols entries'"));
                }
                let v: Vec<usize> = parts
                    .iter()
                    .map(|p| p.parse().map_err(|_| parse_error(no, format!("invalid count '{p}'"))))
                    .collect::<Result<_>>()?;
                size = Some((v[0], v[1]));
                declared = v[2];
                entries.reserve(declared);
            }
            Some((rows, cols)) => {
                if parts.len() != 3 {
                    return Err(parse_error(no, "expected 'row col value'"));
                }
                let index = |p: &str, extent: usize| -> Result<usize> {
                    let i: usize = p
                        .parse()
                        .map_err(|_| parse_error(no, format!("invalid index '{p}'")))?;
                    if i == 0 || i > extent {
                        return Err(parse_error(no, format!("index {i} outside 1..={extent}")));
                    }
                    Ok(i - 1)
                };
                let i = index(parts[0], rows)?;
                let j = index(parts[1], cols)?;
                let v: f64 = parts[2]
                    .parse()
                    .map_err(|_| parse_error(no, format!("invalid value '{}'", parts[2])))?;
                if entries.len() == declared {
                    return Err(parse_error(no, format!("more than {declared} entries")));
                }
                entries.push((i, j, v));
            }
        }
    }
    let (rows, cols) = size.ok_or_else(|| parse_error(2, "missing size line"))?;
    if entries.len() != declared {
        return Err(parse_error(
            0,
            format!("{} entries declared, {} found", declared, entries.len()),
        ));
    }
    let mut pattern = MatrixIndexSet::new(rows, cols);
    for &(i, j, _) in &entries {
        pattern.add(i, j)?;
    }
    let mut m = pattern.to_matrix(0.0)?;
    for (i, j, v) in entries {
        *m.entry_mut(i, j).expect("entry in pattern") += v;
    }
    Ok(m)
}

pub fn write_matrix_market(m: &BcrsMatrix<f64>) -> String {
    let mut out = String::from("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz());
    for i in 0..m.rows() {
        for (v, j) in m.row(i).expect("row in range") {
            let _ = writeln!(out, "{} {} {v:e}", i + 1, j + 1);
        }
    }
    out
}

/// Pattern size and rendered document of a spy run.
#[derive(Clone, Debug, PartialEq)]
pub struct SpyOutput {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
    pub svg: String,
}

/// MatrixMarket text to SVG.
pub fn spy_matrix_market(input: impl BufRead, style: &SpyStyle) -> Result<SpyOutput> {
    let m = read_matrix_market(input)?;
    Ok(SpyOutput {
        rows: m.rows(),
        cols: m.cols(),
        nnz: m.nnz(),
        svg: write_svg(&m, style)?,
    })
}

/// Reads `input`, writes the spy plot to `output`.
pub fn spy_file(input: &Path, output: &Path, style: &SpyStyle) -> Result<SpyOutput> {
    let file = std::fs::File::open(input).map_err(|e| io_error(e, input))?;
    let spy = spy_matrix_market(std::io::BufReader::new(file), style)?;
    std::fs::write(output, &spy.svg).map_err(|e| io_error(e, output))?;
    Ok(spy)
}

fn io_error(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchMode {
    /// Structure creation re-sorts every row from a shuffled copy.
    Resort,
    /// Structure creation through [`MatrixIndexSet::export`].
    NoSort,
}

impl BenchMode {
    pub fn name(self) -> &'static str {
        match self {
            BenchMode::Resort => "baseline-resort",
            BenchMode::NoSort => "nosort",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "baseline-resort" | "resort" => Ok(BenchMode::Resort),
            "nosort" => Ok(BenchMode::NoSort),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode '{s}', expected nosort or baseline-resort"
            ))),
        }
    }
}

/// Median stage timings in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub n: usize,
    pub rows: usize,
    pub nnz: usize,
    pub mode: BenchMode,
    pub assemble_pattern: f64,
    pub setup_matrix: f64,
    pub assemble_matrix: f64,
    /// FNV-1a hash of offsets and columns of the built matrix.
    pub checksum: u64,
}

impl BenchReport {
    pub fn stages(&self) -> [(&'static str, f64); 3] {
        [
            ("assemble-pattern", self.assemble_pattern),
            ("setup-matrix", self.setup_matrix),
            ("assemble-matrix", self.assemble_matrix),
        ]
    }
}

/// Neighbours of cell `(x, y)` in the 5-point stencil on an `n x n` grid.
fn stencil(n: usize, x: usize, y: usize) -> impl Iterator<Item = usize> {
    let c = y * n + x;
    let left = (x > 0).then(|| c - 1);
    let right = (x + 1 < n).then(|| c + 1);
    let down = (y > 0).then(|| c - n);
    let up = (y + 1 < n).then(|| c + n);
    [Some(c), left, right, down, up].into_iter().flatten()
}

/// The 5-point stencil pattern on an `n x n` grid.
pub fn stencil_pattern(n: usize, threshold: usize) -> MatrixIndexSet {
    let rows = n * n;
    let mut s = MatrixIndexSet::with_threshold(rows, rows, threshold);
    for y in 0..n {
        for x in 0..n {
            for j in stencil(n, x, y) {
                s.add(y * n + x, j).expect("grid indices in range");
            }
        }
    }
    s
}

pub fn pattern_checksum<B: Block>(m: &BcrsMatrix<B>) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    m.offsets()
        .iter()
        .chain(m.columns())
        .flat_map(|v| (*v as u64).to_le_bytes())
        .fold(OFFSET, |h, b| (h ^ b as u64).wrapping_mul(PRIME))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// One untimed warm-up run followed by `reps` timed runs of the three stages.
pub fn bench_pattern(n: usize, mode: BenchMode, reps: usize, threshold: usize) -> Result<BenchReport> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("grid side must be at least 2, got {n}")));
    }
    if reps == 0 {
        return Err(Error::InvalidArgument("at least one repetition".into()));
    }
    let rows = n * n;
    let mut times = [Vec::new(), Vec::new(), Vec::new()];
    let mut checksum = 0;
    let mut nnz = 0;
    for rep in 0..=reps {
        let t = Instant::now();
        let pattern = stencil_pattern(n, threshold);
        let t_pattern = t.elapsed().as_secs_f64();

        let shuffled: Vec<Vec<usize>> = match mode {
            BenchMode::Resort => {
                let mut rng = ChaCha8Rng::seed_from_u64(rep as u64);
                (0..rows)
                    .map(|i| {
                        let mut r: Vec<usize> = pattern.column_indices(i).expect("row").collect();
                        r.shuffle(&mut rng);
                        r
                    })
                    .collect()
            }
            BenchMode::NoSort => Vec::new(),
        };
        let mut m = BcrsMatrix::new(rows, rows, 0.0);
        let t = Instant::now();
        match mode {
            BenchMode::Resort => m.set_indices(shuffled.iter().map(|r| r.iter().copied()))?,
            BenchMode::NoSort => pattern.export(&mut m)?,
        }
        let t_setup = t.elapsed().as_secs_f64();
        drop(shuffled);

        let t = Instant::now();
        for y in 0..n {
            for x in 0..n {
                let i = y * n + x;
                for j in stencil(n, x, y) {
                    *m.entry_mut(i, j).expect("entry in pattern") += if i == j { 4.0 } else { -1.0 };
                }
            }
        }
        let t_values = t.elapsed().as_secs_f64();
        std::hint::black_box(&m);

        if rep > 0 {
            times[0].push(t_pattern);
            times[1].push(t_setup);
            times[2].push(t_values);
        }
        checksum = pattern_checksum(&m);
        nnz = m.nnz();
    }
    let [a, b, c] = times;
    Ok(BenchReport {
        n,
        rows,
        nnz,
        mode,
        assemble_pattern: median(a),
        setup_matrix: median(b),
        assemble_matrix: median(c),
        checksum,
    })
}
