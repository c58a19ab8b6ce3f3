mod common;

use std::collections::BTreeSet;
use std::io::Cursor;

use common::{parse_svg, ScalarCount};
use fekern::dense::DenseMatrix;
use fekern::sparse::{
    pattern_checksum, read_matrix_market, sparse_matvec, spy_file, spy_matrix_market,
    stencil_pattern, svg_dimensions, write_matrix_market, write_svg, BcrsMatrix, Block,
    DiagonalMatrix, MatrixIndexSet, SpyStyle,
};
use fekern::Error;
use proptest::prelude::*;

fn insertions() -> impl Strategy<Value = (usize, usize, usize, Vec<(usize, usize)>)> {
    (1usize..20, 1usize..20, 1usize..6).prop_flat_map(|(r, c, t)| {
        (Just(r), Just(c), Just(t), prop::collection::vec((0..r, 0..c), 0..200))
    })
}

proptest! {
    #[test]
    fn index_set_matches_ordered_sets((rows, cols, t, ops) in insertions()) {
        let mut s = MatrixIndexSet::with_threshold(rows, cols, t);
        let mut oracle = vec![BTreeSet::new(); rows];
        for &(i, j) in &ops {
            s.add(i, j).unwrap();
            oracle[i].insert(j);
        }
        let mut nnz = 0;
        for (i, o) in oracle.iter().enumerate() {
            prop_assert_eq!(s.column_indices(i).unwrap().collect::<Vec<_>>(), o.iter().copied().collect::<Vec<_>>());
            prop_assert_eq!(s.column_indices(i).unwrap().len(), o.len());
            prop_assert_eq!(s.is_tree_row(i).unwrap(), o.len() > t);
            nnz += o.len();
        }
        prop_assert_eq!(s.nnz(), nnz);
    }

    #[test]
    fn export_agrees_with_sorting_path((rows, cols, _t, ops) in insertions()) {
        let mut s = MatrixIndexSet::new(rows, cols);
        let mut raw = vec![Vec::new(); rows];
        for &(i, j) in ops.iter().rev() {
            s.add(i, j).unwrap();
            raw[i].push(j);
        }
        let a = s.to_matrix(0.0).unwrap();
        let mut b = BcrsMatrix::new(rows, cols, 0.0);
        b.set_indices(raw.iter().map(|r| r.iter().copied())).unwrap();
        prop_assert_eq!(a.offsets(), b.offsets());
        prop_assert_eq!(a.columns(), b.columns());
        prop_assert_eq!(pattern_checksum(&a), pattern_checksum(&b));
        prop_assert_eq!(MatrixIndexSet::from_pattern(&a), s);
    }

    #[test]
    fn matvec_matches_dense(entries in prop::collection::vec((0usize..6, 0usize..5, -3.0f64..3.0), 0..30),
                            x in prop::collection::vec(-1.0f64..1.0, 5)) {
        let mut dense = DenseMatrix::zeros(6, 5);
        let mut s = MatrixIndexSet::new(6, 5);
        for &(i, j, _) in &entries {
            s.add(i, j).unwrap();
        }
        let mut m = s.to_matrix(0.0).unwrap();
        for &(i, j, v) in &entries {
            *m.entry_mut(i, j).unwrap() += v;
            dense[(i, j)] += v;
        }
        let y = m.matvec(&x).unwrap();
        let z = sparse_matvec(&dense, &x).unwrap();
        for (a, b) in y.iter().zip(&z) {
            prop_assert!((a - b).abs() < 1e-13);
        }
    }
}

#[test]
fn unsorted_rows_are_rejected_in_debug_builds() {
    let mut m = BcrsMatrix::new(2, 3, 0.0);
    let result = m.set_indices_no_sort([vec![2, 0], vec![1]]);
    if cfg!(debug_assertions) {
        assert!(matches!(result, Err(Error::UnsortedRow { row: 0 })));
    }
    let mut m = BcrsMatrix::new(2, 3, 0.0);
    m.set_indices([vec![2, 0, 2], vec![1]]).unwrap();
    assert_eq!(m.row_columns(0), &[0, 2]);
    assert!(m.set_indices([vec![3], vec![]]).is_err());
}

#[test]
fn out_of_range_insertions_fail() {
    let mut s = MatrixIndexSet::new(2, 2);
    assert!(matches!(s.add(2, 0), Err(Error::OutOfBounds { .. })));
    assert!(s.add(0, 2).is_err());
    assert!(s.row_size(5).is_err());
}

#[test]
fn stencil_has_five_point_rows() {
    let s = stencil_pattern(10, 64);
    assert_eq!(s.rows(), 100);
    assert_eq!(s.nnz(), 5 * 100 - 4 * 10);
    assert_eq!(s.row_size(55).unwrap(), 5);
    assert_eq!(s.row_size(0).unwrap(), 3);
}

#[test]
fn diagonal_rows() {
    let d = DiagonalMatrix(vec![2.0, 3.0]);
    assert_eq!(sparse_matvec(&d, &[1.0, 1.0]).unwrap(), vec![2.0, 3.0]);
    assert!(sparse_matvec(&d, &[1.0]).is_err());
}

#[test]
fn identity_spy_layout() {
    let mm = "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 2\n1 1 1.0\n2 2 1.0\n";
    let out = spy_matrix_market(Cursor::new(mm), &SpyStyle::default()).unwrap();
    assert_eq!((out.rows, out.cols, out.nnz), (2, 2, 2));
    let svg = parse_svg(&out.svg).unwrap();
    assert_eq!(svg.view_box, vec![0.0, 0.0, 24.0, 24.0]);
    assert_eq!(svg.rects, vec![[2.0, 2.0, 10.0, 10.0], [12.0, 12.0, 10.0, 10.0]]);
}

#[test]
fn blocked_spy_counts_scalars() {
    let mut s = MatrixIndexSet::new(3, 3);
    for (i, j) in [(0, 0), (1, 2), (2, 1)] {
        s.add(i, j).unwrap();
    }
    let m = s.to_matrix(DenseMatrix::zeros(2, 2)).unwrap();
    assert_eq!(m.count(), 12);
    let style = SpyStyle::default();
    let svg = parse_svg(&write_svg(&m, &style).unwrap()).unwrap();
    assert_eq!(svg.rects.len(), 12);
    assert_eq!(svg_dimensions(&m, &style), (6 * 10 + 2 * 2 * 2, 6 * 10 + 2 * 2 * 2));

    let inner = {
        let mut p = MatrixIndexSet::new(2, 2);
        p.add(0, 1).unwrap();
        p.to_matrix(1.0).unwrap()
    };
    let mut outer = MatrixIndexSet::new(2, 2);
    outer.add(0, 0).unwrap();
    outer.add(1, 1).unwrap();
    let nested = outer.to_matrix(inner).unwrap();
    assert_eq!(nested.depth(), 2);
    assert_eq!(nested.scalar_nnz(), nested.count());
    assert_eq!(parse_svg(&write_svg(&nested, &style).unwrap()).unwrap().rects.len(), 2);
}

#[test]
fn matrix_market_round_trip_sums_duplicates() {
    let mm = "%%MatrixMarket matrix coordinate real general\n3 4 3\n1 2 1.5\n3 4 -2\n1 2 0.5\n";
    let m = read_matrix_market(Cursor::new(mm)).unwrap();
    assert_eq!(m.nnz(), 2);
    assert_eq!(*m.entry(0, 1).unwrap(), 2.0);
    let again = read_matrix_market(Cursor::new(write_matrix_market(&m))).unwrap();
    assert_eq!(again.offsets(), m.offsets());
    assert_eq!(again.columns(), m.columns());
    assert_eq!(again.blocks(), m.blocks());
}

#[test]
fn matrix_market_errors_carry_lines() {
    let cases = [
        ("%%MatrixMarket matrix array real general\n2 2\n", 1),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 x 1\n", 2),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n", 3),
    ];
    for (text, line) in cases {
        match read_matrix_market(Cursor::new(text)) {
            Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: {other:?}"),
        }
    }
    let short = "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n";
    assert!(matches!(read_matrix_market(Cursor::new(short)), Err(Error::Parse { .. })));
}

#[test]
fn spy_file_reports_missing_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.mtx");
    match spy_file(&missing, &dir.path().join("o.svg"), &SpyStyle::default()) {
        Err(Error::Io(e)) => assert!(e.to_string().contains("absent.mtx")),
        other => panic!("{other:?}"),
    }
}
