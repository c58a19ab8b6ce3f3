use fekern::md::{layout_offset, LayoutKind, LayoutMapping, MdArray, MdExtents, MdView};
use fekern::Error;
use proptest::prelude::*;

fn extents() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..6, 1..6)
}

proptest! {
    #[test]
    fn canonical_layouts_are_bijections(sizes in extents()) {
        let ext = MdExtents::new(&sizes).unwrap();
        for layout in [LayoutMapping::row_major(&ext), LayoutMapping::column_major(&ext)] {
            let mut offsets: Vec<usize> = ext.indices().map(|i| layout_offset(&ext, &layout, &i).unwrap()).collect();
            offsets.sort_unstable();
            prop_assert_eq!(offsets, (0..ext.size()).collect::<Vec<_>>());
            prop_assert_eq!(layout.required_span(&ext), ext.size());
        }
    }

    #[test]
    fn row_major_follows_iteration_order(sizes in extents()) {
        let ext = MdExtents::new(&sizes).unwrap();
        let layout = LayoutMapping::row_major(&ext);
        for (n, idx) in ext.indices().enumerate() {
            prop_assert_eq!(layout.offset(&ext, &idx).unwrap(), n);
        }
    }

    #[test]
    fn column_major_is_reversed_row_major(sizes in extents()) {
        let ext = MdExtents::new(&sizes).unwrap();
        let rev: Vec<usize> = sizes.iter().rev().copied().collect();
        let rext = MdExtents::new(&rev).unwrap();
        let col = LayoutMapping::column_major(&ext);
        let row = LayoutMapping::row_major(&rext);
        for idx in ext.indices() {
            let ridx: Vec<usize> = idx.iter().rev().copied().collect();
            prop_assert_eq!(col.offset(&ext, &idx).unwrap(), row.offset(&rext, &ridx).unwrap());
        }
    }
}

#[test]
fn strided_layout_offsets() {
    let ext = MdExtents::new(&[2, 3]).unwrap();
    let layout = LayoutMapping::strided(&ext, &[10, 2]).unwrap();
    assert_eq!(layout.kind(), LayoutKind::Strided);
    assert_eq!(layout.offset(&ext, &[1, 2]).unwrap(), 14);
    assert_eq!(layout.required_span(&ext), 15);
    assert!(matches!(LayoutMapping::strided(&ext, &[-1, 1]), Err(Error::InvalidLayout(_))));
    assert!(LayoutMapping::strided(&ext, &[1]).is_err());
}

#[test]
fn out_of_bounds_index_is_rejected() {
    let ext = MdExtents::new(&[2, 3]).unwrap();
    let layout = LayoutMapping::row_major(&ext);
    assert!(matches!(layout.offset(&ext, &[2, 0]), Err(Error::OutOfBounds { .. })));
    assert!(layout.offset(&ext, &[0]).is_err());
}

#[test]
fn array_round_trip_through_view() {
    let ext = MdExtents::new(&[2, 3, 4]).unwrap();
    let mut a = MdArray::with_layout(ext.clone(), LayoutMapping::column_major(&ext), 0usize);
    for (n, idx) in ext.indices().enumerate() {
        a.set(&idx, n).unwrap();
    }
    let v = a.view();
    for (n, idx) in ext.indices().enumerate() {
        assert_eq!(*v.get(&idx).unwrap(), n);
    }
    assert_eq!(*a.get(&[1, 0, 0]).unwrap(), 12);
    assert_eq!(a.as_slice()[1], 12);

    let data: Vec<usize> = (0..24).collect();
    let rv = MdView::row_major(&data, ext.clone()).unwrap();
    assert_eq!(*rv.get(&[1, 2, 3]).unwrap(), 23);
    assert!(MdView::row_major(&data[..23], ext).is_err());
}

#[test]
fn zero_extent_is_empty() {
    match MdExtents::new(&[3, 0]) {
        Ok(ext) => {
            assert_eq!(ext.size(), 0);
            assert_eq!(ext.indices().count(), 0);
        }
        Err(e) => assert!(matches!(e, Error::InvalidArgument(_) | Error::InvalidLayout(_))),
    }
}
