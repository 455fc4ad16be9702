use gmt_adjugate::formats::*;
use gmt_core::area::lebesgue_area_estimate;
use gmt_core::degree::{degree_field3, target_grid};
use gmt_core::field::{sample_map, Aabb, Grid};
use gmt_core::gallery;
use gmt_core::measure::GridMeasure;

#[test]
fn field_roundtrip_is_bitwise() {
    let grid = Grid::new(Aabb::unit(), [9, 17, 10]).unwrap();
    let f = sample_map(&gallery::sine_shear(0.3), &grid).unwrap();
    let mut buf = Vec::new();
    write_field(&mut buf, &f).unwrap();
    assert_eq!(&buf[..4], b"GMTF");
    assert_eq!(buf.len(), 4 + 8 + 3 * 8 + 6 * 8 + 9 * 17 * 10 * 3 * 8);
    let back = read_field::<3, 3>(&mut buf.as_slice()).unwrap();
    assert_eq!(back, f);
    assert!(matches!(read_field::<2, 3>(&mut buf.as_slice()), Err(FormatError::Shape { .. })));
    assert!(matches!(read_measure::<3>(&mut buf.as_slice()), Err(FormatError::Magic(_))));
    buf.push(0);
    assert!(matches!(read_field::<3, 3>(&mut buf.as_slice()), Err(FormatError::Trailing(1))));
    buf.truncate(100);
    assert!(matches!(read_field::<3, 3>(&mut buf.as_slice()), Err(FormatError::Io(_))));
}

#[test]
fn measure_roundtrip_and_summary() {
    let grid = Grid::with_cells(Aabb::unit(), 16).unwrap();
    let m = GridMeasure::from_density(grid, |x| x[0] - 0.5 * x[2]);
    let mut buf = Vec::new();
    write_measure(&mut buf, &m).unwrap();
    assert_eq!(&buf[..4], b"GMTM");
    assert_eq!(read_measure::<3>(&mut buf.as_slice()).unwrap(), m);
    let s = measure_summary(&m);
    assert_eq!(s.dyadic.iter().map(|l| l.depth).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    assert_eq!(s.dyadic[3].masses.len(), 512);
    approx_eq(s.dyadic[0].masses[0], 0.25);
    let json = serde_json::to_value(&s).unwrap();
    assert!(json["total_variation"].is_f64());
    // a 3-cell grid has no dyadic subdivision beyond the whole box
    let odd = GridMeasure::lebesgue(Grid::free(Aabb::unit(), [3, 3, 3]).unwrap());
    assert_eq!(measure_summary(&odd).dyadic.len(), 1);
}

fn approx_eq(a: f64, b: f64) {
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn degree_field_as_measure_file() {
    let f = gallery::stretch(0.2);
    let t = target_grid(&Aabb { lo: [-0.25; 3], hi: [1.5, 1.25, 1.25] }, 1.0 / 16.0, [0.0; 3]).unwrap();
    let d = degree_field3(&f, &Aabb::unit(), &t, None).unwrap();
    let mut buf = Vec::new();
    write_degree(&mut buf, &d).unwrap();
    let (grid, values) = read_measure_values::<3>(&mut buf.as_slice()).unwrap();
    assert_eq!(grid, d.grid);
    for (k, v) in values.iter().enumerate() {
        if d.unknown[k] {
            assert!(v.is_nan());
        } else {
            assert_eq!(*v, d.values[k] as f64);
        }
    }
    let s = serde_json::to_value(degree_summary(&d)).unwrap();
    assert_eq!(s.as_object().unwrap().len(), 3);
    assert_eq!(s["integral"].as_f64().unwrap(), d.integral);
}

#[test]
fn area_summary_flags_divergence() {
    let flat = gallery::surface("flat_surface").unwrap();
    let r = lebesgue_area_estimate(&flat, &Aabb::unit(), &[14, 28, 56]);
    let s = serde_json::to_value(area_summary(&r)).unwrap();
    assert!(s.get("flag").is_none());
    approx_eq(s["estimate"].as_f64().unwrap(), 1.0);
    let wild = gallery::surface("wild:10").unwrap();
    let r = lebesgue_area_estimate(&wild, &Aabb::unit(), &gmt_core::area::default_schedule());
    let s = serde_json::to_value(area_summary(&r)).unwrap();
    assert_eq!(s["flag"], "divergent");
    assert!(s.get("estimate").is_none());
    assert_eq!(s["areas"].as_array().unwrap().len(), 6);
}
