use approx::assert_relative_eq;
use gmt_core::cantor::SingularProfile;
use gmt_core::field::{Aabb, Grid, SupportTag};
use gmt_core::measure::{ac_split, disintegrate, reconstruct, GridMeasure, SplitMode};
use proptest::prelude::*;

fn measure3() -> impl Strategy<Value = GridMeasure<3>> {
    prop::array::uniform3(1usize..7).prop_flat_map(|cells| {
        let n = cells[0] * cells[1] * cells[2];
        prop::collection::vec((-1.0f64..1.0, -8i32..8), n).prop_map(move |v| {
            let grid = Grid::free(Aabb::unit(), cells).unwrap();
            GridMeasure::new(grid, v.into_iter().map(|(m, e)| m * 10f64.powi(e)).collect()).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn reconstruct_inverts_disintegrate(m in measure3(), axis in 0usize..3) {
        prop_assume!(m.total_variation() > 0.0);
        let d = disintegrate(&m, axis).unwrap();
        prop_assert_eq!(d.slices.len(), m.grid.cells()[axis]);
        prop_assert_eq!(reconstruct(&d), m);
    }

    #[test]
    fn slice_ac_parts_reassemble(
        base in prop::collection::vec(0.1f64..2.0, 8),
        density in prop::collection::vec(0.0f64..1.0, 64),
        weight in 0.1f64..3.0,
    ) {
        let profile = SingularProfile::cantor(weight);
        let n = 8;
        let grid = Grid::free(Aabb::unit(), [n, n, n]).unwrap();
        let h = 1.0 / n as f64;
        // ν(x3) ⊗ (a.c. density + Cantor mass along x1)
        let layer = |p: usize, q: usize| {
            let lo = p as f64 * h;
            density[p * n + q] * h * h + profile.increment(lo, lo + h) * h
        };
        let masses = (0..grid.cell_count())
            .map(|c| {
                let idx = Grid::<3>::unflat(grid.cells(), c);
                base[idx[2]] * layer(idx[0], idx[1])
            })
            .collect();
        let m = GridMeasure::new(grid, masses).unwrap();
        let tag = SupportTag::Cantor { axis: 0, profile };
        let whole = ac_split(&m, Some(&SplitMode::Metadata(vec![tag]))).unwrap();
        let d = disintegrate(&m, 2).unwrap();
        for (t, slice) in d.slices.iter().enumerate() {
            let part = ac_split(slice, Some(&SplitMode::Metadata(vec![tag]))).unwrap();
            for p in 0..n {
                for q in 0..n {
                    let expected = whole.ac.mass([p, q, t]);
                    let got = d.base.masses[t] * part.ac.mass([p, q]);
                    assert_relative_eq!(got, expected, max_relative = 1e-12, epsilon = 1e-300);
                    prop_assert_eq!(part.flags[p * n + q], whole.flags[grid.cell_index([p, q, t])]);
                }
            }
        }
    }
}
