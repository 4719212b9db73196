mod common;

use common::*;
use mfpmp::dynamics::{apply_needle, NeedleEntry, NeedlePackage};
use mfpmp::fields::{constant_basis, ControlLaw};
use mfpmp::{Error, TimeGrid};

#[test]
fn residual_ratio_shrinks_with_the_needles() {
    let report = interaction_needle_report(4);
    assert!(report.monotone, "{:?}", report.levels);
    let first = &report.levels[0];
    let last = &report.levels[3];
    assert!(last.ratio < 0.25 * first.ratio, "{first:?} {last:?}");
}

#[test]
fn prediction_is_exact_without_dynamics() {
    assert!(free_needle_residual() <= 1e-9);
}

#[test]
fn overlapping_needles_are_rejected() {
    let grid = TimeGrid::new(1.0, 20).unwrap();
    let f = || constant_field(&[1.0]);
    let bad = NeedlePackage::new(
        vec![
            NeedleEntry { field: f(), node: 10, cells: 5 },
            NeedleEntry { field: f(), node: 11, cells: 0 },
            NeedleEntry { field: f(), node: 13, cells: 4 },
        ],
        &grid,
    );
    assert!(matches!(bad, Err(Error::InvalidNeedle(_))));
    let shared = NeedlePackage::new(
        vec![NeedleEntry { field: f(), node: 10, cells: 1 }, NeedleEntry { field: f(), node: 10, cells: 2 }],
        &grid,
    );
    assert!(shared.is_err());
    assert!(NeedlePackage::new(vec![NeedleEntry { field: f(), node: 3, cells: 4 }], &grid).is_err());
    assert!(NeedleEntry::from_length(f(), 10, 0.125, &grid).is_err());
    let ok = NeedlePackage::new(
        vec![NeedleEntry { field: f(), node: 10, cells: 5 }, NeedleEntry { field: f(), node: 15, cells: 5 }],
        &grid,
    )
    .unwrap();
    assert!(ok.covers(7) && !ok.covers(10) && !ok.covers(5));
}

#[test]
fn needle_replaces_whole_cells() {
    let grid = TimeGrid::new(1.0, 10).unwrap();
    let law = ControlLaw::constant_in_time(1, constant_basis(1), grid, vec![0.0], 1.0).unwrap();
    let pkg = NeedlePackage::new(vec![NeedleEntry::from_length(constant_field(&[2.0]), 6, 0.2, &grid).unwrap()], &grid).unwrap();
    let out = apply_needle(&law, &pkg).unwrap();
    let cells: Vec<f64> = (0..10).map(|c| out.cell_coeffs(c)[0]).collect();
    assert_eq!(cells, vec![0.0, 0.0, 0.0, 0.0, 2.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
}
