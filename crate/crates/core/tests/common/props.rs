//! Random instances and invariant checks shared by the property tests and
//! the acceptance runner.

use std::sync::Arc;

use parcel_denoise::raster::{decode_grid, encode_grid, Grid, LabelGrid};
use parcel_denoise::relabel::{denoise, DenoisePolicy, RelabelMode};
use parcel_denoise::{ClassMap, ImageRaster, LabelRaster, SegmentMap, NODATA_LABEL};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

/// A label raster, a segment map over it, and a vote policy.
#[derive(Clone, Debug)]
pub struct Instance {
    pub labels: LabelRaster,
    pub segments: SegmentMap,
    pub policy: DenoisePolicy,
}

fn class_map(n: usize) -> Arc<ClassMap> {
    Arc::new(ClassMap::land_cover(n).unwrap())
}

pub fn arb_instance() -> impl Strategy<Value = Instance> {
    (1usize..24, 1usize..24, 2usize..6, 1u32..10).prop_flat_map(|(w, h, n, max_seg)| {
        let unsure = n as u16 + 1;
        let label = prop_oneof![
            6 => 1..=n as u16,
            2 => Just(unsure),
            1 => Just(NODATA_LABEL),
        ];
        (
            prop::collection::vec(label, w * h),
            prop::collection::vec(0..=max_seg, w * h),
            arb_policy(),
        )
            .prop_map(move |(labels, segs, policy)| Instance {
                labels: LabelRaster::new(w, h, labels, class_map(n)).unwrap(),
                segments: SegmentMap::new(w, h, segs).unwrap(),
                policy,
            })
    })
}

pub fn arb_policy() -> impl Strategy<Value = DenoisePolicy> {
    (
        prop_oneof![
            Just(RelabelMode::RelabelAll),
            Just(RelabelMode::RelabelUnsureOnly)
        ],
        prop_oneof![Just(0.0), 0.0f64..=1.0],
        any::<bool>(),
        prop_oneof![
            Just(parcel_denoise::relabel::BackgroundAction::Leave),
            Just(parcel_denoise::relabel::BackgroundAction::PerComponentVote)
        ],
    )
        .prop_map(
            |(mode, min_margin, unsure_votes, background_action)| DenoisePolicy {
                mode,
                min_margin,
                unsure_votes,
                background_action,
                ..Default::default()
            },
        )
}

pub fn nodata_preserved(inst: &Instance) -> Result<(), TestCaseError> {
    let (out, _) = denoise(&inst.labels, &inst.segments, &inst.policy).unwrap();
    for (a, b) in inst.labels.labels().iter().zip(out.labels()) {
        prop_assert_eq!(*a == NODATA_LABEL, *b == NODATA_LABEL);
    }
    Ok(())
}

pub fn unsure_only_keeps_certain(inst: &Instance) -> Result<(), TestCaseError> {
    let policy = DenoisePolicy {
        mode: RelabelMode::RelabelUnsureOnly,
        ..inst.policy.clone()
    };
    let (out, report) = denoise(&inst.labels, &inst.segments, &policy).unwrap();
    let unsure = inst.labels.unsure_id();
    for (a, b) in inst.labels.labels().iter().zip(out.labels()) {
        if *a != unsure {
            prop_assert_eq!(a, b);
        }
    }
    if !policy.unsure_votes {
        prop_assert!(report.unsure_after <= report.unsure_before);
    }
    Ok(())
}

pub fn idempotent(inst: &Instance) -> Result<(), TestCaseError> {
    let policy = DenoisePolicy {
        mode: RelabelMode::RelabelAll,
        min_margin: 0.0,
        ..inst.policy.clone()
    };
    let (once, report) = denoise(&inst.labels, &inst.segments, &policy).unwrap();
    let (twice, _) = denoise(&once, &inst.segments, &policy).unwrap();
    prop_assert_eq!(once.labels(), twice.labels());
    let changed = inst
        .labels
        .labels()
        .iter()
        .zip(once.labels())
        .filter(|(a, b)| a != b)
        .count() as u64;
    prop_assert_eq!(report.pixels_relabeled, changed);
    prop_assert_eq!(report.flux.total(), changed);
    prop_assert_eq!(report.pixels_total, inst.labels.labels().len() as u64);
    Ok(())
}

pub fn arb_grid() -> impl Strategy<Value = Grid> {
    let dims = (1usize..12, 1usize..12);
    prop_oneof![
        (dims.clone(), 1usize..4).prop_flat_map(|((w, h), bands)| {
            let value = prop_oneof![
                4 => any::<f32>().prop_filter("finite", |v| v.is_finite()),
                1 => Just(f32::NAN),
            ];
            // NaN must be shared by all bands of a pixel
            (
                prop::collection::vec(value, w * h),
                prop::collection::vec(-1e6f32..1e6, w * h * bands),
            )
                .prop_map(move |(first, rest)| {
                    let mut values = rest;
                    for (p, v) in first.iter().enumerate() {
                        for b in 0..bands {
                            if v.is_nan() {
                                values[b * w * h + p] = f32::NAN;
                            } else if b == 0 {
                                values[p] = *v;
                            }
                        }
                    }
                    Grid::Image(ImageRaster::new(w, h, bands, values).unwrap())
                })
        }),
        dims.clone().prop_flat_map(|(w, h)| {
            prop::collection::vec(any::<u16>(), w * h).prop_map(move |labels| {
                Grid::Labels(LabelGrid {
                    width: w,
                    height: h,
                    labels,
                })
            })
        }),
        dims.prop_flat_map(|(w, h)| {
            prop::collection::vec(any::<u32>(), w * h)
                .prop_map(move |ids| Grid::Segments(SegmentMap::new(w, h, ids).unwrap()))
        }),
    ]
}

pub fn grid_round_trip(g: &Grid) -> Result<(), TestCaseError> {
    let bytes = encode_grid(g).unwrap();
    let back = decode_grid(&bytes).unwrap();
    // ImageRaster equality is bitwise, so NaN positions count
    prop_assert_eq!(&back, g);
    prop_assert_eq!(encode_grid(&back).unwrap(), bytes);
    Ok(())
}
