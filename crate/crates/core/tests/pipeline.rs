mod common;

use std::fs;

use cmr_forge::augment::landmark_set;
use cmr_forge::dataset::{self, BuildRequest, Provenance, Split, TrainingConfig};
use cmr_forge::error::Error;
use cmr_forge::image::SequenceKind;
use cmr_forge::io;
use cmr_forge::phantom::{self, CohortRecord, PerSequence, PhantomSpec};
use cmr_forge::preprocess::{self, PreprocessOptions};

fn five_lge_patients() -> Vec<CohortRecord> {
    (0..5)
        .map(|i| CohortRecord {
            spec: PhantomSpec {
                patient_id: format!("P{:03}", i + 1),
                size: (96, 96),
                r_lv: 10.0,
                r_epi: 16.0,
                r_rv: 12.0,
                rv_offset: 24.0,
                body_radius: 40.0,
                scar_start_deg: 50.0 * i as f64,
                noise_sigma: 0.02,
                seed: i as u64,
                ..PhantomSpec::default()
            },
            labeled: PerSequence {
                bssfp: true,
                lge: true,
                t2: true,
            },
        })
        .collect()
}

#[test]
fn config_one_lists_every_lge_slice() {
    let dir = tempfile::tempdir().unwrap();
    let cohort_dir = dir.path().join("cohort");
    let cohort = phantom::write_cohort(&five_lge_patients(), 1, &cohort_dir).unwrap();
    let out = dir.path().join("out");
    let req = BuildRequest::new(TrainingConfig::from_id(1).unwrap(), &cohort, &cohort_dir, &out);
    let m = dataset::build(&req).unwrap();
    assert_eq!(m.records.len(), 60);
    assert!(m
        .records
        .iter()
        .all(|r| r.sequence == SequenceKind::Lge && r.provenance == Provenance::Real));
    let val: std::collections::BTreeSet<_> = m
        .records
        .iter()
        .filter(|r| r.split == Split::Val)
        .map(|r| r.patient_id.clone())
        .collect();
    assert_eq!(val.len(), 1);
    m.validate(&out).unwrap();

    let summary = dataset::summarize(&m);
    assert_eq!(summary.rows.iter().map(|r| r.count).sum::<usize>(), 60);
    assert!(summary
        .rows
        .iter()
        .filter(|r| r.count > 0)
        .all(|r| r.sequence == SequenceKind::Lge && r.provenance == dataset::ProvenanceKind::Real));

    let (img, labels) = dataset::load_record(&out, &m.records[0]).unwrap();
    assert_eq!(img.dims(), [96, 96, 1]);
    labels.check_aligned(&img).unwrap();
}

#[test]
fn synthetic_configs_need_a_directory_and_add_records() {
    let dir = tempfile::tempdir().unwrap();
    let cohort_dir = dir.path().join("cohort");
    let synth = dir.path().join("synth");
    let cohort = phantom::write_cohort(&five_lge_patients(), 1, &cohort_dir).unwrap();
    common::write_synthetic_stub(&cohort, &cohort_dir, &synth);
    let out = dir.path().join("out");

    let req = BuildRequest::new(TrainingConfig::from_id(8).unwrap(), &cohort, &cohort_dir, &out);
    assert!(matches!(dataset::build(&req), Err(Error::Config(_))));

    let build = |id| {
        let mut r = BuildRequest::new(TrainingConfig::from_id(id).unwrap(), &cohort, &cohort_dir, &out);
        r.synthetic_dir = Some(&synth);
        dataset::build(&r).unwrap()
    };
    let (m4, m8) = (build(4), build(8));
    let synthetic = m8
        .records
        .iter()
        .filter(|r| r.provenance == Provenance::Synthetic)
        .count();
    assert_eq!(synthetic, 5 * 10);
    assert_eq!(m8.records.len(), m4.records.len() + synthetic);
}

#[test]
fn rotations_can_drop_the_original() {
    let dir = tempfile::tempdir().unwrap();
    let cohort_dir = dir.path().join("cohort");
    let cohort = phantom::write_cohort(&five_lge_patients()[..2], 1, &cohort_dir).unwrap();
    let out = dir.path().join("out");
    let mut req = BuildRequest::new(TrainingConfig::from_id(4).unwrap(), &cohort, &cohort_dir, &out);
    req.keep_original = false;
    let m = dataset::build(&req).unwrap();
    let lge: Vec<_> = m.records.iter().filter(|r| r.sequence == SequenceKind::Lge).collect();
    assert_eq!(lge.len(), 2 * 12 * 20);
    assert!(lge.iter().all(|r| matches!(r.provenance, Provenance::Rotated(1..=20))));
}

#[test]
fn preprocessing_chain_is_deterministic() {
    let records = phantom::generate_cohort(
        3,
        5,
        &phantom::CohortOptions {
            size: (96, 96),
            ..Default::default()
        },
    )
    .unwrap();
    let mut vols = Vec::new();
    for r in &records {
        let p = phantom::generate_patient(&r.spec).unwrap();
        for seq in SequenceKind::ACQUIRED {
            vols.push(p.image(seq).volume.clone());
        }
    }
    let opts = PreprocessOptions {
        target_size: (128, 128),
        ..Default::default()
    };
    let a = preprocess::preprocess_volumes(&vols, &opts).unwrap();
    let b = preprocess::preprocess_volumes(&vols, &opts).unwrap();
    assert_eq!(a.volumes, b.volumes);
    for v in &a.volumes {
        assert_eq!(&v.dims()[..2], &[128, 128]);
        let (m, s) = preprocess::mean_std(v.data());
        assert!((m - 0.5).abs() < 1e-4 && (s - 0.5).abs() < 1e-4);
    }
    assert_eq!(a.references.len(), 1);

    let per = PreprocessOptions {
        scope: preprocess::HistogramScope::PerSequence,
        ..opts
    };
    let c = preprocess::preprocess_volumes(&vols, &per).unwrap();
    assert_eq!(
        c.references.keys().cloned().collect::<Vec<_>>(),
        vec!["LGE", "T2", "bSSFP"]
    );
}

#[test]
fn landmarks_export_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let p = phantom::generate_patient(&five_lge_patients()[0].spec).unwrap();
    let set = landmark_set(&p.lge.labels, 50).unwrap();
    assert_eq!(set.slices.len(), 12);
    assert!(set
        .slices
        .iter()
        .all(|s| s.epicardial.len() == 50 && s.endocardial.len() == 50));
    let path = dir.path().join("landmarks.json");
    io::write_json(&set, &path).unwrap();
    let back: cmr_forge::augment::LandmarkSet = io::read_json(&path).unwrap();
    assert_eq!(back, set);
    assert!(fs::read_to_string(&path).unwrap().contains("\"epicardial\""));
}

#[test]
fn phantom_cohort_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    common::write_phantom_cohort(3, 9, 64, &a);
    common::write_phantom_cohort(3, 9, 64, &b);
    for entry in fs::read_dir(a.join("P001")).unwrap() {
        let name = entry.unwrap().file_name();
        assert_eq!(
            fs::read(a.join("P001").join(&name)).unwrap(),
            fs::read(b.join("P001").join(&name)).unwrap()
        );
    }
    assert_eq!(fs::read_dir(a.join("P002")).unwrap().count(), 7);
    assert_eq!(
        fs::read(a.join("cohort.json")).unwrap(),
        fs::read(b.join("cohort.json")).unwrap()
    );
}
