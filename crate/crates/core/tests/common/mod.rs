#![allow(dead_code)]

use std::path::Path;

use cmr_forge::dataset::{CohortManifest, CohortPatient, CohortVolume};
use cmr_forge::image::SequenceKind;
use cmr_forge::io;
use cmr_forge::phantom::{self, CohortOptions};

/// Writes a phantom cohort of `n` patients to `dir`.
pub fn write_phantom_cohort(n: usize, seed: u64, size: usize, dir: &Path) -> CohortManifest {
    let opts = CohortOptions {
        size: (size, size),
        ..CohortOptions::default()
    };
    let records = phantom::generate_cohort(n, seed, &opts).unwrap();
    phantom::write_cohort(&records, seed, dir).unwrap()
}

/// Stands in for the translation model: every labeled bSSFP volume is
/// re-tagged as synthetic LGE and paired with a copy of its labels.
pub fn write_synthetic_stub(cohort: &CohortManifest, cohort_dir: &Path, out: &Path) -> CohortManifest {
    let mut patients = Vec::new();
    for p in &cohort.patients {
        for v in &p.volumes {
            let (SequenceKind::Bssfp, Some(labels)) = (v.sequence, &v.label_path) else {
                continue;
            };
            let (vol, _) = io::read_volume(cohort_dir.join(&v.image_path)).unwrap();
            let (lab, _) = io::read_label_map(cohort_dir.join(labels), None).unwrap();
            let image_path = Path::new(&p.patient_id).join("synthetic_lge.nii.gz");
            let label_path = Path::new(&p.patient_id).join("synthetic_lge_labels.nii.gz");
            io::write_volume(&vol.with_sequence(SequenceKind::SyntheticLge), out.join(&image_path)).unwrap();
            io::write_label_map(&lab, out.join(&label_path)).unwrap();
            patients.push(CohortPatient {
                patient_id: p.patient_id.clone(),
                volumes: vec![CohortVolume {
                    sequence: SequenceKind::SyntheticLge,
                    image_path,
                    label_path: Some(label_path),
                }],
            });
        }
    }
    let m = CohortManifest {
        seed: cohort.seed,
        patients,
    };
    io::write_json(&m, out.join(phantom::COHORT_FILE)).unwrap();
    m
}
