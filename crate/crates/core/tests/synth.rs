mod common;

use voxelwise_core::analysis::parcellation_contrasts;
use voxelwise_core::synth::{gen_dataset, profile_shares, SignalBasis, SynthSpec, VoxelTruth};
use voxelwise_core::tensor_store::{read_header, read_json, DatasetManifest};
use voxelwise_core::{Dtype, Layer, Stream};

use common::*;

fn spec() -> SynthSpec {
    let layers = vec![
        layer(Stream::Flow, Layer::L1, 3, 5, 5),
        layer(Stream::Rgb, Layer::L2, 2, 4, 4),
    ];
    let mut s = base_spec(11, 3, 12, layers, 10);
    s.snr = Some(2.0);
    s.mask_fraction = 0.5;
    s
}

#[test]
fn written_dataset_loads_through_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let path = voxelwise_core::pipeline::run_synth(&spec(), dir.path()).unwrap();
    let manifest = DatasetManifest::load(&path).unwrap();
    assert_eq!(manifest.session_lengths, vec![12; 3]);
    assert_eq!(manifest.activations.len(), 2);
    for e in &manifest.activations {
        let h = read_header(manifest.resolve(&e.path)).unwrap();
        assert_eq!(h.dtype, Dtype::F32);
        assert_eq!(h.dims[0], 3 * 12 * 2);
        assert_eq!(e.session_frames, vec![24; 3]);
    }
    let y = manifest.load_responses().unwrap();
    assert_eq!(y.data.dim(), (36, 10));
    assert_eq!(y.masked_indices(), (0..5).collect::<Vec<_>>());
    let truth: Vec<VoxelTruth> = read_json(dir.path().join("ground_truth.json")).unwrap();
    assert_eq!(truth.len(), 10);
    assert!(truth.iter().enumerate().all(|(i, v)| v.voxel == i));
    let back: SynthSpec = read_json(dir.path().join("synth_spec.json")).unwrap();
    assert_eq!(back, spec());
}

#[test]
fn unknown_spec_keys_rejected() {
    let text = r#"{"seed": 1, "sessions": 2, "samples_per_session": 4, "layers": [], "voxels": 1, "nosie": 3}"#;
    assert!(serde_json::from_str::<SynthSpec>(text).is_err());
}

#[test]
fn seeds_change_data() {
    let a = gen_dataset(&spec()).unwrap();
    let mut other = spec();
    other.seed = 12;
    let b = gen_dataset(&other).unwrap();
    assert_ne!(a.responses.data, b.responses.data);
    assert_eq!(
        gen_dataset(&spec()).unwrap().responses.data,
        a.responses.data
    );
}

#[test]
fn pixel_level_basis_generates() {
    let mut s = spec();
    s.signal_basis = SignalBasis::PixelLevel;
    s.pixels_per_voxel = 4;
    let d = gen_dataset(&s).unwrap();
    for v in &d.truth.voxels {
        assert!(v
            .contributions
            .iter()
            .all(|c| c.pixel_indices.as_ref().is_some_and(|p| p.len() == 4)));
    }
}

#[test]
fn profile_shares_encode_their_code() {
    for code in 0u8..8 {
        let shares = profile_shares(code);
        assert!((shares.iter().map(|s| s.1).sum::<f64>() - 1.0).abs() < 1e-12);
        let share = |k| shares.iter().find(|s| s.0 == k).map_or(0.0, |s| s.1);
        let mut decoded = 0u8;
        for (bit, (a, b)) in parcellation_contrasts().into_iter().enumerate() {
            let diff = share(a) - share(b);
            assert!(diff.abs() >= 0.24, "code {code} bit {bit}: {diff}");
            decoded |= ((diff > 0.0) as u8) << bit;
        }
        assert_eq!(decoded, code);
    }
}

#[test]
fn invalid_specs_rejected() {
    let mut s = spec();
    s.mask_fraction = 1.5;
    assert!(gen_dataset(&s).is_err());
    let mut s = spec();
    s.frame_rate = 0.7;
    assert!(gen_dataset(&s).is_err());
    let mut s = base_spec(1, 2, 10, profile_layers(2, 3), 5);
    s.cluster_plan = plan(&[(3, 6)]);
    let err = gen_dataset(&s).unwrap_err().to_string();
    assert!(err.contains("infeasible cluster_plan"), "{err}");
}
