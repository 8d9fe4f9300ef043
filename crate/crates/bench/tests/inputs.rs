use voxelwise_bench::{activations, normal_matrix};

#[test]
fn inputs_are_deterministic() {
    assert_eq!(normal_matrix(4, 3, 9), normal_matrix(4, 3, 9));
    assert_ne!(normal_matrix(4, 3, 9), normal_matrix(4, 3, 10));
    let a = activations(2, 3, 4, 5, 1);
    assert_eq!(a.frame_shape(), (3, 4, 5));
}
