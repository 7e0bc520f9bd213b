mod common;

use gjsoq::SystemParams;

#[test]
fn closed_form_kernel_equals_block_censoring() {
    for p in [
        common::table1(),
        SystemParams::new(0.06, 0.0, 0.0, 0.44, 0.15, 0.35).unwrap(),
        SystemParams::new(0.01, 0.1, 0.02, 0.8, 0.04, 0.5).unwrap(),
    ] {
        let worst = common::kernel_vs_blocks(&p, 30);
        assert!(worst < 1e-12, "{p:?}: {worst}");
    }
}

#[test]
fn halfplane_kernel_is_transformed_censored_kernel() {
    for p in [
        common::table1(),
        SystemParams::new(0.2, 0.05, 0.05, 0.6, 0.3, 0.3).unwrap(),
    ] {
        let worst = common::halfplane_vs_transform(&p, 20);
        assert!(worst < 1e-15, "{worst}");
    }
}
