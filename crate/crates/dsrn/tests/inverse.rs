use dsrn::dirac::M2;
use dsrn::inverse::{
    jacobian_step_consistency, problem_from_json, problem_json, recover_parameters, recover_with, synthesize_reflection_data, InverseOptions,
    InverseProblem, Which,
};
use dsrn::BlackHoleParams;

fn truth() -> BlackHoleParams {
    BlackHoleParams::new(1.0, 0.5, 0.05, 0.1, 0.2)
}

fn ns() -> Vec<u32> {
    (1..=10).collect()
}

fn bits(m: &M2) -> Vec<u64> {
    m.iter().flat_map(|c| [c.re.to_bits(), c.im.to_bits()]).collect()
}

#[test]
fn exact_data_and_exact_start_is_a_fixed_point() {
    let data = synthesize_reflection_data(&truth(), 1.0, &ns(), Which::L).unwrap();
    let prob = InverseProblem::new(1.0, data, Which::L, truth());
    let r = recover_parameters(&prob, 1e-10).unwrap();
    assert!(r.residual * r.residual < 1e-16, "{:e}", r.residual);
    assert_eq!((r.params.mass, r.params.charge, r.params.lambda), (1.0, 0.5, 0.05));
}

#[test]
fn frozen_cosmological_constant_leaves_a_misfit_floor() {
    let data = synthesize_reflection_data(&truth(), 1.0, &ns(), Which::L).unwrap();
    let mut prob = InverseProblem::new(1.0, data, Which::L, BlackHoleParams::new(1.0, 0.5, 0.04, 0.1, 0.2));
    prob.fixed[2] = Some(0.04);
    let r = recover_with(&prob, &InverseOptions::default()).unwrap();
    assert_eq!(r.params.lambda, 0.04);
    assert!(r.residual > 1e-6, "{:e}", r.residual);
}

#[test]
fn synthesized_data_are_deterministic() {
    let a = synthesize_reflection_data(&truth(), -0.5, &[1, 3, 7], Which::R).unwrap();
    let b = synthesize_reflection_data(&truth(), -0.5, &[1, 3, 7], Which::R).unwrap();
    for n in [1, 3, 7] {
        assert_eq!(bits(&a[&n]), bits(&b[&n]));
    }
}

#[test]
fn problem_files_round_trip() {
    let data = synthesize_reflection_data(&truth(), 1.0, &[2, 5], Which::L).unwrap();
    let prob = InverseProblem::new(1.0, data, Which::L, BlackHoleParams::new(1.1, 0.45, 0.055, 0.1, 0.2));
    let text = dsrn::io::to_json_string(&problem_json(&prob, None));
    let back = problem_from_json(&serde_json::from_str(&text).unwrap()).unwrap();
    assert_eq!(back.lambda, prob.lambda);
    assert_eq!(back.n_set, prob.n_set);
    assert_eq!(back.which, prob.which);
    assert_eq!(back.init, prob.init);
    for n in [2, 5] {
        assert_eq!(bits(&back.data[&n]), bits(&prob.data[&n]));
    }
}

#[test]
fn difference_jacobian_is_step_consistent() {
    let data = synthesize_reflection_data(&truth(), 1.0, &ns(), Which::L).unwrap();
    let prob = InverseProblem::new(1.0, data, Which::L, truth());
    let c = jacobian_step_consistency(&prob, &[1.0, 0.5, 0.05], 1e-6, &InverseOptions::default()).unwrap();
    assert!(c < 1e-4, "{c:e}");
}
