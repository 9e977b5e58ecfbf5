use focal_core::sim::{run_experiment, CriterionProfile, Mode, SimSpec};
use focal_core::{Rubric, SynthesisConfig};

fn rubric(k: usize) -> Rubric {
    Rubric::uniform(k, 10.0).unwrap()
}

#[test]
fn runs_replay_bit_for_bit() {
    let spec = SimSpec {
        steps: 40,
        ..SimSpec::heterogeneous(3)
    };
    for mode in Mode::ALL {
        let a = run_experiment(&spec, &rubric(3), &SynthesisConfig::default(), mode).unwrap();
        let b = run_experiment(&spec, &rubric(3), &SynthesisConfig::default(), mode).unwrap();
        assert_eq!(a, b);
        let mut ca = Vec::new();
        let mut cb = Vec::new();
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
    }
}

#[test]
fn abilities_never_decrease() {
    let spec = SimSpec {
        steps: 100,
        ..SimSpec::heterogeneous(8)
    };
    for mode in Mode::ALL {
        let run = run_experiment(&spec, &rubric(3), &SynthesisConfig::default(), mode).unwrap();
        assert_eq!(run.steps.len(), 101);
        for (n, pair) in run.steps.windows(2).enumerate() {
            assert_eq!(pair[0].step, n);
            for k in 0..3 {
                assert!(pair[1].abilities[k] >= pair[0].abilities[k]);
                assert!(pair[1].abilities[k] <= 1.0);
            }
        }
    }
}

#[test]
fn identical_criteria_make_focal_inert() {
    let profile = vec![
        CriterionProfile {
            initial_ability: 0.4,
            rate: 1.0,
        };
        3
    ];
    let spec = SimSpec {
        profile,
        noise_scale: 0.0,
        comparison_noise: 0.0,
        steps: 50,
        ..SimSpec::heterogeneous(1)
    };
    let cfg = SynthesisConfig::default();
    let s = run_experiment(&spec, &rubric(3), &cfg, Mode::Static).unwrap();
    let f = run_experiment(&spec, &rubric(3), &cfg, Mode::Focal).unwrap();
    for (a, b) in s.steps.iter().zip(&f.steps) {
        for k in 0..3 {
            assert!((a.abilities[k] - b.abilities[k]).abs() <= 1e-9);
            assert!((a.weights[k] - b.weights[k]).abs() <= 1e-12);
        }
    }
}

#[test]
fn zero_steps_is_the_initial_state() {
    let spec = SimSpec {
        steps: 0,
        ..SimSpec::heterogeneous(2)
    };
    let run = run_experiment(&spec, &rubric(3), &SynthesisConfig::default(), Mode::Focal).unwrap();
    assert_eq!(run.steps.len(), 1);
    assert_eq!(run.final_abilities(), &[0.2, 0.6, 0.9]);
}
