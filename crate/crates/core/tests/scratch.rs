use superhedge::maxmin::{one_step_maxmin, Continuation, SolveOptions, StepProblem};
use superhedge::model::Utility1d;

#[test]
fn scratch_saturated_node() {
    let u = Utility1d::exponential(1.0).unwrap();
    let mut failures = 0usize;
    for seed in 0u64..1 {
        for k in [1u64] {
            let x = 44.0 + 24.8 * (k as f64) / 128.0;
            let prob = StepProblem {
                current: vec![144.0],
                successor_prices: vec![vec![172.8], vec![115.2]],
                continuations: vec![
                    Continuation::Terminal {
                        liability: 72.8,
                        utility: &u,
                    },
                    Continuation::Terminal {
                        liability: 15.2,
                        utility: &u,
                    },
                ],
                priors: vec![vec![0.5, 0.5], vec![0.9, 0.1]],
                wealth: x,
                consumption_utility: Some(&u),
            };
            let opts = SolveOptions {
                compute_gap: false,
                seed,
                ..SolveOptions::default()
            };
            match one_step_maxmin(&prob, &opts) {
                Ok(sol) => {
                    if sol.certificate > 1e-6 {
                        eprintln!("seed={seed} k={k} x={x}: cert {}", sol.certificate);
                        failures += 1;
                    }
                }
                Err(e) => {
                    eprintln!("seed={seed} k={k} x={x}: ERROR {e}");
                    failures += 1;
                }
            }
        }
    }
    panic!("scratch done, failures={failures}");
}
