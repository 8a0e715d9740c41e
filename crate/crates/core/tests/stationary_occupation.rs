use asg_core::ctmc::{run_ctmc, SimOptions};
use asg_core::line_counting::{stationary_b, LineCountingChain, MoranParams};
use asg_core::stats::{chi_square_gof, counts};
use asg_core::RngStream;

#[test]
fn long_run_state_matches_stationary_law() {
    // independent replicates observed after a long run: one draw each from
    // (nearly) the stationary law, so a plain chi-square test applies
    let p = MoranParams::new(10, 1.0, 0.5).unwrap();
    let chain = LineCountingChain(p);
    let (reps, horizon) = (20_000u64, 50.0);
    let mut jumps = 0u64;
    let finals: Vec<u64> = (0..reps)
        .map(|r| {
            let s = run_ctmc(
                &chain,
                1,
                horizon,
                &mut RngStream::new(31, r).rng(),
                SimOptions::default(),
                |_, _| {},
            )
            .unwrap();
            jumps += s.jumps;
            s.final_state
        })
        .collect();
    assert!(jumps >= 1_000_000, "{jumps} jumps");
    let mut observed = counts(&finals);
    observed.resize(11, 0);
    let mut probs = vec![0.0];
    probs.extend(stationary_b(&p));
    let res = chi_square_gof(&observed, &probs).unwrap();
    assert!(res.p_value > 0.01, "{res:?}");
}
