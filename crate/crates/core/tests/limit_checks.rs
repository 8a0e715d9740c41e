use asg_core::limit_verify::{duality_check, sup_generator_gap, ChainMode, GridSpec, TestFunction};
use asg_core::line_counting::{drift_scan_b, MoranParams};
use asg_core::ou::OUParams;
use asg_core::RngStream;

#[test]
fn moran_gaps_decrease_for_both_selection_sweeps() {
    let ou = OUParams::stationary(1.0, 2.0).unwrap();
    let sweeps: [fn(f64) -> f64; 2] = [|n| n.powf(-0.25), |n| n.ln() / n.sqrt()];
    for s_of in sweeps {
        for f in TestFunction::library() {
            let gaps: Vec<f64> = [1e3, 1e4, 1e5, 1e6]
                .iter()
                .map(|&n| {
                    let p = MoranParams::new(n as u64, 1.0, s_of(n)).unwrap();
                    sup_generator_gap(&f, &GridSpec::lattice(3.0), &ChainMode::Moran(p), &ou)
                        .unwrap()
                        .sup
                })
                .collect();
            if f.name() == "constant" {
                assert!(gaps.iter().all(|&g| g == 0.0));
            } else {
                assert!(
                    gaps.windows(2).all(|w| w[1] < w[0]),
                    "{}: {gaps:?}",
                    f.name()
                );
            }
        }
    }
}

#[test]
fn line_counting_drift_single_sign_change() {
    for n in [100u64, 1000, 10_000] {
        let p = MoranParams::new(n, 1.0, (n as f64).powf(-0.25)).unwrap();
        let scan = drift_scan_b(&p, 1.0).unwrap();
        assert_eq!(scan.sign_changes, 1);
        assert!(scan.negative_above && scan.positive_below);
    }
}

#[test]
fn duality_on_a_small_grid() {
    let mut job = 0;
    for n_pop in [3u64, 6] {
        let p = MoranParams::new(n_pop, 1.0, 0.5).unwrap();
        for k in [1, n_pop.div_ceil(2), n_pop] {
            for n in [1, 2, n_pop] {
                for t in [0.5, 2.0] {
                    job += 1;
                    let e = duality_check(&p, k, n, t, 20_000, RngStream::new(61, job)).unwrap();
                    assert!(e.within(3.0), "N={n_pop} k={k} n={n} t={t}: {e:?}");
                }
            }
        }
    }
}
