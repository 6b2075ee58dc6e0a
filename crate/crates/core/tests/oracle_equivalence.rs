//! Cross-checks the count-class engine against the brute-force full tensor
//! route. Everything here is rational-exact: the two computations take
//! structurally different paths (incremental kernel sweeps vs per-component
//! amplitudes), so agreement has to be equality, not closeness.

use num::{BigRational, One};

use bornsim_core::hilbert::{CountVector, OutcomeSpec, ReplicaSpec};
use bornsim_core::oracle;
use bornsim_core::tail::{self, ConfusionParams};
use bornsim_core::Caps;

fn r(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn freq_of(digits: &[usize], outcome: usize, n: u64) -> BigRational {
    let count = digits.iter().filter(|&&d| d == outcome).count() as i64;
    BigRational::new(count.into(), (n as i64).into())
}

fn counts_of(digits: &[usize], m: usize) -> CountVector {
    let mut counts = vec![0u64; m];
    for &d in digits {
        counts[d] += 1;
    }
    CountVector::new(counts).unwrap()
}

#[test]
fn tail_masses_match_full_tensor_projection() {
    let caps = Caps::default();
    let specs: Vec<(OutcomeSpec, Vec<u64>)> = vec![
        (OutcomeSpec::binary_rational(r(1, 3)).unwrap(), (1..=6).collect()),
        (OutcomeSpec::binary_rational(r(2, 5)).unwrap(), vec![5]),
        (
            OutcomeSpec::from_rational_probs(vec![r(1, 6), r(1, 3), r(1, 2)]).unwrap(),
            vec![4],
        ),
    ];
    for (outcome, ns) in specs {
        for n in ns {
            let spec = ReplicaSpec::new(outcome.clone(), n).unwrap();
            for eps in [r(1, 10), r(1, 5), r(1, 2)] {
                let params = ConfusionParams::from_rational(eps).unwrap();
                let m = spec.m();

                let mut state = oracle::build_full_state_exact(&spec, &caps).unwrap();
                state.apply_diagonal_rational(|digits| {
                    let cv = counts_of(digits, m);
                    if tail::confusion_indicator(&spec, &params, &cv).unwrap() {
                        BigRational::one()
                    } else {
                        BigRational::from_integer(0.into())
                    }
                });
                let projected = state.norm_squared_exact();

                let result = tail::confusion_norm_exact(&spec, &params, &caps).unwrap();
                let engine = result.exact.unwrap();
                assert_eq!(
                    engine.as_exact().unwrap(),
                    &projected,
                    "m={m} n={n} eps={}",
                    params.epsilon()
                );

                let pair = tail::happy_decomposition(&spec, &params, &caps).unwrap();
                assert_eq!(
                    pair.happy.as_exact().unwrap() + pair.confused.as_exact().unwrap(),
                    BigRational::one()
                );
                assert_eq!(pair.confused.as_exact().unwrap(), &projected);
            }
        }
    }
}

#[test]
fn variance_matches_deviation_operator_norm() {
    let caps = Caps::default();
    for (num, den, n) in
        [(1i64, 3i64, 1u64), (1, 3, 4), (1, 3, 6), (2, 5, 3), (1, 7, 4), (0, 1, 5), (1, 1, 5)]
    {
        let p = r(num, den);
        let spec = ReplicaSpec::new(OutcomeSpec::binary_rational(p.clone()).unwrap(), n).unwrap();
        let mut state = oracle::build_full_state_exact(&spec, &caps).unwrap();
        state.apply_diagonal_rational(|digits| freq_of(digits, 1, n) - p.clone());
        let norm = state.norm_squared_exact();

        let expected =
            p.clone() * (BigRational::one() - p.clone()) / BigRational::from_integer(n.into());
        assert_eq!(norm, expected, "p={num}/{den} n={n}");
        let variance = tail::freq_variance(&spec).unwrap();
        assert_eq!(variance.as_exact().unwrap(), &expected);
    }
}

#[test]
fn covariance_matches_full_tensor_moments() {
    let caps = Caps::default();
    let prob_sets =
        [vec![r(1, 2), r(1, 4), r(1, 4)], vec![r(1, 6), r(1, 3), r(1, 2)]];
    for probs in prob_sets {
        for n in [2u64, 4] {
            let spec =
                ReplicaSpec::new(OutcomeSpec::from_rational_probs(probs.clone()).unwrap(), n)
                    .unwrap();
            let cov = tail::covariance_matrix(&spec);
            let state = oracle::build_full_state_exact(&spec, &caps).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    let (pi, pj) = (probs[i].clone(), probs[j].clone());
                    let moment = state.diag_expectation_exact(|digits| {
                        (freq_of(digits, i, n) - pi.clone())
                            * (freq_of(digits, j, n) - pj.clone())
                    });
                    assert_eq!(
                        cov.entry(i, j).as_exact().unwrap(),
                        &moment,
                        "entry ({i},{j}) n={n}"
                    );
                }
            }
        }
    }
}
