use mallows_core::oracle::{chi_square_gof, chi_square_two_sample};
use mallows_core::permstat::{
    arc_path, estimate_covariance, estimate_mi, paired_regen_blocks, stream_blocks,
};
use mallows_core::qseries::{arc_transition_finite, nu_stationary, QParam};
use mallows_core::sampler::{sample_mallows_finite, stream_mallows};
use mallows_core::stats::Estimate;
use mallows_core::RngStream;

fn q(v: f64) -> QParam {
    QParam::new(v).unwrap()
}

#[test]
fn blocks_partition_the_stream() {
    let mut s = stream_mallows(q(0.4), RngStream::new(31, 0).rng()).unwrap();
    let blocks = stream_blocks(&mut s, 1_000_000);
    let total: usize = blocks.iter().map(|b| b.len).sum();
    let from_counts: u64 = blocks.iter().map(|b| b.cycle_counts.size()).sum();
    assert_eq!(total as u64, from_counts);
    assert!(total >= 1_000_000);
    // the stream resumes right after the last block
    assert_eq!(s.next().unwrap().position, total as u64 + 1);
}

#[test]
fn mean_gap_matches_stationary_zero_state() {
    let mut s = stream_mallows(q(0.4), RngStream::new(32, 0).rng()).unwrap();
    let blocks = stream_blocks(&mut s, 1_000_000);
    let gaps: Vec<f64> = blocks.iter().map(|b| b.len as f64).collect();
    let e = Estimate::from_samples(&gaps);
    let renewal_rate = nu_stationary(q(0.4), 1e-12).unwrap().weight(0);
    assert!(e.within(1.0 / renewal_rate, 4.0), "{e} vs {}", 1.0 / renewal_rate);
}

#[test]
fn gaps_are_identically_distributed() {
    let mut s = stream_mallows(q(0.6), RngStream::new(33, 0).rng()).unwrap();
    let blocks = stream_blocks(&mut s, 2_000_000);
    let half = blocks.len() / 2;
    let hist = |bs: &[mallows_core::RegenBlock]| {
        let mut h = vec![0u64; 64];
        for b in bs {
            h[b.len.min(63)] += 1;
        }
        h
    };
    let r = chi_square_two_sample(&hist(&blocks[..half]), &hist(&blocks[half..])).unwrap();
    assert!(r.passes(1e-3), "{r:?}");
}

#[test]
fn truncated_weighted_sum_is_one() {
    let mut s = stream_mallows(q(0.4), RngStream::new(34, 0).rng()).unwrap();
    let blocks = stream_blocks(&mut s, 1_000_000);
    let total: f64 = (1..=50)
        .map(|i| i as f64 * estimate_mi(&blocks, i).unwrap().mean)
        .sum();
    assert!((0.98..=1.001).contains(&total), "{total}");
}

#[test]
fn identity_streams_pair_trivially() {
    let mut a = stream_mallows(q(1e-12), RngStream::new(35, 0).rng()).unwrap();
    let mut b = stream_mallows(q(1e-12), RngStream::new(35, 1).rng()).unwrap();
    let blocks = paired_regen_blocks(&mut a, &mut b, 5000);
    assert_eq!(blocks.len(), 5000);
    assert!(blocks
        .iter()
        .all(|b| b.len == 1 && b.composed_cycle_counts.count(1) == 1));
}

#[test]
fn arc_transitions_follow_kernel() {
    let (n, qv) = (6, 0.7);
    let reps = 1_000_000;
    // counts[t][k][step + 1]
    let mut counts = vec![vec![[0u64; 3]; n + 1]; n];
    let mut rng = RngStream::new(36, 0).rng();
    for _ in 0..reps {
        let path = arc_path(&sample_mallows_finite(n, q(qv), &mut rng));
        for t in 0..n {
            let (a, b) = (path.kappa[t], path.kappa[t + 1]);
            counts[t][a][(b as i64 - a as i64 + 1) as usize] += 1;
        }
    }
    for t in 0..n {
        for k in 0..=t.min(n - t) {
            let obs = counts[t][k];
            if obs.iter().sum::<u64>() < 1000 {
                continue;
            }
            let row = arc_transition_finite(k, t, n, q(qv)).unwrap();
            let (cells, probs): (Vec<u64>, Vec<f64>) = [row.down, row.stay, row.up]
                .into_iter()
                .zip(obs)
                .filter(|(p, _)| *p > 0.0)
                .map(|(p, o)| (o, p))
                .unzip();
            let r = chi_square_gof(&cells, &probs).unwrap();
            assert!(r.passes(1e-3), "t={t} k={k}: {r:?}");
        }
    }
}

#[test]
fn covariance_is_symmetric_with_nonnegative_diagonal() {
    let mut s = stream_mallows(q(0.5), RngStream::new(37, 0).rng()).unwrap();
    let blocks = stream_blocks(&mut s, 200_000);
    let cov = estimate_covariance(&blocks, 4).unwrap();
    for i in 1..=4 {
        assert!(cov.get(i, i) >= 0.0);
        for j in 1..=4 {
            assert_eq!(cov.get(i, j), cov.get(j, i));
        }
    }
}
