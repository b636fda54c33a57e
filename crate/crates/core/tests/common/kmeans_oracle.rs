use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Global optimum of the 2-means objective by enumerating every split of
/// the points into two non-empty groups.
pub fn brute_two_means(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let cost = |members: &[&Vec<f64>]| -> f64 {
        let d = members[0].len();
        let mean: Vec<f64> = (0..d)
            .map(|j| members.iter().map(|p| p[j]).sum::<f64>() / members.len() as f64)
            .collect();
        members
            .iter()
            .map(|p| p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum()
    };
    let mut best = f64::INFINITY;
    // point 0 always in group A; mask picks the rest of A
    for mask in 0u32..(1 << (n - 1)) {
        let (mut a, mut b) = (vec![&points[0]], Vec::new());
        for (i, p) in points.iter().enumerate().skip(1) {
            if mask & (1 << (i - 1)) != 0 {
                a.push(p);
            } else {
                b.push(p);
            }
        }
        if b.is_empty() {
            continue;
        }
        best = best.min(cost(&a) + cost(&b));
    }
    best
}

pub fn fixture(seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
    let n = rng.gen_range(3..=8);
    (0..n).map(|_| vec![rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)]).collect()
}
