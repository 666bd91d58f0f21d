use rand::Rng;

/// Draws up to `k` distinct items, each draw proportional to `weights[item]`
/// among the items not yet drawn.
///
/// Zero-weight items are never drawn, so fewer than `k` items can come back.
/// If every item has zero weight the draw is uniform instead.
pub fn weighted_sample_without_replacement<R: Rng + ?Sized>(
    items: &[usize],
    weights: &[f64],
    k: usize,
    rng: &mut R,
) -> Vec<usize> {
    let mut remaining: Vec<(usize, f64)> = items.iter().map(|&i| (i, weights[i])).collect();
    let k = k.min(remaining.len());
    let mut out = Vec::with_capacity(k);
    if remaining.iter().all(|&(_, w)| w <= 0.0) {
        for t in 0..k {
            let j = rng.random_range(t..remaining.len());
            remaining.swap(t, j);
            out.push(remaining[t].0);
        }
        return out;
    }
    remaining.retain(|&(_, w)| w > 0.0);
    while out.len() < k && !remaining.is_empty() {
        let total: f64 = remaining.iter().map(|&(_, w)| w).sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = remaining.len() - 1;
        for (pos, &(_, w)) in remaining.iter().enumerate() {
            acc += w;
            if target < acc {
                pick = pos;
                break;
            }
        }
        out.push(remaining.swap_remove(pick).0);
    }
    out
}
