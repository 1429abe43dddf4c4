use crate::activation::Activation;
use crate::channel::GainMap;

/// Visits every activation in lexicographic order together with its
/// unscaled per-grid gain sum `Σ_n ḡ[n, m_n]`.
///
/// Partial sums are accumulated waveguide by waveguide starting from zero, in
/// the same order as [`crate::channel::avg_snr`], so `rho * sum` is bit-equal
/// to `avg_snr` for the same activation.
pub(crate) fn for_each_activation(gain_map: &GainMap, mut visit: impl FnMut(&[usize], &[f64])) {
    let n_wg = gain_map.n_waveguides();
    let g = gain_map.n_grids();
    let mut partial = vec![vec![0.0; g]; n_wg + 1];
    let mut selected = vec![0usize; n_wg];
    descend(gain_map, 0, &mut partial, &mut selected, &mut visit);
}

fn descend(
    gain_map: &GainMap,
    level: usize,
    partial: &mut [Vec<f64>],
    selected: &mut [usize],
    visit: &mut impl FnMut(&[usize], &[f64]),
) {
    if level == gain_map.n_waveguides() {
        visit(selected, &partial[level]);
        return;
    }
    for m in 0..gain_map.n_candidates() {
        selected[level] = m;
        let (head, tail) = partial.split_at_mut(level + 1);
        let (below, next) = (&head[level], &mut tail[0]);
        for ((out, base), gain) in next.iter_mut().zip(below).zip(gain_map.gains(level, m)) {
            *out = base + gain;
        }
        descend(gain_map, level + 1, partial, selected, visit);
    }
}

/// The lexicographically first activation maximising `score`.
pub(crate) fn argmax_activation<S: PartialOrd>(
    gain_map: &GainMap,
    mut score: impl FnMut(&[f64]) -> S,
) -> (Activation, S) {
    let mut best: Option<(Vec<usize>, S)> = None;
    for_each_activation(gain_map, |selected, sums| {
        let s = score(sums);
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((selected.to_vec(), s));
        }
    });
    let (selected, s) = best.expect("gain maps have at least one activation");
    (Activation::new(selected), s)
}
