//! Multi-indices for partial derivatives in at most two variables, up to
//! fourth order.
//!
//! A multi-index `[a, b]` means `∂₁ᵃ ∂₂ᵇ`. The fifteen indices with
//! `a + b ≤ 4` are stored in a fixed order so that derivative tables can be
//! plain arrays.

pub const MAX_ORDER: usize = 4;
pub const COUNT: usize = 15;

pub type MultiIndex = [u8; 2];

/// All multi-indices ordered by total degree, then by decreasing first entry.
pub const ALL: [MultiIndex; COUNT] = [
    [0, 0],
    [1, 0],
    [0, 1],
    [2, 0],
    [1, 1],
    [0, 2],
    [3, 0],
    [2, 1],
    [1, 2],
    [0, 3],
    [4, 0],
    [3, 1],
    [2, 2],
    [1, 3],
    [0, 4],
];

pub fn order(m: MultiIndex) -> usize {
    (m[0] + m[1]) as usize
}

pub fn position(m: MultiIndex) -> usize {
    let n = order(m);
    assert!(n <= MAX_ORDER, "derivative order {n} above {MAX_ORDER}");
    n * (n + 1) / 2 + m[1] as usize
}

/// Multi-index of a list of 1-based variable labels, e.g. `[1, 1, 2]` is `[2, 1]`.
pub fn from_labels(labels: &[u8]) -> MultiIndex {
    let mut m = [0u8; 2];
    for &l in labels {
        assert!(l == 1 || l == 2, "variable label {l} out of range");
        m[(l - 1) as usize] += 1;
    }
    m
}

/// Indices usable in genus `g` (second entry zero for genus one).
pub fn for_genus(g: usize) -> impl Iterator<Item = MultiIndex> {
    ALL.into_iter().filter(move |m| g == 2 || m[1] == 0)
}

pub fn binomial(n: u8, k: u8) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut r = 1.0;
    for i in 0..k {
        r = r * (n - i) as f64 / (i + 1) as f64;
    }
    r
}

/// Sub-indices `β ≤ α` together with the product binomial `C(α, β)`.
pub fn sub_indices(alpha: MultiIndex) -> impl Iterator<Item = (MultiIndex, f64)> {
    (0..=alpha[0]).flat_map(move |i| {
        (0..=alpha[1]).map(move |j| ([i, j], binomial(alpha[0], i) * binomial(alpha[1], j)))
    })
}

pub fn sub(a: MultiIndex, b: MultiIndex) -> MultiIndex {
    [a[0] - b[0], a[1] - b[1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_are_a_bijection() {
        for (k, m) in ALL.iter().enumerate() {
            assert_eq!(position(*m), k);
        }
    }

    #[test]
    fn labels() {
        assert_eq!(from_labels(&[1, 1, 2]), [2, 1]);
        assert_eq!(from_labels(&[2, 2, 2, 2]), [0, 4]);
        assert_eq!(from_labels(&[]), [0, 0]);
    }

    #[test]
    fn genus_one_indices() {
        let v: Vec<_> = for_genus(1).collect();
        assert_eq!(v, vec![[0, 0], [1, 0], [2, 0], [3, 0], [4, 0]]);
    }
}
