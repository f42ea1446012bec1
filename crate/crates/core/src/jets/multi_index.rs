use std::fmt;

/// Exponent vector labelling a derivative `∂^J = ∂_1^{J_1} ⋯ ∂_n^{J_n}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex {
    entries: Vec<u32>,
}

impl MultiIndex {
    pub fn zero(n: usize) -> Self {
        Self { entries: vec![0; n] }
    }

    pub fn new(entries: Vec<u32>) -> Self {
        Self { entries }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::zero(n);
        m.entries[i] = 1;
        m
    }

    /// Counts occurrences in an index tuple: `(0, 0, 2)` in dimension 3 is `[2, 0, 1]`.
    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut m = Self::zero(n);
        for &i in indices {
            m.entries[i] += 1;
        }
        m
    }

    /// Sorted index tuple; inverse of [`from_indices`](Self::from_indices).
    pub fn to_indices(&self) -> Vec<usize> {
        self.entries
            .iter()
            .enumerate()
            .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn get(&self, i: usize) -> u32 {
        self.entries[i]
    }

    pub fn order(&self) -> u32 {
        self.entries.iter().sum()
    }

    pub fn plus(&self, i: usize) -> Self {
        let mut m = self.clone();
        m.entries[i] += 1;
        m
    }

    pub fn minus(&self, i: usize) -> Option<Self> {
        if self.entries[i] == 0 {
            return None;
        }
        let mut m = self.clone();
        m.entries[i] -= 1;
        Some(m)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &Self) -> Option<Self> {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(Self::new)
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.entries.iter().zip(&other.entries).all(|(a, b)| a <= b)
    }

    /// `J! = Π J_i!`.
    pub fn factorial(&self) -> f64 {
        self.entries.iter().map(|&c| factorial(c)).product()
    }

    /// `C(J, K) = Π C(J_i, K_i)`; zero unless `K ≤ J`.
    pub fn binomial(&self, k: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&k.entries)
            .map(|(&j, &k)| binomial(j, k))
            .product()
    }

    /// First coordinate with a nonzero entry.
    pub fn first_nonzero(&self) -> Option<usize> {
        self.entries.iter().position(|&c| c > 0)
    }

    /// Last coordinate with a nonzero entry.
    pub fn last_nonzero(&self) -> Option<usize> {
        self.entries.iter().rposition(|&c| c > 0)
    }

    /// All `K` with `K ≤ self`, in no particular order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero(self.dim())];
        for (i, &c) in self.entries.iter().enumerate() {
            let mut next = Vec::with_capacity(out.len() * (c as usize + 1));
            for m in &out {
                for v in 0..=c {
                    let mut m2 = m.clone();
                    m2.entries[i] = v;
                    next.push(m2);
                }
            }
            out = next;
        }
        out
    }

    /// `Π base_i^{J_i}`.
    pub fn monomial(&self, base: &[f64]) -> f64 {
        self.entries.iter().zip(base).map(|(&c, b)| b.powi(c as i32)).product()
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries)
    }
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Exact integer binomial coefficient.
pub fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_tuple_round_trip() {
        let m = MultiIndex::from_indices(3, &[2, 0, 2, 1]);
        assert_eq!(m.entries(), &[1, 1, 2]);
        assert_eq!(m.to_indices(), vec![0, 1, 2, 2]);
        assert_eq!(m.order(), 4);
    }

    #[test]
    fn sub_index_count_is_product_of_entries_plus_one() {
        let m = MultiIndex::new(vec![2, 0, 3]);
        let subs = m.sub_indices();
        assert_eq!(subs.len(), 3 * 4);
        assert!(subs.iter().all(|k| k.le(&m)));
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10.0);
        assert_eq!(binomial(2, 3), 0.0);
        assert_eq!(binomial_u128(10, 4), 210);
        let j = MultiIndex::new(vec![3, 2]);
        assert_eq!(j.binomial(&MultiIndex::new(vec![1, 1])), 6.0);
        assert_eq!(j.factorial(), 12.0);
    }
}
