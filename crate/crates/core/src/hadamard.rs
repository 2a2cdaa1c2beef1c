//! Hadamard matrices and the rotated modulation columns.

use crate::error::{Error, Result};

/// Orders supported out of the box.
pub const SUPPORTED_ORDERS: [usize; 8] = [1, 2, 4, 8, 12, 16, 20, 32];

/// Square ±1 matrix with `H Hᵀ = M I`, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    order: usize,
    entries: Vec<i8>,
}

/// The sign vector `α_n` used at encoding step `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModulationColumn {
    pub index: usize,
    pub values: Vec<i8>,
}

impl ModulationColumn {
    pub fn as_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

impl HadamardMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn entry(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.order + col]
    }

    pub fn column(&self, col: usize) -> Vec<i8> {
        (0..self.order).map(|r| self.entry(r, col)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        self.entries.chunks(self.order).map(|r| r.to_vec()).collect()
    }

    /// `H Hᵀ` in exact integer arithmetic.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        let m = self.order;
        let mut g = vec![vec![0i64; m]; m];
        for (i, gi) in g.iter_mut().enumerate() {
            for (j, gij) in gi.iter_mut().enumerate() {
                *gij = (0..m)
                    .map(|k| self.entry(i, k) as i64 * self.entry(j, k) as i64)
                    .sum();
            }
        }
        g
    }

    pub fn is_hadamard(&self) -> bool {
        let m = self.order as i64;
        self.entries.iter().all(|&e| e == 1 || e == -1)
            && self.gram().iter().enumerate().all(|(i, row)| {
                row.iter()
                    .enumerate()
                    .all(|(j, &v)| v == if i == j { m } else { 0 })
            })
    }

    /// Zero-based column index of `α_n`.
    pub fn column_index(&self, n: usize) -> usize {
        (n - 1) % self.order
    }
}

/// Build a Hadamard matrix of order `m` (Sylvester or Paley).
pub fn build_hadamard(m: usize) -> Result<HadamardMatrix> {
    if !SUPPORTED_ORDERS.contains(&m) {
        return Err(Error::UnsupportedOrder(m));
    }
    if m.is_power_of_two() {
        Ok(sylvester(m))
    } else {
        paley(m)
    }
}

fn sylvester(m: usize) -> HadamardMatrix {
    let mut h = vec![1i8];
    let mut k = 1;
    while k < m {
        let n = 2 * k;
        let mut next = vec![0i8; n * n];
        for i in 0..k {
            for j in 0..k {
                let v = h[i * k + j];
                next[i * n + j] = v;
                next[i * n + j + k] = v;
                next[(i + k) * n + j] = v;
                next[(i + k) * n + j + k] = -v;
            }
        }
        h = next;
        k = n;
    }
    HadamardMatrix {
        order: m,
        entries: h,
    }
}

// Paley I for M = q + 1 with q prime, q ≡ 3 mod 4.
fn paley(m: usize) -> Result<HadamardMatrix> {
    let q = m - 1;
    if m % 4 != 0 || !is_prime(q) || q % 4 != 3 {
        return Err(Error::UnsupportedOrder(m));
    }
    let mut residue = vec![false; q];
    for x in 1..q {
        residue[(x * x) % q] = true;
    }
    let chi = |d: usize| -> i8 {
        if d == 0 {
            0
        } else if residue[d] {
            1
        } else {
            -1
        }
    };
    let mut e = vec![0i8; m * m];
    for j in 1..m {
        e[j] = 1;
        e[j * m] = -1;
    }
    for i in 0..q {
        for j in 0..q {
            e[(i + 1) * m + j + 1] = chi((j + q - i) % q);
        }
    }
    for i in 0..m {
        e[i * m + i] += 1;
    }
    Ok(HadamardMatrix { order: m, entries: e })
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// `H_n = [α_n α_{n+1} … α_{n+M-1}]`.
pub fn column_rotation(h: &HadamardMatrix, n: usize) -> HadamardMatrix {
    assert!(n >= 1, "step index starts at 1");
    let m = h.order;
    let shift = h.column_index(n);
    let mut e = vec![0i8; m * m];
    for r in 0..m {
        for c in 0..m {
            e[r * m + c] = h.entry(r, (c + shift) % m);
        }
    }
    HadamardMatrix { order: m, entries: e }
}

/// `α_n`, column `((n-1) mod M) + 1` of `H`.
pub fn modulation_vector(h: &HadamardMatrix, n: usize) -> ModulationColumn {
    assert!(n >= 1, "step index starts at 1");
    ModulationColumn {
        index: n,
        values: h.column(h.column_index(n)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_orders() {
        assert_eq!(build_hadamard(1).unwrap().rows(), vec![vec![1]]);
        assert_eq!(
            build_hadamard(2).unwrap().rows(),
            vec![vec![1, 1], vec![1, -1]]
        );
        let h4 = build_hadamard(4).unwrap();
        let h2 = build_hadamard(2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let s = if i >= 2 && j >= 2 { -1 } else { 1 };
                assert_eq!(h4.entry(i, j), s * h2.entry(i % 2, j % 2));
            }
        }
        assert!(h4.is_hadamard());
    }

    #[test]
    fn all_supported_orders_are_hadamard() {
        for &m in &SUPPORTED_ORDERS {
            let h = build_hadamard(m).unwrap();
            assert_eq!(h.order(), m);
            assert!(h.is_hadamard(), "order {m}");
        }
    }

    #[test]
    fn unsupported_orders_rejected() {
        for m in [0, 3, 5, 6, 24, 28, 64] {
            assert_eq!(build_hadamard(m), Err(Error::UnsupportedOrder(m)));
        }
    }

    #[test]
    fn rotation_examples() {
        let h = build_hadamard(2).unwrap();
        assert_eq!(column_rotation(&h, 1), h);
        assert_eq!(column_rotation(&h, 2).rows(), vec![vec![1, 1], vec![-1, 1]]);
        assert_eq!(column_rotation(&h, 3), h);
    }

    #[test]
    fn modulation_examples() {
        let h = build_hadamard(2).unwrap();
        assert_eq!(modulation_vector(&h, 1).values, vec![1, 1]);
        assert_eq!(modulation_vector(&h, 2).values, vec![1, -1]);
        assert_eq!(modulation_vector(&h, 3).values, vec![1, 1]);
    }

    #[test]
    fn alpha_against_next_rotation() {
        for &m in &SUPPORTED_ORDERS {
            let h = build_hadamard(m).unwrap();
            for n in 1..=2 * m {
                let a = modulation_vector(&h, n).values;
                let hn = column_rotation(&h, n + 1);
                let prod: Vec<i64> = (0..m)
                    .map(|c| (0..m).map(|r| a[r] as i64 * hn.entry(r, c) as i64).sum())
                    .collect();
                let mut want = vec![0i64; m];
                want[m - 1] = m as i64;
                assert_eq!(prod, want, "M={m} n={n}");
            }
        }
    }
}
