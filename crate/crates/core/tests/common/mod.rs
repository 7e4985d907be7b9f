//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

type Big = FBig<HalfEven, 2>;

const BITS: usize = 320;

/// `G_N = B_N F^{(x)n}` as explicit 0/1 rows.
pub fn generator_matrix(n: u32) -> Vec<Vec<u8>> {
    let mut f = vec![vec![1u8]];
    for _ in 0..n {
        let m = f.len();
        let mut g = vec![vec![0u8; 2 * m]; 2 * m];
        for r in 0..m {
            for c in 0..m {
                // [[F, 0], [F, F]]
                g[r][c] = f[r][c];
                g[m + r][c] = f[r][c];
                g[m + r][m + c] = f[r][c];
            }
        }
        f = g;
    }
    let len = f.len();
    let rev = |i: usize| if n == 0 { i } else { i.reverse_bits() >> (usize::BITS - n) };
    (0..len).map(|r| f[rev(r)].clone()).collect()
}

/// `u G` over GF(2).
pub fn matrix_encode(u: &[u8], g: &[Vec<u8>]) -> Vec<u8> {
    let mut x = vec![0u8; g.len()];
    for (r, &b) in u.iter().enumerate() {
        if b == 1 {
            for (xi, gi) in x.iter_mut().zip(&g[r]) {
                *xi ^= gi;
            }
        }
    }
    x
}

fn big(x: f64) -> Big {
    Big::try_from(x).expect("finite").with_precision(BITS).value()
}

/// `ln sum exp(-m)` at high precision, by direct summation.
fn big_log_sum_exp_neg(m: &[f64]) -> Big {
    let mut acc = big(0.0);
    for &v in m {
        acc += (-big(v)).exp();
    }
    acc.ln()
}

/// Exact error metric recomputed with 320-bit floats and no shifting tricks.
pub fn exact_metric_oracle(sorted: &[f64], list_size: usize, beta: f64) -> f64 {
    let kept = big_log_sum_exp_neg(&sorted[..list_size]);
    let dropped = big_log_sum_exp_neg(&sorted[list_size..]);
    (kept - big(beta) * dropped).to_f64().value()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One step of a single-unit LSTM, written out by hand. Weights are
/// `[w, u, b]` per gate in order i, f, g, o.
pub fn lstm_unit_step(x: f64, h: f64, c: f64, gates: [[f64; 3]; 4]) -> (f64, f64) {
    let pre = |k: usize| gates[k][0] * x + gates[k][1] * h + gates[k][2];
    let i = sigmoid(pre(0));
    let f = sigmoid(pre(1));
    let g = pre(2).tanh();
    let o = sigmoid(pre(3));
    let c2 = f * c + i * g;
    (o * c2.tanh(), c2)
}
