//! Iterative radix-2 FFT.
//!
//! Forward transform is unnormalized, `X_k = sum_j x_j exp(-2 pi i j k / N)`.
//! The inverse carries the `1/N` factor so that `inverse(forward(x)) == x`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Out-of-place DFT of a power-of-two length sequence.
pub fn dft(seq: &[Complex64], direction: Direction) -> Result<Vec<Complex64>> {
    let mut out = seq.to_vec();
    dft_in_place(&mut out, direction)?;
    Ok(out)
}

pub fn dft_in_place(buf: &mut [Complex64], direction: Direction) -> Result<()> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    if n == 1 {
        return Ok(());
    }

    bit_reverse(buf);

    let sign = match direction {
        Direction::Forward => -1.0,
        Direction::Inverse => 1.0,
    };
    // Twiddles for the largest stage; smaller stages stride through it.
    let half = n / 2;
    let twiddles: Vec<Complex64> = (0..half)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / n as f64))
        .collect();

    let mut len = 2;
    while len <= n {
        let step = n / len;
        let half_len = len / 2;
        for start in (0..n).step_by(len) {
            for k in 0..half_len {
                let w = twiddles[k * step];
                let a = buf[start + k];
                let b = buf[start + k + half_len] * w;
                buf[start + k] = a + b;
                buf[start + k + half_len] = a - b;
            }
        }
        len <<= 1;
    }

    if direction == Direction::Inverse {
        let scale = 1.0 / n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
    Ok(())
}

fn bit_reverse(buf: &mut [Complex64]) {
    let n = buf.len();
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            buf.swap(i, j);
        }
    }
}
