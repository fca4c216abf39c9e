//! Iterative radix-2 FFT, enough for power-of-two STFT frames.

/// In-place complex FFT over (re, im) pairs. Length must be a power of two.
pub fn fft_inplace(re: &mut [f64], im: &mut [f64]) {
    let n = re.len();
    assert_eq!(n, im.len());
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    if n <= 1 {
        return;
    }

    // bit-reversal permutation
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = (i as u32).reverse_bits() >> (32 - bits);
        let j = j as usize;
        if i < j {
            re.swap(i, j);
            im.swap(i, j);
        }
    }

    let mut len = 2;
    while len <= n {
        let ang = -2.0 * std::f64::consts::PI / len as f64;
        let (wr, wi) = (ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut cr = 1.0;
            let mut ci = 0.0;
            for k in 0..len / 2 {
                let a = start + k;
                let b = a + len / 2;
                let tr = re[b] * cr - im[b] * ci;
                let ti = re[b] * ci + im[b] * cr;
                re[b] = re[a] - tr;
                im[b] = im[a] - ti;
                re[a] += tr;
                im[a] += ti;
                let ncr = cr * wr - ci * wi;
                ci = cr * wi + ci * wr;
                cr = ncr;
            }
        }
        len <<= 1;
    }
}

/// Magnitudes of the non-negative-frequency bins (length n/2 + 1) of a
/// real signal zero-padded to `n_fft`.
pub fn real_magnitude_spectrum(signal: &[f64], n_fft: usize) -> Vec<f64> {
    assert!(signal.len() <= n_fft, "signal longer than n_fft");
    let mut re = vec![0.0; n_fft];
    let mut im = vec![0.0; n_fft];
    re[..signal.len()].copy_from_slice(signal);
    fft_inplace(&mut re, &mut im);
    (0..n_fft / 2 + 1)
        .map(|k| (re[k] * re[k] + im[k] * im[k]).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft_magnitude(signal: &[f64], n: usize) -> Vec<f64> {
        (0..n / 2 + 1)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &x) in signal.iter().enumerate() {
                    let ang = -2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64;
                    re += x * ang.cos();
                    im += x * ang.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let mut state = 123u64;
        let signal: Vec<f64> = (0..64)
            .map(|_| {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                (state >> 40) as f64 / (1u64 << 24) as f64 - 0.5
            })
            .collect();
        let fast = real_magnitude_spectrum(&signal, 64);
        let slow = naive_dft_magnitude(&signal, 64);
        for (a, b) in fast.iter().zip(slow.iter()) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn pure_tone_peaks_at_its_bin() {
        let n = 256;
        let k = 19;
        let signal: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64).sin())
            .collect();
        let mag = real_magnitude_spectrum(&signal, n);
        let argmax = mag
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(argmax, k);
    }
}
