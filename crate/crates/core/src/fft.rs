//! Unitary FFTs along one axis of a row-major array.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Transforms `data` (row-major with `shape`) along `axis` in place.
///
/// Forward uses `exp(-2πi jm/N)`; both directions scale by `1/sqrt(N)`.
/// Lines are processed independently, so the result does not depend on the
/// number of worker threads.
pub fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, direction: FftDirection) {
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    debug_assert_eq!(outer * len * inner, data.len());

    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft(len, direction);
    let scale = 1.0 / (len as f64).sqrt();

    if inner == 1 {
        data.par_chunks_mut(len).for_each_init(
            || vec![Complex64::default(); fft.get_inplace_scratch_len()],
            |scratch, line| {
                fft.process_with_scratch(line, scratch);
                line.iter_mut().for_each(|z| *z *= scale);
            },
        );
        return;
    }

    // Strided axis: gather every line into contiguous storage, transform,
    // then scatter back block by block.
    let lines = outer * inner;
    let mut gathered = vec![Complex64::default(); lines * len];
    {
        let src = &*data;
        gathered
            .par_chunks_mut(len)
            .enumerate()
            .for_each_init(
                || vec![Complex64::default(); fft.get_inplace_scratch_len()],
                |scratch, (l, line)| {
                    let o = l / inner;
                    let i = l % inner;
                    let base = o * len * inner + i;
                    for (j, z) in line.iter_mut().enumerate() {
                        *z = src[base + j * inner];
                    }
                    fft.process_with_scratch(line, scratch);
                    line.iter_mut().for_each(|z| *z *= scale);
                },
            );
    }
    data.par_chunks_mut(len * inner)
        .enumerate()
        .for_each(|(o, block)| {
            for i in 0..inner {
                let line = &gathered[(o * inner + i) * len..(o * inner + i + 1) * len];
                for (j, z) in line.iter().enumerate() {
                    block[j * inner + i] = *z;
                }
            }
        });
}
