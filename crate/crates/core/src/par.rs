//! Thin wrappers that run data-parallel loops on rayon when the `parallel`
//! feature is on and sequentially otherwise. Every reduction is done in a
//! fixed order, so both builds give bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const CHUNK: usize = 2048;

/// `(0..n).map(f).collect()`, possibly in parallel.
pub(crate) fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// `values[i] += f(point i)` over a flat coordinate buffer.
pub(crate) fn add_to_field<F>(values: &mut [f64], flat: &[f64], stride: usize, f: F)
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    let apply = |(vals, pts): (&mut [f64], &[f64])| {
        for (v, p) in vals.iter_mut().zip(pts.chunks_exact(stride)) {
            *v += f(p);
        }
    };
    #[cfg(feature = "parallel")]
    {
        values
            .par_chunks_mut(CHUNK)
            .zip(flat.par_chunks(CHUNK * stride))
            .for_each(apply);
    }
    #[cfg(not(feature = "parallel"))]
    {
        values
            .chunks_mut(CHUNK)
            .zip(flat.chunks(CHUNK * stride))
            .for_each(apply);
    }
}
