use serde::Serialize;

use crate::error::{domain, Result};
use crate::nbproc::{sample_nb, total_mass, NBParams};
use crate::rng::{try_par_draws, Stream};
use crate::stats::{Histogram, McEstimate};

/// Histogram estimate of `g_r` from total masses of `BN(r, Λ̃)` draws.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrHistogram {
    pub alpha: f64,
    pub r: f64,
    pub edges: Vec<f64>,
    pub density: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Fraction of draws outside the edges.
    pub outside: f64,
    pub mean: McEstimate,
}

/// Total masses of `n` independent `BN(r, Λ̃)` draws at threshold `eps`.
pub fn nb_total_masses(params: &NBParams, eps: f64, n: usize, stream: Stream) -> Result<Vec<f64>> {
    try_par_draws(stream, n, |rng| Ok(total_mass(&sample_nb(params, eps, rng)?)))
}

/// Histogram of [`nb_total_masses`] on the given bin edges.
pub fn g_density_mc(alpha: f64, r: f64, edges: &[f64], n_samples: usize, eps: f64, stream: Stream) -> Result<GrHistogram> {
    if n_samples < 1000 {
        return domain(format!("g_density_mc needs at least 1000 samples, got {n_samples}"));
    }
    let params = NBParams::new(alpha, r)?;
    let xs = nb_total_masses(&params, eps, n_samples, stream)?;
    histogram_of(alpha, r, edges, &xs)
}

/// Builds a [`GrHistogram`] from given total masses.
pub fn histogram_of(alpha: f64, r: f64, edges: &[f64], xs: &[f64]) -> Result<GrHistogram> {
    let h = Histogram::new(edges.to_vec(), xs)?;
    let (density, stderr) = (0..h.bins()).map(|k| h.density(k)).unzip();
    Ok(GrHistogram {
        alpha,
        r,
        edges: edges.to_vec(),
        density,
        stderr,
        outside: h.outside(),
        mean: McEstimate::from_samples(xs),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::GrFamily;
    use crate::stats::linspace;

    #[test]
    fn histogram_matches_inversion() {
        let edges = linspace(0.0, 6.0, 25);
        let h = g_density_mc(0.5, 1.0, &edges, 40_000, 1e-4, Stream::new(8)).unwrap();
        let total: f64 = h.density.iter().map(|d| d * 0.25).sum();
        assert!((total + h.outside - 1.0).abs() < 1e-12);
        assert!(h.mean.z(1.0).abs() < 4.0, "{:?}", h.mean);
        let g = GrFamily::new(0.5, 1.0, 1).unwrap();
        let g = g.get(0).unwrap();
        for k in 0..24 {
            let p = g.integrate_between(|_| 1.0, edges[k], edges[k + 1]).unwrap() / 0.25;
            let z = (h.density[k] - p) / h.stderr[k].max(1e-12);
            assert!(z.abs() < 4.5, "bin {k}: {} vs {p}", h.density[k]);
        }
        assert!(g_density_mc(0.5, 1.0, &edges, 10, 1e-4, Stream::new(8)).is_err());
    }
}
