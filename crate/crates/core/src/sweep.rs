//! Frequency sweeps: a strictly increasing frequency grid with one payload
//! per point. The payload type tags what the sweep carries (ABCD matrices,
//! S-matrices, scalar admittances, or flagged simulation points).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::network::SMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep<T> {
    freqs: Vec<f64>,
    data: Vec<T>,
}

/// Scalar complex admittance per point, in siemens.
pub type YSweep = Sweep<Complex64>;
/// Two-port S-matrix per point.
pub type SSweep = Sweep<SMatrix>;
/// Simulated S data; `None` flags frequencies where the solve was singular.
pub type SimSweep = Sweep<Option<SMatrix>>;

impl<T> Sweep<T> {
    /// Builds a sweep, enforcing the grid invariants: all frequencies finite,
    /// positive and strictly increasing, one payload per point.
    pub fn new(freqs: Vec<f64>, data: Vec<T>) -> Result<Self> {
        validate_grid(&freqs)?;
        if freqs.len() != data.len() {
            return Err(Error::Input(format!(
                "sweep has {} frequencies but {} data points",
                freqs.len(),
                data.len()
            )));
        }
        Ok(Self { freqs, data })
    }

    pub fn from_fn(freqs: Vec<f64>, mut f: impl FnMut(f64) -> T) -> Result<Self> {
        let data = freqs.iter().map(|&fq| f(fq)).collect();
        Self::new(freqs, data)
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> {
        self.freqs.iter().copied().zip(self.data.iter())
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Sweep<U> {
        Sweep {
            freqs: self.freqs.clone(),
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl SimSweep {
    /// Iterates over the non-flagged points.
    pub fn valid(&self) -> impl Iterator<Item = (f64, &SMatrix)> {
        self.iter().filter_map(|(f, s)| s.as_ref().map(|m| (f, m)))
    }

    pub fn flagged_count(&self) -> usize {
        self.data.iter().filter(|s| s.is_none()).count()
    }

    /// Drops flagged points, yielding a plain S sweep.
    pub fn compact(&self) -> SSweep {
        let (freqs, data) = self.valid().map(|(f, s)| (f, *s)).unzip();
        Sweep { freqs, data }
    }
}

/// Checks grid invariants without building a sweep.
pub fn validate_grid(freqs: &[f64]) -> Result<()> {
    for (i, &f) in freqs.iter().enumerate() {
        if !f.is_finite() || f <= 0.0 {
            return Err(Error::Input(format!(
                "frequency at index {i} is not a finite positive value: {f}"
            )));
        }
        if i > 0 && f <= freqs[i - 1] {
            return Err(Error::Input(format!(
                "frequencies must be strictly increasing (index {i}: {f} after {})",
                freqs[i - 1]
            )));
        }
    }
    Ok(())
}

/// Uniform grid over `[start, stop]` with `points` samples. A single-point
/// grid is allowed only when `start == stop`.
pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if !start.is_finite() || !stop.is_finite() || start <= 0.0 {
        return Err(Error::Input(format!(
            "grid bounds must be finite and positive (got {start}..{stop})"
        )));
    }
    match points {
        0 => Err(Error::Input("grid needs at least one point".into())),
        1 => {
            if start == stop {
                Ok(vec![start])
            } else {
                Err(Error::Input(
                    "a one-point grid requires start == stop".into(),
                ))
            }
        }
        n => {
            if stop <= start {
                return Err(Error::Input(format!(
                    "grid stop must exceed start (got {start}..{stop})"
                )));
            }
            let step = (stop - start) / (n - 1) as f64;
            let mut grid: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
            grid[n - 1] = stop;
            Ok(grid)
        }
    }
}
