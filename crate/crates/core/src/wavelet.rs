//! Dyadic signals and orthonormal periodic wavelet transforms.
//!
//! A [`DyadicSignal`] of depth `J` holds `2^(J+1)` samples (1D) or a
//! `2^(J+1) x 2^(J+1)` image (2D). The forward transform always runs to full
//! depth, leaving a single scaling coefficient and `J + 1` detail levels. In
//! 2D each level carries three bands produced by separable row/column
//! filtering; all bands share the node coordinates of one quadtree.
//!
//! Filters are applied with periodic extension, so both analysis and
//! synthesis are orthogonal maps and i.i.d. white noise stays white
//! coefficient-wise.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample container on a regular dyadic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicSignal {
    dim: usize,
    depth: usize,
    values: Vec<f64>,
}

impl DyadicSignal {
    /// 1D signal; the length must be a power of two, at least 2.
    pub fn from_1d(values: Vec<f64>) -> Result<Self> {
        let depth = dyadic_depth(values.len())?;
        check_finite(&values)?;
        Ok(Self {
            dim: 1,
            depth,
            values,
        })
    }

    /// Square image stored row-major; `side` must be a power of two, at least 2.
    pub fn from_2d(side: usize, values: Vec<f64>) -> Result<Self> {
        let depth = dyadic_depth(side)?;
        if values.len() != side * side {
            return Err(Error::dim(format!(
                "image of side {side} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        check_finite(&values)?;
        Ok(Self {
            dim: 2,
            depth,
            values,
        })
    }

    pub fn zeros(dim: usize, depth: usize) -> Result<Self> {
        let side = 1usize << (depth + 1);
        match dim {
            1 => Self::from_1d(vec![0.0; side]),
            2 => Self::from_2d(side, vec![0.0; side * side]),
            _ => Err(Error::dim(format!("unsupported dimension {dim}"))),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Depth `J`; the side length is `2^(J+1)`.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn side(&self) -> usize {
        1 << (self.depth + 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same shape, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        match self.dim {
            1 => Self::from_1d(values),
            _ => Self::from_2d(self.side(), values),
        }
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Self {
        Self {
            dim: self.dim,
            depth: self.depth,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.depth == other.depth
    }
}

fn dyadic_depth(side: usize) -> Result<usize> {
    if side < 2 || !side.is_power_of_two() {
        return Err(Error::dim(format!(
            "side length {side} is not a power of two >= 2"
        )));
    }
    Ok(side.trailing_zeros() as usize - 1)
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::dim(format!("non-finite sample at index {i}"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveletFamily {
    Haar,
    #[serde(rename = "db2")]
    Daubechies2,
}

impl WaveletFamily {
    pub fn name(self) -> &'static str {
        match self {
            WaveletFamily::Haar => "haar",
            WaveletFamily::Daubechies2 => "db2",
        }
    }
}

/// Orthonormal filter pair with periodic boundary handling.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletBasis {
    family: WaveletFamily,
    lowpass: Vec<f64>,
    highpass: Vec<f64>,
    regularity: u32,
}

impl WaveletBasis {
    pub fn new(family: WaveletFamily) -> Self {
        let lowpass = match family {
            WaveletFamily::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletFamily::Daubechies2 => {
                let s3 = 3f64.sqrt();
                let norm = 4.0 * std::f64::consts::SQRT_2;
                vec![
                    (1.0 + s3) / norm,
                    (3.0 + s3) / norm,
                    (3.0 - s3) / norm,
                    (1.0 - s3) / norm,
                ]
            }
        };
        // quadrature mirror: g[t] = (-1)^t h[L-1-t]
        let n = lowpass.len();
        let highpass = (0..n)
            .map(|t| {
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                sign * lowpass[n - 1 - t]
            })
            .collect();
        let regularity = match family {
            WaveletFamily::Haar => 1,
            WaveletFamily::Daubechies2 => 2,
        };
        Self {
            family,
            lowpass,
            highpass,
            regularity,
        }
    }

    pub fn haar() -> Self {
        Self::new(WaveletFamily::Haar)
    }

    pub fn db2() -> Self {
        Self::new(WaveletFamily::Daubechies2)
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    pub fn lowpass(&self) -> &[f64] {
        &self.lowpass
    }

    pub fn highpass(&self) -> &[f64] {
        &self.highpass
    }

    /// Nominal smoothness `r` used to validate prior smoothness `s < r`.
    pub fn regularity(&self) -> u32 {
        self.regularity
    }

    /// One periodic analysis step on `input`, writing `n/2` approximation
    /// coefficients followed by `n/2` details into `out`.
    fn analyze(&self, input: &[f64], out: &mut [f64]) {
        let n = input.len();
        let half = n / 2;
        for k in 0..half {
            let mut a = 0.0;
            let mut d = 0.0;
            for (t, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                let x = input[(2 * k + t) % n];
                a += h * x;
                d += g * x;
            }
            out[k] = a;
            out[half + k] = d;
        }
    }

    /// Adjoint of [`Self::analyze`].
    fn synthesize(&self, input: &[f64], out: &mut [f64]) {
        let n = input.len();
        let half = n / 2;
        out.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..half {
            let a = input[k];
            let d = input[half + k];
            for (t, (&h, &g)) in self.lowpass.iter().zip(&self.highpass).enumerate() {
                out[(2 * k + t) % n] += h * a + g * d;
            }
        }
    }
}

/// Wavelet coefficients organised by level and band.
///
/// `details[j]` stores level `j` band-major: entry `band * 4^j + k1 * 2^j + k2`
/// in 2D, or simply `k` in 1D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pyramid {
    dim: usize,
    depth: usize,
    family: WaveletFamily,
    scaling: Vec<f64>,
    details: Vec<Vec<f64>>,
}

impl Pyramid {
    /// Assemble a pyramid from raw parts, checking every level size.
    pub fn from_parts(
        dim: usize,
        depth: usize,
        family: WaveletFamily,
        scaling: Vec<f64>,
        details: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::dim(format!("unsupported dimension {dim}")));
        }
        if scaling.len() != 1 {
            return Err(Error::dim(format!(
                "expected a single scaling coefficient, got {}",
                scaling.len()
            )));
        }
        if details.len() != depth + 1 {
            return Err(Error::dim(format!(
                "expected {} detail levels, got {}",
                depth + 1,
                details.len()
            )));
        }
        let bands = if dim == 1 { 1 } else { 3 };
        for (j, level) in details.iter().enumerate() {
            let want = bands << (dim * j);
            if level.len() != want {
                return Err(Error::dim(format!(
                    "level {j} has {} coefficients, expected {want}",
                    level.len()
                )));
            }
        }
        Ok(Self {
            dim,
            depth,
            family,
            scaling,
            details,
        })
    }

    pub fn zeros(dim: usize, depth: usize, family: WaveletFamily) -> Result<Self> {
        let bands = if dim == 1 { 1 } else { 3 };
        let details = (0..=depth).map(|j| vec![0.0; bands << (dim * j)]).collect();
        Self::from_parts(dim, depth, family, vec![0.0], details)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn family(&self) -> WaveletFamily {
        self.family
    }

    /// Number of parallel bands: 1 in 1D, 3 in 2D.
    pub fn bands(&self) -> usize {
        if self.dim == 1 {
            1
        } else {
            3
        }
    }

    /// Tree nodes on level `j`: `2^(d j)`.
    pub fn nodes_at(&self, level: usize) -> usize {
        1 << (self.dim * level)
    }

    pub fn scaling(&self) -> &[f64] {
        &self.scaling
    }

    pub fn scaling_mut(&mut self) -> &mut [f64] {
        &mut self.scaling
    }

    pub fn level(&self, level: usize) -> &[f64] {
        &self.details[level]
    }

    pub fn level_mut(&mut self, level: usize) -> &mut [f64] {
        &mut self.details[level]
    }

    pub fn details(&self) -> &[Vec<f64>] {
        &self.details
    }

    /// Coefficient `m^band_{j,k}` for flattened node position `k`.
    pub fn coeff(&self, level: usize, band: usize, k: usize) -> f64 {
        self.details[level][band * self.nodes_at(level) + k]
    }

    pub fn set_coeff(&mut self, level: usize, band: usize, k: usize, value: f64) {
        let n = self.nodes_at(level);
        self.details[level][band * n + k] = value;
    }

    /// Band values of node `(level, k)`.
    pub fn node_coeffs(&self, level: usize, k: usize) -> impl Iterator<Item = f64> + '_ {
        let n = self.nodes_at(level);
        (0..self.bands()).map(move |b| self.details[level][b * n + k])
    }

    /// Total number of coefficients, scaling included.
    pub fn len(&self) -> usize {
        self.scaling.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sum of squares of every coefficient.
    pub fn energy(&self) -> f64 {
        self.scaling.iter().map(|v| v * v).sum::<f64>()
            + self
                .details
                .iter()
                .flat_map(|l| l.iter())
                .map(|v| v * v)
                .sum::<f64>()
    }

    /// Multiply every coefficient (scaling included) by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.scaling.iter_mut().for_each(|v| *v *= factor);
        out.details
            .iter_mut()
            .flat_map(|l| l.iter_mut())
            .for_each(|v| *v *= factor);
        out
    }

    /// Apply `f` to every detail coefficient, leaving the scaling block intact.
    pub fn map_details(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.details
            .iter_mut()
            .flat_map(|l| l.iter_mut())
            .for_each(|v| *v = f(*v));
        out
    }

    /// Flat copy: scaling first, then levels `0..=J`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut flat = self.scaling.clone();
        for l in &self.details {
            flat.extend_from_slice(l);
        }
        flat
    }
}

/// Full-depth orthonormal analysis of `signal`.
pub fn forward_dwt(signal: &DyadicSignal, basis: &WaveletBasis) -> Result<Pyramid> {
    let depth = signal.depth();
    let side = signal.side();
    if signal.len() != side.pow(signal.dim() as u32) {
        return Err(Error::dim("signal length does not match its depth"));
    }
    let mut details = vec![Vec::new(); depth + 1];
    match signal.dim() {
        1 => {
            let mut work = signal.values().to_vec();
            let mut out = vec![0.0; side];
            let mut n = side;
            while n >= 2 {
                basis.analyze(&work[..n], &mut out[..n]);
                let level = n.trailing_zeros() as usize - 1;
                details[level] = out[n / 2..n].to_vec();
                work[..n / 2].copy_from_slice(&out[..n / 2]);
                n /= 2;
            }
            Pyramid::from_parts(1, depth, basis.family(), vec![work[0]], details)
        }
        2 => {
            let mut img = signal.values().to_vec();
            let mut n = side;
            let mut line = vec![0.0; side];
            let mut out = vec![0.0; side];
            while n >= 2 {
                // rows
                for r in 0..n {
                    let row = &mut img[r * side..r * side + n];
                    basis.analyze(row, &mut out[..n]);
                    row.copy_from_slice(&out[..n]);
                }
                // columns
                for c in 0..n {
                    for r in 0..n {
                        line[r] = img[r * side + c];
                    }
                    basis.analyze(&line[..n], &mut out[..n]);
                    for r in 0..n {
                        img[r * side + c] = out[r];
                    }
                }
                let h = n / 2;
                let level = h.trailing_zeros() as usize;
                let mut bands = Vec::with_capacity(3 * h * h);
                // band 0: column-highpass (right), band 1: row-highpass (bottom), band 2: diagonal
                for (r0, c0) in [(0, h), (h, 0), (h, h)] {
                    for r in 0..h {
                        bands.extend_from_slice(
                            &img[(r0 + r) * side + c0..(r0 + r) * side + c0 + h],
                        );
                    }
                }
                details[level] = bands;
                n = h;
            }
            Pyramid::from_parts(2, depth, basis.family(), vec![img[0]], details)
        }
        d => Err(Error::dim(format!("unsupported dimension {d}"))),
    }
}

/// Synthesis; exact inverse of [`forward_dwt`].
pub fn inverse_dwt(pyramid: &Pyramid) -> Result<DyadicSignal> {
    // re-validate in case the caller mutated levels through the raw accessors
    let pyramid = Pyramid::from_parts(
        pyramid.dim,
        pyramid.depth,
        pyramid.family,
        pyramid.scaling.clone(),
        pyramid.details.clone(),
    )?;
    let basis = WaveletBasis::new(pyramid.family());
    let depth = pyramid.depth();
    let side = 1usize << (depth + 1);
    match pyramid.dim() {
        1 => {
            let mut work = vec![0.0; side];
            let mut out = vec![0.0; side];
            work[0] = pyramid.scaling()[0];
            let mut n = 2;
            while n <= side {
                let level = n.trailing_zeros() as usize - 1;
                work[n / 2..n].copy_from_slice(pyramid.level(level));
                basis.synthesize(&work[..n], &mut out[..n]);
                work[..n].copy_from_slice(&out[..n]);
                n *= 2;
            }
            DyadicSignal::from_1d(work)
        }
        _ => {
            let mut img = vec![0.0; side * side];
            img[0] = pyramid.scaling()[0];
            let mut line = vec![0.0; side];
            let mut out = vec![0.0; side];
            let mut n = 2;
            while n <= side {
                let h = n / 2;
                let level = h.trailing_zeros() as usize;
                let bands = pyramid.level(level);
                for (b, (r0, c0)) in [(0, h), (h, 0), (h, h)].into_iter().enumerate() {
                    for r in 0..h {
                        let src = &bands[b * h * h + r * h..b * h * h + (r + 1) * h];
                        img[(r0 + r) * side + c0..(r0 + r) * side + c0 + h].copy_from_slice(src);
                    }
                }
                for c in 0..n {
                    for r in 0..n {
                        line[r] = img[r * side + c];
                    }
                    basis.synthesize(&line[..n], &mut out[..n]);
                    for r in 0..n {
                        img[r * side + c] = out[r];
                    }
                }
                for r in 0..n {
                    let row = &mut img[r * side..r * side + n];
                    basis.synthesize(row, &mut out[..n]);
                    row.copy_from_slice(&out[..n]);
                }
                n *= 2;
            }
            DyadicSignal::from_2d(side, img)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn haar_constant_signal_collapses_to_scaling() {
        let s = DyadicSignal::from_1d(vec![1.0; 4]).unwrap();
        let p = forward_dwt(&s, &WaveletBasis::haar()).unwrap();
        assert!((p.scaling()[0] - 2.0).abs() < 1e-15);
        assert!(p.details().iter().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn haar_two_point_difference() {
        let s = DyadicSignal::from_1d(vec![1.0, -1.0]).unwrap();
        let p = forward_dwt(&s, &WaveletBasis::haar()).unwrap();
        assert_eq!(p.depth(), 0);
        assert!(p.scaling()[0].abs() < 1e-15);
        assert!((p.level(0)[0] - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn haar_round_trip_small() {
        let s = DyadicSignal::from_1d(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let p = forward_dwt(&s, &WaveletBasis::haar()).unwrap();
        let back = inverse_dwt(&p).unwrap();
        assert!(close(back.values(), &[1.0, 2.0, 3.0, 4.0], 1e-14));
    }

    #[test]
    fn zero_pyramid_synthesizes_zero() {
        let p = Pyramid::zeros(2, 2, WaveletFamily::Daubechies2).unwrap();
        let s = inverse_dwt(&p).unwrap();
        assert_eq!(s.side(), 8);
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn scaling_only_pyramid_is_constant() {
        let mut p = Pyramid::zeros(1, 1, WaveletFamily::Haar).unwrap();
        p.scaling_mut()[0] = 2.0;
        let s = inverse_dwt(&p).unwrap();
        assert!(close(s.values(), &[1.0; 4], 1e-15));
    }

    #[test]
    fn rejects_non_dyadic_lengths() {
        assert!(matches!(
            DyadicSignal::from_1d(vec![0.0; 6]),
            Err(Error::Dimension(_))
        ));
        assert!(DyadicSignal::from_1d(vec![0.0]).is_err());
        assert!(DyadicSignal::from_2d(4, vec![0.0; 15]).is_err());
        assert!(DyadicSignal::from_1d(vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn malformed_pyramid_is_rejected() {
        let err = Pyramid::from_parts(
            1,
            2,
            WaveletFamily::Haar,
            vec![0.0],
            vec![vec![0.0], vec![0.0; 2], vec![0.0; 3]],
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn db2_filters_are_orthonormal() {
        let b = WaveletBasis::db2();
        let h = b.lowpass();
        let g = b.highpass();
        let dot = |a: &[f64], b: &[f64], shift: usize| -> f64 {
            (0..a.len())
                .filter(|&t| t + shift < b.len())
                .map(|t| a[t + shift] * b[t])
                .sum()
        };
        assert!((dot(h, h, 0) - 1.0).abs() < 1e-15);
        assert!(dot(h, h, 2).abs() < 1e-15);
        assert!((dot(g, g, 0) - 1.0).abs() < 1e-15);
        assert!(dot(h, g, 0).abs() < 1e-15);
        assert!((h.iter().sum::<f64>() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pyramid_sizes_match_sample_count() {
        for (dim, depth) in [(1, 0), (1, 5), (2, 0), (2, 3)] {
            let s = DyadicSignal::zeros(dim, depth).unwrap();
            let p = forward_dwt(&s, &WaveletBasis::db2()).unwrap();
            assert_eq!(p.len(), s.len());
            for j in 0..=depth {
                assert_eq!(p.level(j).len(), p.bands() * p.nodes_at(j));
            }
        }
    }
}
