//! Nakagami-m channel generation.
//!
//! Channel entries are drawn as `sqrt(psi) + CN(0, omega_var)`, where `psi`
//! is the squared mean and `omega_var` the variance of a Nakagami-m amplitude
//! with spread `omega_total`. This is the element model whose Gram
//! expectation is `M * (omega_var * I + psi * J)` for a stacked `2M x M`
//! channel.

use crate::{CMatrix, Error, Result, C64};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

/// Nakagami-m shape and spread.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NakagamiParams {
    pub m: f64,
    pub omega_total: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, omega_total: f64) -> Result<Self> {
        let params = Self { m, omega_total };
        params.validate()?;
        Ok(params)
    }

    /// Rayleigh fading, the `m = 1` member of the family.
    pub fn rayleigh(omega_total: f64) -> Result<Self> {
        Self::new(1.0, omega_total)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m >= 0.5) || !self.m.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Nakagami shape m must be >= 0.5, got {}",
                self.m
            )));
        }
        if !(self.omega_total > 0.0) || !self.omega_total.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "Nakagami spread must be > 0, got {}",
                self.omega_total
            )));
        }
        Ok(())
    }
}

/// Squared mean (`psi`) and variance (`omega_var`) of a channel element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentDecomposition {
    pub psi: f64,
    pub omega_var: f64,
}

impl MomentDecomposition {
    pub fn new(psi: f64, omega_var: f64) -> Result<Self> {
        if !(psi >= 0.0) || !psi.is_finite() || !(omega_var >= 0.0) || !omega_var.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "moments must be finite and non-negative, got psi={psi}, omega_var={omega_var}"
            )));
        }
        Ok(Self { psi, omega_var })
    }

    pub fn omega_total(&self) -> f64 {
        self.psi + self.omega_var
    }

    /// Normalized cross-correlation `psi / (omega_var + psi)` between two
    /// distinct rows of a stacked channel.
    pub fn correlation(&self) -> f64 {
        let total = self.omega_total();
        if total > 0.0 {
            self.psi / total
        } else {
            0.0
        }
    }
}

/// Reduce a Nakagami-m amplitude to its mean-squared / variance pair.
///
/// `E[r] = Γ(m + 1/2) / Γ(m) * sqrt(Ω / m)`, `psi = E[r]^2`,
/// `omega_var = Ω - psi`. Log-gamma keeps this stable for very large `m`.
pub fn derive_moments(params: &NakagamiParams) -> Result<MomentDecomposition> {
    params.validate()?;
    let NakagamiParams { m, omega_total } = *params;
    let gamma_ratio = (ln_gamma(m + 0.5) - ln_gamma(m)).exp();
    let mean_sq = gamma_ratio * gamma_ratio * omega_total / m;
    // rounding can push the ratio a hair above 1 for huge m
    let psi = mean_sq.min(omega_total);
    Ok(MomentDecomposition {
        psi,
        omega_var: omega_total - psi,
    })
}

/// Square `M x M` complex channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(CMatrix);

impl ChannelMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() == 0 || entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "channel matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidParameter(
                "channel matrix has non-finite entries".into(),
            ));
        }
        Ok(Self(entries))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    /// Multiply every entry by a real amplitude factor (e.g. `sqrt(path_gain)`).
    pub fn scaled(mut self, amplitude: f64) -> Self {
        self.0 *= C64::new(amplitude, 0.0);
        self
    }
}

/// Draw one `M x M` channel with i.i.d. entries `sqrt(psi) + CN(0, omega_var)`.
///
/// Draws are consumed in column-major order, real part before imaginary.
pub fn sample_channel<R: Rng + ?Sized>(
    moments: &MomentDecomposition,
    dim: usize,
    rng: &mut R,
) -> Result<ChannelMatrix> {
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "channel dimension must be >= 1".into(),
        ));
    }
    let mean = moments.psi.sqrt();
    let scale = (moments.omega_var / 2.0).sqrt();
    let entries = CMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(mean + scale * re, scale * im)
    });
    Ok(ChannelMatrix(entries))
}

/// Vertical concatenation `[top; bottom]` of two point-wise channels.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedChannel {
    top: ChannelMatrix,
    bottom: ChannelMatrix,
    combined: CMatrix,
}

impl StackedChannel {
    pub fn top(&self) -> &ChannelMatrix {
        &self.top
    }

    pub fn bottom(&self) -> &ChannelMatrix {
        &self.bottom
    }

    /// The `2M x M` matrix.
    pub fn combined(&self) -> &CMatrix {
        &self.combined
    }

    pub fn dim(&self) -> usize {
        self.top.dim()
    }
}

pub fn stack(top: &ChannelMatrix, bottom: &ChannelMatrix) -> Result<StackedChannel> {
    let dim = top.dim();
    if bottom.dim() != dim {
        return Err(Error::DimensionMismatch(format!(
            "cannot stack {dim}x{dim} over {0}x{0}",
            bottom.dim()
        )));
    }
    let mut combined = CMatrix::zeros(2 * dim, dim);
    combined
        .view_mut((0, 0), (dim, dim))
        .copy_from(top.entries());
    combined
        .view_mut((dim, 0), (dim, dim))
        .copy_from(bottom.entries());
    Ok(StackedChannel {
        top: top.clone(),
        bottom: bottom.clone(),
        combined,
    })
}

/// `E[S S^H]` for a stacked channel: `M * (omega_var + psi)` on the diagonal,
/// `M * psi` everywhere else.
pub fn expected_gram(moments: &MomentDecomposition, dim: usize) -> CMatrix {
    let n = 2 * dim;
    let m = dim as f64;
    CMatrix::from_fn(n, n, |i, j| {
        let v = if i == j {
            m * (moments.omega_var + moments.psi)
        } else {
            m * moments.psi
        };
        C64::new(v, 0.0)
    })
}
