//! Interference-driver beamforming.
//!
//! For an overlapping pair (A, C) each transmitter owns a driver matrix that
//! solves a least-squares fit of its stacked channel towards a phase-rotated
//! correlation target, coupled to the other node's driver:
//!
//! ```text
//! M_AC = P_A (Θ_A - S_A' M_CA)
//! M_CA = P_C (Θ_C - S_C' M_AC)
//! ```
//!
//! with `P_X` the left pseudoinverse of the `2M x M` stacked channel `S_X`.
//! A node's beamformer is the product of its drivers over all neighbours.

use crate::channel::{MomentDecomposition, StackedChannel};
use crate::topology::NodeId;
use crate::{CMatrix, Error, Result, C64, DEFAULT_RANK_TOLERANCE};

/// `2M x M` phase-rotated correlation target.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatorMatrix {
    pub entries: CMatrix,
    pub rotation_angle: f64,
}

/// Per-neighbour driver `M_{I,J}` owned by node I, aimed at the overlap with J.
#[derive(Debug, Clone, PartialEq)]
pub struct DriverMatrix {
    pub entries: CMatrix,
    pub owner: NodeId,
    pub target: NodeId,
}

/// Product of one node's drivers, in `factor_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeBeamformer {
    pub entries: CMatrix,
    pub owner: NodeId,
    pub factor_order: Vec<NodeId>,
}

impl CompositeBeamformer {
    /// Beamformer of a node without neighbours: the empty product.
    pub fn identity(owner: NodeId, dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
            owner,
            factor_order: Vec::new(),
        }
    }
}

/// Sum of squared Frobenius norms of the participating beamformers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationG {
    value: f64,
}

impl NormalizationG {
    pub const MIN_VALUE: f64 = 1e-12;

    pub fn new(value: f64) -> Result<Self> {
        if !(value >= Self::MIN_VALUE) || !value.is_finite() {
            return Err(Error::DegenerateNormalization(value));
        }
        Ok(Self { value })
    }

    pub fn unit() -> Self {
        Self { value: 1.0 }
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

/// First `M` columns of the `2M x 2M` normalized correlation matrix
/// (unit diagonal, `psi / (omega_var + psi)` elsewhere), times `e^{j angle}`.
pub fn build_rotator(
    moments: &MomentDecomposition,
    dim: usize,
    rotation_angle: f64,
) -> RotatorMatrix {
    let rho = moments.correlation();
    let phase = C64::from_polar(1.0, rotation_angle);
    let entries = CMatrix::from_fn(
        2 * dim,
        dim,
        |n, r| {
            if n == r {
                phase
            } else {
                phase * rho
            }
        },
    );
    RotatorMatrix {
        entries,
        rotation_angle,
    }
}

/// Reciprocal condition number `σ_min / σ_max` (0 for the zero matrix).
pub fn reciprocal_condition(m: &CMatrix) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    if max > 0.0 {
        sv.min() / max
    } else {
        0.0
    }
}

/// Moore-Penrose left inverse of a tall matrix with full column rank.
///
/// Fails with [`Error::IllConditioned`] when `σ_min / σ_max <= tolerance`.
pub fn left_pseudoinverse_of(m: &CMatrix, tolerance: f64) -> Result<CMatrix> {
    if m.nrows() < m.ncols() || m.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "left inverse needs a tall matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let svd = m.clone().svd(true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let rcond = if max > 0.0 { sv.min() / max } else { 0.0 };
    if !(rcond > tolerance) {
        return Err(Error::IllConditioned {
            rcond,
            threshold: tolerance,
        });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let mut inv_sigma_u_h = u.adjoint();
    for (mut row, s) in inv_sigma_u_h.row_iter_mut().zip(sv.iter()) {
        row /= C64::new(*s, 0.0);
    }
    Ok(v_t.adjoint() * inv_sigma_u_h)
}

/// `P = (S^H S)^{-1} S^H` for a stacked channel, at the default rank tolerance.
pub fn left_pseudoinverse(s: &StackedChannel) -> Result<CMatrix> {
    left_pseudoinverse_of(s.combined(), DEFAULT_RANK_TOLERANCE)
}

/// Inputs of one coupled driver solve. `s_a` / `s_c` are the owners' own
/// stacked channels, `s_a_prime` / `s_c_prime` the cross terms.
#[derive(Debug, Clone, Copy)]
pub struct CoupledDriverProblem<'a> {
    pub node_a: NodeId,
    pub node_c: NodeId,
    pub s_a: &'a StackedChannel,
    pub s_a_prime: &'a StackedChannel,
    pub theta_a: &'a RotatorMatrix,
    pub s_c: &'a StackedChannel,
    pub s_c_prime: &'a StackedChannel,
    pub theta_c: &'a RotatorMatrix,
    pub tolerance: f64,
}

impl<'a> CoupledDriverProblem<'a> {
    pub fn new(
        (node_a, node_c): (NodeId, NodeId),
        (s_a, s_a_prime, theta_a): (&'a StackedChannel, &'a StackedChannel, &'a RotatorMatrix),
        (s_c, s_c_prime, theta_c): (&'a StackedChannel, &'a StackedChannel, &'a RotatorMatrix),
    ) -> Self {
        Self {
            node_a,
            node_c,
            s_a,
            s_a_prime,
            theta_a,
            s_c,
            s_c_prime,
            theta_c,
            tolerance: DEFAULT_RANK_TOLERANCE,
        }
    }

    fn check_dims(&self) -> Result<usize> {
        let dim = self.s_a.dim();
        let stacked = [self.s_a_prime, self.s_c, self.s_c_prime];
        let thetas = [self.theta_a, self.theta_c];
        if stacked.iter().any(|s| s.dim() != dim)
            || thetas
                .iter()
                .any(|t| t.entries.nrows() != 2 * dim || t.entries.ncols() != dim)
        {
            return Err(Error::DimensionMismatch(
                "coupled driver operands must share the antenna dimension".into(),
            ));
        }
        if self.node_a == self.node_c {
            return Err(Error::InvalidParameter(
                "driver owner and target must differ".into(),
            ));
        }
        Ok(dim)
    }

    /// Frobenius residuals of both driver equations for a candidate pair.
    pub fn residuals(&self, m_ac: &CMatrix, m_ca: &CMatrix) -> Result<(f64, f64)> {
        let p_a = left_pseudoinverse_of(self.s_a.combined(), self.tolerance)?;
        let p_c = left_pseudoinverse_of(self.s_c.combined(), self.tolerance)?;
        let r_a = m_ac - &p_a * (&self.theta_a.entries - self.s_a_prime.combined() * m_ca);
        let r_c = m_ca - &p_c * (&self.theta_c.entries - self.s_c_prime.combined() * m_ac);
        Ok((r_a.norm(), r_c.norm()))
    }
}

/// Closed-form solution of the coupled driver equations.
///
/// `M_AC = (I - P_A S_A' P_C S_C')^{-1} P_A (Θ_A - S_A' P_C Θ_C)`, then
/// `M_CA` by back-substitution.
pub fn solve_coupled_drivers(
    problem: &CoupledDriverProblem<'_>,
) -> Result<(DriverMatrix, DriverMatrix)> {
    let dim = problem.check_dims()?;
    let p_a = left_pseudoinverse_of(problem.s_a.combined(), problem.tolerance)?;
    let p_c = left_pseudoinverse_of(problem.s_c.combined(), problem.tolerance)?;
    let s_a_prime = problem.s_a_prime.combined();
    let s_c_prime = problem.s_c_prime.combined();
    let theta_a = &problem.theta_a.entries;
    let theta_c = &problem.theta_c.entries;

    let loop_gain = &p_a * s_a_prime * &p_c * s_c_prime;
    let coupling = CMatrix::identity(dim, dim) - &loop_gain;
    // relative to the scale of I and the loop gain, so that exact cancellation
    // (a coupling matrix of pure rounding noise) is caught
    let sigma_min = coupling.clone().singular_values().min();
    let rcond = sigma_min / (1.0 + loop_gain.clone().singular_values().max());
    if !(rcond > problem.tolerance) {
        return Err(Error::NoUniqueSolution { rcond });
    }
    let rhs = &p_a * (theta_a - s_a_prime * (&p_c * theta_c));
    let m_ac = coupling
        .lu()
        .solve(&rhs)
        .ok_or(Error::NoUniqueSolution { rcond })?;
    let m_ca = &p_c * (theta_c - s_c_prime * &m_ac);
    Ok((
        DriverMatrix {
            entries: m_ac,
            owner: problem.node_a,
            target: problem.node_c,
        },
        DriverMatrix {
            entries: m_ca,
            owner: problem.node_c,
            target: problem.node_a,
        },
    ))
}

/// Product of one owner's drivers in ascending target-id order.
pub fn compose(drivers: &[DriverMatrix]) -> Result<CompositeBeamformer> {
    let first = drivers
        .first()
        .ok_or_else(|| Error::InvalidParameter("compose needs at least one driver".into()))?;
    let dim = first.entries.nrows();
    for d in drivers {
        if d.owner != first.owner {
            return Err(Error::InvalidParameter(format!(
                "drivers of nodes {} and {} cannot be composed",
                first.owner, d.owner
            )));
        }
        if d.entries.nrows() != dim || d.entries.ncols() != dim {
            return Err(Error::DimensionMismatch(
                "drivers differ in dimension".into(),
            ));
        }
    }
    let mut ordered: Vec<&DriverMatrix> = drivers.iter().collect();
    ordered.sort_by_key(|d| d.target);
    let entries = ordered
        .iter()
        .fold(CMatrix::identity(dim, dim), |acc, d| acc * &d.entries);
    Ok(CompositeBeamformer {
        entries,
        owner: first.owner,
        factor_order: ordered.iter().map(|d| d.target).collect(),
    })
}

/// `Σ_I ||M_I||_F^2`, rejected below [`NormalizationG::MIN_VALUE`].
pub fn normalization(composites: &[CompositeBeamformer]) -> Result<NormalizationG> {
    if composites.is_empty() {
        return Err(Error::InvalidParameter(
            "normalization needs at least one beamformer".into(),
        ));
    }
    NormalizationG::new(composites.iter().map(|c| c.entries.norm_squared()).sum())
}
