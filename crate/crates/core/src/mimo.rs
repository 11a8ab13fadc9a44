//! Multi-user MIMO throughput game on a seven-cell network.
//!
//! Seven transmitter/receiver links share the spectrum; link `i` controls its
//! transmit covariance `X_i` (PSD with a power budget on the trace) and earns
//! the throughput
//! `R_i = log det(I + sum_j H_ji X_j H_ji^dagger) - log det(W_{-i})`,
//! where `W_{-i}` is the interference-plus-noise covariance at receiver `i`.
//! The game's equilibrium conditions form a monotone VI with the mapping
//! `F_i(X) = -H_ii^dagger W_i^{-1} H_ii`, which is what the [`MimoOracle`]
//! exposes, optionally corrupted by symmetrized complex Gaussian feedback
//! noise.
//!
//! Channels are Rayleigh: every entry of `H_ji` is an independent circularly
//! symmetric complex Gaussian whose variance is the inverse squared distance
//! between transmitter `j` and receiver `i`, with distances normalized so the
//! direct links have unit variance.

use rand::RngCore;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix};
use crate::vi::{measured_sup_norms, BlockState, ViOracle};

/// Direct-link distance in kilometers; doubles as the normalization constant
/// that gives direct channels unit variance.
pub const DIRECT_LINK_KM: f64 = 0.8944;

/// Transmit power budget corresponding to 1 dBm on a linear milliwatt scale.
pub const POWER_1DBM: f64 = 1.2589254117941673; // 10^{0.1}

/// Eigenvalue floor applied before inverting or taking log-dets of covariance
/// matrices.
const COV_FLOOR: f64 = 1e-12;

/// Transmitter-to-receiver distances (km) for the seven-cell layout; entry
/// `(j, i)` is the distance from transmitter `j` to receiver `i`.
pub const SEVEN_CELL_DISTANCES_KM: [[f64; 7]; 7] = [
    [0.8944, 1.0143, 1.0568, 1.1020, 1.0143, 1.0568, 1.1020],
    [1.0143, 0.8944, 1.0568, 2.1079, 2.6940, 2.6677, 1.9964],
    [1.1020, 1.9011, 0.8944, 1.0143, 2.1079, 2.7265, 2.7203],
    [1.9964, 2.6159, 1.9493, 0.8944, 1.1020, 2.1056, 2.7620],
    [2.5635, 2.6940, 2.6677, 1.9964, 0.8944, 1.0568, 2.1079],
    [2.5270, 2.1079, 2.7265, 2.7203, 1.9011, 0.8944, 1.0143],
    [1.9011, 1.1020, 2.1056, 2.7620, 2.6159, 1.9493, 0.8944],
];

/// Pairwise link distances with the direct links pinned at
/// [`DIRECT_LINK_KM`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    km: [[f64; 7]; 7],
}

impl DistanceMatrix {
    pub fn new(km: [[f64; 7]; 7]) -> Result<Self> {
        for (j, row) in km.iter().enumerate() {
            for (i, &d) in row.iter().enumerate() {
                if d <= 0.0 || !d.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "distance ({j},{i}) must be positive, got {d}"
                    )));
                }
            }
            if row[j] != DIRECT_LINK_KM {
                return Err(Error::InvalidArgument(format!(
                    "direct link {j} must be {DIRECT_LINK_KM} km, got {}",
                    row[j]
                )));
            }
        }
        Ok(Self { km })
    }

    pub fn seven_cell() -> Self {
        Self { km: SEVEN_CELL_DISTANCES_KM }
    }

    /// Distance from transmitter `j` to receiver `i` in kilometers.
    pub fn km(&self, j: usize, i: usize) -> f64 {
        self.km[j][i]
    }

    /// Channel entry variance for the `(j, i)` link:
    /// `1 / (d / DIRECT_LINK_KM)^2`.
    pub fn channel_variance(&self, j: usize, i: usize) -> f64 {
        let normalized = self.km[j][i] / DIRECT_LINK_KM;
        1.0 / (normalized * normalized)
    }
}

/// Draws the full channel set: `channels[j][i]` is the `m x n` matrix of the
/// transmitter-`j`-to-receiver-`i` link, each entry an independent circularly
/// symmetric complex Gaussian with the distance-derived variance. The draw
/// order (j outer, i inner, entries row-major, real before imaginary part) is
/// fixed, so a fixed seed reproduces the set bit for bit.
pub fn generate_channels(
    distances: &DistanceMatrix,
    tx_antennas: usize,
    rx_antennas: usize,
    rng: &mut dyn RngCore,
) -> Vec<Vec<ComplexMatrix>> {
    (0..7)
        .map(|j| {
            (0..7)
                .map(|i| {
                    ComplexMatrix::random_gaussian(
                        rx_antennas,
                        tx_antennas,
                        distances.channel_variance(j, i),
                        rng,
                    )
                })
                .collect()
        })
        .collect()
}

/// Immutable network description: geometry-derived channels, per-player
/// antenna counts, the common power budget, and the feedback noise variance.
#[derive(Debug, Clone)]
pub struct MimoNetwork {
    tx_antennas: Vec<usize>,
    rx_antennas: Vec<usize>,
    /// `channels[j][i]` = channel from transmitter `j` to receiver `i`.
    channels: Vec<Vec<ComplexMatrix>>,
    power: f64,
    sigma: f64,
}

impl MimoNetwork {
    pub fn new(channels: Vec<Vec<ComplexMatrix>>, power: f64, sigma: f64) -> Result<Self> {
        let n = channels.len();
        if n == 0 {
            return Err(Error::InvalidArgument("need at least one player".into()));
        }
        if power <= 0.0 || !power.is_finite() {
            return Err(Error::InvalidArgument("power budget must be positive".into()));
        }
        if sigma < 0.0 {
            return Err(Error::InvalidArgument("noise variance must be nonnegative".into()));
        }
        let mut tx = vec![0usize; n];
        let mut rx = vec![0usize; n];
        for (j, row) in channels.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch("channel table must be square".into()));
            }
            tx[j] = row[0].cols();
            for h in row {
                if h.cols() != tx[j] {
                    return Err(Error::DimensionMismatch(format!(
                        "transmitter {j} has inconsistent antenna counts"
                    )));
                }
            }
        }
        for i in 0..n {
            rx[i] = channels[0][i].rows();
            for (j, row) in channels.iter().enumerate() {
                if row[i].rows() != rx[i] {
                    return Err(Error::DimensionMismatch(format!(
                        "link ({j},{i}) has inconsistent receiver antennas"
                    )));
                }
            }
        }
        Ok(Self { tx_antennas: tx, rx_antennas: rx, channels, power, sigma })
    }

    pub fn num_players(&self) -> usize {
        self.channels.len()
    }

    pub fn tx_antennas(&self, i: usize) -> usize {
        self.tx_antennas[i]
    }

    pub fn rx_antennas(&self, i: usize) -> usize {
        self.rx_antennas[i]
    }

    pub fn channel(&self, j: usize, i: usize) -> &ComplexMatrix {
        &self.channels[j][i]
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn with_power(mut self, power: f64) -> Self {
        assert!(power > 0.0, "power budget must be positive");
        self.power = power;
        self
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.tx_antennas.clone()
    }

    pub fn trace_budgets(&self) -> Vec<f64> {
        vec![self.power; self.num_players()]
    }
}

/// Seven-player network on the bundled seven-cell geometry: `n` transmit and `m` receive
/// antennas per link, channels drawn from `rng`, power budget 1 dBm on the
/// linear scale ([`POWER_1DBM`]; override with [`MimoNetwork::with_power`]).
pub fn build_seven_cell_network(
    tx_antennas: usize,
    rx_antennas: usize,
    sigma: f64,
    rng: &mut dyn RngCore,
) -> Result<MimoNetwork> {
    if tx_antennas == 0 || rx_antennas == 0 {
        return Err(Error::InvalidArgument("antenna counts must be positive".into()));
    }
    let channels =
        generate_channels(&DistanceMatrix::seven_cell(), tx_antennas, rx_antennas, rng);
    MimoNetwork::new(channels, POWER_1DBM, sigma)
}

/// Total received covariance `W_i = I + sum_j H_ji X_j H_ji^dagger` at
/// receiver `i`, optionally skipping transmitter `skip` (for the
/// interference-only covariance).
fn receiver_covariance(
    net: &MimoNetwork,
    x: &BlockState,
    i: usize,
    skip: Option<usize>,
) -> Result<HermitianMatrix> {
    let m = net.rx_antennas(i);
    let mut w = ComplexMatrix::identity(m);
    for j in 0..net.num_players() {
        if Some(j) == skip {
            continue;
        }
        let h = net.channel(j, i);
        let hxh = h.mul(&x.block(j).matrix().to_general()).mul(&h.adjoint());
        w = w.add(&hxh);
    }
    HermitianMatrix::symmetrize(&w)
}

fn log_det_floored(w: &HermitianMatrix) -> Result<f64> {
    Ok(w.eig()?
        .eigenvalues()
        .iter()
        .map(|l| l.max(COV_FLOOR).ln())
        .sum())
}

/// Throughput of link `i` at the joint state `x`.
pub fn payoff(i: usize, x: &BlockState, net: &MimoNetwork) -> Result<f64> {
    let full = receiver_covariance(net, x, i, None)?;
    let without = receiver_covariance(net, x, i, Some(i))?;
    Ok(log_det_floored(&full)? - log_det_floored(&without)?)
}

/// All players' throughputs.
pub fn payoffs(x: &BlockState, net: &MimoNetwork) -> Result<Vec<f64>> {
    (0..net.num_players()).map(|i| payoff(i, x, net)).collect()
}

/// Exact game mapping: block `i` is `-H_ii^dagger W_i^{-1} H_ii` with `W_i`
/// the total covariance at receiver `i`. Each block is symmetrized to kill
/// roundoff, so downstream dual updates stay exactly Hermitian.
pub fn exact_mapping(x: &BlockState, net: &MimoNetwork) -> Result<Vec<HermitianMatrix>> {
    let mut blocks = Vec::with_capacity(net.num_players());
    for i in 0..net.num_players() {
        let w = receiver_covariance(net, x, i, None)?;
        let w_inv = w.eig()?.apply_fn(|l| 1.0 / l.max(COV_FLOOR));
        let h = net.channel(i, i);
        let grad = h.adjoint().mul(&w_inv.to_general()).mul(h);
        blocks.push(HermitianMatrix::symmetrize(&grad)?.scale(-1.0));
    }
    Ok(blocks)
}

/// Stochastic game oracle: samples are the exact mapping plus, per block, a
/// complex Gaussian matrix (entrywise variance `sigma`) symmetrized to
/// Hermitian. Noise bounds are the sampled sup-norms of the noisy mapping
/// with a 1.5 safety factor; override with [`MimoOracle::with_noise_bounds`].
pub struct MimoOracle {
    net: MimoNetwork,
    bounds: Vec<f64>,
}

impl MimoOracle {
    /// `rng` drives the noise-bound estimation (48 sampled states).
    pub fn new(net: MimoNetwork, rng: &mut dyn RngCore) -> Result<Self> {
        let dims = net.block_dims();
        let budgets = net.trace_budgets();
        let probe = Self { net, bounds: vec![] };
        let measured =
            measured_sup_norms(|x, r| probe.sample_inner(x, r), &dims, &budgets, 48, rng)?;
        let bounds = measured.into_iter().map(|c| 1.5 * c.max(1e-12)).collect();
        Ok(Self { net: probe.net, bounds })
    }

    pub fn with_noise_bounds(mut self, bounds: Vec<f64>) -> Self {
        assert_eq!(bounds.len(), self.net.num_players());
        self.bounds = bounds;
        self
    }

    pub fn network(&self) -> &MimoNetwork {
        &self.net
    }

    fn sample_inner(&self, x: &BlockState, rng: &mut dyn RngCore) -> Result<Vec<HermitianMatrix>> {
        let mut blocks = exact_mapping(x, &self.net)?;
        if self.net.sigma() > 0.0 {
            for block in blocks.iter_mut() {
                let raw = ComplexMatrix::random_gaussian(
                    block.dim(),
                    block.dim(),
                    self.net.sigma(),
                    rng,
                );
                *block = block.add(&HermitianMatrix::symmetrize(&raw)?);
            }
        }
        Ok(blocks)
    }
}

impl ViOracle for MimoOracle {
    fn num_players(&self) -> usize {
        self.net.num_players()
    }

    fn block_dims(&self) -> Vec<usize> {
        self.net.block_dims()
    }

    fn trace_budgets(&self) -> Vec<f64> {
        self.net.trace_budgets()
    }

    fn sample(&self, x: &BlockState, rng: &mut dyn RngCore) -> Result<Vec<HermitianMatrix>> {
        self.sample_inner(x, rng)
    }

    fn has_exact(&self) -> bool {
        true
    }

    fn exact(&self, x: &BlockState) -> Result<Vec<HermitianMatrix>> {
        exact_mapping(x, &self.net)
    }

    fn noise_bounds(&self) -> Vec<f64> {
        self.bounds.clone()
    }
}
