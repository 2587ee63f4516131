//! Brute-force reference: the bath is replaced by finitely many oscillators
//! and the resulting quadratic Hamiltonian is solved exactly.
//!
//! Two independent evaluation paths are provided. [`NormalModeOracle`]
//! diagonalizes each exchange channel (one system coordinate coupled to N
//! modes, an arrowhead matrix) through its secular equation and needs only
//! O(N) memory, which makes thousands of modes cheap. [`GlobalGaussianState`]
//! keeps the full (4+4N)-dimensional covariance and propagates it with a
//! matrix exponential; it is meant for small N and cross-checks the first.
//!
//! Conventions: mode masses are 1, the channel couplings are
//! c±ₖ = √2 gₖ cos(ωₖr/2) and √2 gₖ sin(ωₖr/2) with gₖ² = 2ωₖJ(ωₖ)Δω, and the
//! counter-term adds Σₖ c±ₖ²/ωₖ² to the channel stiffness so that only
//! retarded couplings remain.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, Matrix2};

use crate::covariance::{CovarianceMatrix, TimeLabel};
use crate::entanglement::ensure_physical;
use crate::error::{Error, Result};
use crate::greens::{from_channels, Channel};
use crate::kernels::thermal_factor;
use crate::model::{spectral_density, ModelParams};

/// One bath oscillator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathMode {
    pub omega: f64,
    pub coupling: f64,
}

/// Discretized bath on the midpoint grid ωₖ = (k − ½)Δω, shared by both
/// channels.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBath {
    pub modes: Vec<BathMode>,
    pub k_spacing: f64,
    pub n_modes: usize,
    pub mode_mass: f64,
}

impl DiscreteBath {
    /// 2π/Δω, beyond which the discrete bath stops acting as a continuum.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.k_spacing
    }

    /// Fails unless t < t_rec/2.
    pub fn ensure_horizon(&self, t: f64) -> Result<()> {
        let horizon = 0.5 * self.recurrence_time();
        if t >= horizon {
            return Err(Error::Recurrence { horizon, t });
        }
        Ok(())
    }

    pub fn omega_max(&self) -> f64 {
        self.k_spacing * self.n_modes as f64
    }

    /// Couplings of the channel coordinate u± to each mode.
    pub fn channel_couplings(&self, channel: Channel, distance: f64) -> Vec<f64> {
        self.modes
            .iter()
            .map(|m| {
                let phase = 0.5 * m.omega * distance;
                let proj = match channel {
                    Channel::Symmetric => phase.cos(),
                    Channel::Antisymmetric => phase.sin(),
                };
                std::f64::consts::SQRT_2 * m.coupling * proj
            })
            .collect()
    }
}

/// Linear grid with Δω = ω_max/N and gₖ² = 2ωₖJ(ωₖ)Δω.
pub fn build_bath(params: &ModelParams, n_modes: usize, omega_max_bath: f64) -> Result<DiscreteBath> {
    let params = params.validate()?;
    if n_modes < 100 {
        return Err(Error::InvalidParameter {
            field: "n_modes",
            reason: format!("at least 100 modes are required, got {n_modes}"),
        });
    }
    if !(omega_max_bath >= 20.0 * params.omega_cut) {
        return Err(Error::InvalidParameter {
            field: "omega_max_bath",
            reason: format!(
                "must be at least 20 times the cutoff ({}), got {omega_max_bath}",
                20.0 * params.omega_cut
            ),
        });
    }
    let dw = omega_max_bath / n_modes as f64;
    let modes = (1..=n_modes)
        .map(|k| {
            let omega = (k as f64 - 0.5) * dw;
            let coupling = (2.0 * omega * spectral_density(omega, &params) * dw).sqrt();
            BathMode { omega, coupling }
        })
        .collect();
    Ok(DiscreteBath {
        modes,
        k_spacing: dw,
        n_modes,
        mode_mass: 1.0,
    })
}

/// Bath for comparisons up to `horizon` with N modes: Δω chosen so that
/// t_rec/2 exceeds the horizon by 5% at N = 2000 and shrinking like N^{−1/2},
/// so that doubling N improves both the low- and high-frequency resolution.
pub fn bath_for_horizon(params: &ModelParams, n_modes: usize, horizon: f64) -> Result<DiscreteBath> {
    let base = PI / (1.05 * horizon.max(1e-3));
    let dw = base * (2000.0 / n_modes as f64).sqrt().min(1.0);
    let w = (dw * n_modes as f64).max(20.0 * params.omega_cut);
    let bath = build_bath(params, n_modes, w)?;
    bath.ensure_horizon(horizon)?;
    Ok(bath)
}

/// Eigen-decomposition of one channel's potential matrix
/// V = [[v₀, cᵀ], [c, diag(ωₖ²)]] via its secular equation
/// f(λ) = v₀ − λ − Σ cₖ²/(ωₖ² − λ) = 0.
///
/// Each root is stored as an anchor pole plus an offset, which keeps
/// λ − ωₖ² accurate to relative precision and the eigenvectors
/// yₖ = cₖ/(λ − ωₖ²) orthogonal.
#[derive(Debug, Clone)]
struct ChannelModes {
    /// Non-deflated bath indices.
    active: Vec<usize>,
    poles: Vec<f64>,
    couplings: Vec<f64>,
    /// (anchor index into `poles`, offset)
    roots: Vec<(usize, f64)>,
    norms: Vec<f64>,
    frequencies: Vec<f64>,
}

impl ChannelModes {
    fn new(v0: f64, poles_all: &[f64], couplings_all: &[f64]) -> Result<Self> {
        let scale = couplings_all.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let mut active = Vec::new();
        for (k, &c) in couplings_all.iter().enumerate() {
            if c.abs() > 1e-13 * scale.max(1e-300) && c != 0.0 {
                active.push(k);
            }
        }
        let poles: Vec<f64> = active.iter().map(|&k| poles_all[k]).collect();
        let couplings: Vec<f64> = active.iter().map(|&k| couplings_all[k]).collect();
        let m = poles.len();
        if m == 0 {
            return Ok(Self {
                active,
                poles,
                couplings,
                roots: vec![(usize::MAX, v0)],
                norms: vec![1.0],
                frequencies: vec![v0.sqrt()],
            });
        }
        let z: Vec<f64> = couplings.iter().map(|c| c * c).collect();
        let sum_abs: f64 = couplings.iter().map(|c| c.abs()).sum();
        let lowest = (v0 - sum_abs).min(poles[0] - couplings[0].abs()) - 1.0;
        let highest = (v0 + sum_abs).max(poles[m - 1] + couplings[m - 1].abs()) + 1.0;

        // f(p_a + δ) and f′, with pᵢ − λ = (pᵢ − p_a) − δ
        let secular = |a: usize, delta: f64| -> (f64, f64) {
            let pa = poles[a];
            let mut f = v0 - pa - delta;
            let mut df = -1.0;
            for i in 0..m {
                let gap = (poles[i] - pa) - delta;
                let q = z[i] / gap;
                f -= q;
                df -= q / gap;
            }
            (f, df)
        };

        let mut roots = Vec::with_capacity(m + 1);
        for j in 0..=m {
            // root lies between left and right (poles or the outer bounds)
            let (anchor, mut lo, mut hi) = if j == 0 {
                (0, lowest - poles[0], 0.0)
            } else if j == m {
                (m - 1, 0.0, highest - poles[m - 1])
            } else {
                let mid = 0.5 * (poles[j] - poles[j - 1]);
                let (f_mid, _) = secular(j - 1, mid);
                if f_mid > 0.0 {
                    // root in (mid, p_j): anchor at p_j, δ ∈ (−mid, 0)
                    (j, -mid, 0.0)
                } else {
                    (j - 1, 0.0, mid)
                }
            };
            let mut delta = 0.5 * (lo + hi);
            for _ in 0..200 {
                let (f, df) = secular(anchor, delta);
                if f == 0.0 {
                    break;
                }
                // f decreases in δ: positive f means the root is to the right
                if f > 0.0 {
                    lo = delta;
                } else {
                    hi = delta;
                }
                let newton = delta - f / df;
                let next = if newton > lo && newton < hi {
                    newton
                } else {
                    0.5 * (lo + hi)
                };
                let converged = (next - delta).abs() <= 4.0 * f64::EPSILON * next.abs().max(f64::MIN_POSITIVE)
                    || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs());
                delta = next;
                if converged {
                    break;
                }
            }
            roots.push((anchor, delta));
        }

        let mut norms = Vec::with_capacity(m + 1);
        let mut frequencies = Vec::with_capacity(m + 1);
        for &(a, delta) in &roots {
            let lambda = poles[a] + delta;
            if !(lambda > 0.0) {
                return Err(Error::InvalidParameter {
                    field: "bath",
                    reason: format!("potential is not positive definite (eigenvalue {lambda:e})"),
                });
            }
            let mut n2 = 1.0;
            for i in 0..m {
                let y = couplings[i] / (delta - (poles[i] - poles[a]));
                n2 += y * y;
            }
            norms.push(n2.sqrt());
            frequencies.push(lambda.sqrt());
        }
        Ok(Self {
            active,
            poles,
            couplings,
            roots,
            norms,
            frequencies,
        })
    }

    /// Eigenvector component i (0 = system, i ≥ 1 = active mode i−1) of root j.
    #[inline]
    fn component(&self, i: usize, j: usize) -> f64 {
        let n = self.norms[j];
        if i == 0 {
            return 1.0 / n;
        }
        let (a, delta) = self.roots[j];
        let k = i - 1;
        self.couplings[k] / ((delta - (self.poles[k] - self.poles[a])) * n)
    }

    /// Channel covariance blocks [uu, vv, uv] at the given times for an
    /// initial product of the system vacuum and thermal bath modes.
    fn covariance(&self, times: &[f64], bath: &DiscreteBath, temperature: f64) -> Vec<[f64; 3]> {
        let n = self.active.len() + 1;
        let n_t = times.len();
        // initial variances (doubled convention): system 1, modes coth/ω and ω·coth
        let mut var_q = vec![1.0; n];
        let mut var_p = vec![1.0; n];
        for (slot, &k) in self.active.iter().enumerate() {
            let w = bath.modes[k].omega;
            let coth = thermal_factor(w, temperature);
            var_q[slot + 1] = coth / w;
            var_p[slot + 1] = coth * w;
        }
        // rows: time-major coefficient arrays a, b, a′, b′ over i
        let mut a = vec![0.0; n_t * n];
        let mut b = vec![0.0; n_t * n];
        let mut ad = vec![0.0; n_t * n];
        let mut bd = vec![0.0; n_t * n];
        let mut column = vec![0.0; n];
        let mut trig = vec![(0.0, 0.0); n_t];
        for j in 0..self.roots.len() {
            for (i, c) in column.iter_mut().enumerate() {
                *c = self.component(i, j);
            }
            let w0 = column[0];
            let nu = self.frequencies[j];
            for (k, &t) in times.iter().enumerate() {
                trig[k] = (nu * t).sin_cos();
            }
            for (k, &(s, c)) in trig.iter().enumerate() {
                let (fa, fb, fad) = (w0 * c, w0 * s / nu, -w0 * nu * s);
                let row = k * n;
                for (i, &o) in column.iter().enumerate() {
                    a[row + i] += fa * o;
                    b[row + i] += fb * o;
                    ad[row + i] += fad * o;
                    bd[row + i] += fa * o;
                }
            }
        }
        (0..n_t)
            .map(|k| {
                let row = k * n;
                let mut out = [0.0; 3];
                for i in 0..n {
                    let (x, y, dx, dy) = (a[row + i], b[row + i], ad[row + i], bd[row + i]);
                    out[0] += x * x * var_q[i] + y * y * var_p[i];
                    out[1] += dx * dx * var_q[i] + dy * dy * var_p[i];
                    out[2] += x * dx * var_q[i] + y * dy * var_p[i];
                }
                out
            })
            .collect()
    }
}

/// Reduced two-oscillator covariance from the exact normal modes of the
/// discretized model.
#[derive(Debug, Clone)]
pub struct NormalModeOracle {
    pub params: ModelParams,
    pub bath: DiscreteBath,
    channels: [ChannelModes; 2],
}

impl NormalModeOracle {
    pub fn new(params: &ModelParams, bath: DiscreteBath) -> Result<Self> {
        Self::with_counter_term(params, bath, true)
    }

    /// `counter_term = false` drops the stiffness shift Σc²/ω², which
    /// renormalizes the oscillator frequency (and can destabilize it).
    pub fn with_counter_term(params: &ModelParams, bath: DiscreteBath, counter_term: bool) -> Result<Self> {
        let params = params.validate()?;
        let poles: Vec<f64> = bath.modes.iter().map(|m| m.omega * m.omega).collect();
        let build = |ch: Channel| -> Result<ChannelModes> {
            let c = bath.channel_couplings(ch, params.distance);
            let shift: f64 = if counter_term {
                c.iter().zip(&poles).map(|(c, p)| c * c / p).sum()
            } else {
                0.0
            };
            ChannelModes::new(params.omega0 * params.omega0 + shift, &poles, &c)
        };
        let channels = [build(Channel::Symmetric)?, build(Channel::Antisymmetric)?];
        Ok(Self { params, bath, channels })
    }

    /// Reduced covariance at each time, starting from the ground state of
    /// both oscillators and a thermal bath.
    pub fn reduced_covariance(&self, times: &[f64]) -> Result<Vec<CovarianceMatrix>> {
        if let Some(&t) = times.iter().max_by(|a, b| a.total_cmp(b)) {
            self.bath.ensure_horizon(t)?;
        }
        let plus = self.channels[0].covariance(times, &self.bath, self.params.temperature);
        let minus = self.channels[1].covariance(times, &self.bath, self.params.temperature);
        let block = |b: [f64; 3]| Matrix2::new(b[0], b[2], b[2], b[1]);
        times
            .iter()
            .zip(plus.iter().zip(&minus))
            .map(|(&t, (p, m))| {
                let c = from_channels(&block(*p), &block(*m));
                CovarianceMatrix::new((c + c.transpose()) * 0.5, TimeLabel::At(t))
            })
            .collect()
    }

    /// Normal-mode frequencies of a channel.
    pub fn channel_frequencies(&self, channel: Channel) -> &[f64] {
        &self.channels[channel.index()].frequencies
    }
}

/// Full Gaussian state of oscillators and bath.
///
/// Phase-space ordering: (Q₁, Q₂, P₁, P₂), then the symmetric-channel modes
/// (q₁…q_N, p₁…p_N), then the antisymmetric-channel modes in the same
/// layout. The Hamiltonian is H = yᵀ·hamiltonian_matrix·y.
#[derive(Debug, Clone)]
pub struct GlobalGaussianState {
    pub covariance: DMatrix<f64>,
    pub hamiltonian_matrix: DMatrix<f64>,
    pub n_modes: usize,
    pub time: f64,
    recurrence_time: f64,
}

impl GlobalGaussianState {
    /// Oscillators in their ground state, bath thermal at the model
    /// temperature.
    pub fn initial(params: &ModelParams, bath: &DiscreteBath, counter_term: bool) -> Result<Self> {
        let params = params.validate()?;
        let n = bath.n_modes;
        let dim = 4 + 4 * n;
        let mut h = DMatrix::zeros(dim, dim);
        let mut cov = DMatrix::zeros(dim, dim);
        let cp = bath.channel_couplings(Channel::Symmetric, params.distance);
        let cm = bath.channel_couplings(Channel::Antisymmetric, params.distance);
        let (mut shift_p, mut shift_m) = (0.0, 0.0);
        if counter_term {
            for (k, m) in bath.modes.iter().enumerate() {
                let w2 = m.omega * m.omega;
                shift_p += cp[k] * cp[k] / w2;
                shift_m += cm[k] * cm[k] / w2;
            }
        }
        let w2 = params.omega0 * params.omega0;
        // ½·Qᵀ V Q with V the channel stiffnesses rotated back to (Q₁, Q₂)
        h[(0, 0)] = 0.5 * (w2 + 0.5 * (shift_p + shift_m));
        h[(1, 1)] = h[(0, 0)];
        h[(0, 1)] = 0.25 * (shift_p - shift_m);
        h[(1, 0)] = h[(0, 1)];
        h[(2, 2)] = 0.5;
        h[(3, 3)] = 0.5;
        for i in 0..4 {
            cov[(i, i)] = 1.0;
        }
        for (c, couplings) in [(0usize, &cp), (1usize, &cm)] {
            let base = 4 + 2 * n * c;
            let sign = if c == 0 { 1.0 } else { -1.0 };
            for (k, m) in bath.modes.iter().enumerate() {
                let q = base + k;
                let p = base + n + k;
                h[(q, q)] = 0.5 * m.omega * m.omega;
                h[(p, p)] = 0.5;
                // −c u q with u± = (Q₁ ± Q₂)/√2, split over the symmetric pair
                let x = -0.5 * couplings[k] * FRAC_1_SQRT_2;
                h[(0, q)] = x;
                h[(q, 0)] = x;
                h[(1, q)] = sign * x;
                h[(q, 1)] = sign * x;
                let coth = thermal_factor(m.omega, params.temperature);
                cov[(q, q)] = coth / m.omega;
                cov[(p, p)] = coth * m.omega;
            }
        }
        Ok(Self {
            covariance: cov,
            hamiltonian_matrix: h,
            n_modes: n,
            time: 0.0,
            recurrence_time: bath.recurrence_time(),
        })
    }

    /// tr(𝓗C), proportional to the mean energy.
    pub fn energy(&self) -> f64 {
        (&self.hamiltonian_matrix * &self.covariance).trace()
    }
}

/// Symplectic form of the global phase space.
pub fn global_symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let dim = 4 + 4 * n_modes;
    let mut s = DMatrix::zeros(dim, dim);
    let mut pair = |q: usize, p: usize| {
        s[(q, p)] = 1.0;
        s[(p, q)] = -1.0;
    };
    pair(0, 2);
    pair(1, 3);
    for c in 0..2 {
        let base = 4 + 2 * n_modes * c;
        for k in 0..n_modes {
            pair(base + k, base + n_modes + k);
        }
    }
    s
}

/// S(t) = exp(2tΣ𝓗), the propagator of ẏ = Σ∇H for H = yᵀ𝓗y.
pub fn symplectic_propagator(hamiltonian_matrix: &DMatrix<f64>, n_modes: usize, t: f64) -> DMatrix<f64> {
    let sigma = global_symplectic_form(n_modes);
    ((sigma * hamiltonian_matrix) * (2.0 * t)).exp()
}

/// C ← S(t) C S(t)ᵀ, checking symplecticity of S.
pub fn evolve(state: &GlobalGaussianState, t: f64) -> Result<GlobalGaussianState> {
    let total = state.time + t;
    if total >= 0.5 * state.recurrence_time {
        return Err(Error::Recurrence {
            horizon: 0.5 * state.recurrence_time,
            t: total,
        });
    }
    let s = symplectic_propagator(&state.hamiltonian_matrix, state.n_modes, t);
    let sigma = global_symplectic_form(state.n_modes);
    let deviation = (&s * &sigma * s.transpose() - &sigma).amax();
    if deviation > 1e-8 {
        return Err(Error::Symplecticity { deviation });
    }
    Ok(GlobalGaussianState {
        covariance: &s * &state.covariance * s.transpose(),
        hamiltonian_matrix: state.hamiltonian_matrix.clone(),
        n_modes: state.n_modes,
        time: total,
        recurrence_time: state.recurrence_time,
    })
}

/// The 4×4 oscillator block. Velocities equal momenta for unit masses, so
/// no rescaling is needed in dimensionless units.
pub fn reduce_to_system(state: &GlobalGaussianState) -> Result<CovarianceMatrix> {
    let c = state.covariance.fixed_view::<4, 4>(0, 0).into_owned();
    let c = CovarianceMatrix::new((c + c.transpose()) * 0.5, TimeLabel::At(state.time))?;
    ensure_physical(&c, 1e-6)?;
    Ok(c)
}
