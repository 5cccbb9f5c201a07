//! Classically simulated differentiable quantum circuit.
//!
//! Chebyshev-tower feature map: qubit j (1-based) receives
//! R_y(2·j·arccos(x̃)) of the rescaled input x̃ ∈ (−1, 1). The variational
//! circuit is a hardware-efficient ansatz: per layer, R_x·R_z·R_x on every
//! qubit followed by a linear CNOT chain. Readout is total magnetization
//! Σ_i Z_i. Amplitudes are towers, so input derivatives and parameter
//! gradients come from the same machinery as the classical network.

use crate::autodiff::{Scalar, Shape, Tower};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DqcError {
    #[error("input {input} rescales to {rescaled}, outside the open interval (-1, 1)")]
    OutOfDomain { input: f64, rescaled: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqcConfig {
    pub n_qubits: usize,
    pub ansatz_depth: usize,
    /// Problem-domain interval mapped affinely onto [-0.95, 0.95].
    pub domain: [f64; 2],
    pub init_seed: u64,
}

/// Keeps the arccos derivative singularity at |x| = 1 out of reach.
pub const RESCALE_LIMIT: f64 = 0.95;

impl DqcConfig {
    pub fn new(n_qubits: usize, ansatz_depth: usize, domain: [f64; 2], init_seed: u64) -> Self {
        assert!(n_qubits > 0 && n_qubits <= 12);
        assert!(ansatz_depth > 0);
        assert!(domain[1] > domain[0]);
        DqcConfig {
            n_qubits,
            ansatz_depth,
            domain,
            init_seed,
        }
    }

    pub fn n_params(&self) -> usize {
        self.ansatz_depth * self.n_qubits * 3
    }

    pub fn init_params(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.init_seed);
        (0..self.n_params())
            .map(|_| rng.gen_range(0.0..std::f64::consts::TAU))
            .collect()
    }

    pub fn rescale_coeffs(&self) -> (f64, f64) {
        let [a, b] = self.domain;
        let slope = 2.0 * RESCALE_LIMIT / (b - a);
        (slope, -RESCALE_LIMIT - slope * a)
    }
}

struct Amp<S: Scalar> {
    re: Tower<S>,
    im: Tower<S>,
}

struct State<S: Scalar> {
    amps: Vec<Amp<S>>,
}

impl<S: Scalar> State<S> {
    fn zero_state(n_qubits: usize, shape: &'static Shape) -> Self {
        let dim = 1 << n_qubits;
        let mut amps = Vec::with_capacity(dim);
        amps.push(Amp {
            re: Tower::constant(shape, S::one()),
            im: Tower::constant(shape, S::zero()),
        });
        for _ in 1..dim {
            amps.push(Amp {
                re: Tower::constant(shape, S::zero()),
                im: Tower::constant(shape, S::zero()),
            });
        }
        State { amps }
    }

    fn for_pairs(&mut self, qubit: usize, mut f: impl FnMut(&Amp<S>, &Amp<S>) -> (Amp<S>, Amp<S>)) {
        let bit = 1 << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a, b) = f(&self.amps[i], &self.amps[i | bit]);
                self.amps[i] = a;
                self.amps[i | bit] = b;
            }
        }
    }

    fn ry(&mut self, qubit: usize, c: &Tower<S>, s: &Tower<S>) {
        self.for_pairs(qubit, |a, b| {
            (
                Amp {
                    re: c.mul(&a.re).sub(&s.mul(&b.re)),
                    im: c.mul(&a.im).sub(&s.mul(&b.im)),
                },
                Amp {
                    re: s.mul(&a.re).add(&c.mul(&b.re)),
                    im: s.mul(&a.im).add(&c.mul(&b.im)),
                },
            )
        });
    }

    fn rx(&mut self, qubit: usize, c: &Tower<S>, s: &Tower<S>) {
        self.for_pairs(qubit, |a, b| {
            (
                Amp {
                    re: c.mul(&a.re).add(&s.mul(&b.im)),
                    im: c.mul(&a.im).sub(&s.mul(&b.re)),
                },
                Amp {
                    re: c.mul(&b.re).add(&s.mul(&a.im)),
                    im: c.mul(&b.im).sub(&s.mul(&a.re)),
                },
            )
        });
    }

    fn rz(&mut self, qubit: usize, c: &Tower<S>, s: &Tower<S>) {
        self.for_pairs(qubit, |a, b| {
            (
                Amp {
                    re: c.mul(&a.re).add(&s.mul(&a.im)),
                    im: c.mul(&a.im).sub(&s.mul(&a.re)),
                },
                Amp {
                    re: c.mul(&b.re).sub(&s.mul(&b.im)),
                    im: c.mul(&b.im).add(&s.mul(&b.re)),
                },
            )
        });
    }

    fn cnot(&mut self, control: usize, target: usize) {
        let cbit = 1 << control;
        let tbit = 1 << target;
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
    }

    /// ⟨Σ_i Z_i⟩.
    fn total_magnetization(&self, n_qubits: usize, shape: &'static Shape) -> Tower<S> {
        let mut acc = Tower::constant(shape, S::zero());
        for (i, amp) in self.amps.iter().enumerate() {
            let mut weight = 0.0;
            for q in 0..n_qubits {
                weight += if i & (1 << q) == 0 { 1.0 } else { -1.0 };
            }
            if weight != 0.0 {
                let p = amp.re.mul(&amp.re).add(&amp.im.mul(&amp.im));
                acc = acc.add(&p.scale(weight));
            }
        }
        acc
    }

    fn norm_sq(&self) -> f64 {
        self.amps
            .iter()
            .map(|a| {
                let r = a.re.value().value();
                let i = a.im.value().value();
                r * r + i * i
            })
            .sum()
    }
}

fn half_angle<S: Scalar>(angle: &Tower<S>) -> (Tower<S>, Tower<S>) {
    let half = angle.scale(0.5);
    (half.cos(), half.sin())
}

pub fn forward<S: Scalar>(
    config: &DqcConfig,
    params: &[S],
    input: &Tower<S>,
) -> Result<Tower<S>, DqcError> {
    assert_eq!(params.len(), config.n_params());
    let shape = input.shape;
    let (slope, offset) = config.rescale_coeffs();
    let rescaled = input.scale(slope).add_s(S::constant(offset));
    let x = rescaled.value().value();
    if x.abs() >= 1.0 {
        return Err(DqcError::OutOfDomain {
            input: input.value().value(),
            rescaled: x,
        });
    }

    let mut state = State::zero_state(config.n_qubits, shape);
    let theta = rescaled.acos();
    for q in 0..config.n_qubits {
        let angle = theta.scale(2.0 * (q + 1) as f64);
        let (c, s) = half_angle(&angle);
        state.ry(q, &c, &s);
    }
    let mut p = 0;
    for _ in 0..config.ansatz_depth {
        for q in 0..config.n_qubits {
            for axis in 0..3 {
                let angle = Tower::constant(shape, params[p]);
                p += 1;
                let (c, s) = half_angle(&angle);
                if axis == 1 {
                    state.rz(q, &c, &s);
                } else {
                    state.rx(q, &c, &s);
                }
            }
        }
        for q in 0..config.n_qubits.saturating_sub(1) {
            state.cnot(q, q + 1);
        }
    }

    debug_assert!((state.norm_sq() - 1.0).abs() < 1e-12, "statevector norm drift");
    Ok(state.total_magnetization(config.n_qubits, shape))
}

/// Statevector norm after the full circuit; unit up to rounding.
pub fn statevector_norm(config: &DqcConfig, params: &[f64], x: f64) -> Result<f64, DqcError> {
    let shape = Shape::get(1, 0);
    let input = Tower::constant(shape, x);
    let (slope, offset) = config.rescale_coeffs();
    let rescaled = input.scale(slope).add_s(offset);
    if rescaled.value().abs() >= 1.0 {
        return Err(DqcError::OutOfDomain {
            input: x,
            rescaled: rescaled.value(),
        });
    }
    let mut state = State::zero_state(config.n_qubits, shape);
    let theta = rescaled.acos();
    for q in 0..config.n_qubits {
        let (c, s) = half_angle(&theta.scale(2.0 * (q + 1) as f64));
        state.ry(q, &c, &s);
    }
    let mut p = 0;
    for _ in 0..config.ansatz_depth {
        for q in 0..config.n_qubits {
            for axis in 0..3 {
                let (c, s) = half_angle(&Tower::constant(shape, params[p]));
                p += 1;
                if axis == 1 {
                    state.rz(q, &c, &s);
                } else {
                    state.rx(q, &c, &s);
                }
            }
        }
        for q in 0..config.n_qubits.saturating_sub(1) {
            state.cnot(q, q + 1);
        }
    }
    Ok(state.norm_sq().sqrt())
}
