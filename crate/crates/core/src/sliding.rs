//! Per-sample computation of generalized Fourier coefficients over a sliding
//! window.
//!
//! [`SlidingFirState`] works for any basis by keeping the last `N` samples.
//! [`SlidingLtiState`] advances a `q`-dimensional discrete LTI system instead;
//! for the LDN under Euler integration it has an `O(q)` update.

use nalgebra::DVector;

use crate::basis::{BasisMatrix, CoefficientVector, ColumnConvention};
use crate::error::{Error, Result};
use crate::ldn::{discretize_euler, discretize_lti, ldn_system, DiscreteLti, Discretization, EULER_DIVERGENCE_THRESHOLD};

/// Cost-model constant for fast convolution: FIR costs `34 q log2(N)` per step.
pub const FIR_COST_CONSTANT: f64 = 34.0;

/// Naive FIR filter bank over a ring buffer of the `N` most recent samples.
#[derive(Debug, Clone)]
pub struct SlidingFirState {
    basis: BasisMatrix,
    /// TimeForward rows, row-major, for contiguous dot products.
    rows: Vec<f64>,
    ring: Vec<f64>,
    /// Index of the oldest sample.
    head: usize,
}

impl SlidingFirState {
    pub fn new(basis: &BasisMatrix) -> Self {
        let tf = basis.to_convention(ColumnConvention::TimeForward);
        let rows = tf.data().transpose().as_slice().to_vec();
        let basis = basis.to_convention(ColumnConvention::FirReversed);
        let n = basis.n();
        SlidingFirState {
            basis,
            rows,
            ring: vec![0.0; n],
            head: 0,
        }
    }

    /// The filter taps (FirReversed).
    pub fn basis(&self) -> &BasisMatrix {
        &self.basis
    }

    /// Pushes `u`, evicting the oldest sample, and returns the coefficients of
    /// the current window. Costs `O(qN)`.
    pub fn step(&mut self, u: f64) -> CoefficientVector {
        let n = self.ring.len();
        self.ring[self.head] = u;
        self.head = (self.head + 1) % n;
        // Chronological window = ring[head..] followed by ring[..head].
        let (newer, older) = self.ring.split_at(self.head);
        let split = older.len();
        let coeffs = DVector::from_iterator(
            self.basis.q(),
            self.rows.chunks_exact(n).map(|row| {
                let (a, b) = row.split_at(split);
                let x: f64 = a.iter().zip(older).map(|(w, v)| w * v).sum();
                let y: f64 = b.iter().zip(newer).map(|(w, v)| w * v).sum();
                x + y
            }),
        );
        CoefficientVector(coeffs)
    }

    /// The current window in chronological order.
    pub fn window(&self) -> Vec<f64> {
        let n = self.ring.len();
        (0..n).map(|k| self.ring[(self.head + k) % n]).collect()
    }

    pub fn reset(&mut self) {
        self.ring.fill(0.0);
        self.head = 0;
    }
}

/// Which update an LTI runner performs in [`SlidingLtiState::step_euler`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EulerPath {
    /// Structured `O(q)` update exploiting the LDN matrix pattern.
    Structured,
    /// Dense `O(q^2)` mat-vec.
    Dense,
}

/// State of a discrete LTI system advanced one sample at a time.
#[derive(Debug, Clone)]
pub struct SlidingLtiState {
    system: DiscreteLti,
    state: DVector<f64>,
    /// `Some(theta / N)` when `system` is the Euler-discretized LDN.
    ldn_euler_step: Option<f64>,
    suffix: Vec<f64>,
    last_ops: usize,
    diverged: bool,
}

impl SlidingLtiState {
    pub fn new(system: DiscreteLti) -> Self {
        let q = system.order();
        SlidingLtiState {
            system,
            state: DVector::zeros(q),
            ldn_euler_step: None,
            suffix: vec![0.0; q],
            last_ops: 0,
            diverged: false,
        }
    }

    /// ZOH-discretized LDN runner.
    pub fn ldn_zoh(q: usize, n: usize) -> Result<Self> {
        Ok(Self::new(discretize_lti(&ldn_system(q, 1.0)?, n)?))
    }

    /// Euler-discretized LDN runner with the structured update enabled.
    pub fn ldn_euler(q: usize, n: usize) -> Result<Self> {
        let mut s = Self::new(discretize_euler(&ldn_system(q, 1.0)?, n)?);
        s.ldn_euler_step = Some(1.0 / n as f64);
        Ok(s)
    }

    pub fn system(&self) -> &DiscreteLti {
        &self.system
    }

    pub fn state(&self) -> &DVector<f64> {
        &self.state
    }

    /// True once any state entry exceeded the Euler divergence threshold.
    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Arithmetic operations performed by the most recent structured update.
    pub fn last_op_count(&self) -> usize {
        self.last_ops
    }

    pub fn euler_path(&self) -> EulerPath {
        if self.ldn_euler_step.is_some() {
            EulerPath::Structured
        } else {
            EulerPath::Dense
        }
    }

    pub fn reset(&mut self) {
        self.state.fill(0.0);
        self.diverged = false;
        self.last_ops = 0;
    }

    /// Dense update `m <- A m + B u`, `O(q^2)`.
    pub fn step(&mut self, u: f64) -> CoefficientVector {
        self.state = self.system.step(&self.state, u);
        self.track_divergence();
        CoefficientVector(self.state.clone())
    }

    /// Euler update. Uses the structured `O(q)` path for the LDN and falls
    /// back to the dense mat-vec otherwise (see [`Self::euler_path`]).
    pub fn step_euler(&mut self, u: f64) -> Result<CoefficientVector> {
        if self.system.method != Discretization::Euler {
            return Err(Error::InvalidArgument("step_euler requires an Euler-discretized system".into()));
        }
        match self.ldn_euler_step {
            Some(h) => {
                self.structured_euler(u, h);
                self.track_divergence();
                Ok(CoefficientVector(self.state.clone()))
            }
            None => Ok(self.step(u)),
        }
    }

    /// `m_i += h (2i + 1) (-sum_{j >= i} m_j + sum_{j < i, i - j odd} m_j
    /// - sum_{j < i, i - j even} m_j + (-1)^i u)`, with one suffix sum and
    /// two parity-split prefix sums.
    fn structured_euler(&mut self, u: f64, h: f64) {
        let q = self.state.len();
        let m = self.state.as_mut_slice();
        let mut ops = 0;
        let mut acc = 0.0;
        for i in (0..q).rev() {
            acc += m[i];
            self.suffix[i] = acc;
            ops += 1;
        }
        let mut prefix = [0.0f64; 2];
        for i in 0..q {
            let same = prefix[i % 2];
            let other = prefix[1 - i % 2];
            let feedback = other - same - self.suffix[i];
            let drive = if i % 2 == 0 { u } else { -u };
            prefix[i % 2] += m[i];
            m[i] += ((2 * i + 1) as f64 * h) * (feedback + drive);
            ops += 7;
        }
        self.last_ops = ops;
    }

    fn track_divergence(&mut self) {
        if self.state.iter().any(|x| !(x.abs() <= EULER_DIVERGENCE_THRESHOLD)) {
            self.diverged = true;
        }
    }
}

/// Who is cheaper per step under the cost model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Lti,
    Fir,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossoverRow {
    pub q: usize,
    pub n: usize,
    pub lti_ops: f64,
    pub fir_ops: f64,
    pub winner: Engine,
}

/// LTI update (`q^2`) versus fast FIR convolution (`34 q log2 N`); the LTI
/// wins iff `q < 34 log2 N`, ties go to the FIR.
pub fn crossover(q: usize, n: usize) -> CrossoverRow {
    let qf = q as f64;
    let lti_ops = qf * qf;
    let fir_ops = FIR_COST_CONSTANT * qf * (n as f64).log2();
    let winner = if qf < FIR_COST_CONSTANT * (n as f64).log2() {
        Engine::Lti
    } else {
        Engine::Fir
    };
    CrossoverRow { q, n, lti_ops, fir_ops, winner }
}

pub fn crossover_table(n_range: &[usize], q_range: &[usize]) -> Vec<CrossoverRow> {
    n_range
        .iter()
        .flat_map(|&n| q_range.iter().map(move |&q| crossover(q, n)))
        .collect()
}
