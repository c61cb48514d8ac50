//! Exact discounted occupancy measures over enumerable games.

use crate::dense::Tensor3;
use crate::game::{EnumerableGame, GameError};
use crate::imitation::AllyPolicy;
use nalgebra::{DMatrix, DVector};

/// Dense tabular view of an enumerable game: the enemy-marginalized kernel,
/// the initial distribution and the discount.
#[derive(Debug, Clone)]
pub struct TabularGame {
    pub kernel: Tensor3,
    pub p0: Vec<f64>,
    pub gamma: f64,
    pub n_states: usize,
    pub n_actions: usize,
}

impl TabularGame {
    pub fn from_game(game: &dyn EnumerableGame) -> Result<Self, GameError> {
        let kernel = crate::game::marginalized_transition_matrix(game)?;
        let (n_states, n_actions, _) = kernel.dims();
        let mut rng = crate::rng::stream(0, "initial-state", 0);
        let initial = game.initial_state(&mut rng);
        let mut p0 = vec![0.0; n_states];
        p0[game.state_index(&initial)] = 1.0;
        Ok(TabularGame { kernel, p0, gamma: game.spec().discount, n_states, n_actions })
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
}

/// Normalized discounted occupancy: the state marginal `d` with
/// `sum_s d(s) = 1`, plus the triple weights `rho(s,a,s') = d(s) pi(a|s) K(s'|s,a)`.
#[derive(Debug, Clone)]
pub struct Occupancy {
    pub state_dist: Vec<f64>,
    pub rho: Tensor3,
}

/// Solves `(I - gamma M^T) d = (1 - gamma) p0` exactly, where `M` is the
/// state chain induced by the ally policy over the given kernel. The kernel
/// may be the true dynamics or an imitation policy table.
pub fn occupancy(kernel: &Tensor3, ally: &AllyPolicy, p0: &[f64], gamma: f64) -> Occupancy {
    let (n, n_actions, _) = kernel.dims();
    assert_eq!(p0.len(), n, "initial distribution length");
    let mut m = DMatrix::<f64>::zeros(n, n);
    for s in 0..n {
        for a in 0..n_actions {
            let pa = ally.probs.at(s, a);
            if pa == 0.0 {
                continue;
            }
            let row = kernel.row(s, a);
            for sp in 0..n {
                // Transposed chain: column index is the source state.
                m[(sp, s)] += pa * row[sp];
            }
        }
    }
    let system = DMatrix::<f64>::identity(n, n) - m * gamma;
    let b = DVector::from_iterator(n, p0.iter().map(|&p| p * (1.0 - gamma)));
    let d = system.lu().solve(&b).expect("occupancy system is nonsingular for gamma < 1");

    let mut rho = Tensor3::zeros(n, n_actions, n);
    for s in 0..n {
        for a in 0..n_actions {
            let w = d[s] * ally.probs.at(s, a);
            if w == 0.0 {
                continue;
            }
            let krow = kernel.row(s, a);
            let out = rho.row_mut(s, a);
            for sp in 0..n {
                out[sp] = w * krow[sp];
            }
        }
    }
    Occupancy { state_dist: d.iter().copied().collect(), rho }
}
