//! Policy-input augmentation with predicted enemy next-state atoms.

use super::MarlError;
use crate::imitation::N_ATOMS;

/// Width added to the observation encoding: one-hot atom plus a presence
/// flag per enemy slot.
pub fn augmentation_width(n_slots: usize) -> usize {
    n_slots * (N_ATOMS + 1)
}

pub fn augmented_width(obs_width: usize, n_slots: usize) -> usize {
    obs_width + augmentation_width(n_slots)
}

/// Fixed-width concatenation of the observation encoding with the per-slot
/// predictions. Masked slots contribute all-zero one-hots with flag 0, so a
/// fully masked augmentation block is identically zero (the baseline arm).
pub fn augment_input(
    obs_enc: &[f64],
    predictions: &[Option<usize>],
    n_slots: usize,
) -> Result<Vec<f64>, MarlError> {
    if predictions.len() != n_slots {
        return Err(MarlError::SlotMisalignment { expected: n_slots, got: predictions.len() });
    }
    let mut out = Vec::with_capacity(augmented_width(obs_enc.len(), n_slots));
    out.extend_from_slice(obs_enc);
    for pred in predictions {
        match pred {
            Some(atom) => {
                debug_assert!(*atom < N_ATOMS);
                for c in 0..N_ATOMS {
                    out.push(if c == *atom { 1.0 } else { 0.0 });
                }
                out.push(1.0);
            }
            None => out.extend(std::iter::repeat(0.0).take(N_ATOMS + 1)),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn masked_slots_produce_zero_block() {
        let obs = [0.25, 0.5];
        let out = augment_input(&obs, &[None, None], 2).unwrap();
        assert_eq!(out.len(), augmented_width(2, 2));
        assert!(out[2..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn width_is_constant_and_content_deterministic() {
        let obs = [0.1; 7];
        let a = augment_input(&obs, &[Some(3), None], 2).unwrap();
        let b = augment_input(&obs, &[Some(3), None], 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 7 + 2 * (N_ATOMS + 1));
        assert_eq!(a[7 + 3], 1.0);
        assert_eq!(a[7 + N_ATOMS], 1.0); // presence flag of slot 0
    }

    #[test]
    fn misaligned_predictions_rejected() {
        assert!(matches!(
            augment_input(&[0.0], &[None], 2),
            Err(MarlError::SlotMisalignment { expected: 2, got: 1 })
        ));
    }
}
