use ndarray::Array2;
use rand::Rng;

use super::NnError;

/// Whether a forward pass samples dropout masks.
pub enum Mode<'a, R: Rng> {
    Train(&'a mut R),
    Inference,
}

/// Inverted dropout: in training each unit is kept with probability
/// `1 - rate` and scaled by `1 / (1 - rate)`; inference is the identity.
/// Returns the masked activations and the mask that was applied, if any.
pub fn apply_dropout<R: Rng>(
    activations: &Array2<f64>,
    rate: f64,
    mode: &mut Mode<'_, R>,
) -> Result<(Array2<f64>, Option<Array2<f64>>), NnError> {
    if !(0.0..1.0).contains(&rate) {
        return Err(NnError::DropoutRate(rate));
    }
    match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let keep = 1.0 - rate;
            let scale = 1.0 / keep;
            let mask = Array2::from_shape_simple_fn(activations.raw_dim(), || {
                if rng.random::<f64>() < keep {
                    scale
                } else {
                    0.0
                }
            });
            Ok((activations * &mask, Some(mask)))
        }
        _ => Ok((activations.clone(), None)),
    }
}
