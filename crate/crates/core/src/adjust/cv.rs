use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{distpfn_t_adjust, AdjustmentSpec, Method, NumeratorMode};
use crate::data::Dataset;
use crate::distribution::Temperature;
use crate::error::{Error, Result};
use crate::metrics::accuracy;
use crate::models::{fit, predict_posteriors, ModelSpec};

pub const DEFAULT_TAU_GRID: [f64; 9] = [0.01, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];

/// Picks the DistPFN-T temperature with the best mean held-out accuracy over
/// `folds` shuffled folds of `train`. Ties go to the smaller temperature.
///
/// Each fold's model is fit on the remaining folds and its prior is the
/// empirical label distribution of those folds.
pub fn cv_select_temperature(
    train: &Dataset,
    model: &ModelSpec,
    grid: &[f64],
    folds: usize,
    mode: NumeratorMode,
    seed: u64,
) -> Result<Temperature> {
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidConfig("temperature grid must be non-empty and positive".into()));
    }
    if folds < 2 || train.len() < folds {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot form {folds} folds",
            train.len()
        )));
    }
    let mut order: Vec<usize> = (0..train.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let mut totals = vec![0.0; grid.len()];
    for fold in 0..folds {
        let (held, rest): (Vec<usize>, Vec<usize>) = {
            let mut held = Vec::new();
            let mut rest = Vec::new();
            for (pos, &i) in order.iter().enumerate() {
                if pos % folds == fold {
                    held.push(i);
                } else {
                    rest.push(i);
                }
            }
            (held, rest)
        };
        let fit_part = train.select(&rest);
        let held_part = train.select(&held);
        let prior = fit_part.class_prior(0.0)?;
        if let Some(class) = prior.iter().position(|&p| p == 0.0) {
            return Err(Error::InsufficientData(format!("class {class} missing from fold {fold}")));
        }
        let fitted = match fit(model, &fit_part) {
            Ok(m) => m,
            Err(Error::SingleClass) | Err(Error::InvalidModelSpec(_)) => {
                return Err(Error::InsufficientData(format!("fold {fold} cannot be fit")))
            }
            Err(e) => return Err(e),
        };
        let posteriors = predict_posteriors(&fitted, held_part.features.view())?;
        for (slot, &tau) in totals.iter_mut().zip(grid) {
            let spec = AdjustmentSpec {
                numerator_mode: mode,
                fixed_tau: Some(Temperature::new(tau)),
                ..AdjustmentSpec::new(Method::DistPfnT)
            };
            let adjusted = distpfn_t_adjust(&posteriors, &prior, &spec)?;
            *slot += accuracy(&adjusted, &held_part.labels)?;
        }
    }

    let mut best = 0;
    for i in 1..grid.len() {
        let better = totals[i] > totals[best];
        let tied_smaller = totals[i] == totals[best] && grid[i] < grid[best];
        if better || tied_smaller {
            best = i;
        }
    }
    Ok(Temperature::new(grid[best]))
}
