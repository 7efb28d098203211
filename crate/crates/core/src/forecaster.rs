use ndarray::Array2;

/// A trained multi-output model mapping scaled input rows to scaled
/// `horizon`-step level forecasts.
pub trait Forecaster: Sync {
    fn name(&self) -> String;

    fn input_dim(&self) -> usize;

    fn horizon(&self) -> usize;

    /// `inputs` is `(rows, input_dim)`; returns `(rows, horizon)`.
    fn predict(&self, inputs: &Array2<f64>) -> Array2<f64>;
}
