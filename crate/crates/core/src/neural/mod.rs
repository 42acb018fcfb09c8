//! Quantile LSTM trained with backpropagation through time.

mod adam;
mod cell;
pub mod gradcheck;
mod model;
mod train;

pub use adam::{adam_step, AdamState};
pub use cell::{
    layer_backward, layer_forward, lstm_cell_backward, lstm_cell_forward, CellCache, Gate, LayerGrads, LstmLayerParams,
};
pub use model::{ForwardCache, Gradients, LstmArchitecture, QuantileLstmModel};
pub use train::{
    evaluate_loss, predict_quantiles, sample_loss, train, EarlyStopping, EpochRecord, TrainConfig, TrainOutcome,
};
