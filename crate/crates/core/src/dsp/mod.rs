//! Band-pass filtering, epoching and baseline correction of hemodynamic
//! recordings.

mod butterworth;
mod epoch;
mod filtfilt;
mod recording;

pub use butterworth::{design_bandpass, FilterCoeffs, FilterSpec, Section};
pub use epoch::{baseline_correct, extract_epochs, Epoch, EpochExtraction, SkippedMarker};
pub use filtfilt::{filtfilt, min_signal_len, padding_len};
pub use recording::{
    read_markers, read_recording, recording_header, write_markers, write_recording, Marker,
    TimeSeries,
};

/// Index of the sample nearest to `offset_s` seconds after sample 0.
pub(crate) fn sample_index(offset_s: f64, sample_rate_hz: f64) -> i64 {
    (offset_s * sample_rate_hz).round() as i64
}
