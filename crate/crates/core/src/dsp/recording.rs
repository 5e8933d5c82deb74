use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::TaskLabel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Marker {
    pub onset_s: f64,
    pub label: TaskLabel,
}

/// A continuous multi-channel ΔHbO / ΔHbR recording. Both matrices are
/// `[n_samples × n_channels]`; time zero is the first sample.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    sample_rate_hz: f64,
    hbo: Array2<f64>,
    hbr: Array2<f64>,
    markers: Vec<Marker>,
}

impl TimeSeries {
    pub fn new(
        sample_rate_hz: f64,
        hbo: Array2<f64>,
        hbr: Array2<f64>,
        markers: Vec<Marker>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidData(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if hbo.dim() != hbr.dim() {
            return Err(Error::DimensionMismatch(format!(
                "hbo is {:?} but hbr is {:?}",
                hbo.dim(),
                hbr.dim()
            )));
        }
        if hbo.ncols() == 0 {
            return Err(Error::InvalidData("recording has no channels".into()));
        }
        let duration = hbo.nrows() as f64 / sample_rate_hz;
        for m in &markers {
            if !(m.onset_s >= 0.0 && m.onset_s < duration) {
                return Err(Error::InvalidData(format!(
                    "marker onset {} s outside recording [0, {duration}) s",
                    m.onset_s
                )));
            }
        }
        Ok(Self {
            sample_rate_hz,
            hbo,
            hbr,
            markers,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn n_channels(&self) -> usize {
        self.hbo.ncols()
    }

    pub fn n_samples(&self) -> usize {
        self.hbo.nrows()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    pub fn hbo(&self) -> &Array2<f64> {
        &self.hbo
    }

    pub fn hbr(&self) -> &Array2<f64> {
        &self.hbr
    }

    pub fn markers(&self) -> &[Marker] {
        &self.markers
    }

    /// Replace both signal matrices, keeping rate and markers.
    pub fn with_signals(&self, hbo: Array2<f64>, hbr: Array2<f64>) -> Result<Self> {
        if hbo.dim() != self.hbo.dim() || hbr.dim() != self.hbr.dim() {
            return Err(Error::DimensionMismatch(
                "replacement signals must keep the recording's shape".into(),
            ));
        }
        Self::new(self.sample_rate_hz, hbo, hbr, self.markers.clone())
    }
}

/// Header of the raw recording CSV for `n_channels` channels per chromophore.
pub fn recording_header(n_channels: usize) -> Vec<String> {
    let mut header = vec!["time_s".to_string()];
    for prefix in ["hbo", "hbr"] {
        header.extend((1..=n_channels).map(|ch| format!("{prefix}_ch{ch:02}")));
    }
    header
}

fn open_reader(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(file))
}

fn parse_f64(path: &Path, row: usize, field: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw.trim().parse().map_err(|_| {
        Error::malformed(
            path,
            format!("row {row}: {field} = {raw:?} is not a number"),
        )
    })?;
    if !v.is_finite() {
        return Err(Error::malformed(
            path,
            format!("row {row}: {field} is not finite"),
        ));
    }
    Ok(v)
}

/// Load a recording and its markers. The sample rate is taken from the
/// (uniform) `time_s` column; marker onsets are on the same clock and are
/// re-expressed relative to the first sample.
pub fn read_recording(recording: &Path, markers: &Path) -> Result<TimeSeries> {
    let mut reader = open_reader(recording)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::malformed(recording, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.len() < 3 || !(header.len() - 1).is_multiple_of(2) {
        return Err(Error::malformed(
            recording,
            format!(
                "expected time_s plus equal hbo/hbr column counts, got {} columns",
                header.len()
            ),
        ));
    }
    let n_channels = (header.len() - 1) / 2;
    let expected = recording_header(n_channels);
    if header != expected {
        return Err(Error::malformed(
            recording,
            format!("unexpected header; expected `{}`", expected.join(",")),
        ));
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::malformed(recording, e.to_string()))?;
        if record.len() != header.len() {
            return Err(Error::malformed(
                recording,
                format!(
                    "row {}: expected {} fields, got {}",
                    row + 1,
                    header.len(),
                    record.len()
                ),
            ));
        }
        for (col, raw) in record.iter().enumerate() {
            let v = parse_f64(recording, row + 1, &header[col], raw)?;
            if col == 0 {
                times.push(v);
            } else {
                values.push(v);
            }
        }
    }
    if times.len() < 2 {
        return Err(Error::malformed(recording, "need at least two samples"));
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(Error::malformed(
            recording,
            "time_s must be strictly increasing",
        ));
    }
    for (i, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if !(step > 0.0) || ((step - dt) / dt).abs() > 1e-6 {
            return Err(Error::malformed(
                recording,
                format!(
                    "non-uniform sampling at row {}: step {step} vs mean {dt}",
                    i + 2
                ),
            ));
        }
    }
    let sample_rate_hz = 1.0 / dt;
    let n = times.len();
    let mut hbo = Array2::zeros((n, n_channels));
    let mut hbr = Array2::zeros((n, n_channels));
    for (i, row) in values.chunks(2 * n_channels).enumerate() {
        for ch in 0..n_channels {
            hbo[[i, ch]] = row[ch];
            hbr[[i, ch]] = row[n_channels + ch];
        }
    }

    let t0 = times[0];
    let markers = read_markers(markers)?
        .into_iter()
        .map(|m| Marker {
            onset_s: m.onset_s - t0,
            label: m.label,
        })
        .collect();
    TimeSeries::new(sample_rate_hz, hbo, hbr, markers).map_err(|e| match e {
        Error::InvalidData(reason) => Error::malformed(recording, reason),
        other => other,
    })
}

pub fn read_markers(path: &Path) -> Result<Vec<Marker>> {
    let mut reader = open_reader(path)?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::malformed(path, e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header != ["onset_s", "label"] {
        return Err(Error::malformed(path, "expected header `onset_s,label`"));
    }
    let mut markers = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::malformed(path, e.to_string()))?;
        if record.len() != 2 {
            return Err(Error::malformed(
                path,
                format!("row {}: expected 2 fields", row + 1),
            ));
        }
        let onset_s = parse_f64(path, row + 1, "onset_s", &record[0])?;
        let label = record[1]
            .parse::<TaskLabel>()
            .map_err(|e| Error::malformed(path, format!("row {}: {e}", row + 1)))?;
        markers.push(Marker { onset_s, label });
    }
    Ok(markers)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Write the recording CSV. Times are `i / fs`; values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_recording(ts: &TimeSeries, path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "{}", recording_header(ts.n_channels()).join(",")).map_err(io)?;
    let mut line = String::new();
    for i in 0..ts.n_samples() {
        use std::fmt::Write as _;
        line.clear();
        write!(line, "{}", i as f64 / ts.sample_rate_hz()).unwrap();
        for m in [ts.hbo(), ts.hbr()] {
            for v in m.row(i) {
                write!(line, ",{v}").unwrap();
            }
        }
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_markers(markers: &[Marker], path: &Path) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(out, "onset_s,label").map_err(io)?;
    for m in markers {
        writeln!(out, "{},{}", m.onset_s, m.label).map_err(io)?;
    }
    out.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> TimeSeries {
        let n = 50;
        let hbo = Array2::from_shape_fn((n, 2), |(i, c)| i as f64 * 0.1 + c as f64);
        let hbr = Array2::from_shape_fn((n, 2), |(i, c)| -(i as f64) * 0.05 - c as f64 / 3.0);
        let markers = vec![
            Marker {
                onset_s: 1.0,
                label: TaskLabel::Rft,
            },
            Marker {
                onset_s: 2.5,
                label: TaskLabel::Lft,
            },
        ];
        TimeSeries::new(10.0, hbo, hbr, markers).unwrap()
    }

    #[test]
    fn header_format() {
        assert_eq!(
            recording_header(2),
            ["time_s", "hbo_ch01", "hbo_ch02", "hbr_ch01", "hbr_ch02"]
        );
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ts = tiny();
        let rec = dir.path().join("recording.csv");
        let mrk = dir.path().join("markers.csv");
        write_recording(&ts, &rec).unwrap();
        write_markers(ts.markers(), &mrk).unwrap();
        let back = read_recording(&rec, &mrk).unwrap();
        assert_eq!(back.hbo(), ts.hbo());
        assert_eq!(back.hbr(), ts.hbr());
        assert_eq!(back.markers(), ts.markers());
        assert!((back.sample_rate_hz() - 10.0).abs() < 1e-9);
    }

    #[test]
    fn unknown_label_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mrk = dir.path().join("markers.csv");
        std::fs::write(&mrk, "onset_s,label\n1.0,FT\n").unwrap();
        let err = read_markers(&mrk).unwrap_err();
        assert!(err.to_string().contains("FT"), "{err}");
    }

    #[test]
    fn non_uniform_time_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let rec = dir.path().join("recording.csv");
        let mrk = dir.path().join("markers.csv");
        std::fs::write(&rec, "time_s,hbo_ch01,hbr_ch01\n0,1,1\n0.1,1,1\n0.25,1,1\n").unwrap();
        std::fs::write(&mrk, "onset_s,label\n").unwrap();
        assert!(matches!(
            read_recording(&rec, &mrk),
            Err(Error::Malformed { .. })
        ));
    }

    #[test]
    fn marker_outside_recording_rejected() {
        let hbo = Array2::zeros((10, 1));
        let res = TimeSeries::new(
            10.0,
            hbo.clone(),
            hbo,
            vec![Marker {
                onset_s: 1.0,
                label: TaskLabel::Lft,
            }],
        );
        assert!(res.is_err());
    }
}
