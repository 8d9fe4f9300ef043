use ndarray::{s, Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

const BOUNDARY_EPS: f64 = 1e-9;

/// First frame index whose timestamp `f / frame_rate` is at or after `t` seconds.
fn first_frame_at(t: f64, frame_rate: f64) -> usize {
    let pos = t * frame_rate;
    let nearest = pos.round();
    if (pos - nearest).abs() < BOUNDARY_EPS {
        nearest as usize
    } else {
        pos.ceil() as usize
    }
}

/// Number of complete TR windows covered by `frames` frames.
pub fn complete_windows(frames: usize, frame_rate: f64, tr_seconds: f64) -> usize {
    (frames as f64 / (frame_rate * tr_seconds) + BOUNDARY_EPS).floor() as usize
}

/// Shifts rows down by `lag` (leading rows zero, trailing rows dropped).
pub fn shift_rows(x: ArrayView2<'_, f64>, lag: usize) -> Array2<f64> {
    let n = x.nrows();
    let mut out = Array2::<f64>::zeros(x.raw_dim());
    if lag < n {
        out.slice_mut(s![lag.., ..])
            .assign(&x.slice(s![..n - lag, ..]));
    }
    out
}

/// Boxcar-averages frame features into TR samples, then applies the
/// hemodynamic lag.
///
/// Sample `t` is the mean of all frames with timestamps in
/// `[t * tr, (t + 1) * tr)`. Frames after the last complete window are dropped.
pub fn temporal_resample(
    frames: ArrayView2<'_, f64>,
    frame_rate: f64,
    tr_seconds: f64,
    lag_trs: usize,
) -> Result<Array2<f64>> {
    if !(frame_rate > 0.0 && tr_seconds > 0.0) {
        return Err(Error::Invalid("frame rate and TR must be positive".into()));
    }
    let n_samples = complete_windows(frames.nrows(), frame_rate, tr_seconds);
    if n_samples == 0 {
        return Err(Error::Invalid(format!(
            "{} frames at {frame_rate} Hz do not fill one {tr_seconds} s TR window",
            frames.nrows()
        )));
    }
    let mut out = Array2::<f64>::zeros((n_samples, frames.ncols()));
    for (t, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
        let start = first_frame_at(t as f64 * tr_seconds, frame_rate);
        let end = first_frame_at((t + 1) as f64 * tr_seconds, frame_rate).min(frames.nrows());
        if end <= start {
            return Err(Error::Invalid(format!(
                "empty TR window {t}: frame rate {frame_rate} Hz is too low for a {tr_seconds} s TR"
            )));
        }
        for f in start..end {
            row += &frames.row(f);
        }
        row /= (end - start) as f64;
    }
    Ok(if lag_trs == 0 {
        out
    } else {
        shift_rows(out.view(), lag_trs)
    })
}

/// Resamples each session independently so that lag never leaks across
/// session boundaries, and checks each session yields its declared length.
pub fn resample_sessions(
    frames: ArrayView2<'_, f64>,
    session_frames: &[usize],
    session_lengths: &[usize],
    frame_rate: f64,
    tr_seconds: f64,
    lag_trs: usize,
) -> Result<Array2<f64>> {
    if session_frames.len() != session_lengths.len() {
        return Err(Error::Manifest(
            "session_frames and session_lengths differ in length".into(),
        ));
    }
    if session_frames.iter().sum::<usize>() != frames.nrows() {
        return Err(Error::Manifest(
            "session_frames do not cover the frame matrix".into(),
        ));
    }
    let total: usize = session_lengths.iter().sum();
    let mut out = Array2::<f64>::zeros((total, frames.ncols()));
    let (mut f0, mut s0) = (0, 0);
    for (k, (&nf, &ns)) in session_frames.iter().zip(session_lengths).enumerate() {
        let part = temporal_resample(
            frames.slice(s![f0..f0 + nf, ..]),
            frame_rate,
            tr_seconds,
            lag_trs,
        )?;
        if part.nrows() != ns {
            return Err(Error::Manifest(format!(
                "session {k}: {nf} frames at {frame_rate} Hz give {} samples, manifest declares {ns}",
                part.nrows()
            )));
        }
        out.slice_mut(s![s0..s0 + ns, ..]).assign(&part);
        f0 += nf;
        s0 += ns;
    }
    Ok(out)
}
