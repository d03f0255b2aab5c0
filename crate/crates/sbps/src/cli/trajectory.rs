use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use super::CliError;
use crate::core::{EventKind, TrajectorySegment};

/// Writes the trajectory CSV: one row per segment with columns
/// `segment_index, t_start, duration, event, w_0..w_{D-1}, v_0..v_{D-1},
/// minibatch_evals`, rows ordered by start time. Floats carry 17 significant
/// digits so the file round-trips bit-exactly.
pub fn write_trajectory(path: &Path, segments: &[TrajectorySegment]) -> Result<(), CliError> {
    let dim = segments
        .first()
        .map(|s| s.start.len())
        .ok_or_else(|| CliError::Runtime("refusing to write an empty trajectory".into()))?;
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    let mut header = vec!["segment_index".to_string(), "t_start".into(), "duration".into(), "event".into()];
    header.extend((0..dim).map(|i| format!("w_{i}")));
    header.extend((0..dim).map(|i| format!("v_{i}")));
    header.push("minibatch_evals".into());
    writeln!(out, "{}", header.join(","))?;

    let mut t_start = 0.0;
    for (idx, seg) in segments.iter().enumerate() {
        let mut fields = vec![
            idx.to_string(),
            format!("{t_start:.16e}"),
            format!("{:.16e}", seg.duration),
            seg.event.label().to_string(),
        ];
        fields.extend(seg.start.iter().map(|x| format!("{x:.16e}")));
        fields.extend(seg.velocity.iter().map(|x| format!("{x:.16e}")));
        fields.push(seg.minibatch_evals.to_string());
        writeln!(out, "{}", fields.join(","))?;
        t_start += seg.duration;
    }
    Ok(())
}

/// Reads a trajectory CSV written by [`write_trajectory`], validating
/// per-row shape and time ordering; errors name the offending row.
pub fn read_trajectory(path: &Path) -> Result<Vec<TrajectorySegment>, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Validation(format!("{}: empty file", path.display())))?
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 6 || columns[0] != "segment_index" {
        return Err(CliError::Validation(format!(
            "{}: not a trajectory file (unexpected header)",
            path.display()
        )));
    }
    let dim = (columns.len() - 5) / 2;
    let expected = 5 + 2 * dim;
    if columns.len() != expected {
        return Err(CliError::Validation(format!(
            "{}: header has {} columns, expected {expected}",
            path.display(),
            columns.len()
        )));
    }

    let mut segments = Vec::new();
    let mut prev_t_start = f64::NEG_INFINITY;
    for (lineno, line) in lines.enumerate() {
        let row = lineno + 2; // header is row 1
        let line = line.map_err(|e| CliError::Runtime(e.to_string()))?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != expected {
            return Err(CliError::Validation(format!(
                "{}: row {row}: expected {expected} fields, found {}",
                path.display(),
                fields.len()
            )));
        }
        let parse = |field: &str, name: &str| -> Result<f64, CliError> {
            field.parse::<f64>().map_err(|e| {
                CliError::Validation(format!("{}: row {row}: {name}: {e}", path.display()))
            })
        };
        let t_start = parse(fields[1], "t_start")?;
        if t_start < prev_t_start {
            return Err(CliError::Validation(format!(
                "{}: row {row}: t_start goes backwards",
                path.display()
            )));
        }
        prev_t_start = t_start;
        let duration = parse(fields[2], "duration")?;
        let event = EventKind::parse(fields[3]).ok_or_else(|| {
            CliError::Validation(format!(
                "{}: row {row}: unknown event '{}'",
                path.display(),
                fields[3]
            ))
        })?;
        let mut start = Vec::with_capacity(dim);
        for (i, f) in fields[4..4 + dim].iter().enumerate() {
            start.push(parse(f, &format!("w_{i}"))?);
        }
        let mut velocity = Vec::with_capacity(dim);
        for (i, f) in fields[4 + dim..4 + 2 * dim].iter().enumerate() {
            velocity.push(parse(f, &format!("v_{i}"))?);
        }
        let minibatch_evals = fields[expected - 1].parse::<u64>().map_err(|e| {
            CliError::Validation(format!(
                "{}: row {row}: minibatch_evals: {e}",
                path.display()
            ))
        })?;
        segments.push(TrajectorySegment {
            start,
            velocity,
            duration,
            event,
            minibatch_evals,
        });
    }
    if segments.is_empty() {
        return Err(CliError::Validation(format!(
            "{}: no segments",
            path.display()
        )));
    }
    Ok(segments)
}
