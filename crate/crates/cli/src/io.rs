//! File formats: gradient CSV (one row per gradient, comma-separated finite
//! decimal floats) and the ModelSpec JSON document.

use std::fs;
use std::path::Path;

use shuffledp::accountant::ModelSpec;
use shuffledp::grad::GradientVector;

use crate::output::{format_sig, CSV_SIG_DIGITS};
use crate::CliError;

pub fn parse_f64_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|item| {
            item.trim().parse::<f64>().map_err(|_| {
                CliError::validation(format!("{flag}: {item:?} is not a decimal float"))
            })
        })
        .collect()
}

pub fn parse_usize_list(text: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    text.split(',')
        .map(|item| {
            item.trim().parse::<usize>().map_err(|_| {
                CliError::validation(format!("{flag}: {item:?} is not a positive integer"))
            })
        })
        .collect()
}

/// Parse a tensor shape given as a JSON array of positive integers.
pub fn parse_shape_json(text: &str, flag: &str) -> Result<Vec<usize>, CliError> {
    let shape: Vec<usize> = serde_json::from_str(text).map_err(|e| {
        CliError::validation(format!(
            "{flag}: expected a JSON array of positive integers, got {text:?}: {e}"
        ))
    })?;
    if shape.is_empty() || shape.contains(&0) {
        return Err(CliError::validation(format!(
            "{flag}: shape entries must be positive integers"
        )));
    }
    Ok(shape)
}

/// Parse per-row tensor shapes given as a JSON array of arrays.
pub fn parse_shapes_json(text: &str, flag: &str) -> Result<Vec<Vec<usize>>, CliError> {
    let shapes: Vec<Vec<usize>> = serde_json::from_str(text).map_err(|e| {
        CliError::validation(format!(
            "{flag}: expected a JSON array of shape arrays, got {text:?}: {e}"
        ))
    })?;
    for shape in &shapes {
        if shape.is_empty() || shape.contains(&0) {
            return Err(CliError::validation(format!(
                "{flag}: shape entries must be positive integers"
            )));
        }
    }
    Ok(shapes)
}

/// Read a gradient CSV: one flat gradient per non-empty row.
pub fn read_gradients_csv(path: &Path) -> Result<Vec<GradientVector>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let mut gradients = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let components = parse_f64_list(line, &format!("{} line {}", path.display(), line_no + 1))?;
        gradients.push(GradientVector::flat(components)?);
    }
    if gradients.is_empty() {
        return Err(CliError::validation(format!(
            "{}: no gradient rows found",
            path.display()
        )));
    }
    Ok(gradients)
}

pub fn write_gradients_csv(path: &Path, gradients: &[GradientVector]) -> Result<(), CliError> {
    let mut out = String::new();
    for g in gradients {
        let row: Vec<String> = g
            .components()
            .iter()
            .map(|&x| format_sig(x, CSV_SIG_DIGITS))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)
        .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display())))
}

pub fn read_model(path: &Path) -> Result<ModelSpec, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("cannot read {}: {e}", path.display())))?;
    let model: ModelSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::validation(format!("{}: invalid model JSON: {e}", path.display())))?;
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_float_lists() {
        assert_eq!(
            parse_f64_list("0.1, 2,-3e-4", "--x").unwrap(),
            vec![0.1, 2.0, -3e-4]
        );
        assert_eq!(parse_f64_list("", "--x").unwrap(), Vec::<f64>::new());
        assert!(parse_f64_list("1,abc", "--x").is_err());
    }

    #[test]
    fn parses_usize_lists() {
        assert_eq!(parse_usize_list("2, 4,8", "--x").unwrap(), vec![2, 4, 8]);
        assert!(parse_usize_list("2,-1", "--x").is_err());
        assert!(parse_usize_list("2,1.5", "--x").is_err());
    }

    #[test]
    fn parses_shapes() {
        assert_eq!(parse_shape_json("[2,2]", "--shape").unwrap(), vec![2, 2]);
        assert!(parse_shape_json("[2,0]", "--shape").is_err());
        assert!(parse_shape_json("[]", "--shape").is_err());
        assert!(parse_shape_json("nope", "--shape").is_err());
        assert_eq!(
            parse_shapes_json("[[2,2],[3]]", "--shapes").unwrap(),
            vec![vec![2, 2], vec![3]]
        );
        assert!(parse_shapes_json("[[0]]", "--shapes").is_err());
    }
}
