//! Versioned text checkpoints for network parameters.
//!
//! Format (version 1):
//!
//! ```text
//! mtlq-checkpoint v1
//! layers <count>
//! layer <name> <fan_in> <fan_out>
//! <fan_in lines of fan_out space-separated weight values, row-major>
//! bias <fan_out space-separated values>
//! ...
//! ```
//!
//! Layer names follow the spec's canonical order (`trunk.N`, then
//! `branch.<name>.N` / `branch.<name>.out` per branch), forming the manifest
//! against which loading validates. Values carry 17 significant digits, so a
//! round trip reproduces every double bit-exactly.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::network::{NetworkParams, NetworkSpec};

const MAGIC: &str = "mtlq-checkpoint v1";

pub fn save<W: Write>(spec: &NetworkSpec, params: &NetworkParams, mut w: W) -> Result<()> {
    let shapes = spec.layer_shapes();
    let layers = params.layers();
    if layers.len() != shapes.len() {
        return Err(Error::Shape(
            "parameters do not match the spec's layer manifest".into(),
        ));
    }
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "layers {}", shapes.len())?;
    for (layer, (name, fan_in, fan_out)) in layers.iter().zip(shapes.iter()) {
        if layer.weights.dim() != (*fan_in, *fan_out) {
            return Err(Error::Shape(format!(
                "layer {name}: expected {fan_in}x{fan_out}, found {:?}",
                layer.weights.dim()
            )));
        }
        writeln!(w, "layer {name} {fan_in} {fan_out}")?;
        for row in layer.weights.rows() {
            let line = row
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(w, "{line}")?;
        }
        let bias = layer
            .bias
            .iter()
            .map(|v| format!("{v:.16e}"))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(w, "bias {bias}")?;
    }
    Ok(())
}

pub fn load<R: Read>(spec: &NetworkSpec, r: R) -> Result<NetworkParams> {
    let mut lines = BufReader::new(r).lines();
    let mut next_line = move || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Parse("unexpected end of checkpoint".into()))?
            .map_err(Error::Io)
    };

    let magic = next_line()?;
    if magic.trim() != MAGIC {
        return Err(Error::Parse(format!(
            "not a recognized checkpoint (header '{magic}')"
        )));
    }
    let count_line = next_line()?;
    let declared: usize = count_line
        .strip_prefix("layers ")
        .and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad layer count line '{count_line}'")))?;
    let shapes = spec.layer_shapes();
    if declared != shapes.len() {
        return Err(Error::Parse(format!(
            "checkpoint has {declared} layers, spec expects {}",
            shapes.len()
        )));
    }

    let parse_values = |line: &str, want: usize, what: &str| -> Result<Vec<f64>> {
        let values = line
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{what}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != want {
            return Err(Error::Parse(format!(
                "{what}: expected {want} values, got {}",
                values.len()
            )));
        }
        Ok(values)
    };

    let mut params = NetworkParams::zeros(spec);
    for ((name, fan_in, fan_out), layer) in shapes.iter().zip(params.layers_mut()) {
        let header = next_line()?;
        let expected = format!("layer {name} {fan_in} {fan_out}");
        if header.trim() != expected {
            return Err(Error::Parse(format!(
                "layer manifest mismatch: expected '{expected}', found '{header}'"
            )));
        }
        for i in 0..*fan_in {
            let row = parse_values(&next_line()?, *fan_out, &format!("{name} row {i}"))?;
            for (j, v) in row.into_iter().enumerate() {
                layer.weights[[i, j]] = v;
            }
        }
        let bias_line = next_line()?;
        let rest = bias_line
            .strip_prefix("bias ")
            .ok_or_else(|| Error::Parse(format!("{name}: expected bias line")))?;
        let bias = parse_values(rest, *fan_out, &format!("{name} bias"))?;
        for (j, v) in bias.into_iter().enumerate() {
            layer.bias[j] = v;
        }
    }
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build, BranchSpec, TargetLabel};

    fn spec() -> NetworkSpec {
        NetworkSpec {
            input_dim: 4,
            trunk: vec![3, 3],
            branches: vec![
                BranchSpec {
                    name: "o2".into(),
                    hidden: vec![2],
                    outputs: vec![TargetLabel::O2],
                    loss_weight: 5.0,
                },
                BranchSpec {
                    name: "joint".into(),
                    hidden: vec![],
                    outputs: vec![TargetLabel::O2, TargetLabel::T],
                    loss_weight: 0.3,
                },
            ],
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let spec = spec();
        let params = build(&spec, 123).unwrap();
        let mut buf = Vec::new();
        save(&spec, &params, &mut buf).unwrap();
        let loaded = load(&spec, buf.as_slice()).unwrap();
        assert_eq!(params, loaded);
    }

    #[test]
    fn rejects_wrong_spec_on_load() {
        let spec = spec();
        let params = build(&spec, 123).unwrap();
        let mut buf = Vec::new();
        save(&spec, &params, &mut buf).unwrap();

        let mut other = spec.clone();
        other.trunk = vec![3, 4];
        assert!(load(&other, buf.as_slice()).is_err());
    }

    #[test]
    fn rejects_corrupted_header_and_truncation() {
        let spec = spec();
        let params = build(&spec, 1).unwrap();
        let mut buf = Vec::new();
        save(&spec, &params, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();

        let bad_header = text.replacen(MAGIC, "mtlq-checkpoint v9", 1);
        assert!(load(&spec, bad_header.as_bytes()).is_err());

        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(load(&spec, truncated.as_bytes()).is_err());
    }
}
