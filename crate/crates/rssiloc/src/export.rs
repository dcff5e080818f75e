//! Firmware export: the trained network as a self-contained C source file.
//!
//! The emitted file needs only `<math.h>`. It holds the normalization ranges,
//! weights and biases as constant arrays and defines
//!
//! ```c
//! void rssiloc_locate(const double rssi[RSSILOC_INPUTS], double position[2]);
//! ```
//!
//! (`float` in single precision), which repeats the library's forward pass
//! operation for operation: normalize, accumulate each layer as
//! `bias + Σ input·weight` in input order, apply the activation, denormalize.
//! Compile with FMA contraction off (`-ffp-contract=off`) for the double
//! build to track the library to the last few ulps.
//!
//! Next to the source goes a conformance bundle: 100 input vectors with the
//! library's own outputs, in the fingerprint CSV format.

use std::fmt::Write as _;

use rssiloc_core::{rng, Activation, Dataset, MinMax, MlpModel, Position, RssiVector, Sample};

use crate::Result;

/// Conformance vectors per export.
pub const CONFORMANCE_VECTORS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }

    /// Largest allowed distance, in meters, between exported and library
    /// positions on the conformance vectors.
    pub fn tolerance_m(self) -> f64 {
        match self {
            Precision::F32 => 1e-4,
            Precision::F64 => 1e-12,
        }
    }

    fn c_type(self) -> &'static str {
        match self {
            Precision::F32 => "float",
            Precision::F64 => "double",
        }
    }

    /// A C literal that parses back to exactly the stored value (after
    /// rounding to `float` in single precision).
    fn literal(self, x: f64) -> String {
        match self {
            Precision::F32 => format!("{:e}f", x as f32),
            Precision::F64 => format!("{x:e}"),
        }
    }

    fn func(self, name: &str) -> String {
        match self {
            Precision::F32 => format!("{name}f"),
            Precision::F64 => name.to_string(),
        }
    }
}

fn array(out: &mut String, p: Precision, name: &str, values: &[f64]) {
    let t = p.c_type();
    writeln!(out, "static const {t} {name}[{}] = {{", values.len()).unwrap();
    for chunk in values.chunks(4) {
        let items: Vec<String> = chunk.iter().map(|&v| p.literal(v)).collect();
        writeln!(out, "    {},", items.join(", ")).unwrap();
    }
    out.push_str("};\n");
}

fn norm_arrays(out: &mut String, p: Precision, prefix: &str, norm: &[MinMax]) {
    array(out, p, &format!("rssiloc_{prefix}_min"), &norm.iter().map(|n| n.min).collect::<Vec<_>>());
    array(out, p, &format!("rssiloc_{prefix}_max"), &norm.iter().map(|n| n.max).collect::<Vec<_>>());
}

pub fn c_source(model: &MlpModel, precision: Precision) -> String {
    let p = precision;
    let t = p.c_type();
    let sizes = model.layer_sizes();
    let shape: Vec<String> = sizes.iter().map(usize::to_string).collect();
    let lit = |x: f64| p.literal(x);
    let mut s = String::new();

    writeln!(s, "/*").unwrap();
    writeln!(s, " * rssiloc network {} ({t}), model seed {}.", shape.join("-"), model.seed()).unwrap();
    writeln!(s, " * Input: RSSI in dBm, one reading per anchor in ascending anchor id.").unwrap();
    writeln!(s, " * Output: position[0] = x, position[1] = y, in meters.").unwrap();
    writeln!(s, " */").unwrap();
    s.push_str("#include <math.h>\n\n");
    writeln!(s, "#define RSSILOC_INPUTS {}", sizes[0]).unwrap();
    writeln!(s, "#define RSSILOC_OUTPUTS {}\n", sizes[sizes.len() - 1]).unwrap();

    norm_arrays(&mut s, p, "in", model.input_norm());
    norm_arrays(&mut s, p, "out", model.output_norm());
    for k in 0..model.depth() {
        writeln!(s, "/* layer {}: {} -> {}, weights row-major [input][output] */", k + 1, sizes[k], sizes[k + 1])
            .unwrap();
        array(&mut s, p, &format!("rssiloc_w{}", k + 1), model.weights(k));
        array(&mut s, p, &format!("rssiloc_b{}", k + 1), model.biases(k));
    }

    writeln!(s, "\nvoid rssiloc_locate(const {t} rssi[RSSILOC_INPUTS], {t} position[RSSILOC_OUTPUTS])\n{{").unwrap();
    for (k, &n) in sizes.iter().enumerate() {
        writeln!(s, "    {t} a{k}[{n}];").unwrap();
    }
    s.push_str("    int i, j;\n\n");
    writeln!(s, "    for (i = 0; i < {}; ++i)", sizes[0]).unwrap();
    writeln!(
        s,
        "        a0[i] = {} * (rssi[i] - rssiloc_in_min[i]) / (rssiloc_in_max[i] - rssiloc_in_min[i]) - {};",
        lit(2.0),
        lit(1.0)
    )
    .unwrap();
    for k in 0..model.depth() {
        let (fi, fo, o) = (sizes[k], sizes[k + 1], k + 1);
        writeln!(s, "    for (j = 0; j < {fo}; ++j)\n        a{o}[j] = rssiloc_b{o}[j];").unwrap();
        writeln!(s, "    for (i = 0; i < {fi}; ++i)\n        for (j = 0; j < {fo}; ++j)").unwrap();
        writeln!(s, "            a{o}[j] += a{k}[i] * rssiloc_w{o}[i * {fo} + j];").unwrap();
        match model.activations()[k] {
            Activation::TanSig => {
                writeln!(s, "    for (j = 0; j < {fo}; ++j)\n        a{o}[j] = {}(a{o}[j]);", p.func("tanh")).unwrap()
            }
            Activation::LogSig => writeln!(
                s,
                "    for (j = 0; j < {fo}; ++j)\n        a{o}[j] = {} / ({} + {}(-a{o}[j]));",
                lit(1.0),
                lit(1.0),
                p.func("exp")
            )
            .unwrap(),
            Activation::PureLin => {}
        }
    }
    let last = model.depth();
    writeln!(s, "    for (j = 0; j < RSSILOC_OUTPUTS; ++j)").unwrap();
    writeln!(
        s,
        "        position[j] = (a{last}[j] + {}) * {} * (rssiloc_out_max[j] - rssiloc_out_min[j]) + rssiloc_out_min[j];",
        lit(1.0),
        lit(0.5)
    )
    .unwrap();
    s.push_str("}\n");
    s
}

/// Inputs spread uniformly over each channel's training range widened by a
/// tenth on both sides, paired with the library's position for each.
pub fn conformance_vectors(model: &MlpModel, count: usize) -> Result<Dataset> {
    let mut r = rng::seeded(model.seed() ^ 0x00c0_ffee);
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        let rssi: Vec<f64> = model
            .input_norm()
            .iter()
            .map(|n| {
                let pad = 0.1 * (n.max - n.min);
                n.min - pad + rng::unit(&mut r) * (n.max - n.min + 2.0 * pad)
            })
            .collect();
        let out: Position = model.forward(&rssi)?;
        rows.push(Sample::new(RssiVector::new(rssi)?, out));
    }
    Ok(Dataset::new(model.input_count(), rows, "conformance")?)
}

pub struct ExportBundle {
    pub source: String,
    pub conformance: Dataset,
}

pub fn export(model: &MlpModel, precision: Precision) -> Result<ExportBundle> {
    let mut conformance = conformance_vectors(model, CONFORMANCE_VECTORS)?;
    conformance = Dataset::new(
        conformance.anchor_count(),
        conformance.rows().to_vec(),
        format!("conformance precision={} tolerance_m={:e}", precision.name(), precision.tolerance_m()),
    )?;
    Ok(ExportBundle { source: c_source(model, precision), conformance })
}
