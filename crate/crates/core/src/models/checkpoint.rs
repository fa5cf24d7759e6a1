//! Plain-text model checkpoints.
//!
//! Layout (whitespace separated, floats printed with the shortest
//! round-trippable representation):
//!
//! ```text
//! reach-model factor 1
//! <n_users> <n_items> <dim>
//! <global_bias>
//! <user biases, one line>
//! <item biases, one line>
//! <n_users lines of user factors>
//! <n_items lines of item factors>
//! ```
//!
//! Linear checkpoints store the kind, the bias block if present, and the
//! dense weight rows. KNN neighborhood metadata is not persisted; the
//! normalized weight rows already encode it.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::models::factor::FactorModel;
use crate::models::linear::{BiasTerms, LinearModelKind, LinearWeightModel};
use crate::models::PreferenceModel;

const MAGIC: &str = "reach-model";
const VERSION: u32 = 1;

fn kind_tag(kind: LinearModelKind) -> &'static str {
    match kind {
        LinearModelKind::ItemKnn => "item-knn",
        LinearModelKind::Ease => "ease",
        LinearModelKind::ExternalSlim => "external-slim",
    }
}

fn kind_from_tag(tag: &str) -> Result<LinearModelKind> {
    match tag {
        "item-knn" => Ok(LinearModelKind::ItemKnn),
        "ease" => Ok(LinearModelKind::Ease),
        "external-slim" => Ok(LinearModelKind::ExternalSlim),
        other => Err(Error::Data(format!("unknown linear model kind '{other}'"))),
    }
}

fn write_floats<W: Write>(writer: &mut W, values: impl Iterator<Item = f64>) -> Result<()> {
    let mut line = String::new();
    for (i, v) in values.enumerate() {
        if i > 0 {
            line.push(' ');
        }
        let _ = write!(line, "{v}");
    }
    writeln!(writer, "{line}")?;
    Ok(())
}

pub fn save<W: Write>(model: &PreferenceModel, mut writer: W) -> Result<()> {
    match model {
        PreferenceModel::Factor(m) => {
            writeln!(writer, "{MAGIC} factor {VERSION}")?;
            writeln!(writer, "{} {} {}", m.n_users(), m.n_items(), m.dim())?;
            writeln!(writer, "{}", m.global_bias)?;
            write_floats(&mut writer, m.user_bias.iter().copied())?;
            write_floats(&mut writer, m.item_bias.iter().copied())?;
            for u in 0..m.n_users() {
                write_floats(&mut writer, m.user_factors.row(u).iter().copied())?;
            }
            for i in 0..m.n_items() {
                write_floats(&mut writer, m.item_factors.row(i).iter().copied())?;
            }
        }
        PreferenceModel::Linear(m) => {
            writeln!(writer, "{MAGIC} linear {VERSION}")?;
            let n_users = m.bias.as_ref().map_or(0, |b| b.user_bias.len());
            writeln!(
                writer,
                "{} {} {} {}",
                kind_tag(m.kind),
                m.n_items(),
                if m.bias.is_some() { 1 } else { 0 },
                n_users
            )?;
            if let Some(b) = &m.bias {
                writeln!(writer, "{}", b.global_bias)?;
                write_floats(&mut writer, b.user_bias.iter().copied())?;
                write_floats(&mut writer, b.item_bias.iter().copied())?;
            }
            for i in 0..m.n_items() {
                write_floats(&mut writer, m.weights.row(i).iter().copied())?;
            }
        }
    }
    Ok(())
}

pub fn save_to_path(model: &PreferenceModel, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    save(model, std::io::BufWriter::new(file))
}

struct LineReader<R: BufRead> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> LineReader<R> {
    fn next_line(&mut self) -> Result<String> {
        self.line_no += 1;
        match self.lines.next() {
            Some(line) => Ok(line?),
            None => Err(Error::Parse {
                line: self.line_no,
                message: "unexpected end of checkpoint".into(),
            }),
        }
    }

    fn floats(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let values: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse).collect();
        let values = values.map_err(|_| Error::Parse {
            line: self.line_no,
            message: "malformed float".into(),
        })?;
        if values.len() != expected {
            return Err(Error::Parse {
                line: self.line_no,
                message: format!("expected {expected} values, found {}", values.len()),
            });
        }
        Ok(values)
    }
}

pub fn load<R: Read>(reader: R) -> Result<PreferenceModel> {
    let mut reader = LineReader {
        lines: BufReader::new(reader).lines(),
        line_no: 0,
    };
    let header = reader.next_line()?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 || fields[0] != MAGIC || fields[2] != VERSION.to_string() {
        return Err(Error::Parse {
            line: 1,
            message: "not a recognized model checkpoint".into(),
        });
    }
    match fields[1] {
        "factor" => {
            let dims = reader.next_line()?;
            let dims: Vec<usize> = dims
                .split_whitespace()
                .map(|f| f.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line: reader.line_no,
                    message: "malformed dimensions".into(),
                })?;
            if dims.len() != 3 {
                return Err(Error::Parse {
                    line: reader.line_no,
                    message: "expected n_users n_items dim".into(),
                });
            }
            let (n, m, d) = (dims[0], dims[1], dims[2]);
            let mu = reader.floats(1)?[0];
            let f = DVector::from_vec(reader.floats(n)?);
            let g = DVector::from_vec(reader.floats(m)?);
            let mut p = DMatrix::zeros(n, d);
            for u in 0..n {
                let row = reader.floats(d)?;
                for (j, v) in row.into_iter().enumerate() {
                    p[(u, j)] = v;
                }
            }
            let mut q = DMatrix::zeros(m, d);
            for i in 0..m {
                let row = reader.floats(d)?;
                for (j, v) in row.into_iter().enumerate() {
                    q[(i, j)] = v;
                }
            }
            Ok(PreferenceModel::Factor(FactorModel::new(p, q, f, g, mu)?))
        }
        "linear" => {
            let meta = reader.next_line()?;
            let fields: Vec<&str> = meta.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Parse {
                    line: reader.line_no,
                    message: "expected kind n_items bias_flag n_users".into(),
                });
            }
            let kind = kind_from_tag(fields[0])?;
            let parse_usize = |s: &str, reader: &LineReader<BufReader<R>>| {
                s.parse::<usize>().map_err(|_| Error::Parse {
                    line: reader.line_no,
                    message: "malformed count".into(),
                })
            };
            let m = parse_usize(fields[1], &reader)?;
            let has_bias = fields[2] == "1";
            let n_users = parse_usize(fields[3], &reader)?;
            let bias = if has_bias {
                let mu = reader.floats(1)?[0];
                let f = DVector::from_vec(reader.floats(n_users)?);
                let g = DVector::from_vec(reader.floats(m)?);
                Some(BiasTerms {
                    user_bias: f,
                    item_bias: g,
                    global_bias: mu,
                })
            } else {
                None
            };
            let mut w = DMatrix::zeros(m, m);
            for i in 0..m {
                let row = reader.floats(m)?;
                for (j, v) in row.into_iter().enumerate() {
                    w[(i, j)] = v;
                }
            }
            Ok(PreferenceModel::Linear(LinearWeightModel::new(
                kind, w, bias, None,
            )?))
        }
        other => Err(Error::Parse {
            line: 1,
            message: format!("unknown model family '{other}'"),
        }),
    }
}

pub fn load_from_path(path: &Path) -> Result<PreferenceModel> {
    let file = std::fs::File::open(path)?;
    load(file)
}
