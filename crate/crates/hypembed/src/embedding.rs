//! Node-to-point embedding with provenance metadata and TSV serialization.

use crate::error::{HypError, Result};
use crate::geometry::PoincarePoint;
use crate::scalar::Scalar;

/// Map from node labels to Poincaré points plus the provenance needed to
/// interpret distances. `scale` is the divisor relating embedded to original
/// distances: `d_original ~= d_H(f(u), f(v)) / scale`.
#[derive(Clone, Debug)]
pub struct Embedding<S> {
    pub labels: Vec<String>,
    pub points: Vec<PoincarePoint<S>>,
    pub method: String,
    pub tau: f64,
    pub scale: f64,
    pub precision_bits: usize,
}

impl<S: Scalar> Embedding<S> {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.dim())
    }

    pub fn point(&self, i: usize) -> &PoincarePoint<S> {
        &self.points[i]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `label<TAB>c1<TAB>...<TAB>cr`, one node per line, coordinates with a
    /// precision-dependent digit count so files round-trip bit-exactly.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (label, p) in self.labels.iter().zip(&self.points) {
            out.push_str(label);
            for c in p.coords() {
                out.push('\t');
                out.push_str(&c.format_sci());
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str, method: &str, scale: f64) -> Result<Self> {
        let mut labels = Vec::new();
        let mut points = Vec::new();
        let mut dim = None;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 {
                return Err(HypError::Parse {
                    line: lineno + 1,
                    msg: "expected label and at least one coordinate".into(),
                });
            }
            let coords: Vec<S> = fields[1..]
                .iter()
                .map(|f| {
                    S::parse_decimal(f).ok_or_else(|| HypError::Parse {
                        line: lineno + 1,
                        msg: format!("bad coordinate {:?}", f),
                    })
                })
                .collect::<Result<_>>()?;
            match dim {
                None => dim = Some(coords.len()),
                Some(d) if d != coords.len() => {
                    return Err(HypError::Parse {
                        line: lineno + 1,
                        msg: format!("inconsistent dimension: {} vs {}", d, coords.len()),
                    })
                }
                _ => {}
            }
            labels.push(fields[0].to_string());
            points.push(PoincarePoint::new_unchecked(coords));
        }
        if points.is_empty() {
            return Err(HypError::Parse { line: 1, msg: "empty embedding file".into() });
        }
        Ok(Embedding {
            labels,
            points,
            method: method.to_string(),
            tau: 1.0,
            scale,
            precision_bits: S::mantissa_bits(),
        })
    }
}
