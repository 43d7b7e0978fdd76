use std::path::{Path, PathBuf};

use super::{HGIndex, ModeFamily, ModeSuperposition, MAX_ORDER, NORM_TOLERANCE};
use crate::error::{Error, Result};

/// A non-fatal finding raised while reading a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub line: usize,
    pub label: String,
    pub message: String,
}

/// Parsed mode table. Entries carry a unit waist; rescale with
/// [`ModeSuperposition::with_waist`].
#[derive(Debug, Clone, Default)]
pub struct ModeTable {
    pub modes: Vec<ModeSuperposition>,
    pub warnings: Vec<Diagnostic>,
}

impl ModeTable {
    pub fn get(&self, label: &str) -> Option<&ModeSuperposition> {
        self.modes.iter().find(|m| m.label == label)
    }
}

/// Read a coefficient table: one mode per line as `label, l1,m1,a1, l2,m2,a2, ...`.
///
/// Labels starting with `IG` are treated as Ince-derived and must keep a
/// single HG order. Blank lines and `#` comments are skipped.
pub fn load_mode_table(path: impl AsRef<Path>) -> Result<ModeTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mode_table(&text, path)
}

/// Parse table text; `origin` only labels error messages.
pub fn parse_mode_table(text: &str, origin: impl Into<PathBuf>) -> Result<ModeTable> {
    let origin = origin.into();
    let mut table = ModeTable::default();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fail = |message: String| Error::ModeTable {
            path: origin.clone(),
            line: line_no,
            message,
        };

        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        let label = fields[0];
        if label.is_empty() {
            return Err(fail("missing label".into()));
        }
        let rest = &fields[1..];
        if rest.is_empty() || rest.len() % 3 != 0 {
            return Err(fail(format!("expected (l, m, coefficient) triplets after {label}, got {} fields", rest.len())));
        }

        let mut terms = Vec::with_capacity(rest.len() / 3);
        for triplet in rest.chunks(3) {
            let l: u32 = triplet[0].parse().map_err(|_| fail(format!("bad index {:?}", triplet[0])))?;
            let m: u32 = triplet[1].parse().map_err(|_| fail(format!("bad index {:?}", triplet[1])))?;
            let a: f64 = triplet[2].parse().map_err(|_| fail(format!("bad coefficient {:?}", triplet[2])))?;
            if !a.is_finite() {
                return Err(fail(format!("non-finite coefficient {a}")));
            }
            if l as usize > MAX_ORDER || m as usize > MAX_ORDER {
                return Err(fail(format!("index ({l}, {m}) exceeds supported order {MAX_ORDER}")));
            }
            terms.push((HGIndex::new(l, m), a));
        }

        let family = if label.starts_with("IG") {
            ModeFamily::Ince
        } else {
            ModeFamily::Hermite
        };
        if family == ModeFamily::Ince {
            let order = terms[0].0.order();
            if terms.iter().any(|(idx, _)| idx.order() != order) {
                return Err(fail(format!("{label} mixes HG orders")));
            }
        }
        if table.get(label).is_some() {
            return Err(fail(format!("duplicate label {label}")));
        }

        let mode = ModeSuperposition {
            label: label.to_string(),
            family,
            waist: 1.0,
            terms,
        };
        let norm = mode.coefficient_norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            let message = format!("sum of squared coefficients is {norm:.6}, outside 1 ± {NORM_TOLERANCE}");
            log::warn!("{}:{line_no}: {label}: {message}", origin.display());
            table.warnings.push(Diagnostic {
                line: line_no,
                label: label.to_string(),
                message,
            });
        }
        table.modes.push(mode);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ModeTable> {
        parse_mode_table(text, "inline.csv")
    }

    #[test]
    fn ince_row() {
        let table = parse("IG_o_5_5, 4,1,0.755, 2,3,-0.643, 0,5,0.130\n").unwrap();
        assert!(table.warnings.is_empty());
        let mode = &table.modes[0];
        assert_eq!(mode.family, ModeFamily::Ince);
        assert_eq!(mode.terms, super::super::ig_odd_5_5(1.0).terms);
    }

    #[test]
    fn empty_and_comment_only() {
        assert!(parse("").unwrap().modes.is_empty());
        assert!(parse("# nothing here\n\n   \n").unwrap().modes.is_empty());
    }

    #[test]
    fn norm_violation_is_a_warning() {
        let table = parse("half, 0,0,0.5, 1,0,0.5\n").unwrap();
        assert_eq!(table.modes.len(), 1);
        assert_eq!(table.warnings.len(), 1);
        assert_eq!(table.warnings[0].line, 1);
    }

    #[test]
    fn malformed_rows() {
        for bad in ["lonely", "x, 0,0", "x, a,0,1.0", "x, 0,0,nan", ", 0,0,1", "x, 99,0,1.0"] {
            let err = parse(bad).unwrap_err();
            assert!(matches!(err, Error::ModeTable { line: 1, .. }), "{bad}: {err}");
        }
    }

    #[test]
    fn mixed_order_ince_is_an_error() {
        assert!(parse("IG_x, 1,0,0.7, 1,1,0.7").is_err());
        assert!(parse("HG_mix, 1,0,0.7071, 1,1,0.7071").is_ok());
    }

    #[test]
    fn error_reports_line() {
        let err = parse("# header\nok, 0,0,1\nbroken, 1,1\n").unwrap_err();
        assert!(matches!(err, Error::ModeTable { line: 3, .. }));
    }
}
