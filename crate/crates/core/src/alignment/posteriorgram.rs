use std::fmt::Write as _;

use ndarray::Array2;

use super::{AlignmentError, PhonemeInventory};

/// Row tolerance for posteriorgrams built in-process.
pub const ROW_TOLERANCE: f64 = 1e-6;
/// Row tolerance for externally supplied posteriorgram files.
pub const EXTERNAL_ROW_TOLERANCE: f64 = 1e-3;

/// Frames x (symbols + blank) row-stochastic matrix. Column layout follows
/// [`PhonemeInventory::column`].
#[derive(Debug, Clone, PartialEq)]
pub struct Posteriorgram {
    probs: Array2<f64>,
    frame_rate: f64,
    blank_index: usize,
}

impl Posteriorgram {
    pub fn new(probs: Array2<f64>, frame_rate: f64, blank_index: usize) -> Result<Self, AlignmentError> {
        Self::with_tolerance(probs, frame_rate, blank_index, ROW_TOLERANCE)
            .map_err(AlignmentError::InvalidPosteriorgram)
    }

    fn with_tolerance(
        probs: Array2<f64>,
        frame_rate: f64,
        blank_index: usize,
        tol: f64,
    ) -> Result<Self, String> {
        if probs.ncols() < 2 {
            return Err("need at least one symbol column plus blank".into());
        }
        if blank_index >= probs.ncols() {
            return Err(format!("blank index {blank_index} out of range"));
        }
        if !(frame_rate > 0.0) {
            return Err("frame rate must be positive".into());
        }
        for (t, row) in probs.rows().into_iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(format!("row {t} has entries outside [0, 1]"));
            }
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > tol {
                return Err(format!("row {t} sums to {sum}"));
            }
        }
        Ok(Self {
            probs,
            frame_rate,
            blank_index,
        })
    }

    pub fn frames(&self) -> usize {
        self.probs.nrows()
    }

    pub fn n_symbols(&self) -> usize {
        self.probs.ncols() - 1
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn blank_index(&self) -> usize {
        self.blank_index
    }

    pub fn probs(&self) -> &Array2<f64> {
        &self.probs
    }

    fn column(&self, sym: Option<usize>) -> usize {
        match sym {
            None => self.blank_index,
            Some(s) if s < self.blank_index => s,
            Some(s) => s + 1,
        }
    }

    /// Probability of `sym` (or blank for `None`) at frame `t`.
    pub fn prob(&self, t: usize, sym: Option<usize>) -> f64 {
        self.probs[[t, self.column(sym)]]
    }

    pub fn check_inventory(&self, inv: &PhonemeInventory) -> Result<(), AlignmentError> {
        if self.n_symbols() != inv.len() || self.blank_index != inv.blank_index() {
            return Err(AlignmentError::InvalidPosteriorgram(format!(
                "posteriorgram has {} symbols (blank at {}), inventory has {} (blank at {})",
                self.n_symbols(),
                self.blank_index,
                inv.len(),
                inv.blank_index()
            )));
        }
        Ok(())
    }

    /// Parses the external matrix format: a header line
    /// `frames channels frame_rate` followed by row-major ASCII floats.
    pub fn parse_external(text: &str, blank_index: usize) -> Result<Self, AlignmentError> {
        let bad = |m: String| AlignmentError::BadExternalFile(m);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(bad(format!("header {header:?} needs 3 fields")));
        }
        let frames: usize = fields[0].parse().map_err(|_| bad("bad frame count".into()))?;
        let channels: usize = fields[1].parse().map_err(|_| bad("bad channel count".into()))?;
        let frame_rate: f64 = fields[2].parse().map_err(|_| bad("bad frame rate".into()))?;
        let values = lines
            .flat_map(str::split_whitespace)
            .map(|v| v.parse::<f64>().map_err(|_| bad(format!("bad value {v:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != frames * channels {
            return Err(bad(format!(
                "expected {} values, found {}",
                frames * channels,
                values.len()
            )));
        }
        let probs = Array2::from_shape_vec((frames, channels), values).map_err(|e| bad(e.to_string()))?;
        Self::with_tolerance(probs, frame_rate, blank_index, EXTERNAL_ROW_TOLERANCE).map_err(bad)
    }

    pub fn to_external(&self) -> String {
        let mut out = format!("{} {} {}\n", self.frames(), self.probs.ncols(), self.frame_rate);
        for row in self.probs.rows() {
            let line: Vec<String> = row.iter().map(|p| format!("{p:e}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn external_round_trip() {
        let probs = Array2::from_shape_vec((2, 3), vec![0.2, 0.5, 0.3, 0.1, 0.1, 0.8]).unwrap();
        let p = Posteriorgram::new(probs, 62.5, 0).unwrap();
        let back = Posteriorgram::parse_external(&p.to_external(), 0).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn external_rows_must_be_stochastic() {
        let text = "2 3 62.5\n0.2 0.5 0.3\n0.1 0.1 0.7\n";
        assert!(matches!(
            Posteriorgram::parse_external(text, 0),
            Err(AlignmentError::BadExternalFile(_))
        ));
        let loose = "1 3 62.5\n0.2 0.5 0.3005\n";
        assert!(Posteriorgram::parse_external(loose, 0).is_ok());
    }

    #[test]
    fn external_shape_checked() {
        assert!(Posteriorgram::parse_external("2 3 62.5\n0.2 0.5 0.3\n", 0).is_err());
        assert!(Posteriorgram::parse_external("", 0).is_err());
    }

    #[test]
    fn prob_uses_blank_layout() {
        let probs = Array2::from_shape_vec((1, 3), vec![0.5, 0.3, 0.2]).unwrap();
        let p = Posteriorgram::new(probs, 10.0, 1).unwrap();
        assert_eq!(p.prob(0, None), 0.3);
        assert_eq!(p.prob(0, Some(0)), 0.5);
        assert_eq!(p.prob(0, Some(1)), 0.2);
    }
}
