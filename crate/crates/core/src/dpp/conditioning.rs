use super::{enumerate_distribution_capped, inclusion_prob, Frame, NULL_EVENT_TOL};
use crate::error::{Error, Result};
use crate::exterior::IndexCombo;
use crate::linalg;

/// Above this many subsets the oracle cross-check is skipped.
const CROSS_CHECK_CAP: usize = 100_000;
const CROSS_CHECK_TOL: f64 = 1e-10;

/// A frame on the ground set with one point removed. `labels[i]` is the
/// original (1-based) label of new point `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionedFrame {
    pub frame: Frame,
    pub labels: Vec<usize>,
    /// Largest deviation from the oracle conditional law, when it was computed.
    pub oracle_delta: Option<f64>,
}

impl ConditionedFrame {
    /// Maps a set of original labels onto the reduced ground set.
    pub fn relabel(&self, s: &IndexCombo) -> Result<IndexCombo> {
        let idx = s
            .iter()
            .map(|i| {
                self.labels
                    .binary_search(&i)
                    .map(|pos| pos + 1)
                    .map_err(|_| Error::InvalidCombo(format!("point {i} was removed by conditioning")))
            })
            .collect::<Result<Vec<_>>>()?;
        IndexCombo::new(idx)
    }
}

/// Frame of `φ_y = (φ | y ∈ φ) \ {y}`.
///
/// A Householder reflection `Q` sends `z_y` to `‖z_y‖ e_1`; the rows `2..p` of
/// `QZ` vanish at column `y` and, with that column removed, form the new
/// frame. Expanding `det(QZ[:, S∪{y}])` along column `y` shows the law is
/// `P(φ = S∪{y}) / P(y ∈ φ)`. When the table is small the result is compared
/// against the oracle conditional law.
pub fn condition_on_point(f: &Frame, y: usize) -> Result<ConditionedFrame> {
    f.check_index(y)?;
    if f.p() < 2 {
        return Err(Error::Precondition("conditioning a one-point process leaves nothing".into()));
    }
    let py = inclusion_prob(f, &IndexCombo::singleton(y))?;
    if py <= NULL_EVENT_TOL {
        return Err(Error::NullConditioning(py));
    }
    let q = linalg::householder_to_e1(f.column(y));
    let qz = q.matmul(&f.to_matrix())?;
    let labels: Vec<usize> = (1..=f.n()).filter(|&i| i != y).collect();
    let rows: Vec<Vec<f64>> =
        (1..f.p()).map(|r| labels.iter().map(|&j| qz.get(r, j - 1)).collect()).collect();
    let frame = Frame::from_rows_lenient(rows)?;
    let mut out = ConditionedFrame { frame, labels, oracle_delta: None };
    if let (Ok(full), Ok(reduced)) = (
        enumerate_distribution_capped(f, CROSS_CHECK_CAP),
        enumerate_distribution_capped(&out.frame, CROSS_CHECK_CAP),
    ) {
        let (cond, _) = full.condition(|s| s.binary_search(&y).is_ok())?;
        let mut delta: f64 = 0.0;
        for (s, v) in reduced.iter() {
            let original: Vec<usize> = s.iter().map(|i| out.labels[i - 1]).chain([y]).collect();
            let t = IndexCombo::from_unsorted(original)?;
            delta = delta.max((cond.get(&t) - v).abs());
        }
        if delta > CROSS_CHECK_TOL {
            return Err(Error::Consistency(format!(
                "conditioned frame deviates from the oracle law by {delta:e}"
            )));
        }
        out.oracle_delta = Some(delta);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::enumerate_distribution;

    #[test]
    fn example1_point_one() {
        let c = condition_on_point(&Frame::example1(), 1).unwrap();
        assert_eq!(c.labels, vec![2, 3, 4]);
        assert_eq!(c.frame.p(), 1);
        let d = enumerate_distribution(&c.frame).unwrap();
        let m = d.marginals();
        assert!((m[0] - 0.5).abs() < 1e-15);
        assert!(m[1].abs() < 1e-15);
        assert!((m[2] - 0.5).abs() < 1e-15);
        assert!(c.oracle_delta.unwrap() < 1e-15);
        assert_eq!(c.relabel(&IndexCombo::new(vec![2, 4]).unwrap()).unwrap().as_slice(), &[1, 3]);
        assert!(c.relabel(&IndexCombo::singleton(1)).is_err());
    }

    #[test]
    fn unit_row_is_deleted() {
        let f = Frame::new(vec![vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.6, 0.8, 0.0]]).unwrap();
        let c = condition_on_point(&f, 1).unwrap();
        assert_eq!(c.frame.rows(), &[vec![0.6, 0.8, 0.0]]);
    }

    #[test]
    fn null_point_is_rejected() {
        let f = Frame::new(vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).unwrap();
        assert!(matches!(condition_on_point(&f, 3), Err(Error::NullConditioning(_))));
    }
}
