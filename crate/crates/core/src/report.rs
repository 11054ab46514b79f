//! Plot-ready files: local-test tables, their summaries, test-point grids
//! and embedding coordinates.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::embed::EmbeddingResult;
use crate::error::{Error, Result};
use crate::multitest::Correction;
use crate::permutation::LocalTestReport;

/// Axis-aligned 2-D lattice written `AxB:xmin,xmax,ymin,ymax`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid '{s}' is not of the form AxB:xmin,xmax,ymin,ymax"));
        let (counts, bounds) = s.split_once(':').ok_or_else(bad)?;
        let (a, b) = counts.split_once(['x', 'X']).ok_or_else(bad)?;
        let nx: usize = a.trim().parse().map_err(|_| bad())?;
        let ny: usize = b.trim().parse().map_err(|_| bad())?;
        let lims: Vec<f64> = bounds.split(',').map(|v| v.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
        let [xmin, xmax, ymin, ymax] = lims[..] else { return Err(bad()) };
        let grid = GridSpec { nx, ny, xmin, xmax, ymin, ymax };
        grid.validate()?;
        Ok(grid)
    }
}

impl std::fmt::Display for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}:{},{},{},{}", self.nx, self.ny, self.xmin, self.xmax, self.ymin, self.ymax)
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidParameter("grid has no points".into()));
        }
        if ![self.xmin, self.xmax, self.ymin, self.ymax].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("grid bounds must be finite".into()));
        }
        if self.xmin > self.xmax || self.ymin > self.ymax {
            return Err(Error::InvalidParameter("grid bounds are reversed".into()));
        }
        Ok(())
    }

    /// Lattice points with `x` varying slowest. Both ends of each axis are
    /// included; a single point sits at the middle of its axis.
    pub fn points(&self) -> Result<FeatureMatrix> {
        self.validate()?;
        let axis = |n: usize, lo: f64, hi: f64| -> Vec<f64> {
            if n == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
            }
        };
        let xs = axis(self.nx, self.xmin, self.xmax);
        let ys = axis(self.ny, self.ymin, self.ymax);
        let values: Vec<f64> = xs.iter().flat_map(|&x| ys.iter().flat_map(move |&y| [x, y])).collect();
        FeatureMatrix::new(values, self.nx * self.ny, 2)
    }
}

/// Counts behind the red/blue/gray legend of a local-test map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSummary {
    pub estimator: String,
    pub pi1: f64,
    pub permutations: usize,
    pub alpha: f64,
    pub correction: Correction,
    pub seed: u64,
    pub points: usize,
    pub rejected: usize,
    pub red: usize,
    pub blue: usize,
    pub gray: usize,
}

impl LocalSummary {
    pub fn new(report: &LocalTestReport) -> Self {
        let (red, blue, gray) = report.color_counts();
        Self {
            estimator: report.estimator.clone(),
            pi1: report.pi1,
            permutations: report.permutations,
            alpha: report.alpha,
            correction: report.correction,
            seed: report.seed,
            points: report.points.len(),
            rejected: red + blue,
            red,
            blue,
            gray,
        }
    }
}

/// One row per test point: id, coordinates, statistic, estimate, raw
/// p-value, adjusted decision, sign and colour.
pub fn write_local_csv<W: Write>(report: &LocalTestReport, points: &FeatureMatrix, out: W) -> Result<()> {
    if points.rows() != report.points.len() {
        return Err(Error::InvalidParameter(format!(
            "{} test points but {} local results",
            points.rows(),
            report.points.len()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["point_id".to_string()];
    header.extend((1..=points.cols()).map(|j| format!("x{j}")));
    header.extend(["statistic", "estimate", "p_value", "reject", "sign", "color"].map(String::from));
    w.write_record(&header)?;
    for (i, (row, p)) in points.iter_rows().zip(&report.points).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        rec.extend([
            p.statistic.to_string(),
            p.estimate.to_string(),
            p.p_value.to_string(),
            p.reject.to_string(),
            p.sign.to_string(),
            p.color().to_string(),
        ]);
        w.write_record(&rec)?;
    }
    flush(w)
}

/// Decision of one test point, as read back from a local-test CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointDecision {
    pub reject: bool,
    pub sign: i8,
    pub color: String,
}

/// Read the `reject`, `sign` and `color` columns of a file written by
/// [`write_local_csv`], in row order.
pub fn read_local_decisions<R: Read>(input: R) -> Result<Vec<PointDecision>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::Schema(format!("local report has no '{name}' column")))
    };
    let (ci, cs, cc) = (col("reject")?, col("sign")?, col("color")?);
    r.records()
        .enumerate()
        .map(|(line, rec)| {
            let rec = rec?;
            let field = |c: usize| rec.get(c).unwrap_or("").trim();
            let bad = |what: &str| Error::Schema(format!("row {}: cannot parse {what} '{}'", line + 1, field(ci)));
            Ok(PointDecision {
                reject: field(ci).parse().map_err(|_| bad("reject"))?,
                sign: field(cs).parse().map_err(|_| bad("sign"))?,
                color: field(cc).to_string(),
            })
        })
        .collect()
}

/// Coordinates CSV: `point_id, psi1..psim`, plus `decision` and `sign`
/// when decisions are joined. Decisions are matched by row order and must
/// cover exactly the embedded points.
pub fn write_embedding_csv<W: Write>(emb: &EmbeddingResult, decisions: Option<&[PointDecision]>, out: W) -> Result<()> {
    let c = &emb.coordinates;
    if let Some(d) = decisions {
        if d.len() != c.rows() {
            return Err(Error::InvalidParameter(format!(
                "cannot join {} decisions onto {} embedded points",
                d.len(),
                c.rows()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["point_id".to_string()];
    header.extend((1..=c.cols()).map(|j| format!("psi{j}")));
    if decisions.is_some() {
        header.extend(["decision".to_string(), "sign".to_string()]);
    }
    w.write_record(&header)?;
    for (i, row) in c.iter_rows().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|v| v.to_string()));
        if let Some(d) = decisions {
            rec.extend([d[i].color.clone(), d[i].sign.to_string()]);
        }
        w.write_record(&rec)?;
    }
    flush(w)
}

fn flush<W: Write>(mut w: csv::Writer<W>) -> Result<()> {
    w.flush().map_err(|source| Error::Io { path: "<writer>".into(), source })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permutation::LocalPoint;

    fn report(n: usize) -> LocalTestReport {
        let points = (0..n)
            .map(|i| LocalPoint {
                statistic: 0.1 * i as f64,
                estimate: 0.5,
                sign: [1, -1, 0][i % 3],
                p_value: 0.01,
                reject: i % 3 != 2,
            })
            .collect();
        LocalTestReport {
            estimator: "knn".into(),
            pi1: 0.5,
            permutations: 99,
            alpha: 0.05,
            correction: Correction::Hochberg,
            seed: 1,
            points,
        }
    }

    #[test]
    fn grid_parsing_and_points() {
        let g: GridSpec = "50x50:-4,4,-4,4".parse().unwrap();
        assert_eq!((g.nx, g.ny, g.xmin, g.ymax), (50, 50, -4.0, 4.0));
        let p = g.points().unwrap();
        assert_eq!((p.rows(), p.cols()), (2500, 2));
        assert_eq!(p.row(0), &[-4.0, -4.0]);
        assert_eq!(p.row(1)[1], -4.0 + 8.0 / 49.0);
        assert_eq!(p.row(2499), &[4.0, 4.0]);
        assert_eq!(g.to_string().parse::<GridSpec>().unwrap(), g);
        let one: GridSpec = "1x3:0,2,0,1".parse().unwrap();
        assert_eq!(one.points().unwrap().row(2), &[1.0, 1.0]);
        for bad in ["0x5:0,1,0,1", "5x5:0,1,0", "5:0,1,0,1", "axb:0,1,0,1", "2x2:1,0,0,1", "2x2:0,inf,0,1"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn summary_counts_colours() {
        let s = LocalSummary::new(&report(7));
        assert_eq!((s.points, s.red, s.blue, s.gray, s.rejected), (7, 3, 2, 2, 5));
    }

    #[test]
    fn local_csv_round_trips_decisions() {
        let r = report(4);
        let pts = FeatureMatrix::new(vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0], 4, 2).unwrap();
        let mut buf = Vec::new();
        write_local_csv(&r, &pts, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("point_id,x1,x2,statistic,estimate,p_value,reject,sign,color\n"));
        assert_eq!(text.lines().count(), 5);
        let d = read_local_decisions(&buf[..]).unwrap();
        let colors: Vec<&str> = d.iter().map(|d| d.color.as_str()).collect();
        assert_eq!(colors, ["red", "blue", "gray", "red"]);
        assert_eq!(d[1].sign, -1);
        assert!(write_local_csv(&r, &FeatureMatrix::new(vec![0.0; 2], 1, 2).unwrap(), Vec::new()).is_err());
        assert!(read_local_decisions("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn embedding_csv_with_and_without_join() {
        let emb = EmbeddingResult {
            coordinates: FeatureMatrix::new(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 3, 2).unwrap(),
            eigenvalues: vec![0.9, 0.5],
            neighbor_k: 2,
        };
        let mut plain = Vec::new();
        write_embedding_csv(&emb, None, &mut plain).unwrap();
        let plain = String::from_utf8(plain).unwrap();
        assert_eq!(plain.lines().next().unwrap(), "point_id,psi1,psi2");
        assert_eq!(plain.lines().count(), 4);

        let d = vec![PointDecision { reject: true, sign: 1, color: "red".into() }; 3];
        let mut joined = Vec::new();
        write_embedding_csv(&emb, Some(&d), &mut joined).unwrap();
        let joined = String::from_utf8(joined).unwrap();
        assert_eq!(joined.lines().nth(1).unwrap(), "0,0.1,0.2,red,1");
        assert!(write_embedding_csv(&emb, Some(&d[..2]), Vec::new()).is_err());
    }
}
