use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::stats::{mean, median, sample_std};
use super::ExperimentError;

const COLUMNS: [&str; 6] = ["problem", "n", "algorithm", "seed", "best_value", "fes_used"];

/// Best-value statistics for one `(problem, n, algorithm)` group.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub n: usize,
    pub algorithm: String,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub median: f64,
    pub min: f64,
}

/// Summarises a campaign CSV. Groups come out sorted by key.
pub fn mean_best_report<R: Read>(input: R) -> Result<Vec<SummaryRow>, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(ExperimentError::Parse { line: 1, message: "empty file".into() }),
        Some(h) => h?,
    };
    if header.iter().ne(COLUMNS) {
        return Err(ExperimentError::Parse { line: 1, message: format!("expected header {}", COLUMNS.join(",")) });
    }
    let mut groups: BTreeMap<(String, usize, String), Vec<f64>> = BTreeMap::new();
    for record in records {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| ExperimentError::Parse { line, message };
        if record.len() != COLUMNS.len() {
            return Err(bad(format!("expected {} fields, found {}", COLUMNS.len(), record.len())));
        }
        let n: usize = record[1].parse().map_err(|_| bad(format!("bad n {:?}", &record[1])))?;
        let value: f64 = record[4].parse().map_err(|_| bad(format!("bad best_value {:?}", &record[4])))?;
        if !value.is_finite() {
            return Err(bad(format!("non-finite best_value {value}")));
        }
        groups.entry((record[0].to_string(), n, record[2].to_string())).or_default().push(value);
    }
    if groups.is_empty() {
        return Err(ExperimentError::Parse { line: 2, message: "no data rows".into() });
    }
    Ok(groups
        .into_iter()
        .map(|((problem, n, algorithm), v)| SummaryRow {
            problem,
            n,
            algorithm,
            count: v.len(),
            mean: mean(&v),
            std: if v.len() > 1 { sample_std(&v) } else { 0.0 },
            median: median(&v),
            min: v.iter().copied().fold(f64::INFINITY, f64::min),
        })
        .collect())
}

pub fn write_report<W: Write>(rows: &[SummaryRow], out: W) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["problem", "n", "algorithm", "count", "mean", "std", "median", "min"])?;
    for r in rows {
        w.write_record([
            r.problem.clone(),
            r.n.to_string(),
            r.algorithm.clone(),
            r.count.to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.median.to_string(),
            r.min.to_string(),
        ])?;
    }
    w.flush().map_err(ExperimentError::io("report"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEAD: &str = "problem,n,algorithm,seed,best_value,fes_used\n";

    #[test]
    fn single_row_collapses() {
        let rows = mean_best_report(format!("{HEAD}ellipsoid,5,kan-sps-reg,0,0.25,2000\n").as_bytes()).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!((r.count, r.mean, r.min, r.median, r.std), (1, 0.25, 0.25, 0.25, 0.0));
    }

    #[test]
    fn two_rows_use_sample_std() {
        let text = format!("{HEAD}ackley,10,kan-sas-1,0,1,300\nackley,10,kan-sas-1,1,3,300\n");
        let r = &mean_best_report(text.as_bytes()).unwrap()[0];
        assert_eq!((r.mean, r.std, r.median, r.min), (2.0, 2f64.sqrt(), 2.0, 1.0));
    }

    #[test]
    fn groups_are_distinct_keys() {
        let text = format!(
            "{HEAD}ackley,5,a,0,1,1\nackley,10,a,0,1,1\nackley,5,b,0,1,1\nackley,5,a,1,2,1\n"
        );
        let rows = mean_best_report(text.as_bytes()).unwrap();
        assert_eq!(rows.len(), 3);
        let mut buf = Vec::new();
        write_report(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 4);
    }

    #[test]
    fn empty_and_malformed_inputs_report_lines() {
        assert!(matches!(mean_best_report(&b""[..]), Err(ExperimentError::Parse { line: 1, .. })));
        assert!(matches!(mean_best_report(HEAD.as_bytes()), Err(ExperimentError::Parse { .. })));
        let text = format!("{HEAD}ackley,5,a,0,1,1\nackley,5,a,1,oops,1\n");
        assert!(matches!(mean_best_report(text.as_bytes()), Err(ExperimentError::Parse { line: 3, .. })));
        let text = format!("{HEAD}ackley,5,a\n");
        assert!(matches!(mean_best_report(text.as_bytes()), Err(ExperimentError::Parse { line: 2, .. })));
        assert!(matches!(mean_best_report(&b"a,b\n1,2\n"[..]), Err(ExperimentError::Parse { line: 1, .. })));
    }
}
