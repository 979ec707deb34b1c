//! Standard Workload Format: 18 whitespace-separated fields per job, `;`
//! comment lines. Only job id (1), submit time (2), run time (4), status (11)
//! and user id (12) are used.

use std::io::{BufRead, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use crate::des::SimTime;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwfRecord {
    pub job_id: u64,
    pub submit_time: SimTime,
    pub run_time_s: u64,
    pub status: i64,
    pub user_id: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SwfTrace {
    /// Accepted records in submit order.
    pub records: Vec<SwfRecord>,
    pub skipped: usize,
}

pub fn parse_swf<R: BufRead>(source: R, limit: Option<usize>) -> Result<SwfTrace> {
    let mut records = vec![];
    let mut skipped = 0;
    for (i, line) in source.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<swf>", e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with(';') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 12 {
            return Err(Error::parse(i + 1, format!("expected 18 fields, found {}", fields.len())));
        }
        let num = |idx: usize| -> Result<i64> {
            let f = fields[idx];
            f.parse::<i64>()
                .or_else(|_| f.parse::<f64>().map(|v| v.round() as i64))
                .map_err(|_| Error::parse(i + 1, format!("field {} `{f}` is not numeric", idx + 1)))
        };
        let (id, submit, run, status, user) = (num(0)?, num(1)?, num(3)?, num(10)?, num(11)?);
        if run <= 0 || submit < 0 || id < 0 {
            skipped += 1;
            continue;
        }
        records.push(SwfRecord {
            job_id: id as u64,
            submit_time: submit as SimTime,
            run_time_s: run as u64,
            status,
            user_id: user.max(0) as u32,
        });
    }
    records.sort_by_key(|r| (r.submit_time, r.job_id));
    if let Some(limit) = limit {
        records.truncate(limit);
    }
    if records.is_empty() {
        return Err(Error::EmptyWorkload { skipped });
    }
    Ok(SwfTrace { records, skipped })
}

pub fn write_swf<W: Write>(records: &[SwfRecord], header: &str, mut sink: W) -> std::io::Result<()> {
    writeln!(sink, "; Version: 2.2")?;
    for line in header.lines() {
        writeln!(sink, "; {line}")?;
    }
    for r in records {
        writeln!(
            sink,
            "{} {} -1 {} 1 -1 -1 1 -1 -1 {} {} 1 1 1 -1 -1 -1",
            r.job_id, r.submit_time, r.run_time_s, r.status, r.user_id
        )?;
    }
    Ok(())
}

/// A bursty stream of grid-style jobs: users submit batches of similar jobs,
/// each user having a characteristic job length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSwfParams {
    pub jobs: usize,
    pub days: f64,
    pub users: u32,
    /// Median of users' typical reference runtime.
    pub median_runtime_s: f64,
    /// Log-space spread of users' typical runtimes.
    pub user_spread: f64,
    /// Log-space spread of a job around its user's typical runtime.
    pub job_spread: f64,
    pub mean_batch: f64,
    pub min_runtime_s: u64,
    pub max_runtime_s: u64,
}

impl Default for SyntheticSwfParams {
    fn default() -> Self {
        SyntheticSwfParams {
            jobs: 1000,
            days: 7.0,
            users: 40,
            median_runtime_s: 4.0 * 3600.0,
            user_spread: 1.0,
            job_spread: 0.35,
            mean_batch: 4.0,
            min_runtime_s: 60,
            max_runtime_s: 72 * 3600,
        }
    }
}

pub fn synthetic_swf<R: Rng>(params: &SyntheticSwfParams, rng: &mut R) -> Result<Vec<SwfRecord>> {
    if params.jobs == 0 || params.users == 0 || !(params.days > 0.0) || !(params.mean_batch >= 1.0) {
        return Err(Error::Config(format!("invalid synthetic workload parameters {params:?}")));
    }
    let user_scale = LogNormal::new(params.median_runtime_s.ln(), params.user_spread)
        .map_err(|e| Error::Config(e.to_string()))?;
    let typical: Vec<f64> = (0..params.users).map(|_| user_scale.sample(rng)).collect();
    let batches = (params.jobs as f64 / params.mean_batch).ceil();
    let span = params.days * 86_400.0;
    let gap = Exp::new(batches / span).expect("positive rate");
    let jitter = LogNormal::new(0.0, params.job_spread).map_err(|e| Error::Config(e.to_string()))?;
    let mut out = Vec::with_capacity(params.jobs);
    let mut t = 0.0f64;
    while out.len() < params.jobs {
        t += gap.sample(rng);
        let user = rng.random_range(0..params.users);
        let size = 1 + (rng.random::<f64>() * (2.0 * params.mean_batch - 1.0)) as usize;
        let mut at = t;
        for _ in 0..size {
            if out.len() == params.jobs {
                break;
            }
            let run = (typical[user as usize] * jitter.sample(rng)).round() as u64;
            out.push(SwfRecord {
                job_id: out.len() as u64 + 1,
                submit_time: (at % span) as SimTime,
                run_time_s: run.clamp(params.min_runtime_s, params.max_runtime_s),
                status: 1,
                user_id: user + 1,
            });
            at += rng.random_range(5.0..120.0);
        }
    }
    out.sort_by_key(|r| (r.submit_time, r.job_id));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStreams;

    const SAMPLE: &str = "\
; Version: 2.2
; Computer: test
1 0 -1 4215 1 -1 -1 1 -1 -1 1 17 1 1 1 -1 -1 -1
2 10 -1 -1 1 -1 -1 1 -1 -1 0 3 1 1 1 -1 -1 -1
3 5 -1 100 1 -1 -1 1 -1 -1 1 4 1 1 1 -1 -1 -1
";

    #[test]
    fn maps_fields_and_skips_bad_records() {
        let t = parse_swf(SAMPLE.as_bytes(), None).unwrap();
        assert_eq!(t.skipped, 1);
        assert_eq!(t.records.len(), 2);
        assert_eq!(t.records[1].job_id, 3, "sorted by submit time");
        let r = &t.records[0];
        assert_eq!((r.run_time_s, r.user_id, r.status), (4215, 17, 1));
    }

    #[test]
    fn limit_truncates() {
        let t = parse_swf(SAMPLE.as_bytes(), Some(1)).unwrap();
        assert_eq!(t.records.len(), 1);
    }

    #[test]
    fn empty_workload_is_error() {
        let err = parse_swf("; only comments\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::EmptyWorkload { skipped: 0 }));
    }

    #[test]
    fn short_line_is_parse_error() {
        let err = parse_swf("1 2 3\n".as_bytes(), None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn synthetic_roundtrips_through_writer() {
        let params = SyntheticSwfParams { jobs: 200, ..Default::default() };
        let recs = synthetic_swf(&params, &mut RandomStreams::new(9).stream("w")).unwrap();
        assert_eq!(recs.len(), 200);
        let mut buf = vec![];
        write_swf(&recs, "synthetic", &mut buf).unwrap();
        let back = parse_swf(buf.as_slice(), None).unwrap();
        assert_eq!(back.records, recs);
    }
}
