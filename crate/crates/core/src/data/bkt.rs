//! Bayesian knowledge tracing with the four-parameter model (no forgetting).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BktParams {
    pub p_init: f64,
    pub p_learn: f64,
    pub p_guess: f64,
    pub p_slip: f64,
}

impl BktParams {
    pub fn new(p_init: f64, p_learn: f64, p_guess: f64, p_slip: f64) -> Result<Self> {
        for (name, v) in [
            ("p_init", p_init),
            ("p_learn", p_learn),
            ("p_guess", p_guess),
            ("p_slip", p_slip),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name}={v} outside [0,1]")));
            }
        }
        if p_guess + (1.0 - p_slip) == 0.0 {
            return Err(Error::InvalidParameter(
                "p_guess + (1 - p_slip) == 0: a correct response is impossible".into(),
            ));
        }
        Ok(BktParams {
            p_init,
            p_learn,
            p_guess,
            p_slip,
        })
    }

    /// Probability of a correct response at the given mastery.
    pub fn p_correct(&self, mastery: f64) -> f64 {
        mastery * (1.0 - self.p_slip) + (1.0 - mastery) * self.p_guess
    }

    /// Posterior mastery after observing one response (before learning).
    pub fn posterior(&self, mastery: f64, correct: bool) -> f64 {
        let (known, unknown) = if correct {
            (mastery * (1.0 - self.p_slip), (1.0 - mastery) * self.p_guess)
        } else {
            (mastery * self.p_slip, (1.0 - mastery) * (1.0 - self.p_guess))
        };
        let evidence = known + unknown;
        if evidence <= 0.0 {
            // impossible observation under the model; carry the prior forward
            mastery
        } else {
            (known / evidence).clamp(0.0, 1.0)
        }
    }
}

/// One BKT step: posterior given the response, then the learning transition.
pub fn bkt_update(params: &BktParams, mastery: f64, correct: bool) -> f64 {
    let post = params.posterior(mastery, correct);
    (post + (1.0 - post) * params.p_learn).clamp(0.0, 1.0)
}

fn fold_sequence(params: &BktParams, seq: &[bool]) -> f64 {
    seq.iter()
        .fold(params.p_init, |m, &c| bkt_update(params, m, c))
}

/// Per-student, per-topic correctness sequences in observation order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResponseLog {
    pub students: Vec<(String, BTreeMap<String, Vec<bool>>)>,
}

impl ResponseLog {
    pub fn push(&mut self, student: &str, topic: &str, correct: bool) {
        let pos = match self.students.iter().position(|(s, _)| s == student) {
            Some(p) => p,
            None => {
                self.students.push((student.to_string(), BTreeMap::new()));
                self.students.len() - 1
            }
        };
        self.students[pos]
            .1
            .entry(topic.to_string())
            .or_default()
            .push(correct);
    }

    /// Reads `student,topic,correct` rows (header required, correct in {0,1}).
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::Csv(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let col = |n: &str| {
            header
                .iter()
                .position(|h| h == n)
                .ok_or_else(|| Error::MissingColumn(n.into()))
        };
        let (s, t, c) = (col("student")?, col("topic")?, col("correct")?);
        let mut log = ResponseLog::default();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            let correct = match rec.get(c).map(str::trim) {
                Some("1") => true,
                Some("0") => false,
                other => {
                    return Err(Error::InvalidLabel {
                        row,
                        value: other.unwrap_or("").to_string(),
                    })
                }
            };
            log.push(rec.get(s).unwrap_or("").trim(), rec.get(t).unwrap_or("").trim(), correct);
        }
        Ok(log)
    }

    /// All sequences recorded for `topic`, one per student who attempted it.
    pub fn sequences_for(&self, topic: &str) -> Vec<&[bool]> {
        self.students
            .iter()
            .filter_map(|(_, m)| m.get(topic).map(Vec::as_slice))
            .collect()
    }

    pub fn topics(&self) -> Vec<String> {
        let mut t: Vec<String> = self
            .students
            .iter()
            .flat_map(|(_, m)| m.keys().cloned())
            .collect();
        t.sort();
        t.dedup();
        t
    }
}

/// Final mastery per student (rows, log order) and topic (columns, `params`
/// key order). Topics a student never attempted get `p_init`.
pub fn bkt_features(
    responses: &ResponseLog,
    params: &BTreeMap<String, BktParams>,
) -> Result<(Array2<f64>, Vec<String>)> {
    for (_, topics) in &responses.students {
        if let Some(unknown) = topics.keys().find(|t| !params.contains_key(*t)) {
            return Err(Error::UnknownTopic(unknown.clone()));
        }
    }
    let names: Vec<String> = params.keys().cloned().collect();
    let mut out = Array2::zeros((responses.students.len(), names.len()));
    for (r, (_, topics)) in responses.students.iter().enumerate() {
        for (c, name) in names.iter().enumerate() {
            let p = &params[name];
            out[[r, c]] = match topics.get(name) {
                Some(seq) => fold_sequence(p, seq),
                None => p.p_init,
            };
        }
    }
    Ok((out, names))
}

fn log_likelihood(params: &BktParams, sequences: &[&[bool]]) -> f64 {
    let mut ll = 0.0;
    for seq in sequences {
        let mut m = params.p_init;
        for &c in seq.iter() {
            let pc = params.p_correct(m).clamp(1e-12, 1.0 - 1e-12);
            ll += if c { pc.ln() } else { (1.0 - pc).ln() };
            m = bkt_update(params, m, c);
        }
    }
    ll
}

/// Exhaustive grid search maximizing response likelihood: guess and slip over
/// 0, 0.05, ..., 0.5; init and learn over 0, 0.05, ..., 1.
pub fn fit_bkt_grid(sequences: &[&[bool]]) -> BktParams {
    let wide: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let narrow: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    let mut best: Option<(f64, BktParams)> = None;
    for &init in &wide {
        for &learn in &wide {
            for &guess in &narrow {
                for &slip in &narrow {
                    let Ok(p) = BktParams::new(init, learn, guess, slip) else {
                        continue;
                    };
                    let ll = log_likelihood(&p, sequences);
                    if best.as_ref().is_none_or(|(b, _)| ll > *b) {
                        best = Some((ll, p));
                    }
                }
            }
        }
    }
    best.map(|(_, p)| p).expect("grid contains valid parameters")
}

/// Parameter file with columns `topic,p_init,p_learn,p_guess,p_slip`.
pub fn load_bkt_params<R: Read>(reader: R) -> Result<BTreeMap<String, BktParams>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let cols = ["topic", "p_init", "p_learn", "p_guess", "p_slip"];
    let idx: Vec<usize> = cols
        .iter()
        .map(|c| {
            header
                .iter()
                .position(|h| h == c)
                .ok_or_else(|| Error::MissingColumn(c.to_string()))
        })
        .collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let mut vals = [0.0; 4];
        for (k, v) in vals.iter_mut().enumerate() {
            let cell = rec.get(idx[k + 1]).unwrap_or("").trim();
            *v = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                column: cols[k + 1].into(),
                value: cell.into(),
            })?;
        }
        let topic = rec.get(idx[0]).unwrap_or("").trim().to_string();
        out.insert(topic, BktParams::new(vals[0], vals[1], vals[2], vals[3])?);
    }
    Ok(out)
}

pub fn write_bkt_params<W: Write>(params: &BTreeMap<String, BktParams>, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let err = |e: csv::Error| Error::Csv(e.to_string());
    wtr.write_record(["topic", "p_init", "p_learn", "p_guess", "p_slip"])
        .map_err(err)?;
    for (t, p) in params {
        wtr.write_record([
            t.clone(),
            format!("{:?}", p.p_init),
            format!("{:?}", p.p_learn),
            format!("{:?}", p.p_guess),
            format!("{:?}", p.p_slip),
        ])
        .map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::Csv(e.to_string()))
}
