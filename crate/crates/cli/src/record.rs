//! Output records and their JSONL / CSV encodings.

use serde::Serialize;

use quartic_cm::engine::{PrimeOutcome, Status};

#[derive(Clone, Debug, Serialize)]
pub struct OutputRecord {
    pub p: u64,
    pub status: Status,
    pub a_p: Option<i64>,
    pub trace: Option<u64>,
    #[serde(rename = "A_p")]
    pub a: Option<[[u64; 3]; 3]>,
    pub lpoly_modp: Option<[u64; 7]>,
    pub count: Option<u64>,
    pub rank: Option<usize>,
    pub p_rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_ms: Option<f64>,
}

impl From<&PrimeOutcome> for OutputRecord {
    fn from(o: &PrimeOutcome) -> Self {
        OutputRecord {
            p: o.p,
            status: o.status,
            a_p: o.a_p,
            trace: o.cm.map(|cm| cm.trace()),
            a: o.cm.map(|cm| cm.a),
            lpoly_modp: o.cm.map(|cm| cm.lpoly_modp()),
            count: o.count,
            rank: o.cm.map(|cm| cm.rank()),
            p_rank: o.cm.map(|cm| cm.p_rank()),
            note: o.note.clone(),
            verified: None,
            time_ms: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
}

pub const CSV_HEADER: &str = "p,status,a_p,trace,count,a11,a12,a13,a21,a22,a23,a31,a32,a33,\
l0,l1,l2,l3,l4,l5,l6,p_rank,time_ms";

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl OutputRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn to_csv(&self) -> String {
        let mut cols = vec![
            self.p.to_string(),
            self.status.as_str().to_string(),
            opt(self.a_p),
            opt(self.trace),
            opt(self.count),
        ];
        match self.a {
            Some(a) => cols.extend(a.iter().flatten().map(|x| x.to_string())),
            None => cols.extend(std::iter::repeat_n(String::new(), 9)),
        }
        match self.lpoly_modp {
            Some(l) => cols.extend(l.iter().map(|x| x.to_string())),
            None => cols.extend(std::iter::repeat_n(String::new(), 7)),
        }
        cols.push(opt(self.p_rank));
        cols.push(self.time_ms.map(|t| format!("{t:.3}")).unwrap_or_default());
        cols.join(",")
    }

    pub fn encode(&self, format: Format) -> String {
        match format {
            Format::Jsonl => self.to_json(),
            Format::Csv => self.to_csv(),
        }
    }
}
