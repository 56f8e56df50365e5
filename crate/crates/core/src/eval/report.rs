use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Mpjpe,
    PaMpjpe,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    Oracle,
    OrdinalGt,
    OrdinalPred,
    Mean,
    Baseline,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Oracle,
        Method::OrdinalGt,
        Method::OrdinalPred,
        Method::Mean,
        Method::Baseline,
    ];
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Mpjpe => "mpjpe",
            Metric::PaMpjpe => "pa-mpjpe",
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Oracle => "oracle",
            Method::OrdinalGt => "ordinal-gt",
            Method::OrdinalPred => "ordinal-pred",
            Method::Mean => "mean",
            Method::Baseline => "baseline",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mpjpe" => Ok(Metric::Mpjpe),
            "pa-mpjpe" => Ok(Metric::PaMpjpe),
            _ => Err(Error::InvalidConfig(format!("unknown metric '{s}'"))),
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItemError {
    pub item_id: String,
    pub action: String,
    pub error_mm: f64,
}

/// Per-item errors of one method under one metric.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub method: Method,
    pub metric: Metric,
    items: Vec<ItemError>,
}

impl EvalReport {
    pub fn new(method: Method, metric: Metric) -> Self {
        EvalReport {
            method,
            metric,
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, item_id: impl Into<String>, action: impl Into<String>, error_mm: f64) -> Result<()> {
        if !(error_mm >= 0.0) || !error_mm.is_finite() {
            return Err(Error::NonFinite(format!("error value {error_mm}")));
        }
        self.items.push(ItemError {
            item_id: item_id.into(),
            action: action.into(),
            error_mm,
        });
        Ok(())
    }

    /// Items sorted by id.
    pub fn items(&self) -> Vec<&ItemError> {
        let mut v: Vec<&ItemError> = self.items.iter().collect();
        v.sort_by(|a, b| a.item_id.cmp(&b.item_id));
        v
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Mean error over items, summed in item-id order; `NaN` when empty.
    pub fn mean(&self) -> f64 {
        let items = self.items();
        items.iter().map(|i| i.error_mm).sum::<f64>() / items.len() as f64
    }

    pub fn per_action(&self) -> BTreeMap<String, f64> {
        let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for it in self.items() {
            let e = acc.entry(it.action.clone()).or_default();
            e.0 += it.error_mm;
            e.1 += 1;
        }
        acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    }
}

/// CSV with columns `item_id,action,method,metric,error_mm`.
pub fn write_reports_csv<W: Write>(reports: &[EvalReport], mut w: W) -> Result<()> {
    writeln!(w, "item_id,action,method,metric,error_mm")?;
    for r in reports {
        for it in r.items() {
            writeln!(w, "{},{},{},{},{}", it.item_id, it.action, r.method, r.metric, it.error_mm)?;
        }
    }
    Ok(())
}

/// A fixed-width table: one row per (method, metric), one column per
/// action plus the overall average.
pub fn format_table(reports: &[EvalReport]) -> String {
    let mut actions: Vec<String> = reports
        .iter()
        .flat_map(|r| r.per_action().into_keys())
        .collect();
    actions.sort();
    actions.dedup();
    let width = actions.iter().map(String::len).max().unwrap_or(0).max(8);
    let mut out = format!("{:<24}", "method");
    for a in &actions {
        out += &format!(" {a:>width$}");
    }
    out += &format!(" {:>width$}\n", "avg");
    for r in reports {
        let per = r.per_action();
        out += &format!("{:<24}", format!("{} ({})", r.method, r.metric));
        for a in &actions {
            match per.get(a) {
                Some(v) => out += &format!(" {v:>width$.1}"),
                None => out += &format!(" {:>width$}", "-"),
            }
        }
        out += &format!(" {:>width$.1}\n", r.mean());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> EvalReport {
        let mut r = EvalReport::new(Method::Mean, Metric::Mpjpe);
        r.push("b", "walk", 30.0).unwrap();
        r.push("a", "walk", 10.0).unwrap();
        r.push("c", "sit", 5.0).unwrap();
        r
    }

    #[test]
    fn aggregates() {
        let r = report();
        assert!((r.mean() - 15.0).abs() < 1e-9);
        let per = r.per_action();
        assert_eq!(per["walk"], 20.0);
        assert_eq!(per["sit"], 5.0);
        assert_eq!(r.items()[0].item_id, "a");
        let mut bad = EvalReport::new(Method::Oracle, Metric::PaMpjpe);
        assert!(bad.push("x", "y", -1.0).is_err());
        assert!(bad.push("x", "y", f64::NAN).is_err());
    }

    #[test]
    fn csv_and_table() {
        let mut buf = Vec::new();
        write_reports_csv(&[report()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "item_id,action,method,metric,error_mm\na,walk,mean,mpjpe,10\nb,walk,mean,mpjpe,30\nc,sit,mean,mpjpe,5\n"
        );
        let t = format_table(&[report()]);
        assert!(t.lines().next().unwrap().contains("sit"));
        assert!(t.contains("mean (mpjpe)"));
        assert!(t.contains("15.0"));
    }

    #[test]
    fn tags_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        for m in [Metric::Mpjpe, Metric::PaMpjpe] {
            assert_eq!(m.to_string().parse::<Metric>().unwrap(), m);
        }
        assert!("nope".parse::<Method>().is_err());
    }
}
